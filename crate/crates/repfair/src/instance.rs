//! Instances: agents, items, and exact additive utilities.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::Error;
use crate::rational::{rat_u, Rational};

/// A fair-division instance: `n` agents, `m` items, and an `n x m` matrix of
/// exact utilities.  Utilities are additive over bundles and may be positive
/// (goods), negative (chores), zero, or any mix per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    agents: Vec<String>,
    items: Vec<String>,
    utilities: Vec<Vec<Rational>>,
}

/// How all agents jointly see one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemClass {
    /// Every agent values it strictly positively.
    ObjectiveGood,
    /// Every agent values it strictly negatively.
    ObjectiveChore,
    /// Every agent values it at exactly zero.
    ObjectiveNull,
    /// Signs disagree: a good for some, a chore or null for others.
    Subjective,
}

impl fmt::Display for ItemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ItemClass::ObjectiveGood => "objective good",
            ItemClass::ObjectiveChore => "objective chore",
            ItemClass::ObjectiveNull => "objective null",
            ItemClass::Subjective => "subjective",
        };
        f.write_str(name)
    }
}

impl Instance {
    /// Builds an instance, checking id uniqueness and matrix shape.
    pub fn new(
        agents: Vec<String>,
        items: Vec<String>,
        utilities: Vec<Vec<Rational>>,
    ) -> Result<Self, Error> {
        if agents.is_empty() {
            return Err(Error::ShapeMismatch {
                rows: 0,
                cols: items.len(),
            });
        }
        for (pos, id) in agents.iter().enumerate() {
            if agents[..pos].contains(id) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for (pos, id) in items.iter().enumerate() {
            if items[..pos].contains(id) || agents.contains(id) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        let shape_err = Error::ShapeMismatch {
            rows: agents.len(),
            cols: items.len(),
        };
        if utilities.len() != agents.len() {
            return Err(shape_err);
        }
        if utilities.iter().any(|row| row.len() != items.len()) {
            return Err(shape_err);
        }
        Ok(Instance {
            agents,
            items,
            utilities,
        })
    }

    /// Builds an instance with generated ids `a1..an` / `o1..om` from raw
    /// utility rows.  Convenient for programmatic construction.
    pub fn from_rows(utilities: Vec<Vec<Rational>>) -> Result<Self, Error> {
        let n = utilities.len();
        let m = utilities.first().map_or(0, Vec::len);
        let agents = (1..=n).map(|i| format!("a{i}")).collect();
        let items = (1..=m).map(|o| format!("o{o}")).collect();
        Instance::new(agents, items, utilities)
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn m(&self) -> usize {
        self.items.len()
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn agent_index(&self, id: &str) -> Result<usize, Error> {
        self.agents
            .iter()
            .position(|a| a == id)
            .ok_or_else(|| Error::UnknownAgent(id.to_string()))
    }

    pub fn item_index(&self, id: &str) -> Result<usize, Error> {
        self.items
            .iter()
            .position(|o| o == id)
            .ok_or_else(|| Error::UnknownItem(id.to_string()))
    }

    /// `u_i(o)` by position.
    pub fn utility(&self, agent: usize, item: usize) -> &Rational {
        &self.utilities[agent][item]
    }

    /// `u_i(I)`: the agent's utility for the whole item set.
    pub fn total_utility(&self, agent: usize) -> Rational {
        self.utilities[agent].iter().sum()
    }

    /// The proportional share over `k` rounds: `(k/n) * u_i(I)`.
    pub fn share(&self, agent: usize, k: u64) -> Rational {
        self.total_utility(agent) * rat_u(k) / rat_u(self.n() as u64)
    }

    /// Classifies one item by the signs of its utility column.
    pub fn class_of(&self, item: usize) -> ItemClass {
        let col = self.utilities.iter().map(|row| &row[item]);
        let mut any_positive = false;
        let mut any_negative = false;
        for u in col {
            if u.is_positive() {
                any_positive = true;
            } else if u.is_negative() {
                any_negative = true;
            }
        }
        match (any_positive, any_negative) {
            (true, false) => {
                if self.utilities.iter().all(|row| row[item].is_positive()) {
                    ItemClass::ObjectiveGood
                } else {
                    ItemClass::Subjective
                }
            }
            (false, true) => {
                if self.utilities.iter().all(|row| row[item].is_negative()) {
                    ItemClass::ObjectiveChore
                } else {
                    ItemClass::Subjective
                }
            }
            (false, false) => ItemClass::ObjectiveNull,
            (true, true) => ItemClass::Subjective,
        }
    }
}

/// Classifies an item by id.
pub fn classify_item(inst: &Instance, item: &str) -> Result<ItemClass, Error> {
    Ok(inst.class_of(inst.item_index(item)?))
}

/// Utility of a bundle given as item ids; repeated ids count as copies, as
/// arise in overall allocations across rounds.
pub fn bundle_utility(inst: &Instance, agent: &str, bundle: &[&str]) -> Result<Rational, Error> {
    let i = inst.agent_index(agent)?;
    let mut total = Rational::zero();
    for id in bundle {
        let o = inst.item_index(id)?;
        total += inst.utility(i, o);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn two_by_two() -> Instance {
        // Agent 1 values the items (4, 5); agent 2 values them (3, 9).
        Instance::from_rows(vec![
            vec![rat_int(4), rat_int(5)],
            vec![rat_int(3), rat_int(9)],
        ])
        .unwrap()
    }

    #[test]
    fn rejects_duplicate_ids_and_bad_shapes() {
        let err = Instance::new(
            vec!["a".into(), "a".into()],
            vec!["o".into()],
            vec![vec![rat_int(1)], vec![rat_int(1)]],
        );
        assert_eq!(err.unwrap_err(), Error::DuplicateId("a".into()));

        let err = Instance::new(
            vec!["a".into()],
            vec!["o".into(), "p".into()],
            vec![vec![rat_int(1)]],
        );
        assert!(matches!(err.unwrap_err(), Error::ShapeMismatch { .. }));
    }

    #[test]
    fn classification_covers_all_sign_patterns() {
        let inst = Instance::from_rows(vec![
            vec![rat_int(2), rat_int(-1), rat_int(0), rat_int(3), rat_int(0)],
            vec![rat_int(1), rat_int(-4), rat_int(0), rat_int(-2), rat_int(5)],
        ])
        .unwrap();
        assert_eq!(inst.class_of(0), ItemClass::ObjectiveGood);
        assert_eq!(inst.class_of(1), ItemClass::ObjectiveChore);
        assert_eq!(inst.class_of(2), ItemClass::ObjectiveNull);
        assert_eq!(inst.class_of(3), ItemClass::Subjective);
        // Zero for one agent, positive for the other: not objective.
        assert_eq!(inst.class_of(4), ItemClass::Subjective);
        assert_eq!(
            classify_item(&inst, "o2").unwrap(),
            ItemClass::ObjectiveChore
        );
        assert!(classify_item(&inst, "nope").is_err());
    }

    #[test]
    fn bundle_utility_is_additive_over_copies() {
        let inst = two_by_two();
        assert_eq!(
            bundle_utility(&inst, "a1", &["o1", "o2"]).unwrap(),
            rat_int(9)
        );
        // Three copies of o2 for agent 2, as in an overall bundle.
        assert_eq!(
            bundle_utility(&inst, "a2", &["o2", "o2", "o2"]).unwrap(),
            rat_int(27)
        );
        assert_eq!(bundle_utility(&inst, "a1", &[]).unwrap(), rat_int(0));
        assert!(bundle_utility(&inst, "a9", &["o1"]).is_err());
        assert!(bundle_utility(&inst, "a1", &["ox"]).is_err());
    }

    #[test]
    fn shares_scale_with_rounds() {
        let inst = two_by_two();
        assert_eq!(inst.share(0, 2), rat_int(9));
        assert_eq!(inst.share(1, 3), rat_int(18));
        assert_eq!(inst.share(0, 1), rat(9, 2));
    }
}
