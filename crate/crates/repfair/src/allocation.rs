//! Allocations, round sequences, and overall count matrices.

use num_traits::Zero;

use crate::error::Error;
use crate::instance::Instance;
use crate::rational::{rat_u, Rational};

/// A single round: every item is held by exactly one agent.
///
/// Stored as an owner vector indexed by item, which makes the exhaustive
/// partition property structural.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Allocation {
    n: usize,
    owners: Vec<usize>,
}

impl Allocation {
    /// Builds a round from an owner vector (`owners[o]` holds item `o`).
    pub fn new(n: usize, owners: Vec<usize>) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::OwnerOutOfRange { owner: 0, n });
        }
        if let Some(&owner) = owners.iter().find(|&&a| a >= n) {
            return Err(Error::OwnerOutOfRange { owner, n });
        }
        Ok(Allocation { n, owners })
    }

    /// Builds a round from per-agent bundles, checking the bundles partition
    /// the whole item set `0..m`.
    pub fn from_bundles(n: usize, m: usize, bundles: &[Vec<usize>]) -> Result<Self, Error> {
        if bundles.len() != n {
            return Err(Error::DimensionMismatch {
                kind: "agents",
                expected: n,
                got: bundles.len(),
            });
        }
        let mut owners = vec![usize::MAX; m];
        for (agent, bundle) in bundles.iter().enumerate() {
            for &item in bundle {
                if item >= m || owners[item] != usize::MAX {
                    return Err(Error::NotAPartition);
                }
                owners[item] = agent;
            }
        }
        if owners.contains(&usize::MAX) {
            return Err(Error::NotAPartition);
        }
        Allocation::new(n, owners)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.owners.len()
    }

    pub fn owner(&self, item: usize) -> usize {
        self.owners[item]
    }

    pub fn owners(&self) -> &[usize] {
        &self.owners
    }

    pub fn holds(&self, agent: usize, item: usize) -> bool {
        self.owners[item] == agent
    }

    /// The items held by one agent, in item order.
    pub fn bundle(&self, agent: usize) -> Vec<usize> {
        (0..self.m()).filter(|&o| self.owners[o] == agent).collect()
    }

    /// `u_viewer(bundle of holder)`.
    pub fn bundle_value(&self, inst: &Instance, viewer: usize, holder: usize) -> Rational {
        let mut total = Rational::zero();
        for (o, &owner) in self.owners.iter().enumerate() {
            if owner == holder {
                total += inst.utility(viewer, o);
            }
        }
        total
    }

    /// The `k = 1` count matrix of this round.
    pub fn counts(&self) -> CountMatrix {
        let mut counts = vec![vec![0u64; self.m()]; self.n];
        for (o, &owner) in self.owners.iter().enumerate() {
            counts[owner][o] = 1;
        }
        CountMatrix { rounds: 1, counts }
    }
}

/// A fixed-length sequence of rounds over one instance shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    rounds: Vec<Allocation>,
}

impl Sequence {
    pub fn new(rounds: Vec<Allocation>) -> Result<Self, Error> {
        let first = rounds.first().ok_or(Error::EmptySequence)?;
        let (n, m) = (first.n(), first.m());
        if rounds.iter().any(|r| r.n() != n || r.m() != m) {
            return Err(Error::MixedRounds);
        }
        Ok(Sequence { rounds })
    }

    pub fn k(&self) -> u64 {
        self.rounds.len() as u64
    }

    pub fn n(&self) -> usize {
        self.rounds[0].n()
    }

    pub fn m(&self) -> usize {
        self.rounds[0].m()
    }

    pub fn rounds(&self) -> &[Allocation] {
        &self.rounds
    }

    pub fn round(&self, r: usize) -> &Allocation {
        &self.rounds[r]
    }

    /// The overall count matrix across all rounds.
    pub fn overall(&self) -> CountMatrix {
        overall(self)
    }
}

/// How often each agent received each item over `rounds` rounds.  Column
/// sums all equal the round count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    rounds: u64,
    counts: Vec<Vec<u64>>,
}

impl CountMatrix {
    /// Builds a count matrix, checking every item is assigned exactly
    /// `rounds` times in total.
    pub fn new(rounds: u64, counts: Vec<Vec<u64>>) -> Result<Self, Error> {
        if rounds == 0 || counts.is_empty() {
            return Err(Error::EmptySequence);
        }
        let m = counts[0].len();
        if counts.iter().any(|row| row.len() != m) {
            return Err(Error::MixedRounds);
        }
        for item in 0..m {
            let got: u64 = counts.iter().map(|row| row[item]).sum();
            if got != rounds {
                return Err(Error::BadColumnSum {
                    item,
                    got,
                    expected: rounds,
                });
            }
        }
        Ok(CountMatrix { rounds, counts })
    }

    pub fn k(&self) -> u64 {
        self.rounds
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn m(&self) -> usize {
        self.counts[0].len()
    }

    pub fn count(&self, agent: usize, item: usize) -> u64 {
        self.counts[agent][item]
    }

    pub fn row(&self, agent: usize) -> &[u64] {
        &self.counts[agent]
    }

    /// `u_viewer` of the overall bundle sitting in `row`.
    pub fn row_value(&self, inst: &Instance, viewer: usize, row: usize) -> Rational {
        let mut total = Rational::zero();
        for (o, &c) in self.counts[row].iter().enumerate() {
            if c > 0 {
                total += inst.utility(viewer, o) * rat_u(c);
            }
        }
        total
    }

    /// All utilities `u_i(row_i)`, one per agent.
    pub fn utility_vector(&self, inst: &Instance) -> Vec<Rational> {
        (0..self.n()).map(|i| self.row_value(inst, i, i)).collect()
    }

    /// Utilitarian welfare: the sum of the diagonal utilities.
    pub fn welfare(&self, inst: &Instance) -> Rational {
        self.utility_vector(inst).into_iter().sum()
    }

    /// Row-major flattening, the canonical order for tie-breaking.
    pub fn flatten(&self) -> Vec<u64> {
        self.counts.iter().flatten().copied().collect()
    }
}

/// Accumulates a sequence into its overall count matrix.
pub fn overall(seq: &Sequence) -> CountMatrix {
    let mut counts = vec![vec![0u64; seq.m()]; seq.n()];
    for round in seq.rounds() {
        for (o, &owner) in round.owners().iter().enumerate() {
            counts[owner][o] += 1;
        }
    }
    CountMatrix {
        rounds: seq.k(),
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat_int;

    fn two_by_two() -> Instance {
        Instance::from_rows(vec![
            vec![rat_int(4), rat_int(5)],
            vec![rat_int(3), rat_int(9)],
        ])
        .unwrap()
    }

    #[test]
    fn bundles_must_partition() {
        // Item 1 missing.
        assert_eq!(
            Allocation::from_bundles(2, 2, &[vec![0], vec![]]).unwrap_err(),
            Error::NotAPartition
        );
        // Item 0 assigned twice.
        assert_eq!(
            Allocation::from_bundles(2, 2, &[vec![0, 1], vec![0]]).unwrap_err(),
            Error::NotAPartition
        );
        let a = Allocation::from_bundles(2, 2, &[vec![1], vec![0]]).unwrap();
        assert_eq!(a.owners(), &[1, 0]);
        assert_eq!(a.bundle(0), vec![1]);
    }

    #[test]
    fn overall_counts_the_four_round_example() {
        // Agent 1 takes both items in rounds 1-2, agent 2 in rounds 3-4.
        let both_to = |agent: usize| Allocation::new(2, vec![agent, agent]).unwrap();
        let seq = Sequence::new(vec![both_to(0), both_to(0), both_to(1), both_to(1)]).unwrap();
        let counts = seq.overall();
        assert_eq!(counts.k(), 4);
        assert_eq!(counts.row(0), &[2, 2]);
        assert_eq!(counts.row(1), &[2, 2]);

        let inst = two_by_two();
        assert_eq!(counts.row_value(&inst, 0, 0), rat_int(18));
        assert_eq!(counts.row_value(&inst, 1, 1), rat_int(24));
        assert_eq!(counts.utility_vector(&inst), vec![rat_int(18), rat_int(24)]);
    }

    #[test]
    fn count_matrix_validates_column_sums() {
        let err = CountMatrix::new(3, vec![vec![2, 1], vec![0, 1]]).unwrap_err();
        assert_eq!(
            err,
            Error::BadColumnSum {
                item: 0,
                got: 2,
                expected: 3
            }
        );
        let ok = CountMatrix::new(3, vec![vec![2, 1], vec![1, 2]]).unwrap();
        assert_eq!(ok.flatten(), vec![2, 1, 1, 2]);
    }

    #[test]
    fn sequences_reject_shape_mixes() {
        let r2 = Allocation::new(2, vec![0, 0]).unwrap();
        let r3 = Allocation::new(3, vec![0, 0]).unwrap();
        assert_eq!(Sequence::new(vec![]).unwrap_err(), Error::EmptySequence);
        assert_eq!(Sequence::new(vec![r2, r3]).unwrap_err(), Error::MixedRounds);
    }

    #[test]
    fn bundle_value_views_any_holder() {
        let inst = two_by_two();
        let a = Allocation::new(2, vec![0, 1]).unwrap();
        assert_eq!(a.bundle_value(&inst, 0, 0), rat_int(4));
        assert_eq!(a.bundle_value(&inst, 0, 1), rat_int(5));
        assert_eq!(a.bundle_value(&inst, 1, 0), rat_int(3));
        assert_eq!(a.bundle_value(&inst, 1, 1), rat_int(9));
    }
}
