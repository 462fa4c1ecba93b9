//! JSON formats for instances, allocation sequences and fractional shares.
//!
//! Rational numbers travel as strings.  Input accepts `p/q`, plain
//! integers, and exact decimals (`-0.25`); output is always canonical:
//! lowest terms, positive denominator, `p` when integral and `p/q`
//! otherwise.  Reading a file the tool wrote returns the same data.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use repfair::variable_k::{FractionalAllocation, VariableKSolution};
use repfair::{parse_rational, render_rational, Allocation, Error, Instance, Sequence};
use serde::{Deserialize, Serialize};

/// On-disk utility profile: named agents and items plus a row-per-agent
/// matrix of rational utilities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub agents: Vec<String>,
    pub items: Vec<String>,
    pub utilities: Vec<Vec<String>>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        InstanceFile {
            agents: inst.agents().to_vec(),
            items: inst.items().to_vec(),
            utilities: (0..inst.n())
                .map(|i| {
                    (0..inst.m())
                        .map(|o| render_rational(inst.utility(i, o)))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_instance(&self) -> Result<Instance, Error> {
        let mut rows = Vec::with_capacity(self.utilities.len());
        for row in &self.utilities {
            rows.push(
                row.iter()
                    .map(|cell| parse_rational(cell))
                    .collect::<Result<Vec<_>, Error>>()?,
            );
        }
        Instance::new(self.agents.clone(), self.items.clone(), rows)
    }
}

/// On-disk allocation sequence: one map per round from agent id to the
/// item ids that agent receives.  Every item of the instance must appear
/// exactly once per round; agents may be omitted when empty-handed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFile {
    pub rounds: Vec<BTreeMap<String, Vec<String>>>,
}

impl SequenceFile {
    pub fn from_sequence(inst: &Instance, seq: &Sequence) -> Self {
        SequenceFile {
            rounds: seq
                .rounds()
                .iter()
                .map(|alloc| round_map(inst, alloc))
                .collect(),
        }
    }

    pub fn to_sequence(&self, inst: &Instance) -> Result<Sequence, Error> {
        let mut rounds = Vec::with_capacity(self.rounds.len());
        for round in &self.rounds {
            let mut bundles = vec![Vec::new(); inst.n()];
            for (agent, items) in round {
                let a = inst.agent_index(agent)?;
                for item in items {
                    bundles[a].push(inst.item_index(item)?);
                }
            }
            rounds.push(Allocation::from_bundles(inst.n(), inst.m(), &bundles)?);
        }
        Sequence::new(rounds)
    }
}

/// Renders one round as a map from agent id to held item ids.  Every
/// agent appears, even with an empty bundle, so rounds read uniformly.
pub fn round_map(inst: &Instance, alloc: &Allocation) -> BTreeMap<String, Vec<String>> {
    (0..inst.n())
        .map(|i| {
            let bundle = alloc
                .bundle(i)
                .into_iter()
                .map(|o| inst.items()[o].clone())
                .collect();
            (inst.agents()[i].clone(), bundle)
        })
        .collect()
}

/// On-disk fractional allocation: a row per agent of item shares, in the
/// instance's item order.  Columns must sum to one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractionalFile {
    pub shares: Vec<Vec<String>>,
}

impl FractionalFile {
    pub fn from_allocation(x: &FractionalAllocation) -> Self {
        FractionalFile {
            shares: (0..x.n())
                .map(|i| x.share_row(i).iter().map(render_rational).collect())
                .collect(),
        }
    }

    pub fn to_allocation(&self) -> Result<FractionalAllocation, Error> {
        let mut rows = Vec::with_capacity(self.shares.len());
        for row in &self.shares {
            rows.push(
                row.iter()
                    .map(|cell| parse_rational(cell))
                    .collect::<Result<Vec<_>, Error>>()?,
            );
        }
        FractionalAllocation::new(rows)
    }
}

/// One outcome of a lottery over whole allocations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeFile {
    pub probability: String,
    pub allocation: BTreeMap<String, Vec<String>>,
}

/// Full record of a variable-horizon solution: the fractional target, the
/// lottery of whole allocations implementing it, and the deterministic
/// sequence replaying the lottery over a common denominator of rounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionFile {
    pub fractional: FractionalFile,
    pub lottery: Vec<OutcomeFile>,
    pub sequence: SequenceFile,
}

impl DecompositionFile {
    pub fn from_solution(inst: &Instance, sol: &VariableKSolution) -> Self {
        DecompositionFile {
            fractional: FractionalFile::from_allocation(&sol.fractional),
            lottery: sol
                .lottery
                .outcomes()
                .iter()
                .map(|(alloc, p)| OutcomeFile {
                    probability: render_rational(p),
                    allocation: round_map(inst, alloc),
                })
                .collect(),
            sequence: SequenceFile::from_sequence(inst, &sol.sequence),
        }
    }
}

/// Reads and deserializes a JSON file, wrapping failures in a readable
/// message carrying the path.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Serializes a value as pretty JSON with a trailing newline.
pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("file formats always serialize");
    text.push('\n');
    text
}
