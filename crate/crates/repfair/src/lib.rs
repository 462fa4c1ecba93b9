//! Exact solvers and axiom checkers for repeated fair division of
//! indivisible goods and chores.
//!
//! The same set of items is allocated afresh in each of `k` rounds; fairness
//! and efficiency are judged both round by round and on the overall bundles
//! accumulated across rounds.  Everything is exact: utilities are big
//! rationals, searches certify non-existence, and the LP machinery pivots
//! without rounding.

pub mod allocation;
pub mod axioms;
pub mod budget;
pub mod error;
pub mod exactlp;
pub mod instance;
mod milp;
pub mod rational;
pub mod solvers_general;
pub mod solvers_two;
pub mod variable_k;

pub use allocation::{overall, Allocation, CountMatrix, Sequence};
pub use budget::SearchBudget;
pub use error::Error;
pub use instance::{bundle_utility, classify_item, Instance, ItemClass};
pub use rational::{parse_rational, rat, rat_int, rat_u, render_rational, Rational};
