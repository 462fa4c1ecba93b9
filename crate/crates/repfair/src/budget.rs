//! Node/time budgets for the exhaustive and branch-and-bound searches.

use std::time::Instant;

use crate::error::Error;

/// Limits for a search.  Exceeding a budget is an error distinct from a
/// negative certificate: it says the search stopped, not that nothing
/// exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    /// Maximum number of search nodes to visit.
    pub max_nodes: u64,
    /// Wall-clock limit in seconds; `u64::MAX` disables the check.
    pub max_seconds: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_nodes: 10_000_000,
            max_seconds: u64::MAX,
        }
    }
}

impl SearchBudget {
    pub fn nodes(max_nodes: u64) -> Self {
        SearchBudget {
            max_nodes,
            ..SearchBudget::default()
        }
    }

    pub(crate) fn meter(&self) -> BudgetMeter {
        BudgetMeter {
            budget: *self,
            used: 0,
            started: Instant::now(),
        }
    }
}

/// Running counter against one budget.
#[derive(Debug)]
pub(crate) struct BudgetMeter {
    budget: SearchBudget,
    used: u64,
    started: Instant,
}

impl BudgetMeter {
    /// Accounts one node; errs once the budget is exhausted.
    pub(crate) fn tick(&mut self) -> Result<(), Error> {
        self.used += 1;
        if self.used > self.budget.max_nodes {
            return Err(Error::BudgetExhausted { nodes: self.used });
        }
        // The clock check is amortised; exact node counts stay the
        // deterministic part of the contract.
        if self.budget.max_seconds != u64::MAX
            && self.used.is_multiple_of(1024)
            && self.started.elapsed().as_secs() >= self.budget.max_seconds
        {
            return Err(Error::BudgetExhausted { nodes: self.used });
        }
        Ok(())
    }
}
