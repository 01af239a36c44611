//! The model-checking function: the first lasso, within a length bound,
//! that refutes a formula.
//!
//! Lassos are ordered by total length, then by depth-first order: initial
//! state id, a later loop start before an earlier one, then successor
//! `(state id, event id)`. Both [`find_counterexample`] and [`oracle_find`]
//! return the first refuting lasso in this order.

mod buchi;
mod oracle;
mod search;

use std::time::Instant;

use thiserror::Error;

use fixedbitset::FixedBitSet;

use crate::lks::{Lasso, StateId, TypedLks, ValidationReport};
use crate::seltl::{nnf, BoundFormula, Formula};

pub use buchi::{ltl_to_buchi, Buchi, BuchiState, LetterGuard, Transition};
pub use oracle::{oracle_find, DEFAULT_ORACLE_CAP};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub query_ms: f64,
    pub states_visited: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CheckResult {
    /// No lasso of length at most the bound refutes the formula.
    Valid(usize),
    CounterExample(Lasso, Stats),
}

impl CheckResult {
    pub fn counterexample(&self) -> Option<&Lasso> {
        match self {
            CheckResult::Valid(_) => None,
            CheckResult::CounterExample(l, _) => Some(l),
        }
    }

    pub fn into_counterexample(self) -> Option<Lasso> {
        match self {
            CheckResult::Valid(_) => None,
            CheckResult::CounterExample(l, _) => Some(l),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum CheckError {
    #[error("the bound must be at least 1")]
    ZeroBound,
    #[error("malformed model: {0}")]
    Malformed(ValidationReport),
    #[error("oracle gave up after enumerating {0} lassos")]
    CapExceeded(u64),
}

/// Searches for the first lasso of length at most `bound` refuting `phi`.
pub fn find_counterexample(
    lks: &TypedLks,
    phi: &BoundFormula,
    bound: usize,
) -> Result<CheckResult, CheckError> {
    if bound == 0 {
        return Err(CheckError::ZeroBound);
    }
    let report = lks.validate();
    if !report.is_empty() {
        return Err(CheckError::Malformed(report));
    }
    Ok(query(lks, phi, bound))
}

/// [`find_counterexample`] without the argument checks, for callers that
/// have validated the model once up front. `bound` must be positive.
pub fn query(lks: &TypedLks, phi: &BoundFormula, bound: usize) -> CheckResult {
    let start = Instant::now();
    let ba = refutation_automaton(phi);
    with_stats(lks, &ba, bound, start)
}

/// Automaton accepting exactly the letter words that refute `phi`.
pub fn refutation_automaton(phi: &BoundFormula) -> Buchi {
    ltl_to_buchi(&nnf(&Formula::not(phi.clone())))
}

/// First lasso of length at most `bound` whose letter word `ba` accepts,
/// in the same order as [`find_counterexample`].
pub fn query_automaton(lks: &TypedLks, ba: &Buchi, bound: usize) -> CheckResult {
    with_stats(lks, ba, bound, Instant::now())
}

/// Pairs of model and automaton states from which acceptance is still
/// possible; lets repeated queries on one automaton skip dead branches.
#[derive(Clone, Debug)]
pub struct Liveness(FixedBitSet);

impl Liveness {
    pub fn new(lks: &TypedLks, ba: &Buchi) -> Self {
        Liveness(search::live_product(lks, ba))
    }

    /// Whether some lasso of the model is accepted, at any length.
    pub fn any(&self) -> bool {
        !self.0.is_clear()
    }
}

/// First lasso of length at most `bound` accepted by `refuter` whose
/// letter at each position `k < guards.len()` satisfies `guards[k]`.
/// Returns early when no path of the model satisfies the guards. `live`
/// must have been computed for `lks` and `refuter`.
pub fn query_constrained(
    lks: &TypedLks,
    refuter: &Buchi,
    live: Option<&Liveness>,
    guards: &[LetterGuard],
    bound: usize,
) -> CheckResult {
    let start = Instant::now();
    let (ba, ids) = refuter.with_guards(guards);
    let mut frontier = FixedBitSet::with_capacity(lks.num_states());
    for &s in lks.initial() {
        frontier.insert(s.index());
    }
    for &g in &ids {
        let mut next = FixedBitSet::with_capacity(lks.num_states());
        for s in frontier.ones().map(StateId::from) {
            for edge in lks.edges(s) {
                if edge.events.iter().any(|&e| ba.guard_holds(g, lks, s, e)) {
                    next.insert(edge.target.index());
                }
            }
        }
        if next.is_clear() {
            return CheckResult::Valid(bound);
        }
        frontier = next;
    }
    let mut s = search::Search::with_guards(lks, &ba, ids);
    if let Some(l) = live {
        s = s.with_liveness(&l.0);
    }
    finish(s, bound, start)
}

fn with_stats(lks: &TypedLks, ba: &Buchi, bound: usize, start: Instant) -> CheckResult {
    finish(search::Search::new(lks, ba), bound, start)
}

fn finish(mut s: search::Search<'_>, bound: usize, start: Instant) -> CheckResult {
    let found = s.run(bound);
    let stats = Stats {
        query_ms: start.elapsed().as_secs_f64() * 1e3,
        states_visited: s.visited,
    };
    match found {
        Some(lasso) => CheckResult::CounterExample(lasso, stats),
        None => CheckResult::Valid(bound),
    }
}
