//! Characteristic formulas: `[s]` pins a state's valuation, `[π]_i` pins the
//! first `i` states and events of a path.

use crate::lks::{Lasso, LksError, PropId, StateId, TypedLks};
use crate::seltl::{BoundAtom, BoundFormula, Formula};

/// Conjunction of every proposition, positive if it labels `s` and negated
/// otherwise, in proposition-id order.
pub fn encode_state(lks: &TypedLks, s: StateId) -> Result<BoundFormula, LksError> {
    if s.index() >= lks.num_states() {
        return Err(LksError::UnknownState(s.0));
    }
    Ok(Formula::conj((0..lks.num_props()).map(|p| {
        let lit = Formula::Atom(BoundAtom::Prop(PropId::from(p)));
        if lks.holds(s, PropId::from(p)) {
            lit
        } else {
            Formula::not(lit)
        }
    })))
}

/// `X^i f`.
pub fn nest_next<A>(f: Formula<A>, i: usize) -> Formula<A> {
    (0..i).fold(f, |acc, _| Formula::next(acc))
}

/// `([s0] ∧ a0) ∧ X([s1] ∧ a1) ∧ … ∧ X^{i-1}([s_{i-1}] ∧ a_{i-1})`; `true`
/// for `i = 0`. Positions past the stored lasso follow the loop.
pub fn encode_prefix(lks: &TypedLks, pi: &Lasso, i: usize) -> BoundFormula {
    Formula::conj((0..i).map(|k| {
        let (s, a) = pi.unroll(k);
        let step = Formula::and(
            encode_state(lks, s).expect("lasso states belong to the model"),
            Formula::Atom(BoundAtom::Event(a)),
        );
        nest_next(step, k)
    }))
}
