use crate::lks::{Lasso, TypedLks};

use super::{BoundAtom, BoundFormula, Formula};

/// Decides `π ⊨ f` directly from the semantics.
///
/// Every suffix of a lasso equals the suffix at one of its `len()` stored
/// positions, so each subformula is tabulated over those positions. `U`, `F`
/// and `G` are fixpoints around the loop; two backward sweeps settle them.
pub fn eval_lasso(f: &BoundFormula, lks: &TypedLks, pi: &Lasso) -> bool {
    if pi.is_empty() {
        return false;
    }
    table(f, lks, pi)[0]
}

fn table(f: &BoundFormula, lks: &TypedLks, pi: &Lasso) -> Vec<bool> {
    let n = pi.len();
    match f {
        Formula::True => vec![true; n],
        Formula::Atom(a) => (0..n)
            .map(|k| match *a {
                BoundAtom::Prop(p) => lks.holds(pi.states[k], p),
                BoundAtom::Event(e) => pi.events[k] == e,
                BoundAtom::Type(t) => lks.type_of(pi.events[k]) == t,
            })
            .collect(),
        Formula::Not(x) => table(x, lks, pi).into_iter().map(|b| !b).collect(),
        Formula::And(x, y) => {
            let a = table(x, lks, pi);
            let b = table(y, lks, pi);
            a.into_iter().zip(b).map(|(a, b)| a && b).collect()
        }
        Formula::Next(x) => {
            let a = table(x, lks, pi);
            (0..n).map(|k| a[pi.succ_position(k)]).collect()
        }
        Formula::Until(x, y) => {
            let hold = table(x, lks, pi);
            let goal = table(y, lks, pi);
            fixpoint(pi, false, |k, next| goal[k] || (hold[k] && next))
        }
        Formula::Finally(x) => {
            let goal = table(x, lks, pi);
            fixpoint(pi, false, |k, next| goal[k] || next)
        }
        Formula::Globally(x) => {
            let hold = table(x, lks, pi);
            fixpoint(pi, true, |k, next| hold[k] && next)
        }
    }
}

/// Solves `v[k] = step(k, v[succ(k)])` starting from `init` everywhere.
fn fixpoint(pi: &Lasso, init: bool, step: impl Fn(usize, bool) -> bool) -> Vec<bool> {
    let n = pi.len();
    let mut v = vec![init; n];
    for _ in 0..2 {
        for k in (0..n).rev() {
            v[k] = step(k, v[pi.succ_position(k)]);
        }
    }
    v
}
