//! Random models, formulas and lassos, brute-force oracles and the invariant
//! checks shared by the property tests and the acceptance suite.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use selx::encode::encode_prefix;
use selx::explorer::{init_session, ExploreError, Init, Mode, Op, Session};
use selx::lks::{EventId, Lasso, LksBuilder, PropId, StateId, TypedLks};
use selx::seltl::{eval_lasso, BoundAtom, BoundFormula, Formula};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Size limits of a random model.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_states: usize,
    pub max_events: usize,
    pub max_types: usize,
    pub max_out: usize,
}

pub const SMALL: Shape = Shape {
    max_states: 6,
    max_events: 4,
    max_types: 2,
    max_out: 3,
};

/// A well-formed random model. States carry pairwise distinct labels over
/// three propositions, every type has at least one event and every state
/// has between one and `max_out` outgoing transitions.
pub fn random_lks(rng: &mut impl Rng, shape: Shape) -> TypedLks {
    let mut b = LksBuilder::new();
    let props: Vec<PropId> = (0..3).map(|p| b.prop(format!("p{p}"))).collect();
    let n_types = rng.gen_range(1..=shape.max_types);
    let types: Vec<_> = (0..n_types)
        .map(|t| b.event_type(format!("T{t}")))
        .collect();
    let n_events = rng.gen_range(n_types..=shape.max_events.max(n_types));
    let events: Vec<EventId> = (0..n_events)
        .map(|e| {
            let ty = if e < n_types {
                types[e]
            } else {
                *types.choose(rng).unwrap()
            };
            b.event(format!("T{}", ty.index()), vec![format!("e{e}")], ty)
        })
        .collect();
    let n_states = rng.gen_range(1..=shape.max_states);
    let mut valuations: Vec<u8> = (0..8).collect();
    valuations.shuffle(rng);
    let states: Vec<StateId> = valuations[..n_states]
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let label: Vec<PropId> = (0..3)
                .filter(|p| v >> p & 1 == 1)
                .map(|p| props[p])
                .collect();
            b.state(format!("s{i}"), &label)
        })
        .collect();
    let n_init = rng.gen_range(1..=n_states.min(2));
    let mut init = states.clone();
    init.shuffle(rng);
    init.truncate(n_init);
    init.sort();
    for s in init {
        b.initial(s);
    }
    for &s in &states {
        let mut out = BTreeSet::new();
        let k = rng.gen_range(1..=shape.max_out);
        while out.len() < k {
            out.insert((*events.choose(rng).unwrap(), *states.choose(rng).unwrap()));
            if out.len() == events.len() * states.len() {
                break;
            }
        }
        for (e, t) in out {
            b.transition(s, e, t);
        }
    }
    b.build().expect("generated model is well-formed")
}

/// A random formula of depth at most `depth` over the model's atoms.
pub fn random_formula(rng: &mut impl Rng, lks: &TypedLks, depth: usize) -> BoundFormula {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..10) {
            0 => Formula::True,
            1..=5 => Formula::Atom(BoundAtom::Prop(PropId::from(
                rng.gen_range(0..lks.num_props()),
            ))),
            6 | 7 => Formula::Atom(BoundAtom::Event(EventId::from(
                rng.gen_range(0..lks.num_events()),
            ))),
            _ => Formula::Atom(BoundAtom::Type(selx::lks::TypeId::from(
                rng.gen_range(0..lks.num_types()),
            ))),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..9) {
        0 => Formula::not(random_formula(rng, lks, d)),
        1 => Formula::and(random_formula(rng, lks, d), random_formula(rng, lks, d)),
        2 => Formula::or(random_formula(rng, lks, d), random_formula(rng, lks, d)),
        3 => Formula::implies(random_formula(rng, lks, d), random_formula(rng, lks, d)),
        4 => Formula::next(random_formula(rng, lks, d)),
        5 => Formula::globally(random_formula(rng, lks, d)),
        6 => Formula::finally(random_formula(rng, lks, d)),
        _ => Formula::until(random_formula(rng, lks, d), random_formula(rng, lks, d)),
    }
}

/// A random propositional formula: atoms under negation, conjunction and
/// disjunction.
pub fn random_propositional(rng: &mut impl Rng, lks: &TypedLks, depth: usize) -> BoundFormula {
    loop {
        let f = random_formula(rng, lks, depth);
        if selx::seltl::nnf(&f).is_propositional() {
            return f;
        }
    }
}

/// Every lasso of the model with at most `bound` stored positions.
pub fn all_lassos(lks: &TypedLks, bound: usize) -> Vec<Lasso> {
    fn walk(
        lks: &TypedLks,
        bound: usize,
        states: &mut Vec<StateId>,
        events: &mut Vec<EventId>,
        out: &mut Vec<Lasso>,
    ) {
        let s = *states.last().unwrap();
        for edge in lks.edges(s) {
            for &e in edge.events.iter() {
                events.push(e);
                for (l, &t) in states.iter().enumerate() {
                    if t == edge.target {
                        out.push(Lasso {
                            states: states.clone(),
                            events: events.clone(),
                            loop_start: l,
                        });
                    }
                }
                if states.len() < bound {
                    states.push(edge.target);
                    walk(lks, bound, states, events, out);
                    states.pop();
                }
                events.pop();
            }
        }
    }
    let mut out = Vec::new();
    for &s in lks.initial() {
        walk(lks, bound, &mut vec![s], &mut Vec::new(), &mut out);
    }
    out
}

/// Lassos of at most `bound` positions refuting `phi`.
pub fn counterexamples(lks: &TypedLks, phi: &BoundFormula, bound: usize) -> Vec<Lasso> {
    all_lassos(lks, bound)
        .into_iter()
        .filter(|l| !eval_lasso(phi, lks, l))
        .collect()
}

/// Whether `l` agrees with `pi` on the states and events of positions
/// `0..i` of their unrollings.
pub fn extends(l: &Lasso, pi: &Lasso, i: usize) -> bool {
    (0..i).all(|k| l.unroll(k) == pi.unroll(k))
}

/// A random lasso of at most `bound` positions, or of at most one position
/// per state when no shorter lasso exists.
pub fn random_lasso(rng: &mut impl Rng, lks: &TypedLks, bound: usize) -> Lasso {
    let mut all = all_lassos(lks, bound);
    if all.is_empty() {
        all = all_lassos(lks, lks.num_states());
    }
    all.choose(rng)
        .expect("every well-formed model has a lasso")
        .clone()
}

pub fn start(lks: TypedLks, phi: BoundFormula, bound: usize, mode: Mode) -> Option<Session> {
    match init_session(Arc::new(lks), phi, bound, mode).expect("valid arguments") {
        Init::Session(s) => Some(*s),
        Init::PropertyHolds(_) => None,
    }
}

/// A session over a random small model on a random formula that has a
/// counter-example, drawing again from `rng` until one does.
pub fn random_session(rng: &mut impl Rng, bound: usize) -> Session {
    loop {
        let lks = random_lks(rng, SMALL);
        let depth = rng.gen_range(1..=3);
        let phi = random_formula(rng, &lks, depth);
        let mode = if rng.gen_bool(0.2) {
            Mode::Witness
        } else {
            Mode::CounterExample
        };
        if let Some(s) = start(lks, phi, bound, mode) {
            return s;
        }
    }
}

pub fn random_op(rng: &mut impl Rng, session: &Session) -> Op {
    match rng.gen_range(0..6) {
        0 => Op::Forward,
        1 => Op::Backward,
        2 => Op::AltState,
        3 => Op::AltEvent,
        _ => {
            let names = session.lks().type_names();
            Op::SetType(names[rng.gen_range(0..names.len())].clone())
        }
    }
}

/// The exploration state proper: trace, focus and restrictions.
fn snapshot(s: &Session) -> (Lasso, usize, selx::explorer::RestrictionMap) {
    (s.lasso().clone(), s.focus(), s.restrictions().clone())
}

/// Which invariant a failed check broke.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Invariant {
    PrefixPreservation,
    TypePreservation,
    NavigationNeutrality,
    SessionSoundness,
    AltStateCompleteness,
}

#[derive(Debug)]
pub struct Violation {
    pub invariant: Invariant,
    pub detail: String,
}

fn fail(invariant: Invariant, detail: impl Into<String>) -> Result<(), Violation> {
    Err(Violation {
        invariant,
        detail: detail.into(),
    })
}

/// Applies `op` and checks every per-operation invariant.
pub fn apply_checked(session: &mut Session, op: &Op) -> Result<(), Violation> {
    let lks = session.lks().clone();
    let before = snapshot(session);
    let i = session.focus();
    let (old_s, old_a) = session.lasso().unroll(i);
    let result = session.apply(op);
    match (&result, op) {
        (Err(ExploreError::Boundary), Op::Backward) if i == 0 => {}
        (Err(ExploreError::NoAlternative), Op::AltState | Op::AltEvent | Op::SetType(_)) => {}
        (Err(e), _) => return fail(Invariant::SessionSoundness, format!("{op:?} failed: {e}")),
        (Ok(()), _) => {}
    }
    if result.is_err() && snapshot(session) != before {
        return fail(
            Invariant::SessionSoundness,
            format!("failed {op:?} changed the session"),
        );
    }
    let pi = session.lasso().clone();
    if let Err(e) = pi.check(&lks) {
        return fail(
            Invariant::SessionSoundness,
            format!("{op:?} produced an invalid lasso: {e}"),
        );
    }
    if eval_lasso(session.property(), &lks, &pi) {
        return fail(
            Invariant::SessionSoundness,
            format!("{op:?} produced a trace satisfying the property"),
        );
    }
    if result.is_err() {
        return Ok(());
    }
    match op {
        Op::Forward => {
            let mut probe = session.clone();
            probe.step_backward().map_err(|e| Violation {
                invariant: Invariant::NavigationNeutrality,
                detail: e.to_string(),
            })?;
            if snapshot(&probe) != before {
                return fail(
                    Invariant::NavigationNeutrality,
                    "forward then backward moved the session",
                );
            }
        }
        Op::Backward => {
            if session.lasso() != &before.0
                || session.restrictions() != &before.2
                || session.focus() + 1 != i
            {
                return fail(
                    Invariant::NavigationNeutrality,
                    "backward changed more than the focus",
                );
            }
        }
        Op::AltState | Op::AltEvent | Op::SetType(_) => {
            if !eval_lasso(&encode_prefix(&lks, &before.0, i), &lks, &pi) {
                return fail(
                    Invariant::PrefixPreservation,
                    format!("{op:?} at {i} broke the prefix"),
                );
            }
            let (s, a) = pi.unroll(i);
            match op {
                Op::AltState if lks.label(s) == lks.label(old_s) => {
                    return fail(
                        Invariant::PrefixPreservation,
                        "alt-state kept the focused state",
                    );
                }
                Op::AltEvent
                    if s != old_s || a == old_a || lks.type_of(a) != lks.type_of(old_a) =>
                {
                    return fail(
                        Invariant::TypePreservation,
                        format!(
                            "alt-event at {i}: {:?}/{:?} became {:?}/{:?}",
                            old_s, old_a, s, a
                        ),
                    );
                }
                Op::SetType(t) if s != old_s || lks.type_name(lks.type_of(a)) != t => {
                    return fail(
                        Invariant::TypePreservation,
                        format!("set-type {t} at {i} gave {a:?}"),
                    );
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Iterates `▷` at the focus until it is exhausted and compares the states
/// reached with the focused state plus every state some counter-example
/// puts there after the same prefix with a letter allowed by `Φ(i)`.
pub fn check_alt_state_completeness(session: &Session) -> Result<(), Violation> {
    let lks = session.lks().clone();
    let i = session.focus();
    let pi = session.lasso().clone();
    let restriction = selx::encode::nest_next(session.restrictions().get(i), i);
    let mut expected: BTreeSet<StateId> =
        counterexamples(&lks, session.property(), session.bound())
            .iter()
            .filter(|l| extends(l, &pi, i) && eval_lasso(&restriction, &lks, l))
            .map(|l| l.state_at(i))
            .collect();
    expected.insert(pi.state_at(i));
    let mut s = session.clone();
    let mut reached = BTreeSet::from([pi.state_at(i)]);
    loop {
        match s.alt_state() {
            Ok(()) => {
                if !reached.insert(s.lasso().state_at(i)) {
                    return fail(
                        Invariant::AltStateCompleteness,
                        "alt-state revisited a state",
                    );
                }
            }
            Err(ExploreError::NoAlternative) => break,
            Err(e) => return fail(Invariant::AltStateCompleteness, e.to_string()),
        }
    }
    if reached != expected {
        return fail(
            Invariant::AltStateCompleteness,
            format!("at {i}: reached {reached:?}, brute force {expected:?}"),
        );
    }
    Ok(())
}

/// Compares the dry run at the focus with the types brute force finds on
/// counter-examples extending the prefix and the focused state.
pub fn check_enabled(session: &Session, cexs: &[Lasso]) -> Result<(), String> {
    let lks = session.lks();
    let i = session.focus();
    let pi = session.lasso();
    let s = pi.state_at(i);
    let expected: BTreeSet<usize> = cexs
        .iter()
        .filter(|l| extends(l, pi, i) && l.state_at(i) == s)
        .map(|l| lks.type_of(l.event_at(i)).index())
        .collect();
    let got: BTreeSet<usize> = session
        .enabled_types()
        .into_iter()
        .filter(|r| r.enabled)
        .map(|r| r.ty.index())
        .collect();
    if got == expected {
        Ok(())
    } else {
        Err(format!("at {i}: enabled {got:?}, brute force {expected:?}"))
    }
}
