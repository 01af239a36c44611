//! Exploration of the counter-examples of a property.
//!
//! A session holds the property `φ`, the current counter-example `π`, a
//! focus index `i` and a restriction map `Φ` recording branches already
//! trimmed at each index. Every operation except navigation asks the
//! checker for the first counter-example of `φ ∨ ¬([π]_i ∧ X^i ψ)` for some
//! `ψ`, which keeps the first `i` steps of `π` and constrains step `i`.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::checker::{self, Buchi, CheckError, CheckResult, LetterGuard, Liveness};
use crate::encode::{encode_prefix, encode_state, nest_next};
use crate::lks::{Lasso, TypeId, TypedLks};
use crate::seltl::{nnf, BoundAtom, BoundFormula, Formula};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Explore paths that refute the property.
    CounterExample,
    /// Explore paths that satisfy it, as counter-examples of its negation.
    Witness,
}

/// Finite-support map from path index to formula; absent indices map to
/// `true`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RestrictionMap {
    entries: BTreeMap<usize, BoundFormula>,
}

impl RestrictionMap {
    pub fn get(&self, i: usize) -> BoundFormula {
        self.entries.get(&i).cloned().unwrap_or(Formula::True)
    }

    /// `Φ ⊕ (i ↦ f)`.
    pub fn set(&mut self, i: usize, f: BoundFormula) {
        if f == Formula::True {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, f);
        }
    }

    /// `Φ ⊕ ({i..} ↦ ⊤)`.
    pub fn reset_from(&mut self, i: usize) {
        self.entries.split_off(&i);
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &BoundFormula)> {
        self.entries.iter().map(|(&i, f)| (i, f))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `a ∧ b`, dropping a `true` operand.
fn and(a: BoundFormula, b: BoundFormula) -> BoundFormula {
    match (a, b) {
        (Formula::True, x) | (x, Formula::True) => x,
        (a, b) => Formula::and(a, b),
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ExploreError {
    #[error("already at the start of the trace")]
    Boundary,
    #[error("no alternative counter-example")]
    NoAlternative,
    #[error("unknown event type `{0}`")]
    UnknownType(String),
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// An exploration operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Op {
    Forward,
    Backward,
    AltState,
    AltEvent,
    SetType(String),
}

/// Dry-run outcome for one event type.
#[derive(Clone, Debug, PartialEq)]
pub struct EnabledType {
    pub ty: TypeId,
    pub name: String,
    pub enabled: bool,
    pub ms: f64,
}

#[derive(Clone, Debug)]
pub struct Session {
    lks: Arc<TypedLks>,
    /// The formula actually checked: the property, or its negation in
    /// witness mode.
    phi: BoundFormula,
    /// Automaton of the words refuting `phi`, shared by every query.
    refuter: Arc<Buchi>,
    /// Product states of the model and `refuter` that can still refute.
    live: Arc<Liveness>,
    pi: Lasso,
    focus: usize,
    restrictions: RestrictionMap,
    bound: usize,
    mode: Mode,
    strict_type_switch: bool,
    revision: u64,
}

#[derive(Clone, Debug)]
pub enum Init {
    Session(Box<Session>),
    /// No counter-example (or, in witness mode, no witness) within the bound.
    PropertyHolds(usize),
}

/// Starts a session on the first counter-example of `phi` (of `¬phi` in
/// witness mode).
pub fn init_session(
    lks: Arc<TypedLks>,
    phi: BoundFormula,
    bound: usize,
    mode: Mode,
) -> Result<Init, ExploreError> {
    let phi = match mode {
        Mode::CounterExample => phi,
        Mode::Witness => Formula::not(phi),
    };
    match checker::find_counterexample(&lks, &phi, bound)? {
        CheckResult::Valid(b) => Ok(Init::PropertyHolds(b)),
        CheckResult::CounterExample(pi, _) => {
            let refuter = checker::refutation_automaton(&phi);
            Ok(Init::Session(Box::new(Session {
                live: Arc::new(Liveness::new(&lks, &refuter)),
                refuter: Arc::new(refuter),
                lks,
                phi,
                pi,
                focus: 0,
                restrictions: RestrictionMap::default(),
                bound,
                mode,
                strict_type_switch: false,
                revision: 0,
            })))
        }
    }
}

impl Session {
    pub fn lks(&self) -> &Arc<TypedLks> {
        &self.lks
    }

    pub fn property(&self) -> &BoundFormula {
        &self.phi
    }

    pub fn lasso(&self) -> &Lasso {
        &self.pi
    }

    pub fn focus(&self) -> usize {
        self.focus
    }

    /// The focus folded into the stored lasso positions.
    pub fn display_focus(&self) -> usize {
        self.pi.position(self.focus)
    }

    pub fn restrictions(&self) -> &RestrictionMap {
        &self.restrictions
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Incremented whenever the trace, focus or restriction map changes.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Makes `△_t` conjoin `Φ(i)` to its query. This departs from the
    /// calculus, where the type switch ignores `Φ(i)`.
    pub fn set_strict_type_switch(&mut self, strict: bool) {
        self.strict_type_switch = strict;
    }

    pub fn strict_type_switch(&self) -> bool {
        self.strict_type_switch
    }

    fn touched(&mut self) {
        self.revision += 1;
    }

    /// `≫`.
    pub fn step_forward(&mut self) {
        self.focus += 1;
        self.touched();
    }

    /// `≪`.
    pub fn step_backward(&mut self) -> Result<(), ExploreError> {
        if self.focus == 0 {
            return Err(ExploreError::Boundary);
        }
        self.focus -= 1;
        self.touched();
        Ok(())
    }

    /// `φ ∨ ¬([π]_i ∧ X^i ψ)`.
    pub fn query_formula(&self, psi: BoundFormula) -> BoundFormula {
        let i = self.focus;
        Formula::or(
            self.phi.clone(),
            Formula::not(and(
                encode_prefix(&self.lks, &self.pi, i),
                nest_next(psi, i),
            )),
        )
    }

    fn state_formula(&self) -> BoundFormula {
        let (s, _) = self.pi.unroll(self.focus);
        encode_state(&self.lks, s).expect("lasso states belong to the model")
    }

    /// First counter-example of [`Session::query_formula`]. The prefix and
    /// `psi` are imposed as letter guards on the automaton of `¬φ`, which
    /// accepts the same words as the automaton of the literal query.
    fn run(&self, psi: BoundFormula) -> Option<Lasso> {
        let mut guards: Vec<_> = (0..self.focus)
            .map(|k| {
                let (s, a) = self.pi.unroll(k);
                LetterGuard::Step(s, a)
            })
            .collect();
        guards.push(LetterGuard::Formula(nnf(&psi)));
        checker::query_constrained(
            &self.lks,
            &self.refuter,
            Some(&self.live),
            &guards,
            self.bound,
        )
        .into_counterexample()
    }

    /// Installs `pi` with `Φ(i)` replaced by `at_focus` and the tail reset.
    fn commit(&mut self, pi: Lasso, at_focus: Option<BoundFormula>) {
        let i = self.focus;
        let before = (self.pi.clone(), self.restrictions.clone());
        if let Some(f) = at_focus {
            self.restrictions.set(i, f);
        }
        self.restrictions.reset_from(i + 1);
        self.pi = pi;
        if (&self.pi, &self.restrictions) != (&before.0, &before.1) {
            self.touched();
        }
    }

    /// `▷`: a different state at the focus after the same prefix.
    pub fn alt_state(&mut self) -> Result<(), ExploreError> {
        let i = self.focus;
        let excluded = Formula::not(self.state_formula());
        let restricted = and(self.restrictions.get(i), excluded);
        let pi = self
            .run(restricted.clone())
            .ok_or(ExploreError::NoAlternative)?;
        self.commit(pi, Some(restricted));
        Ok(())
    }

    /// `▶`: a different event of the same type from the focused state.
    pub fn alt_event(&mut self) -> Result<(), ExploreError> {
        let i = self.focus;
        let (_, a) = self.pi.unroll(i);
        let ty = self.lks.type_of(a);
        let state = self.state_formula();
        let event = Formula::Atom(BoundAtom::Event(a));
        let psi = and(
            and(
                and(self.restrictions.get(i), state.clone()),
                Formula::not(event.clone()),
            ),
            Formula::Atom(BoundAtom::Type(ty)),
        );
        let pi = self.run(psi).ok_or(ExploreError::NoAlternative)?;
        let restricted = and(
            self.restrictions.get(i),
            Formula::not(Formula::and(state, event)),
        );
        self.commit(pi, Some(restricted));
        Ok(())
    }

    fn type_query(&self, t: TypeId) -> BoundFormula {
        let psi = and(self.state_formula(), Formula::Atom(BoundAtom::Type(t)));
        if self.strict_type_switch {
            and(self.restrictions.get(self.focus), psi)
        } else {
            psi
        }
    }

    /// `△_t`: an event of type `t` from the focused state.
    pub fn set_event_type(&mut self, t: TypeId) -> Result<(), ExploreError> {
        let pi = self
            .run(self.type_query(t))
            .ok_or(ExploreError::NoAlternative)?;
        self.commit(pi, None);
        Ok(())
    }

    pub fn find_type(&self, name: &str) -> Result<TypeId, ExploreError> {
        self.lks
            .find_type(name)
            .ok_or_else(|| ExploreError::UnknownType(name.to_string()))
    }

    pub fn apply(&mut self, op: &Op) -> Result<(), ExploreError> {
        match op {
            Op::Forward => {
                self.step_forward();
                Ok(())
            }
            Op::Backward => self.step_backward(),
            Op::AltState => self.alt_state(),
            Op::AltEvent => self.alt_event(),
            Op::SetType(name) => {
                let t = self.find_type(name)?;
                self.set_event_type(t)
            }
        }
    }

    /// Runs the `△_t` query for every type without changing the session.
    /// Queries run in parallel on the current rayon pool; results are in
    /// type-id order.
    pub fn enabled_types(&self) -> Vec<EnabledType> {
        self.enabled_types_each(|_| {})
    }

    /// As [`Session::enabled_types`], also passing each result to
    /// `on_result` as soon as its query finishes.
    pub fn enabled_types_each(&self, on_result: impl Fn(&EnabledType) + Sync) -> Vec<EnabledType> {
        (0..self.lks.num_types())
            .into_par_iter()
            .map(|t| {
                let t = TypeId::from(t);
                let start = Instant::now();
                let enabled = self.run(self.type_query(t)).is_some();
                let r = EnabledType {
                    ty: t,
                    name: self.lks.type_name(t).to_string(),
                    enabled,
                    ms: start.elapsed().as_secs_f64() * 1e3,
                };
                on_result(&r);
                r
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lks::tests::toggle;
    use crate::lks::{EventId, LksBuilder, StateId};
    use crate::seltl::{bind, eval_lasso, parse_formula};

    fn start(lks: TypedLks, src: &str, bound: usize, mode: Mode) -> Init {
        let f = bind(&parse_formula(src).unwrap(), &lks).unwrap();
        init_session(Arc::new(lks), f, bound, mode).unwrap()
    }

    fn session(lks: TypedLks, src: &str, bound: usize) -> Session {
        match start(lks, src, bound, Mode::CounterExample) {
            Init::Session(s) => *s,
            Init::PropertyHolds(_) => panic!("expected a counter-example"),
        }
    }

    fn shown(s: &Session) -> String {
        s.lasso().display(s.lks()).to_string()
    }

    #[test]
    fn toggle_init() {
        let s = session(toggle(), "G !p", 4);
        assert_eq!(shown(&s), "s0·Set[A]·(s1·Stay[])^ω");
        assert_eq!(s.focus(), 0);
        assert!(s.restrictions().is_empty());
        assert!(matches!(
            start(toggle(), "F p", 6, Mode::CounterExample),
            Init::PropertyHolds(6)
        ));
        match start(toggle(), "F p", 6, Mode::Witness) {
            Init::Session(s) => {
                let f = bind(&parse_formula("F p").unwrap(), s.lks()).unwrap();
                assert!(eval_lasso(&f, s.lks(), s.lasso()));
            }
            Init::PropertyHolds(_) => panic!("F p has witnesses"),
        }
    }

    #[test]
    fn navigation() {
        let mut s = session(toggle(), "G !p", 4);
        assert_eq!(s.step_backward(), Err(ExploreError::Boundary));
        assert_eq!(s.revision(), 0);
        s.step_forward();
        s.step_forward();
        s.step_forward();
        assert_eq!(s.focus(), 3);
        assert_eq!(s.display_focus(), 1);
        s.step_backward().unwrap();
        assert_eq!(s.focus(), 2);
        assert_eq!(s.revision(), 4);
    }

    #[test]
    fn toggle_alt_state_at_start_has_no_alternative() {
        let mut s = session(toggle(), "G !p", 4);
        assert_eq!(s.alt_state(), Err(ExploreError::NoAlternative));
        assert!(s.restrictions().is_empty());
        assert_eq!(s.revision(), 0);
    }

    #[test]
    fn toggle_alt_event() {
        let mut s = session(toggle(), "G !p", 4);
        s.alt_event().unwrap();
        assert_eq!(shown(&s), "s0·Set[B]·(s1·Stay[])^ω");
        let r0 = s.restrictions().get(0);
        assert_eq!(
            crate::seltl::unbind(&r0, s.lks()).to_string(),
            "!(!p && @Set[A])"
        );
        assert_eq!(s.alt_event(), Err(ExploreError::NoAlternative));
        assert_eq!(shown(&s), "s0·Set[B]·(s1·Stay[])^ω");
    }

    #[test]
    fn toggle_set_type() {
        let mut s = session(toggle(), "G !p", 4);
        let unset = s.find_type("Unset").unwrap();
        assert_eq!(s.set_event_type(unset), Err(ExploreError::NoAlternative));
        let set = s.find_type("Set").unwrap();
        s.set_event_type(set).unwrap();
        assert_eq!(s.revision(), 0, "same trace, nothing changed");
        s.step_forward();
        s.set_event_type(unset).unwrap();
        assert_eq!(s.lasso().unroll(1).1, EventId(3));
        assert_eq!(s.lasso().unroll(2).0, StateId(0));
        assert_eq!(s.lasso().unroll(0), (StateId(0), EventId(0)));
        assert!(matches!(
            s.apply(&Op::SetType("Nope".into())),
            Err(ExploreError::UnknownType(_))
        ));
    }

    #[test]
    fn toggle_enabled_types() {
        let mut s = session(toggle(), "G !p", 4);
        let names = |v: Vec<EnabledType>| -> Vec<(String, bool)> {
            v.into_iter().map(|e| (e.name, e.enabled)).collect()
        };
        let got = names(s.enabled_types());
        assert_eq!(
            got,
            [
                ("Set".into(), true),
                ("Stay".into(), false),
                ("Unset".into(), false)
            ]
        );
        s.step_forward();
        let got = names(s.enabled_types());
        assert_eq!(
            got,
            [
                ("Set".into(), false),
                ("Stay".into(), true),
                ("Unset".into(), true)
            ]
        );
        assert_eq!(s.revision(), 1);
    }

    #[test]
    fn alt_state_enumerates_initial_states() {
        // s0 and s1 initial, both step to s2; every path refutes G false.
        let mut b = LksBuilder::new();
        let t = b.event_type("T");
        let e = b.event("e", vec![], t);
        let x = b.prop("x");
        let s0 = b.state("s0", &[x]);
        let y = b.prop("y");
        let s1 = b.state("s1", &[y]);
        let s2 = b.state("s2", &[]);
        b.initial(s0).initial(s1);
        b.transition(s0, e, s2)
            .transition(s1, e, s2)
            .transition(s2, e, s2);
        let mut s = session(b.build().unwrap(), "false", 3);
        assert_eq!(s.lasso().states[0], s0);
        s.alt_state().unwrap();
        assert_eq!(s.lasso().states[0], s1);
        assert_eq!(s.alt_state(), Err(ExploreError::NoAlternative));
    }

    fn hotel_session(cfg: &str, bound: usize) -> Session {
        use crate::egs::{compile_lks, parse_model, CompileOptions};
        use crate::models::{hotel, HotelConfig};
        let src = hotel(&HotelConfig::parse(cfg).unwrap());
        let opts = CompileOptions {
            add_idle: true,
            ..Default::default()
        };
        let m = compile_lks(&parse_model(&src).unwrap(), opts).unwrap();
        let f = bind(&m.assertion("BadSafety").unwrap(), &m.lks).unwrap();
        match init_session(Arc::new(m.lks), f, bound, Mode::CounterExample).unwrap() {
            Init::Session(s) => *s,
            Init::PropertyHolds(_) => panic!("BadSafety fails on the hotel"),
        }
    }

    fn enabled_names(s: &Session) -> Vec<String> {
        s.enabled_types()
            .into_iter()
            .filter(|e| e.enabled)
            .map(|e| e.name)
            .collect()
    }

    #[test]
    fn hotel_enabled_sets() {
        let mut s = hotel_session("2[3]", 10);
        assert_eq!(enabled_names(&s), ["In"]);
        s.step_forward();
        assert_eq!(enabled_names(&s), ["Out", "Entry"]);
        assert_eq!(s.revision(), 1);
    }

    #[test]
    fn hotel_alt_event_rebinds_check_in() {
        let mut s = hotel_session("2[3]", 10);
        let before = s.lasso().clone();
        s.alt_event().unwrap();
        let lks = s.lks().clone();
        let (old, new) = (before.unroll(0), s.lasso().unroll(0));
        assert_eq!(old.0, new.0);
        assert_ne!(old.1, new.1);
        assert_eq!(lks.type_name(lks.type_of(new.1)), "In");
        assert!(!eval_lasso(s.property(), &lks, s.lasso()));
    }

    #[test]
    fn fast_queries_match_literal_formula() {
        let mut s = hotel_session("2[3]", 8);
        let lks = s.lks().clone();
        for i in 0..8 {
            while s.focus() < i {
                s.step_forward();
            }
            let mut psis: Vec<BoundFormula> = (0..lks.num_types())
                .map(|t| s.type_query(TypeId::from(t)))
                .collect();
            psis.push(Formula::not(s.state_formula()));
            let (_, a) = s.lasso().unroll(i);
            psis.push(Formula::and(
                s.state_formula(),
                Formula::not(Formula::Atom(BoundAtom::Event(a))),
            ));
            for psi in psis {
                let literal = checker::query(&lks, &s.query_formula(psi.clone()), s.bound());
                assert_eq!(s.run(psi).as_ref(), literal.counterexample(), "focus {i}");
            }
        }
    }
}
