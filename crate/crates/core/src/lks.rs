//! Typed labelled Kripke structures and lasso-shaped paths over them.

use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl From<usize> for $name {
            fn from(i: usize) -> Self {
                $name(i as u32)
            }
        }
    };
}

id_type!(
    /// Index into [`TypedLks::states`].
    StateId
);
id_type!(
    /// Index into the proposition table.
    PropId
);
id_type!(
    /// Index into the event table (Σ).
    EventId
);
id_type!(
    /// Index into the event-type table (Υ).
    TypeId
);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventInfo {
    /// Identity string, e.g. `In[g0,r0,k1]`.
    pub name: String,
    /// Schema name without arguments.
    pub base: String,
    pub args: Vec<String>,
    pub ty: TypeId,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub target: StateId,
    /// Sorted, deduplicated.
    pub events: Vec<EventId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LksError {
    #[error("unknown state id {0}")]
    UnknownState(u32),
    #[error("unknown event id {0}")]
    UnknownEvent(u32),
    #[error("unknown type id {0}")]
    UnknownType(u32),
    #[error("unknown proposition id {0}")]
    UnknownProp(u32),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
}

/// A finite structure `(S, I, P, L, T, Σ, E, Υ, 𝒯)`.
///
/// Immutable once built; construct through [`LksBuilder`].
#[derive(Clone, Debug)]
pub struct TypedLks {
    state_names: Vec<String>,
    initial: Vec<StateId>,
    props: Vec<String>,
    labels: Vec<FixedBitSet>,
    succ: Vec<Vec<Edge>>,
    pred: Vec<Vec<StateId>>,
    events: Vec<EventInfo>,
    types: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Deadlock(StateId),
    EmptyLabel(StateId, StateId),
    EmptyInitial,
    DanglingType(EventId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Deadlock(s) => write!(f, "state {} has no successor", s.0),
            Violation::EmptyLabel(s, t) => {
                write!(f, "transition {} -> {} carries no event", s.0, t.0)
            }
            Violation::EmptyInitial => write!(f, "no initial state"),
            Violation::DanglingType(e) => write!(f, "event {} has an undeclared type", e.0),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl TypedLks {
    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn num_props(&self) -> usize {
        self.props.len()
    }

    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.num_states()).map(StateId::from)
    }

    pub fn initial(&self) -> &[StateId] {
        &self.initial
    }

    pub fn is_initial(&self, s: StateId) -> bool {
        self.initial.binary_search(&s).is_ok()
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.state_names[s.index()]
    }

    pub fn prop_name(&self, p: PropId) -> &str {
        &self.props[p.index()]
    }

    pub fn prop_names(&self) -> &[String] {
        &self.props
    }

    pub fn event(&self, e: EventId) -> &EventInfo {
        &self.events[e.index()]
    }

    pub fn events(&self) -> &[EventInfo] {
        &self.events
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        &self.types[t.index()]
    }

    pub fn type_names(&self) -> &[String] {
        &self.types
    }

    pub fn type_of(&self, e: EventId) -> TypeId {
        self.events[e.index()].ty
    }

    pub fn find_prop(&self, name: &str) -> Option<PropId> {
        self.props.iter().position(|p| p == name).map(PropId::from)
    }

    pub fn find_event(&self, name: &str) -> Option<EventId> {
        self.events
            .iter()
            .position(|e| e.name == name)
            .map(EventId::from)
    }

    pub fn find_type(&self, name: &str) -> Option<TypeId> {
        self.types.iter().position(|t| t == name).map(TypeId::from)
    }

    pub fn holds(&self, s: StateId, p: PropId) -> bool {
        self.labels[s.index()].contains(p.index())
    }

    pub fn label(&self, s: StateId) -> &FixedBitSet {
        &self.labels[s.index()]
    }

    /// Outgoing edges of `s`, ordered by target id. Panics on an unknown id.
    pub fn edges(&self, s: StateId) -> &[Edge] {
        &self.succ[s.index()]
    }

    pub fn predecessors(&self, s: StateId) -> &[StateId] {
        &self.pred[s.index()]
    }

    pub fn successors(&self, s: StateId) -> Result<Vec<(StateId, Vec<EventId>)>, LksError> {
        let edges = self
            .succ
            .get(s.index())
            .ok_or(LksError::UnknownState(s.0))?;
        Ok(edges.iter().map(|e| (e.target, e.events.clone())).collect())
    }

    /// The event set on `(s, t)`, or `None` when the pair is not a transition.
    pub fn edge_events(&self, s: StateId, t: StateId) -> Option<&[EventId]> {
        let edges = self.succ.get(s.index())?;
        edges
            .binary_search_by_key(&t, |e| e.target)
            .ok()
            .map(|i| edges[i].events.as_slice())
    }

    pub fn has_transition(&self, s: StateId, e: EventId, t: StateId) -> bool {
        self.edge_events(s, t)
            .is_some_and(|evs| evs.binary_search(&e).is_ok())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.initial.is_empty() {
            violations.push(Violation::EmptyInitial);
        }
        for s in self.states() {
            let edges = &self.succ[s.index()];
            if edges.is_empty() {
                violations.push(Violation::Deadlock(s));
            }
            for e in edges {
                if e.events.is_empty() {
                    violations.push(Violation::EmptyLabel(s, e.target));
                }
            }
        }
        for (i, ev) in self.events.iter().enumerate() {
            if ev.ty.index() >= self.types.len() {
                violations.push(Violation::DanglingType(EventId::from(i)));
            }
        }
        ValidationReport { violations }
    }
}

/// Incremental constructor for [`TypedLks`].
#[derive(Default, Debug)]
pub struct LksBuilder {
    state_names: Vec<String>,
    initial: Vec<StateId>,
    props: Vec<String>,
    labels: Vec<Vec<PropId>>,
    trans: Vec<(StateId, StateId, EventId)>,
    bare_edges: Vec<(StateId, StateId)>,
    events: Vec<EventInfo>,
    types: Vec<String>,
}

impl LksBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn prop(&mut self, name: impl Into<String>) -> PropId {
        self.props.push(name.into());
        PropId::from(self.props.len() - 1)
    }

    pub fn event_type(&mut self, name: impl Into<String>) -> TypeId {
        self.types.push(name.into());
        TypeId::from(self.types.len() - 1)
    }

    /// Adds an event whose identity is `base[args]`.
    pub fn event(&mut self, base: impl Into<String>, args: Vec<String>, ty: TypeId) -> EventId {
        let base = base.into();
        let name = format!("{}[{}]", base, args.join(","));
        self.events.push(EventInfo {
            name,
            base,
            args,
            ty,
        });
        EventId::from(self.events.len() - 1)
    }

    pub fn state(&mut self, name: impl Into<String>, label: &[PropId]) -> StateId {
        self.state_names.push(name.into());
        self.labels.push(label.to_vec());
        StateId::from(self.state_names.len() - 1)
    }

    pub fn initial(&mut self, s: StateId) -> &mut Self {
        self.initial.push(s);
        self
    }

    pub fn transition(&mut self, from: StateId, event: EventId, to: StateId) -> &mut Self {
        self.trans.push((from, to, event));
        self
    }

    /// Records a transition with no event on it. Only useful for building
    /// ill-formed structures that [`TypedLks::validate`] must reject.
    pub fn unlabelled_transition(&mut self, from: StateId, to: StateId) -> &mut Self {
        self.bare_edges.push((from, to));
        self
    }

    pub fn build(self) -> Result<TypedLks, LksError> {
        let n = self.state_names.len();
        check_unique(&self.props)?;
        check_unique(&self.types)?;
        check_unique(self.events.iter().map(|e| &e.name))?;
        let mut labels = Vec::with_capacity(n);
        for l in &self.labels {
            let mut set = FixedBitSet::with_capacity(self.props.len());
            for p in l {
                if p.index() >= self.props.len() {
                    return Err(LksError::UnknownProp(p.0));
                }
                set.insert(p.index());
            }
            labels.push(set);
        }
        let mut succ: Vec<Vec<Edge>> = vec![Vec::new(); n];
        let check_state = |s: StateId| {
            if s.index() < n {
                Ok(())
            } else {
                Err(LksError::UnknownState(s.0))
            }
        };
        for &(from, to) in &self.bare_edges {
            check_state(from)?;
            check_state(to)?;
            let edges = &mut succ[from.index()];
            if !edges.iter().any(|e| e.target == to) {
                edges.push(Edge {
                    target: to,
                    events: Vec::new(),
                });
            }
        }
        for &(from, to, ev) in &self.trans {
            check_state(from)?;
            check_state(to)?;
            if ev.index() >= self.events.len() {
                return Err(LksError::UnknownEvent(ev.0));
            }
            let edges = &mut succ[from.index()];
            match edges.iter_mut().find(|e| e.target == to) {
                Some(e) => e.events.push(ev),
                None => edges.push(Edge {
                    target: to,
                    events: vec![ev],
                }),
            }
        }
        let mut pred = vec![Vec::new(); n];
        for (s, edges) in succ.iter_mut().enumerate() {
            edges.sort_by_key(|e| e.target);
            for e in edges.iter_mut() {
                e.events.sort();
                e.events.dedup();
                pred[e.target.index()].push(StateId::from(s));
            }
        }
        let mut initial = self.initial;
        for &s in &initial {
            check_state(s)?;
        }
        initial.sort();
        initial.dedup();
        Ok(TypedLks {
            state_names: self.state_names,
            initial,
            props: self.props,
            labels,
            succ,
            pred,
            events: self.events,
            types: self.types,
        })
    }
}

fn check_unique<'a>(names: impl IntoIterator<Item = &'a String>) -> Result<(), LksError> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(LksError::DuplicateName(n.clone()));
        }
    }
    Ok(())
}

/// A finite representation `u·v^ω` of an infinite path.
///
/// `states[k]` and `events[k]` are the k-th state and the event leaving it.
/// The last event leads back to `states[loop_start]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lasso {
    pub states: Vec<StateId>,
    pub events: Vec<EventId>,
    pub loop_start: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LassoError {
    #[error("lasso is empty")]
    Empty,
    #[error("states and events differ in length")]
    Shape,
    #[error("loop start {0} is outside the lasso")]
    LoopStart(usize),
    #[error("first state is not initial")]
    NotInitial,
    #[error("step {0} is not a transition of the model")]
    BadStep(usize),
}

impl Lasso {
    /// Number of distinct positions (prefix plus loop).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn loop_len(&self) -> usize {
        self.states.len() - self.loop_start
    }

    /// Maps an index of the infinite unrolling onto a stored position.
    pub fn position(&self, j: usize) -> usize {
        if j < self.states.len() {
            j
        } else {
            self.loop_start + (j - self.loop_start) % self.loop_len()
        }
    }

    /// Stored position following `k` on the infinite path.
    pub fn succ_position(&self, k: usize) -> usize {
        if k + 1 < self.states.len() {
            k + 1
        } else {
            self.loop_start
        }
    }

    /// `(s_j, a_j)` of the infinite unrolling.
    pub fn unroll(&self, j: usize) -> (StateId, EventId) {
        let k = self.position(j);
        (self.states[k], self.events[k])
    }

    pub fn state_at(&self, j: usize) -> StateId {
        self.states[self.position(j)]
    }

    pub fn event_at(&self, j: usize) -> EventId {
        self.events[self.position(j)]
    }

    /// Checks the structural invariants against `lks`.
    pub fn check(&self, lks: &TypedLks) -> Result<(), LassoError> {
        if self.states.is_empty() {
            return Err(LassoError::Empty);
        }
        if self.states.len() != self.events.len() {
            return Err(LassoError::Shape);
        }
        if self.loop_start >= self.states.len() {
            return Err(LassoError::LoopStart(self.loop_start));
        }
        if !lks.is_initial(self.states[0]) {
            return Err(LassoError::NotInitial);
        }
        for k in 0..self.states.len() {
            let from = self.states[k];
            let to = self.states[self.succ_position(k)];
            if from.index() >= lks.num_states() || !lks.has_transition(from, self.events[k], to) {
                return Err(LassoError::BadStep(k));
            }
        }
        Ok(())
    }

    /// The same infinite path with the loop unrolled once more.
    pub fn unrolled_once(&self) -> Lasso {
        let mut states = self.states.clone();
        let mut events = self.events.clone();
        states.push(self.states[self.loop_start]);
        events.push(self.events[self.loop_start]);
        Lasso {
            states,
            events,
            loop_start: self.loop_start + 1,
        }
    }

    pub fn display<'a>(&'a self, lks: &'a TypedLks) -> LassoDisplay<'a> {
        LassoDisplay { lasso: self, lks }
    }
}

pub struct LassoDisplay<'a> {
    lasso: &'a Lasso,
    lks: &'a TypedLks,
}

impl fmt::Display for LassoDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.lasso;
        for k in 0..l.len() {
            if k == l.loop_start {
                write!(f, "(")?;
            }
            write!(
                f,
                "{}·{}",
                self.lks.state_name(l.states[k]),
                self.lks.event(l.events[k]).name
            )?;
            if k + 1 < l.len() {
                write!(f, "·")?;
            }
        }
        write!(f, ")^ω")
    }
}
