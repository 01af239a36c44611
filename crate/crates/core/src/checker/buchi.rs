//! Tableau translation of NNF formulas to Büchi automata over
//! (state, event) letters.
//!
//! Propositional subformulas are not decomposed: they become letter guards
//! evaluated against the source state's label and the event taken. Each
//! `F`/`U` subformula yields one acceptance set on transitions; the result
//! is degeneralized to state-based acceptance with a level counter.

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;

use crate::lks::{EventId, StateId, TypedLks};
use crate::seltl::{BoundAtom, Nnf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    Lit(BoundAtom, bool),
    /// The letter has the label of the state and is the event.
    Step(StateId, EventId),
    And(u32, u32),
    Or(u32, u32),
    Next(u32),
    Globally(u32),
    Finally(u32),
    Until(u32, u32),
    Release(u32, u32),
}

/// Hash-consed subformulas.
#[derive(Clone, Debug, Default)]
struct Arena {
    nodes: Vec<Node>,
    propositional: Vec<bool>,
    ids: HashMap<Node, u32>,
}

impl Arena {
    fn add(&mut self, n: Node, propositional: bool) -> u32 {
        if let Some(&id) = self.ids.get(&n) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(n);
        self.propositional.push(propositional);
        self.ids.insert(n, id);
        id
    }

    fn intern(&mut self, f: &Nnf) -> u32 {
        let prop = |a: &Self, x: u32| a.propositional[x as usize];
        match f {
            Nnf::True => self.add(Node::True, true),
            Nnf::False => self.add(Node::False, true),
            Nnf::Lit(a, p) => self.add(Node::Lit(*a, *p), true),
            Nnf::And(x, y) => {
                let (x, y) = (self.intern(x), self.intern(y));
                let p = prop(self, x) && prop(self, y);
                self.add(Node::And(x, y), p)
            }
            Nnf::Or(x, y) => {
                let (x, y) = (self.intern(x), self.intern(y));
                let p = prop(self, x) && prop(self, y);
                self.add(Node::Or(x, y), p)
            }
            Nnf::Next(x) => {
                let x = self.intern(x);
                self.add(Node::Next(x), false)
            }
            Nnf::Globally(x) => {
                let x = self.intern(x);
                self.add(Node::Globally(x), false)
            }
            Nnf::Finally(x) => {
                let x = self.intern(x);
                self.add(Node::Finally(x), false)
            }
            Nnf::Until(x, y) => {
                let (x, y) = (self.intern(x), self.intern(y));
                self.add(Node::Until(x, y), false)
            }
            Nnf::Release(x, y) => {
                let (x, y) = (self.intern(x), self.intern(y));
                self.add(Node::Release(x, y), false)
            }
        }
    }

    fn guard(&mut self, g: &LetterGuard) -> u32 {
        match g {
            LetterGuard::Step(s, e) => self.add(Node::Step(*s, *e), true),
            LetterGuard::Formula(f) => {
                let id = self.intern(f);
                assert!(self.propositional[id as usize], "temporal letter guard");
                id
            }
        }
    }

    fn eval(&self, id: u32, lks: &TypedLks, s: StateId, e: EventId) -> bool {
        match self.nodes[id as usize] {
            Node::True => true,
            Node::False => false,
            Node::Lit(a, pos) => {
                let v = match a {
                    BoundAtom::Prop(p) => lks.holds(s, p),
                    BoundAtom::Event(ev) => ev == e,
                    BoundAtom::Type(t) => lks.type_of(e) == t,
                };
                v == pos
            }
            Node::Step(s0, e0) => e == e0 && (s == s0 || lks.label(s) == lks.label(s0)),
            Node::And(x, y) => self.eval(x, lks, s, e) && self.eval(y, lks, s, e),
            Node::Or(x, y) => self.eval(x, lks, s, e) || self.eval(y, lks, s, e),
            _ => unreachable!("temporal operator in a letter guard"),
        }
    }

    /// Literals a propositional formula forces, through conjunctions.
    fn forced_literals(&self, id: u32, out: &mut Vec<(BoundAtom, bool)>) {
        match self.nodes[id as usize] {
            Node::Lit(a, p) => out.push((a, p)),
            Node::Step(_, e) => out.push((BoundAtom::Event(e), true)),
            Node::And(x, y) => {
                self.forced_literals(x, out);
                self.forced_literals(y, out);
            }
            _ => {}
        }
    }
}

/// A constraint on one letter.
#[derive(Clone, Debug, PartialEq)]
pub enum LetterGuard {
    /// The letter of `[s] ∧ e`: a state labelled like `s`, taking `e`.
    Step(StateId, EventId),
    /// A propositional formula.
    Formula(Nnf),
}

/// A transition: the conjunction of `guard` must hold on the letter read.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub guard: Vec<u32>,
    pub target: usize,
}

#[derive(Clone, Debug)]
pub struct BuchiState {
    pub accepting: bool,
    pub transitions: Vec<Transition>,
}

/// A Büchi automaton whose letters are `(state, event)` pairs of an LKS.
#[derive(Clone, Debug)]
pub struct Buchi {
    arena: Arena,
    states: Vec<BuchiState>,
    acceptance_sets: usize,
}

struct Term {
    guard: Vec<u32>,
    next: Vec<u32>,
    acc: FixedBitSet,
}

#[derive(Clone)]
struct Partial {
    todo: Vec<u32>,
    processed: BTreeSet<u32>,
    guard: BTreeSet<u32>,
    next: BTreeSet<u32>,
}

impl Buchi {
    /// The initial state is always state 0.
    pub fn initial(&self) -> usize {
        0
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BuchiState] {
        &self.states
    }

    pub fn state(&self, q: usize) -> &BuchiState {
        &self.states[q]
    }

    /// Acceptance sets of the generalized automaton before degeneralization.
    pub fn num_acceptance_sets(&self) -> usize {
        self.acceptance_sets
    }

    /// Whether guard formula `g` holds on the letter `(s, e)`.
    pub fn guard_holds(&self, g: u32, lks: &TypedLks, s: StateId, e: EventId) -> bool {
        self.arena.eval(g, lks, s, e)
    }

    /// Product with the chain automaton requiring `guards[k]` at position
    /// `k`: accepts the words this automaton accepts whose leading letters
    /// satisfy the guards. Every guard must be propositional.
    pub fn constrain(&self, guards: &[LetterGuard]) -> Buchi {
        self.constrain_with_ids(guards).0
    }

    /// This automaton with `guards` added to its guard table, and their ids.
    pub(crate) fn with_guards(&self, guards: &[LetterGuard]) -> (Buchi, Vec<u32>) {
        let mut ba = self.clone();
        let ids = guards.iter().map(|g| ba.arena.guard(g)).collect();
        (ba, ids)
    }

    fn constrain_with_ids(&self, guards: &[LetterGuard]) -> (Buchi, Vec<u32>) {
        let mut arena = self.arena.clone();
        let ids: Vec<u32> = guards.iter().map(|g| arena.guard(g)).collect();
        let n = ids.len();
        let mut out = Buchi {
            arena,
            states: Vec::new(),
            acceptance_sets: self.acceptance_sets,
        };
        let mut index: HashMap<(usize, usize), usize> = HashMap::from([((self.initial(), 0), 0)]);
        let mut order = vec![(self.initial(), 0)];
        while out.states.len() < order.len() {
            let (q, k) = order[out.states.len()];
            let mut transitions = Vec::with_capacity(self.states[q].transitions.len());
            for t in &self.states[q].transitions {
                let mut guard = t.guard.clone();
                if k < n {
                    guard.push(ids[k]);
                    guard.sort_unstable();
                    guard.dedup();
                    let set: BTreeSet<u32> = guard.iter().copied().collect();
                    if out.contradictory(&set) {
                        continue;
                    }
                }
                let key = (t.target, (k + 1).min(n));
                let target = *index.entry(key).or_insert_with(|| {
                    order.push(key);
                    order.len() - 1
                });
                transitions.push(Transition { guard, target });
            }
            transitions.sort();
            transitions.dedup();
            out.states.push(BuchiState {
                accepting: self.states[q].accepting,
                transitions,
            });
        }
        (out, ids)
    }

    fn expand(&self, eventualities: &[u32], obligations: &[u32]) -> Vec<Term> {
        let nodes = &self.arena.nodes;
        let mut out = Vec::new();
        let mut stack = vec![Partial {
            todo: obligations.iter().rev().copied().collect(),
            processed: BTreeSet::new(),
            guard: BTreeSet::new(),
            next: BTreeSet::new(),
        }];
        'branches: while let Some(mut p) = stack.pop() {
            while let Some(f) = p.todo.pop() {
                if !p.processed.insert(f) {
                    continue;
                }
                if self.arena.propositional[f as usize] {
                    match nodes[f as usize] {
                        Node::True => {}
                        Node::False => continue 'branches,
                        _ => {
                            p.guard.insert(f);
                        }
                    }
                    continue;
                }
                match nodes[f as usize] {
                    Node::And(x, y) => p.todo.extend([y, x]),
                    Node::Or(x, y) => {
                        let mut alt = p.clone();
                        alt.todo.push(y);
                        stack.push(alt);
                        p.todo.push(x);
                    }
                    Node::Next(x) => {
                        if nodes[x as usize] != Node::True {
                            p.next.insert(x);
                        }
                    }
                    Node::Globally(x) => {
                        p.next.insert(f);
                        p.todo.push(x);
                    }
                    Node::Finally(x) => {
                        let mut alt = p.clone();
                        alt.next.insert(f);
                        stack.push(alt);
                        p.todo.push(x);
                    }
                    Node::Until(x, y) => {
                        let mut alt = p.clone();
                        alt.next.insert(f);
                        alt.todo.push(x);
                        stack.push(alt);
                        p.todo.push(y);
                    }
                    Node::Release(x, y) => {
                        let mut alt = p.clone();
                        alt.next.insert(f);
                        alt.todo.push(y);
                        stack.push(alt);
                        p.todo.extend([y, x]);
                    }
                    _ => unreachable!("propositional nodes are handled above"),
                }
            }
            if self.contradictory(&p.guard) {
                continue;
            }
            let mut acc = FixedBitSet::with_capacity(eventualities.len());
            for (k, &u) in eventualities.iter().enumerate() {
                let rhs = match nodes[u as usize] {
                    Node::Finally(x) => x,
                    Node::Until(_, y) => y,
                    _ => unreachable!(),
                };
                if !p.processed.contains(&u) || p.processed.contains(&rhs) {
                    acc.insert(k);
                }
            }
            out.push(Term {
                guard: p.guard.into_iter().collect(),
                next: p.next.into_iter().collect(),
                acc,
            });
        }
        out
    }

    fn contradictory(&self, guard: &BTreeSet<u32>) -> bool {
        let mut lits = Vec::new();
        for &g in guard {
            self.arena.forced_literals(g, &mut lits);
        }
        lits.sort();
        lits.dedup();
        let mut event = None;
        let mut ty = None;
        for w in lits.windows(2) {
            if w[0].0 == w[1].0 {
                return true;
            }
        }
        for (a, pos) in lits {
            if !pos {
                continue;
            }
            match a {
                BoundAtom::Event(e) if event.replace(e).is_some_and(|x| x != e) => return true,
                BoundAtom::Type(t) if ty.replace(t).is_some_and(|x| x != t) => return true,
                _ => {}
            }
        }
        false
    }
}

/// Translates an NNF formula into a Büchi automaton accepting exactly the
/// letter words that satisfy it.
pub fn ltl_to_buchi(f: &Nnf) -> Buchi {
    let mut arena = Arena::default();
    let root = arena.intern(f);
    let eventualities: Vec<u32> = arena
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| matches!(n, Node::Finally(_) | Node::Until(..)))
        .map(|(i, _)| i as u32)
        .collect();
    let k = eventualities.len();
    let mut ba = Buchi {
        arena,
        states: Vec::new(),
        acceptance_sets: k,
    };

    // Generalized automaton over obligation sets.
    let mut gen_ids: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut obligations = vec![vec![root]];
    gen_ids.insert(vec![root], 0);
    let mut gen: Vec<Vec<(Vec<u32>, usize, FixedBitSet)>> = Vec::new();
    while gen.len() < obligations.len() {
        let terms = ba.expand(&eventualities, &obligations[gen.len()]);
        let mut out = Vec::with_capacity(terms.len());
        for t in terms {
            let target = *gen_ids.entry(t.next.clone()).or_insert_with(|| {
                obligations.push(t.next);
                obligations.len() - 1
            });
            out.push((t.guard, target, t.acc));
        }
        gen.push(out);
    }

    // Degeneralization: level `l` counts the acceptance sets seen in order.
    let next_level = |l: usize, acc: &FixedBitSet| {
        let mut l = if l == k { 0 } else { l };
        while l < k && acc.contains(l) {
            l += 1;
        }
        l
    };
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    ids.insert((0, 0), 0);
    let mut order = vec![(0usize, 0usize)];
    while ba.states.len() < order.len() {
        let (n, l) = order[ba.states.len()];
        let mut transitions = Vec::with_capacity(gen[n].len());
        for (guard, target, acc) in &gen[n] {
            let key = (*target, next_level(l, acc));
            let id = *ids.entry(key).or_insert_with(|| {
                order.push(key);
                order.len() - 1
            });
            transitions.push(Transition {
                guard: guard.clone(),
                target: id,
            });
        }
        transitions.sort();
        transitions.dedup();
        ba.states.push(BuchiState {
            accepting: k == 0 || l == k,
            transitions,
        });
    }
    ba
}
