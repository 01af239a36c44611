//! Bounded lasso search.
//!
//! A lasso of `L` positions is built one position at a time. Along the
//! prefix the search carries the set `P` of automaton states reachable on
//! the letters read so far. Once the loop has started at position `l` it
//! also carries the transfer relation of the loop segment: for each pair
//! of automaton states, whether the segment leads from one to the other,
//! and whether it can do so through an accepting state. Closing the loop
//! back to `s_l` yields the automaton graph of the periodic part; the word
//! is accepted iff that graph has a cycle through an accepting edge
//! reachable from `P_l`.
//!
//! Subtrees that failed are remembered by their remaining length and
//! carried state, which makes the memo valid across all values of `L`.

use std::collections::{HashMap, HashSet, VecDeque};

use fixedbitset::FixedBitSet;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::Direction;

use crate::lks::{EventId, Lasso, StateId, TypedLks};

use super::buchi::Buchi;

const UNKNOWN: u8 = 0;
const NO: u8 = 1;
const YES: u8 = 2;

/// Letter-guard evaluation, memoized per guard and source state.
pub(crate) struct Letters<'a> {
    pub lks: &'a TypedLks,
    pub ba: &'a Buchi,
    memo: HashMap<(u32, StateId), Vec<u8>>,
}

impl<'a> Letters<'a> {
    pub fn new(lks: &'a TypedLks, ba: &'a Buchi) -> Self {
        Self {
            lks,
            ba,
            memo: HashMap::new(),
        }
    }

    pub fn holds(&mut self, g: u32, s: StateId, e: EventId) -> bool {
        let n = self.lks.num_events();
        let row = self.memo.entry((g, s)).or_insert_with(|| vec![UNKNOWN; n]);
        let slot = &mut row[e.index()];
        if *slot == UNKNOWN {
            *slot = if self.ba.guard_holds(g, self.lks, s, e) {
                YES
            } else {
                NO
            };
        }
        *slot == YES
    }

    fn enabled(&mut self, q: usize, s: StateId, e: EventId, out: &mut Vec<usize>) {
        out.clear();
        let ba = self.ba;
        for t in &ba.state(q).transitions {
            if t.guard.iter().all(|&g| self.holds(g, s, e)) {
                out.push(t.target);
            }
        }
    }

    /// Automaton states reachable from `from` on the letter `(s, e)`.
    pub fn post(&mut self, from: &FixedBitSet, s: StateId, e: EventId) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.ba.num_states());
        let mut buf = Vec::new();
        for q in from.ones() {
            self.enabled(q, s, e, &mut buf);
            for &t in &buf {
                out.insert(t);
            }
        }
        out
    }

    fn nq(&self) -> usize {
        self.ba.num_states()
    }

    /// Transfer relation of the empty segment.
    pub fn identity(&self) -> FixedBitSet {
        let nq = self.nq();
        let mut r = FixedBitSet::with_capacity(2 * nq * nq);
        for q in 0..nq {
            r.insert(q * nq + q);
        }
        r
    }

    /// Extends a transfer relation by one letter. Bits `q0*nq + q` record
    /// reachability, bits `nq*nq + q0*nq + q` reachability through an
    /// accepting state that read a letter.
    pub fn extend(&mut self, r: &FixedBitSet, s: StateId, e: EventId) -> FixedBitSet {
        let nq = self.nq();
        let flags = nq * nq;
        let mut out = FixedBitSet::with_capacity(2 * flags);
        let mut buf = Vec::new();
        let mut succ: Vec<Option<Vec<usize>>> = vec![None; nq];
        for b in r.ones().take_while(|&b| b < flags) {
            let (row, q) = (b - b % nq, b % nq);
            let targets = succ[q].get_or_insert_with(|| {
                self.enabled(q, s, e, &mut buf);
                buf.clone()
            });
            let flagged = self.ba.state(q).accepting || r.contains(flags + b);
            for &t in targets.iter() {
                out.insert(row + t);
                if flagged {
                    out.insert(flags + row + t);
                }
            }
        }
        out
    }

    /// Whether some state of `start` survives one pass over the segment.
    pub fn alive(&self, start: &FixedBitSet, r: &FixedBitSet) -> bool {
        let nq = self.nq();
        start
            .ones()
            .any(|q0| (q0 * nq..q0 * nq + nq).any(|b| r.contains(b)))
    }

    /// Whether the periodic word with transfer relation `r` is accepted
    /// from some state in `start`.
    pub fn accepts(&self, start: &FixedBitSet, r: &FixedBitSet) -> bool {
        let nq = self.nq();
        let flags = nq * nq;
        // Transitive closure of the segment graph.
        let mut reach: Vec<FixedBitSet> = (0..nq)
            .map(|q0| {
                let mut row = FixedBitSet::with_capacity(nq);
                for q in 0..nq {
                    if r.contains(q0 * nq + q) {
                        row.insert(q);
                    }
                }
                row
            })
            .collect();
        for k in 0..nq {
            let via = reach[k].clone();
            for row in reach.iter_mut() {
                if row.contains(k) {
                    row.union_with(&via);
                }
            }
        }
        let mut from_start = start.clone();
        for q in start.ones() {
            from_start.union_with(&reach[q]);
        }
        from_start.ones().any(|u| {
            (0..nq).any(|v| r.contains(flags + u * nq + v) && (v == u || reach[v].contains(u)))
        })
    }
}

/// Product states `(s, q)`, indexed `s * |Q| + q`, from which some path of
/// the model has a run of `ba` visiting an accepting state infinitely often.
/// Only states reachable from an initial pair are considered.
pub(crate) fn live_product(lks: &TypedLks, ba: &Buchi) -> FixedBitSet {
    let nq = ba.num_states();
    let mut letters = Letters::new(lks, ba);
    let mut graph = DiGraph::<usize, ()>::new();
    let mut nodes: HashMap<usize, NodeIndex> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut node = |graph: &mut DiGraph<usize, ()>, queue: &mut VecDeque<usize>, id: usize| {
        *nodes.entry(id).or_insert_with(|| {
            queue.push_back(id);
            graph.add_node(id)
        })
    };
    for &s in lks.initial() {
        node(&mut graph, &mut queue, s.index() * nq + ba.initial());
    }
    let mut buf = Vec::new();
    while let Some(id) = queue.pop_front() {
        let from = node(&mut graph, &mut queue, id);
        let (s, q) = (StateId::from(id / nq), id % nq);
        for edge in lks.edges(s) {
            for &e in &edge.events {
                letters.enabled(q, s, e, &mut buf);
                for &t in &buf {
                    let to = node(&mut graph, &mut queue, edge.target.index() * nq + t);
                    graph.update_edge(from, to, ());
                }
            }
        }
    }
    let mut live = FixedBitSet::with_capacity(lks.num_states() * nq);
    let mut stack = Vec::new();
    for scc in tarjan_scc(&graph) {
        let cyclic = scc.len() > 1 || graph.contains_edge(scc[0], scc[0]);
        if cyclic && scc.iter().any(|&n| ba.state(graph[n] % nq).accepting) {
            stack.extend(scc);
        }
    }
    for &n in &stack {
        live.insert(graph[n]);
    }
    while let Some(n) = stack.pop() {
        for p in graph.neighbors_directed(n, Direction::Incoming) {
            if !live.put(graph[p]) {
                stack.push(p);
            }
        }
    }
    live
}

/// Remaining length, position (saturated at the guard count), state and
/// carried automaton data.
type PrefixKey = (usize, usize, StateId, FixedBitSet);
type LoopKey = (usize, usize, StateId, StateId, FixedBitSet, FixedBitSet);

pub(crate) struct Search<'a> {
    letters: Letters<'a>,
    /// Guard ids the letter at each leading position must satisfy.
    guards: Vec<u32>,
    /// Product states that can still lead to acceptance, when known.
    live: Option<&'a FixedBitSet>,
    failed_prefix: HashSet<PrefixKey>,
    failed_loop: HashSet<LoopKey>,
    dist: HashMap<StateId, Vec<usize>>,
    states: Vec<StateId>,
    events: Vec<EventId>,
    loop_start: usize,
    pub visited: u64,
}

impl<'a> Search<'a> {
    pub fn new(lks: &'a TypedLks, ba: &'a Buchi) -> Self {
        Self::with_guards(lks, ba, Vec::new())
    }

    /// A search that only accepts lassos whose letter at each position
    /// `k < guards.len()` satisfies guard `guards[k]` of `ba`.
    pub fn with_guards(lks: &'a TypedLks, ba: &'a Buchi, guards: Vec<u32>) -> Self {
        Self {
            letters: Letters::new(lks, ba),
            guards,
            live: None,
            failed_prefix: HashSet::new(),
            failed_loop: HashSet::new(),
            dist: HashMap::new(),
            states: Vec::new(),
            events: Vec::new(),
            loop_start: 0,
            visited: 0,
        }
    }

    /// Prunes branches that reach no product state of `live`, as computed
    /// by [`live_product`] for the same model and automaton states.
    pub fn with_liveness(mut self, live: &'a FixedBitSet) -> Self {
        self.live = Some(live);
        self
    }

    /// Whether some automaton state of `qs` is live at `s`.
    fn live_at(&self, s: StateId, mut qs: impl Iterator<Item = usize>) -> bool {
        let nq = self.letters.nq();
        self.live
            .is_none_or(|l| qs.any(|q| l.contains(s.index() * nq + q)))
    }

    /// First accepted lasso of length `1..=bound`.
    pub fn run(&mut self, bound: usize) -> Option<Lasso> {
        let lks = self.letters.lks;
        let mut start = FixedBitSet::with_capacity(self.letters.nq());
        start.insert(self.letters.ba.initial());
        for len in 1..=bound {
            for &s in lks.initial() {
                if self.prefix(len, s, &start) {
                    return Some(Lasso {
                        states: std::mem::take(&mut self.states),
                        events: std::mem::take(&mut self.events),
                        loop_start: self.loop_start,
                    });
                }
            }
        }
        None
    }

    /// Edge count of a shortest path from each state to `target`.
    fn distances(&mut self, target: StateId) -> &[usize] {
        let lks = self.letters.lks;
        self.dist.entry(target).or_insert_with(|| {
            let mut d = vec![usize::MAX; lks.num_states()];
            let mut queue = VecDeque::from([target]);
            d[target.index()] = 0;
            while let Some(s) = queue.pop_front() {
                for &p in lks.predecessors(s) {
                    if d[p.index()] == usize::MAX {
                        d[p.index()] = d[s.index()] + 1;
                        queue.push_back(p);
                    }
                }
            }
            d
        })
    }

    fn letter_ok(&mut self, k: usize, s: StateId, e: EventId) -> bool {
        match self.guards.get(k) {
            Some(&g) => self.letters.holds(g, s, e),
            None => true,
        }
    }

    /// Whether the guards beyond the end of the lasso on the stack hold on
    /// the positions they unroll to.
    fn wrap_ok(&mut self) -> bool {
        let len = self.states.len();
        let (l, period) = (self.loop_start, len - self.loop_start);
        (len..self.guards.len()).all(|k| {
            let j = l + (k - l) % period;
            let (s, e) = (self.states[j], self.events[j]);
            self.letter_ok(k, s, e)
        })
    }

    /// `rem` positions remain, the current one at `s`; the loop has not
    /// started yet.
    fn prefix(&mut self, rem: usize, s: StateId, p: &FixedBitSet) -> bool {
        self.visited += 1;
        if !self.live_at(s, p.ones()) {
            return false;
        }
        let depth = self.states.len();
        let key = (rem, depth.min(self.guards.len()), s, p.clone());
        if self.failed_prefix.contains(&key) {
            return false;
        }
        let lks = self.letters.lks;
        self.states.push(s);
        if rem > 1 {
            for edge in lks.edges(s) {
                for &e in &edge.events {
                    if !self.letter_ok(depth, s, e) {
                        continue;
                    }
                    let next = self.letters.post(p, s, e);
                    if next.is_clear() {
                        continue;
                    }
                    self.events.push(e);
                    if self.prefix(rem - 1, edge.target, &next) {
                        return true;
                    }
                    self.events.pop();
                }
            }
        }
        self.loop_start = self.states.len() - 1;
        let id = self.letters.identity();
        self.states.pop();
        if self.looping(rem, s, s, p, &id) {
            return true;
        }
        self.failed_prefix.insert(key);
        false
    }

    /// Inside the loop, which started at `sl` with automaton states `pl`;
    /// `r` is the transfer relation of the loop so far.
    fn looping(
        &mut self,
        rem: usize,
        s: StateId,
        sl: StateId,
        pl: &FixedBitSet,
        r: &FixedBitSet,
    ) -> bool {
        self.visited += 1;
        let nq = self.letters.nq();
        let current = pl
            .ones()
            .flat_map(|q0| (0..nq).filter(move |&q| r.contains(q0 * nq + q)));
        if !self.live_at(s, current) {
            return false;
        }
        let depth = self.states.len();
        // Short lassos wrap guards onto loop letters outside the key.
        let memo = depth + rem >= self.guards.len();
        let key = (
            rem,
            depth.min(self.guards.len()),
            s,
            sl,
            pl.clone(),
            r.clone(),
        );
        if memo && self.failed_loop.contains(&key) {
            return false;
        }
        let lks = self.letters.lks;
        self.states.push(s);
        for edge in lks.edges(s) {
            let t = edge.target;
            if rem == 1 {
                if t != sl {
                    continue;
                }
            } else if self.distances(sl)[t.index()] > rem - 1 {
                continue;
            }
            for &e in &edge.events {
                if !self.letter_ok(depth, s, e) {
                    continue;
                }
                let next = self.letters.extend(r, s, e);
                if !self.letters.alive(pl, &next) {
                    continue;
                }
                self.events.push(e);
                let found = if rem == 1 {
                    self.wrap_ok() && self.letters.accepts(pl, &next)
                } else {
                    self.looping(rem - 1, t, sl, pl, &next)
                };
                if found {
                    return true;
                }
                self.events.pop();
            }
        }
        self.states.pop();
        if memo {
            self.failed_loop.insert(key);
        }
        false
    }
}

impl Buchi {
    /// Whether the automaton accepts the letter word of `pi`.
    pub fn accepts_lasso(&self, lks: &TypedLks, pi: &Lasso) -> bool {
        let mut letters = Letters::new(lks, self);
        let mut p = FixedBitSet::with_capacity(self.num_states());
        p.insert(self.initial());
        for k in 0..pi.loop_start {
            p = letters.post(&p, pi.states[k], pi.events[k]);
        }
        let mut r = letters.identity();
        for k in pi.loop_start..pi.len() {
            r = letters.extend(&r, pi.states[k], pi.events[k]);
        }
        letters.accepts(&p, &r)
    }
}
