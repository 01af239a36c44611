use std::collections::{HashMap, VecDeque};

use crate::lks::{EventId, LksBuilder, PropId, StateId, TypedLks};
use crate::seltl::{bind, parse_formula, BoundFormula, Formula};

use super::eval::{Ctx, PartialCtx};
use super::model::{tuples, EventSystem, Value, VarType};
use super::{EgsError, PropertyError};

/// One instance of an event schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundEvent {
    pub schema: usize,
    pub args: Vec<u32>,
    /// Identity string, e.g. `In[g0,r0,k1]`.
    pub name: String,
}

/// Every schema instantiated over the product of its parameter sorts, in
/// schema order with the last parameter varying fastest.
pub fn ground(sys: &EventSystem) -> Vec<GroundEvent> {
    let mut out = Vec::new();
    for (i, schema) in sys.schemas.iter().enumerate() {
        let dims: Vec<usize> = schema
            .params
            .iter()
            .map(|(_, s)| sys.sorts[*s].consts.len())
            .collect();
        for args in tuples(&dims) {
            let names: Vec<&str> = schema
                .params
                .iter()
                .zip(&args)
                .map(|((_, s), &c)| sys.sorts[*s].consts[c as usize].as_str())
                .collect();
            out.push(GroundEvent {
                schema: i,
                name: format!("{}[{}]", schema.name, names.join(",")),
                args,
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct CompileOptions {
    /// Give deadlocked states an `idle[]` self-loop instead of failing.
    pub add_idle: bool,
    pub state_cap: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            add_idle: false,
            state_cap: 200_000,
        }
    }
}

/// Value of one variable cell in a state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellValue {
    Bool(bool),
    Const(String),
}

/// A compiled model: the LKS plus the valuation behind every state.
#[derive(Clone, Debug)]
pub struct CompiledModel {
    pub system: EventSystem,
    pub events: Vec<GroundEvent>,
    pub lks: TypedLks,
    pub valuations: Vec<Vec<u8>>,
    /// Whether the `idle[]` event was added.
    pub idle: bool,
}

impl CompiledModel {
    /// Cell names with their values at `s`, in declaration order.
    pub fn cell_values(&self, s: StateId) -> Vec<(String, CellValue)> {
        let sys = &self.system;
        let val = &self.valuations[s.index()];
        let mut out = Vec::with_capacity(val.len());
        for (vi, var) in sys.vars.iter().enumerate() {
            for (k, idx) in sys.cells(vi).into_iter().enumerate() {
                let v = val[var.offset + k];
                let value = match var.ty {
                    VarType::Bool => CellValue::Bool(v != 0),
                    VarType::Sort(so) => CellValue::Const(sys.sorts[so].consts[v as usize].clone()),
                };
                out.push((sys.cell_name(vi, &idx), value));
            }
        }
        out
    }

    /// Grounds the named model assertion into a formula over this model's
    /// propositions and events.
    pub fn assertion(&self, name: &str) -> Result<Formula, EgsError> {
        let a = self
            .system
            .assertion(name)
            .ok_or_else(|| EgsError::UnknownAssertion(name.to_string()))?;
        Ok(super::assert::ground_assertion(&self.system, &a.body))
    }

    /// Resolves `text` as the name of a model assertion, or else parses it
    /// as a formula; either way binds it to the model.
    pub fn property(&self, text: &str) -> Result<BoundFormula, PropertyError> {
        let text = text.trim();
        let f = match self.system.assertion(text) {
            Some(a) => super::assert::ground_assertion(&self.system, &a.body),
            None => parse_formula(text)?,
        };
        Ok(bind(&f, &self.lks)?)
    }
}

/// Proposition of every slot value: bool slots map to one proposition (for
/// `true`), sort slots to one per constant.
fn propositions(sys: &EventSystem, b: &mut LksBuilder) -> Vec<Vec<Option<PropId>>> {
    let mut by_slot = Vec::with_capacity(sys.num_slots());
    for (vi, var) in sys.vars.iter().enumerate() {
        for idx in sys.cells(vi) {
            let cell = sys.cell_name(vi, &idx);
            by_slot.push(match var.ty {
                VarType::Bool => vec![None, Some(b.prop(cell))],
                VarType::Sort(s) => sys.sorts[s]
                    .consts
                    .iter()
                    .map(|c| Some(b.prop(format!("{cell}={c}"))))
                    .collect(),
            });
        }
    }
    by_slot
}

/// All valuations satisfying `init`, in lexicographic order.
fn initial_valuations(sys: &EventSystem) -> Vec<Vec<u8>> {
    fn go(sys: &EventSystem, k: usize, partial: &mut Vec<Option<u8>>, out: &mut Vec<Vec<u8>>) {
        let verdict = PartialCtx {
            sys,
            val: partial,
            env: Vec::new(),
        }
        .eval(&sys.init);
        match verdict {
            Some(false) => return,
            Some(true) if k == partial.len() => {
                out.push(partial.iter().map(|v| v.unwrap()).collect());
                return;
            }
            _ => {}
        }
        if k == partial.len() {
            return;
        }
        for v in 0..sys.slot_domains[k] {
            partial[k] = Some(v as u8);
            go(sys, k + 1, partial, out);
        }
        partial[k] = None;
    }
    let mut out = Vec::new();
    go(sys, 0, &mut vec![None; sys.num_slots()], &mut out);
    out
}

/// Successor valuation of `val` under `ev`, or `None` when the event is
/// disabled (false guard, or an effect with no defined target or value).
fn fire(sys: &EventSystem, ev: &GroundEvent, val: &[u8]) -> Option<Vec<u8>> {
    let schema = &sys.schemas[ev.schema];
    let mut ctx = Ctx {
        sys,
        val,
        env: ev.args.clone(),
    };
    if !ctx.eval(&schema.guard) {
        return None;
    }
    let mut next = val.to_vec();
    for eff in &schema.effects {
        let dims: Vec<usize> = eff
            .binders
            .iter()
            .map(|s| sys.sorts[*s].consts.len())
            .collect();
        for binding in tuples(&dims) {
            ctx.env.truncate(ev.args.len());
            ctx.env.extend(binding);
            let idx: Vec<u32> = eff.idx.iter().map(|t| ctx.term(t)).collect::<Option<_>>()?;
            let slot = sys.slot(eff.var, &idx)?;
            next[slot] = match &eff.value {
                Value::Bool(b) => ctx.eval(b) as u8,
                Value::Term(t) => ctx.term(t)? as u8,
            };
        }
        ctx.env.truncate(ev.args.len());
    }
    Some(next)
}

/// Grounds `sys` and enumerates its reachable state space.
///
/// States are numbered breadth-first from the initial valuations in
/// lexicographic order; each state's events are tried in ground order.
pub fn compile_lks(sys: &EventSystem, opts: CompileOptions) -> Result<CompiledModel, EgsError> {
    let events = ground(sys);
    let mut b = LksBuilder::new();
    let props = propositions(sys, &mut b);
    let types: Vec<_> = sys.schemas.iter().map(|s| b.event_type(&s.name)).collect();
    let ids: Vec<EventId> = events
        .iter()
        .map(|ev| {
            let schema = &sys.schemas[ev.schema];
            let args = schema
                .params
                .iter()
                .zip(&ev.args)
                .map(|((_, s), &c)| sys.sorts[*s].consts[c as usize].clone())
                .collect();
            b.event(&schema.name, args, types[ev.schema])
        })
        .collect();

    let init = initial_valuations(sys);
    if init.is_empty() {
        return Err(EgsError::EmptyInitial);
    }
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut valuations: Vec<Vec<u8>> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |v: Vec<u8>, valuations: &mut Vec<Vec<u8>>, queue: &mut VecDeque<usize>| {
        if let Some(&i) = index.get(&v) {
            return Ok(i);
        }
        if valuations.len() >= opts.state_cap {
            return Err(EgsError::StateLimit(opts.state_cap));
        }
        let i = valuations.len();
        index.insert(v.clone(), i);
        valuations.push(v);
        queue.push_back(i);
        Ok(i)
    };
    for v in init.iter().cloned() {
        intern(v, &mut valuations, &mut queue)?;
    }
    let mut trans: Vec<(usize, EventId, usize)> = Vec::new();
    let mut deadlocked = Vec::new();
    while let Some(s) = queue.pop_front() {
        let before = trans.len();
        for (ev, &id) in events.iter().zip(&ids) {
            if let Some(next) = fire(sys, ev, &valuations[s]) {
                let t = intern(next, &mut valuations, &mut queue)?;
                trans.push((s, id, t));
            }
        }
        if trans.len() == before {
            deadlocked.push(s);
        }
    }

    if !deadlocked.is_empty() && !opts.add_idle {
        return Err(EgsError::Deadlock(
            deadlocked.iter().map(|s| format!("s{s}")).collect(),
        ));
    }
    let idle = !deadlocked.is_empty();
    if idle {
        let ty = b.event_type("Idle");
        let id = b.event("idle", Vec::new(), ty);
        trans.extend(deadlocked.iter().map(|&s| (s, id, s)));
    }
    for (i, val) in valuations.iter().enumerate() {
        let label: Vec<PropId> = val
            .iter()
            .zip(&props)
            .filter_map(|(&v, ps)| ps[v as usize])
            .collect();
        let s = b.state(format!("s{i}"), &label);
        if i < init.len() {
            b.initial(s);
        }
    }
    for (s, e, t) in trans {
        b.transition(StateId::from(s), e, StateId::from(t));
    }
    let lks = b.build().expect("compiled names are unique");
    Ok(CompiledModel {
        system: sys.clone(),
        events,
        lks,
        valuations,
        idle,
    })
}
