//! Typed form of an event system and its checker.

use std::collections::HashMap;

use super::syntax::{self, CmpOp, Expr, ExprKind, Ident, Item, ModelAst, Span};
use super::EgsError;

pub type SortId = usize;
pub type VarId = usize;

#[derive(Clone, Debug)]
pub struct Sort {
    pub name: String,
    pub consts: Vec<String>,
    pub ordered: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarType {
    Bool,
    Sort(SortId),
}

#[derive(Clone, Debug)]
pub struct Var {
    pub name: String,
    pub dims: Vec<SortId>,
    pub ty: VarType,
    /// First slot of this variable in a valuation.
    pub offset: usize,
    pub cells: usize,
}

/// Sort-valued expression. Evaluates to `None` when it denotes no element,
/// e.g. `next` of the last constant.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Const(u32),
    /// Environment slot (event parameter or quantified variable).
    Slot(usize),
    Read {
        var: VarId,
        idx: Vec<Term>,
    },
    /// `next`/`prev` within a sort of `size` constants.
    Step {
        up: bool,
        arg: Box<Term>,
        size: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Ne,
    Lt,
    Le,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BExpr {
    Const(bool),
    Read {
        var: VarId,
        idx: Vec<Term>,
    },
    Not(Box<BExpr>),
    And(Box<BExpr>, Box<BExpr>),
    Or(Box<BExpr>, Box<BExpr>),
    Implies(Box<BExpr>, Box<BExpr>),
    Iff(Box<BExpr>, Box<BExpr>),
    Cmp {
        rel: Rel,
        lhs: Term,
        rhs: Term,
    },
    Quant {
        forall: bool,
        slot: usize,
        sort: SortId,
        body: Box<BExpr>,
    },
    // Only in assertions:
    Event {
        schema: usize,
        args: Vec<Term>,
    },
    Type {
        schema: usize,
    },
    Always(Box<BExpr>),
    Eventually(Box<BExpr>),
    After(Box<BExpr>),
    Until(Box<BExpr>, Box<BExpr>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Bool(BExpr),
    Term(Term),
}

#[derive(Clone, Debug)]
pub struct Effect {
    /// Sorts of `forall` binders; they occupy the slots after the parameters.
    pub binders: Vec<SortId>,
    pub var: VarId,
    pub idx: Vec<Term>,
    pub value: Value,
}

#[derive(Clone, Debug)]
pub struct EventSchema {
    pub name: String,
    pub params: Vec<(String, SortId)>,
    pub modifies: Vec<VarId>,
    pub guard: BExpr,
    pub effects: Vec<Effect>,
}

#[derive(Clone, Debug)]
pub struct Assertion {
    pub name: String,
    pub body: BExpr,
}

/// A checked event system: sorts, state variables, an initial constraint and
/// parametrised event schemas.
#[derive(Clone, Debug)]
pub struct EventSystem {
    pub name: String,
    pub sorts: Vec<Sort>,
    pub vars: Vec<Var>,
    pub init: BExpr,
    pub schemas: Vec<EventSchema>,
    pub assertions: Vec<Assertion>,
    /// Sort of every slot in a valuation.
    pub slot_domains: Vec<u32>,
}

impl EventSystem {
    pub fn num_slots(&self) -> usize {
        self.slot_domains.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn schema_by_name(&self, name: &str) -> Option<usize> {
        self.schemas.iter().position(|s| s.name == name)
    }

    /// Slot index of `var[idx]`, or `None` when an index is out of range.
    pub fn slot(&self, var: VarId, idx: &[u32]) -> Option<usize> {
        let v = &self.vars[var];
        let mut lin = 0usize;
        for (d, &i) in v.dims.iter().zip(idx) {
            let size = self.sorts[*d].consts.len();
            if i as usize >= size {
                return None;
            }
            lin = lin * size + i as usize;
        }
        Some(v.offset + lin)
    }

    /// `name[c1][c2]` for a cell of `var`.
    pub fn cell_name(&self, var: VarId, idx: &[u32]) -> String {
        let v = &self.vars[var];
        let mut s = v.name.clone();
        for (d, &i) in v.dims.iter().zip(idx) {
            s.push('[');
            s.push_str(&self.sorts[*d].consts[i as usize]);
            s.push(']');
        }
        s
    }

    /// Index tuples of every cell of `var`, in slot order.
    pub fn cells(&self, var: VarId) -> Vec<Vec<u32>> {
        let dims: Vec<usize> = self.vars[var]
            .dims
            .iter()
            .map(|d| self.sorts[*d].consts.len())
            .collect();
        tuples(&dims)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }
}

/// All tuples over `0..dims[k]`, last coordinate fastest.
pub fn tuples(dims: &[usize]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &d in dims {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..d as u32).map(move |c| {
                    let mut t = t.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
    }
    out
}

enum Typed {
    Bool(BExpr),
    Term(Term, SortId),
}

struct Checker {
    sorts: Vec<Sort>,
    sort_ids: HashMap<String, SortId>,
    consts: HashMap<String, (SortId, u32)>,
    vars: Vec<Var>,
    var_ids: HashMap<String, VarId>,
    schema_ids: HashMap<String, usize>,
    schema_params: Vec<Vec<SortId>>,
    scope: Vec<(String, SortId)>,
    temporal: bool,
}

fn type_err(span: Span, msg: impl Into<String>) -> EgsError {
    EgsError::Type {
        line: span.line,
        column: span.column,
        message: msg.into(),
    }
}

impl Checker {
    fn sort(&self, id: &Ident) -> Result<SortId, EgsError> {
        self.sort_ids
            .get(&id.name)
            .copied()
            .ok_or_else(|| type_err(id.span, format!("unknown sort `{}`", id.name)))
    }

    fn bexpr(&mut self, e: &Expr) -> Result<BExpr, EgsError> {
        match self.infer(e)? {
            Typed::Bool(b) => Ok(b),
            Typed::Term(_, s) => Err(type_err(
                e.span,
                format!("expected a boolean, found a `{}` value", self.sorts[s].name),
            )),
        }
    }

    fn term(&mut self, e: &Expr) -> Result<(Term, SortId), EgsError> {
        match self.infer(e)? {
            Typed::Term(t, s) => Ok((t, s)),
            Typed::Bool(_) => Err(type_err(e.span, "expected a sort value, found a boolean")),
        }
    }

    fn term_of(&mut self, e: &Expr, want: SortId) -> Result<Term, EgsError> {
        let (t, s) = self.term(e)?;
        if s != want {
            return Err(type_err(
                e.span,
                format!(
                    "expected a `{}` value, found `{}`",
                    self.sorts[want].name, self.sorts[s].name
                ),
            ));
        }
        Ok(t)
    }

    fn indices(&mut self, var: VarId, idx: &[Expr], span: Span) -> Result<Vec<Term>, EgsError> {
        let dims = self.vars[var].dims.clone();
        if dims.len() != idx.len() {
            return Err(type_err(
                span,
                format!(
                    "`{}` takes {} index(es), found {}",
                    self.vars[var].name,
                    dims.len(),
                    idx.len()
                ),
            ));
        }
        dims.iter()
            .zip(idx)
            .map(|(&d, e)| self.term_of(e, d))
            .collect()
    }

    fn bind<T>(
        &mut self,
        var: &Ident,
        sort: SortId,
        f: impl FnOnce(&mut Self) -> Result<T, EgsError>,
    ) -> Result<(usize, T), EgsError> {
        let slot = self.scope.len();
        self.scope.push((var.name.clone(), sort));
        let r = f(self);
        self.scope.pop();
        Ok((slot, r?))
    }

    fn temporal_only(&self, span: Span, what: &str) -> Result<(), EgsError> {
        if self.temporal {
            Ok(())
        } else {
            Err(type_err(
                span,
                format!("{what} is only allowed in assertions"),
            ))
        }
    }

    fn infer(&mut self, e: &Expr) -> Result<Typed, EgsError> {
        fn bx<T>(t: T) -> Box<T> {
            Box::new(t)
        }
        Ok(match &e.kind {
            ExprKind::Bool(b) => Typed::Bool(BExpr::Const(*b)),
            ExprKind::Name { name, indices } => {
                if indices.is_empty() {
                    if let Some(pos) = self.scope.iter().rposition(|(n, _)| n == name) {
                        return Ok(Typed::Term(Term::Slot(pos), self.scope[pos].1));
                    }
                }
                if let Some(&var) = self.var_ids.get(name) {
                    let idx = self.indices(var, indices, e.span)?;
                    return Ok(match self.vars[var].ty {
                        VarType::Bool => Typed::Bool(BExpr::Read { var, idx }),
                        VarType::Sort(s) => Typed::Term(Term::Read { var, idx }, s),
                    });
                }
                if let Some(&(sort, c)) = self.consts.get(name) {
                    if !indices.is_empty() {
                        return Err(type_err(
                            e.span,
                            format!("constant `{name}` cannot be indexed"),
                        ));
                    }
                    return Ok(Typed::Term(Term::Const(c), sort));
                }
                return Err(type_err(e.span, format!("unknown name `{name}`")));
            }
            ExprKind::Step { up, arg } => {
                let (t, s) = self.term(arg)?;
                if !self.sorts[s].ordered {
                    return Err(type_err(
                        e.span,
                        format!("sort `{}` is not ordered", self.sorts[s].name),
                    ));
                }
                Typed::Term(
                    Term::Step {
                        up: *up,
                        arg: bx(t),
                        size: self.sorts[s].consts.len() as u32,
                    },
                    s,
                )
            }
            ExprKind::Extreme { max, sort } => {
                let s = self.sort(sort)?;
                if !self.sorts[s].ordered {
                    return Err(type_err(
                        e.span,
                        format!("sort `{}` is not ordered", self.sorts[s].name),
                    ));
                }
                let c = if *max {
                    self.sorts[s].consts.len() as u32 - 1
                } else {
                    0
                };
                Typed::Term(Term::Const(c), s)
            }
            ExprKind::Not(x) => Typed::Bool(BExpr::Not(bx(self.bexpr(x)?))),
            ExprKind::And(x, y) => Typed::Bool(BExpr::And(bx(self.bexpr(x)?), bx(self.bexpr(y)?))),
            ExprKind::Or(x, y) => Typed::Bool(BExpr::Or(bx(self.bexpr(x)?), bx(self.bexpr(y)?))),
            ExprKind::Implies(x, y) => {
                Typed::Bool(BExpr::Implies(bx(self.bexpr(x)?), bx(self.bexpr(y)?)))
            }
            ExprKind::Cmp { op, lhs, rhs } => {
                let l = self.infer(lhs)?;
                let r = self.infer(rhs)?;
                match (l, r) {
                    (Typed::Bool(a), Typed::Bool(b)) => match op {
                        CmpOp::Eq => Typed::Bool(BExpr::Iff(bx(a), bx(b))),
                        CmpOp::Ne => Typed::Bool(BExpr::Not(bx(BExpr::Iff(bx(a), bx(b))))),
                        _ => return Err(type_err(e.span, "booleans are not ordered")),
                    },
                    (Typed::Term(a, sa), Typed::Term(b, sb)) => {
                        if sa != sb {
                            return Err(type_err(
                                e.span,
                                format!(
                                    "cannot compare `{}` with `{}`",
                                    self.sorts[sa].name, self.sorts[sb].name
                                ),
                            ));
                        }
                        let ordered = !matches!(op, CmpOp::Eq | CmpOp::Ne);
                        if ordered && !self.sorts[sa].ordered {
                            return Err(type_err(
                                e.span,
                                format!("sort `{}` is not ordered", self.sorts[sa].name),
                            ));
                        }
                        let (rel, lhs, rhs) = match op {
                            CmpOp::Eq => (Rel::Eq, a, b),
                            CmpOp::Ne => (Rel::Ne, a, b),
                            CmpOp::Lt => (Rel::Lt, a, b),
                            CmpOp::Le => (Rel::Le, a, b),
                            CmpOp::Gt => (Rel::Lt, b, a),
                            CmpOp::Ge => (Rel::Le, b, a),
                        };
                        Typed::Bool(BExpr::Cmp { rel, lhs, rhs })
                    }
                    _ => {
                        return Err(type_err(
                            e.span,
                            "cannot compare a boolean with a sort value",
                        ))
                    }
                }
            }
            ExprKind::Quant {
                forall,
                var,
                sort,
                body,
            } => {
                let s = self.sort(sort)?;
                let (slot, body) = self.bind(var, s, |c| c.bexpr(body))?;
                Typed::Bool(BExpr::Quant {
                    forall: *forall,
                    slot,
                    sort: s,
                    body: bx(body),
                })
            }
            ExprKind::EventAtom { name, args } => {
                self.temporal_only(e.span, "an event atom")?;
                let schema = *self
                    .schema_ids
                    .get(&name.name)
                    .ok_or_else(|| type_err(name.span, format!("unknown event `{}`", name.name)))?;
                match args {
                    None => Typed::Bool(BExpr::Type { schema }),
                    Some(args) => {
                        let params = self.schema_params[schema].clone();
                        if params.len() != args.len() {
                            return Err(type_err(
                                e.span,
                                format!(
                                    "event `{}` takes {} argument(s), found {}",
                                    name.name,
                                    params.len(),
                                    args.len()
                                ),
                            ));
                        }
                        let args = params
                            .iter()
                            .zip(args)
                            .map(|(&s, a)| self.term_of(a, s))
                            .collect::<Result<_, _>>()?;
                        Typed::Bool(BExpr::Event { schema, args })
                    }
                }
            }
            ExprKind::Always(x) => {
                self.temporal_only(e.span, "`always`")?;
                Typed::Bool(BExpr::Always(bx(self.bexpr(x)?)))
            }
            ExprKind::Eventually(x) => {
                self.temporal_only(e.span, "`eventually`")?;
                Typed::Bool(BExpr::Eventually(bx(self.bexpr(x)?)))
            }
            ExprKind::After(x) => {
                self.temporal_only(e.span, "`after`")?;
                Typed::Bool(BExpr::After(bx(self.bexpr(x)?)))
            }
            ExprKind::Until(x, y) => {
                self.temporal_only(e.span, "`until`")?;
                Typed::Bool(BExpr::Until(bx(self.bexpr(x)?), bx(self.bexpr(y)?)))
            }
        })
    }
}

pub(crate) fn check(ast: &ModelAst) -> Result<EventSystem, EgsError> {
    let mut c = Checker {
        sorts: Vec::new(),
        sort_ids: HashMap::new(),
        consts: HashMap::new(),
        vars: Vec::new(),
        var_ids: HashMap::new(),
        schema_ids: HashMap::new(),
        schema_params: Vec::new(),
        scope: Vec::new(),
        temporal: false,
    };
    let mut taken: HashMap<String, Span> = HashMap::new();
    let mut claim = |id: &Ident| -> Result<(), EgsError> {
        if let Some(prev) = taken.insert(id.name.clone(), id.span) {
            return Err(type_err(
                id.span,
                format!(
                    "`{}` is already declared at {}:{}",
                    id.name, prev.line, prev.column
                ),
            ));
        }
        Ok(())
    };

    // Declarations first so that items may refer to each other in any order.
    let mut slot_domains = Vec::new();
    for item in &ast.items {
        match item {
            Item::Sort(s) => {
                claim(&s.name)?;
                for k in &s.consts {
                    claim(k)?;
                }
                if s.consts.len() > 255 {
                    return Err(type_err(
                        s.name.span,
                        "a sort may have at most 255 constants",
                    ));
                }
                let id = c.sorts.len();
                for (i, k) in s.consts.iter().enumerate() {
                    c.consts.insert(k.name.clone(), (id, i as u32));
                }
                c.sort_ids.insert(s.name.name.clone(), id);
                c.sorts.push(Sort {
                    name: s.name.name.clone(),
                    consts: s.consts.iter().map(|k| k.name.clone()).collect(),
                    ordered: s.ordered,
                });
            }
            Item::Event(ev) => {
                claim(&ev.name)?;
                c.schema_ids
                    .insert(ev.name.name.clone(), c.schema_params.len());
                c.schema_params.push(Vec::new());
            }
            Item::Assert(a) => claim(&a.name)?,
            _ => {}
        }
    }
    for item in &ast.items {
        if let Item::Var(v) = item {
            claim(&v.name)?;
            let dims = v
                .dims
                .iter()
                .map(|d| c.sort(d))
                .collect::<Result<Vec<_>, _>>()?;
            let ty = match &v.sort {
                None => VarType::Bool,
                Some(s) => VarType::Sort(c.sort(s)?),
            };
            let cells: usize = dims.iter().map(|d| c.sorts[*d].consts.len()).product();
            let domain = match ty {
                VarType::Bool => 2,
                VarType::Sort(s) => c.sorts[s].consts.len() as u32,
            };
            let offset = slot_domains.len();
            slot_domains.extend(std::iter::repeat_n(domain, cells));
            c.var_ids.insert(v.name.name.clone(), c.vars.len());
            c.vars.push(Var {
                name: v.name.name.clone(),
                dims,
                ty,
                offset,
                cells,
            });
        }
    }
    for item in &ast.items {
        if let Item::Event(ev) = item {
            let params = ev
                .params
                .iter()
                .map(|(_, s)| c.sort(s))
                .collect::<Result<Vec<_>, _>>()?;
            c.schema_params[c.schema_ids[&ev.name.name]] = params;
        }
    }

    let mut init = None;
    let mut schemas = Vec::new();
    let mut assertions = Vec::new();
    for item in &ast.items {
        match item {
            Item::Init(e) => {
                let b = c.bexpr(e)?;
                init = Some(match init {
                    None => b,
                    Some(prev) => BExpr::And(Box::new(prev), Box::new(b)),
                });
            }
            Item::Event(ev) => schemas.push(check_event(&mut c, ev)?),
            Item::Assert(a) => {
                c.temporal = true;
                let body = c.bexpr(&a.body);
                c.temporal = false;
                assertions.push(Assertion {
                    name: a.name.name.clone(),
                    body: body?,
                });
            }
            _ => {}
        }
    }
    if c.vars.is_empty() || schemas.is_empty() {
        return Err(EgsError::Empty);
    }
    Ok(EventSystem {
        name: ast.name.name.clone(),
        sorts: c.sorts,
        vars: c.vars,
        init: init.unwrap_or(BExpr::Const(true)),
        schemas,
        assertions,
        slot_domains,
    })
}

fn check_event(c: &mut Checker, ev: &syntax::EventDecl) -> Result<EventSchema, EgsError> {
    let mut params = Vec::new();
    for (name, sort) in &ev.params {
        if params.iter().any(|(n, _)| n == &name.name) {
            return Err(type_err(
                name.span,
                format!("duplicate parameter `{}`", name.name),
            ));
        }
        params.push((name.name.clone(), c.sort(sort)?));
    }
    let mut modifies = Vec::new();
    for m in &ev.modifies {
        let v = *c
            .var_ids
            .get(&m.name)
            .ok_or_else(|| type_err(m.span, format!("unknown variable `{}`", m.name)))?;
        modifies.push(v);
    }
    debug_assert!(c.scope.is_empty());
    c.scope = params.clone();
    let result = (|| {
        let guard = c.bexpr(&ev.guard)?;
        let mut effects = Vec::new();
        for eff in &ev.effects {
            let var = *c.var_ids.get(&eff.target.name).ok_or_else(|| {
                type_err(
                    eff.target.span,
                    format!("unknown variable `{}`", eff.target.name),
                )
            })?;
            if !modifies.contains(&var) {
                return Err(EgsError::FrameViolation {
                    line: eff.target.span.line,
                    column: eff.target.span.column,
                    var: eff.target.name.clone(),
                    event: ev.name.name.clone(),
                });
            }
            let depth = c.scope.len();
            let mut binders = Vec::new();
            for (v, s) in &eff.binders {
                let s = c.sort(s)?;
                c.scope.push((v.name.clone(), s));
                binders.push(s);
            }
            let r = (|| {
                let idx = c.indices(var, &eff.indices, eff.target.span)?;
                let value = match c.vars[var].ty {
                    VarType::Bool => Value::Bool(c.bexpr(&eff.value)?),
                    VarType::Sort(s) => Value::Term(c.term_of(&eff.value, s)?),
                };
                Ok((idx, value))
            })();
            c.scope.truncate(depth);
            let (idx, value) = r?;
            effects.push(Effect {
                binders,
                var,
                idx,
                value,
            });
        }
        Ok((guard, effects))
    })();
    c.scope.clear();
    let (guard, effects) = result?;
    Ok(EventSchema {
        name: ev.name.name.clone(),
        params,
        modifies,
        guard,
        effects,
    })
}
