//! Grounding of model assertions into SE-LTL.
//!
//! Quantifiers expand over their sorts. A term that reads state is split
//! into one case per value, guarded by the proposition `cell=value`.

use crate::seltl::{Atom, Formula};

use super::model::{BExpr, EventSystem, Rel, Term, VarType};

type F = Formula<Atom>;

fn and(a: F, b: F) -> F {
    match (a, b) {
        (F::True, x) | (x, F::True) => x,
        (a, b) if is_false(&a) || is_false(&b) => F::falsum(),
        (a, b) => F::and(a, b),
    }
}

fn not(a: F) -> F {
    match a {
        F::Not(x) => *x,
        x => F::not(x),
    }
}

fn or(a: F, b: F) -> F {
    if a == F::True || b == F::True {
        F::True
    } else if is_false(&a) {
        b
    } else if is_false(&b) {
        a
    } else {
        F::or(a, b)
    }
}

fn is_false(f: &F) -> bool {
    matches!(f, F::Not(x) if **x == F::True)
}

fn conj(parts: impl IntoIterator<Item = F>) -> F {
    parts.into_iter().fold(F::True, and)
}

fn disj(parts: impl IntoIterator<Item = F>) -> F {
    parts.into_iter().fold(F::falsum(), or)
}

struct Grounder<'a> {
    sys: &'a EventSystem,
    env: Vec<u32>,
}

impl Grounder<'_> {
    /// `(condition, value)` pairs covering every state; `None` when the
    /// term denotes no element.
    fn term(&mut self, t: &Term) -> Vec<(F, Option<u32>)> {
        match t {
            Term::Const(c) => vec![(F::True, Some(*c))],
            Term::Slot(s) => vec![(F::True, Some(self.env[*s]))],
            Term::Step { up, arg, size } => self
                .term(arg)
                .into_iter()
                .map(|(cond, v)| {
                    let v = v.and_then(|v| {
                        if *up {
                            (v + 1 < *size).then_some(v + 1)
                        } else {
                            v.checked_sub(1)
                        }
                    });
                    (cond, v)
                })
                .collect(),
            Term::Read { var, idx } => {
                let VarType::Sort(sort) = self.sys.vars[*var].ty else {
                    unreachable!("sort-valued read of a boolean variable")
                };
                let n = self.sys.sorts[sort].consts.len() as u32;
                let mut out = Vec::new();
                for (cond, cell) in self.cells(*var, idx) {
                    match cell {
                        None => out.push((cond, None)),
                        Some(name) => {
                            let consts = &self.sys.sorts[sort].consts;
                            for c in 0..n {
                                let lit =
                                    F::Atom(Atom::Prop(format!("{name}={}", consts[c as usize])));
                                out.push((and(cond.clone(), lit), Some(c)));
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// Cases for the cell `var[idx]`, each with its cell name or `None`
    /// when out of range.
    fn cells(&mut self, var: usize, idx: &[Term]) -> Vec<(F, Option<String>)> {
        let mut cases: Vec<(F, Option<Vec<u32>>)> = vec![(F::True, Some(Vec::new()))];
        for t in idx {
            let vals = self.term(t);
            let mut next = Vec::new();
            for (cond, prefix) in &cases {
                for (c2, v) in &vals {
                    let ix = match (prefix, v) {
                        (Some(p), Some(v)) => {
                            let mut p = p.clone();
                            p.push(*v);
                            Some(p)
                        }
                        _ => None,
                    };
                    next.push((and(cond.clone(), c2.clone()), ix));
                }
            }
            cases = next;
        }
        cases
            .into_iter()
            .map(|(cond, ix)| {
                let name = ix
                    .filter(|ix| self.sys.slot(var, ix).is_some())
                    .map(|ix| self.sys.cell_name(var, &ix));
                (cond, name)
            })
            .collect()
    }

    fn formula(&mut self, e: &BExpr) -> F {
        match e {
            BExpr::Const(true) => F::True,
            BExpr::Const(false) => F::falsum(),
            BExpr::Read { var, idx } => disj(self.cells(*var, idx).into_iter().map(
                |(cond, cell)| match cell {
                    Some(name) => and(cond, F::Atom(Atom::Prop(name))),
                    None => F::falsum(),
                },
            )),
            BExpr::Not(x) => not(self.formula(x)),
            BExpr::And(x, y) => and(self.formula(x), self.formula(y)),
            BExpr::Or(x, y) => or(self.formula(x), self.formula(y)),
            BExpr::Implies(x, y) => or(not(self.formula(x)), self.formula(y)),
            BExpr::Iff(x, y) => {
                let (a, b) = (self.formula(x), self.formula(y));
                and(or(not(a.clone()), b.clone()), or(not(b), a))
            }
            BExpr::Cmp { rel, lhs, rhs } => {
                let l = self.term(lhs);
                let r = self.term(rhs);
                let mut parts = Vec::new();
                for (c1, a) in &l {
                    for (c2, b) in &r {
                        let holds = match (a, b) {
                            (Some(a), Some(b)) => match rel {
                                Rel::Eq => a == b,
                                Rel::Ne => a != b,
                                Rel::Lt => a < b,
                                Rel::Le => a <= b,
                            },
                            _ => *rel == Rel::Ne,
                        };
                        if holds {
                            parts.push(and(c1.clone(), c2.clone()));
                        }
                    }
                }
                disj(parts)
            }
            BExpr::Quant {
                forall,
                slot,
                sort,
                body,
            } => {
                let n = self.sys.sorts[*sort].consts.len() as u32;
                self.env.push(0);
                let parts: Vec<F> = (0..n)
                    .map(|c| {
                        self.env[*slot] = c;
                        self.formula(body)
                    })
                    .collect();
                self.env.pop();
                if *forall {
                    conj(parts)
                } else {
                    disj(parts)
                }
            }
            BExpr::Event { schema, args } => {
                let sch = &self.sys.schemas[*schema];
                let mut cases: Vec<(F, Option<Vec<String>>)> = vec![(F::True, Some(Vec::new()))];
                for (t, (_, sort)) in args.iter().zip(&sch.params) {
                    let vals = self.term(t);
                    let mut next = Vec::new();
                    for (cond, prefix) in &cases {
                        for (c2, v) in &vals {
                            let names = match (prefix, v) {
                                (Some(p), Some(v)) => {
                                    let mut p = p.clone();
                                    p.push(self.sys.sorts[*sort].consts[*v as usize].clone());
                                    Some(p)
                                }
                                _ => None,
                            };
                            next.push((and(cond.clone(), c2.clone()), names));
                        }
                    }
                    cases = next;
                }
                disj(cases.into_iter().map(|(cond, names)| match names {
                    Some(names) => and(
                        cond,
                        F::Atom(Atom::Event(format!("{}[{}]", sch.name, names.join(",")))),
                    ),
                    None => F::falsum(),
                }))
            }
            BExpr::Type { schema } => F::Atom(Atom::Type(self.sys.schemas[*schema].name.clone())),
            BExpr::Always(x) => F::globally(self.formula(x)),
            BExpr::Eventually(x) => F::finally(self.formula(x)),
            BExpr::After(x) => F::next(self.formula(x)),
            BExpr::Until(x, y) => F::until(self.formula(x), self.formula(y)),
        }
    }
}

pub(super) fn ground_assertion(sys: &EventSystem, body: &BExpr) -> F {
    Grounder {
        sys,
        env: Vec::new(),
    }
    .formula(body)
}
