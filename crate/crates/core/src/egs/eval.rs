//! Concrete and three-valued evaluation of state expressions.

use super::model::{BExpr, EventSystem, Rel, Term};

fn rel(r: Rel, a: Option<u32>, b: Option<u32>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => match r {
            Rel::Eq => a == b,
            Rel::Ne => a != b,
            Rel::Lt => a < b,
            Rel::Le => a <= b,
        },
        // "none" compares unequal to everything, itself included.
        _ => r == Rel::Ne,
    }
}

fn step(up: bool, v: u32, size: u32) -> Option<u32> {
    if up {
        (v + 1 < size).then_some(v + 1)
    } else {
        v.checked_sub(1)
    }
}

/// Evaluation against a full valuation. `env` holds parameter and
/// quantifier values by slot.
pub struct Ctx<'a> {
    pub sys: &'a EventSystem,
    pub val: &'a [u8],
    pub env: Vec<u32>,
}

impl Ctx<'_> {
    pub fn term(&mut self, t: &Term) -> Option<u32> {
        match t {
            Term::Const(c) => Some(*c),
            Term::Slot(s) => Some(self.env[*s]),
            Term::Read { var, idx } => {
                let idx: Option<Vec<u32>> = idx.iter().map(|i| self.term(i)).collect();
                let slot = self.sys.slot(*var, &idx?)?;
                Some(self.val[slot] as u32)
            }
            Term::Step { up, arg, size } => step(*up, self.term(arg)?, *size),
        }
    }

    pub fn eval(&mut self, e: &BExpr) -> bool {
        match e {
            BExpr::Const(b) => *b,
            BExpr::Read { var, idx } => {
                let idx: Option<Vec<u32>> = idx.iter().map(|i| self.term(i)).collect();
                idx.and_then(|idx| self.sys.slot(*var, &idx))
                    .is_some_and(|slot| self.val[slot] != 0)
            }
            BExpr::Not(x) => !self.eval(x),
            BExpr::And(x, y) => self.eval(x) && self.eval(y),
            BExpr::Or(x, y) => self.eval(x) || self.eval(y),
            BExpr::Implies(x, y) => !self.eval(x) || self.eval(y),
            BExpr::Iff(x, y) => self.eval(x) == self.eval(y),
            BExpr::Cmp { rel: r, lhs, rhs } => {
                let a = self.term(lhs);
                let b = self.term(rhs);
                rel(*r, a, b)
            }
            BExpr::Quant {
                forall,
                slot,
                sort,
                body,
            } => {
                let n = self.sys.sorts[*sort].consts.len() as u32;
                debug_assert_eq!(*slot, self.env.len());
                self.env.push(0);
                let mut result = *forall;
                for c in 0..n {
                    self.env[*slot] = c;
                    if self.eval(body) != *forall {
                        result = !*forall;
                        break;
                    }
                }
                self.env.pop();
                result
            }
            _ => unreachable!("temporal operators are rejected outside assertions"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum TermVal {
    Unknown,
    Known(Option<u32>),
}

/// Kleene evaluation over a partial valuation; `None` means undetermined.
pub struct PartialCtx<'a> {
    pub sys: &'a EventSystem,
    pub val: &'a [Option<u8>],
    pub env: Vec<u32>,
}

impl PartialCtx<'_> {
    fn term(&mut self, t: &Term) -> TermVal {
        match t {
            Term::Const(c) => TermVal::Known(Some(*c)),
            Term::Slot(s) => TermVal::Known(Some(self.env[*s])),
            Term::Read { var, idx } => match self.indices(idx) {
                Err(v) => v,
                Ok(ix) => match self.sys.slot(*var, &ix) {
                    None => TermVal::Known(None),
                    Some(slot) => match self.val[slot] {
                        None => TermVal::Unknown,
                        Some(v) => TermVal::Known(Some(v as u32)),
                    },
                },
            },
            Term::Step { up, arg, size } => match self.term(arg) {
                TermVal::Known(Some(v)) => TermVal::Known(step(*up, v, *size)),
                other => other,
            },
        }
    }

    fn indices(&mut self, idx: &[Term]) -> Result<Vec<u32>, TermVal> {
        let mut ix = Vec::with_capacity(idx.len());
        for i in idx {
            match self.term(i) {
                TermVal::Known(Some(v)) => ix.push(v),
                other => return Err(other),
            }
        }
        Ok(ix)
    }

    pub fn eval(&mut self, e: &BExpr) -> Option<bool> {
        match e {
            BExpr::Const(b) => Some(*b),
            BExpr::Read { var, idx } => match self.indices(idx) {
                Err(TermVal::Unknown) => None,
                Err(_) => Some(false),
                Ok(ix) => match self.sys.slot(*var, &ix) {
                    None => Some(false),
                    Some(slot) => self.val[slot].map(|v| v != 0),
                },
            },
            BExpr::Not(x) => self.eval(x).map(|b| !b),
            BExpr::And(x, y) => match self.eval(x) {
                Some(false) => Some(false),
                a => match (a, self.eval(y)) {
                    (_, Some(false)) => Some(false),
                    (Some(true), Some(true)) => Some(true),
                    _ => None,
                },
            },
            BExpr::Or(x, y) => match self.eval(x) {
                Some(true) => Some(true),
                a => match (a, self.eval(y)) {
                    (_, Some(true)) => Some(true),
                    (Some(false), Some(false)) => Some(false),
                    _ => None,
                },
            },
            BExpr::Implies(x, y) => match self.eval(x) {
                Some(false) => Some(true),
                a => match (a, self.eval(y)) {
                    (_, Some(true)) => Some(true),
                    (Some(true), Some(false)) => Some(false),
                    _ => None,
                },
            },
            BExpr::Iff(x, y) => match (self.eval(x), self.eval(y)) {
                (Some(a), Some(b)) => Some(a == b),
                _ => None,
            },
            BExpr::Cmp { rel: r, lhs, rhs } => match (self.term(lhs), self.term(rhs)) {
                (TermVal::Known(a), TermVal::Known(b)) => Some(rel(*r, a, b)),
                _ => None,
            },
            BExpr::Quant {
                forall,
                slot,
                sort,
                body,
            } => {
                let n = self.sys.sorts[*sort].consts.len() as u32;
                self.env.push(0);
                let mut unknown = false;
                let mut decided = None;
                for c in 0..n {
                    self.env[*slot] = c;
                    match self.eval(body) {
                        None => unknown = true,
                        Some(b) if b != *forall => {
                            decided = Some(!*forall);
                            break;
                        }
                        Some(_) => {}
                    }
                }
                self.env.pop();
                match decided {
                    Some(b) => Some(b),
                    None if unknown => None,
                    None => Some(*forall),
                }
            }
            _ => unreachable!("temporal operators are rejected outside assertions"),
        }
    }
}
