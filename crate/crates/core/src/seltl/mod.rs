//! State/event LTL: syntax, binding against a model, negation normal form and
//! a direct evaluator over lassos.

mod eval;
mod parser;

use std::fmt;

use thiserror::Error;

use crate::lks::{EventId, PropId, TypeId, TypedLks};

pub use eval::eval_lasso;
pub use parser::{parse_formula, ParseError};

/// Unresolved atom, as written in source text.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Prop(String),
    /// Ground event identity, e.g. `In[g0,r0,k1]` or `Stay[]`.
    Event(String),
    Type(String),
}

/// Atom resolved to ids of a particular model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundAtom {
    Prop(PropId),
    Event(EventId),
    Type(TypeId),
}

/// SE-LTL formula over atoms of type `A`.
///
/// Disjunction, implication and falsity are not constructors; the helper
/// functions below desugar them.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula<A = Atom> {
    True,
    Atom(A),
    Not(Box<Formula<A>>),
    And(Box<Formula<A>>, Box<Formula<A>>),
    Next(Box<Formula<A>>),
    Globally(Box<Formula<A>>),
    Finally(Box<Formula<A>>),
    Until(Box<Formula<A>>, Box<Formula<A>>),
}

pub type BoundFormula = Formula<BoundAtom>;

impl<A> Formula<A> {
    pub fn atom(a: A) -> Self {
        Formula::Atom(a)
    }

    pub fn falsum() -> Self {
        Formula::Not(Box::new(Formula::True))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Self) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Self, b: Self) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Self, b: Self) -> Self {
        Self::not(Self::and(Self::not(a), Self::not(b)))
    }

    pub fn implies(a: Self, b: Self) -> Self {
        Self::not(Self::and(a, Self::not(b)))
    }

    pub fn next(f: Self) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn globally(f: Self) -> Self {
        Formula::Globally(Box::new(f))
    }

    pub fn finally(f: Self) -> Self {
        Formula::Finally(Box::new(f))
    }

    pub fn until(a: Self, b: Self) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction of `parts`; `true` when empty.
    pub fn conj(parts: impl IntoIterator<Item = Self>) -> Self {
        parts.into_iter().reduce(Self::and).unwrap_or(Formula::True)
    }

    /// Left-nested disjunction of `parts`; `false` when empty.
    pub fn disj(parts: impl IntoIterator<Item = Self>) -> Self {
        parts
            .into_iter()
            .reduce(Self::or)
            .unwrap_or_else(Self::falsum)
    }

    pub fn map_atoms<B, E>(&self, f: &mut impl FnMut(&A) -> Result<B, E>) -> Result<Formula<B>, E> {
        Ok(match self {
            Formula::True => Formula::True,
            Formula::Atom(a) => Formula::Atom(f(a)?),
            Formula::Not(x) => Formula::not(x.map_atoms(f)?),
            Formula::And(x, y) => Formula::and(x.map_atoms(f)?, y.map_atoms(f)?),
            Formula::Next(x) => Formula::next(x.map_atoms(f)?),
            Formula::Globally(x) => Formula::globally(x.map_atoms(f)?),
            Formula::Finally(x) => Formula::finally(x.map_atoms(f)?),
            Formula::Until(x, y) => Formula::until(x.map_atoms(f)?, y.map_atoms(f)?),
        })
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::Atom(_) => 0,
            Formula::Not(x) | Formula::Next(x) | Formula::Globally(x) | Formula::Finally(x) => {
                1 + x.depth()
            }
            Formula::And(x, y) | Formula::Until(x, y) => 1 + x.depth().max(y.depth()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BindError {
    #[error("unknown atoms: {}", .0.join(", "))]
    UnknownAtoms(Vec<String>),
}

impl BindError {
    pub fn names(&self) -> &[String] {
        match self {
            BindError::UnknownAtoms(v) => v,
        }
    }
}

/// Resolves every atom against `lks`, reporting all unresolved names at once.
pub fn bind(f: &Formula, lks: &TypedLks) -> Result<BoundFormula, BindError> {
    let mut missing = Vec::new();
    let bound = f
        .map_atoms(&mut |a| -> Result<BoundAtom, ()> {
            let hit = match a {
                Atom::Prop(p) => lks.find_prop(p).map(BoundAtom::Prop),
                Atom::Event(e) => lks.find_event(e).map(BoundAtom::Event),
                Atom::Type(t) => lks.find_type(t).map(BoundAtom::Type),
            };
            Ok(hit.unwrap_or_else(|| {
                let name = match a {
                    Atom::Prop(p) => p.clone(),
                    Atom::Event(e) | Atom::Type(e) => format!("@{e}"),
                };
                if !missing.contains(&name) {
                    missing.push(name);
                }
                BoundAtom::Prop(PropId(u32::MAX))
            }))
        })
        .expect("binding is infallible per atom");
    if missing.is_empty() {
        Ok(bound)
    } else {
        Err(BindError::UnknownAtoms(missing))
    }
}

/// Names the atoms of a bound formula again, for printing.
pub fn unbind(f: &BoundFormula, lks: &TypedLks) -> Formula {
    f.map_atoms(&mut |a| -> Result<Atom, ()> {
        Ok(match *a {
            BoundAtom::Prop(p) => Atom::Prop(lks.prop_name(p).to_string()),
            BoundAtom::Event(e) => Atom::Event(lks.event(e).name.clone()),
            BoundAtom::Type(t) => Atom::Type(lks.type_name(t).to_string()),
        })
    })
    .expect("unbinding is infallible")
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Prop(p) => f.write_str(p),
            Atom::Event(e) | Atom::Type(e) => write!(f, "@{e}"),
        }
    }
}

// Binding strength used by the printer; mirrors the parser.
const PREC_IMPLIES: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNTIL: u8 = 4;
const PREC_UNARY: u8 = 5;
const PREC_ATOM: u8 = 6;

enum View<'a, A> {
    Falsum,
    Or(&'a Formula<A>, &'a Formula<A>),
    Implies(&'a Formula<A>, &'a Formula<A>),
    Plain,
}

fn view<A>(f: &Formula<A>) -> View<'_, A> {
    if let Formula::Not(inner) = f {
        match inner.as_ref() {
            Formula::True => return View::Falsum,
            Formula::And(l, r) => match (l.as_ref(), r.as_ref()) {
                (Formula::Not(a), Formula::Not(b)) => return View::Or(a, b),
                (a, Formula::Not(b)) => return View::Implies(a, b),
                _ => {}
            },
            _ => {}
        }
    }
    View::Plain
}

fn prec<A>(f: &Formula<A>) -> u8 {
    match view(f) {
        View::Falsum => PREC_ATOM,
        View::Or(..) => PREC_OR,
        View::Implies(..) => PREC_IMPLIES,
        View::Plain => match f {
            Formula::True | Formula::Atom(_) => PREC_ATOM,
            Formula::Not(_) | Formula::Next(_) | Formula::Globally(_) | Formula::Finally(_) => {
                PREC_UNARY
            }
            Formula::And(..) => PREC_AND,
            Formula::Until(..) => PREC_UNTIL,
        },
    }
}

fn write_sub<A: fmt::Display>(f: &mut fmt::Formatter<'_>, g: &Formula<A>, min: u8) -> fmt::Result {
    if prec(g) < min {
        write!(f, "({g})")
    } else {
        write!(f, "{g}")
    }
}

impl<A: fmt::Display> fmt::Display for Formula<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match view(self) {
            View::Falsum => return f.write_str("false"),
            View::Or(a, b) => {
                write_sub(f, a, PREC_OR)?;
                f.write_str(" || ")?;
                return write_sub(f, b, PREC_OR + 1);
            }
            View::Implies(a, b) => {
                write_sub(f, a, PREC_IMPLIES + 1)?;
                f.write_str(" -> ")?;
                return write_sub(f, b, PREC_IMPLIES);
            }
            View::Plain => {}
        }
        match self {
            Formula::True => f.write_str("true"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(x) => {
                f.write_str("!")?;
                write_sub(f, x, PREC_UNARY)
            }
            Formula::Next(x) => {
                f.write_str("X ")?;
                write_sub(f, x, PREC_UNARY)
            }
            Formula::Globally(x) => {
                f.write_str("G ")?;
                write_sub(f, x, PREC_UNARY)
            }
            Formula::Finally(x) => {
                f.write_str("F ")?;
                write_sub(f, x, PREC_UNARY)
            }
            Formula::And(x, y) => {
                write_sub(f, x, PREC_AND)?;
                f.write_str(" && ")?;
                write_sub(f, y, PREC_AND + 1)
            }
            Formula::Until(x, y) => {
                write_sub(f, x, PREC_UNTIL + 1)?;
                f.write_str(" U ")?;
                write_sub(f, y, PREC_UNTIL)
            }
        }
    }
}

/// Negation normal form. `Release` only exists here.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Nnf<A = BoundAtom> {
    True,
    False,
    Lit(A, bool),
    And(Box<Nnf<A>>, Box<Nnf<A>>),
    Or(Box<Nnf<A>>, Box<Nnf<A>>),
    Next(Box<Nnf<A>>),
    Globally(Box<Nnf<A>>),
    Finally(Box<Nnf<A>>),
    Until(Box<Nnf<A>>, Box<Nnf<A>>),
    Release(Box<Nnf<A>>, Box<Nnf<A>>),
}

/// Pushes negations down to the atoms.
pub fn nnf<A: Clone>(f: &Formula<A>) -> Nnf<A> {
    to_nnf(f, true)
}

fn to_nnf<A: Clone>(f: &Formula<A>, pos: bool) -> Nnf<A> {
    let b = |x: Nnf<A>| Box::new(x);
    match (f, pos) {
        (Formula::True, true) => Nnf::True,
        (Formula::True, false) => Nnf::False,
        (Formula::Atom(a), p) => Nnf::Lit(a.clone(), p),
        (Formula::Not(x), p) => to_nnf(x, !p),
        (Formula::And(x, y), true) => Nnf::And(b(to_nnf(x, true)), b(to_nnf(y, true))),
        (Formula::And(x, y), false) => Nnf::Or(b(to_nnf(x, false)), b(to_nnf(y, false))),
        (Formula::Next(x), p) => Nnf::Next(b(to_nnf(x, p))),
        (Formula::Globally(x), true) => Nnf::Globally(b(to_nnf(x, true))),
        (Formula::Globally(x), false) => Nnf::Finally(b(to_nnf(x, false))),
        (Formula::Finally(x), true) => Nnf::Finally(b(to_nnf(x, true))),
        (Formula::Finally(x), false) => Nnf::Globally(b(to_nnf(x, false))),
        (Formula::Until(x, y), true) => Nnf::Until(b(to_nnf(x, true)), b(to_nnf(y, true))),
        (Formula::Until(x, y), false) => Nnf::Release(b(to_nnf(x, false)), b(to_nnf(y, false))),
    }
}

impl<A: Clone> Nnf<A> {
    /// Back to the core syntax; `a R b` becomes `!(!a U !b)`.
    pub fn to_formula(&self) -> Formula<A> {
        match self {
            Nnf::True => Formula::True,
            Nnf::False => Formula::falsum(),
            Nnf::Lit(a, true) => Formula::Atom(a.clone()),
            Nnf::Lit(a, false) => Formula::not(Formula::Atom(a.clone())),
            Nnf::And(x, y) => Formula::and(x.to_formula(), y.to_formula()),
            Nnf::Or(x, y) => Formula::or(x.to_formula(), y.to_formula()),
            Nnf::Next(x) => Formula::next(x.to_formula()),
            Nnf::Globally(x) => Formula::globally(x.to_formula()),
            Nnf::Finally(x) => Formula::finally(x.to_formula()),
            Nnf::Until(x, y) => Formula::until(x.to_formula(), y.to_formula()),
            Nnf::Release(x, y) => Formula::not(Formula::until(
                Formula::not(x.to_formula()),
                Formula::not(y.to_formula()),
            )),
        }
    }
}

impl<A> Nnf<A> {
    /// No temporal operator occurs in the formula.
    pub fn is_propositional(&self) -> bool {
        match self {
            Nnf::True | Nnf::False | Nnf::Lit(..) => true,
            Nnf::And(x, y) | Nnf::Or(x, y) => x.is_propositional() && y.is_propositional(),
            _ => false,
        }
    }
}
