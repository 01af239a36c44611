//! Lexer, AST and recursive-descent parser for the event-system language.

use super::EgsError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Colon,
    Assign,
    Prime,
    Eq,
    EqEq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Bang,
    AndAnd,
    OrOr,
    Arrow,
    Bar,
    At,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
            other => {
                let s = match other {
                    Tok::LBrace => "{",
                    Tok::RBrace => "}",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::LBrack => "[",
                    Tok::RBrack => "]",
                    Tok::Comma => ",",
                    Tok::Colon => ":",
                    Tok::Assign => ":=",
                    Tok::Prime => "'",
                    Tok::Eq => "=",
                    Tok::EqEq => "==",
                    Tok::Ne => "!=",
                    Tok::Lt => "<",
                    Tok::Le => "<=",
                    Tok::Gt => ">",
                    Tok::Ge => ">=",
                    Tok::Bang => "!",
                    Tok::AndAnd => "&&",
                    Tok::OrOr => "||",
                    Tok::Arrow => "->",
                    Tok::Bar => "|",
                    Tok::At => "@",
                    _ => unreachable!(),
                };
                format!("`{s}`")
            }
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, EgsError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column: col };
        let next = chars.get(i + 1).copied();
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && next == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push((Tok::Ident(s), span));
            continue;
        }
        let two = |a: char, b: char| c == a && next == Some(b);
        let (tok, width) = if two(':', '=') {
            (Tok::Assign, 2)
        } else if two('=', '=') {
            (Tok::EqEq, 2)
        } else if two('!', '=') {
            (Tok::Ne, 2)
        } else if two('<', '=') {
            (Tok::Le, 2)
        } else if two('>', '=') {
            (Tok::Ge, 2)
        } else if two('&', '&') {
            (Tok::AndAnd, 2)
        } else if two('|', '|') {
            (Tok::OrOr, 2)
        } else if two('-', '>') {
            (Tok::Arrow, 2)
        } else {
            let t = match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                '\'' => Tok::Prime,
                '=' => Tok::Eq,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '!' => Tok::Bang,
                '|' => Tok::Bar,
                '@' => Tok::At,
                other => {
                    return Err(EgsError::syntax(
                        span,
                        format!("unexpected character `{other}`"),
                    ))
                }
            };
            (t, 1)
        };
        i += width;
        col += width;
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span { line, column: col }));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Bool(bool),
    /// A variable, parameter or constant, possibly indexed: `occupant[r][g]`.
    Name {
        name: String,
        indices: Vec<Expr>,
    },
    /// `next(t)` (`up = true`) or `prev(t)`.
    Step {
        up: bool,
        arg: Box<Expr>,
    },
    /// `min(Sort)` / `max(Sort)`.
    Extreme {
        max: bool,
        sort: Ident,
    },
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Cmp {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Quant {
        forall: bool,
        var: Ident,
        sort: Ident,
        body: Box<Expr>,
    },
    /// `@In[g,r,k]`; `args` is `None` for the type atom `@In`.
    EventAtom {
        name: Ident,
        args: Option<Vec<Expr>>,
    },
    Always(Box<Expr>),
    Eventually(Box<Expr>),
    After(Box<Expr>),
    Until(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct SortDecl {
    pub name: Ident,
    pub consts: Vec<Ident>,
    pub ordered: bool,
}

#[derive(Clone, Debug)]
pub struct VarDecl {
    pub name: Ident,
    pub dims: Vec<Ident>,
    /// `None` for `bool`.
    pub sort: Option<Ident>,
}

#[derive(Clone, Debug)]
pub struct EffectDecl {
    /// `forall x: S |` prefixes, outermost first.
    pub binders: Vec<(Ident, Ident)>,
    pub target: Ident,
    pub indices: Vec<Expr>,
    pub value: Expr,
}

#[derive(Clone, Debug)]
pub struct EventDecl {
    pub name: Ident,
    pub params: Vec<(Ident, Ident)>,
    pub modifies: Vec<Ident>,
    pub guard: Expr,
    pub effects: Vec<EffectDecl>,
}

#[derive(Clone, Debug)]
pub struct AssertDecl {
    pub name: Ident,
    pub body: Expr,
}

#[derive(Clone, Debug)]
pub enum Item {
    Sort(SortDecl),
    Var(VarDecl),
    Init(Expr),
    Event(EventDecl),
    Assert(AssertDecl),
}

#[derive(Clone, Debug)]
pub struct ModelAst {
    pub name: Ident,
    pub items: Vec<Item>,
}

const RESERVED: &[&str] = &[
    "model",
    "sort",
    "ordered",
    "var",
    "bool",
    "init",
    "event",
    "modifies",
    "guard",
    "effect",
    "assert",
    "forall",
    "exists",
    "true",
    "false",
    "always",
    "eventually",
    "after",
    "until",
    "next",
    "prev",
    "min",
    "max",
];

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn tok(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.tok(), Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.tok() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, what: &str) -> EgsError {
        EgsError::syntax(
            self.span(),
            format!("expected {what}, found {}", self.tok().describe()),
        )
    }

    fn expect(&mut self, t: Tok) -> Result<(), EgsError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), EgsError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self) -> Result<Ident, EgsError> {
        let span = self.span();
        match self.tok() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let name = s.clone();
                self.bump();
                Ok(Ident { name, span })
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    fn model(&mut self) -> Result<ModelAst, EgsError> {
        if *self.tok() == Tok::Eof {
            return Err(EgsError::Empty);
        }
        self.expect_kw("model")?;
        let name = self.ident()?;
        let mut items = Vec::new();
        loop {
            if *self.tok() == Tok::Eof {
                break;
            }
            let item = if self.eat_kw("sort") {
                Item::Sort(self.sort_decl()?)
            } else if self.eat_kw("var") {
                Item::Var(self.var_decl()?)
            } else if self.eat_kw("init") {
                self.expect(Tok::LBrace)?;
                let e = self.expr()?;
                self.expect(Tok::RBrace)?;
                Item::Init(e)
            } else if self.eat_kw("event") {
                Item::Event(self.event_decl()?)
            } else if self.eat_kw("assert") {
                let name = self.ident()?;
                self.expect(Tok::LBrace)?;
                let body = self.expr()?;
                self.expect(Tok::RBrace)?;
                Item::Assert(AssertDecl { name, body })
            } else {
                return Err(self.unexpected("`sort`, `var`, `init`, `event` or `assert`"));
            };
            items.push(item);
        }
        Ok(ModelAst { name, items })
    }

    fn sort_decl(&mut self) -> Result<SortDecl, EgsError> {
        let name = self.ident()?;
        self.expect(Tok::Eq)?;
        self.expect(Tok::LBrace)?;
        let mut consts = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            consts.push(self.ident()?);
        }
        self.expect(Tok::RBrace)?;
        let ordered = self.eat_kw("ordered");
        Ok(SortDecl {
            name,
            consts,
            ordered,
        })
    }

    fn var_decl(&mut self) -> Result<VarDecl, EgsError> {
        let name = self.ident()?;
        let mut dims = Vec::new();
        while self.eat(&Tok::LBrack) {
            dims.push(self.ident()?);
            self.expect(Tok::RBrack)?;
        }
        self.expect(Tok::Colon)?;
        let sort = if self.eat_kw("bool") {
            None
        } else {
            Some(self.ident()?)
        };
        Ok(VarDecl { name, dims, sort })
    }

    fn param(&mut self) -> Result<(Ident, Ident), EgsError> {
        let v = self.ident()?;
        self.expect(Tok::Colon)?;
        let s = self.ident()?;
        Ok((v, s))
    }

    fn event_decl(&mut self) -> Result<EventDecl, EgsError> {
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.tok() != Tok::RParen {
            params.push(self.param()?);
            while self.eat(&Tok::Comma) {
                params.push(self.param()?);
            }
        }
        self.expect(Tok::RParen)?;
        let mut modifies = Vec::new();
        if self.eat_kw("modifies") {
            modifies.push(self.ident()?);
            while self.eat(&Tok::Comma) {
                modifies.push(self.ident()?);
            }
        }
        self.expect(Tok::LBrace)?;
        self.expect_kw("guard")?;
        self.expect(Tok::Colon)?;
        let guard = self.expr()?;
        let mut effects = Vec::new();
        if self.eat_kw("effect") {
            self.expect(Tok::Colon)?;
            while *self.tok() != Tok::RBrace {
                effects.push(self.effect()?);
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(EventDecl {
            name,
            params,
            modifies,
            guard,
            effects,
        })
    }

    fn effect(&mut self) -> Result<EffectDecl, EgsError> {
        let mut binders = Vec::new();
        while self.eat_kw("forall") {
            binders.push(self.param()?);
            self.expect(Tok::Bar)?;
        }
        let target = self.ident()?;
        let mut indices = Vec::new();
        while self.eat(&Tok::LBrack) {
            indices.push(self.expr()?);
            self.expect(Tok::RBrack)?;
        }
        self.expect(Tok::Prime)?;
        self.expect(Tok::Assign)?;
        let value = self.expr()?;
        Ok(EffectDecl {
            binders,
            target,
            indices,
            value,
        })
    }

    fn expr(&mut self) -> Result<Expr, EgsError> {
        let lhs = self.or_expr()?;
        if *self.tok() == Tok::Arrow {
            let span = self.span();
            self.bump();
            let rhs = self.expr()?;
            return Ok(Expr {
                kind: ExprKind::Implies(Box::new(lhs), Box::new(rhs)),
                span,
            });
        }
        Ok(lhs)
    }

    fn or_expr(&mut self) -> Result<Expr, EgsError> {
        let mut lhs = self.and_expr()?;
        while *self.tok() == Tok::OrOr {
            let span = self.span();
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr {
                kind: ExprKind::Or(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, EgsError> {
        let mut lhs = self.until_expr()?;
        while *self.tok() == Tok::AndAnd {
            let span = self.span();
            self.bump();
            let rhs = self.until_expr()?;
            lhs = Expr {
                kind: ExprKind::And(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn until_expr(&mut self) -> Result<Expr, EgsError> {
        let lhs = self.unary()?;
        if self.is_kw("until") {
            let span = self.span();
            self.bump();
            let rhs = self.until_expr()?;
            return Ok(Expr {
                kind: ExprKind::Until(Box::new(lhs), Box::new(rhs)),
                span,
            });
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, EgsError> {
        let span = self.span();
        let wrap: Option<fn(Box<Expr>) -> ExprKind> = if *self.tok() == Tok::Bang {
            Some(ExprKind::Not)
        } else if self.is_kw("always") {
            Some(ExprKind::Always)
        } else if self.is_kw("eventually") {
            Some(ExprKind::Eventually)
        } else if self.is_kw("after") {
            Some(ExprKind::After)
        } else {
            None
        };
        if let Some(wrap) = wrap {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr {
                kind: wrap(Box::new(inner)),
                span,
            });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, EgsError> {
        let lhs = self.primary()?;
        let op = match self.tok() {
            Tok::EqEq | Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        let span = self.span();
        self.bump();
        let rhs = self.primary()?;
        Ok(Expr {
            kind: ExprKind::Cmp {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            span,
        })
    }

    fn primary(&mut self) -> Result<Expr, EgsError> {
        let span = self.span();
        let kind = match self.tok().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                return Ok(e);
            }
            Tok::At => {
                self.bump();
                let name = self.ident()?;
                let args = if self.eat(&Tok::LBrack) {
                    let mut args = Vec::new();
                    if *self.tok() != Tok::RBrack {
                        args.push(self.expr()?);
                        while self.eat(&Tok::Comma) {
                            args.push(self.expr()?);
                        }
                    }
                    self.expect(Tok::RBrack)?;
                    Some(args)
                } else {
                    None
                };
                ExprKind::EventAtom { name, args }
            }
            Tok::Ident(s) => match s.as_str() {
                "true" | "false" => {
                    self.bump();
                    ExprKind::Bool(s == "true")
                }
                "forall" | "exists" => {
                    self.bump();
                    let (var, sort) = self.param()?;
                    self.expect(Tok::Bar)?;
                    let body = self.expr()?;
                    ExprKind::Quant {
                        forall: s == "forall",
                        var,
                        sort,
                        body: Box::new(body),
                    }
                }
                "next" | "prev" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    ExprKind::Step {
                        up: s == "next",
                        arg: Box::new(arg),
                    }
                }
                "min" | "max" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let sort = self.ident()?;
                    self.expect(Tok::RParen)?;
                    ExprKind::Extreme {
                        max: s == "max",
                        sort,
                    }
                }
                _ => {
                    let id = self.ident()?;
                    let mut indices = Vec::new();
                    while self.eat(&Tok::LBrack) {
                        indices.push(self.expr()?);
                        self.expect(Tok::RBrack)?;
                    }
                    ExprKind::Name {
                        name: id.name,
                        indices,
                    }
                }
            },
            _ => return Err(self.unexpected("an expression")),
        };
        Ok(Expr { kind, span })
    }
}

pub fn parse(src: &str) -> Result<ModelAst, EgsError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    p.model()
}
