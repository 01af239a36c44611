use thiserror::Error;

use super::{Atom, Formula};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    True,
    False,
    Prop(String),
    Event(String),
    Type(String),
    Not,
    Next,
    Globally,
    Finally,
    Until,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Prop(p) => format!("proposition `{p}`"),
            Tok::Event(e) => format!("event `@{e}`"),
            Tok::Type(t) => format!("type `@{t}`"),
            Tok::Not => "`!`".into(),
            Tok::Next => "`X`".into(),
            Tok::Globally => "`G`".into(),
            Tok::Finally => "`F`".into(),
            Tok::Until => "`U`".into(),
            Tok::And => "`&&`".into(),
            Tok::Or => "`||`".into(),
            Tok::Implies => "`->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            _src: src,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(|c| is_ident_char(*c)) {
            s.push(c);
            self.bump();
        }
        s
    }

    /// `[a,b]` groups; whitespace inside is dropped.
    fn brackets(&mut self, out: &mut String) -> Result<(), ParseError> {
        let (line, col) = (self.line, self.col);
        self.bump();
        out.push('[');
        let mut first = true;
        loop {
            while self.peek().is_some_and(char::is_whitespace) {
                self.bump();
            }
            match self.peek() {
                Some(']') => {
                    self.bump();
                    out.push(']');
                    return Ok(());
                }
                Some(',') if !first => {
                    self.bump();
                    out.push(',');
                }
                Some(c) if is_ident_start(c) || c.is_ascii_digit() => {
                    out.push_str(&self.ident());
                }
                Some(c) => {
                    return Err(self.err(
                        self.line,
                        self.col,
                        format!("unexpected `{c}` in brackets"),
                    ))
                }
                None => return Err(self.err(line, col, "unclosed `[`")),
            }
            first = false;
        }
    }

    fn next_tok(&mut self) -> Result<(Tok, usize, usize), ParseError> {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek() else {
            return Ok((Tok::Eof, line, col));
        };
        let tok = match c {
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            '!' => {
                self.bump();
                Tok::Not
            }
            '&' | '|' => {
                self.bump();
                if self.peek() == Some(c) {
                    self.bump();
                }
                if c == '&' {
                    Tok::And
                } else {
                    Tok::Or
                }
            }
            '-' if self.peek2() == Some('>') => {
                self.bump();
                self.bump();
                Tok::Implies
            }
            '@' => {
                self.bump();
                if !self.peek().is_some_and(is_ident_start) {
                    return Err(self.err(line, col, "expected a name after `@`"));
                }
                let mut name = self.ident();
                if self.peek() == Some('[') {
                    self.brackets(&mut name)?;
                    Tok::Event(name)
                } else {
                    Tok::Type(name)
                }
            }
            c if is_ident_start(c) => {
                let mut name = self.ident();
                match name.as_str() {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "X" => Tok::Next,
                    "G" => Tok::Globally,
                    "F" => Tok::Finally,
                    "U" => Tok::Until,
                    _ => {
                        while self.peek() == Some('[') {
                            self.brackets(&mut name)?;
                        }
                        if self.peek() == Some('=') && self.peek2().is_some_and(is_ident_char) {
                            self.bump();
                            name.push('=');
                            name.push_str(&self.ident());
                        }
                        Tok::Prop(name)
                    }
                }
            }
            other => {
                let mut op = String::from(other);
                if let Some(n) = self.peek2().filter(|n| "&|-=<>".contains(*n)) {
                    op.push(n);
                }
                return Err(self.err(line, col, format!("unknown operator `{op}`")));
            }
        };
        Ok((tok, line, col))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    line: usize,
    col: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let (tok, line, col) = lexer.next_tok()?;
        Ok(Parser {
            lexer,
            tok,
            line,
            col,
        })
    }

    fn advance(&mut self) -> Result<Tok, ParseError> {
        let (tok, line, col) = self.lexer.next_tok()?;
        self.line = line;
        self.col = col;
        Ok(std::mem::replace(&mut self.tok, tok))
    }

    fn unexpected(&self, what: &str) -> ParseError {
        ParseError {
            line: self.line,
            column: self.col,
            message: format!("expected {what}, found {}", self.tok.describe()),
        }
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.tok == Tok::Implies {
            self.advance()?;
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.tok == Tok::Or {
            self.advance()?;
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while self.tok == Tok::And {
            self.advance()?;
            let rhs = self.until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if self.tok == Tok::Until {
            self.advance()?;
            let rhs = self.until()?;
            return Ok(Formula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.tok {
            Tok::Not => {
                self.advance()?;
                Ok(Formula::not(self.unary()?))
            }
            Tok::Next => {
                self.advance()?;
                Ok(Formula::next(self.unary()?))
            }
            Tok::Globally => {
                self.advance()?;
                Ok(Formula::globally(self.unary()?))
            }
            Tok::Finally => {
                self.advance()?;
                Ok(Formula::finally(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match &self.tok {
            Tok::True => {
                self.advance()?;
                Ok(Formula::True)
            }
            Tok::False => {
                self.advance()?;
                Ok(Formula::falsum())
            }
            Tok::Prop(_) | Tok::Event(_) | Tok::Type(_) => {
                let atom = match self.advance()? {
                    Tok::Prop(p) => Atom::Prop(p),
                    Tok::Event(e) => Atom::Event(e),
                    Tok::Type(t) => Atom::Type(t),
                    _ => unreachable!(),
                };
                Ok(Formula::Atom(atom))
            }
            Tok::LParen => {
                self.advance()?;
                let f = self.implies()?;
                if self.tok != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.advance()?;
                Ok(f)
            }
            _ => Err(self.unexpected("a formula")),
        }
    }
}

/// Parses the concrete formula syntax.
///
/// Precedence from tightest: `! X G F`, `U` (right-assoc), `&&`, `||`, `->`
/// (right-assoc). Single `&` and `|` are accepted as synonyms of `&&` and
/// `||`. `@Name[args]` is an event atom, `@Name` an event-type atom.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.implies()?;
    if p.tok != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seltl::tests::prop;

    fn ty(t: &str) -> Formula {
        Formula::Atom(Atom::Type(t.into()))
    }

    #[test]
    fn globally_not() {
        assert_eq!(
            parse_formula("G !p").unwrap(),
            Formula::globally(Formula::not(prop("p")))
        );
    }

    #[test]
    fn until_with_type_and_next() {
        let expected = Formula::until(prop("p"), Formula::and(ty("In"), Formula::next(prop("q"))));
        assert_eq!(parse_formula("p U (@In & X q)").unwrap(), expected);
        assert_eq!(parse_formula("p U (@In && X q)").unwrap(), expected);
    }

    #[test]
    fn until_is_right_associative() {
        assert_eq!(
            parse_formula("p U q U r").unwrap(),
            Formula::until(prop("p"), Formula::until(prop("q"), prop("r")))
        );
    }

    #[test]
    fn precedence_ladder() {
        let f = parse_formula("a -> b || c && d U e").unwrap();
        let expected = Formula::implies(
            prop("a"),
            Formula::or(
                prop("b"),
                Formula::and(prop("c"), Formula::until(prop("d"), prop("e"))),
            ),
        );
        assert_eq!(f, expected);
        assert_eq!(
            parse_formula("a -> b -> c").unwrap(),
            Formula::implies(prop("a"), Formula::implies(prop("b"), prop("c")))
        );
    }

    #[test]
    fn event_and_indexed_props() {
        let f = parse_formula("@In[g0, r0,k1] && occupant[r0][g1] && lastKey[r0]=k2 && @Stay[]")
            .unwrap();
        let atoms = vec![
            Atom::Event("In[g0,r0,k1]".into()),
            Atom::Prop("occupant[r0][g1]".into()),
            Atom::Prop("lastKey[r0]=k2".into()),
            Atom::Event("Stay[]".into()),
        ];
        assert_eq!(f, Formula::conj(atoms.into_iter().map(Formula::Atom)));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_formula("p &&\n  (q").unwrap_err();
        assert_eq!((e.line, e.column), (2, 5));
        let e = parse_formula("p q").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
        let e = parse_formula("p <-> q").unwrap_err();
        assert!(e.message.contains("unknown operator"));
        assert!(parse_formula("").is_err());
    }

    #[test]
    fn printer_round_trip_examples() {
        for src in [
            "G !p",
            "p U q U r",
            "(p U q) U r",
            "!(p || q) -> X G @Set",
            "F (p && @Set[A]) || false",
            "a -> b -> c",
            "(a -> b) -> c",
            "!!p && true",
        ] {
            let f = parse_formula(src).unwrap();
            assert_eq!(parse_formula(&f.to_string()).unwrap(), f, "{src}");
        }
    }
}
