//! Concrete syntax.
//!
//! ```text
//! formula := quant | binary
//! quant   := ("forall" | "exists") var "." formula
//! binary  := atomish { ("&" | "|") atomish }
//! atomish := "!" atomish | "(" formula ")" | quant | atom
//! atom    := relname "(" term {"," term} ")" | relname | term "=" term
//! term    := var | constname
//! ```
//!
//! A quantifier extends as far to the right as possible, also when it is
//! the last operand of a `&`/`|` run. A run must use a single operator;
//! mixing `&` and `|` at one level needs parentheses. Lowercase names are
//! constants when the vocabulary declares them and variables otherwise.
//!
//! Printing always parenthesizes n-ary connectives and quantified operands,
//! so `parse(print(f))` reproduces `f` exactly.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::syntax::{Atom, Formula, Literal, RawFormula, Term, Vocabulary, VERUM};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("the vocabulary has no identity symbol")]
    NoIdentity,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Bang,
    Amp,
    Pipe,
    Equals,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Equals => f.write_str("`=`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        if c == '\n' {
            line += 1;
            column = 1;
            chars.next();
            continue;
        }
        if c.is_whitespace() {
            column += 1;
            chars.next();
            continue;
        }
        let tok = if c.is_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_alphanumeric() || d == '_' || d == '\'' {
                    ident.push(d);
                    column += 1;
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(Spanned { tok: Tok::Ident(ident), line: l, column: col });
            continue;
        } else {
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '!' => Tok::Bang,
                '&' => Tok::Amp,
                '|' => Tok::Pipe,
                '=' => Tok::Equals,
                other => {
                    return Err(ParseError {
                        line: l,
                        column: col,
                        kind: ParseErrorKind::Syntax(format!("unexpected character `{other}`")),
                    })
                }
            }
        };
        chars.next();
        column += 1;
        out.push(Spanned { tok, line: l, column: col });
    }
    out.push(Spanned { tok: Tok::End, line, column });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    vocab: &'a Vocabulary,
}

fn is_keyword(s: &str) -> bool {
    s == "forall" || s == "exists"
}

fn is_relname(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, at: usize, kind: ParseErrorKind) -> ParseError {
        let s = &self.toks[at];
        ParseError { line: s.line, column: s.column, kind }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let msg = format!("expected {wanted}, found {}", self.peek());
        self.err_at(self.pos, ParseErrorKind::Syntax(msg))
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn formula(&mut self) -> Result<RawFormula, ParseError> {
        match self.peek() {
            Tok::Ident(k) if is_keyword(k) => self.quant(),
            _ => self.binary(),
        }
    }

    fn quant(&mut self) -> Result<RawFormula, ParseError> {
        let Tok::Ident(kw) = self.bump() else { unreachable!() };
        let at = self.pos;
        let var = match self.bump() {
            Tok::Ident(v) if !is_keyword(&v) && !is_relname(&v) => v,
            _ => {
                self.pos = at;
                return Err(self.unexpected("a variable"));
            }
        };
        if self.vocab.constant(&var).is_some() {
            return Err(self.err_at(at, ParseErrorKind::Syntax(format!("cannot quantify over constant `{var}`"))));
        }
        self.expect(Tok::Dot, "`.`")?;
        let body = Box::new(self.formula()?);
        Ok(if kw == "forall" { RawFormula::Forall(var, body) } else { RawFormula::Exists(var, body) })
    }

    fn binary(&mut self) -> Result<RawFormula, ParseError> {
        let first = self.atomish()?;
        let op = match self.peek() {
            Tok::Amp => Tok::Amp,
            Tok::Pipe => Tok::Pipe,
            _ => return Ok(first),
        };
        let mut children = alloc::vec![first];
        loop {
            match self.peek() {
                t if *t == op => {
                    self.bump();
                    children.push(self.atomish()?);
                }
                Tok::Amp | Tok::Pipe => {
                    return Err(self
                        .err_at(self.pos, ParseErrorKind::Syntax("mixing `&` and `|` needs parentheses".to_string())))
                }
                _ => break,
            }
        }
        Ok(if op == Tok::Amp { RawFormula::And(children) } else { RawFormula::Or(children) })
    }

    fn atomish(&mut self) -> Result<RawFormula, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(RawFormula::not(self.atomish()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(k) if is_keyword(k) => self.quant(),
            Tok::Ident(_) => self.atom().map(RawFormula::Atom),
            _ => Err(self.unexpected("a formula")),
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let at = self.pos;
        let Tok::Ident(name) = self.bump() else { unreachable!() };
        if !is_relname(&name) {
            let left = self.term_named(name, at)?;
            self.expect(Tok::Equals, "`=`")?;
            let rat = self.pos;
            let right = match self.bump() {
                Tok::Ident(n) if !is_relname(&n) && !is_keyword(&n) => self.term_named(n, rat)?,
                _ => {
                    self.pos = rat;
                    return Err(self.unexpected("a term"));
                }
            };
            if !self.vocab.identity() {
                return Err(self.err_at(at, ParseErrorKind::NoIdentity));
            }
            return Ok(Atom::Eq(left, right));
        }
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                let tat = self.pos;
                match self.bump() {
                    Tok::Ident(n) if !is_relname(&n) && !is_keyword(&n) => args.push(self.term_named(n, tat)?),
                    _ => {
                        self.pos = tat;
                        return Err(self.unexpected("a term"));
                    }
                }
                match self.bump() {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected("`,` or `)`"));
                    }
                }
            }
        }
        if name == VERUM {
            if !args.is_empty() {
                return Err(self.err_at(at, ParseErrorKind::ArityMismatch { name, expected: 0, found: args.len() }));
            }
            return Ok(Atom::Verum);
        }
        match self.vocab.relation(&name) {
            None => Err(self.err_at(at, ParseErrorKind::UnknownSymbol(name))),
            Some((_, arity)) if arity != args.len() => {
                Err(self.err_at(at, ParseErrorKind::ArityMismatch { name, expected: arity, found: args.len() }))
            }
            Some(_) => Ok(Atom::Rel { name, args }),
        }
    }

    fn term_named(&self, name: String, _at: usize) -> Result<Term, ParseError> {
        Ok(if self.vocab.constant(&name).is_some() { Term::Const(name) } else { Term::Var(name) })
    }
}

/// Parses a formula against a vocabulary.
pub fn parse_formula(text: &str, vocab: &Vocabulary) -> Result<RawFormula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, vocab };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("end of input"));
    }
    Ok(f)
}

/// Parses and normalizes to NNF in one step.
pub fn parse_nnf(text: &str, vocab: &Vocabulary) -> Result<Formula, ParseError> {
    parse_formula(text, vocab).map(|r| r.to_nnf())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Verum => f.write_str(VERUM),
            Atom::Rel { name, args } if args.is_empty() => f.write_str(name),
            Atom::Rel { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Atom::Eq(a, b) => write!(f, "{a} = {b}"),
        }
    }
}

fn write_negated_atom(f: &mut fmt::Formatter<'_>, atom: &Atom) -> fmt::Result {
    match atom {
        Atom::Eq(..) => write!(f, "!({atom})"),
        _ => write!(f, "!{atom}"),
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write_negated_atom(f, &self.atom)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Lit(l) => write!(f, "{l}"),
            Formula::And(cs) | Formula::Or(cs) => {
                let op = if matches!(self, Formula::And(_)) { " & " } else { " | " };
                f.write_str("(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    match c {
                        Formula::Forall(..) | Formula::Exists(..) => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                f.write_str(")")
            }
            Formula::Forall(v, b) => write!(f, "forall {v}. {b}"),
            Formula::Exists(v, b) => write!(f, "exists {v}. {b}"),
        }
    }
}

impl fmt::Display for RawFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawFormula::Atom(a) => write!(f, "{a}"),
            RawFormula::Not(b) => match &**b {
                RawFormula::Atom(a) => write_negated_atom(f, a),
                RawFormula::Forall(..) | RawFormula::Exists(..) => write!(f, "!({b})"),
                _ => write!(f, "!{b}"),
            },
            RawFormula::And(cs) | RawFormula::Or(cs) => {
                let op = if matches!(self, RawFormula::And(_)) { " & " } else { " | " };
                f.write_str("(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    match c {
                        RawFormula::Forall(..) | RawFormula::Exists(..) => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                f.write_str(")")
            }
            RawFormula::Forall(v, b) => write!(f, "forall {v}. {b}"),
            RawFormula::Exists(v, b) => write!(f, "exists {v}. {b}"),
        }
    }
}

/// Surface syntax of a formula.
pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn vocab() -> Vocabulary {
        Vocabulary::relational([("P", 1), ("Q", 1), ("R", 2), ("S", 0)], true).unwrap()
    }

    fn lit(name: &str, vars: &[&str]) -> RawFormula {
        RawFormula::Atom(Atom::rel(name, vars.iter().map(|v| Term::var(*v)).collect()))
    }

    #[test]
    fn grammar_examples() {
        let v = vocab();
        assert_eq!(
            parse_formula("exists x. P(x)", &v).unwrap(),
            RawFormula::Exists("x".into(), Box::new(lit("P", &["x"])))
        );
        assert_eq!(
            parse_formula("!(P(x) & Q(x))", &v).unwrap(),
            RawFormula::not(RawFormula::And(vec![lit("P", &["x"]), lit("Q", &["x"])]))
        );
        assert_eq!(
            parse_formula("forall x. (P(x) | exists y. R(x,y))", &v).unwrap(),
            RawFormula::Forall(
                "x".into(),
                Box::new(RawFormula::Or(vec![
                    lit("P", &["x"]),
                    RawFormula::Exists("y".into(), Box::new(lit("R", &["x", "y"])))
                ]))
            )
        );
    }

    #[test]
    fn runs_flatten_and_quantifiers_extend_right() {
        let v = vocab();
        let f = parse_formula("P(x) & Q(x) & S", &v).unwrap();
        assert!(matches!(f, RawFormula::And(ref cs) if cs.len() == 3));
        let g = parse_formula("exists x. P(x) & Q(x)", &v).unwrap();
        assert!(matches!(g, RawFormula::Exists(_, ref b) if matches!(**b, RawFormula::And(_))));
    }

    #[test]
    fn mixing_operators_is_rejected() {
        let e = parse_formula("P(x) & Q(x) | S", &vocab()).unwrap_err();
        assert_eq!((e.line, e.column), (1, 13));
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn reports_positions_and_symbol_errors() {
        let v = vocab();
        let e = parse_formula("exists x.\n  T(x)", &v).unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        assert_eq!(e.kind, ParseErrorKind::UnknownSymbol("T".into()));
        let e = parse_formula("R(x)", &v).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::ArityMismatch { expected: 2, found: 1, .. }));
        let e = parse_formula("P(x) &", &v).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
        let no_id = Vocabulary::relational([("P", 1)], false).unwrap();
        assert_eq!(parse_formula("x = y", &no_id).unwrap_err().kind, ParseErrorKind::NoIdentity);
    }

    #[test]
    fn constants_and_equality() {
        let v = Vocabulary::new([("P", 1)], vec!["a".into()], true).unwrap();
        let f = parse_formula("!x = a", &v).unwrap();
        assert_eq!(f, RawFormula::not(RawFormula::Atom(Atom::Eq(Term::var("x"), Term::Const("a".into())))));
        assert!(parse_formula("forall a. P(a)", &v).is_err());
    }

    #[test]
    fn printing_examples() {
        let v = vocab();
        assert_eq!(parse_nnf("exists x. P(x)", &v).unwrap().to_string(), "exists x. P(x)");
        assert_eq!(parse_nnf("S & S & S", &v).unwrap().to_string(), "(S & S & S)");
        assert_eq!(parse_nnf("!(x = y)", &v).unwrap().to_string(), "!(x = y)");
        assert_eq!(parse_nnf("TRUE & !TRUE", &v).unwrap().to_string(), "(TRUE & !TRUE)");
        let raw = parse_formula("!(P(x) & Q(x))", &v).unwrap();
        assert_eq!(raw.to_string(), "!(P(x) & Q(x))");
    }

    #[test]
    fn printed_quantifier_operands_round_trip() {
        let v = vocab();
        let f = parse_nnf("(exists x. P(x)) & S", &v).unwrap();
        let printed = f.to_string();
        assert_eq!(printed, "((exists x. P(x)) & S)");
        assert_eq!(parse_nnf(&printed, &v).unwrap(), f);
    }
}
