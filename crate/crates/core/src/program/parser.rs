//! Surface syntax: a small Prolog subset.
//!
//! ```text
//! rectoy(N, M) :- N = 0, M = 0.
//! rectoy(N, M) :- N1 is N - 1, rectoy(N1, R), M is N1 + R.
//! ```
//!
//! Supported: facts, rules, `=`, `is` with `+ - *`, integer and float
//! literals, atoms, compound terms, list syntax, `%` and `/* */` comments.

use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use super::term::{Atom, Constraint, Literal, Program, Rule, Term, Var, CONS, NIL};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    Name(String),
    Int(BigInt),
    Float(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Bar,
    Comma,
    End,
    Neck,
    Eq,
    Plus,
    Minus,
    Star,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Var(s) | Tok::Name(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Float(x) => write!(f, "`{x:?}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::End => f.write_str("end of clause"),
            Tok::Neck => f.write_str("`:-`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
        }
    }
}

fn err(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
            column: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some('/') if self.peek2() == Some('*') => {
                    let start = self.pos();
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            None => return Err(err(start, "unterminated block comment")),
                            Some('*') if self.peek() == Some('/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn take_while(&mut self, start: usize, pred: impl Fn(char) -> bool) -> &'a str {
        let mut end = start;
        while let Some(&(i, c)) = self.chars.peek() {
            if !pred(c) {
                break;
            }
            end = i + c.len_utf8();
            self.bump();
        }
        &self.src[start..end]
    }

    fn tokens(mut self) -> Result<Vec<(Tok, Pos)>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let pos = self.pos();
            let Some(&(start, c)) = self.chars.peek() else {
                return Ok(out);
            };
            let tok = match c {
                '(' | ')' | '[' | ']' | '|' | ',' | '=' | '+' | '*' => {
                    self.bump();
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        '|' => Tok::Bar,
                        ',' => Tok::Comma,
                        '=' => {
                            if matches!(self.peek(), Some('<' | '=' | '.' | ':')) {
                                return Err(err(pos, "comparison operators are not supported"));
                            }
                            Tok::Eq
                        }
                        '+' => Tok::Plus,
                        _ => Tok::Star,
                    }
                }
                '-' => {
                    self.bump();
                    Tok::Minus
                }
                ':' => {
                    self.bump();
                    if self.peek() == Some('-') {
                        self.bump();
                        Tok::Neck
                    } else {
                        return Err(err(pos, "expected `:-`"));
                    }
                }
                '.' => {
                    self.bump();
                    match self.peek() {
                        None | Some('%') => Tok::End,
                        Some(c) if c.is_whitespace() => Tok::End,
                        _ => return Err(err(pos, "expected whitespace after `.`")),
                    }
                }
                '<' | '>' | '\\' => {
                    return Err(err(pos, "comparison operators are not supported"));
                }
                c if c.is_ascii_digit() => self.number(start, pos)?,
                c if c.is_ascii_uppercase() || c == '_' => {
                    let s = self.take_while(start, |c| c.is_ascii_alphanumeric() || c == '_');
                    Tok::Var(s.to_string())
                }
                c if c.is_ascii_lowercase() => {
                    let s = self.take_while(start, |c| c.is_ascii_alphanumeric() || c == '_');
                    Tok::Name(s.to_string())
                }
                other => return Err(err(pos, format!("unexpected character `{other}`"))),
            };
            out.push((tok, pos));
        }
    }

    fn number(&mut self, start: usize, pos: Pos) -> Result<Tok, ParseError> {
        let int_part = self.take_while(start, |c| c.is_ascii_digit());
        let mut end = start + int_part.len();
        let mut is_float = false;
        if self.peek() == Some('.') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
            is_float = true;
            self.bump();
            let frac = self.take_while(end + 1, |c| c.is_ascii_digit());
            end += 1 + frac.len();
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let next = self.peek2();
            let signed = matches!(next, Some('+' | '-'));
            let mut look = self.chars.clone();
            look.next();
            if signed {
                look.next();
            }
            if look.peek().is_some_and(|&(_, c)| c.is_ascii_digit()) {
                is_float = true;
                self.bump();
                end += 1;
                if signed {
                    self.bump();
                    end += 1;
                }
                let exp = self.take_while(end, |c| c.is_ascii_digit());
                end += exp.len();
            }
        }
        let text = &self.src[start..end];
        if is_float {
            text.parse::<f64>()
                .map(Tok::Float)
                .map_err(|e| err(pos, format!("bad float literal: {e}")))
        } else {
            text.parse::<BigInt>()
                .map(Tok::Int)
                .map_err(|e| err(pos, format!("bad integer literal: {e}")))
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    eof: Pos,
    anon: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map_or(self.eof, |&(_, p)| p)
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned();
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => err(self.pos(), format!("expected {expected}, found {t}")),
            None => err(self.eof, format!("expected {expected}, found end of input")),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn program(&mut self) -> Result<Vec<Rule>, ParseError> {
        let mut rules = Vec::new();
        while self.peek().is_some() {
            rules.push(self.clause()?);
        }
        Ok(rules)
    }

    fn clause(&mut self) -> Result<Rule, ParseError> {
        let head_pos = self.pos();
        let head = match self.term()? {
            Term::Compound { functor, args } if !is_operator(&functor, args.len()) => Atom::new(&functor, args),
            _ => return Err(err(head_pos, "clause head must be an atom or compound term")),
        };
        let mut body = Vec::new();
        if self.peek() == Some(&Tok::Neck) {
            self.at += 1;
            loop {
                body.push(self.goal()?);
                match self.peek() {
                    Some(Tok::Comma) => self.at += 1,
                    _ => break,
                }
            }
        }
        self.expect(Tok::End, "`,` or `.`")?;
        Ok(Rule { id: 0, head, body })
    }

    fn goal(&mut self) -> Result<Literal, ParseError> {
        let pos = self.pos();
        let lhs = self.term()?;
        match self.peek() {
            Some(Tok::Eq) => {
                self.at += 1;
                let rhs = self.term()?;
                Ok(Literal::Constraint(Constraint::Unify(lhs, rhs)))
            }
            Some(Tok::Name(n)) if n == "is" => {
                self.at += 1;
                let rhs = self.term()?;
                Ok(Literal::Constraint(Constraint::is(lhs, rhs)))
            }
            _ => match lhs {
                Term::Compound { functor, args } if !is_operator(&functor, args.len()) => {
                    if &*functor == "is" || &*functor == NIL {
                        return Err(err(pos, format!("`{functor}` is not callable")));
                    }
                    Ok(Literal::Call(Atom::new(&functor, args)))
                }
                _ => Err(err(pos, "expected a goal")),
            },
        }
    }

    /// term := mul (('+'|'-') mul)*
    fn term(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.mul()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => "+",
                Some(Tok::Minus) => "-",
                _ => return Ok(lhs),
            };
            self.at += 1;
            let rhs = self.mul()?;
            lhs = Term::compound(op, vec![lhs, rhs]);
        }
    }

    fn mul(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::Star) {
            self.at += 1;
            let rhs = self.unary()?;
            lhs = Term::compound("*", vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Term, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.at += 1;
            return Ok(match self.unary()? {
                Term::Int(i) => Term::Int(-i),
                Term::Float(x) => Term::Float(-x),
                t => Term::compound("-", vec![t]),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        let Some((tok, pos)) = self.next() else {
            return Err(err(self.eof, "unexpected end of input"));
        };
        match tok {
            Tok::Var(name) => {
                if name == "_" {
                    let v = Var::fresh(self.anon);
                    self.anon += 1;
                    return Ok(Term::Var(v));
                }
                if Var::new(&name).reserved_index().is_some() {
                    return Err(err(pos, format!("variable name `{name}` uses a reserved prefix")));
                }
                Ok(Term::var(&name))
            }
            Tok::Int(i) => Ok(Term::Int(i)),
            Tok::Float(x) => Ok(Term::Float(x)),
            Tok::Name(name) => {
                if self.peek() == Some(&Tok::LParen) {
                    let open = self.pos();
                    self.at += 1;
                    let args = self.args(open, Tok::RParen)?;
                    Ok(Term::compound(&name, args))
                } else {
                    Ok(Term::atom(&name))
                }
            }
            Tok::LParen => {
                let t = self.term()?;
                self.close(pos, Tok::RParen)?;
                Ok(t)
            }
            Tok::LBracket => self.list(pos),
            other => Err(err(pos, format!("unexpected {other}"))),
        }
    }

    fn close(&mut self, open: Pos, tok: Tok) -> Result<(), ParseError> {
        let (what, desc) = if tok == Tok::RParen {
            ("`)`", "'('")
        } else {
            ("`]`", "'['")
        };
        match self.peek() {
            Some(t) if *t == tok => {
                self.at += 1;
                Ok(())
            }
            None | Some(Tok::End) => Err(err(open, format!("unclosed {desc}"))),
            Some(_) => Err(self.unexpected(what)),
        }
    }

    fn args(&mut self, open: Pos, close: Tok) -> Result<Vec<Term>, ParseError> {
        let mut args = vec![self.term()?];
        while self.peek() == Some(&Tok::Comma) {
            self.at += 1;
            args.push(self.term()?);
        }
        self.close(open, close)?;
        Ok(args)
    }

    fn list(&mut self, open: Pos) -> Result<Term, ParseError> {
        if self.peek() == Some(&Tok::RBracket) {
            self.at += 1;
            return Ok(Term::atom(NIL));
        }
        let mut items = vec![self.term()?];
        while self.peek() == Some(&Tok::Comma) {
            self.at += 1;
            items.push(self.term()?);
        }
        let tail = if self.peek() == Some(&Tok::Bar) {
            self.at += 1;
            self.term()?
        } else {
            Term::atom(NIL)
        };
        self.close(open, Tok::RBracket)?;
        Ok(items
            .into_iter()
            .rev()
            .fold(tail, |acc, item| Term::compound(CONS, vec![item, acc])))
    }
}

fn is_operator(functor: &str, arity: usize) -> bool {
    matches!((functor, arity), ("+" | "-" | "*", 2) | ("-", 1) | (CONS, 2))
}

/// Parses program text into rules in textual order.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let lexer = Lexer::new(source);
    let toks = lexer.tokens()?;
    let eof = {
        let mut l = Lexer::new(source);
        while l.bump().is_some() {}
        l.pos()
    };
    let mut parser = Parser {
        toks,
        at: 0,
        eof,
        anon: 0,
    };
    let rules = parser.program()?;
    Ok(Program::from_rules(rules))
}

/// Parses a single atom such as `rectoy(N, M)`, as used in entry specs.
pub fn parse_atom(text: &str) -> Result<Atom, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let eof = Pos {
        line: 1,
        column: text.chars().count() + 1,
    };
    let mut parser = Parser {
        toks,
        at: 0,
        eof,
        anon: 0,
    };
    let pos = parser.pos();
    let atom = match parser.term()? {
        Term::Compound { functor, args } if !is_operator(&functor, args.len()) => Atom::new(&functor, args),
        _ => return Err(err(pos, "expected an atom")),
    };
    if parser.peek().is_some() {
        return Err(parser.unexpected("end of input"));
    }
    Ok(atom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn informal_example_parses() {
        let p = parse("p(X) :- X = 1.0.\np(X) :- X = 1.").unwrap();
        assert_eq!(p.predicate_count(), 1);
        assert_eq!(p.rules().len(), 2);
        assert_eq!(p.rules()[0].id, 1);
        assert_eq!(p.rules()[1].id, 2);
        assert_eq!(
            p.rules()[0].body[0],
            Literal::Constraint(Constraint::Unify(Term::var("X"), Term::Float(1.0)))
        );
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse("").unwrap().predicate_count(), 0);
        assert_eq!(parse("  % only a comment\n").unwrap().predicate_count(), 0);
    }

    #[test]
    fn unclosed_paren_is_reported_at_the_paren() {
        let e = parse("p(X) :- q(X,Y").unwrap_err();
        assert_eq!((e.line, e.column), (1, 10));
        assert!(e.message.contains("unclosed"), "{e}");
    }

    #[test]
    fn rectoy_parses_with_arithmetic() {
        let src = "rectoy(N,M) :- N = 0, M = 0.\n\
                   rectoy(N,M) :- N1 is N-1, rectoy(N1,R), M is N1+R.\n";
        let p = parse(src).unwrap();
        let r2 = &p.rules()[1];
        assert_eq!(r2.body.len(), 3);
        assert_eq!(
            r2.to_string(),
            "rectoy(N, M) :- N1 is N - 1, rectoy(N1, R), M is N1 + R."
        );
    }

    #[test]
    fn lists_and_precedence() {
        let p = parse("f(X) :- X = [a, b|T], Y is 1 + 2 * -3, Z = -(W).").unwrap();
        assert_eq!(
            p.rules()[0].to_string(),
            "f(X) :- X = [a, b|T], Y is 1 + (2 * (-3)), Z = -W."
        );
    }

    #[test]
    fn comparisons_rejected() {
        assert!(parse("p(N) :- N > 0.").is_err());
        assert!(parse("p(N) :- N =< 0.").is_err());
    }

    #[test]
    fn reserved_variable_names_rejected() {
        let e = parse("p(_G1).").unwrap_err();
        assert!(e.message.contains("reserved"));
        // anonymous variables are fine and become distinct
        let p = parse("p(_, _).").unwrap();
        let vars = p.rules()[0].vars();
        assert_eq!(vars.len(), 2);
    }

    #[test]
    fn predicate_indicator() {
        let a = parse_atom("rectoy(N,M)").unwrap();
        assert_eq!(a.pred.to_string(), "rectoy/2");
        assert!(parse_atom("X").is_err());
        assert!(parse_atom("p(X) q").is_err());
    }

    #[test]
    fn floats_with_exponent() {
        let p = parse("p(X) :- X = 1.5e3, Y = 2e-2.").unwrap();
        assert_eq!(p.rules()[0].to_string(), "p(X) :- X = 1500.0, Y = 0.02.");
    }
}
