//! Recursive-descent parser for safety-property annotations.
//!
//! ```text
//! expr  := conj ('||' conj)*
//! conj  := atom ('&&' atom)*
//! atom  := '(' expr ')' | term
//! term  := '!'? Tag '(' (arg (',' arg)*)? ')' ('@' usage)?
//! ```

use std::fmt;

use thiserror::Error;

use super::ast::{AriExpr, SpArg, SpExpr, SpTerm, Usage, ValRange, BIN_OPS, UNI_OPS};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Bang,
    AndAnd,
    OrOr,
    Amp,
    PathSep,
    Dot,
    Lt,
    Gt,
    At,
    Minus,
    Star,
    Other(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Num(s) => f.write_str(s),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::LBrack => f.write_str("["),
            Tok::RBrack => f.write_str("]"),
            Tok::Comma => f.write_str(","),
            Tok::Bang => f.write_str("!"),
            Tok::AndAnd => f.write_str("&&"),
            Tok::OrOr => f.write_str("||"),
            Tok::Amp => f.write_str("&"),
            Tok::PathSep => f.write_str("::"),
            Tok::Dot => f.write_str("."),
            Tok::Lt => f.write_str("<"),
            Tok::Gt => f.write_str(">"),
            Tok::At => f.write_str("@"),
            Tok::Minus => f.write_str("-"),
            Tok::Star => f.write_str("*"),
            Tok::Other(c) => write!(f, "{c}"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at column {column}: expected {}, found `{found}`", expected.join(" or "))]
pub struct SyntaxError {
    /// 1-based character column.
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Num(chars[start..i].iter().collect()), col));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('&', Some('&')) => (Tok::AndAnd, 2),
            ('|', Some('|')) => (Tok::OrOr, 2),
            (':', Some(':')) => (Tok::PathSep, 2),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('[', _) => (Tok::LBrack, 1),
            (']', _) => (Tok::RBrack, 1),
            (',', _) => (Tok::Comma, 1),
            ('!', _) => (Tok::Bang, 1),
            ('&', _) => (Tok::Amp, 1),
            ('.', _) => (Tok::Dot, 1),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('@', _) => (Tok::At, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            (other, _) => (Tok::Other(other), 1),
        };
        out.push((tok, col));
        i += width;
    }
    out.push((Tok::Eof, chars.len() + 1));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

/// Parse one annotation expression.
pub fn parse_sp(text: &str) -> Result<SpExpr, SyntaxError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.expr()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(e)
}

/// Parse a comma-separated annotation line, e.g. a `SAFETY:` doc line.
/// Commas inside parentheses belong to the terms.
pub fn parse_sp_list(text: &str) -> Result<Vec<SpExpr>, SyntaxError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut out = vec![p.expr()?];
    while p.peek() == &Tok::Comma {
        p.bump();
        out.push(p.expr()?);
    }
    p.expect(Tok::Eof, "`,` or end of input")?;
    Ok(out)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            column: self.toks[self.pos].1,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[what]))
        }
    }

    fn expr(&mut self) -> Result<SpExpr, SyntaxError> {
        let mut parts = vec![self.conj()?];
        while *self.peek() == Tok::OrOr {
            self.bump();
            parts.push(self.conj()?);
        }
        Ok(SpExpr::or(parts))
    }

    fn conj(&mut self) -> Result<SpExpr, SyntaxError> {
        let mut parts = vec![self.atom()?];
        while *self.peek() == Tok::AndAnd {
            self.bump();
            parts.push(self.atom()?);
        }
        Ok(SpExpr::and(parts))
    }

    fn atom(&mut self) -> Result<SpExpr, SyntaxError> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let e = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(e);
        }
        self.term().map(SpExpr::Term)
    }

    fn term(&mut self) -> Result<SpTerm, SyntaxError> {
        let negated = if *self.peek() == Tok::Bang {
            self.bump();
            true
        } else {
            false
        };
        let tag = match self.peek().clone() {
            Tok::Ident(name) if name.chars().all(|c| c.is_ascii_alphanumeric()) => {
                self.bump();
                name
            }
            _ => return Err(self.error(&["tag name", "`(`"])),
        };
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            args.push(self.arg()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.arg()?);
            }
        }
        self.expect(Tok::RParen, "`,` or `)`")?;
        let usage = if *self.peek() == Tok::At {
            self.bump();
            match self.bump() {
                Tok::Ident(u) => match Usage::parse(&u) {
                    Some(u) => Some(u),
                    None => {
                        self.pos -= 1;
                        return Err(self.error(&["precond", "hazard", "option"]));
                    }
                },
                _ => {
                    self.pos -= 1;
                    return Err(self.error(&["usage class"]));
                }
            }
        } else {
            None
        };
        Ok(SpTerm { negated, tag, args, usage })
    }

    fn arg(&mut self) -> Result<SpArg, SyntaxError> {
        match self.peek().clone() {
            Tok::LParen | Tok::LBrack => self.group(),
            Tok::Num(n) => {
                self.bump();
                Ok(if n == "0" { SpArg::RetVal } else { SpArg::Ari(AriExpr::Num(n)) })
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Num(_)) => {
                self.bump();
                let Tok::Num(n) = self.bump() else { unreachable!() };
                Ok(SpArg::Ari(AriExpr::Num(format!("-{n}"))))
            }
            Tok::Bang => {
                self.bump();
                match self.bump() {
                    Tok::Num(n) | Tok::Ident(n) => Ok(SpArg::Spec(format!("!{n}"))),
                    _ => {
                        self.pos -= 1;
                        Err(self.error(&["number or identifier after `!`"]))
                    }
                }
            }
            Tok::Ident(_) => self.ident_arg(),
            Tok::Amp | Tok::Star => self.spec_text().map(SpArg::Spec),
            _ => Err(self.error(&["argument"])),
        }
    }

    /// `( .. )` or `[ .. ]`: a value range or an address tuple.
    fn group(&mut self) -> Result<SpArg, SyntaxError> {
        let open = self.bump();
        let mut items = Vec::new();
        if !matches!(self.peek(), Tok::RParen | Tok::RBrack) {
            items.push(self.arg()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                items.push(self.arg()?);
            }
        }
        let close = self.peek().clone();
        if !matches!(close, Tok::RParen | Tok::RBrack) {
            return Err(self.error(&["`,`", "`)`", "`]`"]));
        }
        let close_col = self.toks[self.pos].1;
        self.bump();
        let bracketed = open == Tok::LBrack || close == Tok::RBrack;
        let as_vals = || -> Option<(String, String)> {
            if items.len() != 2 {
                return None;
            }
            let v0 = range_value(&items[0], bracketed)?;
            let v1 = range_value(&items[1], bracketed)?;
            Some((v0, v1))
        };
        match as_vals() {
            Some((lo, hi)) => {
                if let (Ok(a), Ok(b)) = (lo.parse::<i128>(), hi.parse::<i128>()) {
                    if a > b {
                        return Err(SyntaxError {
                            column: close_col,
                            expected: vec![format!("range with lower bound <= {hi}")],
                            found: lo,
                        });
                    }
                }
                Ok(SpArg::ValRange(ValRange {
                    lo,
                    hi,
                    lo_closed: open == Tok::LBrack,
                    hi_closed: close == Tok::RBrack,
                }))
            }
            None if bracketed => Err(SyntaxError {
                column: close_col,
                expected: vec!["two range bounds".into()],
                found: format!("{} element(s)", items.len()),
            }),
            None => Ok(SpArg::AddrRange(items)),
        }
    }

    fn ident_arg(&mut self) -> Result<SpArg, SyntaxError> {
        let start = self.pos;
        let Tok::Ident(first) = self.bump() else { unreachable!() };
        let mut path = first.clone();
        let mut has_path_sep = false;
        let mut has_dot = false;
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Tok::PathSep, Tok::Ident(_)) => {
                    self.bump();
                    let Tok::Ident(seg) = self.bump() else { unreachable!() };
                    path.push_str("::");
                    path.push_str(&seg);
                    has_path_sep = true;
                }
                (Tok::Dot, Tok::Ident(_) | Tok::Num(_)) => {
                    self.bump();
                    let (Tok::Ident(seg) | Tok::Num(seg)) = self.bump() else { unreachable!() };
                    path.push('.');
                    path.push_str(&seg);
                    has_dot = true;
                }
                _ => break,
            }
        }
        match self.peek() {
            Tok::LParen if !has_path_sep && !has_dot => {
                let is_ari = path == "sizeof" || BIN_OPS.contains(&path.as_str()) || UNI_OPS.contains(&path.as_str());
                if is_ari {
                    self.pos = start;
                    return self.ari().map(SpArg::Ari);
                }
                self.pos = start;
                self.spec_text().map(SpArg::Spec)
            }
            Tok::LParen | Tok::Lt => {
                self.pos = start;
                self.spec_text().map(SpArg::Spec)
            }
            _ if has_path_sep => Ok(SpArg::Spec(path)),
            _ if has_dot => Ok(SpArg::FnParId(path)),
            _ if first.starts_with(|c: char| c.is_ascii_uppercase()) => Ok(SpArg::TypePar(path)),
            _ => Ok(SpArg::FnParId(path)),
        }
    }

    fn ari(&mut self) -> Result<AriExpr, SyntaxError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(AriExpr::Num(n))
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Num(_)) => {
                self.bump();
                let Tok::Num(n) = self.bump() else { unreachable!() };
                Ok(AriExpr::Num(format!("-{n}")))
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() != Tok::LParen {
                    let mut path = name;
                    while *self.peek() == Tok::Dot || *self.peek() == Tok::PathSep {
                        let sep = self.bump();
                        match self.bump() {
                            Tok::Ident(seg) | Tok::Num(seg) => {
                                path.push_str(&sep.to_string());
                                path.push_str(&seg);
                            }
                            _ => {
                                self.pos -= 1;
                                return Err(self.error(&["identifier"]));
                            }
                        }
                    }
                    return Ok(AriExpr::Var(path));
                }
                self.bump();
                if name == "sizeof" {
                    let ty = self.spec_text()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(AriExpr::SizeOf(ty));
                }
                if BIN_OPS.contains(&name.as_str()) {
                    let a = self.ari()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let b = self.ari()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(AriExpr::Bin(name, Box::new(a), Box::new(b)));
                }
                if UNI_OPS.contains(&name.as_str()) {
                    let a = self.ari()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(AriExpr::Uni(name, Box::new(a)));
                }
                self.pos -= 2;
                Err(self.error(&["arithmetic operator"]))
            }
            _ => Err(self.error(&["arithmetic expression"])),
        }
    }

    /// Collect tokens up to the next top-level `,` or closing bracket and
    /// render them canonically.
    fn spec_text(&mut self) -> Result<String, SyntaxError> {
        let mut depth = 0usize;
        let mut out = String::new();
        let mut prev_word = false;
        let start = self.pos;
        loop {
            let tok = self.peek().clone();
            match tok {
                Tok::Eof => break,
                Tok::Comma | Tok::RParen | Tok::RBrack | Tok::AndAnd | Tok::OrOr if depth == 0 => break,
                Tok::Gt if depth == 0 => break,
                Tok::LParen | Tok::LBrack | Tok::Lt => depth += 1,
                Tok::RParen | Tok::RBrack | Tok::Gt => depth -= 1,
                _ => {}
            }
            let word = matches!(tok, Tok::Ident(_) | Tok::Num(_));
            if word && prev_word {
                out.push(' ');
            }
            out.push_str(&tok.to_string());
            if tok == Tok::Comma {
                out.push(' ');
            }
            prev_word = word;
            self.bump();
        }
        if self.pos == start {
            return Err(self.error(&["argument"]));
        }
        Ok(out)
    }
}

fn range_value(arg: &SpArg, loose: bool) -> Option<String> {
    match arg {
        SpArg::RetVal => Some("0".into()),
        SpArg::Ari(AriExpr::Num(n)) => Some(n.clone()),
        SpArg::Spec(s) if s.contains("::") && !s.contains('(') => Some(s.clone()),
        SpArg::FnParId(s) | SpArg::TypePar(s) if loose => Some(s.clone()),
        _ => None,
    }
}
