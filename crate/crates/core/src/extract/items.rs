//! Item-level parser: modules, type definitions, impl blocks and function
//! signatures. Function bodies are kept as token lists.

use std::collections::BTreeMap;

use super::lexer::{TokKind, Token};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfKind {
    Value,
    Ref,
    RefMut,
}

#[derive(Debug, Clone)]
pub struct RawFn {
    pub name: String,
    pub is_pub: bool,
    pub is_unsafe: bool,
    /// Generic parameter name → bound identifiers (fn and enclosing impl).
    pub bounds: BTreeMap<String, Vec<String>>,
    pub self_kind: Option<SelfKind>,
    pub params: Vec<(String, Vec<Token>)>,
    pub ret: Option<Vec<Token>>,
    pub body: Option<Vec<Token>>,
    pub docs: Vec<Token>,
}

#[derive(Debug, Clone)]
pub struct RawImpl {
    pub type_name: String,
    pub trait_name: Option<String>,
    pub fns: Vec<RawFn>,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdtShape {
    Struct,
    Enum,
    Union,
}

#[derive(Debug, Clone)]
pub struct RawAdt {
    pub name: String,
    pub shape: AdtShape,
    pub bounds: BTreeMap<String, Vec<String>>,
    /// (name, is_pub, type tokens)
    pub fields: Vec<(String, bool, Vec<Token>)>,
}

#[derive(Debug, Clone, Default)]
pub struct RawModule {
    /// `a::b`; empty for the crate root.
    pub path: String,
    /// Source file the module was read from.
    pub file: String,
    pub fns: Vec<RawFn>,
    pub impls: Vec<RawImpl>,
    pub adts: Vec<RawAdt>,
    /// Imported name → full path segments.
    pub uses: BTreeMap<String, Vec<String>>,
    pub children: Vec<RawModule>,
}

pub fn parse_module(toks: &[Token], path: &str, file: &str) -> Result<RawModule, ParseError> {
    let mut p = ItemParser { toks, pos: 0 };
    let mut m = p.items(path, false)?;
    set_file(&mut m, file);
    Ok(m)
}

fn set_file(m: &mut RawModule, file: &str) {
    m.file = file.to_string();
    for c in &mut m.children {
        set_file(c, file);
    }
}

struct ItemParser<'a> {
    toks: &'a [Token],
    pos: usize,
}

fn join_path(base: &str, name: &str) -> String {
    if base.is_empty() {
        name.to_string()
    } else {
        format!("{base}::{name}")
    }
}

impl<'a> ItemParser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(text))
    }

    fn peek_at_is(&self, k: usize, text: &str) -> bool {
        self.toks.get(self.pos + k).is_some_and(|t| t.is(text))
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let (line, column) = match self.peek().or_else(|| self.toks.last()) {
            Some(t) => (t.line, t.column),
            None => (1, 1),
        };
        ParseError { line, column, message: message.into() }
    }

    fn expect(&mut self, text: &str) -> Result<&'a Token, ParseError> {
        if self.peek_is(text) {
            Ok(self.bump().unwrap())
        } else {
            let found = self.peek().map(|t| t.text.clone()).unwrap_or_else(|| "end of file".into());
            Err(self.error_here(format!("expected `{text}`, found `{found}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a Token, ParseError> {
        match self.peek() {
            Some(t) if t.is_ident() => Ok(self.bump().unwrap()),
            other => {
                let found = other.map(|t| t.text.clone()).unwrap_or_else(|| "end of file".into());
                Err(self.error_here(format!("expected identifier, found `{found}`")))
            }
        }
    }

    /// Consume a bracketed group starting at the current opening token and
    /// return the tokens strictly inside it.
    fn group(&mut self) -> Result<Vec<Token>, ParseError> {
        let open = self.bump().ok_or_else(|| self.error_here("unexpected end of file"))?;
        let close = match open.text.as_str() {
            "(" => ")",
            "[" => "]",
            "{" => "}",
            "<" => ">",
            _ => return Err(ParseError { line: open.line, column: open.column, message: "expected a group".into() }),
        };
        let angle = close == ">";
        let start = self.pos;
        let mut depth = 1i32;
        while let Some(t) = self.peek() {
            if t.kind == TokKind::Punct {
                let d = match (t.text.as_str(), angle) {
                    ("(" | "[" | "{", _) => 1,
                    (")" | "]" | "}", _) => -1,
                    ("<", true) => 1,
                    (">", true) => -1,
                    (">>", true) => -2,
                    _ => 0,
                };
                if !angle || !matches!(t.text.as_str(), "(" | "[" | "{" | ")" | "]" | "}") {
                    depth += d;
                } else {
                    // brackets inside generics do not affect angle depth
                }
                if depth <= 0 {
                    let inner = self.toks[start..self.pos].to_vec();
                    self.pos += 1;
                    return Ok(inner);
                }
            }
            self.pos += 1;
        }
        Err(ParseError { line: open.line, column: open.column, message: format!("unclosed `{}`", open.text) })
    }

    fn skip_attribute(&mut self) -> Result<(), ParseError> {
        self.expect("#")?;
        if self.peek_is("!") {
            self.bump();
        }
        if !self.peek_is("[") {
            return Err(self.error_here("expected `[` after `#`"));
        }
        self.group()?;
        Ok(())
    }

    /// Returns true for plain `pub`; restricted visibility counts as private.
    fn visibility(&mut self) -> Result<bool, ParseError> {
        if !self.peek_is("pub") {
            return Ok(false);
        }
        self.bump();
        if self.peek_is("(") {
            self.group()?;
            return Ok(false);
        }
        Ok(true)
    }

    fn items(&mut self, path: &str, nested: bool) -> Result<RawModule, ParseError> {
        let mut m = RawModule { path: path.to_string(), ..Default::default() };
        let mut docs: Vec<Token> = Vec::new();
        loop {
            let Some(t) = self.peek() else {
                if nested {
                    return Err(self.error_here("unclosed module"));
                }
                return Ok(m);
            };
            if t.kind == TokKind::Doc {
                docs.push(t.clone());
                self.bump();
                continue;
            }
            if t.is("}") && nested {
                self.bump();
                return Ok(m);
            }
            if t.is("#") {
                self.skip_attribute()?;
                continue;
            }
            let is_pub = self.visibility()?;
            let Some(kw) = self.peek() else {
                return Err(self.error_here("expected an item"));
            };
            match kw.text.as_str() {
                "use" if kw.is_ident() => {
                    self.bump();
                    self.use_decl(&mut m.uses)?;
                }
                "mod" if kw.is_ident() => {
                    self.bump();
                    let name = self.ident()?.text.clone();
                    if self.peek_is(";") {
                        self.bump();
                    } else {
                        self.expect("{")?;
                        let child = self.items(&join_path(path, &name), true)?;
                        m.children.push(child);
                    }
                }
                "struct" | "union" | "enum" if kw.is_ident() => {
                    let adt = self.adt()?;
                    m.adts.push(adt);
                }
                "impl" if kw.is_ident() => {
                    let imp = self.impl_block()?;
                    m.impls.push(imp);
                }
                "unsafe" if self.peek_at_is(1, "impl") => {
                    self.bump();
                    let imp = self.impl_block()?;
                    m.impls.push(imp);
                }
                "trait" => self.skip_trait()?,
                "unsafe" if self.peek_at_is(1, "trait") => {
                    self.bump();
                    self.skip_trait()?;
                }
                "fn" | "const" | "unsafe" | "async" if kw.is_ident() => {
                    if kw.is("const") && !(self.peek_at_is(1, "fn") || self.peek_at_is(1, "unsafe")) {
                        return Err(self.error_here("`const` items are outside the supported subset"));
                    }
                    let f = self.function(is_pub, std::mem::take(&mut docs), &BTreeMap::new())?;
                    m.fns.push(f);
                }
                other => {
                    return Err(self.error_here(format!("`{other}` items are outside the supported subset")));
                }
            }
            docs.clear();
        }
    }

    fn use_decl(&mut self, uses: &mut BTreeMap<String, Vec<String>>) -> Result<(), ParseError> {
        let mut toks = Vec::new();
        while let Some(t) = self.bump() {
            if t.is(";") {
                break;
            }
            toks.push(t.clone());
        }
        collect_uses(&toks, &[], uses);
        Ok(())
    }

    fn generics(&mut self) -> Result<BTreeMap<String, Vec<String>>, ParseError> {
        if !self.peek_is("<") {
            return Ok(BTreeMap::new());
        }
        let inner = self.group()?;
        Ok(parse_bounds(&inner))
    }

    fn where_clause(&mut self, bounds: &mut BTreeMap<String, Vec<String>>) {
        if !self.peek_is("where") {
            return;
        }
        self.bump();
        let start = self.pos;
        while let Some(t) = self.peek() {
            if t.is("{") || t.is(";") {
                break;
            }
            self.pos += 1;
        }
        for (k, v) in parse_bounds(&self.toks[start..self.pos]) {
            bounds.entry(k).or_default().extend(v);
        }
    }

    fn adt(&mut self) -> Result<RawAdt, ParseError> {
        let kw = self.bump().unwrap();
        let shape = match kw.text.as_str() {
            "struct" => AdtShape::Struct,
            "union" => AdtShape::Union,
            _ => AdtShape::Enum,
        };
        let name_tok = self.ident()?;
        let mut bounds = self.generics()?;
        self.where_clause(&mut bounds);
        let mut fields = Vec::new();
        if self.peek_is(";") {
            self.bump();
        } else if self.peek_is("(") {
            let inner = self.group()?;
            for (i, part) in split_top_level(&inner).into_iter().enumerate() {
                let (is_pub, ty) = strip_field_vis(&part);
                fields.push((i.to_string(), is_pub, ty));
            }
            self.where_clause(&mut bounds);
            self.expect(";")?;
        } else if self.peek_is("{") {
            let inner = self.group()?;
            if shape != AdtShape::Enum {
                for part in split_top_level(&inner) {
                    let (is_pub, rest) = strip_field_vis(&part);
                    let colon = rest.iter().position(|t| t.is(":"));
                    match (rest.first(), colon) {
                        (Some(n), Some(c)) if n.is_ident() => {
                            fields.push((n.text.clone(), is_pub, rest[c + 1..].to_vec()));
                        }
                        _ => {
                            let t = part.first().unwrap_or(name_tok);
                            return Err(ParseError { line: t.line, column: t.column, message: "malformed field".into() });
                        }
                    }
                }
            }
        } else {
            return Err(self.error_here("expected `{`, `(` or `;` after type name"));
        }
        Ok(RawAdt { name: name_tok.text.clone(), shape, bounds, fields })
    }

    fn skip_trait(&mut self) -> Result<(), ParseError> {
        self.expect("trait")?;
        self.ident()?;
        while let Some(t) = self.peek() {
            if t.is("{") {
                self.group()?;
                return Ok(());
            }
            if t.is("<") {
                self.group()?;
                continue;
            }
            self.pos += 1;
        }
        Err(self.error_here("unterminated trait"))
    }

    fn impl_block(&mut self) -> Result<RawImpl, ParseError> {
        let kw = self.expect("impl")?;
        let mut bounds = self.generics()?;
        let first = self.type_path()?;
        let (type_name, trait_name) = if self.peek_is("for") {
            self.bump();
            let ty = self.type_path()?;
            (ty, Some(first))
        } else {
            (first, None)
        };
        self.where_clause(&mut bounds);
        self.expect("{")?;
        let mut fns = Vec::new();
        let mut docs = Vec::new();
        loop {
            let Some(t) = self.peek() else {
                return Err(ParseError { line: kw.line, column: kw.column, message: "unclosed impl block".into() });
            };
            if t.kind == TokKind::Doc {
                docs.push(t.clone());
                self.bump();
                continue;
            }
            if t.is("}") {
                self.bump();
                break;
            }
            if t.is("#") {
                self.skip_attribute()?;
                continue;
            }
            let is_pub = self.visibility()? || trait_name.is_some();
            if self.peek_is("type") || (self.peek_is("const") && !self.peek_at_is(1, "fn") && !self.peek_at_is(1, "unsafe")) {
                // associated items carry no unsafety of their own
                while let Some(t) = self.bump() {
                    if t.is(";") {
                        break;
                    }
                }
                docs.clear();
                continue;
            }
            let f = self.function(is_pub, std::mem::take(&mut docs), &bounds)?;
            fns.push(f);
        }
        Ok(RawImpl { type_name, trait_name, fns, line: kw.line, column: kw.column })
    }

    /// `a::b::Name<..>` → `Name`; references and generic arguments are skipped.
    fn type_path(&mut self) -> Result<String, ParseError> {
        while self.peek_is("&") || self.peek_is("mut") || self.peek().is_some_and(|t| t.kind == TokKind::Lifetime) {
            self.bump();
        }
        let mut name = self.ident()?.text.clone();
        loop {
            if self.peek_is("<") {
                self.group()?;
            } else if self.peek_is("::") {
                self.bump();
                if self.peek_is("<") {
                    continue;
                }
                name = self.ident()?.text.clone();
            } else {
                return Ok(name);
            }
        }
    }

    fn function(
        &mut self,
        is_pub: bool,
        docs: Vec<Token>,
        outer_bounds: &BTreeMap<String, Vec<String>>,
    ) -> Result<RawFn, ParseError> {
        let mut is_unsafe = false;
        loop {
            match self.peek() {
                Some(t) if t.is("const") || t.is("async") => {
                    self.bump();
                }
                Some(t) if t.is("unsafe") => {
                    is_unsafe = true;
                    self.bump();
                }
                Some(t) if t.is("extern") => {
                    return Err(self.error_here("`extern` functions are outside the supported subset"));
                }
                _ => break,
            }
        }
        self.expect("fn")?;
        let name_tok = self.ident()?;
        let mut bounds = outer_bounds.clone();
        for (k, v) in self.generics()? {
            bounds.insert(k, v);
        }
        if !self.peek_is("(") {
            return Err(self.error_here("expected `(`"));
        }
        let inner = self.group()?;
        let mut self_kind = None;
        let mut params = Vec::new();
        for (i, part) in split_top_level(&inner).into_iter().enumerate() {
            if i == 0 {
                if let Some(k) = self_param(&part) {
                    self_kind = Some(k);
                    continue;
                }
            }
            let Some(colon) = top_level_colon(&part) else {
                let t = &part[0];
                return Err(ParseError { line: t.line, column: t.column, message: "parameter without a type".into() });
            };
            let pat = &part[..colon];
            let name = match pat {
                [t] if t.is_ident() => t.text.clone(),
                [m, t] if m.is("mut") && t.is_ident() => t.text.clone(),
                _ => "_".to_string(),
            };
            params.push((name, part[colon + 1..].to_vec()));
        }
        let mut ret = None;
        if self.peek_is("->") {
            self.bump();
            let start = self.pos;
            let mut depth = 0i32;
            while let Some(t) = self.peek() {
                if depth == 0 && (t.is("{") || t.is(";") || t.is("where")) {
                    break;
                }
                match t.text.as_str() {
                    "(" | "[" | "<" if t.kind == TokKind::Punct => depth += 1,
                    ")" | "]" | ">" if t.kind == TokKind::Punct => depth -= 1,
                    ">>" if t.kind == TokKind::Punct => depth -= 2,
                    _ => {}
                }
                self.pos += 1;
            }
            ret = Some(self.toks[start..self.pos].to_vec());
        }
        self.where_clause(&mut bounds);
        let body = if self.peek_is(";") {
            self.bump();
            None
        } else if self.peek_is("{") {
            Some(self.group()?)
        } else {
            return Err(self.error_here("expected function body"));
        };
        Ok(RawFn {
            name: name_tok.text.clone(),
            is_pub,
            is_unsafe,
            bounds,
            self_kind,
            params,
            ret,
            body,
            docs,
        })
    }
}

fn self_param(part: &[Token]) -> Option<SelfKind> {
    let texts: Vec<&str> = part
        .iter()
        .filter(|t| t.kind != TokKind::Lifetime)
        .map(|t| t.text.as_str())
        .collect();
    match texts.as_slice() {
        ["self"] | ["mut", "self"] => Some(SelfKind::Value),
        ["&", "self"] => Some(SelfKind::Ref),
        ["&", "mut", "self"] => Some(SelfKind::RefMut),
        ["self", ":", rest @ ..] | ["mut", "self", ":", rest @ ..] => Some(match rest {
            ["&", "mut", ..] => SelfKind::RefMut,
            ["&", ..] => SelfKind::Ref,
            _ => SelfKind::Value,
        }),
        _ => None,
    }
}

fn top_level_colon(part: &[Token]) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in part.iter().enumerate() {
        if t.kind != TokKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" | "<" => depth += 1,
            ")" | "]" | "}" | ">" => depth -= 1,
            ":" if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

fn strip_field_vis(part: &[Token]) -> (bool, Vec<Token>) {
    let mut i = 0;
    while part.get(i).is_some_and(|t| t.is("#")) {
        // attribute on a field: `#` `[ .. ]`
        i += 1;
        let mut depth = 0;
        while let Some(t) = part.get(i) {
            i += 1;
            if t.is("[") {
                depth += 1;
            } else if t.is("]") {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
        }
    }
    if part.get(i).is_some_and(|t| t.is("pub")) {
        if part.get(i + 1).is_some_and(|t| t.is("(")) {
            let close = part[i..].iter().position(|t| t.is(")")).map(|p| p + i + 1).unwrap_or(part.len());
            return (false, part[close..].to_vec());
        }
        return (true, part[i + 1..].to_vec());
    }
    (false, part[i..].to_vec())
}

/// Split on commas that are not nested in any bracket (including angles).
pub fn split_top_level(toks: &[Token]) -> Vec<Vec<Token>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    let mut depth = 0i32;
    for t in toks {
        if t.kind == TokKind::Punct {
            match t.text.as_str() {
                "(" | "[" | "{" | "<" => depth += 1,
                ")" | "]" | "}" | ">" => depth -= 1,
                ">>" => depth -= 2,
                "," if depth == 0 => {
                    if !cur.is_empty() {
                        out.push(std::mem::take(&mut cur));
                    }
                    continue;
                }
                _ => {}
            }
        }
        cur.push(t.clone());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// `T: Bound + Other<X>, 'a, const N: usize` → {T: [Bound, Other], N: [usize]}.
pub fn parse_bounds(toks: &[Token]) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for part in split_top_level(toks) {
        let part: Vec<&Token> = part.iter().filter(|t| !t.is("const")).collect();
        let Some(first) = part.first() else { continue };
        if !first.is_ident() {
            continue;
        }
        let entry = out.entry(first.text.clone()).or_default();
        if part.get(1).is_some_and(|t| t.is(":")) {
            let owned: Vec<Token> = part[2..].iter().map(|t| (*t).clone()).collect();
            entry.extend(bound_names(&owned));
        }
    }
    out
}

/// Trait names in a `A + B<X> + Fn(u8) -> u8` bound list. Closure-trait
/// bounds are rendered as their normalized `fn(..) -> ..` signature.
pub fn bound_names(toks: &[Token]) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        match t.text.as_str() {
            "<" | "(" => depth += 1,
            ">" | ")" => depth -= 1,
            ">>" => depth -= 2,
            "=" if depth == 0 => break,
            "Fn" | "FnMut" | "FnOnce" if depth == 0 && toks.get(i + 1).is_some_and(|n| n.is("(")) => {
                let mut end = i + 1;
                let mut d = 0i32;
                while end < toks.len() {
                    let e = &toks[end];
                    if e.is("(") || e.is("<") {
                        d += 1;
                    } else if e.is(")") || e.is(">") {
                        d -= 1;
                    } else if d == 0 && e.is("+") {
                        break;
                    }
                    end += 1;
                }
                out.push(format!("fn{}", type_text(&toks[i + 1..end])));
                i = end;
                continue;
            }
            _ if depth == 0 && t.is_ident() && t.text != "dyn" && t.text != "for" && t.text != "impl" => {
                out.push(t.text.clone())
            }
            _ => {}
        }
        i += 1;
    }
    out
}

/// Canonical spelling of a type: words separated by single spaces, a space
/// after commas and around `->`, nothing elsewhere.
pub fn type_text(toks: &[Token]) -> String {
    let mut s = String::new();
    let mut prev_word = false;
    for t in toks.iter().filter(|t| t.kind != TokKind::Lifetime) {
        let word = matches!(t.kind, TokKind::Ident | TokKind::Literal);
        if t.is("->") {
            s.push_str(" -> ");
        } else if t.is(",") {
            s.push_str(", ");
        } else {
            if word && prev_word {
                s.push(' ');
            }
            s.push_str(&t.text);
        }
        prev_word = word;
    }
    s.trim().to_string()
}

fn collect_uses(toks: &[Token], prefix: &[String], out: &mut BTreeMap<String, Vec<String>>) {
    for part in split_top_level_braces(toks) {
        let mut segs = prefix.to_vec();
        let mut i = 0;
        let mut handled = false;
        while i < part.len() {
            let t = &part[i];
            if t.is("::") {
                i += 1;
                continue;
            }
            if t.is("{") {
                let inner_end = part.len() - usize::from(part.last().is_some_and(|l| l.is("}")));
                collect_uses(&part[i + 1..inner_end], &segs, out);
                handled = true;
                break;
            }
            if t.is("as") {
                if let Some(alias) = part.get(i + 1) {
                    out.insert(alias.text.clone(), segs.clone());
                }
                handled = true;
                break;
            }
            if t.is("*") {
                handled = true;
                break;
            }
            segs.push(t.text.clone());
            i += 1;
        }
        if !handled {
            if let Some(last) = segs.last() {
                if last == "self" {
                    segs.pop();
                }
                if let Some(name) = segs.last() {
                    out.insert(name.clone(), segs.clone());
                }
            }
        }
    }
}

/// Like [`split_top_level`] but only braces nest (paths have no other brackets).
fn split_top_level_braces(toks: &[Token]) -> Vec<Vec<Token>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    let mut depth = 0i32;
    for t in toks {
        if t.is("{") {
            depth += 1;
        } else if t.is("}") {
            depth -= 1;
        } else if t.is(",") && depth == 0 {
            out.push(std::mem::take(&mut cur));
            continue;
        }
        cur.push(t.clone());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::lexer::tokenize;
    use super::*;

    fn parse(src: &str) -> RawModule {
        parse_module(&tokenize(src).unwrap(), "", "lib.rs").unwrap()
    }

    #[test]
    fn structs_and_field_visibility() {
        let m = parse("struct St1 { ptr: *mut u8, len: usize }\npub struct St2 { pub ptr: *mut u8, pub len: usize }");
        assert_eq!(m.adts.len(), 2);
        assert!(!m.adts[0].fields[0].1);
        assert!(m.adts[1].fields.iter().all(|f| f.1));
        let m = parse("pub struct W(pub u8, u16);");
        assert_eq!(m.adts[0].fields.len(), 2);
        assert!(m.adts[0].fields[0].1 && !m.adts[0].fields[1].1);
    }

    #[test]
    fn impl_methods_and_self_kinds() {
        let m = parse(
            "impl<T, A: Allocator> Bx<T, A> {\n/// SAFETY: Align(raw, T)\npub unsafe fn from_raw_in(raw: *mut T, alloc: A) -> Self { Bx(raw, alloc) }\nfn set(&mut self, v: T) {}\nfn get(&self) -> &T { loop {} }\n}",
        );
        let imp = &m.impls[0];
        assert_eq!(imp.type_name, "Bx");
        assert_eq!(imp.fns.len(), 3);
        let f = &imp.fns[0];
        assert!(f.is_unsafe && f.is_pub && f.self_kind.is_none());
        assert_eq!(f.docs.len(), 1);
        assert_eq!(f.bounds.get("A").unwrap(), &vec!["Allocator".to_string()]);
        assert_eq!(imp.fns[1].self_kind, Some(SelfKind::RefMut));
        assert_eq!(imp.fns[2].self_kind, Some(SelfKind::Ref));
    }

    #[test]
    fn trait_impls_and_modules() {
        let m = parse("trait Tr { unsafe fn go(&self); }\nmod inner { pub fn f() {} }\nimpl Tr for S { unsafe fn go(&self) {} }");
        assert_eq!(m.children[0].path, "inner");
        assert_eq!(m.impls[0].trait_name.as_deref(), Some("Tr"));
        assert!(m.impls[0].fns[0].is_pub);
    }

    #[test]
    fn use_declarations() {
        let m = parse("use core::{ptr, slice::{self, from_raw_parts as frp}};\nuse std::ffi::CStr;");
        assert_eq!(m.uses["ptr"], vec!["core", "ptr"]);
        assert_eq!(m.uses["slice"], vec!["core", "slice"]);
        assert_eq!(m.uses["frp"], vec!["core", "slice", "from_raw_parts"]);
        assert_eq!(m.uses["CStr"], vec!["std", "ffi", "CStr"]);
    }

    #[test]
    fn unsupported_items_are_errors() {
        let err = parse_module(&tokenize("static X: u8 = 0;").unwrap(), "", "lib.rs").unwrap_err();
        assert!(err.message.contains("outside the supported subset"));
        assert_eq!((err.line, err.column), (1, 1));
    }
}
