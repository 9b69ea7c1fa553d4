//! Scans a function body for call expressions, method calls and raw
//! pointer dereferences, tracking whether each sits in an unsafe context.

use std::collections::BTreeMap;

use super::lexer::{TokKind, Token};

const KEYWORDS: &[&str] = &[
    "as", "break", "const", "continue", "else", "fn", "for", "if", "impl", "in", "let", "loop", "match", "mod",
    "move", "mut", "ref", "return", "static", "struct", "unsafe", "use", "where", "while", "dyn", "async", "await",
];

/// Keywords after which a `*` starts an expression rather than multiplying.
const PREFIX_CONTEXT: &[&str] = &["return", "in", "if", "match", "while", "let", "else", "break", "unsafe", "mut", "move"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Receiver {
    SelfValue,
    Var(String),
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Call { path: Vec<String> },
    Method { name: String, receiver: Receiver },
    Deref,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Site {
    pub event: Event,
    pub in_unsafe: bool,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Default)]
pub struct BodyScan {
    pub sites: Vec<Site>,
    /// Local variable → leading type name of its initializer or annotation.
    pub bindings: BTreeMap<String, String>,
}

fn is_keyword(t: &Token) -> bool {
    t.is_ident() && KEYWORDS.contains(&t.text.as_str())
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_uppercase())
}

fn ends_operand(t: &Token) -> bool {
    match t.kind {
        TokKind::Ident => !PREFIX_CONTEXT.contains(&t.text.as_str()),
        TokKind::Literal => true,
        TokKind::Punct => t.is(")") || t.is("]"),
        _ => false,
    }
}

/// Index just past a `<..>` group starting at `i`, treating `>>` as two closers.
fn skip_angles(toks: &[Token], mut i: usize) -> usize {
    let mut depth = 0i32;
    while i < toks.len() {
        match toks[i].text.as_str() {
            "<" => depth += 1,
            ">" => depth -= 1,
            ">>" => depth -= 2,
            _ => {}
        }
        i += 1;
        if depth <= 0 {
            break;
        }
    }
    i
}

pub fn scan_body(toks: &[Token], fn_unsafe: bool) -> BodyScan {
    let mut out = BodyScan::default();
    let mut depth = 0usize;
    let mut unsafe_blocks: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        let in_unsafe = fn_unsafe || !unsafe_blocks.is_empty();
        let prev = i.checked_sub(1).map(|p| &toks[p]);
        let push = |out: &mut BodyScan, event: Event| {
            out.sites.push(Site { event, in_unsafe, line: t.line, column: t.column });
        };

        if t.is("{") {
            depth += 1;
            if prev.is_some_and(|p| p.is("unsafe")) {
                unsafe_blocks.push(depth);
            }
            i += 1;
            continue;
        }
        if t.is("}") {
            if unsafe_blocks.last() == Some(&depth) {
                unsafe_blocks.pop();
            }
            depth = depth.saturating_sub(1);
            i += 1;
            continue;
        }
        if t.is("let") {
            if let Some((var, ty)) = let_binding(&toks[i + 1..]) {
                out.bindings.insert(var, ty);
            }
            i += 1;
            continue;
        }
        if t.is("*") {
            let prefix = !prev.is_some_and(ends_operand);
            let next_is_ptr_kw = toks.get(i + 1).is_some_and(|n| n.is("const") || n.is("mut"));
            if prefix && !next_is_ptr_kw {
                push(&mut out, Event::Deref);
            }
            i += 1;
            continue;
        }
        if t.is(".") {
            if let Some(name) = toks.get(i + 1).filter(|n| n.is_ident()) {
                let mut j = i + 2;
                if toks.get(j).is_some_and(|n| n.is("::")) && toks.get(j + 1).is_some_and(|n| n.is("<")) {
                    j = skip_angles(toks, j + 1);
                }
                if toks.get(j).is_some_and(|n| n.is("(")) {
                    let receiver = receiver_of(toks, i);
                    out.sites.push(Site {
                        event: Event::Method { name: name.text.clone(), receiver },
                        in_unsafe,
                        line: name.line,
                        column: name.column,
                    });
                }
                i += 2;
                continue;
            }
            i += 1;
            continue;
        }
        if t.is_ident() && !is_keyword(t) && !prev.is_some_and(|p| p.is(".") || p.is("::")) {
            // macro invocation: skip the name, scan the arguments
            if toks.get(i + 1).is_some_and(|n| n.is("!")) {
                i += 2;
                continue;
            }
            let mut segs = vec![t.text.clone()];
            let mut j = i + 1;
            loop {
                if toks.get(j).is_some_and(|n| n.is("::")) {
                    match toks.get(j + 1) {
                        Some(n) if n.is("<") => j = skip_angles(toks, j + 1),
                        Some(n) if n.is_ident() => {
                            segs.push(n.text.clone());
                            j += 2;
                        }
                        _ => break,
                    }
                } else {
                    break;
                }
            }
            let last = segs.last().unwrap();
            if toks.get(j).is_some_and(|n| n.is("(")) && !starts_upper(last) {
                push(&mut out, Event::Call { path: segs });
            }
            i = j;
            continue;
        }
        i += 1;
    }
    out
}

fn receiver_of(toks: &[Token], dot: usize) -> Receiver {
    let Some(prev) = dot.checked_sub(1).map(|p| &toks[p]) else {
        return Receiver::Other;
    };
    let before = dot.checked_sub(2).map(|p| &toks[p]);
    let chained = before.is_some_and(|b| b.is(".") || b.is("::"));
    if prev.is_ident() && !chained {
        if prev.is("self") {
            return Receiver::SelfValue;
        }
        if !is_keyword(prev) {
            return Receiver::Var(prev.text.clone());
        }
    }
    Receiver::Other
}

/// `let [mut] x [: Ty] = [unsafe {] Ty::..` → (x, Ty).
fn let_binding(rest: &[Token]) -> Option<(String, String)> {
    let mut i = 0;
    if rest.first()?.is("mut") {
        i += 1;
    }
    let var = rest.get(i).filter(|t| t.is_ident())?;
    i += 1;
    if rest.get(i).is_some_and(|t| t.is(":")) {
        i += 1;
        while rest.get(i).is_some_and(|t| t.is("&") || t.is("mut") || t.kind == TokKind::Lifetime) {
            i += 1;
        }
        let ty = rest.get(i).filter(|t| t.is_ident() && starts_upper(&t.text))?;
        return Some((var.text.clone(), ty.text.clone()));
    }
    if !rest.get(i).is_some_and(|t| t.is("=")) {
        return None;
    }
    i += 1;
    while rest.get(i).is_some_and(|t| t.is("unsafe") || t.is("{") || t.is("&") || t.is("mut")) {
        i += 1;
    }
    let ty = rest.get(i).filter(|t| t.is_ident() && starts_upper(&t.text))?;
    let next = rest.get(i + 1)?;
    (next.is("::") || next.is("{")).then(|| (var.text.clone(), ty.text.clone()))
}

#[cfg(test)]
mod tests {
    use super::super::lexer::tokenize;
    use super::*;

    fn scan(src: &str, fn_unsafe: bool) -> BodyScan {
        scan_body(&tokenize(src).unwrap(), fn_unsafe)
    }

    fn unsafe_events(s: &BodyScan) -> Vec<Event> {
        s.sites.iter().filter(|s| s.in_unsafe).map(|s| s.event.clone()).collect()
    }

    #[test]
    fn deref_and_method_inside_unsafe_block() {
        let s = scan("if x < self.len { unsafe { *self.ptr.offset(x as isize) } } else { 0 }", false);
        assert_eq!(
            unsafe_events(&s),
            vec![Event::Deref, Event::Method { name: "offset".into(), receiver: Receiver::Other }]
        );
    }

    #[test]
    fn calls_outside_unsafe_are_marked_safe() {
        let s = scan("let mut v = vec![1,2,3]; let s2 = unsafe { St2::from(p, 0)}; unsafe { s2.set_len(p, l)}; let t2 = s2.get(0);", false);
        let all: Vec<_> = s.sites.iter().map(|s| (s.event.clone(), s.in_unsafe)).collect();
        assert_eq!(
            all,
            vec![
                (Event::Call { path: vec!["St2".into(), "from".into()] }, true),
                (Event::Method { name: "set_len".into(), receiver: Receiver::Var("s2".into()) }, true),
                (Event::Method { name: "get".into(), receiver: Receiver::Var("s2".into()) }, false),
            ]
        );
        assert_eq!(s.bindings["s2"], "St2");
    }

    #[test]
    fn multiplication_and_pointer_types_are_not_derefs() {
        let s = scan("let n = a * b; let p = x as *const u8; let q: *mut u8 = y;", true);
        assert!(unsafe_events(&s).is_empty());
    }

    #[test]
    fn turbofish_and_tuple_constructors() {
        let s = scan("let b = mem::transmute::<u8, i8>(x); Some(Bx(p))", true);
        assert_eq!(unsafe_events(&s), vec![Event::Call { path: vec!["mem".into(), "transmute".into()] }]);
    }

    #[test]
    fn self_receiver() {
        let s = scan("self.inner()", true);
        assert_eq!(unsafe_events(&s), vec![Event::Method { name: "inner".into(), receiver: Receiver::SelfValue }]);
    }
}
