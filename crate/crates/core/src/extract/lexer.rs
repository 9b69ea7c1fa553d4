//! Tokenizer for the supported source subset. Comments are dropped except
//! outer line doc comments, which are kept as tokens.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    Lifetime,
    Literal,
    Punct,
    Doc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    pub line: usize,
    pub column: usize,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.kind != TokKind::Literal && self.kind != TokKind::Doc && self.text == text
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokKind::Ident
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

const PUNCT3: &[&str] = &["<<=", ">>=", "...", "..="];
const PUNCT2: &[&str] = &[
    "::", "->", "=>", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "^=", "&=", "|=", "<<",
    ">>", "..",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! advance {
        ($n:expr) => {
            for _ in 0..$n {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        let (l0, c0) = (line, col);
        let err = |message: &str| LexError { line: l0, column: c0, message: message.to_string() };

        if c.is_whitespace() {
            advance!(1);
            continue;
        }
        if c == '/' && next == Some('/') {
            let start = i;
            while i < chars.len() && chars[i] != '\n' {
                advance!(1);
            }
            let text: String = chars[start..i].iter().collect();
            // `///` but not `////`
            if let Some(body) = text.strip_prefix("///") {
                if !body.starts_with('/') {
                    toks.push(Token { kind: TokKind::Doc, text: body.trim().to_string(), line: l0, column: c0 });
                }
            }
            continue;
        }
        if c == '/' && next == Some('*') {
            let mut depth = 0usize;
            loop {
                if i >= chars.len() {
                    return Err(err("unterminated block comment"));
                }
                if chars[i] == '/' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    advance!(2);
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    depth -= 1;
                    advance!(2);
                    if depth == 0 {
                        break;
                    }
                } else {
                    advance!(1);
                }
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            // raw strings and byte strings
            if (c == 'r' || c == 'b') && matches!(next, Some('"') | Some('#') | Some('\'')) {
                if let Some(n) = string_prefix_len(&chars[i..]) {
                    let text: String = chars[i..i + n].iter().collect();
                    advance!(n);
                    toks.push(Token { kind: TokKind::Literal, text, line: l0, column: c0 });
                    continue;
                }
            }
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                advance!(1);
            }
            toks.push(Token { kind: TokKind::Ident, text: chars[start..i].iter().collect(), line: l0, column: c0 });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                advance!(1);
            }
            // fractional part, but not a range or a method call
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                advance!(1);
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    advance!(1);
                }
            }
            toks.push(Token { kind: TokKind::Literal, text: chars[start..i].iter().collect(), line: l0, column: c0 });
            continue;
        }
        if c == '"' {
            let n = quoted_len(&chars[i..], '"').ok_or_else(|| err("unterminated string literal"))?;
            let text: String = chars[i..i + n].iter().collect();
            advance!(n);
            toks.push(Token { kind: TokKind::Literal, text, line: l0, column: c0 });
            continue;
        }
        if c == '\'' {
            // char literal or lifetime
            if let Some(n) = quoted_len(&chars[i..], '\'').filter(|&n| n <= 12 && is_char_literal(&chars[i..i + n])) {
                let text: String = chars[i..i + n].iter().collect();
                advance!(n);
                toks.push(Token { kind: TokKind::Literal, text, line: l0, column: c0 });
                continue;
            }
            let start = i;
            advance!(1);
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                advance!(1);
            }
            if i == start + 1 {
                return Err(err("stray quote"));
            }
            toks.push(Token { kind: TokKind::Lifetime, text: chars[start..i].iter().collect(), line: l0, column: c0 });
            continue;
        }
        let rest: String = chars[i..(i + 3).min(chars.len())].iter().collect();
        let width = if PUNCT3.iter().any(|p| rest.starts_with(p)) {
            3
        } else if PUNCT2.iter().any(|p| rest.starts_with(p)) {
            2
        } else {
            1
        };
        let text: String = chars[i..i + width].iter().collect();
        advance!(width);
        toks.push(Token { kind: TokKind::Punct, text, line: l0, column: c0 });
    }
    Ok(toks)
}

/// Length of a quoted literal starting at `s[0] == q`, honoring escapes.
fn quoted_len(s: &[char], q: char) -> Option<usize> {
    let mut i = 1;
    while i < s.len() {
        match s[i] {
            '\\' => i += 2,
            c if c == q => return Some(i + 1),
            '\n' if q == '\'' => return None,
            _ => i += 1,
        }
    }
    None
}

fn is_char_literal(s: &[char]) -> bool {
    s.len() == 3 || (s.len() > 3 && s[1] == '\\')
}

/// `b"..."`, `b'.'`, `r"..."`, `r#"..."#`, `br"..."`.
fn string_prefix_len(s: &[char]) -> Option<usize> {
    let mut i = 0;
    if s.first() == Some(&'b') {
        i += 1;
    }
    if s.get(i) == Some(&'r') {
        i += 1;
        let mut hashes = 0;
        while s.get(i) == Some(&'#') {
            hashes += 1;
            i += 1;
        }
        if s.get(i) != Some(&'"') {
            return None;
        }
        i += 1;
        loop {
            if i >= s.len() {
                return None;
            }
            if s[i] == '"' && (0..hashes).all(|h| s.get(i + 1 + h) == Some(&'#')) {
                return Some(i + 1 + hashes);
            }
            i += 1;
        }
    }
    match s.get(i) {
        Some('"') => quoted_len(&s[i..], '"').map(|n| n + i),
        Some('\'') => quoted_len(&s[i..], '\'').map(|n| n + i),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        tokenize(src).unwrap().into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn keeps_doc_comments_and_drops_others() {
        let toks = tokenize("/// SAFETY: Align(p, T)\n// plain\n/* block /* nested */ */ fn f() {}").unwrap();
        assert_eq!(toks[0].kind, TokKind::Doc);
        assert_eq!(toks[0].text, "SAFETY: Align(p, T)");
        assert_eq!(toks[1].text, "fn");
        assert_eq!(toks[1].line, 3);
    }

    #[test]
    fn lifetimes_chars_and_strings() {
        assert_eq!(texts("&'a [T]"), ["&", "'a", "[", "T", "]"]);
        assert_eq!(texts("'x' '\\n' \"a\\\"b\""), ["'x'", "'\\n'", "\"a\\\"b\""]);
        assert_eq!(texts("r#\"raw\"# b\"x\""), ["r#\"raw\"#", "b\"x\""]);
    }

    #[test]
    fn multi_char_punctuation() {
        assert_eq!(texts("a::b -> c => 0..n"), ["a", "::", "b", "->", "c", "=>", "0", "..", "n"]);
        assert_eq!(texts("x.0 + 1.5"), ["x", ".", "0", "+", "1.5"]);
    }
}
