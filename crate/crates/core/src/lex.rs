//! Python-style tokenizer shared by the sketch parser and the target-module
//! scanner.
//!
//! The tokenizer follows the layout rules of the target language: logical
//! lines end in `Newline` tokens, indentation changes produce `Indent` and
//! `Dedent`, and newlines inside brackets are ignored. Comments are dropped.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Name,
    Number,
    Str,
    Op,
    Newline,
    Indent,
    Dedent,
    EndMarker,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub text: String,
    /// Byte offset of the first character in the source.
    pub start: usize,
    /// Byte offset one past the last character.
    pub end: usize,
    /// 1-based line.
    pub line: u32,
    /// 1-based column, counted in characters.
    pub col: u32,
}

impl Token {
    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokKind::Op && self.text == op
    }

    pub fn is_name(&self, name: &str) -> bool {
        self.kind == TokKind::Name && self.text == name
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct LexError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

pub const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
    "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
    "try", "while", "with", "yield",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "==", "!=", "<=", ">=", "<<",
    ">>", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@",
    "&", "|", "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ";", ".", "=",
];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn error(&self, message: impl Into<String>) -> LexError {
        LexError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }
}

/// Tokenizes `src`. The result always ends with `EndMarker`, preceded by the
/// `Newline`/`Dedent` tokens needed to close every open line and block.
pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut toks: Vec<Token> = Vec::new();
    let mut indents: Vec<usize> = vec![0];
    let mut brackets: Vec<(char, u32, u32)> = Vec::new();
    let mut at_line_start = true;
    let mut line_has_tokens = false;

    loop {
        if at_line_start && brackets.is_empty() {
            // Measure indentation; skip blank and comment-only lines.
            let mut width = 0usize;
            while let Some(c) = cur.peek() {
                match c {
                    ' ' => width += 1,
                    '\t' => width = (width / 8 + 1) * 8,
                    '\x0c' => width = 0,
                    _ => break,
                }
                cur.bump();
            }
            match cur.peek() {
                None => break,
                Some('\n') => {
                    cur.bump();
                    continue;
                }
                Some('\r') => {
                    cur.bump();
                    continue;
                }
                Some('#') => {
                    skip_comment(&mut cur);
                    continue;
                }
                Some('\\') if matches!(cur.peek_at(1), Some('\n') | Some('\r')) => {
                    return Err(cur.error("line continuation at start of line"));
                }
                _ => {}
            }
            let top = *indents.last().unwrap_or(&0);
            if width > top {
                indents.push(width);
                toks.push(Token {
                    kind: TokKind::Indent,
                    text: String::new(),
                    start: cur.pos,
                    end: cur.pos,
                    line: cur.line,
                    col: cur.col,
                });
            } else if width < top {
                while *indents.last().unwrap_or(&0) > width {
                    indents.pop();
                    toks.push(Token {
                        kind: TokKind::Dedent,
                        text: String::new(),
                        start: cur.pos,
                        end: cur.pos,
                        line: cur.line,
                        col: cur.col,
                    });
                }
                if *indents.last().unwrap_or(&0) != width {
                    return Err(cur.error("unindent does not match any outer indentation level"));
                }
            }
            at_line_start = false;
        }

        let Some(c) = cur.peek() else { break };
        match c {
            ' ' | '\t' | '\x0c' | '\r' => {
                cur.bump();
            }
            '#' => skip_comment(&mut cur),
            '\\' => {
                cur.bump();
                match cur.peek() {
                    Some('\n') => {
                        cur.bump();
                    }
                    Some('\r') => {
                        cur.bump();
                        if cur.peek() == Some('\n') {
                            cur.bump();
                        }
                    }
                    _ => return Err(cur.error("unexpected character after line continuation")),
                }
            }
            '\n' => {
                if brackets.is_empty() {
                    if line_has_tokens {
                        toks.push(Token {
                            kind: TokKind::Newline,
                            text: "\n".into(),
                            start: cur.pos,
                            end: cur.pos + 1,
                            line: cur.line,
                            col: cur.col,
                        });
                    }
                    line_has_tokens = false;
                    at_line_start = true;
                }
                cur.bump();
            }
            c if is_string_start(&cur) => {
                let _ = c;
                let tok = lex_string(&mut cur)?;
                toks.push(tok);
                line_has_tokens = true;
            }
            c if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                toks.push(lex_number(&mut cur)?);
                line_has_tokens = true;
            }
            c if c == '_' || c.is_alphabetic() => {
                let (start, line, col) = (cur.pos, cur.line, cur.col);
                while let Some(c) = cur.peek() {
                    if c == '_' || c.is_alphanumeric() {
                        cur.bump();
                    } else {
                        break;
                    }
                }
                toks.push(Token {
                    kind: TokKind::Name,
                    text: src[start..cur.pos].to_string(),
                    start,
                    end: cur.pos,
                    line,
                    col,
                });
                line_has_tokens = true;
            }
            _ => {
                let (start, line, col) = (cur.pos, cur.line, cur.col);
                let Some(op) = OPERATORS.iter().find(|op| cur.rest().starts_with(**op)) else {
                    return Err(cur.error(format!("unexpected character {c:?}")));
                };
                for _ in 0..op.chars().count() {
                    cur.bump();
                }
                match *op {
                    "(" | "[" | "{" => brackets.push((c, line, col)),
                    ")" | "]" | "}" => {
                        let want = match *op {
                            ")" => '(',
                            "]" => '[',
                            _ => '{',
                        };
                        match brackets.pop() {
                            Some((open, _, _)) if open == want => {}
                            Some((open, l, cc)) => {
                                return Err(LexError {
                                    line,
                                    col,
                                    message: format!("closing {op:?} does not match {open:?} opened at {l}:{cc}"),
                                })
                            }
                            None => {
                                return Err(LexError {
                                    line,
                                    col,
                                    message: format!("unmatched {op:?}"),
                                })
                            }
                        }
                    }
                    _ => {}
                }
                toks.push(Token {
                    kind: TokKind::Op,
                    text: (*op).to_string(),
                    start,
                    end: cur.pos,
                    line,
                    col,
                });
                line_has_tokens = true;
            }
        }
    }

    if let Some((open, line, col)) = brackets.pop() {
        return Err(LexError {
            line,
            col,
            message: format!("{open:?} was never closed"),
        });
    }
    let end = src.len();
    if line_has_tokens {
        toks.push(Token {
            kind: TokKind::Newline,
            text: String::new(),
            start: end,
            end,
            line: cur.line,
            col: cur.col,
        });
    }
    while indents.len() > 1 {
        indents.pop();
        toks.push(Token {
            kind: TokKind::Dedent,
            text: String::new(),
            start: end,
            end,
            line: cur.line,
            col: cur.col,
        });
    }
    toks.push(Token {
        kind: TokKind::EndMarker,
        text: String::new(),
        start: end,
        end,
        line: cur.line,
        col: cur.col,
    });
    Ok(toks)
}

fn skip_comment(cur: &mut Cursor<'_>) {
    while let Some(c) = cur.peek() {
        if c == '\n' {
            break;
        }
        cur.bump();
    }
}

fn is_string_start(cur: &Cursor<'_>) -> bool {
    let rest = cur.rest();
    let prefix_len = rest
        .chars()
        .take_while(|c| matches!(c, 'r' | 'R' | 'b' | 'B' | 'u' | 'U' | 'f' | 'F'))
        .count();
    if prefix_len > 2 {
        return false;
    }
    matches!(rest[prefix_len..].chars().next(), Some('"') | Some('\''))
}

fn lex_string(cur: &mut Cursor<'_>) -> Result<Token, LexError> {
    let (start, line, col) = (cur.pos, cur.line, cur.col);
    let mut raw = false;
    while let Some(c) = cur.peek() {
        if c == '"' || c == '\'' {
            break;
        }
        if c == 'r' || c == 'R' {
            raw = true;
        }
        cur.bump();
    }
    let quote = cur.bump().expect("string start checked");
    let triple = cur.peek() == Some(quote) && cur.peek_at(1) == Some(quote);
    if triple {
        cur.bump();
        cur.bump();
    }
    loop {
        let Some(c) = cur.bump() else {
            return Err(LexError {
                line,
                col,
                message: "unterminated string literal".into(),
            });
        };
        match c {
            '\\' => {
                // Even raw strings cannot end in an odd backslash.
                let _ = raw;
                if cur.bump().is_none() {
                    return Err(LexError {
                        line,
                        col,
                        message: "unterminated string literal".into(),
                    });
                }
            }
            '\n' if !triple => {
                return Err(LexError {
                    line,
                    col,
                    message: "unterminated string literal".into(),
                })
            }
            c if c == quote => {
                if !triple {
                    break;
                }
                if cur.peek() == Some(quote) && cur.peek_at(1) == Some(quote) {
                    cur.bump();
                    cur.bump();
                    break;
                }
            }
            _ => {}
        }
    }
    Ok(Token {
        kind: TokKind::Str,
        text: cur.src[start..cur.pos].to_string(),
        start,
        end: cur.pos,
        line,
        col,
    })
}

fn lex_number(cur: &mut Cursor<'_>) -> Result<Token, LexError> {
    let (start, line, col) = (cur.pos, cur.line, cur.col);
    let rest = cur.rest();
    if rest.starts_with("0x") || rest.starts_with("0X") || rest.starts_with("0o") || rest.starts_with("0b") || rest.starts_with("0O") || rest.starts_with("0B") {
        cur.bump();
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_hexdigit() || c == '_') {
            cur.bump();
        }
    } else {
        while cur.peek().is_some_and(|c| c.is_ascii_digit() || c == '_') {
            cur.bump();
        }
        if cur.peek() == Some('.') {
            cur.bump();
            while cur.peek().is_some_and(|c| c.is_ascii_digit() || c == '_') {
                cur.bump();
            }
        }
        if matches!(cur.peek(), Some('e') | Some('E')) {
            let sign = cur.peek_at(1);
            let digit_at = if matches!(sign, Some('+') | Some('-')) { 2 } else { 1 };
            if cur.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                for _ in 0..digit_at {
                    cur.bump();
                }
                while cur.peek().is_some_and(|c| c.is_ascii_digit() || c == '_') {
                    cur.bump();
                }
            }
        }
        if matches!(cur.peek(), Some('j') | Some('J')) {
            cur.bump();
        }
    }
    if cur.peek().is_some_and(|c| c.is_alphabetic() || c == '_') {
        return Err(cur.error("invalid number literal"));
    }
    Ok(Token {
        kind: TokKind::Number,
        text: cur.src[start..cur.pos].to_string(),
        start,
        end: cur.pos,
        line,
        col,
    })
}

/// Decodes the value of a string literal token (prefix and quotes included).
pub fn string_value(token_text: &str) -> Result<String, String> {
    let prefix_len = token_text
        .chars()
        .take_while(|c| !matches!(c, '"' | '\''))
        .count();
    let prefix = &token_text[..prefix_len];
    let raw = prefix.contains(['r', 'R']);
    if prefix.contains(['b', 'B']) {
        return Err("byte strings are not supported".into());
    }
    if prefix.contains(['f', 'F']) {
        return Err("f-strings are not supported".into());
    }
    let body = &token_text[prefix_len..];
    let quote_len = if body.len() >= 6 && (body.starts_with("\"\"\"") || body.starts_with("'''")) {
        3
    } else {
        1
    };
    let inner = &body[quote_len..body.len() - quote_len];
    if raw {
        return Ok(inner.to_string());
    }
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            None => return Err("trailing backslash".into()),
            Some('\n') => {}
            Some('\\') => out.push('\\'),
            Some('\'') => out.push('\''),
            Some('"') => out.push('"'),
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('0') => out.push('\0'),
            Some('a') => out.push('\x07'),
            Some('b') => out.push('\x08'),
            Some('f') => out.push('\x0c'),
            Some('v') => out.push('\x0b'),
            Some('x') => {
                let hex: String = chars.by_ref().take(2).collect();
                let v = u32::from_str_radix(&hex, 16).map_err(|_| format!("bad \\x escape {hex:?}"))?;
                out.push(char::from_u32(v).ok_or("bad \\x escape")?);
            }
            Some('u') => {
                let hex: String = chars.by_ref().take(4).collect();
                let v = u32::from_str_radix(&hex, 16).map_err(|_| format!("bad \\u escape {hex:?}"))?;
                out.push(char::from_u32(v).ok_or("bad \\u escape")?);
            }
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
        }
    }
    Ok(out)
}

/// Renders `value` as a double-quoted literal that `string_value` decodes back
/// to the same text.
pub fn quote_string(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    out.push('"');
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 || c == '\x7f' => out.push_str(&format!("\\x{:02x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokKind::Name => "name",
            TokKind::Number => "number",
            TokKind::Str => "string",
            TokKind::Op => "operator",
            TokKind::Newline => "newline",
            TokKind::Indent => "indent",
            TokKind::Dedent => "dedent",
            TokKind::EndMarker => "end of input",
        };
        f.write_str(s)
    }
}
