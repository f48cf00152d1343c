//! Token-level scanner for generated target-language modules.
//!
//! Generated code is arbitrary target-language source, not sketch syntax, so
//! it is never parsed into a tree. The scanner only splits a module into its
//! top-level items and computes, per function, the free identifiers its body
//! references.

use crate::lex::{self, LexError, TokKind, Token};
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ItemKind {
    Function(FunctionDef),
    Import,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub kind: ItemKind,
    /// Source text of the item, ending in a newline.
    pub text: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    /// Free identifiers referenced by the body (and default values), minus
    /// keywords, builtins and locals. Includes the function's own name when
    /// it recurses.
    pub references: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TargetModule {
    pub items: Vec<Item>,
}

impl TargetModule {
    pub fn functions(&self) -> impl Iterator<Item = (&FunctionDef, &str)> {
        self.items.iter().filter_map(|i| match &i.kind {
            ItemKind::Function(f) => Some((f, i.text.as_str())),
            _ => None,
        })
    }

    pub fn imports(&self) -> impl Iterator<Item = &str> {
        self.items
            .iter()
            .filter(|i| i.kind == ItemKind::Import)
            .map(|i| i.text.as_str())
    }
}

/// Builtins of the target language. References to these never become edges.
pub const BUILTINS: &[&str] = &[
    "abs", "aiter", "all", "anext", "any", "ascii", "bin", "bool", "breakpoint", "bytearray", "bytes",
    "callable", "chr", "classmethod", "compile", "complex", "copyright", "credits", "delattr", "dict", "dir",
    "divmod", "enumerate", "eval", "exec", "exit", "filter", "float", "format", "frozenset", "getattr",
    "globals", "hasattr", "hash", "help", "hex", "id", "input", "int", "isinstance", "issubclass", "iter",
    "len", "license", "list", "locals", "map", "max", "memoryview", "min", "next", "object", "oct", "open",
    "ord", "pow", "print", "property", "quit", "range", "repr", "reversed", "round", "set", "setattr",
    "slice", "sorted", "staticmethod", "str", "sum", "super", "tuple", "type", "vars", "zip", "__import__",
    "__name__", "NotImplemented", "Ellipsis", "ArithmeticError", "AssertionError", "AttributeError",
    "BaseException", "Exception", "IndexError", "KeyError", "LookupError", "NameError",
    "NotImplementedError", "OverflowError", "RecursionError", "RuntimeError", "StopIteration",
    "TypeError", "ValueError", "ZeroDivisionError",
];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

pub fn scan_module(src: &str) -> Result<TargetModule, LexError> {
    let toks = lex::tokenize(src)?;
    let mut items = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        match toks[i].kind {
            TokKind::EndMarker => break,
            TokKind::Newline | TokKind::Dedent | TokKind::Indent => {
                i += 1;
                continue;
            }
            _ => {}
        }
        let start = i;
        let end = item_end(&toks, start);
        let first_real = toks[start..end]
            .iter()
            .position(|t| !t.is_op("@") && t.kind != TokKind::Newline)
            .map(|p| start + p);
        let header = skip_decorators(&toks, start, end);
        let text = slice_lines(src, &toks[start], &toks[last_real(&toks, start, end)]);
        let kind = match header.map(|h| &toks[h]) {
            Some(t) if t.is_name("def") => match function_def(&toks[header.unwrap()..end]) {
                Some(f) => ItemKind::Function(f),
                None => ItemKind::Other,
            },
            Some(t) if t.is_name("async") && toks.get(header.unwrap() + 1).is_some_and(|n| n.is_name("def")) => {
                match function_def(&toks[header.unwrap() + 1..end]) {
                    Some(f) => ItemKind::Function(f),
                    None => ItemKind::Other,
                }
            }
            _ if first_real.is_some_and(|p| toks[p].is_name("import") || toks[p].is_name("from")) => {
                ItemKind::Import
            }
            _ => ItemKind::Other,
        };
        items.push(Item {
            kind,
            text,
            line: toks[start].line,
        });
        i = end;
    }
    Ok(TargetModule { items })
}

/// Index one past the last token of the top-level item beginning at `start`.
fn item_end(toks: &[Token], start: usize) -> usize {
    let mut depth = 0i32;
    let mut i = start;
    while i < toks.len() {
        match toks[i].kind {
            TokKind::EndMarker => return i,
            TokKind::Indent => depth += 1,
            TokKind::Dedent => {
                depth -= 1;
                if depth == 0 {
                    return i + 1;
                }
            }
            TokKind::Newline if depth == 0 => {
                // decorators continue into the decorated definition
                if toks[start].is_op("@") && !next_is_top_level_def(toks, i + 1) {
                    return i + 1;
                }
                if !toks[start].is_op("@") && toks.get(i + 1).is_none_or(|t| t.kind != TokKind::Indent) {
                    return i + 1;
                }
            }
            _ => {}
        }
        i += 1;
    }
    i
}

fn next_is_top_level_def(toks: &[Token], i: usize) -> bool {
    toks.get(i).is_some_and(|t| t.col == 1 && (t.is_op("@") || t.is_name("def") || t.is_name("async") || t.is_name("class")))
        || toks.get(i).is_some_and(|t| t.kind == TokKind::Indent)
}

fn skip_decorators(toks: &[Token], start: usize, end: usize) -> Option<usize> {
    let mut i = start;
    while i < end && toks[i].is_op("@") {
        while i < end && toks[i].kind != TokKind::Newline {
            i += 1;
        }
        i += 1;
    }
    (i < end).then_some(i)
}

fn last_real(toks: &[Token], start: usize, end: usize) -> usize {
    (start..end)
        .rev()
        .find(|&i| !matches!(toks[i].kind, TokKind::Newline | TokKind::Dedent | TokKind::Indent))
        .unwrap_or(start)
}

fn slice_lines(src: &str, first: &Token, last: &Token) -> String {
    let begin = src[..first.start].rfind('\n').map(|p| p + 1).unwrap_or(0);
    let end = src[last.end..].find('\n').map(|p| last.end + p).unwrap_or(src.len());
    let mut text: String = src[begin..end]
        .lines()
        .map(str::trim_end)
        .collect::<Vec<_>>()
        .join("\n");
    text.push('\n');
    text
}

fn function_def(toks: &[Token]) -> Option<FunctionDef> {
    let name_tok = toks.get(1)?;
    if name_tok.kind != TokKind::Name || lex::is_keyword(&name_tok.text) || !toks.get(2)?.is_op("(") {
        return None;
    }
    let (params, header_end) = header_params(toks, 2)?;
    let locals = local_names(toks, header_end, &params);
    let body = &toks[3..];
    let mut references = BTreeSet::new();
    for idx in 0..body.len() {
        let t = &body[idx];
        if t.kind != TokKind::Name || lex::is_keyword(&t.text) || is_builtin(&t.text) {
            continue;
        }
        let abs = idx + 3;
        if is_attribute(toks, abs) || is_keyword_arg(toks, abs) || locals.contains(&t.text) {
            continue;
        }
        // parameter names inside the header
        if abs < header_end && params.contains(&t.text) {
            continue;
        }
        references.insert(t.text.clone());
    }
    Some(FunctionDef {
        name: name_tok.text.clone(),
        params,
        references,
    })
}

/// Parses `( ... ) [-> ann] :` starting at the opening paren. Returns the
/// parameter names and the index just past the colon.
fn header_params(toks: &[Token], open: usize) -> Option<(Vec<String>, usize)> {
    let mut params = Vec::new();
    let mut depth = 0i32;
    let mut expect_name = true;
    let mut i = open;
    while i < toks.len() {
        let t = &toks[i];
        if t.kind == TokKind::Op {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                "," if depth == 1 => expect_name = true,
                "*" | "**" | "/" if depth == 1 => {}
                _ if depth == 1 => expect_name = false,
                _ => {}
            }
        } else if t.kind == TokKind::Name && depth == 1 && expect_name {
            params.push(t.text.clone());
            expect_name = false;
        } else if depth == 1 {
            expect_name = false;
        }
        i += 1;
    }
    // skip to the colon ending the header
    while i < toks.len() && !(toks[i].is_op(":")) {
        if toks[i].kind == TokKind::Newline {
            return None;
        }
        i += 1;
    }
    Some((params, i + 1))
}

fn is_attribute(toks: &[Token], i: usize) -> bool {
    i > 0 && toks[i - 1].is_op(".")
}

/// `name=` inside a call's parentheses.
fn is_keyword_arg(toks: &[Token], i: usize) -> bool {
    if !toks.get(i + 1).is_some_and(|t| t.is_op("=")) {
        return false;
    }
    enclosing_bracket(toks, i).is_some_and(|b| toks[b].is_op("("))
}

fn enclosing_bracket(toks: &[Token], i: usize) -> Option<usize> {
    let mut depth = 0i32;
    for j in (0..i).rev() {
        let t = &toks[j];
        if t.kind == TokKind::Newline || t.kind == TokKind::Indent || t.kind == TokKind::Dedent {
            return None;
        }
        if t.kind != TokKind::Op {
            continue;
        }
        match t.text.as_str() {
            ")" | "]" | "}" => depth += 1,
            "(" | "[" | "{" => {
                if depth == 0 {
                    return Some(j);
                }
                depth -= 1;
            }
            _ => {}
        }
    }
    None
}

/// Names bound anywhere inside the function (the target language's scoping
/// makes an assignment anywhere in the body shadow the global).
fn local_names(toks: &[Token], body_start: usize, params: &[String]) -> BTreeSet<String> {
    let mut locals: BTreeSet<String> = params.iter().cloned().collect();
    let mut globals: BTreeSet<String> = BTreeSet::new();
    let bind = |locals: &mut BTreeSet<String>, t: &Token| {
        if t.kind == TokKind::Name && !lex::is_keyword(&t.text) {
            locals.insert(t.text.clone());
        }
    };
    let mut line_start = body_start;
    let mut i = body_start;
    while i < toks.len() {
        let t = &toks[i];
        match t.kind {
            TokKind::Newline | TokKind::Indent | TokKind::Dedent | TokKind::EndMarker => {
                bind_assignment_targets(&toks[line_start..i], &mut locals);
                line_start = i + 1;
                i += 1;
                continue;
            }
            _ => {}
        }
        if t.is_name("for") {
            let mut j = i + 1;
            while j < toks.len() && !toks[j].is_name("in") && toks[j].kind != TokKind::Newline {
                if toks[j].kind == TokKind::Name && !toks.get(j + 1).is_some_and(|n| n.is_op(".") || n.is_op("[")) {
                    bind(&mut locals, &toks[j]);
                }
                j += 1;
            }
        } else if t.is_name("as") || t.is_name("def") || t.is_name("class") {
            if let Some(n) = toks.get(i + 1) {
                bind(&mut locals, n);
            }
            if t.is_name("def") {
                if let Some((inner, _)) = header_params(toks, i + 2) {
                    locals.extend(inner);
                }
            }
        } else if t.is_name("lambda") {
            let mut j = i + 1;
            while j < toks.len() && !toks[j].is_op(":") {
                if toks[j].kind == TokKind::Name && !toks[j - 1].is_op("=") {
                    bind(&mut locals, &toks[j]);
                }
                j += 1;
            }
        } else if t.is_name("import") {
            let mut j = i + 1;
            while j < toks.len() && toks[j].kind != TokKind::Newline {
                let n = &toks[j];
                let prev_sep = toks[j - 1].is_name("import") || toks[j - 1].is_op(",") || toks[j - 1].is_op("(");
                // `import a.b` binds `a`; with `as`, the alias is bound by the `as` branch
                if n.kind == TokKind::Name && prev_sep && !toks.get(j + 1).is_some_and(|x| x.is_name("as")) {
                    bind(&mut locals, n);
                }
                j += 1;
            }
        } else if t.is_name("global") || t.is_name("nonlocal") {
            let mut j = i + 1;
            while j < toks.len() && toks[j].kind != TokKind::Newline {
                if toks[j].kind == TokKind::Name {
                    globals.insert(toks[j].text.clone());
                }
                j += 1;
            }
        } else if t.is_op(":=") && i > 0 {
            bind(&mut locals, &toks[i - 1]);
        }
        i += 1;
    }
    for g in globals {
        locals.remove(&g);
    }
    locals
}

/// Binds plain names left of top-level `=` (or an augmented assignment) in
/// one logical line.
fn bind_assignment_targets(line: &[Token], locals: &mut BTreeSet<String>) {
    let mut depth = 0i32;
    let mut last_eq = None;
    for (k, t) in line.iter().enumerate() {
        if t.kind != TokKind::Op {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "=" if depth == 0 => last_eq = Some(k),
            op if depth == 0 && op.len() >= 2 && op.ends_with('=') && !matches!(op, "==" | "!=" | "<=" | ">=") => {
                last_eq = Some(k)
            }
            _ => {}
        }
    }
    // a lambda or a conditional before the `=` is not a target list
    let Some(end) = last_eq else { return };
    let start = line
        .iter()
        .position(|t| !t.is_name("if") && !t.is_name("elif") && !t.is_name("while"))
        .unwrap_or(0);
    if start != 0 {
        return;
    }
    let target = &line[..end];
    let mut sq = 0i32;
    for (k, t) in target.iter().enumerate() {
        if t.is_op("[") {
            sq += 1;
        } else if t.is_op("]") {
            sq -= 1;
        } else if t.kind == TokKind::Name
            && sq == 0
            && !lex::is_keyword(&t.text)
            && !(k > 0 && target[k - 1].is_op("."))
            && !target.get(k + 1).is_some_and(|n| n.is_op(".") || n.is_op("[") || n.is_op("("))
        {
            // `x: int = 1` annotations
            if k > 0 && target[k - 1].is_op(":") {
                continue;
            }
            locals.insert(t.text.clone());
        }
    }
}

/// Renames identifiers in a function's text. The `def` name is always
/// renamed; other references are renamed unless the function binds that name
/// locally.
pub fn rename_identifiers(text: &str, map: &HashMap<String, String>) -> String {
    if map.is_empty() {
        return text.to_string();
    }
    let Ok(toks) = lex::tokenize(text) else { return text.to_string() };
    let def_at = toks.iter().position(|t| t.is_name("def"));
    let locals = def_at
        .and_then(|d| header_params(&toks, d + 2).map(|(p, end)| local_names(&toks, end, &p)))
        .unwrap_or_default();
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokKind::Name {
            continue;
        }
        let Some(new) = map.get(&t.text) else { continue };
        let is_def_name = def_at == Some(i.wrapping_sub(1));
        if !is_def_name && (locals.contains(&t.text) || is_attribute(&toks, i) || is_keyword_arg(&toks, i)) {
            continue;
        }
        out.push_str(&text[last..t.start]);
        out.push_str(new);
        last = t.end;
    }
    out.push_str(&text[last..]);
    out
}
