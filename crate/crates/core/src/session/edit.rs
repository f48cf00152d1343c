//! The four editing modes as pure transformations of a sketch.

use crate::sketch::{
    block_at_mut, own_exprs_mut, parse_block, target_names, walk_mut, AnplProgram, Arg, Expr, FunctionBody,
    HoleCallExpr, HoleSite, Loc, ParseError, SketchFunction, Stmt, StmtKind, ENTRY_NAME,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    /// Replaces a hole by a sketch. A named hole keeps its name; an inline
    /// hole becomes a call to a new function `name(args)`.
    Decompose {
        hole_id: String,
        body: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    /// Replaces top-level statements `start..end` of `function` by one hole.
    /// With `name` the hole is a named definition, otherwise inline.
    Abstract {
        function: String,
        start: usize,
        end: usize,
        description: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    EditDescription { hole_id: String, description: String },
    /// Replaces the body (and optionally the parameters) of a function,
    /// creating it if absent.
    EditSketch {
        function: String,
        body: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        params: Option<Vec<String>>,
    },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum EditError {
    #[error("unknown hole `{hole_id}`")]
    UnknownHole { hole_id: String },
    #[error("unknown function `{function}`")]
    UnknownFunction { function: String },
    #[error("{message}")]
    Invalid { message: String },
    #[error("parse error: {source}")]
    Parse { source: ParseError },
}

fn invalid(message: impl Into<String>) -> EditError {
    EditError::Invalid { message: message.into() }
}

impl From<ParseError> for EditError {
    fn from(source: ParseError) -> Self {
        EditError::Parse { source }
    }
}

/// Applies `op` and re-labels inline holes. The result is not validated.
pub fn apply_op(anpl: &AnplProgram, op: &EditOp) -> Result<AnplProgram, EditError> {
    let mut p = anpl.clone();
    match op {
        EditOp::Decompose { hole_id, body, name } => decompose(&mut p, hole_id, body, name.as_deref())?,
        EditOp::Abstract {
            function,
            start,
            end,
            description,
            name,
        } => abstract_range(&mut p, function, *start, *end, description, name.as_deref())?,
        EditOp::EditDescription { hole_id, description } => {
            if description.trim().is_empty() {
                return Err(invalid("description must not be empty"));
            }
            let hole = p.hole(hole_id).ok_or_else(|| EditError::UnknownHole { hole_id: hole_id.clone() })?;
            match &hole.site {
                HoleSite::Named { function } => {
                    if let Some(FunctionBody::Hole { description: d, .. }) = p.function_mut(function).map(|f| &mut f.body) {
                        *d = description.clone();
                    }
                }
                HoleSite::Inline { function, path, index } => {
                    with_hole_call(&mut p, function, path, *index, |e| {
                        if let Expr::HoleCall(h) = e {
                            h.description = description.clone();
                        }
                    })?;
                }
            }
        }
        EditOp::EditSketch { function, body, params } => {
            let stmts = parse_block(body)?;
            match p.function_mut(function) {
                Some(f) => {
                    f.body = FunctionBody::Block(stmts);
                    if let Some(ps) = params {
                        f.params = ps.clone();
                    }
                }
                None => {
                    let f = SketchFunction {
                        name: function.clone(),
                        params: params.clone().unwrap_or_default(),
                        body: FunctionBody::Block(stmts),
                        loc: Loc::default(),
                    };
                    insert_before_entry(&mut p, f);
                }
            }
        }
    }
    p.relabel();
    Ok(p)
}

fn check_new_name(p: &AnplProgram, name: &str) -> Result<(), EditError> {
    let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !crate::lex::is_keyword(name);
    if !valid {
        return Err(invalid(format!("`{name}` is not an identifier")));
    }
    if p.function(name).is_some() {
        return Err(invalid(format!("function `{name}` already exists")));
    }
    Ok(())
}

fn insert_before(p: &mut AnplProgram, anchor: &str, f: SketchFunction) {
    let at = p.functions.iter().position(|g| g.name == anchor).unwrap_or(p.functions.len());
    p.functions.insert(at, f);
}

fn insert_before_entry(p: &mut AnplProgram, f: SketchFunction) {
    insert_before(p, ENTRY_NAME, f);
}

fn with_hole_call(
    p: &mut AnplProgram,
    function: &str,
    path: &[usize],
    index: usize,
    mut edit: impl FnMut(&mut Expr),
) -> Result<(), EditError> {
    let f = p.function_mut(function).ok_or_else(|| EditError::UnknownFunction {
        function: function.to_string(),
    })?;
    let FunctionBody::Block(body) = &mut f.body else {
        return Err(invalid(format!("`{function}` has no statements")));
    };
    let (block, i) = block_at_mut(body, path).ok_or_else(|| invalid("stale hole position"))?;
    let stmt = block.get_mut(i).ok_or_else(|| invalid("stale hole position"))?;
    let mut k = 0usize;
    let mut done = false;
    for e in own_exprs_mut(stmt) {
        walk_mut(e, &mut |sub| {
            if matches!(sub, Expr::HoleCall(_)) {
                if k == index && !done {
                    edit(sub);
                    done = true;
                }
                k += 1;
            }
        });
    }
    if done {
        Ok(())
    } else {
        Err(invalid("stale hole position"))
    }
}

fn decompose(p: &mut AnplProgram, hole_id: &str, body: &str, name: Option<&str>) -> Result<(), EditError> {
    let hole = p.hole(hole_id).ok_or_else(|| EditError::UnknownHole { hole_id: hole_id.into() })?;
    let stmts = parse_block(body)?;
    match &hole.site {
        HoleSite::Named { function } => {
            let f = p.function_mut(function).expect("named hole has a definition");
            f.body = FunctionBody::Block(stmts);
        }
        HoleSite::Inline { function, path, index } => {
            let name = name.ok_or_else(|| invalid("decomposing an inline hole needs a function name"))?;
            check_new_name(p, name)?;
            let args = hole.call_args.clone();
            with_hole_call(p, function, path, *index, |e| {
                *e = Expr::Call {
                    func: Box::new(Expr::Name(name.to_string())),
                    args: args.iter().map(|a| Arg::Positional(Expr::Name(a.clone()))).collect(),
                };
            })?;
            let f = SketchFunction {
                name: name.to_string(),
                params: hole.call_args.clone(),
                body: FunctionBody::Block(stmts),
                loc: Loc::default(),
            };
            let anchor = function.clone();
            insert_before(p, &anchor, f);
        }
    }
    Ok(())
}

fn bound_names(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    for s in stmts {
        match &s.kind {
            StmtKind::Assign { targets, .. } => targets.iter().for_each(|t| out.extend(target_names(t))),
            StmtKind::AugAssign { target, .. } => out.extend(target_names(target)),
            StmtKind::For { target, .. } => out.extend(target_names(target)),
            _ => {}
        }
        for b in s.blocks() {
            bound_names(b, out);
        }
    }
}

fn read_names(stmts: &[Stmt], out: &mut Vec<String>) {
    for s in stmts {
        for e in s.own_exprs() {
            e.walk(&mut |sub| {
                let names: Vec<&String> = match sub {
                    Expr::Name(n) => vec![n],
                    Expr::HoleCall(h) => h.args.iter().collect(),
                    _ => vec![],
                };
                for n in names {
                    if !out.contains(n) {
                        out.push(n.clone());
                    }
                }
            });
        }
        for b in s.blocks() {
            read_names(b, out);
        }
    }
}

fn has_escape(stmts: &[Stmt], in_loop: bool) -> bool {
    stmts.iter().any(|s| match &s.kind {
        StmtKind::Return(_) => true,
        StmtKind::Break | StmtKind::Continue => !in_loop,
        StmtKind::For { body, .. } | StmtKind::While { body, .. } => has_escape(body, true),
        StmtKind::If { body, orelse, .. } => has_escape(body, in_loop) || has_escape(orelse, in_loop),
        _ => false,
    })
}

/// Names bound by `stmts` that are in `wanted`, in binding order.
fn collect_bound(stmts: &[Stmt], wanted: &BTreeSet<String>, out: &mut Vec<String>) {
    for stmt in stmts {
        let mut bound = BTreeSet::new();
        bound_names(std::slice::from_ref(stmt), &mut bound);
        for n in bound {
            if wanted.contains(&n) && !out.contains(&n) {
                out.push(n);
            }
        }
    }
}

fn abstract_range(
    p: &mut AnplProgram,
    function: &str,
    start: usize,
    end: usize,
    description: &str,
    name: Option<&str>,
) -> Result<(), EditError> {
    if description.trim().is_empty() {
        return Err(invalid("description must not be empty"));
    }
    if let Some(n) = name {
        check_new_name(p, n)?;
    }
    let f = p.function(function).ok_or_else(|| EditError::UnknownFunction {
        function: function.into(),
    })?;
    let FunctionBody::Block(body) = &f.body else {
        return Err(invalid(format!("`{function}` is a hole")));
    };
    if start >= end || end > body.len() {
        return Err(invalid(format!("statement range {start}..{end} outside 0..{}", body.len())));
    }
    let range = &body[start..end];
    let (last, init) = range.split_last().expect("non-empty range");
    let returns = matches!(last.kind, StmtKind::Return(Some(_)));
    if has_escape(if returns { init } else { range }, false) {
        return Err(invalid("statement range leaves the function early"));
    }

    let mut reads = Vec::new();
    read_names(range, &mut reads);
    let reads: BTreeSet<String> = reads.into_iter().collect();
    let mut inputs = f.params.iter().filter(|n| reads.contains(*n)).cloned().collect();
    collect_bound(&body[..start], &reads, &mut inputs);
    let mut later = Vec::new();
    read_names(&body[end..], &mut later);
    let later: BTreeSet<String> = later.into_iter().collect();
    let mut outputs = Vec::new();
    collect_bound(range, &later, &mut outputs);
    if returns && !outputs.is_empty() {
        return Err(invalid("statement range returns but later statements use its variables"));
    }

    let call = match name {
        Some(n) => Expr::Call {
            func: Box::new(Expr::Name(n.to_string())),
            args: inputs.iter().map(|a| Arg::Positional(Expr::Name(a.clone()))).collect(),
        },
        None => Expr::HoleCall(HoleCallExpr {
            label: String::new(),
            description: description.to_string(),
            args: inputs.clone(),
            loc: Loc::default(),
        }),
    };
    let kind = if returns {
        StmtKind::Return(Some(call))
    } else {
        match outputs.as_slice() {
            [] => StmtKind::Expr(call),
            [one] => StmtKind::Assign {
                targets: vec![Expr::Name(one.clone())],
                value: call,
            },
            many => StmtKind::Assign {
                targets: vec![Expr::Tuple(many.iter().cloned().map(Expr::Name).collect())],
                value: call,
            },
        }
    };
    let loc = range[0].loc;
    let f = p.function_mut(function).expect("checked above");
    let FunctionBody::Block(body) = &mut f.body else { unreachable!() };
    body.splice(start..end, [Stmt { kind, loc }]);
    if let Some(n) = name {
        let def = SketchFunction {
            name: n.to_string(),
            params: inputs,
            body: FunctionBody::Hole {
                description: description.to_string(),
                loc: Loc::default(),
            },
            loc: Loc::default(),
        };
        insert_before(p, function, def);
    }
    Ok(())
}
