//! ANPL sketches: parsing, rendering, hole discovery and dataflow checks.

pub mod ast;
mod parser;
pub mod render;
pub mod validate;

pub use ast::*;
pub use parser::{parse_block, ParseError};
pub use render::HoleMode;
pub use validate::{validate_sketch, Diagnostic, DiagnosticKind, Severity};

use serde::Serialize;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// Stable hole identifier. Named holes use their name; inline holes use their
/// sketch position, `<function>@<stmt path>` with an optional `:<k>` when a
/// statement holds more than one hole call.
pub type HoleId = String;

#[derive(Debug, Clone, PartialEq)]
pub struct AnplProgram {
    pub functions: Vec<SketchFunction>,
}

pub const ENTRY_NAME: &str = "main";

impl AnplProgram {
    pub fn parse(text: &str) -> Result<AnplProgram, ParseError> {
        parser::parse(text)
    }

    pub fn render(&self) -> String {
        render::render_functions(&self.functions, HoleMode::Anpl)
    }

    pub fn entry_name(&self) -> &'static str {
        ENTRY_NAME
    }

    pub fn function(&self, name: &str) -> Option<&SketchFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut SketchFunction> {
        self.functions.iter_mut().find(|f| f.name == name)
    }

    /// Functions with a real body (not named holes).
    pub fn sketch_functions(&self) -> impl Iterator<Item = &SketchFunction> {
        self.functions.iter().filter(|f| !f.is_hole())
    }

    pub fn named_hole_names(&self) -> BTreeSet<String> {
        self.functions.iter().filter(|f| f.is_hole()).map(|f| f.name.clone()).collect()
    }

    /// Every hole, sorted by first occurrence.
    pub fn holes(&self) -> Vec<Hole> {
        holes_in_order(self)
    }

    pub fn hole(&self, id: &str) -> Option<Hole> {
        self.holes().into_iter().find(|h| h.id == id)
    }

    /// Looks a hole up by id, user name or auto label.
    pub fn find_hole(&self, key: &str) -> Option<Hole> {
        self.holes()
            .into_iter()
            .find(|h| h.id == key || h.auto_label.as_deref() == Some(key) || h.user_name.as_deref() == Some(key))
    }

    /// Re-assigns `_hole<k>` labels in appearance order. Needed after a
    /// structural edit; parsing already produces canonical labels.
    pub fn relabel(&mut self) {
        let mut k = 0usize;
        for f in &mut self.functions {
            if let FunctionBody::Block(stmts) = &mut f.body {
                relabel_block(stmts, &mut k);
            }
        }
    }

    pub fn hole_calls(&self) -> Vec<HoleCall> {
        let named = self.named_hole_names();
        let sketch_names: BTreeSet<&str> = self.functions.iter().map(|f| f.name.as_str()).collect();
        let mut out = Vec::new();
        for f in &self.functions {
            let FunctionBody::Block(stmts) = &f.body else { continue };
            visit_block(stmts, &mut Vec::new(), &mut |path, k, stmt, e| {
                let (hole_id, args): (String, Vec<String>) = match e {
                    Expr::HoleCall(h) => (inline_id(&f.name, path, k), h.args.clone()),
                    Expr::Call { func, args } => match &**func {
                        Expr::Name(n) if named.contains(n) => (
                            n.clone(),
                            args.iter()
                                .filter_map(|a| match a {
                                    Arg::Positional(Expr::Name(v)) => Some(v.clone()),
                                    _ => None,
                                })
                                .collect(),
                        ),
                        _ => return,
                    },
                    _ => return,
                };
                let (refs, inputs): (Vec<String>, Vec<String>) = args
                    .into_iter()
                    .partition(|a| sketch_names.contains(a.as_str()) && !f.params.contains(a));
                let output_vars = match &stmt.kind {
                    StmtKind::Assign { targets, value } if std::ptr::eq(value, e) => {
                        targets.iter().flat_map(target_names).collect()
                    }
                    _ => Vec::new(),
                };
                out.push(HoleCall {
                    hole_id,
                    function: f.name.clone(),
                    input_vars: inputs,
                    output_vars,
                    passed_function_refs: refs,
                });
            });
        }
        out
    }
}

impl fmt::Display for AnplProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HoleSite {
    /// `def name(params): "description"`
    Named { function: String },
    /// A hole call inside `function` at statement `path`, `index`-th in that
    /// statement.
    Inline {
        function: String,
        path: Vec<usize>,
        index: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hole {
    pub id: HoleId,
    pub user_name: Option<String>,
    pub auto_label: Option<String>,
    pub description: String,
    pub declared_params: Option<Vec<String>>,
    pub site: HoleSite,
    /// Argument names at the call site; for named holes, the declared params.
    pub call_args: Vec<String>,
}

impl Hole {
    /// The name used in prompts and, for named holes, in the compiled module.
    pub fn name(&self) -> &str {
        self.user_name
            .as_deref()
            .or(self.auto_label.as_deref())
            .expect("hole has a name or a label")
    }

    pub fn is_named(&self) -> bool {
        self.user_name.is_some()
    }

    /// The function the hole belongs to (its own name for named holes).
    pub fn function(&self) -> &str {
        match &self.site {
            HoleSite::Named { function } | HoleSite::Inline { function, .. } => function,
        }
    }

    pub fn params(&self) -> &[String] {
        self.declared_params.as_deref().unwrap_or(&self.call_args)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HoleCall {
    pub hole_id: HoleId,
    /// Sketch function containing the call.
    pub function: String,
    pub input_vars: Vec<String>,
    pub output_vars: Vec<String>,
    pub passed_function_refs: Vec<String>,
}

pub fn inline_id(function: &str, path: &[usize], k: usize) -> HoleId {
    let p = path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".");
    if k == 0 {
        format!("{function}@{p}")
    } else {
        format!("{function}@{p}:{k}")
    }
}

pub fn holes_in_order(program: &AnplProgram) -> Vec<Hole> {
    let named = program.named_hole_names();
    // (ordinal, hole)
    let mut found: Vec<(usize, Hole)> = Vec::new();
    let mut first_use: HashMap<String, usize> = HashMap::new();
    let mut ordinal = 0usize;
    for f in &program.functions {
        ordinal += 1;
        if let FunctionBody::Hole { description, .. } = &f.body {
            found.push((
                ordinal,
                Hole {
                    id: f.name.clone(),
                    user_name: Some(f.name.clone()),
                    auto_label: None,
                    description: description.clone(),
                    declared_params: Some(f.params.clone()),
                    site: HoleSite::Named {
                        function: f.name.clone(),
                    },
                    call_args: f.params.clone(),
                },
            ));
            continue;
        }
        let FunctionBody::Block(stmts) = &f.body else { unreachable!() };
        visit_block(stmts, &mut Vec::new(), &mut |path, k, _, e| {
            ordinal += 1;
            match e {
                Expr::HoleCall(h) => found.push((
                    ordinal,
                    Hole {
                        id: inline_id(&f.name, path, k),
                        user_name: None,
                        auto_label: Some(h.label.clone()),
                        description: h.description.clone(),
                        declared_params: None,
                        site: HoleSite::Inline {
                            function: f.name.clone(),
                            path: path.to_vec(),
                            index: k,
                        },
                        call_args: h.args.clone(),
                    },
                )),
                Expr::Call { func, .. } => {
                    if let Expr::Name(n) = &**func {
                        if named.contains(n) {
                            first_use.entry(n.clone()).or_insert(ordinal);
                        }
                    }
                }
                _ => {}
            }
        });
    }
    for (ord, h) in found.iter_mut() {
        if let Some(u) = h.user_name.as_ref().and_then(|n| first_use.get(n)) {
            *ord = (*ord).min(*u);
        }
    }
    found.sort_by_key(|(o, _)| *o);
    found.into_iter().map(|(_, h)| h).collect()
}

/// Visits hole calls and plain calls in source order. The callback receives
/// the statement path, the index of the hole call within its statement (only
/// meaningful for hole calls), the statement and the expression.
pub(crate) fn visit_block<'a>(
    stmts: &'a [Stmt],
    path: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize], usize, &'a Stmt, &'a Expr),
) {
    for (i, s) in stmts.iter().enumerate() {
        path.push(i);
        let mut k = 0usize;
        for e in s.own_exprs() {
            e.walk(&mut |sub| match sub {
                Expr::HoleCall(_) => {
                    f(path, k, s, sub);
                    k += 1;
                }
                Expr::Call { .. } => f(path, 0, s, sub),
                _ => {}
            });
        }
        for (b, block) in s.blocks().into_iter().enumerate() {
            path.push(b);
            visit_block(block, path, f);
            path.pop();
        }
        path.pop();
    }
}

fn relabel_block(stmts: &mut [Stmt], k: &mut usize) {
    for s in stmts {
        for e in own_exprs_mut(s) {
            relabel_expr(e, k);
        }
        for block in s.blocks_mut() {
            relabel_block(block, k);
        }
    }
}

pub(crate) fn own_exprs_mut(s: &mut Stmt) -> Vec<&mut Expr> {
    match &mut s.kind {
        StmtKind::Assign { targets, value } => {
            let mut v: Vec<&mut Expr> = targets.iter_mut().collect();
            v.push(value);
            v
        }
        StmtKind::AugAssign { target, value, .. } => vec![target, value],
        StmtKind::Expr(e) => vec![e],
        StmtKind::Return(e) => e.iter_mut().collect(),
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
        StmtKind::For { target, iter, .. } => vec![target, iter],
        StmtKind::Pass | StmtKind::Break | StmtKind::Continue => vec![],
    }
}

/// Mutable pre-order walk matching [`Expr::walk`].
pub(crate) fn walk_mut(e: &mut Expr, f: &mut dyn FnMut(&mut Expr)) {
    f(e);
    match e {
        Expr::Call { func, args } => {
            walk_mut(func, f);
            for a in args {
                match a {
                    Arg::Positional(e) | Arg::Keyword(_, e) => walk_mut(e, f),
                }
            }
        }
        Expr::Attribute { value, .. } => walk_mut(value, f),
        Expr::Subscript { value, index } => {
            walk_mut(value, f);
            walk_mut(index, f);
        }
        Expr::Slice { lower, upper, step } => {
            for e in [lower, upper, step].into_iter().flatten() {
                walk_mut(e, f);
            }
        }
        Expr::BinOp { left, right, .. } => {
            walk_mut(left, f);
            walk_mut(right, f);
        }
        Expr::UnaryOp { operand, .. } => walk_mut(operand, f),
        Expr::BoolOp { values, .. } | Expr::Tuple(values) | Expr::List(values) => {
            for v in values {
                walk_mut(v, f);
            }
        }
        Expr::Compare { left, rest } => {
            walk_mut(left, f);
            for (_, e) in rest {
                walk_mut(e, f);
            }
        }
        _ => {}
    }
}

fn relabel_expr(e: &mut Expr, k: &mut usize) {
    walk_mut(e, &mut |sub| {
        if let Expr::HoleCall(h) = sub {
            h.label = format!("_hole{k}");
            *k += 1;
        }
    });
}

/// Names bound by an assignment target.
pub fn target_names(t: &Expr) -> Vec<String> {
    match t {
        Expr::Name(n) => vec![n.clone()],
        Expr::Tuple(items) | Expr::List(items) => items.iter().flat_map(target_names).collect(),
        _ => Vec::new(),
    }
}

/// Statement at `path` inside `body`.
pub fn stmt_at<'a>(body: &'a [Stmt], path: &[usize]) -> Option<&'a Stmt> {
    let (&first, rest) = path.split_first()?;
    let s = body.get(first)?;
    match rest {
        [] => Some(s),
        [b, tail @ ..] => stmt_at(s.blocks().get(*b)?, tail),
    }
}

/// The block containing the statement at `path`, plus its index there.
pub fn block_at_mut<'a>(body: &'a mut Vec<Stmt>, path: &[usize]) -> Option<(&'a mut Vec<Stmt>, usize)> {
    match path {
        [] => None,
        [i] => Some((body, *i)),
        [i, b, tail @ ..] => {
            let s = body.get_mut(*i)?;
            let mut blocks = s.blocks_mut();
            if *b >= blocks.len() {
                return None;
            }
            let block = blocks.swap_remove(*b);
            block_at_mut(block, tail)
        }
    }
}
