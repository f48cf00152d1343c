//! Dataflow well-formedness of sketches.
//!
//! A forward "must/may be defined" analysis over each function body. A read of
//! a variable that is defined on every path is fine, one defined on some paths
//! is a [`DiagnosticKind::ConditionalDefinition`] warning, and one defined on
//! none is an error.

use super::ast::*;
use super::AnplProgram;
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagnosticKind {
    UndefinedVariable,
    UndefinedFunction,
    ConditionalDefinition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    #[serde(skip)]
    pub kind: DiagnosticKind,
    #[serde(skip)]
    pub symbol: String,
    pub severity: Severity,
    pub message: String,
    pub line: u32,
    pub col: u32,
}

impl Diagnostic {
    fn new(kind: DiagnosticKind, symbol: &str, function: &str, loc: Loc) -> Diagnostic {
        let (severity, message) = match kind {
            DiagnosticKind::UndefinedVariable => (
                Severity::Error,
                format!("variable `{symbol}` is read in `{function}` before any definition"),
            ),
            DiagnosticKind::UndefinedFunction => {
                (Severity::Error, format!("`{function}` calls undefined function `{symbol}`"))
            }
            DiagnosticKind::ConditionalDefinition => (
                Severity::Warning,
                format!("variable `{symbol}` in `{function}` is only defined on some paths"),
            ),
        };
        Diagnostic {
            kind,
            symbol: symbol.to_string(),
            severity,
            message,
            line: loc.line,
            col: loc.col,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// Builtins of the target language usable from sketches.
pub const BUILTINS: &[&str] = &[
    "abs", "all", "any", "bool", "dict", "divmod", "enumerate", "filter", "float", "frozenset", "getattr",
    "hasattr", "int", "isinstance", "iter", "len", "list", "map", "max", "min", "next", "object", "pow",
    "print", "range", "repr", "reversed", "round", "set", "slice", "sorted", "str", "sum", "tuple", "type",
    "zip", "input", "Exception", "ValueError", "IndexError", "KeyError", "TypeError",
];

/// Names bound by the compiled-module preamble.
pub const PREAMBLE_NAMES: &[&str] = &[
    "np", "black", "blue", "red", "green", "yellow", "grey", "pink", "orange", "teal", "maroon",
];

pub fn validate_sketch(program: &AnplProgram) -> Vec<Diagnostic> {
    let mut globals: BTreeSet<String> = program.functions.iter().map(|f| f.name.clone()).collect();
    globals.extend(BUILTINS.iter().chain(PREAMBLE_NAMES).map(|s| s.to_string()));
    let mut out = Vec::new();
    for f in &program.functions {
        let FunctionBody::Block(stmts) = &f.body else { continue };
        let mut cx = Checker {
            globals: &globals,
            function: &f.name,
            diags: Vec::new(),
        };
        let env = Env {
            definite: f.params.iter().cloned().collect(),
            maybe: f.params.iter().cloned().collect(),
        };
        let mut flow = Flow::default();
        cx.block(stmts, Some(env), &mut flow, true);
        out.extend(cx.diags);
    }
    out
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Env {
    definite: BTreeSet<String>,
    maybe: BTreeSet<String>,
}

impl Env {
    fn define(&mut self, name: &str) {
        self.definite.insert(name.to_string());
        self.maybe.insert(name.to_string());
    }
}

type State = Option<Env>;

fn join(a: State, b: State) -> State {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(Env {
            definite: a.definite.intersection(&b.definite).cloned().collect(),
            maybe: a.maybe.union(&b.maybe).cloned().collect(),
        }),
    }
}

/// States leaving a loop body early.
#[derive(Default)]
struct Flow {
    breaks: State,
    continues: State,
}

struct Checker<'a> {
    globals: &'a BTreeSet<String>,
    function: &'a str,
    diags: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn report(&mut self, kind: DiagnosticKind, symbol: &str, loc: Loc) {
        let d = Diagnostic::new(kind, symbol, self.function, loc);
        if !self.diags.contains(&d) {
            self.diags.push(d);
        }
    }

    fn block(&mut self, stmts: &[Stmt], mut state: State, flow: &mut Flow, report: bool) -> State {
        for s in stmts {
            state = self.stmt(s, state, flow, report);
        }
        state
    }

    fn stmt(&mut self, s: &Stmt, state: State, flow: &mut Flow, report: bool) -> State {
        let Some(mut env) = state else { return None };
        match &s.kind {
            StmtKind::Assign { targets, value } => {
                self.read(value, &env, s.loc, report);
                for t in targets {
                    self.assign(t, &mut env, s.loc, report);
                }
                Some(env)
            }
            StmtKind::AugAssign { target, value, .. } => {
                self.read(value, &env, s.loc, report);
                self.read(target, &env, s.loc, report);
                self.assign(target, &mut env, s.loc, report);
                Some(env)
            }
            StmtKind::Expr(e) => {
                self.read(e, &env, s.loc, report);
                Some(env)
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.read(e, &env, s.loc, report);
                }
                None
            }
            StmtKind::Pass => Some(env),
            StmtKind::Break => {
                flow.breaks = join(flow.breaks.take(), Some(env));
                None
            }
            StmtKind::Continue => {
                flow.continues = join(flow.continues.take(), Some(env));
                None
            }
            StmtKind::If { cond, body, orelse } => {
                self.read(cond, &env, s.loc, report);
                let a = self.block(body, Some(env.clone()), flow, report);
                let b = self.block(orelse, Some(env), flow, report);
                join(a, b)
            }
            StmtKind::For { target, iter, body } => {
                self.read(iter, &env, s.loc, report);
                self.looping(Some(env), report, |cx, st, inner, rep| {
                    let mut e = st?;
                    cx.assign(target, &mut e, s.loc, rep);
                    cx.block(body, Some(e), inner, rep)
                })
            }
            StmtKind::While { cond, body } => self.looping(Some(env), report, |cx, st, inner, rep| {
                let e = st?;
                cx.read(cond, &e, s.loc, rep);
                cx.block(body, Some(e), inner, rep)
            }),
        }
    }

    /// Iterates a loop body to a fixpoint of its entry state, then re-runs it
    /// once with reporting enabled.
    fn looping(
        &mut self,
        pre: State,
        report: bool,
        body: impl Fn(&mut Self, State, &mut Flow, bool) -> State,
    ) -> State {
        let mut entry = pre.clone();
        for _ in 0..64 {
            let mut inner = Flow::default();
            let end = body(self, entry.clone(), &mut inner, false);
            let next = join(pre.clone(), join(end, inner.continues));
            if next == entry {
                break;
            }
            entry = next;
        }
        let mut inner = Flow::default();
        let end = body(self, entry.clone(), &mut inner, report);
        // zero iterations, normal exit after any iteration, or a break
        join(join(pre, join(end, inner.continues)), inner.breaks)
    }

    fn assign(&mut self, target: &Expr, env: &mut Env, loc: Loc, report: bool) {
        match target {
            Expr::Name(n) => env.define(n),
            Expr::Tuple(items) | Expr::List(items) => {
                for i in items {
                    self.assign(i, env, loc, report);
                }
            }
            Expr::Subscript { value, index } => {
                self.read(value, env, loc, report);
                self.read(index, env, loc, report);
            }
            Expr::Attribute { value, .. } => self.read(value, env, loc, report),
            other => self.read(other, env, loc, report),
        }
    }

    fn read(&mut self, e: &Expr, env: &Env, loc: Loc, report: bool) {
        if !report {
            return;
        }
        let mut uses: Vec<(String, bool)> = Vec::new();
        collect_uses(e, &mut uses);
        for (name, called) in uses {
            if env.definite.contains(&name) || self.globals.contains(&name) {
                continue;
            }
            let kind = if env.maybe.contains(&name) {
                DiagnosticKind::ConditionalDefinition
            } else if called {
                DiagnosticKind::UndefinedFunction
            } else {
                DiagnosticKind::UndefinedVariable
            };
            self.report(kind, &name, loc);
        }
    }
}

/// Variable reads in `e`, flagged when the name is a call target.
fn collect_uses(e: &Expr, out: &mut Vec<(String, bool)>) {
    match e {
        Expr::Name(n) => out.push((n.clone(), false)),
        Expr::HoleCall(h) => out.extend(h.args.iter().map(|a| (a.clone(), false))),
        Expr::Call { func, args } => {
            match &**func {
                Expr::Name(n) => out.push((n.clone(), true)),
                other => collect_uses(other, out),
            }
            for a in args {
                match a {
                    Arg::Positional(e) | Arg::Keyword(_, e) => collect_uses(e, out),
                }
            }
        }
        Expr::Attribute { value, .. } => collect_uses(value, out),
        Expr::Subscript { value, index } => {
            collect_uses(value, out);
            collect_uses(index, out);
        }
        Expr::Slice { lower, upper, step } => {
            for p in [lower, upper, step].into_iter().flatten() {
                collect_uses(p, out);
            }
        }
        Expr::BinOp { left, right, .. } => {
            collect_uses(left, out);
            collect_uses(right, out);
        }
        Expr::UnaryOp { operand, .. } => collect_uses(operand, out),
        Expr::BoolOp { values, .. } | Expr::Tuple(values) | Expr::List(values) => {
            for v in values {
                collect_uses(v, out);
            }
        }
        Expr::Compare { left, rest } => {
            collect_uses(left, out);
            for (_, r) in rest {
                collect_uses(r, out);
            }
        }
        Expr::Int(_) | Expr::Float(_) | Expr::Str(_) | Expr::Bool(_) | Expr::None => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diags(src: &str) -> Vec<Diagnostic> {
        validate_sketch(&AnplProgram::parse(src).unwrap())
    }

    #[test]
    fn undefined_variable() {
        let d = diags("def main(x):\n    return y\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::UndefinedVariable);
        assert_eq!((d[0].line, d[0].col), (2, 5));
        let json = serde_json::to_value(&d[0]).unwrap();
        assert_eq!(json["severity"], "error");
        assert_eq!(json.as_object().unwrap().len(), 4);
    }

    #[test]
    fn undefined_function() {
        let d = diags("def main(x):\n    return helper(x)\n");
        assert_eq!(d[0].kind, DiagnosticKind::UndefinedFunction);
    }

    #[test]
    fn branch_definition_is_warning() {
        let d = diags("def main(x):\n    if x:\n        y = 1\n    return y\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::ConditionalDefinition);
        assert_eq!(d[0].severity, Severity::Warning);
        assert!(diags("def main(x):\n    if x:\n        y = 1\n    else:\n        y = 2\n    return y\n").is_empty());
    }

    #[test]
    fn early_return_branch_counts_as_defining() {
        assert!(diags("def main(x):\n    if x:\n        return x\n    else:\n        y = 2\n    return y\n").is_empty());
    }

    #[test]
    fn loops() {
        assert!(diags("def main(x):\n    for i in x:\n        y = i\n    return x\n").is_empty());
        let d = diags("def main(x):\n    for i in x:\n        y = i\n    return y\n");
        assert_eq!(d[0].kind, DiagnosticKind::ConditionalDefinition);
        let d = diags("def main(x):\n    while x:\n        if x:\n            z = x\n        else:\n            w = z\n    return x\n");
        assert_eq!(d[0].kind, DiagnosticKind::ConditionalDefinition);
        assert_eq!(d[0].symbol, "z");
    }

    #[test]
    fn hole_args_are_reads() {
        let d = diags("def main(x):\n    return \"do it\"(x, q)\n");
        assert_eq!(d[0].symbol, "q");
        assert!(diags("def main(x):\n    return \"do it\"(x, main)\n").is_empty());
    }
}
