use super::ast::*;
use crate::lex::quote_string;
use std::collections::HashMap;

/// How hole calls are printed.
#[derive(Debug, Clone, Copy)]
pub enum HoleMode<'a> {
    /// `"description"(args)`, the ANPL surface syntax.
    Anpl,
    /// `name(args)`, looking the label up in the map and falling back to the
    /// label itself for unfilled holes.
    Target(&'a HashMap<String, String>),
}

pub fn render_functions(functions: &[SketchFunction], mode: HoleMode<'_>) -> String {
    functions
        .iter()
        .map(|f| render_function(f, mode))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_function(f: &SketchFunction, mode: HoleMode<'_>) -> String {
    let mut out = format!("def {}({}):\n", f.name, f.params.join(", "));
    match &f.body {
        FunctionBody::Hole { description, .. } => {
            out.push_str("    ");
            out.push_str(&quote_string(description));
            out.push('\n');
        }
        FunctionBody::Block(stmts) => render_block(&mut out, stmts, 1, mode),
    }
    out
}

pub fn render_block(out: &mut String, stmts: &[Stmt], depth: usize, mode: HoleMode<'_>) {
    if stmts.is_empty() {
        indent(out, depth);
        out.push_str("pass\n");
        return;
    }
    for s in stmts {
        render_stmt(out, s, depth, mode);
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn render_stmt(out: &mut String, s: &Stmt, depth: usize, mode: HoleMode<'_>) {
    indent(out, depth);
    match &s.kind {
        StmtKind::Assign { targets, value } => {
            for t in targets {
                out.push_str(&expr(t, mode));
                out.push_str(" = ");
            }
            out.push_str(&expr(value, mode));
            out.push('\n');
        }
        StmtKind::AugAssign { target, op, value } => {
            out.push_str(&format!("{} {}= {}\n", expr(target, mode), op.symbol(), expr(value, mode)));
        }
        StmtKind::Expr(e) => {
            out.push_str(&expr(e, mode));
            out.push('\n');
        }
        StmtKind::Return(None) => out.push_str("return\n"),
        StmtKind::Return(Some(e)) => {
            out.push_str("return ");
            out.push_str(&expr(e, mode));
            out.push('\n');
        }
        StmtKind::If { cond, body, orelse } => {
            out.push_str(&format!("if {}:\n", expr(cond, mode)));
            render_block(out, body, depth + 1, mode);
            render_else(out, orelse, depth, mode);
        }
        StmtKind::For { target, iter, body } => {
            out.push_str(&format!("for {} in {}:\n", expr(target, mode), expr(iter, mode)));
            render_block(out, body, depth + 1, mode);
        }
        StmtKind::While { cond, body } => {
            out.push_str(&format!("while {}:\n", expr(cond, mode)));
            render_block(out, body, depth + 1, mode);
        }
        StmtKind::Pass => out.push_str("pass\n"),
        StmtKind::Break => out.push_str("break\n"),
        StmtKind::Continue => out.push_str("continue\n"),
    }
}

fn render_else(out: &mut String, orelse: &[Stmt], depth: usize, mode: HoleMode<'_>) {
    match orelse {
        [] => {}
        [Stmt {
            kind: StmtKind::If { cond, body, orelse },
            ..
        }] => {
            indent(out, depth);
            out.push_str(&format!("elif {}:\n", expr(cond, mode)));
            render_block(out, body, depth + 1, mode);
            render_else(out, orelse, depth, mode);
        }
        stmts => {
            indent(out, depth);
            out.push_str("else:\n");
            render_block(out, stmts, depth + 1, mode);
        }
    }
}

pub fn expr(e: &Expr, mode: HoleMode<'_>) -> String {
    match e {
        Expr::Tuple(items) => tuple_items(items, mode),
        other => expr_prec(other, 1, mode),
    }
}

fn tuple_items(items: &[Expr], mode: HoleMode<'_>) -> String {
    match items {
        [] => "()".into(),
        [one] => format!("{},", expr_prec(one, 1, mode)),
        many => many.iter().map(|i| expr_prec(i, 1, mode)).collect::<Vec<_>>().join(", "),
    }
}

/// Renders `e`, parenthesizing when it binds looser than `min`.
fn expr_prec(e: &Expr, min: u8, mode: HoleMode<'_>) -> String {
    if let Expr::Tuple(_) = e {
        return expr_inner(e, mode);
    }
    let s = expr_inner(e, mode);
    if e.precedence() < min {
        format!("({s})")
    } else {
        s
    }
}

fn expr_inner(e: &Expr, mode: HoleMode<'_>) -> String {
    match e {
        Expr::Name(n) => n.clone(),
        Expr::Int(i) => i.to_string(),
        Expr::Float(f) => format!("{f:?}"),
        Expr::Str(s) => quote_string(s),
        Expr::Bool(true) => "True".into(),
        Expr::Bool(false) => "False".into(),
        Expr::None => "None".into(),
        Expr::HoleCall(h) => {
            let head = match mode {
                HoleMode::Anpl => quote_string(&h.description),
                HoleMode::Target(map) => map.get(&h.label).cloned().unwrap_or_else(|| h.label.clone()),
            };
            format!("{head}({})", h.args.join(", "))
        }
        Expr::Call { func, args } => {
            let args: Vec<String> = args
                .iter()
                .map(|a| match a {
                    Arg::Positional(e) => expr_prec(e, 1, mode),
                    Arg::Keyword(k, e) => format!("{k}={}", expr_prec(e, 1, mode)),
                })
                .collect();
            format!("{}({})", trailer_base(func, mode), args.join(", "))
        }
        Expr::Attribute { value, attr } => {
            let base = trailer_base(value, mode);
            // `1.real` would lex as a float
            if matches!(**value, Expr::Int(_) | Expr::Float(_)) {
                format!("({base}).{attr}")
            } else {
                format!("{base}.{attr}")
            }
        }
        Expr::Subscript { value, index } => {
            let idx = match &**index {
                Expr::Tuple(items) if !items.is_empty() => tuple_items(items, mode),
                other => expr_prec(other, 1, mode),
            };
            format!("{}[{idx}]", trailer_base(value, mode))
        }
        Expr::Slice { lower, upper, step } => {
            let part = |p: &Option<Box<Expr>>| p.as_ref().map(|e| expr_prec(e, 1, mode)).unwrap_or_default();
            let mut s = format!("{}:{}", part(lower), part(upper));
            if let Some(st) = step {
                s.push(':');
                s.push_str(&expr_prec(st, 1, mode));
            }
            s
        }
        Expr::BinOp { op, left, right } => {
            let p = op.precedence();
            let (lmin, rmin) = if *op == BinOp::Pow {
                // right-associative; the base must also bind tighter than unary minus
                (prec::ATOM, prec::UNARY)
            } else {
                (p, p + 1)
            };
            format!("{} {} {}", expr_prec(left, lmin, mode), op.symbol(), expr_prec(right, rmin, mode))
        }
        Expr::UnaryOp { op, operand } => match op {
            UnaryOp::Not => format!("not {}", expr_prec(operand, prec::NOT, mode)),
            UnaryOp::Neg => format!("-{}", unary_operand(operand, mode)),
            UnaryOp::Pos => format!("+{}", unary_operand(operand, mode)),
            UnaryOp::Invert => format!("~{}", unary_operand(operand, mode)),
        },
        Expr::BoolOp { op, values } => {
            let (sep, p) = match op {
                BoolOp::And => (" and ", prec::AND),
                BoolOp::Or => (" or ", prec::OR),
            };
            values.iter().map(|v| expr_prec(v, p + 1, mode)).collect::<Vec<_>>().join(sep)
        }
        Expr::Compare { left, rest } => {
            let mut s = expr_prec(left, prec::CMP + 1, mode);
            for (op, e) in rest {
                s.push(' ');
                s.push_str(op.symbol());
                s.push(' ');
                s.push_str(&expr_prec(e, prec::CMP + 1, mode));
            }
            s
        }
        Expr::List(items) => format!(
            "[{}]",
            items.iter().map(|i| expr_prec(i, 1, mode)).collect::<Vec<_>>().join(", ")
        ),
        Expr::Tuple(items) if items.is_empty() => "()".into(),
        Expr::Tuple(items) => format!("({})", tuple_items(items, mode)),
    }
}

fn unary_operand(operand: &Expr, mode: HoleMode<'_>) -> String {
    let s = expr_prec(operand, prec::UNARY, mode);
    // keep `- -x` from fusing and `-(1)` distinct from the literal
    if s.starts_with(['-', '+', '~']) {
        format!("({s})")
    } else {
        s
    }
}

/// The value in front of a call, subscript or attribute trailer. Only atoms
/// (and the string head of a hole call, already atomic) may appear bare.
fn trailer_base(e: &Expr, mode: HoleMode<'_>) -> String {
    match e {
        Expr::Name(_)
        | Expr::Call { .. }
        | Expr::HoleCall(_)
        | Expr::Attribute { .. }
        | Expr::Subscript { .. }
        | Expr::List(_)
        | Expr::Bool(_)
        | Expr::None
        | Expr::Int(_)
        | Expr::Float(_) => expr_inner(e, mode),
        Expr::Tuple(items) if items.is_empty() => "()".into(),
        // a bare string followed by `(` would re-parse as a hole call
        _ => format!("({})", expr(e, mode)),
    }
}
