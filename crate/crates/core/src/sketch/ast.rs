//! Syntax tree for sketches.
//!
//! Source locations are carried for diagnostics but never participate in
//! equality: two programs are structurally equal when they differ only in
//! layout, comments or quoting style.

use std::fmt;

#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub struct SketchFunction {
    pub name: String,
    pub params: Vec<String>,
    pub body: FunctionBody,
    pub loc: Loc,
}

impl PartialEq for SketchFunction {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.params == other.params && self.body == other.body
    }
}

impl SketchFunction {
    /// The description when this definition is a named hole.
    pub fn hole_description(&self) -> Option<&str> {
        match &self.body {
            FunctionBody::Hole { description, .. } => Some(description),
            FunctionBody::Block(_) => None,
        }
    }

    pub fn is_hole(&self) -> bool {
        matches!(self.body, FunctionBody::Hole { .. })
    }
}

#[derive(Debug, Clone)]
pub enum FunctionBody {
    /// A definition whose entire body is a quoted description.
    Hole { description: String, loc: Loc },
    Block(Vec<Stmt>),
}

impl PartialEq for FunctionBody {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (FunctionBody::Hole { description: a, .. }, FunctionBody::Hole { description: b, .. }) => a == b,
            (FunctionBody::Block(a), FunctionBody::Block(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    /// `t1 = t2 = value`; usually a single target.
    Assign { targets: Vec<Expr>, value: Expr },
    AugAssign { target: Expr, op: BinOp, value: Expr },
    Expr(Expr),
    Return(Option<Expr>),
    If { cond: Expr, body: Vec<Stmt>, orelse: Vec<Stmt> },
    For { target: Expr, iter: Expr, body: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
    Pass,
    Break,
    Continue,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    None,
    /// A quoted description in call position.
    HoleCall(HoleCallExpr),
    Call { func: Box<Expr>, args: Vec<Arg> },
    Attribute { value: Box<Expr>, attr: String },
    Subscript { value: Box<Expr>, index: Box<Expr> },
    Slice {
        lower: Option<Box<Expr>>,
        upper: Option<Box<Expr>>,
        step: Option<Box<Expr>>,
    },
    BinOp { op: BinOp, left: Box<Expr>, right: Box<Expr> },
    UnaryOp { op: UnaryOp, operand: Box<Expr> },
    BoolOp { op: BoolOp, values: Vec<Expr> },
    Compare { left: Box<Expr>, rest: Vec<(CmpOp, Expr)> },
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
}

#[derive(Debug, Clone)]
pub struct HoleCallExpr {
    /// `_hole<k>`, assigned in appearance order at parse time.
    pub label: String,
    pub description: String,
    /// Argument variable names, in call order.
    pub args: Vec<String>,
    pub loc: Loc,
}

impl PartialEq for HoleCallExpr {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.description == other.description && self.args == other.args
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Positional(Expr),
    Keyword(String, Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
    MatMul,
    LShift,
    RShift,
    BitOr,
    BitXor,
    BitAnd,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
            BinOp::MatMul => "@",
            BinOp::LShift => "<<",
            BinOp::RShift => ">>",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::BitAnd => "&",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        Some(match s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "//" => BinOp::FloorDiv,
            "%" => BinOp::Mod,
            "**" => BinOp::Pow,
            "@" => BinOp::MatMul,
            "<<" => BinOp::LShift,
            ">>" => BinOp::RShift,
            "|" => BinOp::BitOr,
            "^" => BinOp::BitXor,
            "&" => BinOp::BitAnd,
            _ => return None,
        })
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::BitOr => prec::BIT_OR,
            BinOp::BitXor => prec::BIT_XOR,
            BinOp::BitAnd => prec::BIT_AND,
            BinOp::LShift | BinOp::RShift => prec::SHIFT,
            BinOp::Add | BinOp::Sub => prec::ARITH,
            BinOp::Mul | BinOp::Div | BinOp::FloorDiv | BinOp::Mod | BinOp::MatMul => prec::TERM,
            BinOp::Pow => prec::POWER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Pos,
    Invert,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
    In,
    NotIn,
    Is,
    IsNot,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::NotEq => "!=",
            CmpOp::Lt => "<",
            CmpOp::LtE => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtE => ">=",
            CmpOp::In => "in",
            CmpOp::NotIn => "not in",
            CmpOp::Is => "is",
            CmpOp::IsNot => "is not",
        }
    }
}

pub(crate) mod prec {
    pub const TUPLE: u8 = 0;
    pub const OR: u8 = 2;
    pub const AND: u8 = 3;
    pub const NOT: u8 = 4;
    pub const CMP: u8 = 5;
    pub const BIT_OR: u8 = 6;
    pub const BIT_XOR: u8 = 7;
    pub const BIT_AND: u8 = 8;
    pub const SHIFT: u8 = 9;
    pub const ARITH: u8 = 10;
    pub const TERM: u8 = 11;
    pub const UNARY: u8 = 12;
    pub const POWER: u8 = 13;
    pub const ATOM: u8 = 15;
}

impl Expr {
    pub fn precedence(&self) -> u8 {
        match self {
            Expr::Tuple(items) if !items.is_empty() => prec::TUPLE,
            Expr::BoolOp { op: BoolOp::Or, .. } => prec::OR,
            Expr::BoolOp { op: BoolOp::And, .. } => prec::AND,
            Expr::UnaryOp { op: UnaryOp::Not, .. } => prec::NOT,
            Expr::Compare { .. } => prec::CMP,
            Expr::BinOp { op, .. } => op.precedence(),
            Expr::UnaryOp { .. } => prec::UNARY,
            _ => prec::ATOM,
        }
    }

    /// Visits this expression and every sub-expression, parents first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Call { func, args } => {
                func.walk(f);
                for a in args {
                    match a {
                        Arg::Positional(e) | Arg::Keyword(_, e) => e.walk(f),
                    }
                }
            }
            Expr::Attribute { value, .. } => value.walk(f),
            Expr::Subscript { value, index } => {
                value.walk(f);
                index.walk(f);
            }
            Expr::Slice { lower, upper, step } => {
                for e in [lower, upper, step].into_iter().flatten() {
                    e.walk(f);
                }
            }
            Expr::BinOp { left, right, .. } => {
                left.walk(f);
                right.walk(f);
            }
            Expr::UnaryOp { operand, .. } => operand.walk(f),
            Expr::BoolOp { values, .. } | Expr::Tuple(values) | Expr::List(values) => {
                for v in values {
                    v.walk(f);
                }
            }
            Expr::Compare { left, rest } => {
                left.walk(f);
                for (_, e) in rest {
                    e.walk(f);
                }
            }
            Expr::Name(_)
            | Expr::Int(_)
            | Expr::Float(_)
            | Expr::Str(_)
            | Expr::Bool(_)
            | Expr::None
            | Expr::HoleCall(_) => {}
        }
    }

    pub fn hole_calls(&self) -> Vec<&HoleCallExpr> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::HoleCall(h) = e {
                out.push(h);
            }
        });
        out
    }
}

impl Stmt {
    /// Expressions evaluated directly by this statement (not nested blocks),
    /// in source order.
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Assign { targets, value } => {
                let mut v: Vec<&Expr> = targets.iter().collect();
                v.push(value);
                v
            }
            StmtKind::AugAssign { target, value, .. } => vec![target, value],
            StmtKind::Expr(e) => vec![e],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::For { target, iter, .. } => vec![target, iter],
            StmtKind::Pass | StmtKind::Break | StmtKind::Continue => vec![],
        }
    }

    /// Nested statement blocks; index is the block number used in hole paths.
    pub fn blocks(&self) -> Vec<&Vec<Stmt>> {
        match &self.kind {
            StmtKind::If { body, orelse, .. } => vec![body, orelse],
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => vec![body],
            _ => vec![],
        }
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut Vec<Stmt>> {
        match &mut self.kind {
            StmtKind::If { body, orelse, .. } => vec![body, orelse],
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => vec![body],
            _ => vec![],
        }
    }
}
