use super::ast::*;
use super::AnplProgram;
use crate::lex::{self, LexError, TokKind, Token};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, serde::Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("empty hole description at {line}:{col}")]
    EmptyDescription { line: u32, col: u32 },
    #[error("program has no `main` function")]
    MissingMain,
}

impl ParseError {
    pub fn position(&self) -> Option<(u32, u32)> {
        match self {
            ParseError::Syntax { line, col, .. } | ParseError::EmptyDescription { line, col } => Some((*line, *col)),
            ParseError::MissingMain => None,
        }
    }
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError::Syntax {
            line: e.line,
            col: e.col,
            message: e.message,
        }
    }
}

type PResult<T> = Result<T, ParseError>;

pub fn parse(text: &str) -> PResult<AnplProgram> {
    let tokens = lex::tokenize(text)?;
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        next_label: 0,
    };
    let functions = p.program()?;
    let program = AnplProgram { functions };
    if program.function("main").is_none() {
        return Err(ParseError::MissingMain);
    }
    Ok(program)
}

/// Parses a bare statement block (no enclosing `def`), used by edit
/// operations that replace a function body. Hole labels start at zero and are
/// reassigned when the edited program is re-parsed.
pub fn parse_block(text: &str) -> PResult<Vec<Stmt>> {
    let mut src = String::from("def __block__():\n");
    let dedented = dedent(text);
    if dedented.trim().is_empty() {
        return Err(ParseError::Syntax {
            line: 1,
            col: 1,
            message: "empty statement block".into(),
        });
    }
    for line in dedented.lines() {
        src.push_str("    ");
        src.push_str(line);
        src.push('\n');
    }
    let tokens = lex::tokenize(&src).map_err(|e| shift_lex(e))?;
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        next_label: 0,
    };
    let f = p.function_def().map_err(shift_err)?;
    p.skip_newlines();
    if p.peek().kind != TokKind::EndMarker {
        return Err(shift_err(p.error_here("unexpected dedent in block")));
    }
    match f.body {
        FunctionBody::Block(stmts) => Ok(stmts),
        FunctionBody::Hole { description, loc } => Ok(vec![Stmt {
            kind: StmtKind::Expr(Expr::Str(description)),
            loc,
        }]),
    }
}

fn shift_lex(e: LexError) -> ParseError {
    shift_err(e.into())
}

fn shift_err(e: ParseError) -> ParseError {
    match e {
        ParseError::Syntax { line, col, message } => ParseError::Syntax {
            line: line.saturating_sub(1).max(1),
            col: col.saturating_sub(4).max(1),
            message,
        },
        ParseError::EmptyDescription { line, col } => ParseError::EmptyDescription {
            line: line.saturating_sub(1).max(1),
            col: col.saturating_sub(4).max(1),
        },
        other => other,
    }
}

fn dedent(text: &str) -> String {
    let common = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start_matches([' ', '\t']).len())
        .min()
        .unwrap_or(0);
    text.lines()
        .map(|l| if l.len() >= common { &l[common..] } else { l.trim_start() })
        .collect::<Vec<_>>()
        .join("\n")
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_label: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn loc(&self) -> Loc {
        let t = self.peek();
        Loc { line: t.line, col: t.col }
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            message: message.into(),
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        let found = match t.kind {
            TokKind::Name | TokKind::Op | TokKind::Number | TokKind::Str => format!("{:?}", t.text),
            k => k.to_string(),
        };
        self.error_here(format!("expected {expected}, found {found}"))
    }

    fn at_op(&self, op: &str) -> bool {
        self.peek().is_op(op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_name(kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("{op:?}")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("{kw:?}")))
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        let t = self.peek();
        if t.kind == TokKind::Name && !lex::is_keyword(&t.text) {
            Ok(self.advance().text)
        } else {
            Err(self.unexpected("identifier"))
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek().kind == TokKind::Newline {
            self.advance();
        }
    }

    fn program(&mut self) -> PResult<Vec<SketchFunction>> {
        let mut functions: Vec<SketchFunction> = Vec::new();
        loop {
            self.skip_newlines();
            match self.peek().kind {
                TokKind::EndMarker => break,
                TokKind::Name if self.at_kw("def") => {
                    let f = self.function_def()?;
                    if functions.iter().any(|g| g.name == f.name) {
                        return Err(ParseError::Syntax {
                            line: f.loc.line,
                            col: f.loc.col,
                            message: format!("function {:?} is defined twice", f.name),
                        });
                    }
                    functions.push(f);
                }
                _ => return Err(self.error_here("only function definitions are allowed at top level")),
            }
        }
        Ok(functions)
    }

    fn function_def(&mut self) -> PResult<SketchFunction> {
        let loc = self.loc();
        self.expect_kw("def")?;
        let name = self.expect_ident()?;
        self.expect_op("(")?;
        let mut params: Vec<String> = Vec::new();
        while !self.at_op(")") {
            let ploc = self.loc();
            let p = self.expect_ident()?;
            if self.at_op(":") || self.at_op("=") {
                return Err(self.error_here("parameter annotations and defaults are not supported in sketches"));
            }
            if params.contains(&p) {
                return Err(ParseError::Syntax {
                    line: ploc.line,
                    col: ploc.col,
                    message: format!("duplicate parameter {p:?}"),
                });
            }
            params.push(p);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        if self.at_op("->") {
            return Err(self.error_here("return annotations are not supported in sketches"));
        }
        self.expect_op(":")?;
        let body = self.suite()?;
        let body = match body.as_slice() {
            [Stmt {
                kind: StmtKind::Expr(Expr::Str(description)),
                loc,
            }] => {
                if description.trim().is_empty() {
                    return Err(ParseError::EmptyDescription {
                        line: loc.line,
                        col: loc.col,
                    });
                }
                FunctionBody::Hole {
                    description: description.clone(),
                    loc: *loc,
                }
            }
            _ => FunctionBody::Block(body),
        };
        Ok(SketchFunction { name, params, body, loc })
    }

    fn suite(&mut self) -> PResult<Vec<Stmt>> {
        if self.peek().kind != TokKind::Newline {
            return self.simple_stmts();
        }
        self.advance();
        if self.peek().kind != TokKind::Indent {
            return Err(self.unexpected("an indented block"));
        }
        self.advance();
        let mut stmts = Vec::new();
        loop {
            match self.peek().kind {
                TokKind::Dedent => {
                    self.advance();
                    break;
                }
                TokKind::EndMarker => break,
                TokKind::Newline => {
                    self.advance();
                }
                _ => stmts.extend(self.statement()?),
            }
        }
        Ok(stmts)
    }

    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        let loc = self.loc();
        let t = self.peek();
        if t.kind == TokKind::Name {
            match t.text.as_str() {
                "if" => {
                    self.advance();
                    return Ok(vec![self.if_rest(loc)?]);
                }
                "for" => {
                    self.advance();
                    let target = self.target_list()?;
                    self.expect_kw("in")?;
                    let iter = self.testlist()?;
                    self.expect_op(":")?;
                    let body = self.suite()?;
                    if self.at_kw("else") {
                        return Err(self.error_here("`for ... else` is not supported in sketches"));
                    }
                    return Ok(vec![Stmt {
                        kind: StmtKind::For { target, iter, body },
                        loc,
                    }]);
                }
                "while" => {
                    self.advance();
                    let cond = self.test()?;
                    self.expect_op(":")?;
                    let body = self.suite()?;
                    if self.at_kw("else") {
                        return Err(self.error_here("`while ... else` is not supported in sketches"));
                    }
                    return Ok(vec![Stmt {
                        kind: StmtKind::While { cond, body },
                        loc,
                    }]);
                }
                "def" => return Err(self.error_here("nested function definitions are not supported in sketches")),
                "elif" | "else" => return Err(self.error_here(format!("unexpected {:?}", t.text))),
                "class" | "import" | "from" | "try" | "with" | "lambda" | "global" | "nonlocal" | "del"
                | "raise" | "assert" | "async" | "await" | "yield" => {
                    return Err(self.error_here(format!("{:?} is outside the sketch grammar", t.text)))
                }
                _ => {}
            }
        }
        self.simple_stmts()
    }

    fn if_rest(&mut self, loc: Loc) -> PResult<Stmt> {
        let cond = self.test()?;
        self.expect_op(":")?;
        let body = self.suite()?;
        let orelse = if self.at_kw("elif") {
            let eloc = self.loc();
            self.advance();
            vec![self.if_rest(eloc)?]
        } else if self.eat_kw("else") {
            self.expect_op(":")?;
            self.suite()?
        } else {
            Vec::new()
        };
        Ok(Stmt {
            kind: StmtKind::If { cond, body, orelse },
            loc,
        })
    }

    fn simple_stmts(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = vec![self.simple_stmt()?];
        while self.eat_op(";") {
            if self.peek().kind == TokKind::Newline {
                break;
            }
            out.push(self.simple_stmt()?);
        }
        match self.peek().kind {
            TokKind::Newline => {
                self.advance();
            }
            TokKind::EndMarker | TokKind::Dedent => {}
            _ => return Err(self.unexpected("end of statement")),
        }
        Ok(out)
    }

    fn simple_stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        let kind = if self.eat_kw("pass") {
            StmtKind::Pass
        } else if self.eat_kw("break") {
            StmtKind::Break
        } else if self.eat_kw("continue") {
            StmtKind::Continue
        } else if self.eat_kw("return") {
            if matches!(self.peek().kind, TokKind::Newline | TokKind::EndMarker | TokKind::Dedent) || self.at_op(";") {
                StmtKind::Return(None)
            } else {
                StmtKind::Return(Some(self.testlist()?))
            }
        } else {
            let first = self.testlist()?;
            if self.at_op("=") {
                let mut parts = vec![first];
                while self.eat_op("=") {
                    parts.push(self.testlist()?);
                }
                let value = parts.pop().expect("at least two parts");
                for t in &parts {
                    check_target(t).map_err(|m| ParseError::Syntax {
                        line: loc.line,
                        col: loc.col,
                        message: m,
                    })?;
                }
                StmtKind::Assign { targets: parts, value }
            } else if let Some(op) = self.aug_op() {
                self.advance();
                if !matches!(first, Expr::Name(_) | Expr::Subscript { .. } | Expr::Attribute { .. }) {
                    return Err(ParseError::Syntax {
                        line: loc.line,
                        col: loc.col,
                        message: "illegal target for augmented assignment".into(),
                    });
                }
                let value = self.testlist()?;
                StmtKind::AugAssign { target: first, op, value }
            } else {
                StmtKind::Expr(first)
            }
        };
        Ok(Stmt { kind, loc })
    }

    fn aug_op(&self) -> Option<BinOp> {
        let t = self.peek();
        if t.kind != TokKind::Op || !t.text.ends_with('=') || t.text.len() < 2 {
            return None;
        }
        let sym = &t.text[..t.text.len() - 1];
        if matches!(sym, "=" | "!" | "<" | ">") {
            return None;
        }
        BinOp::from_symbol(sym)
    }

    fn target_list(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        let first = self.bitor()?;
        let target = if self.at_op(",") {
            let mut items = vec![first];
            while self.eat_op(",") {
                if self.at_kw("in") {
                    break;
                }
                items.push(self.bitor()?);
            }
            Expr::Tuple(items)
        } else {
            first
        };
        check_target(&target).map_err(|m| ParseError::Syntax {
            line: loc.line,
            col: loc.col,
            message: m,
        })?;
        Ok(target)
    }

    fn testlist(&mut self) -> PResult<Expr> {
        let first = self.test()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.ends_testlist() {
                break;
            }
            items.push(self.test()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn ends_testlist(&self) -> bool {
        let t = self.peek();
        matches!(t.kind, TokKind::Newline | TokKind::EndMarker | TokKind::Dedent)
            || (t.kind == TokKind::Op && matches!(t.text.as_str(), "=" | ")" | "]" | ":" | ";"))
            || self.aug_op().is_some()
    }

    fn test(&mut self) -> PResult<Expr> {
        let e = self.or_test()?;
        if self.at_kw("if") {
            return Err(self.error_here("conditional expressions are not supported in sketches"));
        }
        Ok(e)
    }

    fn or_test(&mut self) -> PResult<Expr> {
        let first = self.and_test()?;
        if !self.at_kw("or") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("or") {
            values.push(self.and_test()?);
        }
        Ok(Expr::BoolOp { op: BoolOp::Or, values })
    }

    fn and_test(&mut self) -> PResult<Expr> {
        let first = self.not_test()?;
        if !self.at_kw("and") {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw("and") {
            values.push(self.not_test()?);
        }
        Ok(Expr::BoolOp { op: BoolOp::And, values })
    }

    fn not_test(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            let operand = self.not_test()?;
            return Ok(Expr::UnaryOp {
                op: UnaryOp::Not,
                operand: Box::new(operand),
            });
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<CmpOp> {
        let t = self.peek().clone();
        let op = match (t.kind, t.text.as_str()) {
            (TokKind::Op, "==") => CmpOp::Eq,
            (TokKind::Op, "!=") => CmpOp::NotEq,
            (TokKind::Op, "<") => CmpOp::Lt,
            (TokKind::Op, "<=") => CmpOp::LtE,
            (TokKind::Op, ">") => CmpOp::Gt,
            (TokKind::Op, ">=") => CmpOp::GtE,
            (TokKind::Name, "in") => CmpOp::In,
            (TokKind::Name, "not") if self.peek_at(1).is_name("in") => {
                self.advance();
                CmpOp::NotIn
            }
            (TokKind::Name, "is") => {
                if self.peek_at(1).is_name("not") {
                    self.advance();
                    self.advance();
                    return Some(CmpOp::IsNot);
                }
                CmpOp::Is
            }
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let left = self.bitor()?;
        let mut rest = Vec::new();
        while let Some(op) = self.comp_op() {
            rest.push((op, self.bitor()?));
        }
        if rest.is_empty() {
            Ok(left)
        } else {
            Ok(Expr::Compare {
                left: Box::new(left),
                rest,
            })
        }
    }

    fn binary_level(&mut self, ops: &[&str], next: fn(&mut Parser) -> PResult<Expr>) -> PResult<Expr> {
        let mut left = next(self)?;
        loop {
            let t = self.peek();
            if t.kind == TokKind::Op && ops.contains(&t.text.as_str()) {
                let op = BinOp::from_symbol(&self.advance().text).expect("listed operator");
                let right = next(self)?;
                left = Expr::BinOp {
                    op,
                    left: Box::new(left),
                    right: Box::new(right),
                };
            } else {
                return Ok(left);
            }
        }
    }

    fn bitor(&mut self) -> PResult<Expr> {
        self.binary_level(&["|"], Parser::bitxor)
    }

    fn bitxor(&mut self) -> PResult<Expr> {
        self.binary_level(&["^"], Parser::bitand)
    }

    fn bitand(&mut self) -> PResult<Expr> {
        self.binary_level(&["&"], Parser::shift)
    }

    fn shift(&mut self) -> PResult<Expr> {
        self.binary_level(&["<<", ">>"], Parser::arith)
    }

    fn arith(&mut self) -> PResult<Expr> {
        self.binary_level(&["+", "-"], Parser::term)
    }

    fn term(&mut self) -> PResult<Expr> {
        self.binary_level(&["*", "/", "//", "%", "@"], Parser::factor)
    }

    fn factor(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            t if t.is_op("-") => Some(UnaryOp::Neg),
            t if t.is_op("+") => Some(UnaryOp::Pos),
            t if t.is_op("~") => Some(UnaryOp::Invert),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let operand = self.factor()?;
            return Ok(Expr::UnaryOp {
                op,
                operand: Box::new(operand),
            });
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.primary()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr::BinOp {
                op: BinOp::Pow,
                left: Box::new(base),
                right: Box::new(exp),
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.at_op("(") {
                let call_loc = self.loc();
                self.advance();
                let args = self.call_args()?;
                e = match e {
                    Expr::Str(description) => {
                        if description.trim().is_empty() {
                            return Err(ParseError::EmptyDescription {
                                line: call_loc.line,
                                col: call_loc.col,
                            });
                        }
                        let mut names = Vec::with_capacity(args.len());
                        for a in args {
                            match a {
                                Arg::Positional(Expr::Name(n)) => names.push(n),
                                _ => {
                                    return Err(ParseError::Syntax {
                                        line: call_loc.line,
                                        col: call_loc.col,
                                        message: "hole arguments must be plain variable names".into(),
                                    })
                                }
                            }
                        }
                        let label = format!("_hole{}", self.next_label);
                        self.next_label += 1;
                        Expr::HoleCall(HoleCallExpr {
                            label,
                            description,
                            args: names,
                            loc: call_loc,
                        })
                    }
                    func => Expr::Call {
                        func: Box::new(func),
                        args,
                    },
                };
            } else if self.at_op("[") {
                self.advance();
                let index = self.subscript_list()?;
                self.expect_op("]")?;
                e = Expr::Subscript {
                    value: Box::new(e),
                    index: Box::new(index),
                };
            } else if self.at_op(".") {
                self.advance();
                let t = self.peek();
                if t.kind != TokKind::Name {
                    return Err(self.unexpected("attribute name"));
                }
                let attr = self.advance().text;
                e = Expr::Attribute {
                    value: Box::new(e),
                    attr,
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> PResult<Vec<Arg>> {
        let mut args = Vec::new();
        let mut seen_keyword = false;
        while !self.at_op(")") {
            if self.peek().kind == TokKind::Name && self.peek_at(1).is_op("=") && !lex::is_keyword(&self.peek().text) {
                let name = self.advance().text;
                self.advance();
                args.push(Arg::Keyword(name, self.test()?));
                seen_keyword = true;
            } else {
                if self.at_op("*") || self.at_op("**") {
                    return Err(self.error_here("argument unpacking is not supported in sketches"));
                }
                if seen_keyword {
                    return Err(self.error_here("positional argument follows keyword argument"));
                }
                args.push(Arg::Positional(self.test()?));
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn subscript_list(&mut self) -> PResult<Expr> {
        let first = self.subscript()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.subscript()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn subscript(&mut self) -> PResult<Expr> {
        let lower = if self.at_op(":") { None } else { Some(self.test()?) };
        if !self.at_op(":") {
            return lower.ok_or_else(|| self.unexpected("subscript"));
        }
        self.advance();
        let upper = if self.at_op(":") || self.at_op("]") || self.at_op(",") {
            None
        } else {
            Some(Box::new(self.test()?))
        };
        let step = if self.eat_op(":") {
            if self.at_op("]") || self.at_op(",") {
                None
            } else {
                Some(Box::new(self.test()?))
            }
        } else {
            None
        };
        Ok(Expr::Slice {
            lower: lower.map(Box::new),
            upper,
            step,
        })
    }

    fn atom(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        match t.kind {
            TokKind::Number => {
                self.advance();
                parse_number(&t.text).map_err(|m| ParseError::Syntax {
                    line: t.line,
                    col: t.col,
                    message: m,
                })
            }
            TokKind::Str => {
                let mut value = String::new();
                while self.peek().kind == TokKind::Str {
                    let s = self.advance();
                    let v = lex::string_value(&s.text).map_err(|m| ParseError::Syntax {
                        line: s.line,
                        col: s.col,
                        message: m,
                    })?;
                    value.push_str(&v);
                }
                Ok(Expr::Str(value))
            }
            TokKind::Name => match t.text.as_str() {
                "True" => {
                    self.advance();
                    Ok(Expr::Bool(true))
                }
                "False" => {
                    self.advance();
                    Ok(Expr::Bool(false))
                }
                "None" => {
                    self.advance();
                    Ok(Expr::None)
                }
                kw if lex::is_keyword(kw) => Err(self.unexpected("expression")),
                _ => {
                    self.advance();
                    Ok(Expr::Name(t.text))
                }
            },
            TokKind::Op if t.text == "(" => {
                self.advance();
                if self.eat_op(")") {
                    return Ok(Expr::Tuple(Vec::new()));
                }
                let first = self.test()?;
                if self.eat_op(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.at_op(")") {
                        break;
                    }
                    items.push(self.test()?);
                }
                self.expect_op(")")?;
                Ok(Expr::Tuple(items))
            }
            TokKind::Op if t.text == "[" => {
                self.advance();
                let mut items = Vec::new();
                while !self.at_op("]") {
                    items.push(self.test()?);
                    if self.at_kw("for") {
                        return Err(self.error_here("comprehensions are not supported in sketches"));
                    }
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("]")?;
                Ok(Expr::List(items))
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn parse_number(text: &str) -> Result<Expr, String> {
    let clean: String = text.chars().filter(|c| *c != '_').collect();
    if clean.ends_with(['j', 'J']) {
        return Err("complex literals are not supported".into());
    }
    let lower = clean.to_ascii_lowercase();
    let radix = if lower.starts_with("0x") {
        Some(16)
    } else if lower.starts_with("0o") {
        Some(8)
    } else if lower.starts_with("0b") {
        Some(2)
    } else {
        None
    };
    if let Some(r) = radix {
        return i64::from_str_radix(&clean[2..], r)
            .map(Expr::Int)
            .map_err(|e| format!("bad integer literal: {e}"));
    }
    if clean.contains(['.', 'e', 'E']) {
        clean.parse::<f64>().map(Expr::Float).map_err(|e| format!("bad float literal: {e}"))
    } else {
        clean.parse::<i64>().map(Expr::Int).map_err(|e| format!("bad integer literal: {e}"))
    }
}

fn check_target(e: &Expr) -> Result<(), String> {
    match e {
        Expr::Name(_) | Expr::Subscript { .. } | Expr::Attribute { .. } => Ok(()),
        Expr::Tuple(items) | Expr::List(items) if !items.is_empty() => items.iter().try_for_each(check_target),
        _ => Err("cannot assign to expression".into()),
    }
}
