use std::fmt::Write;

use super::ast::*;

/// Formatting knobs. Every style prints a program that re-parses to a
/// structurally equal AST; only layout differs.
#[derive(Clone, Copy, Debug)]
pub struct PrintStyle {
    pub indent: usize,
    /// Opening braces on their own line instead of trailing the header.
    pub brace_next_line: bool,
    /// Blank line between top-level items.
    pub blank_between_items: bool,
}

impl Default for PrintStyle {
    fn default() -> Self {
        PrintStyle { indent: 4, brace_next_line: false, blank_between_items: true }
    }
}

pub fn print_program(program: &Program) -> String {
    print_program_styled(program, PrintStyle::default())
}

pub fn print_program_styled(program: &Program, style: PrintStyle) -> String {
    let mut p = Printer { out: String::new(), style, depth: 0 };
    let mut first = true;
    for g in &program.globals {
        if !first && style.blank_between_items {
            p.out.push('\n');
        }
        first = false;
        p.global(g);
    }
    for f in &program.functions {
        if !first && style.blank_between_items {
            p.out.push('\n');
        }
        first = false;
        p.function(f);
    }
    p.out
}

struct Printer {
    out: String,
    style: PrintStyle,
    depth: usize,
}

impl Printer {
    fn pad(&mut self) {
        for _ in 0..self.depth * self.style.indent {
            self.out.push(' ');
        }
    }

    fn open_brace(&mut self) {
        if self.style.brace_next_line {
            self.out.push('\n');
            self.pad();
            self.out.push_str("{\n");
        } else {
            self.out.push_str(" {\n");
        }
    }

    fn global(&mut self, g: &GlobalDecl) {
        self.pad();
        let _ = write!(self.out, "{} {}", g.ty, g.name);
        if let Some(init) = &g.init {
            self.out.push_str(" = ");
            self.expr(init, 0);
        }
        self.out.push_str(";\n");
    }

    fn function(&mut self, f: &FuncDecl) {
        self.pad();
        let _ = write!(self.out, "fn {}(", f.name);
        for (i, p) in f.params.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            let _ = write!(self.out, "{} {}", p.ty, p.name);
        }
        self.out.push(')');
        if let Some(ret) = f.ret {
            let _ = write!(self.out, ": {ret}");
        }
        self.block_body(&f.body);
        self.out.push('\n');
    }

    /// Prints ` {` (or newline brace), the indented statements, and `}` at
    /// the current depth. No trailing newline.
    fn block_body(&mut self, block: &Block) {
        self.open_brace();
        self.depth += 1;
        for stmt in &block.stmts {
            self.stmt(stmt);
        }
        self.depth -= 1;
        self.pad();
        self.out.push('}');
    }

    fn stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::Block { block, .. } => {
                self.pad();
                self.block_body(block);
                self.out.push('\n');
            }
            _ => {
                self.pad();
                self.stmt_inner(stmt);
                self.out.push('\n');
            }
        }
    }

    /// Statement text starting at the current position; ends after the
    /// closing `;` or `}` of the statement itself.
    fn stmt_inner(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::VarDecl { .. } | Stmt::Assign { .. } => {
                self.simple_stmt(stmt);
                self.out.push(';');
            }
            Stmt::If { .. } => self.if_chain(stmt),
            Stmt::While { cond, body, .. } => {
                self.out.push_str("while (");
                self.expr(cond, 0);
                self.out.push(')');
                self.block_body(body);
            }
            Stmt::DoWhile { body, cond, .. } => {
                self.out.push_str("do");
                self.block_body(body);
                self.out.push_str(" while (");
                self.expr(cond, 0);
                self.out.push_str(");");
            }
            Stmt::For { init, cond, update, body, .. } => {
                self.out.push_str("for (");
                if let Some(init) = init {
                    self.simple_stmt(init);
                }
                self.out.push(';');
                if let Some(cond) = cond {
                    self.out.push(' ');
                    self.expr(cond, 0);
                }
                self.out.push(';');
                if let Some(update) = update {
                    self.out.push(' ');
                    self.simple_stmt(update);
                }
                self.out.push(')');
                self.block_body(body);
            }
            Stmt::Switch { scrutinee, arms, default, .. } => {
                self.out.push_str("switch (");
                self.expr(scrutinee, 0);
                self.out.push(')');
                self.open_brace();
                self.depth += 1;
                for arm in arms {
                    self.pad();
                    let _ = write!(self.out, "case {}:\n", arm.value);
                    self.depth += 1;
                    for s in &arm.body {
                        self.stmt(s);
                    }
                    self.depth -= 1;
                }
                if let Some(default) = default {
                    self.pad();
                    self.out.push_str("default:\n");
                    self.depth += 1;
                    for s in default {
                        self.stmt(s);
                    }
                    self.depth -= 1;
                }
                self.depth -= 1;
                self.pad();
                self.out.push('}');
            }
            Stmt::Return { value, .. } => {
                self.out.push_str("return");
                if let Some(value) = value {
                    self.out.push(' ');
                    self.expr(value, 0);
                }
                self.out.push(';');
            }
            Stmt::Expr { expr, .. } => {
                self.expr(expr, 0);
                self.out.push(';');
            }
            Stmt::Block { block, .. } => self.block_body(block),
        }
    }

    /// Declaration or assignment without the trailing semicolon, as used in
    /// `for` headers.
    fn simple_stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::VarDecl { ty, name, init, .. } => {
                let _ = write!(self.out, "{ty} {name}");
                if let Some(init) = init {
                    self.out.push_str(" = ");
                    self.expr(init, 0);
                }
            }
            Stmt::Assign { target, op, value, .. } => {
                match target {
                    LValue::Var { name, .. } => self.out.push_str(name),
                    LValue::Index { name, index, .. } => {
                        self.out.push_str(name);
                        self.out.push('[');
                        self.expr(index, 0);
                        self.out.push(']');
                    }
                }
                let _ = write!(self.out, " {} ", op.symbol());
                self.expr(value, 0);
            }
            other => panic!("not a simple statement: {other:?}"),
        }
    }

    fn if_chain(&mut self, stmt: &Stmt) {
        let Stmt::If { cond, then_block, els, .. } = stmt else {
            unreachable!()
        };
        self.out.push_str("if (");
        self.expr(cond, 0);
        self.out.push(')');
        self.block_body(then_block);
        if let Some(els) = els {
            match els.as_ref() {
                Stmt::If { .. } => {
                    self.out.push_str(" else ");
                    self.if_chain(els);
                }
                Stmt::Block { block, .. } => {
                    self.out.push_str(" else");
                    self.block_body(block);
                }
                other => panic!("malformed else branch: {other:?}"),
            }
        }
    }

    fn expr(&mut self, expr: &Expr, min_prec: u8) {
        match expr {
            Expr::Int { value, .. } => {
                let _ = write!(self.out, "{value}");
            }
            Expr::Bool { value, .. } => {
                let _ = write!(self.out, "{value}");
            }
            Expr::Str { value, .. } => {
                let _ = write!(self.out, "\"{value}\"");
            }
            Expr::Var { name, .. } => self.out.push_str(name),
            Expr::Call { name, args, .. } => {
                self.out.push_str(name);
                self.out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.expr(a, 0);
                }
                self.out.push(')');
            }
            Expr::Print { arg, .. } => {
                self.out.push_str("print(");
                self.expr(arg, 0);
                self.out.push(')');
            }
            Expr::Read { .. } => self.out.push_str("read()"),
            Expr::Index { base, index, .. } => {
                self.expr(base, POSTFIX_PREC);
                self.out.push('[');
                self.expr(index, 0);
                self.out.push(']');
            }
            Expr::NewArray { len, .. } => {
                self.out.push_str("new int[");
                self.expr(len, 0);
                self.out.push(']');
            }
            Expr::Unary { op, expr, .. } => {
                if UNARY_PREC < min_prec {
                    self.out.push('(');
                    self.unary(*op, expr);
                    self.out.push(')');
                } else {
                    self.unary(*op, expr);
                }
            }
            Expr::Binary { op, lhs, rhs, .. } => {
                let prec = bin_prec(*op);
                let needs_parens = prec < min_prec;
                if needs_parens {
                    self.out.push('(');
                }
                self.expr(lhs, prec);
                let _ = write!(self.out, " {} ", op.symbol());
                // Left-associative: equal-precedence right operands need parens.
                self.expr(rhs, prec + 1);
                if needs_parens {
                    self.out.push(')');
                }
            }
        }
    }

    fn unary(&mut self, op: UnOp, expr: &Expr) {
        self.out.push(match op {
            UnOp::Neg => '-',
            UnOp::Not => '!',
        });
        self.expr(expr, UNARY_PREC);
    }
}

const UNARY_PREC: u8 = 7;
const POSTFIX_PREC: u8 = 8;

fn bin_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne => 3,
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
        BinOp::Add | BinOp::Sub => 5,
        BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
    }
}

