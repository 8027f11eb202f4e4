use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::FrontendError;

/// Validates every name in the program: exactly one zero-parameter `main`
/// returning nothing, unique globals and functions, locals declared before
/// use, no duplicate declaration in a scope, and no shadowing of a visible
/// local or parameter. Locals may shadow globals.
pub fn resolve(program: &Program) -> Result<(), FrontendError> {
    let mut globals: HashMap<&str, Type> = HashMap::new();
    for g in &program.globals {
        if globals.insert(&g.name, g.ty).is_some() {
            return Err(err(&g.name, g.span, "duplicate global declaration"));
        }
    }
    let mut functions: HashSet<&str> = HashSet::new();
    for f in &program.functions {
        if !functions.insert(&f.name) {
            return Err(err(&f.name, f.span, "duplicate function declaration"));
        }
    }

    let mains: Vec<_> = program.functions.iter().filter(|f| f.name == "main").collect();
    match mains.as_slice() {
        [main] => {
            if !main.params.is_empty() {
                return Err(err("main", main.span, "main must take no parameters"));
            }
            if main.ret.is_some() {
                return Err(err("main", main.span, "main must not return a value"));
            }
        }
        [] => {
            return Err(err("main", Span::default(), "program must declare fn main()"));
        }
        [_, extra, ..] => {
            return Err(err("main", extra.span, "duplicate function declaration"));
        }
    }

    for g in &program.globals {
        if let Some(init) = &g.init {
            let mut ctx = Ctx {
                globals: &globals,
                functions: &functions,
                scopes: Vec::new(),
            };
            ctx.expr(init)?;
        }
    }
    for f in &program.functions {
        let mut ctx = Ctx { globals: &globals, functions: &functions, scopes: vec![HashMap::new()] };
        for p in &f.params {
            if ctx.scopes[0].insert(p.name.clone(), p.ty).is_some() {
                return Err(err(&p.name, f.span, "duplicate parameter name"));
            }
        }
        ctx.block(&f.body)?;
    }
    Ok(())
}

fn err(name: &str, span: Span, message: &str) -> FrontendError {
    FrontendError::Resolve {
        name: name.to_string(),
        line: span.line,
        col: span.col,
        message: message.to_string(),
    }
}

struct Ctx<'a> {
    globals: &'a HashMap<&'a str, Type>,
    functions: &'a HashSet<&'a str>,
    scopes: Vec<HashMap<String, Type>>,
}

impl<'a> Ctx<'a> {
    fn lookup_var(&self, name: &str) -> bool {
        self.scopes.iter().rev().any(|s| s.contains_key(name)) || self.globals.contains_key(name)
    }

    fn declare(&mut self, name: &str, ty: Type, span: Span) -> Result<(), FrontendError> {
        if self.scopes.iter().any(|s| s.contains_key(name)) {
            return Err(err(name, span, "shadows or duplicates a visible local"));
        }
        self.scopes
            .last_mut()
            .expect("declaration outside any scope")
            .insert(name.to_string(), ty);
        Ok(())
    }

    fn block(&mut self, block: &Block) -> Result<(), FrontendError> {
        self.scopes.push(HashMap::new());
        for stmt in &block.stmts {
            self.stmt(stmt)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmts_scoped(&mut self, stmts: &[Stmt]) -> Result<(), FrontendError> {
        self.scopes.push(HashMap::new());
        for stmt in stmts {
            self.stmt(stmt)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, stmt: &Stmt) -> Result<(), FrontendError> {
        match stmt {
            Stmt::VarDecl { name, ty, init, span } => {
                if let Some(init) = init {
                    self.expr(init)?;
                }
                self.declare(name, *ty, *span)
            }
            Stmt::Assign { target, value, .. } => {
                match target {
                    LValue::Var { name, span } => {
                        if !self.lookup_var(name) {
                            return Err(err(name, *span, "assignment to undeclared variable"));
                        }
                    }
                    LValue::Index { name, index, span } => {
                        if !self.lookup_var(name) {
                            return Err(err(name, *span, "assignment to undeclared variable"));
                        }
                        self.expr(index)?;
                    }
                }
                self.expr(value)
            }
            Stmt::If { cond, then_block, els, .. } => {
                self.expr(cond)?;
                self.block(then_block)?;
                if let Some(els) = els {
                    self.stmt(els)?;
                }
                Ok(())
            }
            Stmt::While { cond, body, .. } => {
                self.expr(cond)?;
                self.block(body)
            }
            Stmt::DoWhile { body, cond, .. } => {
                self.block(body)?;
                self.expr(cond)
            }
            Stmt::For { init, cond, update, body, .. } => {
                // The init clause scopes over the whole loop.
                self.scopes.push(HashMap::new());
                if let Some(init) = init {
                    self.stmt(init)?;
                }
                if let Some(cond) = cond {
                    self.expr(cond)?;
                }
                if let Some(update) = update {
                    self.stmt(update)?;
                }
                self.block(body)?;
                self.scopes.pop();
                Ok(())
            }
            Stmt::Switch { scrutinee, arms, default, .. } => {
                self.expr(scrutinee)?;
                for arm in arms {
                    self.stmts_scoped(&arm.body)?;
                }
                if let Some(default) = default {
                    self.stmts_scoped(default)?;
                }
                Ok(())
            }
            Stmt::Return { value, .. } => value.as_ref().map_or(Ok(()), |v| self.expr(v)),
            Stmt::Expr { expr, .. } => self.expr(expr),
            Stmt::Block { block, .. } => self.block(block),
        }
    }

    fn expr(&mut self, expr: &Expr) -> Result<(), FrontendError> {
        match expr {
            Expr::Int { .. } | Expr::Bool { .. } | Expr::Str { .. } | Expr::Read { .. } => Ok(()),
            Expr::Var { name, span } => {
                if self.lookup_var(name) {
                    Ok(())
                } else {
                    Err(err(name, *span, "use of undeclared variable"))
                }
            }
            Expr::Call { name, args, span } => {
                if !self.functions.contains(name.as_str()) {
                    return Err(err(name, *span, "call to undeclared function"));
                }
                args.iter().try_for_each(|a| self.expr(a))
            }
            Expr::Print { arg, .. } => self.expr(arg),
            Expr::Index { base, index, .. } => {
                self.expr(base)?;
                self.expr(index)
            }
            Expr::NewArray { len, .. } => self.expr(len),
            Expr::Unary { expr, .. } => self.expr(expr),
            Expr::Binary { lhs, rhs, .. } => {
                self.expr(lhs)?;
                self.expr(rhs)
            }
        }
    }
}
