use super::ast::*;
use super::token::{SourceToken, TokenKind};
use super::FrontendError;

pub fn parse(tokens: &[SourceToken]) -> Result<Program, FrontendError> {
    let mut p = Parser { tokens, pos: 0 };
    p.program()
}

struct Parser<'a> {
    tokens: &'a [SourceToken],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&SourceToken> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&SourceToken> {
        self.tokens.get(self.pos + off)
    }

    fn bump(&mut self) -> Option<&SourceToken> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> Span {
        match self.peek() {
            Some(t) => Span { line: t.line, col: t.col },
            None => self
                .tokens
                .last()
                .map(|t| Span { line: t.line, col: t.col + t.lexeme.len() as u32 })
                .unwrap_or_default(),
        }
    }

    fn error(&self, expected: &str) -> FrontendError {
        let span = self.here();
        let found = self
            .peek()
            .map(|t| format!("{:?}", t.lexeme))
            .unwrap_or_else(|| "end of input".into());
        FrontendError::Parse {
            line: span.line,
            col: span.col,
            expected: expected.into(),
            found,
        }
    }

    fn at(&self, lexeme: &str) -> bool {
        self.peek().is_some_and(|t| t.lexeme == lexeme && t.kind != TokenKind::StringLiteral)
    }

    fn eat(&mut self, lexeme: &str) -> bool {
        if self.at(lexeme) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lexeme: &str) -> Result<(), FrontendError> {
        if self.eat(lexeme) {
            Ok(())
        } else {
            Err(self.error(&format!("`{lexeme}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), FrontendError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                let out = (t.lexeme.clone(), Span { line: t.line, col: t.col });
                self.pos += 1;
                Ok(out)
            }
            _ => Err(self.error(what)),
        }
    }

    fn at_type(&self) -> bool {
        self.at("int") || self.at("bool") || self.at("str")
    }

    fn ty(&mut self) -> Result<Type, FrontendError> {
        let base = if self.eat("int") {
            Type::Int
        } else if self.eat("bool") {
            Type::Bool
        } else if self.eat("str") {
            Type::Str
        } else {
            return Err(self.error("a type (`int`, `bool`, `str`)"));
        };
        if base == Type::Int && self.at("[") && self.peek_at(1).is_some_and(|t| t.lexeme == "]") {
            self.pos += 2;
            return Ok(Type::IntArray);
        }
        Ok(base)
    }

    fn program(&mut self) -> Result<Program, FrontendError> {
        let mut globals = Vec::new();
        let mut functions = Vec::new();
        while self.peek().is_some() {
            if self.at("fn") {
                functions.push(self.func_decl()?);
            } else if self.at_type() {
                globals.push(self.global_decl()?);
            } else {
                return Err(self.error("`fn` or a global declaration"));
            }
        }
        Ok(Program { globals, functions })
    }

    fn global_decl(&mut self) -> Result<GlobalDecl, FrontendError> {
        let span = self.here();
        let ty = self.ty()?;
        let (name, _) = self.ident("a global name")?;
        let init = if self.eat("=") { Some(self.expr()?) } else { None };
        self.expect(";")?;
        Ok(GlobalDecl { ty, name, init, span })
    }

    fn func_decl(&mut self) -> Result<FuncDecl, FrontendError> {
        let span = self.here();
        self.expect("fn")?;
        let (name, _) = self.ident("a function name")?;
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.at(")") {
            loop {
                let ty = self.ty()?;
                let (name, _) = self.ident("a parameter name")?;
                params.push(Param { ty, name });
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        let ret = if self.eat(":") { Some(self.ty()?) } else { None };
        let body = self.block()?;
        Ok(FuncDecl { name, params, ret, body, span })
    }

    fn block(&mut self) -> Result<Block, FrontendError> {
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.at("}") {
            if self.peek().is_none() {
                return Err(self.error("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        self.expect("}")?;
        Ok(Block { stmts })
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let span = self.here();
        if self.at_type() {
            let (stmt, _) = self.var_decl()?;
            self.expect(";")?;
            return Ok(stmt);
        }
        if self.at("if") {
            return self.if_stmt();
        }
        if self.at("while") {
            self.bump();
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let body = self.block()?;
            return Ok(Stmt::While { cond, body, span });
        }
        if self.at("do") {
            self.bump();
            let body = self.block()?;
            self.expect("while")?;
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            self.expect(";")?;
            return Ok(Stmt::DoWhile { body, cond, span });
        }
        if self.at("for") {
            return self.for_stmt();
        }
        if self.at("switch") {
            return self.switch_stmt();
        }
        if self.at("return") {
            self.bump();
            let value = if self.at(";") { None } else { Some(self.expr()?) };
            self.expect(";")?;
            return Ok(Stmt::Return { value, span });
        }
        if self.at("{") {
            let block = self.block()?;
            return Ok(Stmt::Block { block, span });
        }
        // Assignment or expression statement.
        if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
            if let Some(stmt) = self.try_assign(true)? {
                return Ok(stmt);
            }
        }
        let expr = self.expr()?;
        self.expect(";")?;
        Ok(Stmt::Expr { expr, span })
    }

    fn var_decl(&mut self) -> Result<(Stmt, String), FrontendError> {
        let span = self.here();
        let ty = self.ty()?;
        let (name, _) = self.ident("a variable name")?;
        let init = if self.eat("=") { Some(self.expr()?) } else { None };
        Ok((Stmt::VarDecl { ty, name: name.clone(), init, span }, name))
    }

    /// Parses `lvalue op expr` if the lookahead shapes like an assignment.
    /// With `consume_semi` the trailing `;` is required (statement position);
    /// without it the assignment is a `for` header clause.
    fn try_assign(&mut self, consume_semi: bool) -> Result<Option<Stmt>, FrontendError> {
        const ASSIGN_OPS: &[(&str, AssignOp)] = &[
            ("=", AssignOp::Set),
            ("+=", AssignOp::Add),
            ("-=", AssignOp::Sub),
            ("*=", AssignOp::Mul),
            ("/=", AssignOp::Div),
            ("%=", AssignOp::Rem),
        ];
        let start = self.pos;
        let span = self.here();
        let Ok((name, nspan)) = self.ident("a name") else {
            self.pos = start;
            return Ok(None);
        };
        let target = if self.at("[") {
            self.bump();
            let index = self.expr()?;
            self.expect("]")?;
            LValue::Index { name, index, span: nspan }
        } else {
            LValue::Var { name, span: nspan }
        };
        let op = self
            .peek()
            .and_then(|t| ASSIGN_OPS.iter().find(|(sym, _)| *sym == t.lexeme))
            .map(|(_, op)| *op);
        let Some(op) = op else {
            self.pos = start;
            return Ok(None);
        };
        self.bump();
        let value = self.expr()?;
        if consume_semi {
            self.expect(";")?;
        }
        Ok(Some(Stmt::Assign { target, op, value, span }))
    }

    fn if_stmt(&mut self) -> Result<Stmt, FrontendError> {
        let span = self.here();
        self.expect("if")?;
        self.expect("(")?;
        let cond = self.expr()?;
        self.expect(")")?;
        let then_block = self.block()?;
        let els = if self.eat("else") {
            if self.at("if") {
                Some(Box::new(self.if_stmt()?))
            } else {
                let espan = self.here();
                let block = self.block()?;
                Some(Box::new(Stmt::Block { block, span: espan }))
            }
        } else {
            None
        };
        Ok(Stmt::If { cond, then_block, els, span })
    }

    fn for_stmt(&mut self) -> Result<Stmt, FrontendError> {
        let span = self.here();
        self.expect("for")?;
        self.expect("(")?;
        let init = if self.at(";") {
            None
        } else if self.at_type() {
            let (stmt, _) = self.var_decl()?;
            Some(Box::new(stmt))
        } else {
            match self.try_assign(false)? {
                Some(stmt) => Some(Box::new(stmt)),
                None => return Err(self.error("a declaration, assignment, or `;`")),
            }
        };
        self.expect(";")?;
        let cond = if self.at(";") { None } else { Some(self.expr()?) };
        self.expect(";")?;
        let update = if self.at(")") {
            None
        } else {
            match self.try_assign(false)? {
                Some(stmt) => Some(Box::new(stmt)),
                None => return Err(self.error("an assignment or `)`")),
            }
        };
        self.expect(")")?;
        let body = self.block()?;
        Ok(Stmt::For { init, cond, update, body, span })
    }

    fn switch_stmt(&mut self) -> Result<Stmt, FrontendError> {
        let span = self.here();
        self.expect("switch")?;
        self.expect("(")?;
        let scrutinee = self.expr()?;
        self.expect(")")?;
        self.expect("{")?;
        let mut arms = Vec::new();
        let mut default = None;
        while !self.at("}") {
            if self.eat("case") {
                let aspan = self.here();
                if default.is_some() {
                    return Err(self.error("`}` (case after default)"));
                }
                let value = self.case_value()?;
                self.expect(":")?;
                let body = self.arm_body()?;
                arms.push(SwitchArm { value, body, span: aspan });
            } else if self.eat("default") {
                self.expect(":")?;
                default = Some(self.arm_body()?);
            } else {
                return Err(self.error("`case`, `default`, or `}`"));
            }
        }
        self.expect("}")?;
        Ok(Stmt::Switch { scrutinee, arms, default, span })
    }

    fn case_value(&mut self) -> Result<i64, FrontendError> {
        let neg = self.eat("-");
        match self.peek() {
            Some(t) if t.kind == TokenKind::IntLiteral => {
                let v: i64 = t
                    .lexeme
                    .parse()
                    .map_err(|_| self.error("an int literal in range"))?;
                self.pos += 1;
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.error("an int literal")),
        }
    }

    fn arm_body(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        let mut stmts = Vec::new();
        while !self.at("case") && !self.at("default") && !self.at("}") {
            if self.peek().is_none() {
                return Err(self.error("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    // Expressions, by descending precedence.
    fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.and_expr()?;
        while self.at("||") {
            let span = self.here();
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr::Binary { op: BinOp::Or, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.eq_expr()?;
        while self.at("&&") {
            let span = self.here();
            self.bump();
            let rhs = self.eq_expr()?;
            lhs = Expr::Binary { op: BinOp::And, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn eq_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.rel_expr()?;
        loop {
            let op = if self.at("==") {
                BinOp::Eq
            } else if self.at("!=") {
                BinOp::Ne
            } else {
                break;
            };
            let span = self.here();
            self.bump();
            let rhs = self.rel_expr()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn rel_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.add_expr()?;
        loop {
            let op = if self.at("<=") {
                BinOp::Le
            } else if self.at(">=") {
                BinOp::Ge
            } else if self.at("<") {
                BinOp::Lt
            } else if self.at(">") {
                BinOp::Gt
            } else {
                break;
            };
            let span = self.here();
            self.bump();
            let rhs = self.add_expr()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = if self.at("+") {
                BinOp::Add
            } else if self.at("-") {
                BinOp::Sub
            } else {
                break;
            };
            let span = self.here();
            self.bump();
            let rhs = self.mul_expr()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = if self.at("*") {
                BinOp::Mul
            } else if self.at("/") {
                BinOp::Div
            } else if self.at("%") {
                BinOp::Rem
            } else {
                break;
            };
            let span = self.here();
            self.bump();
            let rhs = self.unary_expr()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), span };
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<Expr, FrontendError> {
        let span = self.here();
        if self.eat("-") {
            let expr = self.unary_expr()?;
            return Ok(Expr::Unary { op: UnOp::Neg, expr: Box::new(expr), span });
        }
        if self.eat("!") {
            let expr = self.unary_expr()?;
            return Ok(Expr::Unary { op: UnOp::Not, expr: Box::new(expr), span });
        }
        self.postfix_expr()
    }

    fn postfix_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut expr = self.primary_expr()?;
        while self.at("[") {
            let span = self.here();
            self.bump();
            let index = self.expr()?;
            self.expect("]")?;
            expr = Expr::Index { base: Box::new(expr), index: Box::new(index), span };
        }
        Ok(expr)
    }

    fn primary_expr(&mut self) -> Result<Expr, FrontendError> {
        let span = self.here();
        let Some(tok) = self.peek() else {
            return Err(self.error("an expression"));
        };
        match tok.kind {
            TokenKind::IntLiteral => {
                let value: i64 = tok
                    .lexeme
                    .parse()
                    .map_err(|_| self.error("an int literal in range"))?;
                self.pos += 1;
                Ok(Expr::Int { value, span })
            }
            TokenKind::BoolLiteral => {
                let value = tok.lexeme == "true";
                self.pos += 1;
                Ok(Expr::Bool { value, span })
            }
            TokenKind::StringLiteral => {
                let value = tok.lexeme[1..tok.lexeme.len() - 1].to_string();
                self.pos += 1;
                Ok(Expr::Str { value, span })
            }
            TokenKind::Identifier => {
                let name = tok.lexeme.clone();
                self.pos += 1;
                if self.eat("(") {
                    let mut args = Vec::new();
                    if !self.at(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(",") {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    Ok(Expr::Call { name, args, span })
                } else {
                    Ok(Expr::Var { name, span })
                }
            }
            _ => {
                if self.eat("print") {
                    self.expect("(")?;
                    let arg = self.expr()?;
                    self.expect(")")?;
                    Ok(Expr::Print { arg: Box::new(arg), span })
                } else if self.eat("read") {
                    self.expect("(")?;
                    self.expect(")")?;
                    Ok(Expr::Read { span })
                } else if self.eat("new") {
                    self.expect("int")?;
                    self.expect("[")?;
                    let len = self.expr()?;
                    self.expect("]")?;
                    Ok(Expr::NewArray { len: Box::new(len), span })
                } else if self.eat("(") {
                    let expr = self.expr()?;
                    self.expect(")")?;
                    Ok(expr)
                } else {
                    Err(self.error("an expression"))
                }
            }
        }
    }
}
