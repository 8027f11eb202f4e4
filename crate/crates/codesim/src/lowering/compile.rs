use std::collections::HashMap;
use std::fmt;

use super::ir::{
    CmpOp, ConstValue, FuncId, GlobalId, LabelId, LowFunction, LowProgram, LowToken, Op, ScopeTag,
    Slot, INIT_NAME,
};
use crate::frontend::ast::{
    AssignOp, BinOp, Expr, FuncDecl, LValue, Program, Span, Stmt, Type, UnOp,
};

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error("type error at {line}:{col}: {message}")]
    Type { line: u32, col: u32, message: String },
    #[error("unreachable code at {line}:{col}")]
    UnreachableCode { line: u32, col: u32 },
    #[error("function `{function}` must end with a return statement")]
    MissingReturn { function: String },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Ty {
    Int,
    Bool,
    Str,
    IntArray,
    Void,
}

impl Ty {
    fn of(t: Type) -> Ty {
        match t {
            Type::Int => Ty::Int,
            Type::Bool => Ty::Bool,
            Type::Str => Ty::Str,
            Type::IntArray => Ty::IntArray,
        }
    }

    fn is_scalar(self) -> bool {
        matches!(self, Ty::Int | Ty::Bool | Ty::Str)
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ty::Int => "int",
            Ty::Bool => "bool",
            Ty::Str => "str",
            Ty::IntArray => "int[]",
            Ty::Void => "void",
        })
    }
}

struct FnSig {
    id: FuncId,
    params: Vec<Ty>,
    ret: Option<Ty>,
}

struct Info {
    globals: HashMap<String, (GlobalId, Ty)>,
    funcs: HashMap<String, FnSig>,
}

fn err_type(span: Span, message: impl Into<String>) -> CompileError {
    CompileError::Type { line: span.line, col: span.col, message: message.into() }
}

/// Compiles a resolved program to stack code. Each function gets slots for
/// its parameters first, then one slot per local in order of declaration, so
/// renaming identifiers never changes the emitted tokens. `for` loops are
/// rewritten to `while` loops on the way in, and global initializers become
/// the synthetic `<init>` function.
pub fn compile(program: &Program) -> Result<LowProgram, CompileError> {
    let mut info = Info { globals: HashMap::new(), funcs: HashMap::new() };
    for (i, g) in program.globals.iter().enumerate() {
        info.globals.insert(g.name.clone(), (i as GlobalId, Ty::of(g.ty)));
    }
    for (i, f) in program.functions.iter().enumerate() {
        let sig = FnSig {
            id: i as FuncId,
            params: f.params.iter().map(|p| Ty::of(p.ty)).collect(),
            ret: f.ret.map(Ty::of),
        };
        info.funcs.insert(f.name.clone(), sig);
    }

    let mut functions = Vec::with_capacity(program.functions.len() + 1);
    for (i, f) in program.functions.iter().enumerate() {
        functions.push(compile_function(&info, f, i as FuncId)?);
    }

    if program.globals.iter().any(|g| g.init.is_some()) {
        let id = functions.len() as FuncId;
        let mut c = FnCompiler::new(&info, None);
        for (gid, g) in program.globals.iter().enumerate() {
            if let Some(init) = &g.init {
                let got = c.value(init)?;
                c.expect(Ty::of(g.ty), got, init.span())?;
                c.emit(Op::GStore(gid as GlobalId), g.span.line);
            }
        }
        let last_line = program.globals.iter().map(|g| g.span.line).max().unwrap_or(1);
        c.emit(Op::Return, last_line);
        functions.push(LowFunction {
            id,
            name: INIT_NAME.to_string(),
            param_count: 0,
            returns_value: false,
            body: c.body,
        });
    }

    let entry = match info.funcs.get("main") {
        Some(sig) => sig.id,
        None => {
            return Err(err_type(Span { line: 1, col: 1 }, "program has no main function"));
        }
    };

    Ok(LowProgram {
        functions,
        entry,
        global_names: program.globals.iter().map(|g| g.name.clone()).collect(),
    })
}

fn compile_function(info: &Info, f: &FuncDecl, id: FuncId) -> Result<LowFunction, CompileError> {
    let mut c = FnCompiler::new(info, f.ret.map(Ty::of));
    let mut params = HashMap::new();
    for p in &f.params {
        params.insert(p.name.clone(), (c.next_slot, Ty::of(p.ty)));
        c.next_slot += 1;
    }
    c.scopes.push(params);

    let terminated = c.stmts(&f.body.stmts)?;
    if c.ret.is_some() {
        if !terminated {
            return Err(CompileError::MissingReturn { function: f.name.clone() });
        }
    } else if !terminated {
        c.emit(Op::Return, f.span.line);
    }

    Ok(LowFunction {
        id,
        name: f.name.clone(),
        param_count: f.params.len() as u32,
        returns_value: f.ret.is_some(),
        body: c.body,
    })
}

struct FnCompiler<'a> {
    info: &'a Info,
    body: Vec<LowToken>,
    scopes: Vec<HashMap<String, (Slot, Ty)>>,
    next_slot: Slot,
    next_label: LabelId,
    path: Vec<ScopeTag>,
    ret: Option<Ty>,
}

impl<'a> FnCompiler<'a> {
    fn new(info: &'a Info, ret: Option<Ty>) -> Self {
        FnCompiler {
            info,
            body: Vec::new(),
            scopes: Vec::new(),
            next_slot: 0,
            next_label: 0,
            path: vec![ScopeTag::Fn],
            ret,
        }
    }

    fn emit(&mut self, op: Op, line: u32) {
        self.body.push(LowToken { op, path: self.path.clone(), line });
    }

    fn fresh_label(&mut self) -> LabelId {
        let l = self.next_label;
        self.next_label += 1;
        l
    }

    fn declare(&mut self, name: &str, ty: Ty) -> Slot {
        let slot = self.next_slot;
        self.next_slot += 1;
        self.scopes.last_mut().expect("scope").insert(name.to_string(), (slot, ty));
        slot
    }

    fn lookup_local(&self, name: &str) -> Option<(Slot, Ty)> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn expect(&self, want: Ty, got: Ty, span: Span) -> Result<(), CompileError> {
        if want == got {
            Ok(())
        } else {
            Err(err_type(span, format!("expected {want}, found {got}")))
        }
    }

    /// Compiles a statement list, flagging anything after a `return`.
    /// Returns true when the list ends in a return (possibly inside a
    /// trailing plain block).
    fn stmts(&mut self, stmts: &[Stmt]) -> Result<bool, CompileError> {
        let mut terminated = false;
        for s in stmts {
            if terminated {
                let span = s.span();
                return Err(CompileError::UnreachableCode { line: span.line, col: span.col });
            }
            terminated = self.stmt(s)?;
        }
        Ok(terminated)
    }

    fn scoped<T>(
        &mut self,
        tag: Option<ScopeTag>,
        f: impl FnOnce(&mut Self) -> Result<T, CompileError>,
    ) -> Result<T, CompileError> {
        if let Some(tag) = tag {
            self.path.push(tag);
        }
        self.scopes.push(HashMap::new());
        let out = f(self);
        self.scopes.pop();
        if tag.is_some() {
            self.path.pop();
        }
        out
    }

    fn stmt(&mut self, s: &Stmt) -> Result<bool, CompileError> {
        match s {
            Stmt::VarDecl { ty, name, init, span } => {
                let want = Ty::of(*ty);
                if let Some(init) = init {
                    let got = self.value(init)?;
                    self.expect(want, got, init.span())?;
                    let slot = self.declare(name, want);
                    self.emit(Op::Store(slot), span.line);
                } else {
                    self.declare(name, want);
                }
                Ok(false)
            }
            Stmt::Assign { target, op, value, span } => {
                self.assign(target, *op, value, *span)?;
                Ok(false)
            }
            Stmt::If { cond, then_block, els, span } => {
                if let Some(els) = els {
                    let else_label = self.fresh_label();
                    let end = self.fresh_label();
                    self.cond_false(cond, else_label)?;
                    self.scoped(Some(ScopeTag::Then), |c| c.stmts(&then_block.stmts))?;
                    self.emit(Op::Goto { target: Some(end) }, span.line);
                    self.emit(Op::Label(else_label), span.line);
                    self.scoped(Some(ScopeTag::Else), |c| match &**els {
                        Stmt::Block { block, .. } => c.stmts(&block.stmts),
                        other => c.stmt(other),
                    })?;
                    self.emit(Op::Label(end), span.line);
                } else {
                    let end = self.fresh_label();
                    self.cond_false(cond, end)?;
                    self.scoped(Some(ScopeTag::Then), |c| c.stmts(&then_block.stmts))?;
                    self.emit(Op::Label(end), span.line);
                }
                Ok(false)
            }
            Stmt::While { cond, body, span } => {
                let start = self.fresh_label();
                let end = self.fresh_label();
                self.emit(Op::Label(start), span.line);
                self.cond_false(cond, end)?;
                self.scoped(Some(ScopeTag::WhileBody), |c| c.stmts(&body.stmts))?;
                self.emit(Op::Goto { target: Some(start) }, span.line);
                self.emit(Op::Label(end), span.line);
                Ok(false)
            }
            Stmt::DoWhile { body, cond, span } => {
                let start = self.fresh_label();
                let end = self.fresh_label();
                self.emit(Op::Label(start), span.line);
                self.scoped(Some(ScopeTag::DoWhileBody), |c| c.stmts(&body.stmts))?;
                self.cond_false(cond, end)?;
                self.emit(Op::Goto { target: Some(start) }, span.line);
                self.emit(Op::Label(end), span.line);
                Ok(false)
            }
            Stmt::For { init, cond, update, body, span } => {
                // for (i; c; u) { b }  compiles exactly as  { i; while (c) { b; u } }
                let cond = cond
                    .clone()
                    .unwrap_or(Expr::Bool { value: true, span: *span });
                let mut inner = body.clone();
                if let Some(update) = update {
                    inner.stmts.push((**update).clone());
                }
                self.scoped(None, |c| {
                    if let Some(init) = init {
                        c.stmt(init)?;
                    }
                    c.stmt(&Stmt::While { cond, body: inner, span: *span })
                })?;
                Ok(false)
            }
            Stmt::Switch { scrutinee, arms, default, span } => {
                let got = self.value(scrutinee)?;
                self.expect(Ty::Int, got, scrutinee.span())?;
                let mut seen = Vec::new();
                for arm in arms {
                    if seen.contains(&arm.value) {
                        return Err(err_type(arm.span, format!("duplicate case value {}", arm.value)));
                    }
                    seen.push(arm.value);
                }
                let case_labels: Vec<LabelId> = arms.iter().map(|_| self.fresh_label()).collect();
                let default_label = default.as_ref().map(|_| self.fresh_label());
                let end = self.fresh_label();
                let cases = arms
                    .iter()
                    .zip(&case_labels)
                    .map(|(arm, l)| (arm.value, *l))
                    .collect();
                self.emit(
                    Op::Switch(super::ir::SwitchArms { cases, default: default_label, end }),
                    span.line,
                );
                for (arm, label) in arms.iter().zip(&case_labels) {
                    self.emit(Op::Label(*label), arm.span.line);
                    self.scoped(Some(ScopeTag::CaseArm), |c| c.stmts(&arm.body))?;
                    self.emit(Op::Goto { target: Some(end) }, arm.span.line);
                }
                if let Some(default) = default {
                    self.emit(Op::Label(default_label.expect("label")), span.line);
                    self.scoped(Some(ScopeTag::DefaultArm), |c| c.stmts(default))?;
                }
                self.emit(Op::Label(end), span.line);
                Ok(false)
            }
            Stmt::Return { value, span } => {
                match (self.ret, value) {
                    (Some(want), Some(e)) => {
                        let got = self.value(e)?;
                        self.expect(want, got, e.span())?;
                        self.emit(Op::RetVal, span.line);
                    }
                    (None, None) => self.emit(Op::Return, span.line),
                    (Some(_), None) => {
                        return Err(err_type(*span, "return without a value in a valued function"));
                    }
                    (None, Some(e)) => {
                        return Err(err_type(e.span(), "void function returns a value"));
                    }
                }
                Ok(true)
            }
            Stmt::Expr { expr, .. } => {
                let got = self.value(expr)?;
                if got != Ty::Void {
                    return Err(err_type(
                        expr.span(),
                        "expression statement must not leave a value",
                    ));
                }
                Ok(false)
            }
            Stmt::Block { block, .. } => self.scoped(None, |c| c.stmts(&block.stmts)),
        }
    }

    fn assign(
        &mut self,
        target: &LValue,
        op: AssignOp,
        value: &Expr,
        span: Span,
    ) -> Result<(), CompileError> {
        match target {
            LValue::Var { name, span: tspan } => {
                let (store, load, ty) = match self.lookup_local(name) {
                    Some((slot, ty)) => (Op::Store(slot), Op::Load(slot), ty),
                    None => match self.info.globals.get(name) {
                        Some(&(gid, ty)) => (Op::GStore(gid), Op::GLoad(gid), ty),
                        None => return Err(err_type(*tspan, format!("unknown variable `{name}`"))),
                    },
                };
                match op.binary() {
                    None => {
                        let got = self.value(value)?;
                        self.expect(ty, got, value.span())?;
                    }
                    Some(bin) => {
                        self.expect(Ty::Int, ty, *tspan)?;
                        self.emit(load, tspan.line);
                        let got = self.value(value)?;
                        self.expect(Ty::Int, got, value.span())?;
                        self.emit(self.arith_op(bin), span.line);
                    }
                }
                self.emit(store, span.line);
            }
            LValue::Index { name, index, span: tspan } => {
                let load_arr = match self.lookup_local(name) {
                    Some((slot, Ty::IntArray)) => Op::Load(slot),
                    None => match self.info.globals.get(name) {
                        Some(&(gid, Ty::IntArray)) => Op::GLoad(gid),
                        Some(_) => return Err(err_type(*tspan, format!("`{name}` is not an array"))),
                        None => return Err(err_type(*tspan, format!("unknown variable `{name}`"))),
                    },
                    Some(_) => return Err(err_type(*tspan, format!("`{name}` is not an array"))),
                };
                self.emit(load_arr.clone(), tspan.line);
                let it = self.value(index)?;
                self.expect(Ty::Int, it, index.span())?;
                match op.binary() {
                    None => {
                        let got = self.value(value)?;
                        self.expect(Ty::Int, got, value.span())?;
                    }
                    Some(bin) => {
                        // a[i] op= e  compiles as  a[i] = a[i] op e, index
                        // expression and all.
                        self.emit(load_arr, tspan.line);
                        let it = self.value(index)?;
                        self.expect(Ty::Int, it, index.span())?;
                        self.emit(Op::ALoadIdx, tspan.line);
                        let got = self.value(value)?;
                        self.expect(Ty::Int, got, value.span())?;
                        self.emit(self.arith_op(bin), span.line);
                    }
                }
                self.emit(Op::AStoreIdx, span.line);
            }
        }
        Ok(())
    }

    fn arith_op(&self, op: BinOp) -> Op {
        match op {
            BinOp::Add => Op::Add,
            BinOp::Sub => Op::Sub,
            BinOp::Mul => Op::Mul,
            BinOp::Div => Op::Div,
            BinOp::Rem => Op::Rem,
            _ => unreachable!("not an arithmetic operator"),
        }
    }

    fn cmp_of(&self, op: BinOp) -> Option<CmpOp> {
        match op {
            BinOp::Lt => Some(CmpOp::Lt),
            BinOp::Le => Some(CmpOp::Le),
            BinOp::Gt => Some(CmpOp::Gt),
            BinOp::Ge => Some(CmpOp::Ge),
            BinOp::Eq => Some(CmpOp::Eq),
            BinOp::Ne => Some(CmpOp::Ne),
            _ => None,
        }
    }

    fn check_cmp_operands(
        &mut self,
        op: BinOp,
        lt: Ty,
        rt: Ty,
        lspan: Span,
        rspan: Span,
    ) -> Result<(), CompileError> {
        if matches!(op, BinOp::Eq | BinOp::Ne) {
            if !lt.is_scalar() {
                return Err(err_type(lspan, format!("cannot compare {lt} values")));
            }
            self.expect(lt, rt, rspan)
        } else {
            self.expect(Ty::Int, lt, lspan)?;
            self.expect(Ty::Int, rt, rspan)
        }
    }

    /// Emits the condition so control transfers to `target` when it is
    /// false, falling through otherwise. Comparisons become one negated
    /// IFCMP; `&&`, `||`, and `!` decompose without materializing a bool.
    fn cond_false(&mut self, e: &Expr, target: LabelId) -> Result<(), CompileError> {
        match e {
            Expr::Binary { op, lhs, rhs, span } => {
                if let Some(cmp) = self.cmp_of(*op) {
                    let lt = self.value(lhs)?;
                    let rt = self.value(rhs)?;
                    self.check_cmp_operands(*op, lt, rt, lhs.span(), rhs.span())?;
                    self.emit(Op::IfCmp { op: cmp.negate(), target: Some(target) }, span.line);
                    return Ok(());
                }
                match op {
                    BinOp::And => {
                        self.cond_false(lhs, target)?;
                        self.cond_false(rhs, target)
                    }
                    BinOp::Or => {
                        let past = self.fresh_label();
                        self.cond_true(lhs, past)?;
                        self.cond_false(rhs, target)?;
                        self.emit(Op::Label(past), span.line);
                        Ok(())
                    }
                    _ => {
                        let got = self.value(e)?;
                        self.expect(Ty::Bool, got, e.span())?;
                        self.emit(Op::IfFalse { target: Some(target) }, span.line);
                        Ok(())
                    }
                }
            }
            Expr::Unary { op: UnOp::Not, expr, .. } => self.cond_true(expr, target),
            _ => {
                let got = self.value(e)?;
                self.expect(Ty::Bool, got, e.span())?;
                self.emit(Op::IfFalse { target: Some(target) }, e.span().line);
                Ok(())
            }
        }
    }

    /// Dual of [`cond_false`]: transfer to `target` when the condition holds.
    fn cond_true(&mut self, e: &Expr, target: LabelId) -> Result<(), CompileError> {
        match e {
            Expr::Binary { op, lhs, rhs, span } => {
                if let Some(cmp) = self.cmp_of(*op) {
                    let lt = self.value(lhs)?;
                    let rt = self.value(rhs)?;
                    self.check_cmp_operands(*op, lt, rt, lhs.span(), rhs.span())?;
                    self.emit(Op::IfCmp { op: cmp, target: Some(target) }, span.line);
                    return Ok(());
                }
                match op {
                    BinOp::And => {
                        let skip = self.fresh_label();
                        self.cond_false(lhs, skip)?;
                        self.cond_true(rhs, target)?;
                        self.emit(Op::Label(skip), span.line);
                        Ok(())
                    }
                    BinOp::Or => {
                        self.cond_true(lhs, target)?;
                        self.cond_true(rhs, target)
                    }
                    _ => {
                        let got = self.value(e)?;
                        self.expect(Ty::Bool, got, e.span())?;
                        self.emit(Op::Not, span.line);
                        self.emit(Op::IfFalse { target: Some(target) }, span.line);
                        Ok(())
                    }
                }
            }
            Expr::Unary { op: UnOp::Not, expr, .. } => self.cond_false(expr, target),
            _ => {
                let got = self.value(e)?;
                self.expect(Ty::Bool, got, e.span())?;
                self.emit(Op::Not, e.span().line);
                self.emit(Op::IfFalse { target: Some(target) }, e.span().line);
                Ok(())
            }
        }
    }

    /// Comparisons and logical operators in value position route through the
    /// branch forms and materialize `true`/`false` at a join.
    fn value_bool(&mut self, e: &Expr) -> Result<Ty, CompileError> {
        let line = e.span().line;
        let on_false = self.fresh_label();
        let end = self.fresh_label();
        self.cond_false(e, on_false)?;
        self.emit(Op::Const(ConstValue::Bool(true)), line);
        self.emit(Op::Goto { target: Some(end) }, line);
        self.emit(Op::Label(on_false), line);
        self.emit(Op::Const(ConstValue::Bool(false)), line);
        self.emit(Op::Label(end), line);
        Ok(Ty::Bool)
    }

    fn value(&mut self, e: &Expr) -> Result<Ty, CompileError> {
        match e {
            Expr::Int { value, span } => {
                self.emit(Op::Const(ConstValue::Int(*value)), span.line);
                Ok(Ty::Int)
            }
            Expr::Bool { value, span } => {
                self.emit(Op::Const(ConstValue::Bool(*value)), span.line);
                Ok(Ty::Bool)
            }
            Expr::Str { value, span } => {
                self.emit(Op::Const(ConstValue::Str(value.clone())), span.line);
                Ok(Ty::Str)
            }
            Expr::Var { name, span } => match self.lookup_local(name) {
                Some((slot, ty)) => {
                    self.emit(Op::Load(slot), span.line);
                    Ok(ty)
                }
                None => match self.info.globals.get(name) {
                    Some(&(gid, ty)) => {
                        self.emit(Op::GLoad(gid), span.line);
                        Ok(ty)
                    }
                    None => Err(err_type(*span, format!("unknown variable `{name}`"))),
                },
            },
            Expr::Call { name, args, span } => {
                let (id, params, ret) = match self.info.funcs.get(name.as_str()) {
                    Some(sig) => (sig.id, sig.params.clone(), sig.ret),
                    None => return Err(err_type(*span, format!("unknown function `{name}`"))),
                };
                if args.len() != params.len() {
                    return Err(err_type(
                        *span,
                        format!("`{name}` takes {} arguments, got {}", params.len(), args.len()),
                    ));
                }
                for (arg, want) in args.iter().zip(&params) {
                    let got = self.value(arg)?;
                    self.expect(*want, got, arg.span())?;
                }
                self.emit(
                    Op::Invoke { func: id, argc: params.len() as u32, returns: ret.is_some() },
                    span.line,
                );
                Ok(ret.unwrap_or(Ty::Void))
            }
            Expr::Print { arg, span } => {
                let got = self.value(arg)?;
                if !got.is_scalar() {
                    return Err(err_type(arg.span(), format!("cannot print {got} values")));
                }
                self.emit(Op::Print, span.line);
                Ok(Ty::Void)
            }
            Expr::Read { span } => {
                self.emit(Op::Read, span.line);
                Ok(Ty::Int)
            }
            Expr::Index { base, index, span } => {
                let bt = self.value(base)?;
                self.expect(Ty::IntArray, bt, base.span())?;
                let it = self.value(index)?;
                self.expect(Ty::Int, it, index.span())?;
                self.emit(Op::ALoadIdx, span.line);
                Ok(Ty::Int)
            }
            Expr::NewArray { len, span } => {
                let lt = self.value(len)?;
                self.expect(Ty::Int, lt, len.span())?;
                self.emit(Op::NewArray, span.line);
                Ok(Ty::IntArray)
            }
            Expr::Unary { op, expr, span } => match op {
                UnOp::Neg => {
                    let got = self.value(expr)?;
                    self.expect(Ty::Int, got, expr.span())?;
                    self.emit(Op::Neg, span.line);
                    Ok(Ty::Int)
                }
                UnOp::Not => {
                    let got = self.value(expr)?;
                    self.expect(Ty::Bool, got, expr.span())?;
                    self.emit(Op::Not, span.line);
                    Ok(Ty::Bool)
                }
            },
            Expr::Binary { op, lhs, rhs, span } => {
                if self.cmp_of(*op).is_some() || matches!(op, BinOp::And | BinOp::Or) {
                    return self.value_bool(e);
                }
                let lt = self.value(lhs)?;
                self.expect(Ty::Int, lt, lhs.span())?;
                let rt = self.value(rhs)?;
                self.expect(Ty::Int, rt, rhs.span())?;
                self.emit(self.arith_op(*op), span.line);
                Ok(Ty::Int)
            }
        }
    }
}
