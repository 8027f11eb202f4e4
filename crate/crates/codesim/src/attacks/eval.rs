use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

use crate::frontend::ast::*;

const STEP_BUDGET: u64 = 2_000_000;
const MAX_CALL_DEPTH: usize = 256;
const MAX_ARRAY_LEN: i64 = 1 << 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("runtime fault at line {line}: {message}")]
    RuntimeFault { line: u32, message: String },
    #[error("step budget exceeded")]
    StepBudgetExceeded,
}

fn fault(span: Span, message: impl Into<String>) -> EvalError {
    EvalError::RuntimeFault { line: span.line, message: message.into() }
}

#[derive(Clone, Debug)]
enum Value {
    Int(i64),
    Bool(bool),
    Str(Rc<str>),
    Array(Rc<RefCell<Vec<i64>>>),
    Void,
}

impl Value {
    fn default_for(ty: Type) -> Value {
        match ty {
            Type::Int => Value::Int(0),
            Type::Bool => Value::Bool(false),
            Type::Str => Value::Str(Rc::from("")),
            Type::IntArray => Value::Array(Rc::new(RefCell::new(Vec::new()))),
        }
    }

    fn as_int(&self, span: Span) -> Result<i64, EvalError> {
        match self {
            Value::Int(v) => Ok(*v),
            _ => Err(fault(span, "expected an int value")),
        }
    }

    fn as_bool(&self, span: Span) -> Result<bool, EvalError> {
        match self {
            Value::Bool(v) => Ok(*v),
            _ => Err(fault(span, "expected a bool value")),
        }
    }

    fn as_array(&self, span: Span) -> Result<Rc<RefCell<Vec<i64>>>, EvalError> {
        match self {
            Value::Array(a) => Ok(a.clone()),
            _ => Err(fault(span, "expected an array value")),
        }
    }
}

enum Flow {
    Normal,
    Return(Value),
}

/// Runs a program against a pinned input script and collects everything it
/// prints, one trace entry per `print`. Globals are initialized in
/// declaration order, then `main` runs. Arithmetic is checked; any overflow,
/// division by zero, bad index, or exhausted input is a fault.
pub fn evaluate(program: &Program, input: &[i64]) -> Result<Vec<String>, EvalError> {
    let mut funcs = HashMap::new();
    for f in &program.functions {
        funcs.insert(f.name.as_str(), f);
    }
    let mut interp = Interp {
        funcs,
        globals: HashMap::new(),
        input,
        next_read: 0,
        trace: Vec::new(),
        steps: STEP_BUDGET,
        depth: 0,
    };
    for g in &program.globals {
        interp.globals.insert(g.name.clone(), Value::default_for(g.ty));
    }
    for g in &program.globals {
        if let Some(init) = &g.init {
            let mut scopes = Vec::new();
            let v = interp.expr(init, &mut scopes)?;
            interp.globals.insert(g.name.clone(), v);
        }
    }
    let main = interp.funcs.get("main").copied().expect("resolved program has main");
    interp.call(main, Vec::new())?;
    Ok(interp.trace)
}

type Scope = HashMap<String, Value>;

struct Interp<'p> {
    funcs: HashMap<&'p str, &'p FuncDecl>,
    globals: HashMap<String, Value>,
    input: &'p [i64],
    next_read: usize,
    trace: Vec<String>,
    steps: u64,
    depth: usize,
}

impl<'p> Interp<'p> {
    fn tick(&mut self) -> Result<(), EvalError> {
        if self.steps == 0 {
            return Err(EvalError::StepBudgetExceeded);
        }
        self.steps -= 1;
        Ok(())
    }

    fn call(&mut self, f: &'p FuncDecl, args: Vec<Value>) -> Result<Value, EvalError> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(fault(f.span, "call depth limit reached"));
        }
        self.depth += 1;
        let mut frame: Scope = HashMap::new();
        for (p, v) in f.params.iter().zip(args) {
            frame.insert(p.name.clone(), v);
        }
        let mut scopes = vec![frame];
        let flow = self.block(&f.body, &mut scopes)?;
        self.depth -= 1;
        Ok(match flow {
            Flow::Return(v) => v,
            Flow::Normal => Value::Void,
        })
    }

    fn block(&mut self, b: &Block, scopes: &mut Vec<Scope>) -> Result<Flow, EvalError> {
        scopes.push(Scope::new());
        let flow = self.stmts(&b.stmts, scopes);
        scopes.pop();
        flow
    }

    fn stmts(&mut self, stmts: &[Stmt], scopes: &mut Vec<Scope>) -> Result<Flow, EvalError> {
        for s in stmts {
            if let Flow::Return(v) = self.stmt(s, scopes)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, stmt: &Stmt, scopes: &mut Vec<Scope>) -> Result<Flow, EvalError> {
        self.tick()?;
        match stmt {
            Stmt::VarDecl { ty, name, init, .. } => {
                let v = match init {
                    Some(e) => self.expr(e, scopes)?,
                    None => Value::default_for(*ty),
                };
                scopes.last_mut().expect("frame").insert(name.clone(), v);
                Ok(Flow::Normal)
            }
            Stmt::Assign { target, op, value, span } => {
                self.assign(target, *op, value, *span, scopes)?;
                Ok(Flow::Normal)
            }
            Stmt::If { cond, then_block, els, .. } => {
                if self.expr(cond, scopes)?.as_bool(cond.span())? {
                    self.block(then_block, scopes)
                } else if let Some(e) = els {
                    self.stmt(e, scopes)
                } else {
                    Ok(Flow::Normal)
                }
            }
            Stmt::While { cond, body, .. } => {
                while self.expr(cond, scopes)?.as_bool(cond.span())? {
                    self.tick()?;
                    if let Flow::Return(v) = self.block(body, scopes)? {
                        return Ok(Flow::Return(v));
                    }
                }
                Ok(Flow::Normal)
            }
            Stmt::DoWhile { body, cond, .. } => {
                loop {
                    self.tick()?;
                    if let Flow::Return(v) = self.block(body, scopes)? {
                        return Ok(Flow::Return(v));
                    }
                    if !self.expr(cond, scopes)?.as_bool(cond.span())? {
                        return Ok(Flow::Normal);
                    }
                }
            }
            Stmt::For { init, cond, update, body, .. } => {
                scopes.push(Scope::new());
                let result = (|| {
                    if let Some(init) = init {
                        self.stmt(init, scopes)?;
                    }
                    loop {
                        let go = match cond {
                            Some(c) => self.expr(c, scopes)?.as_bool(c.span())?,
                            None => true,
                        };
                        if !go {
                            return Ok(Flow::Normal);
                        }
                        self.tick()?;
                        if let Flow::Return(v) = self.block(body, scopes)? {
                            return Ok(Flow::Return(v));
                        }
                        if let Some(u) = update {
                            self.stmt(u, scopes)?;
                        }
                    }
                })();
                scopes.pop();
                result
            }
            Stmt::Switch { scrutinee, arms, default, .. } => {
                let v = self.expr(scrutinee, scopes)?.as_int(scrutinee.span())?;
                let body = arms
                    .iter()
                    .find(|arm| arm.value == v)
                    .map(|arm| &arm.body)
                    .or(default.as_ref());
                match body {
                    Some(stmts) => {
                        scopes.push(Scope::new());
                        let flow = self.stmts(stmts, scopes);
                        scopes.pop();
                        flow
                    }
                    None => Ok(Flow::Normal),
                }
            }
            Stmt::Return { value, .. } => {
                let v = match value {
                    Some(e) => self.expr(e, scopes)?,
                    None => Value::Void,
                };
                Ok(Flow::Return(v))
            }
            Stmt::Expr { expr, .. } => {
                self.expr(expr, scopes)?;
                Ok(Flow::Normal)
            }
            Stmt::Block { block, .. } => self.block(block, scopes),
        }
    }

    fn assign(
        &mut self,
        target: &LValue,
        op: AssignOp,
        value: &Expr,
        span: Span,
        scopes: &mut Vec<Scope>,
    ) -> Result<(), EvalError> {
        match target {
            LValue::Var { name, span: tspan } => {
                let new = match op.binary() {
                    None => self.expr(value, scopes)?,
                    Some(bin) => {
                        let cur = self.lookup(name, *tspan, scopes)?.as_int(*tspan)?;
                        let rhs = self.expr(value, scopes)?.as_int(value.span())?;
                        Value::Int(arith(bin, cur, rhs, span)?)
                    }
                };
                self.store(name, new, *tspan, scopes)
            }
            // Mirrors the compiled order: the store index is evaluated
            // first, then (for compound forms) the load index again, then
            // the right-hand side.
            LValue::Index { name, index, span: tspan } => {
                let arr = self.lookup(name, *tspan, scopes)?.as_array(*tspan)?;
                let store_at = self.index_of(&arr, index, scopes)?;
                let new = match op.binary() {
                    None => self.expr(value, scopes)?.as_int(value.span())?,
                    Some(bin) => {
                        let load_at = self.index_of(&arr, index, scopes)?;
                        let cur = arr.borrow()[load_at];
                        let rhs = self.expr(value, scopes)?.as_int(value.span())?;
                        arith(bin, cur, rhs, span)?
                    }
                };
                arr.borrow_mut()[store_at] = new;
                Ok(())
            }
        }
    }

    fn index_of(
        &mut self,
        arr: &Rc<RefCell<Vec<i64>>>,
        index: &Expr,
        scopes: &mut Vec<Scope>,
    ) -> Result<usize, EvalError> {
        let idx = self.expr(index, scopes)?.as_int(index.span())?;
        let len = arr.borrow().len();
        if idx < 0 || idx as usize >= len {
            return Err(fault(index.span(), format!("index {idx} out of bounds for length {len}")));
        }
        Ok(idx as usize)
    }

    fn lookup(&self, name: &str, span: Span, scopes: &[Scope]) -> Result<Value, EvalError> {
        for scope in scopes.iter().rev() {
            if let Some(v) = scope.get(name) {
                return Ok(v.clone());
            }
        }
        self.globals
            .get(name)
            .cloned()
            .ok_or_else(|| fault(span, format!("unknown variable {name}")))
    }

    fn store(
        &mut self,
        name: &str,
        value: Value,
        span: Span,
        scopes: &mut Vec<Scope>,
    ) -> Result<(), EvalError> {
        for scope in scopes.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                *slot = value;
                return Ok(());
            }
        }
        match self.globals.get_mut(name) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(fault(span, format!("unknown variable {name}"))),
        }
    }

    fn expr(&mut self, expr: &Expr, scopes: &mut Vec<Scope>) -> Result<Value, EvalError> {
        self.tick()?;
        match expr {
            Expr::Int { value, .. } => Ok(Value::Int(*value)),
            Expr::Bool { value, .. } => Ok(Value::Bool(*value)),
            Expr::Str { value, .. } => Ok(Value::Str(Rc::from(value.as_str()))),
            Expr::Var { name, span } => self.lookup(name, *span, scopes),
            Expr::Call { name, args, span } => {
                let f = *self
                    .funcs
                    .get(name.as_str())
                    .ok_or_else(|| fault(*span, format!("unknown function {name}")))?;
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.expr(a, scopes)?);
                }
                self.call(f, values)
            }
            Expr::Print { arg, span } => {
                let v = self.expr(arg, scopes)?;
                let line = match v {
                    Value::Int(i) => i.to_string(),
                    Value::Bool(b) => b.to_string(),
                    Value::Str(s) => s.to_string(),
                    _ => return Err(fault(*span, "print expects a scalar")),
                };
                self.trace.push(line);
                Ok(Value::Void)
            }
            Expr::Read { span } => {
                let v = self
                    .input
                    .get(self.next_read)
                    .copied()
                    .ok_or_else(|| fault(*span, "input script exhausted"))?;
                self.next_read += 1;
                Ok(Value::Int(v))
            }
            Expr::Index { base, index, .. } => {
                let arr = self.expr(base, scopes)?.as_array(base.span())?;
                let at = self.index_of(&arr, index, scopes)?;
                let v = arr.borrow()[at];
                Ok(Value::Int(v))
            }
            Expr::NewArray { len, span } => {
                let n = self.expr(len, scopes)?.as_int(len.span())?;
                if n < 0 || n > MAX_ARRAY_LEN {
                    return Err(fault(*span, format!("invalid array length {n}")));
                }
                Ok(Value::Array(Rc::new(RefCell::new(vec![0; n as usize]))))
            }
            Expr::Unary { op, expr, span } => {
                let v = self.expr(expr, scopes)?;
                match op {
                    UnOp::Neg => {
                        let i = v.as_int(expr.span())?;
                        Ok(Value::Int(
                            i.checked_neg().ok_or_else(|| fault(*span, "overflow in negation"))?,
                        ))
                    }
                    UnOp::Not => Ok(Value::Bool(!v.as_bool(expr.span())?)),
                }
            }
            Expr::Binary { op, lhs, rhs, span } => self.binary(*op, lhs, rhs, *span, scopes),
        }
    }

    fn binary(
        &mut self,
        op: BinOp,
        lhs: &Expr,
        rhs: &Expr,
        span: Span,
        scopes: &mut Vec<Scope>,
    ) -> Result<Value, EvalError> {
        if matches!(op, BinOp::And | BinOp::Or) {
            let l = self.expr(lhs, scopes)?.as_bool(lhs.span())?;
            return match (op, l) {
                (BinOp::And, false) => Ok(Value::Bool(false)),
                (BinOp::Or, true) => Ok(Value::Bool(true)),
                _ => Ok(Value::Bool(self.expr(rhs, scopes)?.as_bool(rhs.span())?)),
            };
        }
        let l = self.expr(lhs, scopes)?;
        let r = self.expr(rhs, scopes)?;
        if matches!(op, BinOp::Eq | BinOp::Ne) {
            let eq = match (&l, &r) {
                (Value::Int(a), Value::Int(b)) => a == b,
                (Value::Bool(a), Value::Bool(b)) => a == b,
                (Value::Str(a), Value::Str(b)) => a == b,
                _ => return Err(fault(span, "mismatched equality operands")),
            };
            return Ok(Value::Bool(if op == BinOp::Eq { eq } else { !eq }));
        }
        let a = l.as_int(lhs.span())?;
        let b = r.as_int(rhs.span())?;
        Ok(match op {
            BinOp::Lt => Value::Bool(a < b),
            BinOp::Le => Value::Bool(a <= b),
            BinOp::Gt => Value::Bool(a > b),
            BinOp::Ge => Value::Bool(a >= b),
            _ => Value::Int(arith(op, a, b, span)?),
        })
    }
}

fn arith(op: BinOp, a: i64, b: i64, span: Span) -> Result<i64, EvalError> {
    let out = match op {
        BinOp::Add => a.checked_add(b),
        BinOp::Sub => a.checked_sub(b),
        BinOp::Mul => a.checked_mul(b),
        BinOp::Div => {
            if b == 0 {
                return Err(fault(span, "division by zero"));
            }
            a.checked_div(b)
        }
        BinOp::Rem => {
            if b == 0 {
                return Err(fault(span, "remainder by zero"));
            }
            a.checked_rem(b)
        }
        _ => unreachable!("arith called with non-arithmetic operator"),
    };
    out.ok_or_else(|| fault(span, "integer overflow"))
}

/// Parses an input script: whitespace-separated integers, `#` comments to
/// end of line.
pub fn parse_input_script(text: &str) -> Result<Vec<i64>, String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for word in line.split_whitespace() {
            let v: i64 = word.parse().map_err(|_| format!("bad input value {word:?}"))?;
            out.push(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_str;

    fn run(text: &str, input: &[i64]) -> Result<Vec<String>, EvalError> {
        let unit = load_str(text, "eval-test.mj").expect("test program loads");
        evaluate(&unit.ast, input)
    }

    fn trace(text: &str, input: &[i64]) -> Vec<String> {
        run(text, input).expect("test program runs clean")
    }

    #[test]
    fn prints_every_scalar_kind() {
        let got = trace(
            r#"fn main() { print(41 + 1); print(3 < 2); print("ok"); }"#,
            &[],
        );
        assert_eq!(got, ["42", "false", "ok"]);
    }

    #[test]
    fn reads_consume_the_script_in_order() {
        let got = trace("fn main() { print(read()); print(read() - read()); }", &[7, 10, 4]);
        assert_eq!(got, ["7", "6"]);
        let err = run("fn main() { print(read()); }", &[]).unwrap_err();
        assert!(matches!(err, EvalError::RuntimeFault { .. }));
    }

    #[test]
    fn faults_carry_the_line() {
        let err = run("fn main() {\n    int x = 0;\n    print(1 / x);\n}", &[]).unwrap_err();
        assert_eq!(
            err,
            EvalError::RuntimeFault { line: 3, message: "division by zero".to_string() }
        );
    }

    #[test]
    fn runaway_loops_hit_the_step_budget() {
        let err = run("fn main() { while (true) { int x = 1; } }", &[]).unwrap_err();
        assert_eq!(err, EvalError::StepBudgetExceeded);
    }

    #[test]
    fn arrays_start_zeroed_and_check_bounds() {
        let got = trace(
            "fn main() { int[] a = new int[3]; a[1] = 5; print(a[0] + a[1]); }",
            &[],
        );
        assert_eq!(got, ["5"]);
        let err = run("fn main() { int[] a = new int[3]; print(a[3]); }", &[]).unwrap_err();
        assert!(matches!(err, EvalError::RuntimeFault { .. }));
    }

    #[test]
    fn arrays_share_their_contents_across_calls() {
        let got = trace(
            "fn fill(int[] a) { a[0] = 9; }\nfn main() { int[] a = new int[1]; fill(a); print(a[0]); }",
            &[],
        );
        assert_eq!(got, ["9"]);
    }

    #[test]
    fn logical_operators_short_circuit() {
        let got = trace(
            "fn main() { int x = 0; if (false && 1 / x == 0) { print(1); } if (true || 1 / x == 0) { print(2); } }",
            &[],
        );
        assert_eq!(got, ["2"]);
    }

    #[test]
    fn globals_initialize_in_declaration_order() {
        let got = trace(
            "int a = read();\nint b = read() + 1;\nfn main() { print(a); print(b); }",
            &[10, 20],
        );
        assert_eq!(got, ["10", "21"]);
    }

    #[test]
    fn valued_calls_recurse_and_return() {
        let got = trace(
            "fn fact(int n): int { if (n <= 1) { return 1; } return n * fact(n - 1); }\nfn main() { print(fact(5)); }",
            &[],
        );
        assert_eq!(got, ["120"]);
    }

    #[test]
    fn compound_index_assignment_evaluates_the_index_twice() {
        // Matches the compiled form: store index first, load index second,
        // right-hand side last.
        let got = trace(
            "int k = 0;\nfn bump(): int { k = k + 1; return k; }\nfn main() { int[] a = new int[4]; a[3] = 50; a[bump()] += a[3]; print(k); print(a[1]); print(a[2]); }",
            &[],
        );
        assert_eq!(got, ["2", "50", "0"]);
    }

    #[test]
    fn input_scripts_allow_comments_and_negatives() {
        assert_eq!(
            parse_input_script("1 -2 # trailing\n# full line\n  3\n").unwrap(),
            vec![1, -2, 3]
        );
        assert!(parse_input_script("1 two 3").is_err());
    }
}
