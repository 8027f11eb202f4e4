use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::frontend::ast::*;
use crate::frontend::token::KEYWORDS;

/// Every identifier a program mentions: declarations, parameters, uses,
/// call targets.
pub fn all_names(program: &Program) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for g in &program.globals {
        out.insert(g.name.clone());
        if let Some(e) = &g.init {
            expr_idents(e, &mut out);
        }
    }
    for f in &program.functions {
        out.insert(f.name.clone());
        for p in &f.params {
            out.insert(p.name.clone());
        }
        for s in &f.body.stmts {
            stmt_idents(s, &mut out);
        }
    }
    out
}

/// Hands out identifiers that collide with nothing in the program,
/// keywords included.
pub struct NamePool {
    taken: BTreeSet<String>,
}

impl NamePool {
    pub fn new(program: &Program) -> NamePool {
        let mut taken = all_names(program);
        for kw in KEYWORDS {
            taken.insert((*kw).to_string());
        }
        taken.insert("true".to_string());
        taken.insert("false".to_string());
        NamePool { taken }
    }

    pub fn fresh(&mut self, rng: &mut ChaCha8Rng, bases: &[&str]) -> String {
        let base = bases[rng.gen_range(0..bases.len())];
        let mut n = 1;
        loop {
            let candidate = format!("{base}{n}");
            if self.taken.insert(candidate.clone()) {
                return candidate;
            }
            n += 1;
        }
    }
}

pub const LOCAL_BASES: &[&str] = &["tmp", "val", "num", "aux", "res", "cnt", "acc", "pos"];
pub const FUNC_BASES: &[&str] = &["step", "part", "calc", "work", "proc", "stage"];

/// Renames every local declaration in a function body to a caller-chosen
/// fresh name, scope-aware: a use is rewritten only when it is bound by a
/// renamed declaration, so uses of globals keep their names even when a
/// sibling scope declares a same-named local.
pub fn rename_locals_in(f: &mut FuncDecl, fresh: &mut dyn FnMut(&str) -> String) {
    let mut r = Renamer { scopes: vec![HashMap::new()], fresh };
    for p in &mut f.params {
        let new = (r.fresh)(&p.name);
        r.scopes.last_mut().expect("scope").insert(p.name.clone(), new.clone());
        p.name = new;
    }
    r.stmts_in_place(&mut f.body.stmts);
}

struct Renamer<'a> {
    scopes: Vec<HashMap<String, String>>,
    fresh: &'a mut dyn FnMut(&str) -> String,
}

impl Renamer<'_> {
    fn lookup(&self, name: &str) -> Option<&String> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn bind(&mut self, name: &mut String) {
        let new = (self.fresh)(name);
        self.scopes.last_mut().expect("scope").insert(name.clone(), new.clone());
        *name = new;
    }

    fn block(&mut self, b: &mut Block) {
        self.scopes.push(HashMap::new());
        self.stmts_in_place(&mut b.stmts);
        self.scopes.pop();
    }

    fn stmts_in_place(&mut self, stmts: &mut [Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn stmts_scoped(&mut self, stmts: &mut [Stmt]) {
        self.scopes.push(HashMap::new());
        self.stmts_in_place(stmts);
        self.scopes.pop();
    }

    fn stmt(&mut self, stmt: &mut Stmt) {
        match stmt {
            Stmt::VarDecl { name, init, .. } => {
                if let Some(e) = init {
                    self.expr(e);
                }
                self.bind(name);
            }
            Stmt::Assign { target, value, .. } => {
                match target {
                    LValue::Var { name, .. } => self.rewrite(name),
                    LValue::Index { name, index, .. } => {
                        self.rewrite(name);
                        self.expr(index);
                    }
                }
                self.expr(value);
            }
            Stmt::If { cond, then_block, els, .. } => {
                self.expr(cond);
                self.block(then_block);
                if let Some(e) = els {
                    self.stmt(e);
                }
            }
            Stmt::While { cond, body, .. } => {
                self.expr(cond);
                self.block(body);
            }
            Stmt::DoWhile { body, cond, .. } => {
                self.block(body);
                self.expr(cond);
            }
            Stmt::For { init, cond, update, body, .. } => {
                self.scopes.push(HashMap::new());
                if let Some(s) = init {
                    self.stmt(s);
                }
                if let Some(c) = cond {
                    self.expr(c);
                }
                self.block(body);
                if let Some(s) = update {
                    self.stmt(s);
                }
                self.scopes.pop();
            }
            Stmt::Switch { scrutinee, arms, default, .. } => {
                self.expr(scrutinee);
                for arm in arms {
                    self.stmts_scoped(&mut arm.body);
                }
                if let Some(d) = default {
                    self.stmts_scoped(d);
                }
            }
            Stmt::Return { value, .. } => {
                if let Some(e) = value {
                    self.expr(e);
                }
            }
            Stmt::Expr { expr, .. } => self.expr(expr),
            Stmt::Block { block, .. } => self.block(block),
        }
    }

    fn rewrite(&mut self, name: &mut String) {
        if let Some(new) = self.lookup(name) {
            *name = new.clone();
        }
    }

    fn expr(&mut self, expr: &mut Expr) {
        match expr {
            Expr::Var { name, .. } => self.rewrite(name),
            Expr::Call { args, .. } => args.iter_mut().for_each(|a| self.expr(a)),
            Expr::Print { arg, .. } => self.expr(arg),
            Expr::Index { base, index, .. } => {
                self.expr(base);
                self.expr(index);
            }
            Expr::NewArray { len, .. } => self.expr(len),
            Expr::Unary { expr, .. } => self.expr(expr),
            Expr::Binary { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
            }
            Expr::Int { .. } | Expr::Bool { .. } | Expr::Str { .. } | Expr::Read { .. } => {}
        }
    }
}

/// Pre-order visit of every statement in a subtree, nested bodies included.
pub fn visit_stmts<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in stmts {
        visit_stmt(s, f);
    }
}

pub fn visit_stmt<'a>(stmt: &'a Stmt, f: &mut impl FnMut(&'a Stmt)) {
    f(stmt);
    match stmt {
        Stmt::If { then_block, els, .. } => {
            visit_stmts(&then_block.stmts, f);
            if let Some(e) = els {
                visit_stmt(e, f);
            }
        }
        Stmt::While { body, .. } | Stmt::DoWhile { body, .. } => visit_stmts(&body.stmts, f),
        Stmt::For { init, update, body, .. } => {
            if let Some(s) = init {
                visit_stmt(s, f);
            }
            visit_stmts(&body.stmts, f);
            if let Some(s) = update {
                visit_stmt(s, f);
            }
        }
        Stmt::Switch { arms, default, .. } => {
            for arm in arms {
                visit_stmts(&arm.body, f);
            }
            if let Some(d) = default {
                visit_stmts(d, f);
            }
        }
        Stmt::Block { block, .. } => visit_stmts(&block.stmts, f),
        Stmt::VarDecl { .. } | Stmt::Assign { .. } | Stmt::Return { .. } | Stmt::Expr { .. } => {}
    }
}

/// Visits every statement list in a subtree, outermost first: the list
/// itself, then the lists inside each of its statements.
pub fn visit_stmt_lists_mut(stmts: &mut Vec<Stmt>, f: &mut impl FnMut(&mut Vec<Stmt>)) {
    f(stmts);
    for s in stmts {
        visit_stmt_lists_in_stmt_mut(s, f);
    }
}

fn visit_stmt_lists_in_stmt_mut(stmt: &mut Stmt, f: &mut impl FnMut(&mut Vec<Stmt>)) {
    match stmt {
        Stmt::If { then_block, els, .. } => {
            visit_stmt_lists_mut(&mut then_block.stmts, f);
            if let Some(e) = els {
                visit_stmt_lists_in_stmt_mut(e, f);
            }
        }
        Stmt::While { body, .. } | Stmt::DoWhile { body, .. } | Stmt::For { body, .. } => {
            visit_stmt_lists_mut(&mut body.stmts, f)
        }
        Stmt::Switch { arms, default, .. } => {
            for arm in arms {
                visit_stmt_lists_mut(&mut arm.body, f);
            }
            if let Some(d) = default {
                visit_stmt_lists_mut(d, f);
            }
        }
        Stmt::Block { block, .. } => visit_stmt_lists_mut(&mut block.stmts, f),
        _ => {}
    }
}

/// Every identifier mentioned anywhere in a statement subtree.
pub fn stmt_idents(stmt: &Stmt, out: &mut BTreeSet<String>) {
    visit_stmt(stmt, &mut |s| match s {
        Stmt::VarDecl { name, init, .. } => {
            out.insert(name.clone());
            if let Some(e) = init {
                expr_idents(e, out);
            }
        }
        Stmt::Assign { target, value, .. } => {
            out.insert(target.name().to_string());
            if let LValue::Index { index, .. } = target {
                expr_idents(index, out);
            }
            expr_idents(value, out);
        }
        Stmt::If { cond, .. } => expr_idents(cond, out),
        Stmt::While { cond, .. } | Stmt::DoWhile { cond, .. } => expr_idents(cond, out),
        Stmt::For { cond, .. } => {
            if let Some(c) = cond {
                expr_idents(c, out);
            }
        }
        Stmt::Switch { scrutinee, .. } => expr_idents(scrutinee, out),
        Stmt::Return { value: Some(e), .. } => expr_idents(e, out),
        Stmt::Expr { expr, .. } => expr_idents(expr, out),
        _ => {}
    });
}

pub fn expr_idents(expr: &Expr, out: &mut BTreeSet<String>) {
    match expr {
        Expr::Var { name, .. } => {
            out.insert(name.clone());
        }
        Expr::Call { name, args, .. } => {
            out.insert(name.clone());
            for a in args {
                expr_idents(a, out);
            }
        }
        Expr::Print { arg, .. } => expr_idents(arg, out),
        Expr::Index { base, index, .. } => {
            expr_idents(base, out);
            expr_idents(index, out);
        }
        Expr::NewArray { len, .. } => expr_idents(len, out),
        Expr::Unary { expr, .. } => expr_idents(expr, out),
        Expr::Binary { lhs, rhs, .. } => {
            expr_idents(lhs, out);
            expr_idents(rhs, out);
        }
        Expr::Int { .. } | Expr::Bool { .. } | Expr::Str { .. } | Expr::Read { .. } => {}
    }
}

/// Names a statement subtree writes through plain variable assignment or
/// re-declares. Array element writes do not count: they mutate contents,
/// not the binding.
pub fn written_names(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    visit_stmts(stmts, &mut |s| match s {
        Stmt::Assign { target: LValue::Var { name, .. }, .. } => {
            out.insert(name.clone());
        }
        Stmt::VarDecl { name, .. } => {
            out.insert(name.clone());
        }
        _ => {}
    });
}

/// True for expressions built purely from literals: safe to evaluate at any
/// time, in any environment.
pub fn literal_pure(expr: &Expr) -> bool {
    match expr {
        Expr::Int { .. } | Expr::Bool { .. } | Expr::Str { .. } => true,
        Expr::Unary { expr, .. } => literal_pure(expr),
        Expr::Binary { lhs, rhs, .. } => literal_pure(lhs) && literal_pure(rhs),
        _ => false,
    }
}

/// If the expression is a side-effect-free scalar computation over literals
/// and variables, returns the variables it reads; otherwise `None`.
pub fn invariant_reads(expr: &Expr) -> Option<BTreeSet<String>> {
    fn go(e: &Expr, out: &mut BTreeSet<String>) -> bool {
        match e {
            Expr::Int { .. } | Expr::Bool { .. } | Expr::Str { .. } => true,
            Expr::Var { name, .. } => {
                out.insert(name.clone());
                true
            }
            Expr::Unary { expr, .. } => go(expr, out),
            Expr::Binary { lhs, rhs, .. } => go(lhs, out) && go(rhs, out),
            _ => false,
        }
    }
    let mut out = BTreeSet::new();
    go(expr, &mut out).then_some(out)
}

/// Pre-order mutable visit of every statement in a subtree.
pub fn visit_stmts_mut(stmts: &mut [Stmt], f: &mut impl FnMut(&mut Stmt)) {
    for s in stmts {
        visit_stmt_mut(s, f);
    }
}

pub fn visit_stmt_mut(stmt: &mut Stmt, f: &mut impl FnMut(&mut Stmt)) {
    f(stmt);
    match stmt {
        Stmt::If { then_block, els, .. } => {
            visit_stmts_mut(&mut then_block.stmts, f);
            if let Some(e) = els {
                visit_stmt_mut(e, f);
            }
        }
        Stmt::While { body, .. } | Stmt::DoWhile { body, .. } => {
            visit_stmts_mut(&mut body.stmts, f)
        }
        Stmt::For { init, update, body, .. } => {
            if let Some(s) = init {
                visit_stmt_mut(s, f);
            }
            visit_stmts_mut(&mut body.stmts, f);
            if let Some(s) = update {
                visit_stmt_mut(s, f);
            }
        }
        Stmt::Switch { arms, default, .. } => {
            for arm in arms {
                visit_stmts_mut(&mut arm.body, f);
            }
            if let Some(d) = default {
                visit_stmts_mut(d, f);
            }
        }
        Stmt::Block { block, .. } => visit_stmts_mut(&mut block.stmts, f),
        Stmt::VarDecl { .. } | Stmt::Assign { .. } | Stmt::Return { .. } | Stmt::Expr { .. } => {}
    }
}

/// Applies `f` to every expression in the program, global initializers
/// included, parents before children.
pub fn visit_program_exprs_mut(program: &mut Program, f: &mut impl FnMut(&mut Expr)) {
    for g in &mut program.globals {
        if let Some(e) = &mut g.init {
            visit_expr_mut(e, f);
        }
    }
    for func in &mut program.functions {
        visit_stmts_mut(&mut func.body.stmts, &mut |s| {
            stmt_exprs_mut(s, &mut |e| visit_expr_mut(e, f));
        });
    }
}

fn stmt_exprs_mut(stmt: &mut Stmt, f: &mut impl FnMut(&mut Expr)) {
    match stmt {
        Stmt::VarDecl { init: Some(e), .. } => f(e),
        Stmt::Assign { target, value, .. } => {
            if let LValue::Index { index, .. } = target {
                f(index);
            }
            f(value);
        }
        Stmt::If { cond, .. } => f(cond),
        Stmt::While { cond, .. } | Stmt::DoWhile { cond, .. } => f(cond),
        Stmt::For { cond: Some(c), .. } => f(c),
        Stmt::Switch { scrutinee, .. } => f(scrutinee),
        Stmt::Return { value: Some(e), .. } => f(e),
        Stmt::Expr { expr, .. } => f(expr),
        _ => {}
    }
}

pub fn visit_expr_mut(expr: &mut Expr, f: &mut impl FnMut(&mut Expr)) {
    f(expr);
    match expr {
        Expr::Call { args, .. } => args.iter_mut().for_each(|a| visit_expr_mut(a, f)),
        Expr::Print { arg, .. } => visit_expr_mut(arg, f),
        Expr::Index { base, index, .. } => {
            visit_expr_mut(base, f);
            visit_expr_mut(index, f);
        }
        Expr::NewArray { len, .. } => visit_expr_mut(len, f),
        Expr::Unary { expr, .. } => visit_expr_mut(expr, f),
        Expr::Binary { lhs, rhs, .. } => {
            visit_expr_mut(lhs, f);
            visit_expr_mut(rhs, f);
        }
        _ => {}
    }
}

/// Applies `f` to every expression in a statement subtree, parents before
/// children.
pub fn visit_exprs<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Expr)) {
    visit_stmts(stmts, &mut |s| stmt_exprs(s, &mut |top| visit_expr(top, f)));
}

/// Mutable variant of [`visit_exprs`].
pub fn visit_exprs_mut(stmts: &mut [Stmt], f: &mut impl FnMut(&mut Expr)) {
    visit_stmts_mut(stmts, &mut |s| stmt_exprs_mut(s, &mut |top| visit_expr_mut(top, f)));
}

fn stmt_exprs<'a>(stmt: &'a Stmt, f: &mut impl FnMut(&'a Expr)) {
    match stmt {
        Stmt::VarDecl { init: Some(e), .. } => f(e),
        Stmt::Assign { target, value, .. } => {
            if let LValue::Index { index, .. } = target {
                f(index);
            }
            f(value);
        }
        Stmt::If { cond, .. } => f(cond),
        Stmt::While { cond, .. } | Stmt::DoWhile { cond, .. } => f(cond),
        Stmt::For { cond: Some(c), .. } => f(c),
        Stmt::Switch { scrutinee, .. } => f(scrutinee),
        Stmt::Return { value: Some(e), .. } => f(e),
        Stmt::Expr { expr, .. } => f(expr),
        _ => {}
    }
}

pub fn visit_expr<'a>(expr: &'a Expr, f: &mut impl FnMut(&'a Expr)) {
    f(expr);
    match expr {
        Expr::Call { args, .. } => args.iter().for_each(|a| visit_expr(a, f)),
        Expr::Print { arg, .. } => visit_expr(arg, f),
        Expr::Index { base, index, .. } => {
            visit_expr(base, f);
            visit_expr(index, f);
        }
        Expr::NewArray { len, .. } => visit_expr(len, f),
        Expr::Unary { expr, .. } => visit_expr(expr, f),
        Expr::Binary { lhs, rhs, .. } => {
            visit_expr(lhs, f);
            visit_expr(rhs, f);
        }
        _ => {}
    }
}

/// Identifiers mentioned in a statement range, first occurrence first.
pub fn ordered_idents(stmts: &[Stmt]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    visit_stmts(stmts, &mut |s| {
        let mut names = BTreeSet::new();
        stmt_own_idents(s, &mut names);
        for n in names {
            if seen.insert(n.clone()) {
                out.push(n);
            }
        }
    });
    out
}

fn stmt_own_idents(stmt: &Stmt, out: &mut BTreeSet<String>) {
    match stmt {
        Stmt::VarDecl { name, init, .. } => {
            out.insert(name.clone());
            if let Some(e) = init {
                expr_idents(e, out);
            }
        }
        Stmt::Assign { target, value, .. } => {
            out.insert(target.name().to_string());
            if let LValue::Index { index, .. } = target {
                expr_idents(index, out);
            }
            expr_idents(value, out);
        }
        Stmt::If { cond, .. } => expr_idents(cond, out),
        Stmt::While { cond, .. } | Stmt::DoWhile { cond, .. } => expr_idents(cond, out),
        Stmt::For { cond, .. } => {
            if let Some(c) = cond {
                expr_idents(c, out);
            }
        }
        Stmt::Switch { scrutinee, .. } => expr_idents(scrutinee, out),
        Stmt::Return { value: Some(e), .. } => expr_idents(e, out),
        Stmt::Expr { expr, .. } => expr_idents(expr, out),
        _ => {}
    }
}

/// How many times a statement subtree mentions `name` anywhere.
pub fn mentions_of(stmts: &[Stmt], name: &str) -> usize {
    let mut count = 0;
    visit_stmts(stmts, &mut |s| {
        let mut names = Vec::new();
        stmt_own_ident_list(s, &mut names);
        count += names.iter().filter(|n| *n == name).count();
    });
    count
}

fn stmt_own_ident_list(stmt: &Stmt, out: &mut Vec<String>) {
    match stmt {
        Stmt::VarDecl { name, init, .. } => {
            out.push(name.clone());
            if let Some(e) = init {
                expr_ident_list(e, out);
            }
        }
        Stmt::Assign { target, value, .. } => {
            out.push(target.name().to_string());
            if let LValue::Index { index, .. } = target {
                expr_ident_list(index, out);
            }
            expr_ident_list(value, out);
        }
        Stmt::If { cond, .. } => expr_ident_list(cond, out),
        Stmt::While { cond, .. } | Stmt::DoWhile { cond, .. } => expr_ident_list(cond, out),
        Stmt::For { cond, .. } => {
            if let Some(c) = cond {
                expr_ident_list(c, out);
            }
        }
        Stmt::Switch { scrutinee, .. } => expr_ident_list(scrutinee, out),
        Stmt::Return { value: Some(e), .. } => expr_ident_list(e, out),
        Stmt::Expr { expr, .. } => expr_ident_list(expr, out),
        _ => {}
    }
}

fn expr_ident_list(expr: &Expr, out: &mut Vec<String>) {
    match expr {
        Expr::Var { name, .. } => out.push(name.clone()),
        Expr::Call { name, args, .. } => {
            out.push(name.clone());
            for a in args {
                expr_ident_list(a, out);
            }
        }
        Expr::Print { arg, .. } => expr_ident_list(arg, out),
        Expr::Index { base, index, .. } => {
            expr_ident_list(base, out);
            expr_ident_list(index, out);
        }
        Expr::NewArray { len, .. } => expr_ident_list(len, out),
        Expr::Unary { expr, .. } => expr_ident_list(expr, out),
        Expr::Binary { lhs, rhs, .. } => {
            expr_ident_list(lhs, out);
            expr_ident_list(rhs, out);
        }
        Expr::Int { .. } | Expr::Bool { .. } | Expr::Str { .. } | Expr::Read { .. } => {}
    }
}

/// How many times a subtree assigns to or re-declares `name`. Array element
/// stores do not count.
pub fn writes_of(stmts: &[Stmt], name: &str) -> usize {
    let mut count = 0;
    visit_stmts(stmts, &mut |s| match s {
        Stmt::Assign { target: LValue::Var { name: n, .. }, .. } if n == name => count += 1,
        Stmt::VarDecl { name: n, .. } if n == name => count += 1,
        _ => {}
    });
    count
}

/// Rough size of a statement subtree: statements plus identifier mentions.
/// Used to bias choices toward small loop bodies.
pub fn stmt_weight(stmt: &Stmt) -> usize {
    let mut stmts = 0;
    visit_stmt(stmt, &mut |_| stmts += 1);
    let mut idents = Vec::new();
    visit_stmt(stmt, &mut |s| stmt_own_ident_list(s, &mut idents));
    stmts + idents.len()
}

/// True when a switch scrutinee can be duplicated per comparison: an
/// int-valued expression with no side effects and no branch-introducing
/// subterms, so re-evaluating it per arm is both safe and token-exact.
pub fn duplicable_scrutinee(expr: &Expr) -> bool {
    match expr {
        Expr::Int { .. } | Expr::Var { .. } => true,
        Expr::Index { base, index, .. } => duplicable_scrutinee(base) && duplicable_scrutinee(index),
        Expr::Unary { op: UnOp::Neg, expr, .. } => duplicable_scrutinee(expr),
        Expr::Binary { op, lhs, rhs, .. } => {
            matches!(op, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem)
                && duplicable_scrutinee(lhs)
                && duplicable_scrutinee(rhs)
        }
        _ => false,
    }
}
