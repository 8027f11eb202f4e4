//! The disguise transforms themselves.
//!
//! Each transform rewrites the AST (or raw text, for the lexical ones) and
//! reloads the result through the frontend, so the output is always a valid
//! program. Transforms preserve observable behaviour: same input script,
//! same print trace. When a program has no site a transform could touch, it
//! reports `NotApplicable` rather than returning the input unchanged.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::mem;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::frontend::ast::*;
use crate::frontend::{self, print_program, print_program_styled, strip_comments, PrintStyle, SourceUnit};

use super::rewrite::{
    duplicable_scrutinee, invariant_reads, literal_pure, mentions_of, ordered_idents,
    rename_locals_in, stmt_idents, stmt_weight, visit_exprs, visit_exprs_mut,
    visit_program_exprs_mut, visit_stmt_lists_mut, visit_stmts, visit_stmts_mut, writes_of,
    NamePool, FUNC_BASES, LOCAL_BASES,
};
use super::{AttackError, AttackKind, AttackSpec};

/// Applies one attack to a unit and returns the disguised unit. The seed
/// in `spec` fixes every random choice, so equal inputs give equal outputs.
pub fn apply_attack(unit: &SourceUnit, spec: &AttackSpec) -> Result<SourceUnit, AttackError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let kind = spec.kind;
    match kind {
        AttackKind::CommentStrip => {
            let stripped = strip_comments(&unit.text);
            if stripped == unit.text {
                return Err(AttackError::not_applicable(kind, "no comments to strip"));
            }
            reload(&stripped, &unit.origin)
        }
        AttackKind::WhitespaceReflow => {
            let indents = [2usize, 3, 8];
            let style = PrintStyle {
                indent: indents[rng.gen_range(0..indents.len())],
                brace_next_line: rng.gen_bool(0.5),
                blank_between_items: rng.gen_bool(0.5),
            };
            reload(&print_program_styled(&unit.ast, style), &unit.origin)
        }
        AttackKind::RenameEntryArtifacts => rename_entry_artifacts(unit, &mut rng),
        AttackKind::LogicRewrite => Err(AttackError::not_applicable(
            kind,
            "algorithm substitutions are authored as seed pairs, not derived",
        )),
        _ => {
            let mut program = unit.ast.clone();
            match kind {
                AttackKind::RenameLocals => rename_locals(&mut program, &mut rng)?,
                AttackKind::RenameFunctions => rename_functions(&mut program, &mut rng)?,
                AttackKind::RelocateDeclInBlock => relocate_decl_in_block(&mut program, &mut rng)?,
                AttackKind::RelocateDeclToGlobal => {
                    relocate_decl_to_global(&mut program)?
                }
                AttackKind::RelocateDeclOutOfLoop => {
                    relocate_decl_out_of_loop(&mut program, &mut rng)?
                }
                AttackKind::InlineFunction => inline_function(&mut program, &mut rng)?,
                AttackKind::ExtractBlock => extract_block(&mut program, &mut rng)?,
                AttackKind::WhileToFor => while_to_for(&mut program, &mut rng)?,
                AttackKind::WhileToDowhile => while_to_dowhile(&mut program)?,
                AttackKind::SwapIfArms => swap_if_arms(&mut program, &mut rng)?,
                AttackKind::ExpandCompoundAssign => expand_compound_assign(&mut program)?,
                AttackKind::SwitchToIfchain => switch_to_ifchain(&mut program, &mut rng)?,
                _ => unreachable!("handled above"),
            }
            reload(&print_program(&program), &unit.origin)
        }
    }
}

fn reload(text: &str, origin: &str) -> Result<SourceUnit, AttackError> {
    Ok(frontend::load_str(text, origin)?)
}

fn placeholder() -> Stmt {
    Stmt::Block { block: Block { stmts: Vec::new() }, span: Span::default() }
}

fn rename_entry_artifacts(
    unit: &SourceUnit,
    rng: &mut ChaCha8Rng,
) -> Result<SourceUnit, AttackError> {
    const COURSES: &[&str] = &["cs101", "algo2", "lab4", "prog1", "ws23"];
    const TAGS: &[&str] = &["final", "redo", "clean", "mine", "v2"];
    let course = COURSES[rng.gen_range(0..COURSES.len())];
    let tag = TAGS[rng.gen_range(0..TAGS.len())];
    let banner = format!(
        "// {course} submission ({tag})\n// workspace build {}\n",
        rng.gen_range(100..1000)
    );
    let stem = unit.origin.strip_suffix(".mj").unwrap_or(&unit.origin);
    let origin = format!("{stem}_{tag}.mj");
    reload(&format!("{banner}{}", unit.text), &origin)
}

fn rename_locals(program: &mut Program, rng: &mut ChaCha8Rng) -> Result<(), AttackError> {
    let mut pool = NamePool::new(program);
    let mut count = 0usize;
    for f in &mut program.functions {
        rename_locals_in(f, &mut |_| {
            count += 1;
            pool.fresh(rng, LOCAL_BASES)
        });
    }
    if count == 0 {
        return Err(AttackError::not_applicable(
            AttackKind::RenameLocals,
            "no locals or parameters to rename",
        ));
    }
    Ok(())
}

fn rename_functions(program: &mut Program, rng: &mut ChaCha8Rng) -> Result<(), AttackError> {
    let mut pool = NamePool::new(program);
    let mut map = HashMap::new();
    for f in &program.functions {
        if f.name != "main" {
            map.insert(f.name.clone(), pool.fresh(rng, FUNC_BASES));
        }
    }
    if map.is_empty() {
        return Err(AttackError::not_applicable(
            AttackKind::RenameFunctions,
            "only main is defined",
        ));
    }
    for f in &mut program.functions {
        if let Some(new) = map.get(&f.name) {
            f.name = new.clone();
        }
    }
    visit_program_exprs_mut(program, &mut |e| {
        if let Expr::Call { name, .. } = e {
            if let Some(new) = map.get(name) {
                *name = new.clone();
            }
        }
    });
    Ok(())
}

/// True when a statement range declares nothing, at any depth.
fn decl_free(stmts: &[Stmt]) -> bool {
    let mut found = false;
    visit_stmts(stmts, &mut |s| found |= matches!(s, Stmt::VarDecl { .. }));
    !found
}

fn eligible_decl_moves(list: &[Stmt]) -> Vec<usize> {
    (1..list.len())
        .filter(|&k| {
            let Stmt::VarDecl { name, .. } = &list[k] else { return false };
            if !decl_free(&list[..k]) {
                return false;
            }
            let mut mentioned = BTreeSet::new();
            for s in &list[..k] {
                stmt_idents(s, &mut mentioned);
            }
            !mentioned.contains(name)
        })
        .collect()
}

fn relocate_decl_in_block(program: &mut Program, rng: &mut ChaCha8Rng) -> Result<(), AttackError> {
    let mut total = 0usize;
    for f in &mut program.functions {
        visit_stmt_lists_mut(&mut f.body.stmts, &mut |list| {
            total += eligible_decl_moves(list).len();
        });
    }
    if total == 0 {
        return Err(AttackError::not_applicable(
            AttackKind::RelocateDeclInBlock,
            "no declaration can move ahead of the statements before it",
        ));
    }
    let target = rng.gen_range(0..total);
    let mut seen = 0usize;
    for f in &mut program.functions {
        visit_stmt_lists_mut(&mut f.body.stmts, &mut |list| {
            for k in eligible_decl_moves(list) {
                if seen == target {
                    let Stmt::VarDecl { ty, name, init, span } = list.remove(k) else {
                        unreachable!("eligibility checked the variant")
                    };
                    if let Some(value) = init {
                        let target = LValue::Var { name: name.clone(), span };
                        list.insert(k, Stmt::Assign { target, op: AssignOp::Set, value, span });
                    }
                    list.insert(0, Stmt::VarDecl { ty, name, init: None, span });
                }
                seen += 1;
            }
        });
    }
    Ok(())
}

fn relocate_decl_to_global(program: &mut Program) -> Result<(), AttackError> {
    let kind = AttackKind::RelocateDeclToGlobal;
    let mut main_called = false;
    visit_program_exprs_mut(program, &mut |e| {
        if let Expr::Call { name, .. } = e {
            main_called |= name == "main";
        }
    });
    if main_called {
        return Err(AttackError::not_applicable(kind, "main is re-entered"));
    }
    let globals: BTreeSet<&str> = program.globals.iter().map(|g| g.name.as_str()).collect();
    let funcs: BTreeSet<&str> = program.functions.iter().map(|f| f.name.as_str()).collect();
    let mut params = BTreeSet::new();
    let mut decl_counts: HashMap<&str, usize> = HashMap::new();
    for f in &program.functions {
        for p in &f.params {
            params.insert(p.name.as_str());
        }
        visit_stmts(&f.body.stmts, &mut |s| {
            if let Stmt::VarDecl { name, .. } = s {
                *decl_counts.entry(name).or_insert(0) += 1;
            }
        });
    }
    let Some(mi) = program.functions.iter().position(|f| f.name == "main") else {
        return Err(AttackError::not_applicable(kind, "no main function"));
    };
    let list = &program.functions[mi].body.stmts;
    let sites: Vec<usize> = (0..list.len())
        .filter(|&k| match &list[k] {
            Stmt::VarDecl { name, init: Some(e), .. } => {
                literal_pure(e)
                    && !globals.contains(name.as_str())
                    && !funcs.contains(name.as_str())
                    && !params.contains(name.as_str())
                    && decl_counts.get(name.as_str()) == Some(&1)
            }
            _ => false,
        })
        .collect();
    if sites.is_empty() {
        return Err(AttackError::not_applicable(
            kind,
            "main has no literal-initialized declaration with a program-unique name",
        ));
    }
    // The last eligible declaration reads most naturally at file scope.
    let k = *sites.last().expect("nonempty");
    let Stmt::VarDecl { ty, name, init, span } = program.functions[mi].body.stmts.remove(k) else {
        unreachable!("eligibility checked the variant")
    };
    program.globals.push(GlobalDecl { ty, name, init, span });
    Ok(())
}

/// True when evaluating the expression can never fault: no division, no
/// calls, no indexing.
fn faultless(e: &Expr) -> bool {
    match e {
        Expr::Int { .. } | Expr::Bool { .. } | Expr::Str { .. } | Expr::Var { .. } => true,
        Expr::Unary { expr, .. } => faultless(expr),
        Expr::Binary { op, lhs, rhs, .. } => {
            !matches!(op, BinOp::Div | BinOp::Rem) && faultless(lhs) && faultless(rhs)
        }
        _ => false,
    }
}

fn hoistable_loop(stmt: &Stmt, fn_stmts: &[Stmt], globals: &BTreeSet<String>) -> bool {
    let Stmt::While { body, .. } = stmt else { return false };
    if body.stmts.len() < 2 {
        return false;
    }
    let Some(Stmt::VarDecl { name, init: Some(e), .. }) = body.stmts.first() else {
        return false;
    };
    if !matches!(e, Expr::Unary { .. } | Expr::Binary { .. }) || !faultless(e) {
        return false;
    }
    let Some(vars) = invariant_reads(e) else { return false };
    let this = std::slice::from_ref(stmt);
    vars.iter().all(|v| !globals.contains(v) && writes_of(this, v) == 0)
        && writes_of(this, name) == 1
        && mentions_of(fn_stmts, name) == mentions_of(this, name)
}

fn relocate_decl_out_of_loop(
    program: &mut Program,
    rng: &mut ChaCha8Rng,
) -> Result<(), AttackError> {
    let globals: BTreeSet<String> = program.globals.iter().map(|g| g.name.clone()).collect();
    // Eligibility needs the whole function in view, so decide it on a clone
    // walked in the same order as the rewrite pass.
    let mut flags: Vec<bool> = Vec::new();
    for f in &program.functions {
        let fn_stmts = f.body.stmts.clone();
        let mut walk = f.body.stmts.clone();
        visit_stmt_lists_mut(&mut walk, &mut |list| {
            for s in list.iter() {
                if leading_decl_loop(s) {
                    flags.push(hoistable_loop(s, &fn_stmts, &globals));
                }
            }
        });
    }
    let eligible: Vec<usize> =
        flags.iter().enumerate().filter_map(|(i, ok)| ok.then_some(i)).collect();
    if eligible.is_empty() {
        return Err(AttackError::not_applicable(
            AttackKind::RelocateDeclOutOfLoop,
            "no while loop opens with a hoistable loop-invariant declaration",
        ));
    }
    let target = eligible[rng.gen_range(0..eligible.len())];
    let mut seen = 0usize;
    for f in &mut program.functions {
        visit_stmt_lists_mut(&mut f.body.stmts, &mut |list| {
            for k in 0..list.len() {
                if !leading_decl_loop(&list[k]) {
                    continue;
                }
                if seen == target {
                    let Stmt::While { body, .. } = &mut list[k] else { unreachable!() };
                    let decl = body.stmts.remove(0);
                    list.insert(k, decl);
                }
                seen += 1;
            }
        });
    }
    Ok(())
}

fn leading_decl_loop(stmt: &Stmt) -> bool {
    matches!(stmt, Stmt::While { body, .. }
        if matches!(body.stmts.first(), Some(Stmt::VarDecl { init: Some(_), .. })))
}

fn inline_function(program: &mut Program, rng: &mut ChaCha8Rng) -> Result<(), AttackError> {
    let mut edges: HashMap<String, BTreeSet<String>> = HashMap::new();
    let mut stmt_calls: HashMap<String, usize> = HashMap::new();
    for f in &program.functions {
        let out = edges.entry(f.name.clone()).or_default();
        visit_exprs(&f.body.stmts, &mut |e| {
            if let Expr::Call { name, .. } = e {
                out.insert(name.clone());
            }
        });
        visit_stmts(&f.body.stmts, &mut |s| {
            if let Stmt::Expr { expr: Expr::Call { name, .. }, .. } = s {
                *stmt_calls.entry(name.clone()).or_insert(0) += 1;
            }
        });
    }
    let on_cycle = |name: &str| {
        let mut stack: Vec<&str> = edges.get(name).into_iter().flatten().map(|s| s.as_str()).collect();
        let mut visited: HashSet<&str> = HashSet::new();
        while let Some(n) = stack.pop() {
            if n == name {
                return true;
            }
            if visited.insert(n) {
                stack.extend(edges.get(n).into_iter().flatten().map(|s| s.as_str()));
            }
        }
        false
    };
    let candidates: Vec<usize> = program
        .functions
        .iter()
        .enumerate()
        .filter(|(_, f)| {
            let mut has_return = false;
            visit_stmts(&f.body.stmts, &mut |s| {
                has_return |= matches!(s, Stmt::Return { .. });
            });
            f.name != "main"
                && f.ret.is_none()
                && !has_return
                && stmt_calls.get(&f.name).copied().unwrap_or(0) >= 1
                && !on_cycle(&f.name)
        })
        .map(|(i, _)| i)
        .collect();
    if candidates.is_empty() {
        return Err(AttackError::not_applicable(
            AttackKind::InlineFunction,
            "no void, return-free, acyclic callee is invoked as a statement",
        ));
    }
    let g = program.functions.remove(candidates[rng.gen_range(0..candidates.len())]);
    let globals: BTreeSet<String> = program.globals.iter().map(|g| g.name.clone()).collect();
    let mut pool = NamePool::new(program);
    for f in &mut program.functions {
        visit_stmt_lists_mut(&mut f.body.stmts, &mut |list| {
            for k in 0..list.len() {
                let is_site = matches!(
                    &list[k],
                    Stmt::Expr { expr: Expr::Call { name, .. }, .. } if *name == g.name
                );
                if !is_site {
                    continue;
                }
                let Stmt::Expr { expr: Expr::Call { args, .. }, span } =
                    mem::replace(&mut list[k], placeholder())
                else {
                    unreachable!("matched above")
                };
                let mut copy = FuncDecl {
                    name: g.name.clone(),
                    params: g.params.clone(),
                    ret: None,
                    body: g.body.clone(),
                    span: g.span,
                };
                rename_locals_in(&mut copy, &mut |_| pool.fresh(rng, LOCAL_BASES));
                let mut body = copy.body.stmts;
                let mut stmts: Vec<Stmt> = Vec::new();
                for (p, a) in copy.params.iter().zip(args) {
                    if substitutable_arg(&a, &body, &p.name, &globals) {
                        substitute_var(&mut body, &p.name, &a);
                    } else {
                        stmts.push(Stmt::VarDecl {
                            ty: p.ty,
                            name: p.name.clone(),
                            init: Some(a),
                            span,
                        });
                    }
                }
                stmts.extend(body);
                list[k] = Stmt::Block { block: Block { stmts }, span };
            }
        });
    }
    Ok(())
}

/// A read-only parameter takes its argument at each use instead of through a
/// binding when re-evaluation is safe: the argument is a literal or a caller
/// variable. Globals stay bound since the body may store to them between
/// uses.
fn substitutable_arg(arg: &Expr, body: &[Stmt], param: &str, globals: &BTreeSet<String>) -> bool {
    if writes_of(body, param) > 0 {
        return false;
    }
    match arg {
        Expr::Int { .. } | Expr::Bool { .. } | Expr::Str { .. } => true,
        Expr::Var { name, .. } => !globals.contains(name),
        _ => false,
    }
}

fn substitute_var(stmts: &mut [Stmt], name: &str, value: &Expr) {
    visit_exprs_mut(stmts, &mut |e| {
        if matches!(e, Expr::Var { name: n, .. } if n == name) {
            *e = value.clone();
        }
    });
}

#[derive(Clone)]
struct ExtractSite {
    func: usize,
    i: usize,
    j: usize,
    params: Vec<(String, Type)>,
    clean: bool,
}

fn extract_block(program: &mut Program, rng: &mut ChaCha8Rng) -> Result<(), AttackError> {
    let mut sites: Vec<ExtractSite> = Vec::new();
    for (fi, f) in program.functions.iter().enumerate() {
        let list = &f.body.stmts;
        let n = list.len();
        let mut outer: HashMap<String, Type> =
            f.params.iter().map(|p| (p.name.clone(), p.ty)).collect();
        for i in 0..n {
            for j in (i + 2)..=n {
                let range = &list[i..j];
                let mut has_return = false;
                visit_stmts(range, &mut |s| has_return |= matches!(s, Stmt::Return { .. }));
                if has_return {
                    continue;
                }
                let escaping_decl = range.iter().any(|s| {
                    matches!(s, Stmt::VarDecl { name, .. } if mentions_of(&list[j..], name) > 0)
                });
                if escaping_decl {
                    continue;
                }
                let params: Vec<(String, Type)> = ordered_idents(range)
                    .into_iter()
                    .filter_map(|m| outer.get(&m).map(|t| (m, *t)))
                    .collect();
                if params.iter().any(|(name, _)| writes_of(range, name) > 0) {
                    continue;
                }
                let clean = params.is_empty() && j == n;
                sites.push(ExtractSite { func: fi, i, j, params, clean });
            }
            if let Stmt::VarDecl { ty, name, .. } = &list[i] {
                outer.insert(name.clone(), *ty);
            }
        }
    }
    if sites.is_empty() {
        return Err(AttackError::not_applicable(
            AttackKind::ExtractBlock,
            "no statement range can move out intact",
        ));
    }
    let clean: Vec<ExtractSite> = sites.iter().filter(|s| s.clean).cloned().collect();
    let site = if clean.is_empty() {
        sites[rng.gen_range(0..sites.len())].clone()
    } else {
        clean[rng.gen_range(0..clean.len())].clone()
    };
    let mut pool = NamePool::new(program);
    let gname = pool.fresh(rng, FUNC_BASES);
    let f = &mut program.functions[site.func];
    let span = f.body.stmts[site.i].span();
    let call = Stmt::Expr {
        expr: Expr::Call {
            name: gname.clone(),
            args: site
                .params
                .iter()
                .map(|(name, _)| Expr::Var { name: name.clone(), span })
                .collect(),
            span,
        },
        span,
    };
    let body: Vec<Stmt> = f.body.stmts.splice(site.i..site.j, [call]).collect();
    program.functions.push(FuncDecl {
        name: gname,
        params: site.params.into_iter().map(|(name, ty)| Param { ty, name }).collect(),
        ret: None,
        body: Block { stmts: body },
        span,
    });
    Ok(())
}

fn while_to_for(program: &mut Program, rng: &mut ChaCha8Rng) -> Result<(), AttackError> {
    let is_loop = |s: &Stmt| matches!(s, Stmt::While { .. } | Stmt::For { .. });
    let mut total = 0usize;
    for f in &mut program.functions {
        visit_stmt_lists_mut(&mut f.body.stmts, &mut |list| {
            total += list.iter().filter(|s| is_loop(s)).count();
        });
    }
    if total == 0 {
        return Err(AttackError::not_applicable(
            AttackKind::WhileToFor,
            "no while or for loop",
        ));
    }
    let target = rng.gen_range(0..total);
    let mut seen = 0usize;
    for f in &mut program.functions {
        visit_stmt_lists_mut(&mut f.body.stmts, &mut |list| {
            for k in 0..list.len() {
                if !is_loop(&list[k]) {
                    continue;
                }
                if seen == target {
                    list[k] = convert_loop(mem::replace(&mut list[k], placeholder()));
                }
                seen += 1;
            }
        });
    }
    Ok(())
}

fn convert_loop(stmt: Stmt) -> Stmt {
    match stmt {
        Stmt::While { cond, body, span } => {
            Stmt::For { init: None, cond: Some(cond), update: None, body, span }
        }
        Stmt::For { init, cond, update, body, span } => {
            let mut inner = body;
            if let Some(u) = update {
                inner.stmts.push(*u);
            }
            let cond = cond.unwrap_or(Expr::Bool { value: true, span });
            let mut stmts = Vec::new();
            if let Some(i) = init {
                stmts.push(*i);
            }
            stmts.push(Stmt::While { cond, body: inner, span });
            Stmt::Block { block: Block { stmts }, span }
        }
        other => other,
    }
}

fn while_to_dowhile(program: &mut Program) -> Result<(), AttackError> {
    let convertible = |s: &Stmt| matches!(s, Stmt::While { .. } | Stmt::For { .. });
    let mut weights: Vec<usize> = Vec::new();
    for f in &mut program.functions {
        visit_stmt_lists_mut(&mut f.body.stmts, &mut |list| {
            for s in list.iter() {
                if convertible(s) {
                    weights.push(stmt_weight(s));
                }
            }
        });
    }
    if weights.is_empty() {
        return Err(AttackError::not_applicable(AttackKind::WhileToDowhile, "no loop"));
    }
    // The biggest loop buys the most disguise; ties go to the first one.
    let target = weights
        .iter()
        .enumerate()
        .max_by_key(|(i, w)| (**w, std::cmp::Reverse(*i)))
        .map(|(i, _)| i)
        .expect("nonempty");
    let mut seen = 0usize;
    for f in &mut program.functions {
        visit_stmt_lists_mut(&mut f.body.stmts, &mut |list| {
            for k in 0..list.len() {
                if !convertible(&list[k]) {
                    continue;
                }
                if seen == target {
                    list[k] = guarded_dowhile(mem::replace(&mut list[k], placeholder()));
                }
                seen += 1;
            }
        });
    }
    Ok(())
}

/// Rewrites a loop as `if (cond) { do body while (cond); }`, which runs the
/// body the same number of times. A `for` loop contributes its init ahead of
/// the guard and its update at the end of the body.
fn guarded_dowhile(stmt: Stmt) -> Stmt {
    match stmt {
        Stmt::While { cond, body, span } => {
            let guarded = Stmt::DoWhile { body, cond: cond.clone(), span };
            Stmt::If { cond, then_block: Block { stmts: vec![guarded] }, els: None, span }
        }
        Stmt::For { init, cond, update, body, span } => {
            let mut inner = body;
            if let Some(u) = update {
                inner.stmts.push(*u);
            }
            let cond = cond.unwrap_or(Expr::Bool { value: true, span });
            let guarded = guarded_dowhile(Stmt::While { cond, body: inner, span });
            let mut stmts = Vec::new();
            if let Some(i) = init {
                stmts.push(*i);
            }
            stmts.push(guarded);
            Stmt::Block { block: Block { stmts }, span }
        }
        other => other,
    }
}

fn swap_if_arms(program: &mut Program, rng: &mut ChaCha8Rng) -> Result<(), AttackError> {
    let swappable = |s: &Stmt| {
        matches!(s, Stmt::If { els: Some(e), .. } if matches!(**e, Stmt::Block { .. }))
    };
    let mut total = 0usize;
    for f in &mut program.functions {
        visit_stmts_mut(&mut f.body.stmts, &mut |s| total += swappable(s) as usize);
    }
    if total == 0 {
        return Err(AttackError::not_applicable(
            AttackKind::SwapIfArms,
            "no if statement with a plain else branch",
        ));
    }
    let target = rng.gen_range(0..total);
    let mut seen = 0usize;
    for f in &mut program.functions {
        visit_stmts_mut(&mut f.body.stmts, &mut |s| {
            if !swappable(s) {
                return;
            }
            if seen == target {
                let Stmt::If { cond, then_block, els: Some(e), .. } = s else {
                    unreachable!("matched above")
                };
                let Stmt::Block { block, .. } = &mut **e else { unreachable!("matched above") };
                mem::swap(then_block, block);
                let old = mem::replace(cond, Expr::Read { span: Span::default() });
                *cond = negate(old);
            }
            seen += 1;
        });
    }
    Ok(())
}

fn negate(e: Expr) -> Expr {
    match e {
        Expr::Bool { value, span } => Expr::Bool { value: !value, span },
        Expr::Unary { op: UnOp::Not, expr, .. } => *expr,
        Expr::Binary { op, lhs, rhs, span } => match comparison_negation(op) {
            Some(flipped) => Expr::Binary { op: flipped, lhs, rhs, span },
            None => wrap_not(Expr::Binary { op, lhs, rhs, span }),
        },
        other => wrap_not(other),
    }
}

fn wrap_not(e: Expr) -> Expr {
    let span = e.span();
    Expr::Unary { op: UnOp::Not, expr: Box::new(e), span }
}

fn comparison_negation(op: BinOp) -> Option<BinOp> {
    match op {
        BinOp::Eq => Some(BinOp::Ne),
        BinOp::Ne => Some(BinOp::Eq),
        BinOp::Lt => Some(BinOp::Ge),
        BinOp::Ge => Some(BinOp::Lt),
        BinOp::Gt => Some(BinOp::Le),
        BinOp::Le => Some(BinOp::Gt),
        _ => None,
    }
}

fn expand_compound_assign(program: &mut Program) -> Result<(), AttackError> {
    let mut count = 0usize;
    for f in &mut program.functions {
        visit_stmts_mut(&mut f.body.stmts, &mut |s| {
            let Stmt::Assign { target, op, value, span } = s else { return };
            let Some(bin) = op.binary() else { return };
            let lhs = match target {
                LValue::Var { name, span } => Expr::Var { name: name.clone(), span: *span },
                LValue::Index { name, index, span } => Expr::Index {
                    base: Box::new(Expr::Var { name: name.clone(), span: *span }),
                    index: Box::new(index.clone()),
                    span: *span,
                },
            };
            let rhs = mem::replace(value, Expr::Read { span: *span });
            *value = Expr::Binary { op: bin, lhs: Box::new(lhs), rhs: Box::new(rhs), span: *span };
            *op = AssignOp::Set;
            count += 1;
        });
    }
    if count == 0 {
        return Err(AttackError::not_applicable(
            AttackKind::ExpandCompoundAssign,
            "no compound assignment",
        ));
    }
    Ok(())
}

fn switch_to_ifchain(program: &mut Program, rng: &mut ChaCha8Rng) -> Result<(), AttackError> {
    let eligible = |s: &Stmt| {
        matches!(s, Stmt::Switch { scrutinee, arms, .. }
            if !arms.is_empty()
                && arms.iter().all(|a| a.value >= 0)
                && duplicable_scrutinee(scrutinee))
    };
    let mut total = 0usize;
    for f in &mut program.functions {
        visit_stmts_mut(&mut f.body.stmts, &mut |s| total += eligible(s) as usize);
    }
    if total == 0 {
        return Err(AttackError::not_applicable(
            AttackKind::SwitchToIfchain,
            "no switch over a duplicable scrutinee with non-negative cases",
        ));
    }
    let target = rng.gen_range(0..total);
    let mut seen = 0usize;
    for f in &mut program.functions {
        visit_stmts_mut(&mut f.body.stmts, &mut |s| {
            if !eligible(s) {
                return;
            }
            if seen == target {
                let Stmt::Switch { scrutinee, arms, default, span } =
                    mem::replace(s, placeholder())
                else {
                    unreachable!("matched above")
                };
                *s = build_chain(scrutinee, arms, default, span);
            }
            seen += 1;
        });
    }
    Ok(())
}

fn build_chain(
    scrutinee: Expr,
    arms: Vec<SwitchArm>,
    default: Option<Vec<Stmt>>,
    span: Span,
) -> Stmt {
    let mut els: Option<Box<Stmt>> =
        default.map(|stmts| Box::new(Stmt::Block { block: Block { stmts }, span }));
    for arm in arms.into_iter().rev() {
        let cond = Expr::Binary {
            op: BinOp::Eq,
            lhs: Box::new(scrutinee.clone()),
            rhs: Box::new(Expr::Int { value: arm.value, span: arm.span }),
            span: arm.span,
        };
        els = Some(Box::new(Stmt::If {
            cond,
            then_block: Block { stmts: arm.body },
            els,
            span: arm.span,
        }));
    }
    *els.expect("at least one arm")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::eval::evaluate;
    use crate::frontend::load_str;
    use crate::matcher::compare_sources;
    use crate::pipeline::{build_units, Approach, CompareUnit};

    const DRIVER: &str = r#"// running total driver
int limit = 10;

fn scale(int v, int f): int {
    return v * f;
}

fn emit(int v) {
    print(v);
    print(v + limit);
}

fn main() {
    int n = read();
    int total = 0;
    int i = 1;
    while (i <= n) {
        total += scale(i, 2);
        i += 1;
    }
    emit(total);
    switch (n) {
        case 1: print(100);
        case 2: print(200);
        default: print(0);
    }
    if (total > 10) {
        print(1);
    } else {
        print(2);
    }
}
"#;

    fn load(text: &str) -> SourceUnit {
        load_str(text, "fixture.mj").expect("fixture loads")
    }

    fn spec(kind: AttackKind, seed: u64) -> AttackSpec {
        AttackSpec { level: kind.min_level(), kind, seed }
    }

    fn attacked(unit: &SourceUnit, kind: AttackKind, seed: u64) -> SourceUnit {
        apply_attack(unit, &spec(kind, seed)).expect("attack applies")
    }

    fn units(unit: &SourceUnit, approach: Approach) -> Vec<CompareUnit> {
        build_units(unit, approach).expect("fixture compiles").units
    }

    fn rmt(a: &SourceUnit, b: &SourceUnit, approach: Approach) -> i64 {
        compare_sources(a, b, approach, 3).expect("fixture compiles").rmt
    }

    fn same_trace(a: &SourceUnit, b: &SourceUnit, input: &[i64]) {
        assert_eq!(
            evaluate(&a.ast, input).expect("original runs"),
            evaluate(&b.ast, input).expect("disguised copy runs"),
        );
    }

    fn lexemes(unit: &SourceUnit) -> Vec<(String, String)> {
        unit.tokens.iter().map(|t| (format!("{:?}", t.kind), t.lexeme.clone())).collect()
    }

    #[test]
    fn every_attack_is_deterministic() {
        let unit = load(DRIVER);
        for kind in AttackKind::ALL {
            let one = apply_attack(&unit, &spec(kind, 11));
            let two = apply_attack(&unit, &spec(kind, 11));
            match (one, two) {
                (Ok(a), Ok(b)) => {
                    assert_eq!(a.text, b.text, "{kind}");
                    assert_eq!(a.origin, b.origin, "{kind}");
                }
                (Err(AttackError::NotApplicable { .. }), Err(AttackError::NotApplicable { .. })) => {}
                (a, b) => panic!("{kind} diverged: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn comment_strip_only_removes_comments() {
        let unit = load(DRIVER);
        let out = attacked(&unit, AttackKind::CommentStrip, 1);
        assert!(!out.text.contains("//"));
        assert_eq!(lexemes(&unit), lexemes(&out));
        let bare = load("fn main() { print(1); }");
        let err = apply_attack(&bare, &spec(AttackKind::CommentStrip, 1)).unwrap_err();
        assert!(matches!(err, AttackError::NotApplicable { .. }));
    }

    #[test]
    fn whitespace_reflow_keeps_the_token_stream() {
        let unit = load(DRIVER);
        let out = attacked(&unit, AttackKind::WhitespaceReflow, 5);
        assert_ne!(unit.text, out.text);
        assert_eq!(lexemes(&load(&strip_comments(&unit.text))), lexemes(&out));
        assert_eq!(rmt(&unit, &out, Approach::Sta), 0);
    }

    #[test]
    fn rename_locals_never_touches_the_compiled_code() {
        let unit = load(DRIVER);
        let out = attacked(&unit, AttackKind::RenameLocals, 3);
        assert_eq!(units(&unit, Approach::Lla), units(&out, Approach::Lla));
        assert_eq!(units(&unit, Approach::ExtLla), units(&out, Approach::ExtLla));
        assert!(rmt(&unit, &out, Approach::Sta) < 0);
        assert!(!out.text.contains("total"));
        same_trace(&unit, &out, &[4]);
    }

    #[test]
    fn rename_functions_preserves_call_identity() {
        let unit = load(DRIVER);
        let out = attacked(&unit, AttackKind::RenameFunctions, 3);
        let keys = |u: &SourceUnit| -> Vec<Vec<String>> {
            units(u, Approach::Lla).into_iter().map(|c| c.keys).collect()
        };
        assert_eq!(keys(&unit), keys(&out));
        assert_eq!(rmt(&unit, &out, Approach::Lla), 0);
        let names: Vec<&str> = out.ast.functions.iter().map(|f| f.name.as_str()).collect();
        assert!(names.contains(&"main"));
        assert!(!names.contains(&"scale") && !names.contains(&"emit"));
        assert!(!out.text.contains("scale"));
        same_trace(&unit, &out, &[4]);
        let solo = load("fn main() { print(1); }");
        assert!(matches!(
            apply_attack(&solo, &spec(AttackKind::RenameFunctions, 1)),
            Err(AttackError::NotApplicable { .. })
        ));
    }

    #[test]
    fn relocating_a_declaration_in_its_block_is_ir_neutral() {
        let unit = load("fn main() { print(1); int x = read(); print(x); }");
        let out = attacked(&unit, AttackKind::RelocateDeclInBlock, 2);
        assert!(matches!(out.ast.functions[0].body.stmts[0], Stmt::VarDecl { init: None, .. }));
        assert_eq!(units(&unit, Approach::Lla), units(&out, Approach::Lla));
        assert_eq!(units(&unit, Approach::ExtLla), units(&out, Approach::ExtLla));
        same_trace(&unit, &out, &[9]);
        let blocked = load("fn main() { int x = read(); print(x); }");
        assert!(matches!(
            apply_attack(&blocked, &spec(AttackKind::RelocateDeclInBlock, 2)),
            Err(AttackError::NotApplicable { .. })
        ));
    }

    #[test]
    fn relocating_a_declaration_to_a_global_always_dents_the_score() {
        let unit = load(DRIVER);
        let out = attacked(&unit, AttackKind::RelocateDeclToGlobal, 2);
        assert!(out.ast.globals.iter().any(|g| g.name == "total" || g.name == "i"));
        assert!(rmt(&unit, &out, Approach::ExtLla) < 0);
        same_trace(&unit, &out, &[4]);
        let none = load("fn main() { int x = read(); print(x); }");
        assert!(matches!(
            apply_attack(&none, &spec(AttackKind::RelocateDeclToGlobal, 2)),
            Err(AttackError::NotApplicable { .. })
        ));
    }

    #[test]
    fn hoisting_an_invariant_out_of_a_loop_fools_only_the_scoped_stream() {
        let unit = load(
            "fn main() { int n = read(); int s = 0; while (s < n) { int step = n - 1; s += step; print(s); } print(s); }",
        );
        let out = attacked(&unit, AttackKind::RelocateDeclOutOfLoop, 2);
        assert!(matches!(out.ast.functions[0].body.stmts[2], Stmt::VarDecl { .. }));
        assert_eq!(rmt(&unit, &out, Approach::Lla), 0);
        assert!(rmt(&unit, &out, Approach::ExtLla) < 0);
        same_trace(&unit, &out, &[7]);
        let varying = load(
            "fn main() { int n = read(); int s = 0; while (s < n) { int step = s + 1; s += step; print(s); } print(s); }",
        );
        assert!(matches!(
            apply_attack(&varying, &spec(AttackKind::RelocateDeclOutOfLoop, 2)),
            Err(AttackError::NotApplicable { .. })
        ));
    }

    #[test]
    fn inlining_removes_the_callee_everywhere() {
        let unit = load(DRIVER);
        let out = attacked(&unit, AttackKind::InlineFunction, 2);
        let names: Vec<&str> = out.ast.functions.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["scale", "main"]);
        // emit(total) passed a read-only local, so the body reads total
        // directly instead of going through a binding.
        assert!(out.text.contains("print(total);"));
        assert!(out.text.contains("print(total + limit);"));
        same_trace(&unit, &out, &[4]);
        same_trace(&unit, &out, &[1]);
        assert!(rmt(&unit, &out, Approach::ExtLla) > rmt(&unit, &out, Approach::Lla));
        let recursive = load("fn spin(int n) { if (n > 0) { spin(n - 1); } }\nfn main() { spin(3); }");
        assert!(matches!(
            apply_attack(&recursive, &spec(AttackKind::InlineFunction, 2)),
            Err(AttackError::NotApplicable { .. })
        ));
    }

    #[test]
    fn inlining_binds_arguments_it_cannot_replay() {
        let unit = load(
            "fn put(int v) { print(v); print(v * 2); }\nfn main() { put(read()); print(7); }",
        );
        let out = attacked(&unit, AttackKind::InlineFunction, 2);
        let Stmt::Block { block, .. } = &out.ast.functions[0].body.stmts[0] else {
            panic!("call site became a block")
        };
        assert!(matches!(block.stmts[0], Stmt::VarDecl { init: Some(Expr::Read { .. }), .. }));
        same_trace(&unit, &out, &[6]);
    }

    #[test]
    fn extracting_a_clean_suffix_is_invisible_to_the_scoped_stream() {
        let unit = load(
            "fn main() { int n = read(); print(n); int s = 0; int i = 1; while (i <= 3) { s += i; i += 1; } print(s); }",
        );
        let out = attacked(&unit, AttackKind::ExtractBlock, 4);
        assert_eq!(out.ast.functions.len(), 2);
        assert!(out.ast.functions[1].ret.is_none());
        assert_eq!(rmt(&unit, &out, Approach::ExtLla), 0);
        assert!(rmt(&unit, &out, Approach::Lla) < 0);
        same_trace(&unit, &out, &[7]);
    }

    #[test]
    fn loop_conversion_round_trips_between_while_and_for() {
        let whiled = load("fn main() { int i = 0; while (i < 4) { print(i); i += 1; } }");
        let to_for = attacked(&whiled, AttackKind::WhileToFor, 1);
        assert!(to_for.text.contains("for ("));
        assert_eq!(units(&whiled, Approach::Lla), units(&to_for, Approach::Lla));
        assert_eq!(units(&whiled, Approach::ExtLla), units(&to_for, Approach::ExtLla));
        same_trace(&whiled, &to_for, &[]);

        let fored = load("fn main() { for (int i = 0; i < 4; i += 1) { print(i); } }");
        let to_while = attacked(&fored, AttackKind::WhileToFor, 1);
        assert!(to_while.text.contains("while ("));
        assert_eq!(units(&fored, Approach::Lla), units(&to_while, Approach::Lla));
        assert_eq!(units(&fored, Approach::ExtLla), units(&to_while, Approach::ExtLla));
        same_trace(&fored, &to_while, &[]);
    }

    #[test]
    fn do_while_conversion_guards_the_loop_and_picks_the_biggest() {
        let unit = load(
            "fn main() { int n = read(); int i = 0; while (i < n) { print(i); print(i * 2); print(i * 3); i += 1; } int j = n; while (j > 0) { j -= 1; } print(j); }",
        );
        let out = attacked(&unit, AttackKind::WhileToDowhile, 1);
        let stmts = &out.ast.functions[0].body.stmts;
        assert!(matches!(stmts[4], Stmt::While { .. }), "small loop untouched");
        let Stmt::If { then_block, els, .. } = &stmts[2] else { panic!("guard if") };
        assert!(els.is_none());
        assert!(matches!(then_block.stmts[..], [Stmt::DoWhile { .. }]));
        let ext = rmt(&unit, &out, Approach::ExtLla);
        let lla = rmt(&unit, &out, Approach::Lla);
        assert!(ext < lla, "ext {ext} lla {lla}");
        same_trace(&unit, &out, &[0]);
        same_trace(&unit, &out, &[3]);

        let fored = load(
            "fn main() { int n = read(); for (int i = 0; i < n; i += 1) { print(i); print(i + n); } }",
        );
        let out = attacked(&fored, AttackKind::WhileToDowhile, 1);
        let Stmt::Block { block, .. } = &out.ast.functions[0].body.stmts[1] else {
            panic!("for loop became a block")
        };
        assert!(matches!(block.stmts[0], Stmt::VarDecl { .. }), "init hoisted");
        assert!(matches!(block.stmts[1], Stmt::If { .. }), "guarded");
        same_trace(&fored, &out, &[0]);
        same_trace(&fored, &out, &[4]);
    }

    #[test]
    fn swapping_if_arms_negates_each_condition_form() {
        let cases = [
            ("fn main() { int a = read(); if (a < 3) { print(1); } else { print(2); } }", "a >= 3"),
            ("fn main() { int a = read(); if (true) { print(a); } else { print(2); } }", "false"),
            ("fn main() { int a = read(); if (!(a == 3)) { print(1); } else { print(2); } }", "a == 3"),
            (
                "fn main() { int a = read(); if (a == 1 && a < 9) { print(1); } else { print(2); } }",
                "!(a == 1 && a < 9)",
            ),
        ];
        for (text, want) in cases {
            let unit = load(text);
            let out = attacked(&unit, AttackKind::SwapIfArms, 1);
            assert!(out.text.contains(want), "{want} missing in {}", out.text);
            for input in [1, 3, 5] {
                same_trace(&unit, &out, &[input]);
            }
        }
    }

    #[test]
    fn expanding_compound_assignments_is_token_neutral() {
        let unit = load(
            "fn main() { int x = read(); int[] a = new int[4]; x += 2; a[x % 4] *= 3; print(x); print(a[0]); }",
        );
        let out = attacked(&unit, AttackKind::ExpandCompoundAssign, 1);
        assert!(out.text.contains("x = x + 2;"));
        assert!(out.text.contains("a[x % 4] = a[x % 4] * 3;"));
        assert_eq!(units(&unit, Approach::Lla), units(&out, Approach::Lla));
        assert_eq!(units(&unit, Approach::ExtLla), units(&out, Approach::ExtLla));
        same_trace(&unit, &out, &[6]);
        let plain = load("fn main() { int x = 1; x = x + 1; print(x); }");
        assert!(matches!(
            apply_attack(&plain, &spec(AttackKind::ExpandCompoundAssign, 1)),
            Err(AttackError::NotApplicable { .. })
        ));
    }

    #[test]
    fn switch_conversion_compiles_to_the_same_stream() {
        let unit = load(DRIVER);
        let out = attacked(&unit, AttackKind::SwitchToIfchain, 1);
        assert!(!out.text.contains("switch"));
        assert_eq!(units(&unit, Approach::Lla), units(&out, Approach::Lla));
        assert_eq!(units(&unit, Approach::ExtLla), units(&out, Approach::ExtLla));
        for input in [1, 2, 9] {
            same_trace(&unit, &out, &[input]);
        }
        let negative = load(
            "fn main() { int x = read(); switch (x) { case -1: print(1); default: print(0); } }",
        );
        assert!(matches!(
            apply_attack(&negative, &spec(AttackKind::SwitchToIfchain, 1)),
            Err(AttackError::NotApplicable { .. })
        ));
    }

    #[test]
    fn entry_artifact_renaming_disguises_nothing_inside() {
        let unit = load(DRIVER);
        let out = attacked(&unit, AttackKind::RenameEntryArtifacts, 9);
        assert_ne!(unit.origin, out.origin);
        assert!(out.origin.ends_with(".mj"));
        assert!(out.text.starts_with("//"));
        assert_eq!(rmt(&unit, &out, Approach::Sta), 0);
        same_trace(&unit, &out, &[4]);
    }

    #[test]
    fn logic_rewrites_are_never_derived() {
        let unit = load(DRIVER);
        assert!(matches!(
            apply_attack(&unit, &spec(AttackKind::LogicRewrite, 1)),
            Err(AttackError::NotApplicable { .. })
        ));
    }
}
