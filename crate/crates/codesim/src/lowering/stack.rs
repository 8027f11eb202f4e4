use std::collections::HashMap;

use super::ir::{LabelId, LowFunction, Op};

/// Checks that every control-flow path through a compiled body keeps a
/// consistent operand-stack depth: never negative, depth 0 at RETURN and at
/// RETVAL (after it pops the result), and every join point reached at one
/// depth only. Runs on bodies whose branch targets are still present.
pub fn verify_stack(f: &LowFunction) -> Result<(), String> {
    let fail = |i: usize, msg: &str| Err(format!("{}: token {i}: {msg}", f.name));

    let mut label_at: HashMap<LabelId, usize> = HashMap::new();
    for (i, t) in f.body.iter().enumerate() {
        if let Op::Label(l) = t.op {
            if label_at.insert(l, i).is_some() {
                return fail(i, &format!("label L{l} defined twice"));
            }
        }
    }
    let resolve = |l: Option<LabelId>, i: usize| -> Result<usize, String> {
        let l = l.ok_or_else(|| format!("{}: token {i}: erased branch target", f.name))?;
        label_at
            .get(&l)
            .copied()
            .ok_or_else(|| format!("{}: token {i}: undefined label L{l}", f.name))
    };

    if f.body.is_empty() {
        return Err(format!("{}: empty body", f.name));
    }

    let mut seen: HashMap<usize, i64> = HashMap::new();
    let mut work = vec![(0usize, 0i64)];
    while let Some((mut i, mut depth)) = work.pop() {
        loop {
            if i >= f.body.len() {
                return fail(i, "control runs off the end of the body");
            }
            match seen.entry(i) {
                std::collections::hash_map::Entry::Occupied(e) => {
                    if *e.get() != depth {
                        return fail(i, &format!("depth {} vs {} at join", e.get(), depth));
                    }
                    break;
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(depth);
                }
            }
            let op = &f.body[i].op;
            let (consumed, produced) = op.stack_effect();
            depth -= i64::from(consumed);
            if depth < 0 {
                return fail(i, "stack underflow");
            }
            depth += i64::from(produced);
            match op {
                Op::Return | Op::RetVal => {
                    if depth != 0 {
                        return fail(i, &format!("returns at depth {depth}"));
                    }
                    break;
                }
                Op::Goto { target } => {
                    i = resolve(*target, i)?;
                }
                Op::IfCmp { target, .. } | Op::IfFalse { target } => {
                    work.push((resolve(*target, i)?, depth));
                    i += 1;
                }
                Op::Switch(arms) => {
                    for (_, l) in &arms.cases {
                        work.push((resolve(Some(*l), i)?, depth));
                    }
                    match arms.default {
                        Some(d) => work.push((resolve(Some(d), i)?, depth)),
                        None => work.push((resolve(Some(arms.end), i)?, depth)),
                    }
                    break;
                }
                _ => i += 1,
            }
        }
    }
    Ok(())
}

/// Every referenced label must be defined in the same body. Holds for
/// compiled output and is preserved by the switch rewrite.
pub fn verify_labels(f: &LowFunction) -> Result<(), String> {
    let defined: Vec<LabelId> = f
        .body
        .iter()
        .filter_map(|t| match t.op {
            Op::Label(l) => Some(l),
            _ => None,
        })
        .collect();
    let check = |l: Option<LabelId>, i: usize| -> Result<(), String> {
        match l {
            Some(l) if !defined.contains(&l) => {
                Err(format!("{}: token {i}: undefined label L{l}", f.name))
            }
            _ => Ok(()),
        }
    };
    for (i, t) in f.body.iter().enumerate() {
        match &t.op {
            Op::IfCmp { target, .. } | Op::IfFalse { target } | Op::Goto { target } => {
                check(*target, i)?;
            }
            Op::Switch(arms) => {
                for (_, l) in &arms.cases {
                    check(Some(*l), i)?;
                }
                check(arms.default, i)?;
                check(Some(arms.end), i)?;
            }
            _ => {}
        }
    }
    Ok(())
}
