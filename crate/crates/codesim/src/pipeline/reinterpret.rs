use crate::lowering::{ConstValue, LabelId, LowToken, Op, ScopeTag};

use super::value_start;

/// Rewrites every `switch` region into the stream the equivalent `else if`
/// ladder compiles to: per arm, the scrutinee is re-emitted, compared
/// against the case value with IFCMP NE, and the arm body is re-rooted as a
/// then-branch nested one `else` deeper per preceding arm. A switch whose
/// scrutinee cannot be carved out of the stream is left alone and noted.
pub fn rewrite_switches(
    body: Vec<LowToken>,
    fn_name: &str,
    notes: &mut Vec<String>,
) -> Vec<LowToken> {
    let mut next_label = next_free_label(&body);
    rewrite(body, &mut next_label, fn_name, notes)
}

fn next_free_label(body: &[LowToken]) -> LabelId {
    let mut max = None;
    let mut see = |l: Option<LabelId>| {
        if let Some(l) = l {
            max = Some(max.map_or(l, |m: LabelId| m.max(l)));
        }
    };
    for t in body {
        match &t.op {
            Op::Label(l) => see(Some(*l)),
            Op::IfCmp { target, .. } | Op::IfFalse { target } | Op::Goto { target } => see(*target),
            Op::Switch(arms) => {
                for (_, l) in &arms.cases {
                    see(Some(*l));
                }
                see(arms.default);
                see(Some(arms.end));
            }
            _ => {}
        }
    }
    max.map_or(0, |m| m + 1)
}

fn fresh(next: &mut LabelId) -> LabelId {
    let l = *next;
    *next += 1;
    l
}

fn rewrite(
    mut body: Vec<LowToken>,
    next: &mut LabelId,
    fn_name: &str,
    notes: &mut Vec<String>,
) -> Vec<LowToken> {
    let mut cursor = 0;
    loop {
        let si = body
            .iter()
            .enumerate()
            .skip(cursor)
            .find_map(|(i, t)| matches!(t.op, Op::Switch(_)).then_some(i));
        let Some(si) = si else { return body };
        match rewrite_one(&body, si, next, fn_name, notes) {
            Some((start, end, replacement)) => {
                body.splice(start..=end, replacement);
            }
            None => {
                notes.push(format!("{fn_name}: switch at token {si} left in place"));
                cursor = si + 1;
            }
        }
    }
}

/// On success returns the replaced range (inclusive) and its replacement.
fn rewrite_one(
    body: &[LowToken],
    si: usize,
    next: &mut LabelId,
    fn_name: &str,
    notes: &mut Vec<String>,
) -> Option<(usize, usize, Vec<LowToken>)> {
    let Op::Switch(arms) = body[si].op.clone() else { unreachable!() };
    let e_start = value_start(body, si, 1)?;
    let pos = |l: LabelId| body.iter().position(|t| matches!(t.op, Op::Label(x) if x == l));
    let end_pos = pos(arms.end)?;
    let line = body[si].line;
    let p = body[si].path.clone();

    let mut arm_slices = Vec::with_capacity(arms.cases.len());
    for (i, (_, label)) in arms.cases.iter().enumerate() {
        let from = pos(*label)? + 1;
        let to = match arms.cases.get(i + 1) {
            Some((_, l)) => pos(*l)?,
            None => match arms.default {
                Some(d) => pos(d)?,
                None => end_pos,
            },
        };
        let mut slice = body[from..to].to_vec();
        if matches!(slice.last().map(|t| &t.op), Some(Op::Goto { target: Some(t) }) if *t == arms.end)
        {
            slice.pop();
        }
        arm_slices.push(rewrite(slice, next, fn_name, notes));
    }
    let default_slice = match arms.default {
        Some(d) => Some(rewrite(body[pos(d)? + 1..end_pos].to_vec(), next, fn_name, notes)),
        None => None,
    };

    let scrutinee = &body[e_start..si];
    let strip = p.len() + 1;
    let shared_end = fresh(next);
    let mut out = Vec::new();
    for (i, (case_value, _)) in arms.cases.iter().enumerate() {
        let mut pi = p.clone();
        pi.extend(std::iter::repeat(ScopeTag::Else).take(i));
        for t in scrutinee {
            out.push(LowToken { op: t.op.clone(), path: pi.clone(), line: t.line });
        }
        out.push(LowToken { op: Op::Const(ConstValue::Int(*case_value)), path: pi.clone(), line });
        let skip = fresh(next);
        out.push(LowToken {
            op: Op::IfCmp { op: crate::lowering::CmpOp::Ne, target: Some(skip) },
            path: pi.clone(),
            line,
        });
        let mut then_prefix = pi.clone();
        then_prefix.push(ScopeTag::Then);
        for t in &arm_slices[i] {
            let mut path = then_prefix.clone();
            path.extend_from_slice(t.path.get(strip..).unwrap_or(&[]));
            out.push(LowToken { op: t.op.clone(), path, line: t.line });
        }
        if i + 1 < arms.cases.len() || default_slice.is_some() {
            out.push(LowToken {
                op: Op::Goto { target: Some(shared_end) },
                path: pi.clone(),
                line,
            });
        }
        out.push(LowToken { op: Op::Label(skip), path: pi, line });
    }
    if let Some(default) = &default_slice {
        let mut pd = p.clone();
        pd.extend(std::iter::repeat(ScopeTag::Else).take(arms.cases.len()));
        for t in default {
            let mut path = pd.clone();
            path.extend_from_slice(t.path.get(strip..).unwrap_or(&[]));
            out.push(LowToken { op: t.op.clone(), path, line: t.line });
        }
    }
    out.push(LowToken { op: Op::Label(shared_end), path: p, line });
    Some((e_start, end_pos, out))
}
