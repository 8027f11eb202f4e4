use crate::lowering::{LowToken, Op};

/// Drops label pseudo-tokens and erases branch targets so token comparison
/// survives label renumbering. Comparison operators keep their kind; the
/// target side of IFCMP, IFFALSE, and GOTO is cleared in place.
pub fn generalize(body: &mut Vec<LowToken>) {
    body.retain(|t| !matches!(t.op, Op::Label(_)));
    for t in body.iter_mut() {
        match &mut t.op {
            Op::IfCmp { target, .. } => *target = None,
            Op::IfFalse { target } => *target = None,
            Op::Goto { target } => *target = None,
            _ => {}
        }
    }
}
