use crate::lowering::{LowToken, Op};

use super::value_start;

/// Deletes the token run that produces each call's arguments, leaving the
/// INVOKE itself. Runs on generalized bodies. A run that cannot be isolated
/// (its backward scan crosses a branch or the body start) is kept and noted;
/// the stream is never abandoned over it.
pub fn remove_arguments(body: &mut Vec<LowToken>, fn_name: &str, notes: &mut Vec<String>) {
    let mut i = body.len();
    while i > 0 {
        i -= 1;
        if let Op::Invoke { argc, .. } = body[i].op {
            if argc == 0 {
                continue;
            }
            match value_start(body, i, argc) {
                Some(start) => {
                    body.drain(start..i);
                    i = start;
                }
                None => {
                    notes.push(format!("{fn_name}: kept arguments of call at token {i}"));
                }
            }
        }
    }
}
