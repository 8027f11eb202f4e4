use super::ir::{LowFunction, LowProgram};

/// Renders one function as a `== name/paramcount ==` header followed by one
/// line per token. Lines are LF-terminated; output is byte-stable for a
/// given program.
pub fn dump_function(f: &LowFunction) -> String {
    let mut out = format!("== {}/{} ==\n", f.name, f.param_count);
    for token in &f.body {
        out.push_str(&token.render());
        out.push('\n');
    }
    out
}

pub fn dump_program(p: &LowProgram) -> String {
    p.functions.iter().map(dump_function).collect()
}
