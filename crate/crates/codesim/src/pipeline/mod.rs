//! Turns a parsed source file into the comparison units each approach
//! matches on.
//!
//! The source approach tokenizes whole files. The other two compile to
//! stack code first, rewrite `switch` into its if-chain form, generalize
//! away labels and branch targets, and inline calls across components of
//! the call graph. The scoped approach additionally removes argument
//! tokens, keys every token by its scope path, and keeps only root units.

pub mod argremove;
pub mod generalize;
pub mod linearize;
pub mod pool;
pub mod reinterpret;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::frontend::SourceUnit;
use crate::lowering::{compile, CompileError, LowProgram, LowToken};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approach {
    Sta,
    Lla,
    ExtLla,
}

pub const APPROACHES: [Approach; 3] = [Approach::Sta, Approach::Lla, Approach::ExtLla];

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::Sta => "sta",
            Approach::Lla => "lla",
            Approach::ExtLla => "ext-lla",
        })
    }
}

impl FromStr for Approach {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sta" => Ok(Approach::Sta),
            "lla" => Ok(Approach::Lla),
            "ext-lla" => Ok(Approach::ExtLla),
            other => Err(format!("unknown approach `{other}` (expected sta, lla, or ext-lla)")),
        }
    }
}

/// One comparable stream: a whole file for the source approach, otherwise
/// one function.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CompareUnit {
    pub name: String,
    pub keys: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct BuildOutput {
    pub units: Vec<CompareUnit>,
    /// Heuristic fallbacks taken while building, e.g. an argument run that
    /// could not be isolated. Never fatal.
    pub notes: Vec<String>,
}

pub fn build_units(src: &SourceUnit, approach: Approach) -> Result<BuildOutput, CompileError> {
    match approach {
        Approach::Sta => Ok(build_sta(src)),
        Approach::Lla => Ok(build_lla(&compile(&src.ast)?)),
        Approach::ExtLla => Ok(build_ext(&compile(&src.ast)?)),
    }
}

pub fn build_sta(src: &SourceUnit) -> BuildOutput {
    let keys = src.tokens.iter().map(|t| format!("{}:{}", t.kind, t.lexeme)).collect();
    BuildOutput { units: vec![CompareUnit { name: src.origin.clone(), keys }], notes: Vec::new() }
}

pub fn build_lla(program: &LowProgram) -> BuildOutput {
    let (bodies, notes) = transformed_bodies(program, false);
    let units = program
        .functions
        .iter()
        .map(|f| CompareUnit {
            name: f.name.clone(),
            keys: bodies[&f.id].iter().map(lla_key).collect(),
        })
        .collect();
    BuildOutput { units, notes }
}

pub fn build_ext(program: &LowProgram) -> BuildOutput {
    let (bodies, notes) = transformed_bodies(program, true);
    let keep = pool::ext_unit_ids(program);
    let units = program
        .functions
        .iter()
        .filter(|f| keep.contains(&f.id))
        .map(|f| CompareUnit {
            name: f.name.clone(),
            keys: bodies[&f.id].iter().map(|t| t.render()).collect(),
        })
        .collect();
    BuildOutput { units, notes }
}

/// Mnemonic plus operand, no scope path.
fn lla_key(t: &LowToken) -> String {
    match t.op.operand_display() {
        Some(operand) => format!("{} {}", t.op.mnemonic(), operand),
        None => t.op.mnemonic().to_string(),
    }
}

fn transformed_bodies(
    program: &LowProgram,
    remove_args: bool,
) -> (std::collections::BTreeMap<crate::lowering::FuncId, Vec<LowToken>>, Vec<String>) {
    let mut notes = Vec::new();
    let mut bodies = std::collections::BTreeMap::new();
    for f in &program.functions {
        let mut body = reinterpret::rewrite_switches(f.body.clone(), &f.name, &mut notes);
        generalize::generalize(&mut body);
        if remove_args {
            argremove::remove_arguments(&mut body, &f.name, &mut notes);
        }
        bodies.insert(f.id, body);
    }
    (linearize::linearize_all(program, &bodies), notes)
}

/// Backward stack scan: the smallest `start` such that `body[start..end]`
/// nets exactly `need` pushed values. Fails on any basic-block boundary,
/// since the producing run must be straight-line code.
pub(crate) fn value_start(body: &[LowToken], end: usize, need: u32) -> Option<usize> {
    let mut need = i64::from(need);
    let mut i = end;
    while i > 0 {
        i -= 1;
        let op = &body[i].op;
        if op.is_block_boundary() {
            return None;
        }
        let (consumed, produced) = op.stack_effect();
        need = need - i64::from(produced) + i64::from(consumed);
        if need == 0 {
            return Some(i);
        }
        if need < 0 {
            return None;
        }
    }
    None
}
