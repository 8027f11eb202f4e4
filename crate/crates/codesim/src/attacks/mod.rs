//! Source-to-source disguise transforms and the attack corpus built from
//! them.
//!
//! Every attack takes a parsed program and produces a rewritten program that
//! behaves identically on the same input script. Attacks are grouped into
//! difficulty levels, from lexical noise (comments, whitespace) up to
//! structural rewrites (loop conversion, function inlining). The corpus
//! generator applies them to seed programs and validates behavioural
//! equivalence with the reference evaluator before committing a case.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::FrontendError;

pub mod apply;
pub mod corpus;
pub mod eval;
pub mod rewrite;

pub use apply::apply_attack;
pub use corpus::{generate_corpus, CorpusConfig, CorpusError, Manifest};
pub use eval::{evaluate, parse_input_script, EvalError};

/// Every disguise this toolkit can apply, tagged with the difficulty level
/// it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    CommentStrip,
    WhitespaceReflow,
    RenameLocals,
    RenameFunctions,
    RelocateDeclInBlock,
    RelocateDeclToGlobal,
    RelocateDeclOutOfLoop,
    InlineFunction,
    ExtractBlock,
    WhileToFor,
    WhileToDowhile,
    SwapIfArms,
    ExpandCompoundAssign,
    SwitchToIfchain,
    LogicRewrite,
    RenameEntryArtifacts,
}

impl AttackKind {
    pub const ALL: [AttackKind; 16] = [
        AttackKind::CommentStrip,
        AttackKind::WhitespaceReflow,
        AttackKind::RenameLocals,
        AttackKind::RenameFunctions,
        AttackKind::RelocateDeclInBlock,
        AttackKind::RelocateDeclToGlobal,
        AttackKind::RelocateDeclOutOfLoop,
        AttackKind::InlineFunction,
        AttackKind::ExtractBlock,
        AttackKind::WhileToFor,
        AttackKind::WhileToDowhile,
        AttackKind::SwapIfArms,
        AttackKind::ExpandCompoundAssign,
        AttackKind::SwitchToIfchain,
        AttackKind::LogicRewrite,
        AttackKind::RenameEntryArtifacts,
    ];

    /// The lowest difficulty level the attack counts toward.
    pub fn min_level(self) -> u8 {
        match self {
            AttackKind::CommentStrip | AttackKind::WhitespaceReflow => 1,
            AttackKind::RenameLocals | AttackKind::RenameFunctions => 2,
            AttackKind::RelocateDeclInBlock
            | AttackKind::RelocateDeclToGlobal
            | AttackKind::RelocateDeclOutOfLoop => 3,
            AttackKind::InlineFunction | AttackKind::ExtractBlock => 4,
            AttackKind::WhileToFor
            | AttackKind::WhileToDowhile
            | AttackKind::SwapIfArms
            | AttackKind::ExpandCompoundAssign
            | AttackKind::SwitchToIfchain => 5,
            AttackKind::LogicRewrite => 6,
            AttackKind::RenameEntryArtifacts => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::CommentStrip => "comment-strip",
            AttackKind::WhitespaceReflow => "whitespace-reflow",
            AttackKind::RenameLocals => "rename-locals",
            AttackKind::RenameFunctions => "rename-functions",
            AttackKind::RelocateDeclInBlock => "relocate-decl-in-block",
            AttackKind::RelocateDeclToGlobal => "relocate-decl-to-global",
            AttackKind::RelocateDeclOutOfLoop => "relocate-decl-out-of-loop",
            AttackKind::InlineFunction => "inline-function",
            AttackKind::ExtractBlock => "extract-block",
            AttackKind::WhileToFor => "while-to-for",
            AttackKind::WhileToDowhile => "while-to-dowhile",
            AttackKind::SwapIfArms => "swap-if-arms",
            AttackKind::ExpandCompoundAssign => "expand-compound-assign",
            AttackKind::SwitchToIfchain => "switch-to-ifchain",
            AttackKind::LogicRewrite => "logic-rewrite",
            AttackKind::RenameEntryArtifacts => "rename-entry-artifacts",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<AttackKind, String> {
        AttackKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown attack kind `{s}`"))
    }
}

/// One attack application: which disguise, at which level it is counted,
/// and the seed that fixes every random choice inside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub level: u8,
    pub kind: AttackKind,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum AttackError {
    /// The program has no site the attack could rewrite.
    #[error("{kind} does not apply: {reason}")]
    NotApplicable { kind: AttackKind, reason: String },
    /// A rewritten program failed to re-parse; always a bug in a transform.
    #[error("rewritten program did not reload: {0}")]
    Reload(#[from] FrontendError),
}

impl AttackError {
    pub fn not_applicable(kind: AttackKind, reason: impl Into<String>) -> AttackError {
        AttackError::NotApplicable { kind, reason: reason.into() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for kind in AttackKind::ALL {
            assert_eq!(kind.name().parse::<AttackKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
            assert_eq!(serde_json::from_str::<AttackKind>(&json).unwrap(), kind);
        }
        assert!("rename-everything".parse::<AttackKind>().is_err());
    }

    #[test]
    fn levels_cover_the_ladder() {
        let mut seen = [false; 6];
        for kind in AttackKind::ALL {
            let level = kind.min_level();
            assert!((1..=6).contains(&level));
            seen[level as usize - 1] = true;
        }
        assert_eq!(seen, [true; 6]);
    }
}
