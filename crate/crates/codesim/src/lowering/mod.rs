//! Lowering from the source AST to a stack-machine token stream.
//!
//! Every token carries a mnemonic, an optional operand, and the scope path
//! of the construct it belongs to. Conditions and branch bookkeeping sit at
//! the enclosing path; only statements inside a loop body or branch arm get
//! the extra tag.

pub mod compile;
pub mod dump;
pub mod ir;
pub mod stack;

pub use compile::{compile, CompileError};
pub use dump::{dump_function, dump_program};
pub use ir::{
    path_display, CmpOp, ConstValue, FuncId, GlobalId, LabelId, LowFunction, LowProgram, LowToken,
    Op, ScopePath, ScopeTag, Slot, SwitchArms, INIT_NAME,
};
pub use stack::{verify_labels, verify_stack};
