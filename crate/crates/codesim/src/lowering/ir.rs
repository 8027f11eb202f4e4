use std::collections::BTreeSet;
use std::fmt;

pub type Slot = u32;
pub type GlobalId = u32;
pub type FuncId = u32;
pub type LabelId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstValue {
    Int(i64),
    Bool(bool),
    Str(String),
}

impl fmt::Display for ConstValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstValue::Int(v) => write!(f, "{v}"),
            ConstValue::Bool(v) => write!(f, "{v}"),
            ConstValue::Str(v) => write!(f, "\"{v}\""),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    /// The comparison that holds exactly when `self` does not.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Lt => "LT",
            CmpOp::Le => "LE",
            CmpOp::Gt => "GT",
            CmpOp::Ge => "GE",
            CmpOp::Eq => "EQ",
            CmpOp::Ne => "NE",
        })
    }
}

/// One step of the lexical scope chain a token sits in. Loop and branch
/// bodies add a tag; conditions and branch bookkeeping stay at the enclosing
/// path. `for` loops never appear: they are rewritten to `while` before
/// scope assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScopeTag {
    Fn,
    WhileBody,
    DoWhileBody,
    Then,
    Else,
    CaseArm,
    DefaultArm,
}

impl fmt::Display for ScopeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScopeTag::Fn => "fn",
            ScopeTag::WhileBody => "while-body",
            ScopeTag::DoWhileBody => "dowhile-body",
            ScopeTag::Then => "then",
            ScopeTag::Else => "else",
            ScopeTag::CaseArm => "case-arm",
            ScopeTag::DefaultArm => "default-arm",
        })
    }
}

pub type ScopePath = Vec<ScopeTag>;

pub fn path_display(path: &[ScopeTag]) -> String {
    path.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("/")
}

/// Branch plan of a compiled `switch`: case values with their arm labels,
/// the optional default label, and the end label. No value match and no
/// default means control continues at `end`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchArms {
    pub cases: Vec<(i64, LabelId)>,
    pub default: Option<LabelId>,
    pub end: LabelId,
}

/// Instruction plus operand. Branch targets are `Option` so generalization
/// can erase them in place.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Op {
    Const(ConstValue),
    Load(Slot),
    Store(Slot),
    GLoad(GlobalId),
    GStore(GlobalId),
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Neg,
    Not,
    IfCmp { op: CmpOp, target: Option<LabelId> },
    IfFalse { target: Option<LabelId> },
    Goto { target: Option<LabelId> },
    Switch(SwitchArms),
    Label(LabelId),
    Invoke { func: FuncId, argc: u32, returns: bool },
    Return,
    RetVal,
    Print,
    Read,
    NewArray,
    ALoadIdx,
    AStoreIdx,
}

impl Op {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Op::Const(_) => "CONST",
            Op::Load(_) => "LOAD",
            Op::Store(_) => "STORE",
            Op::GLoad(_) => "GLOAD",
            Op::GStore(_) => "GSTORE",
            Op::Add => "ADD",
            Op::Sub => "SUB",
            Op::Mul => "MUL",
            Op::Div => "DIV",
            Op::Rem => "REM",
            Op::Neg => "NEG",
            Op::Not => "NOT",
            Op::IfCmp { .. } => "IFCMP",
            Op::IfFalse { .. } => "IFFALSE",
            Op::Goto { .. } => "GOTO",
            Op::Switch(_) => "SWITCH",
            Op::Label(_) => "LABEL",
            Op::Invoke { .. } => "INVOKE",
            Op::Return => "RETURN",
            Op::RetVal => "RETVAL",
            Op::Print => "PRINT",
            Op::Read => "READ",
            Op::NewArray => "NEWARRAY",
            Op::ALoadIdx => "ALOADIDX",
            Op::AStoreIdx => "ASTOREIDX",
        }
    }

    /// Operand as rendered in dumps, if any.
    pub fn operand_display(&self) -> Option<String> {
        match self {
            Op::Const(v) => Some(v.to_string()),
            Op::Load(s) | Op::Store(s) => Some(s.to_string()),
            Op::GLoad(g) | Op::GStore(g) => Some(g.to_string()),
            Op::IfCmp { op, target: Some(t) } => Some(format!("{op} L{t}")),
            Op::IfCmp { op, target: None } => Some(op.to_string()),
            Op::IfFalse { target: Some(t) } | Op::Goto { target: Some(t) } => Some(format!("L{t}")),
            Op::IfFalse { target: None } | Op::Goto { target: None } => None,
            Op::Switch(arms) => Some(arms.cases.len().to_string()),
            Op::Label(l) => Some(format!("L{l}")),
            Op::Invoke { func, argc, .. } => Some(format!("{func}/{argc}")),
            _ => None,
        }
    }

    /// `(consumed, produced)` stack effect.
    pub fn stack_effect(&self) -> (u32, u32) {
        match self {
            Op::Const(_) | Op::Load(_) | Op::GLoad(_) | Op::Read => (0, 1),
            Op::Store(_) | Op::GStore(_) | Op::IfFalse { .. } | Op::Print | Op::RetVal => (1, 0),
            Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Rem | Op::ALoadIdx => (2, 1),
            Op::Neg | Op::Not | Op::NewArray => (1, 1),
            Op::IfCmp { .. } => (2, 0),
            Op::Switch(_) => (1, 0),
            Op::Goto { .. } | Op::Label(_) | Op::Return => (0, 0),
            Op::Invoke { argc, returns, .. } => (*argc, u32::from(*returns)),
            Op::AStoreIdx => (3, 0),
        }
    }

    /// Branch, label, and return tokens delimit basic blocks; backward stack
    /// scans must not cross them.
    pub fn is_block_boundary(&self) -> bool {
        matches!(
            self,
            Op::IfCmp { .. }
                | Op::IfFalse { .. }
                | Op::Goto { .. }
                | Op::Switch(_)
                | Op::Label(_)
                | Op::Return
                | Op::RetVal
        )
    }
}

#[derive(Clone, Debug)]
pub struct LowToken {
    pub op: Op,
    pub path: ScopePath,
    /// Source line of the construct the token came from; diagnostics only.
    pub line: u32,
}

impl LowToken {
    pub fn render(&self) -> String {
        let path = path_display(&self.path);
        match self.op.operand_display() {
            Some(operand) => format!("{} {} @ {}", self.op.mnemonic(), operand, path),
            None => format!("{} @ {}", self.op.mnemonic(), path),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LowFunction {
    pub id: FuncId,
    pub name: String,
    pub param_count: u32,
    pub returns_value: bool,
    pub body: Vec<LowToken>,
}

impl LowFunction {
    pub fn invoked(&self) -> BTreeSet<FuncId> {
        self.body
            .iter()
            .filter_map(|t| match t.op {
                Op::Invoke { func, .. } => Some(func),
                _ => None,
            })
            .collect()
    }
}

pub const INIT_NAME: &str = "<init>";

#[derive(Clone, Debug)]
pub struct LowProgram {
    /// Declaration order, with the synthetic global initializer (if any
    /// global carries an initializer) appended last under [`INIT_NAME`].
    pub functions: Vec<LowFunction>,
    pub entry: FuncId,
    pub global_names: Vec<String>,
}

impl LowProgram {
    pub fn function(&self, id: FuncId) -> &LowFunction {
        &self.functions[id as usize]
    }
}
