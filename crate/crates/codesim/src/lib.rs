//! Token-based plagiarism detection for MiniJ sources.
//!
//! The crate compares programs under three approaches: raw source token
//! streams (STA), generalized stack-IR token streams per function (LLA), and
//! the extended variant with flow-scoped keys, argument removal, and invoked
//! method removal (Ext-LLA). A corpus generator produces leveled attack
//! variants of seed programs, and the harness ranks the approaches over a
//! generated corpus.

pub mod attacks;
pub mod cli;
pub mod frontend;
pub mod harness;
pub mod lowering;
pub mod matcher;
pub mod pipeline;
