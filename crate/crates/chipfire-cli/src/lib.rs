//! Graph text format and report schema behind the `chipfire` binary.

pub mod format;
pub mod report;
