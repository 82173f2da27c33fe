//! Full-length answer generation from a question and its extracted factoid
//! (or yes/no) answer, driven by precomputed constituency and dependency
//! parses, plus the evaluation tooling around it.

pub mod analysis;
pub mod corpus;
pub mod corrector;
pub mod diagnostics;
pub mod metrics;
pub mod parsetree;
pub mod rules;
