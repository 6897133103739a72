//! Interpreter toolchain for Clerical, an imperative language for exact real
//! number computation with limits and nondeterministic guarded choice.

pub mod corpus;
pub mod eval;
pub mod numerics;
pub mod oracle;
pub mod parser;
pub mod syntax;
pub mod typecheck;
