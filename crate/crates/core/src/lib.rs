//! Bounded equivalence checking for a practical SQL fragment with integrity
//! constraints.
//!
//! Two queries are checked over every database whose relations hold at most N
//! rows: the schema is compiled to a symbolic database of uninterpreted
//! tuples, constraints and query semantics become one quantifier-free formula
//! over integers with uninterpreted functions, and an SMT solver either
//! certifies bounded equivalence or produces a concrete counterexample
//! database, which is re-validated against a reference interpreter.

pub mod ast;
pub mod constraints;
pub mod encode;
pub mod enumerate;
pub mod equiv;
pub mod error;
pub mod eval;
pub mod formula;
pub mod infer;
pub mod lexer;
pub mod model;
pub mod par;
pub mod parser;
pub mod problem;
pub mod resolve;
pub mod sexpr;
pub mod solver;
pub mod symdb;
pub mod value;
pub mod verify;
pub mod wf;

pub use error::{Error, Result};
