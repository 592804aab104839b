//! A workbench for classical natural deduction presented as a typed proof-term
//! calculus with a reductio-ad-absurdum binder. The crate provides the syntax
//! and typing of the calculus, its labeled reduction rules, the De Morgan
//! translation eliminating disjunction and the follow-up translation
//! eliminating conjunction, step- and sequence-level simulation certificates
//! for both translations, postponement of the auxiliary rules, exhaustive
//! enumeration of small well-typed terms, and batch verification suites over
//! the enumerated corpus.

pub mod concrete;
pub mod conjfree;
pub mod demorgan;
pub mod gen;
pub mod rewrite;
pub mod suites;
pub mod syntax;
pub mod typing;
