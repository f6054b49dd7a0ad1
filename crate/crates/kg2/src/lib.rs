//! Decision procedures for the paraconsistent bi-relational Gödel modal
//! logic KG2± over finitely branching frames.
//!
//! The crate provides:
//!
//! - a parser and printer for the ASCII formula syntax ([`parse`], [`syntax`]);
//! - exact-rational evaluation on explicit fuzzy bi-relational Kripke models
//!   ([`eval`], [`model`], [`value`]);
//! - a constraint-tableau prover with countermodel extraction ([`tableau`]);
//! - a labelled-value grid solver with branch-at-a-time memory ([`labelled`]);
//! - brute-force grid oracles for cross-checking verdicts ([`oracle`]);
//! - frame-property reports, the star-conflation and splitting constructions,
//!   and definability test harnesses ([`frames`]);
//! - satisfiability/falsifiability and classical-K reductions ([`reductions`]).

pub mod eval;
pub mod frames;
pub mod labelled;
pub mod model;
pub mod oracle;
pub mod parse;
pub mod reductions;
pub mod syntax;
pub mod tableau;
pub mod value;

pub use eval::{check_valid_on_model, eval, ModelCheck};
pub use labelled::{labelled_solve, LabelledOutcome};
pub use model::{Frame, Model, Side, Sign};
pub use oracle::{oracle_sat, oracle_valid, OracleBudget};
pub use parse::{parse, ParseError};
pub use syntax::{CoreFormula, Formula};
pub use tableau::{check_sat, prove_valid, Limits, ProveOutcome, SatOutcome};
pub use value::{TruthPair, Value};
