//! Program representation: terms, rules, the surface parser, normalization
//! into base form and canonical call keys.

mod canonical;
mod normalize;
mod parser;
mod term;

pub use canonical::{canonical_var, canonicalize, CallKey, Renaming};
pub use normalize::normalize;
pub use parser::{parse, parse_atom, ParseError};
pub use term::{Atom, Constraint, Literal, PredKey, Program, Rule, Term, Var, RESERVED_VAR_PREFIX};
