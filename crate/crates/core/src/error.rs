use thiserror::Error;

use crate::program::PredKey;

/// Failures of the fixpoint engine itself (as opposed to checking verdicts).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("unknown predicate {0}")]
    UnknownPredicate(PredKey),
    #[error("unknown builtin {0}")]
    UnknownBuiltin(String),
    #[error("literal not in normal form: {0}")]
    NotNormalized(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
}

/// Which part of a package disagrees with the checker's inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MismatchField {
    Digest,
    Domain,
    Strategy,
    EntryPoints,
    Kind,
}

impl std::fmt::Display for MismatchField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MismatchField::Digest => "source digest",
            MismatchField::Domain => "domain id",
            MismatchField::Strategy => "strategy id",
            MismatchField::EntryPoints => "entry points",
            MismatchField::Kind => "certificate kind",
        })
    }
}

/// Reasons a checker rejects a certificate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    /// The certificate's answer and the checker's do not agree.
    #[error("answer mismatch for {key}: checker computed {checker}, certificate has {certificate}")]
    AnswerMismatch {
        key: String,
        checker: String,
        certificate: String,
    },
    /// Some arc would be traversed a second time.
    #[error("recomputation required: arc {slot} on {callee} reached u={u}")]
    RecomputationRequired { slot: String, callee: String, u: u32 },
    #[error("package mismatch on {field}: expected {expected}, found {found}")]
    PackageMismatch {
        field: MismatchField,
        expected: String,
        found: String,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
