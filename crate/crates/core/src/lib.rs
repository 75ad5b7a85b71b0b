//! Abstraction-carrying code for normalized logic programs.
//!
//! A producer runs a fixpoint analysis over an abstract domain, checks the
//! result against a safety policy and ships the answer table (or only its
//! relevant entries) as a certificate. A consumer re-validates the
//! certificate in a single pass.

pub mod bench;
pub mod certify;
pub mod check;
pub mod domain;
pub mod engine;
pub mod error;
pub mod package;
pub mod pipeline;
pub mod program;

pub use certify::{certifier_f, certifier_r, CertKind, Certificate, SafetyPolicy};
pub use check::{check_certificate, checker_f, checker_r, CheckReport, Verdict};
pub use domain::{Domain, DomainKind, GroundDomain, TypeDomain};
pub use engine::{analyze_f, analyze_r, Strategy};
pub use error::{AnalysisError, CheckError};
