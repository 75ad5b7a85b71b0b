//! Producer side: full and reduced certificates, and the verification
//! condition `table ⊑ policy`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::domain::{Domain, Lattice, Pattern};
use crate::engine::{analyze_f, analyze_r, Analysis, AnswerTable, Strategy};
use crate::error::AnalysisError;
use crate::program::{CallKey, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CertKind {
    Full,
    Reduced,
}

impl CertKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CertKind::Full => "full",
            CertKind::Reduced => "reduced",
        }
    }
}

impl fmt::Display for CertKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A set of answer-table entries plus everything a checker needs to
/// regenerate the verification condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate<V> {
    pub kind: CertKind,
    pub domain: String,
    pub strategy: String,
    /// `sha256:<hex>` of the normalized program's canonical text.
    pub digest: String,
    pub entry_points: BTreeSet<CallKey<V>>,
    pub entries: AnswerTable<V>,
}

impl<V: Lattice> Certificate<V> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry_points_vec(&self) -> Vec<CallKey<V>> {
        self.entry_points.iter().cloned().collect()
    }
}

/// An abstract safety policy: entries `A:CP ↦ AP` that the analysis
/// answers must lie below.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyPolicy<V> {
    pub domain: String,
    pub entries: AnswerTable<V>,
}

impl<V: Lattice> SafetyPolicy<V> {
    pub fn new(domain: &str, entries: AnswerTable<V>) -> Self {
        SafetyPolicy {
            domain: domain.to_string(),
            entries,
        }
    }
}

/// One policy entry the table fails to respect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation<V> {
    pub key: CallKey<V>,
    pub allowed: Pattern<V>,
    pub actual: Pattern<V>,
}

/// Outcome of checking a table against a policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyReport<V> {
    pub violations: Vec<Violation<V>>,
    /// Policy keys the table has no entry for; satisfied as ⊥.
    pub vacuous: Vec<CallKey<V>>,
}

impl<V> PolicyReport<V> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl<V: Lattice> fmt::Display for PolicyReport<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            f.write_str("policy satisfied")?;
        } else {
            write!(f, "policy violated by {} entr", self.violations.len())?;
            f.write_str(if self.violations.len() == 1 { "y" } else { "ies" })?;
        }
        for v in &self.violations {
            write!(f, "\n  {}: answer {} not below {}", v.key, v.actual, v.allowed)?;
        }
        for k in &self.vacuous {
            write!(f, "\n  {k}: not reached (vacuous)")?;
        }
        Ok(())
    }
}

/// Checks `table ⊑ policy` entry-wise. Missing table entries count as ⊥.
pub fn check_policy<V: Lattice>(table: &AnswerTable<V>, policy: &SafetyPolicy<V>) -> PolicyReport<V> {
    let mut report = PolicyReport {
        violations: Vec::new(),
        vacuous: Vec::new(),
    };
    for (key, allowed) in &policy.entries {
        match table.get(key) {
            None => report.vacuous.push(key.clone()),
            Some(actual) if !actual.leq(allowed) => report.violations.push(Violation {
                key: key.clone(),
                allowed: allowed.clone(),
                actual: actual.clone(),
            }),
            Some(_) => {}
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertifyError<V: Lattice> {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    PolicyViolation(PolicyReport<V>),
    #[error("policy is for domain {found}, analysis uses {expected}")]
    DomainMismatch { expected: String, found: String },
}

/// A certificate together with the analysis run that produced it.
#[derive(Debug, Clone)]
pub struct Certification<V> {
    pub certificate: Certificate<V>,
    pub analysis: Analysis<V>,
    pub policy: PolicyReport<V>,
}

fn certify<D: Domain>(
    kind: CertKind,
    program: &Program,
    domain: &D,
    entries: &[CallKey<D::Value>],
    policy: &SafetyPolicy<D::Value>,
    strategy: Strategy,
) -> Result<Certification<D::Value>, CertifyError<D::Value>> {
    if policy.domain != domain.id() {
        return Err(CertifyError::DomainMismatch {
            expected: domain.id().to_string(),
            found: policy.domain.clone(),
        });
    }
    let analysis = match kind {
        CertKind::Full => analyze_f(program, domain, entries, strategy)?,
        CertKind::Reduced => analyze_r(program, domain, entries, strategy)?,
    };
    let report = check_policy(&analysis.table, policy);
    if !report.passed() {
        return Err(CertifyError::PolicyViolation(report));
    }
    let cert_entries = match kind {
        CertKind::Full => analysis.table.clone(),
        CertKind::Reduced => analysis
            .table
            .iter()
            .filter(|(k, _)| analysis.red.contains(*k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect(),
    };
    Ok(Certification {
        certificate: Certificate {
            kind,
            domain: domain.id().to_string(),
            strategy: strategy.id().to_string(),
            digest: program.digest(),
            entry_points: entries.iter().cloned().collect(),
            entries: cert_entries,
        },
        analysis,
        policy: report,
    })
}

/// Certifies with the plain analyzer; the certificate is the whole table.
pub fn certifier_f<D: Domain>(
    program: &Program,
    domain: &D,
    entries: &[CallKey<D::Value>],
    policy: &SafetyPolicy<D::Value>,
    strategy: Strategy,
) -> Result<Certification<D::Value>, CertifyError<D::Value>> {
    certify(CertKind::Full, program, domain, entries, policy, strategy)
}

/// Certifies with the instrumented analyzer; the certificate keeps only the
/// entries whose call patterns are relevant. The policy is still checked
/// against the whole table.
pub fn certifier_r<D: Domain>(
    program: &Program,
    domain: &D,
    entries: &[CallKey<D::Value>],
    policy: &SafetyPolicy<D::Value>,
    strategy: Strategy,
) -> Result<Certification<D::Value>, CertifyError<D::Value>> {
    certify(CertKind::Reduced, program, domain, entries, policy, strategy)
}
