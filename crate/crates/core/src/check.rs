//! Consumer side: single-pass checking of reduced certificates, fixpoint
//! checking of full certificates and package consistency.

use std::fmt;

use crate::certify::{check_policy, CertKind, Certificate, PolicyReport, SafetyPolicy};
use crate::domain::{Domain, Lattice, Pattern};
use crate::engine::{one_round, Analysis, Analyzer, AnswerTable, Counters, Mode, Strategy};
use crate::error::{CheckError, MismatchField};
use crate::program::{CallKey, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Trusted,
    Rejected,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Trusted => "trusted",
            Verdict::Rejected => "rejected",
        })
    }
}

/// Result of checking a certificate.
#[derive(Debug, Clone)]
pub struct CheckReport<V> {
    pub verdict: Verdict,
    /// The reconstructed full table, when checking succeeded.
    pub table: Option<AnswerTable<V>>,
    /// Present whenever checking got as far as the policy.
    pub policy: Option<PolicyReport<V>>,
    pub counters: Counters,
    pub error: Option<CheckError>,
}

impl<V: Lattice> CheckReport<V> {
    fn rejected(error: CheckError, counters: Counters) -> Self {
        CheckReport {
            verdict: Verdict::Rejected,
            table: None,
            policy: None,
            counters,
            error: Some(error),
        }
    }

    fn from_table(table: AnswerTable<V>, policy: &SafetyPolicy<V>, counters: Counters) -> Self {
        let report = check_policy(&table, policy);
        CheckReport {
            verdict: if report.passed() {
                Verdict::Trusted
            } else {
                Verdict::Rejected
            },
            table: Some(table),
            policy: Some(report),
            counters,
            error: None,
        }
    }

    pub fn is_trusted(&self) -> bool {
        self.verdict == Verdict::Trusted
    }
}

impl<V: Lattice> fmt::Display for CheckReport<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verdict {}", self.verdict)?;
        if let Some(e) = &self.error {
            writeln!(f, "error {e}")?;
        }
        if let Some(p) = &self.policy {
            writeln!(f, "{p}")?;
        }
        if let Some(t) = &self.table {
            f.write_str(&crate::engine::dump_table(t))?;
        }
        let c = &self.counters;
        writeln!(
            f,
            "counters arcs={} updates={} dat_inserts={} max_u={}",
            c.arcs, c.updates, c.dat_inserts, c.max_u
        )
    }
}

/// Runs the single-pass checking analysis against the certificate entries.
pub fn checking_r<D: Domain>(
    program: &Program,
    domain: &D,
    entries: &[CallKey<D::Value>],
    strategy: Strategy,
    rcert: &AnswerTable<D::Value>,
) -> Result<Analysis<D::Value>, CheckError> {
    Analyzer::new(program, domain, strategy, Mode::Checking(rcert)).run(entries)
}

/// Checks a reduced (or full) certificate in one pass and then the policy.
pub fn checker_r<D: Domain>(
    program: &Program,
    domain: &D,
    entries: &[CallKey<D::Value>],
    policy: &SafetyPolicy<D::Value>,
    strategy: Strategy,
    rcert: &AnswerTable<D::Value>,
) -> CheckReport<D::Value> {
    match checking_r(program, domain, entries, strategy, rcert) {
        Ok(a) => CheckReport::from_table(a.table, policy, a.counters),
        Err(e) => CheckReport::rejected(e, Counters::default()),
    }
}

/// Checks a full certificate by one application of the abstract operator:
/// the certificate must be reproduced exactly.
pub fn checker_f<D: Domain>(
    program: &Program,
    domain: &D,
    entries: &[CallKey<D::Value>],
    policy: &SafetyPolicy<D::Value>,
    fcert: &AnswerTable<D::Value>,
) -> CheckReport<D::Value> {
    let round = match one_round(program, domain, fcert, entries) {
        Ok(r) => r,
        Err(e) => return CheckReport::rejected(e.into(), Counters::default()),
    };
    let counters = Counters {
        arcs: round.literals,
        ..Counters::default()
    };
    for (key, ap) in &round.table {
        let certified = fcert.get(key);
        if certified != Some(ap) {
            let error = CheckError::AnswerMismatch {
                key: key.to_string(),
                checker: ap.to_string(),
                certificate: certified.map_or_else(|| "absent".to_string(), Pattern::to_string),
            };
            return CheckReport::rejected(error, counters);
        }
    }
    CheckReport::from_table(round.table, policy, counters)
}

/// What the consumer expects of a certificate beyond the program itself.
#[derive(Debug, Clone)]
pub struct CheckOptions<V> {
    /// Check under this strategy instead of the certificate's.
    pub strategy: Option<Strategy>,
    /// Entry points the consumer requires; defaults to the certificate's.
    pub entry_points: Option<Vec<CallKey<V>>>,
}

impl<V> Default for CheckOptions<V> {
    fn default() -> Self {
        CheckOptions {
            strategy: None,
            entry_points: None,
        }
    }
}

/// Verifies that a certificate belongs to this program, domain and policy,
/// then dispatches on its kind.
pub fn check_certificate<D: Domain>(
    program: &Program,
    domain: &D,
    policy: &SafetyPolicy<D::Value>,
    cert: &Certificate<D::Value>,
    options: &CheckOptions<D::Value>,
) -> CheckReport<D::Value> {
    let none = Counters::default();
    let mismatch = |field, expected: &str, found: &str| {
        CheckReport::rejected(
            CheckError::PackageMismatch {
                field,
                expected: expected.to_string(),
                found: found.to_string(),
            },
            none,
        )
    };
    let digest = program.digest();
    if cert.digest != digest {
        return mismatch(MismatchField::Digest, &digest, &cert.digest);
    }
    if cert.domain != domain.id() {
        return mismatch(MismatchField::Domain, domain.id(), &cert.domain);
    }
    if policy.domain != domain.id() {
        return mismatch(MismatchField::Domain, domain.id(), &policy.domain);
    }
    let entries = cert.entry_points_vec();
    if let Some(expected) = &options.entry_points {
        let mut sorted = expected.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != entries {
            let show = |ks: &[CallKey<D::Value>]| ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
            return mismatch(MismatchField::EntryPoints, &show(&sorted), &show(&entries));
        }
    }
    let strategy = match options.strategy {
        Some(s) => s,
        None => match Strategy::from_id(&cert.strategy) {
            Ok(s) => s,
            Err(_) => return mismatch(MismatchField::Strategy, "a registered strategy", &cert.strategy),
        },
    };
    match cert.kind {
        CertKind::Reduced => checker_r(program, domain, &entries, policy, strategy, &cert.entries),
        CertKind::Full => checker_f(program, domain, &entries, policy, &cert.entries),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{certifier_f, certifier_r};
    use crate::domain::{TypeDomain, TypeValue};
    use crate::program::{normalize, parse, PredKey};

    fn key(name: &str, vals: &str) -> CallKey<TypeValue> {
        let p: Pattern<TypeValue> = vals.parse().unwrap();
        CallKey::new(PredKey::new(name, p.values().unwrap().len()), p)
    }

    const RECTOY: &str = "rectoy(N,M) :- N = 0, M = 0.\n\
                          rectoy(N,M) :- N1 is N-1, rectoy(N1,R), M is N1+R.\n";
    const QP: &str = "q(X) :- p(X).\np(X) :- X = 1.0.\np(X) :- X = 1.\n";

    fn prog(src: &str) -> Program {
        normalize(&parse(src).unwrap())
    }

    fn open_policy() -> SafetyPolicy<TypeValue> {
        SafetyPolicy::new("types-v1", AnswerTable::new())
    }

    fn strat(id: &str) -> Strategy {
        Strategy::from_id(id).unwrap()
    }

    #[test]
    fn rectoy_empty_certificate_checks_in_one_pass() {
        let entry = [key("rectoy", "(int,term)")];
        let a = checking_r(
            &prog(RECTOY),
            &TypeDomain::new(),
            &entry,
            strat("redundant-updates-first"),
            &AnswerTable::new(),
        )
        .unwrap();
        assert_eq!(a.table[&entry[0]], "(int,int)".parse().unwrap());
        assert!(a.counters.max_u <= 1);
    }

    #[test]
    fn qp_counterexample_and_completion() {
        let entry = [key("q", "(term)")];
        let p = prog(QP);
        let err = checking_r(
            &p,
            &TypeDomain::new(),
            &entry,
            strat("reverse-rules"),
            &AnswerTable::new(),
        )
        .unwrap_err();
        assert!(matches!(err, CheckError::RecomputationRequired { .. }));
        let rcert: AnswerTable<TypeValue> = [(key("p", "(term)"), "(real)".parse().unwrap())].into();
        let a = checking_r(&p, &TypeDomain::new(), &entry, strat("reverse-rules"), &rcert).unwrap();
        assert_eq!(a.table.len(), 2);
        assert!(a.table.values().all(|ap| *ap == "(real)".parse().unwrap()));
    }

    #[test]
    fn lowered_certificate_entry_is_a_mismatch() {
        let entry = [key("q", "(term)")];
        let rcert: AnswerTable<TypeValue> = [(key("p", "(term)"), "(int)".parse().unwrap())].into();
        let err = checking_r(&prog(QP), &TypeDomain::new(), &entry, strat("reverse-rules"), &rcert).unwrap_err();
        assert!(matches!(err, CheckError::AnswerMismatch { .. }), "{err}");
    }

    #[test]
    fn full_checker_requires_exact_fixpoint() {
        let p = prog(RECTOY);
        let entry = [key("rectoy", "(int,term)")];
        let c = certifier_f(&p, &TypeDomain::new(), &entry, &open_policy(), strat("textual-fifo")).unwrap();
        let ok = checker_f(&p, &TypeDomain::new(), &entry, &open_policy(), &c.certificate.entries);
        assert!(ok.is_trusted());

        // (int,term) is a larger fixpoint: int + term is term.
        let weak: AnswerTable<TypeValue> = [(entry[0].clone(), "(int,term)".parse().unwrap())].into();
        assert!(checker_f(&p, &TypeDomain::new(), &entry, &open_policy(), &weak).is_trusted());

        let low: AnswerTable<TypeValue> = [(entry[0].clone(), Pattern::bottom())].into();
        let r = checker_f(&p, &TypeDomain::new(), &entry, &open_policy(), &low);
        assert!(matches!(r.error, Some(CheckError::AnswerMismatch { .. })));

        let r = checker_f(&p, &TypeDomain::new(), &entry, &open_policy(), &AnswerTable::new());
        assert!(matches!(r.error, Some(CheckError::AnswerMismatch { .. })));
    }

    #[test]
    fn package_consistency() {
        let p = prog(RECTOY);
        let entry = [key("rectoy", "(int,term)")];
        let c = certifier_r(&p, &TypeDomain::new(), &entry, &open_policy(), strat("textual-fifo")).unwrap();
        let opts = CheckOptions::default();
        assert!(check_certificate(&p, &TypeDomain::new(), &open_policy(), &c.certificate, &opts).is_trusted());

        let other = prog("rectoy(N,M) :- N = 0, M = 0.\nrectoy(N,M) :- N1 is N-1, rectoy(N1,R), M is N1+0.5.");
        let r = check_certificate(&other, &TypeDomain::new(), &open_policy(), &c.certificate, &opts);
        assert!(matches!(
            r.error,
            Some(CheckError::PackageMismatch {
                field: MismatchField::Digest,
                ..
            })
        ));

        let opts = CheckOptions {
            strategy: None,
            entry_points: Some(vec![key("rectoy", "(real,term)")]),
        };
        let r = check_certificate(&p, &TypeDomain::new(), &open_policy(), &c.certificate, &opts);
        assert!(matches!(
            r.error,
            Some(CheckError::PackageMismatch {
                field: MismatchField::EntryPoints,
                ..
            })
        ));
    }

    #[test]
    fn policy_is_regenerated_on_the_reconstructed_table() {
        let p = prog(RECTOY);
        let entry = [key("rectoy", "(int,term)")];
        let strict = SafetyPolicy::new("types-v1", [(entry[0].clone(), "(int,int)".parse().unwrap())].into());
        let r = checker_r(
            &p,
            &TypeDomain::new(),
            &entry,
            &strict,
            strat("textual-fifo"),
            &AnswerTable::new(),
        );
        assert!(r.is_trusted());
        let failing = SafetyPolicy::new("types-v1", [(entry[0].clone(), Pattern::bottom())].into());
        let r = checker_r(
            &p,
            &TypeDomain::new(),
            &entry,
            &failing,
            strat("textual-fifo"),
            &AnswerTable::new(),
        );
        assert_eq!(r.verdict, Verdict::Rejected);
        assert!(r.error.is_none());
        assert!(!r.policy.unwrap().passed());
    }
}
