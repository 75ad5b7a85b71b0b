//! Domain-erased producer/consumer pipeline over source text and encoded
//! artifacts. The CLI and the C ABI both go through here.

use thiserror::Error;

use crate::certify::{certifier_f, certifier_r, CertKind, CertifyError};
use crate::check::{check_certificate, CheckOptions, CheckReport};
use crate::domain::{Domain, DomainKind, GroundDomain, Lattice, Pattern, TypeDomain};
use crate::engine::{analyze_f, Counters, Strategy};
use crate::error::{AnalysisError, CheckError};
use crate::package::{
    decode_package, decode_policy, encode_certificate, encode_package, peek_certificate_domain, FormatError, Package,
    SizeReport,
};
use crate::program::{normalize, parse, parse_atom, CallKey, ParseError, PredKey, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("bad entry `{text}`: {message}")]
    Entry { text: String, message: String },
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{0}")]
    PolicyViolation(String),
    #[error("policy is for domain {found}, analysis uses {expected}")]
    PolicyDomain { expected: String, found: String },
}

impl PipelineError {
    /// Process exit status: 1 for a policy violation, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::PolicyViolation(_) => 1,
            _ => 2,
        }
    }
}

impl<V: Lattice> From<CertifyError<V>> for PipelineError {
    fn from(e: CertifyError<V>) -> Self {
        match e {
            CertifyError::Analysis(a) => PipelineError::Analysis(a),
            CertifyError::PolicyViolation(r) => PipelineError::PolicyViolation(r.to_string()),
            CertifyError::DomainMismatch { expected, found } => PipelineError::PolicyDomain { expected, found },
        }
    }
}

pub fn domain_kind(id: &str) -> Result<DomainKind, PipelineError> {
    DomainKind::from_id(id).ok_or_else(|| PipelineError::UnknownDomain(id.to_string()))
}

/// Parses and normalizes program source.
pub fn load_program(source: &str) -> Result<Program, PipelineError> {
    Ok(normalize(&parse(source)?))
}

/// Parses an entry call pattern written `p(X,Y):(int,term)` or
/// `p/2:(int,term)`. Only the arity of the head matters.
pub fn parse_entry<V: Lattice>(text: &str) -> Result<CallKey<V>, PipelineError> {
    let bad = |message: String| PipelineError::Entry {
        text: text.to_string(),
        message,
    };
    let (head, pattern) = text
        .trim()
        .rsplit_once(':')
        .ok_or_else(|| bad("expected `head:(values)`".into()))?;
    let pattern: Pattern<V> = pattern.trim().parse().map_err(|e| bad(format!("{e}")))?;
    let Some(values) = pattern.values() else {
        return Err(bad("an entry pattern cannot be bottom".into()));
    };
    let head = head.trim();
    let pred = match head.split_once('/') {
        Some((name, arity)) if !name.contains('(') => {
            let arity = arity.trim().parse().map_err(|_| bad(format!("bad arity `{arity}`")))?;
            PredKey::new(name.trim(), arity)
        }
        _ => parse_atom(head).map_err(|e| bad(e.to_string()))?.pred,
    };
    if pred.arity() != values.len() {
        return Err(bad(format!("{pred} given {} values", values.len())));
    }
    Ok(CallKey::new(pred, pattern))
}

/// Splits an entry sidecar file into entry strings, skipping blank lines
/// and `%` comments.
pub fn entry_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('%'))
        .map(str::to_string)
        .collect()
}

fn parse_entries<V: Lattice>(entries: &[String]) -> Result<Vec<CallKey<V>>, PipelineError> {
    entries.iter().map(|e| parse_entry(e)).collect()
}

fn parse_strategy(id: &str) -> Result<Strategy, PipelineError> {
    Ok(Strategy::from_id(id)?)
}

/// Runs the plain analysis and returns its text dump.
pub fn analyze_source(
    source: &str,
    domain: DomainKind,
    entries: &[String],
    strategy: &str,
) -> Result<String, PipelineError> {
    fn run<D: Domain>(d: &D, p: &Program, entries: &[String], s: Strategy) -> Result<String, PipelineError> {
        let entries = parse_entries::<D::Value>(entries)?;
        Ok(analyze_f(p, d, &entries, s)?.dump())
    }
    let program = load_program(source)?;
    let strategy = parse_strategy(strategy)?;
    match domain {
        DomainKind::Types => run(&TypeDomain::new(), &program, entries, strategy),
        DomainKind::Groundness => run(&GroundDomain::new(), &program, entries, strategy),
    }
}

/// Inputs of a certification run.
#[derive(Debug, Clone)]
pub struct CertifyRequest<'a> {
    pub source: &'a str,
    pub domain: DomainKind,
    pub entries: &'a [String],
    /// Encoded `.apol` policy.
    pub policy: &'a [u8],
    pub strategy: &'a str,
    pub kind: CertKind,
    pub policy_ref: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CertifyOutcome {
    /// Encoded `.apkg` package.
    pub package: Vec<u8>,
    pub size: SizeReport,
    /// Dump of the certifier's full analysis.
    pub dump: String,
    pub counters: Counters,
}

pub fn certify_package(req: &CertifyRequest<'_>) -> Result<CertifyOutcome, PipelineError> {
    fn run<D: Domain>(d: &D, p: &Program, req: &CertifyRequest<'_>) -> Result<CertifyOutcome, PipelineError> {
        let entries = parse_entries::<D::Value>(req.entries)?;
        let policy = decode_policy::<D::Value>(req.policy)?;
        let strategy = parse_strategy(req.strategy)?;
        let c = match req.kind {
            CertKind::Full => certifier_f(p, d, &entries, &policy, strategy)?,
            CertKind::Reduced => certifier_r(p, d, &entries, &policy, strategy)?,
        };
        let certificate = encode_certificate(&c.certificate);
        let size = SizeReport {
            bytes: certificate.len(),
            entries: c.certificate.len(),
        };
        let package = encode_package(&Package {
            program: req.source.to_string(),
            certificate,
            policy_ref: req.policy_ref.clone(),
        });
        Ok(CertifyOutcome {
            package,
            size,
            dump: c.analysis.dump(),
            counters: c.analysis.counters,
        })
    }
    let program = load_program(req.source)?;
    match req.domain {
        DomainKind::Types => run(&TypeDomain::new(), &program, req),
        DomainKind::Groundness => run(&GroundDomain::new(), &program, req),
    }
}

/// Consumer-side expectations when checking a package.
#[derive(Debug, Clone, Default)]
pub struct CheckRequest<'a> {
    /// Check under this strategy instead of the certificate's.
    pub strategy: Option<&'a str>,
    /// Entry points the consumer requires.
    pub entries: Option<&'a [String]>,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub trusted: bool,
    pub domain: DomainKind,
    /// Rendered [`CheckReport`].
    pub report: String,
    pub error: Option<CheckError>,
    pub counters: Counters,
    /// Entries of the reconstructed table, when checking succeeded.
    pub table_entries: Option<usize>,
}

impl CheckOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.trusted {
            0
        } else {
            1
        }
    }
}

/// Checks an encoded package against an encoded policy. Malformed input is
/// an `Err`; a well-formed but untrustworthy package is an `Ok` rejection.
pub fn check_package(package: &[u8], policy: &[u8], req: &CheckRequest<'_>) -> Result<CheckOutcome, PipelineError> {
    fn run<D: Domain>(
        d: &D,
        kind: DomainKind,
        pkg: &Package,
        policy: &[u8],
        req: &CheckRequest<'_>,
    ) -> Result<CheckOutcome, PipelineError> {
        let program = load_program(&pkg.program)?;
        let cert = crate::package::decode_certificate::<D::Value>(&pkg.certificate)?;
        let policy = decode_policy::<D::Value>(policy)?;
        let options = CheckOptions {
            strategy: req.strategy.map(parse_strategy).transpose()?,
            entry_points: req.entries.map(parse_entries::<D::Value>).transpose()?,
        };
        let report: CheckReport<D::Value> = check_certificate(&program, d, &policy, &cert, &options);
        Ok(CheckOutcome {
            trusted: report.is_trusted(),
            domain: kind,
            report: report.to_string(),
            error: report.error.clone(),
            counters: report.counters,
            table_entries: report.table.as_ref().map(|t| t.len()),
        })
    }
    let pkg = decode_package(package)?;
    let kind = domain_kind(&peek_certificate_domain(&pkg.certificate)?)?;
    match kind {
        DomainKind::Types => run(&TypeDomain::new(), kind, &pkg, policy, req),
        DomainKind::Groundness => run(&GroundDomain::new(), kind, &pkg, policy, req),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TypeValue;
    use crate::error::MismatchField;

    const RECTOY: &str = "rectoy(N,M) :- N = 0, M = 0.\n\
                          rectoy(N,M) :- N1 is N-1, rectoy(N1,R), M is N1+R.\n";
    const POLICY: &[u8] = b"acc-policy\t1\ndomain\ttypes-v1\nentries\t1\nrectoy\t2\t(int,term)\t(int,real)\n";

    #[test]
    fn entry_syntax() {
        let a: CallKey<TypeValue> = parse_entry("rectoy(N,M):(int,term)").unwrap();
        let b: CallKey<TypeValue> = parse_entry(" rectoy/2 : (int,term) ").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "rectoy/2:(int,term)");
        let z: CallKey<TypeValue> = parse_entry("main:()").unwrap();
        assert_eq!(z.pred, PredKey::new("main", 0));
        for bad in [
            "rectoy(N,M)",
            "rectoy(N):(int,term)",
            "rectoy/x:(int)",
            "p(X):bottom",
            "p(X):(nope)",
        ] {
            assert!(parse_entry::<TypeValue>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn entry_lines_skip_comments() {
        assert_eq!(
            entry_lines("% c\n\np(X):(int)\n  q/0:()  \n"),
            vec!["p(X):(int)", "q/0:()"]
        );
    }

    fn certify(kind: CertKind, strategy: &str) -> CertifyOutcome {
        let entries = vec!["rectoy(N,M):(int,term)".to_string()];
        certify_package(&CertifyRequest {
            source: RECTOY,
            domain: DomainKind::Types,
            entries: &entries,
            policy: POLICY,
            strategy,
            kind,
            policy_ref: None,
        })
        .unwrap()
    }

    #[test]
    fn reduced_round_trip() {
        let out = certify(CertKind::Reduced, "redundant-updates-first");
        assert_eq!(out.size.entries, 0);
        let checked = check_package(&out.package, POLICY, &CheckRequest::default()).unwrap();
        assert!(checked.trusted, "{}", checked.report);
        assert_eq!(checked.table_entries, Some(1));
        assert_eq!(
            out.package,
            certify(CertKind::Reduced, "redundant-updates-first").package
        );
    }

    #[test]
    fn full_round_trip() {
        let out = certify(CertKind::Full, "textual-fifo");
        assert_eq!(out.size.entries, 1);
        assert!(
            check_package(&out.package, POLICY, &CheckRequest::default())
                .unwrap()
                .trusted
        );
    }

    #[test]
    fn policy_violation_exits_one() {
        let strict = b"acc-policy\t1\ndomain\ttypes-v1\nentries\t1\nrectoy\t2\t(int,term)\t(int,term)\n";
        let entries = vec!["rectoy/2:(int,term)".to_string()];
        let ok = certify_package(&CertifyRequest {
            source: RECTOY,
            domain: DomainKind::Types,
            entries: &entries,
            policy: strict,
            strategy: "textual-fifo",
            kind: CertKind::Full,
            policy_ref: None,
        });
        assert!(ok.is_ok());
        let tight = b"acc-policy\t1\ndomain\ttypes-v1\nentries\t1\nrectoy\t2\t(int,term)\tbottom\n";
        let err = certify_package(&CertifyRequest {
            policy: tight,
            source: RECTOY,
            domain: DomainKind::Types,
            entries: &entries,
            strategy: "textual-fifo",
            kind: CertKind::Full,
            policy_ref: None,
        })
        .unwrap_err();
        assert!(matches!(err, PipelineError::PolicyViolation(_)), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn edited_program_is_a_digest_mismatch() {
        let out = certify(CertKind::Reduced, "textual-fifo");
        let mut pkg = decode_package(&out.package).unwrap();
        pkg.program = pkg.program.replace("N-1", "N-2");
        let checked = check_package(&encode_package(&pkg), POLICY, &CheckRequest::default()).unwrap();
        assert!(!checked.trusted);
        assert!(matches!(
            checked.error,
            Some(CheckError::PackageMismatch {
                field: MismatchField::Digest,
                ..
            })
        ));
        assert_eq!(checked.exit_code(), 1);
    }

    #[test]
    fn unknown_strategy_and_domain() {
        let out = certify(CertKind::Reduced, "textual-fifo");
        let req = CheckRequest {
            strategy: Some("nope"),
            entries: None,
        };
        let err = check_package(&out.package, POLICY, &req).unwrap_err();
        assert_eq!(
            err,
            PipelineError::Analysis(AnalysisError::UnknownStrategy("nope".into()))
        );
        assert_eq!(err.exit_code(), 2);
        assert!(domain_kind("intervals").is_err());
    }
}
