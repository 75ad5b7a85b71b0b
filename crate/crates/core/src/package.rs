//! Byte-stable text encodings of certificates (`.acert`), policies
//! (`.apol`) and code packages (`.apkg`).
//!
//! Certificate and policy files are line based with tab-separated fields.
//! Entries are always written sorted by canonical key. A package is a
//! header line followed by length-prefixed sections.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::certify::{CertKind, Certificate, SafetyPolicy};
use crate::domain::{Lattice, Pattern};
use crate::engine::AnswerTable;
use crate::program::{CallKey, PredKey};

pub const CERT_MAGIC: &str = "acc-cert";
pub const POLICY_MAGIC: &str = "acc-policy";
pub const PACKAGE_MAGIC: &str = "acc-pkg";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("unsupported format `{0}`")]
    Version(String),
    #[error("truncated input: {0}")]
    Truncation(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn malformed(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Malformed {
        line,
        message: message.into(),
    }
}

fn write_pattern<V: Lattice>(out: &mut String, p: &Pattern<V>) {
    let _ = write!(out, "{p}");
}

fn write_key<V: Lattice>(out: &mut String, k: &CallKey<V>) {
    let _ = write!(out, "{}\t{}\t", k.pred.name(), k.pred.arity());
    write_pattern(out, &k.pattern);
}

fn write_entries<V: Lattice>(out: &mut String, entries: &AnswerTable<V>) {
    let _ = writeln!(out, "entries\t{}", entries.len());
    for (k, ap) in entries {
        write_key(out, k);
        out.push('\t');
        write_pattern(out, ap);
        out.push('\n');
    }
}

/// Serializes a certificate. Identical values give identical bytes.
pub fn encode_certificate<V: Lattice>(cert: &Certificate<V>) -> Vec<u8> {
    let mut out = String::new();
    let _ = writeln!(out, "{CERT_MAGIC}\t{FORMAT_VERSION}");
    let _ = writeln!(out, "kind\t{}", cert.kind);
    let _ = writeln!(out, "domain\t{}", cert.domain);
    let _ = writeln!(out, "strategy\t{}", cert.strategy);
    let _ = writeln!(out, "digest\t{}", cert.digest);
    let _ = writeln!(out, "entry-points\t{}", cert.entry_points.len());
    for k in &cert.entry_points {
        write_key(&mut out, k);
        out.push('\n');
    }
    write_entries(&mut out, &cert.entries);
    out.into_bytes()
}

pub fn encode_policy<V: Lattice>(policy: &SafetyPolicy<V>) -> Vec<u8> {
    let mut out = String::new();
    let _ = writeln!(out, "{POLICY_MAGIC}\t{FORMAT_VERSION}");
    let _ = writeln!(out, "domain\t{}", policy.domain);
    write_entries(&mut out, &policy.entries);
    out.into_bytes()
}

/// Line reader over whitespace-separated fields.
struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(bytes: &'a [u8]) -> Result<Self, FormatError> {
        let text = std::str::from_utf8(bytes).map_err(|e| malformed(0, format!("not UTF-8: {e}")))?;
        Ok(Lines {
            inner: text.lines().enumerate(),
            last: 0,
        })
    }

    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), FormatError> {
        loop {
            let (i, line) = self
                .inner
                .next()
                .ok_or_else(|| FormatError::Truncation(format!("expected {what}")))?;
            self.last = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                return Ok((i + 1, fields));
            }
        }
    }

    fn field(&mut self, name: &str) -> Result<(usize, &'a str), FormatError> {
        let (n, f) = self.next(name)?;
        match f.as_slice() {
            [k, v] if *k == name => Ok((n, v)),
            _ => Err(malformed(n, format!("expected `{name} <value>`"))),
        }
    }

    fn count(&mut self, name: &str) -> Result<usize, FormatError> {
        let (n, v) = self.field(name)?;
        v.parse().map_err(|_| malformed(n, format!("bad {name} count `{v}`")))
    }

    fn finish(mut self) -> Result<(), FormatError> {
        match self.inner.find(|(_, l)| !l.trim().is_empty()) {
            Some((i, _)) => Err(malformed(i + 1, "trailing data")),
            None => Ok(()),
        }
    }
}

fn check_magic(lines: &mut Lines<'_>, magic: &str) -> Result<(), FormatError> {
    let (_, f) = lines.next("header")?;
    match f.as_slice() {
        [m, v] if *m == magic && *v == FORMAT_VERSION.to_string() => Ok(()),
        _ => Err(FormatError::Version(f.join(" "))),
    }
}

fn parse_key<V: Lattice>(n: usize, name: &str, arity: &str, cp: &str) -> Result<CallKey<V>, FormatError> {
    let arity: usize = arity
        .parse()
        .map_err(|_| malformed(n, format!("bad arity `{arity}`")))?;
    let pattern: Pattern<V> = cp.parse().map_err(|e| malformed(n, format!("{e}")))?;
    if pattern.values().is_some_and(|v| v.len() != arity) {
        return Err(malformed(n, format!("pattern {cp} does not have arity {arity}")));
    }
    Ok(CallKey::new(PredKey::new(name, arity), pattern))
}

fn read_entries<V: Lattice>(lines: &mut Lines<'_>) -> Result<AnswerTable<V>, FormatError> {
    let count = lines.count("entries")?;
    let mut entries = AnswerTable::new();
    for _ in 0..count {
        let (n, f) = lines.next("entry")?;
        let [name, arity, cp, ap] = f.as_slice() else {
            return Err(malformed(n, "expected `pred arity call-pattern answer-pattern`"));
        };
        let key = parse_key(n, name, arity, cp)?;
        let ap: Pattern<V> = ap.parse().map_err(|e| malformed(n, format!("{e}")))?;
        if let Some(vals) = ap.values() {
            if vals.len() != key.pred.arity() {
                return Err(malformed(n, "answer pattern arity differs from its key"));
            }
        }
        if entries.insert(key, ap).is_some() {
            return Err(malformed(n, "duplicate entry"));
        }
    }
    Ok(entries)
}

/// Reads only the domain id of an encoded certificate.
pub fn peek_certificate_domain(bytes: &[u8]) -> Result<String, FormatError> {
    let mut lines = Lines::new(bytes)?;
    check_magic(&mut lines, CERT_MAGIC)?;
    lines.field("kind")?;
    Ok(lines.field("domain")?.1.to_string())
}

/// Reads only the domain id of an encoded policy.
pub fn peek_policy_domain(bytes: &[u8]) -> Result<String, FormatError> {
    let mut lines = Lines::new(bytes)?;
    check_magic(&mut lines, POLICY_MAGIC)?;
    Ok(lines.field("domain")?.1.to_string())
}

pub fn decode_certificate<V: Lattice>(bytes: &[u8]) -> Result<Certificate<V>, FormatError> {
    let mut lines = Lines::new(bytes)?;
    check_magic(&mut lines, CERT_MAGIC)?;
    let (n, kind) = lines.field("kind")?;
    let kind = match kind {
        "full" => CertKind::Full,
        "reduced" => CertKind::Reduced,
        other => return Err(malformed(n, format!("unknown kind `{other}`"))),
    };
    let domain = lines.field("domain")?.1.to_string();
    let strategy = lines.field("strategy")?.1.to_string();
    let digest = lines.field("digest")?.1.to_string();
    let count = lines.count("entry-points")?;
    let mut entry_points = BTreeSet::new();
    for _ in 0..count {
        let (n, f) = lines.next("entry point")?;
        let [name, arity, cp] = f.as_slice() else {
            return Err(malformed(n, "expected `pred arity call-pattern`"));
        };
        if !entry_points.insert(parse_key(n, name, arity, cp)?) {
            return Err(malformed(n, "duplicate entry point"));
        }
    }
    let entries = read_entries(&mut lines)?;
    lines.finish()?;
    Ok(Certificate {
        kind,
        domain,
        strategy,
        digest,
        entry_points,
        entries,
    })
}

pub fn decode_policy<V: Lattice>(bytes: &[u8]) -> Result<SafetyPolicy<V>, FormatError> {
    let mut lines = Lines::new(bytes)?;
    check_magic(&mut lines, POLICY_MAGIC)?;
    let domain = lines.field("domain")?.1.to_string();
    let entries = read_entries(&mut lines)?;
    lines.finish()?;
    Ok(SafetyPolicy { domain, entries })
}

/// Size of an encoded certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeReport {
    pub bytes: usize,
    pub entries: usize,
}

pub fn measure<V: Lattice>(cert: &Certificate<V>) -> SizeReport {
    SizeReport {
        bytes: encode_certificate(cert).len(),
        entries: cert.entries.len(),
    }
}

/// Program text shipped with its encoded certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Package {
    pub program: String,
    pub certificate: Vec<u8>,
    /// Name of the policy the producer certified against, informational.
    pub policy_ref: Option<String>,
}

fn write_section(out: &mut Vec<u8>, name: &str, body: &[u8]) {
    out.extend_from_slice(format!("{name} {}\n", body.len()).as_bytes());
    out.extend_from_slice(body);
    out.push(b'\n');
}

pub fn encode_package(pkg: &Package) -> Vec<u8> {
    let mut out = format!("{PACKAGE_MAGIC} {FORMAT_VERSION}\n").into_bytes();
    write_section(&mut out, "program", pkg.program.as_bytes());
    write_section(&mut out, "certificate", &pkg.certificate);
    if let Some(r) = &pkg.policy_ref {
        write_section(&mut out, "policy-ref", r.as_bytes());
    }
    out
}

fn read_line<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    let rest = bytes.get(*pos..)?;
    let end = rest.iter().position(|&b| b == b'\n')?;
    *pos += end + 1;
    Some(&rest[..end])
}

fn read_section<'a>(bytes: &'a [u8], pos: &mut usize, name: &str) -> Result<&'a [u8], FormatError> {
    let header = read_line(bytes, pos).ok_or_else(|| FormatError::Truncation(format!("missing {name} section")))?;
    let header = std::str::from_utf8(header).map_err(|_| malformed(0, "section header not UTF-8"))?;
    let len: usize = header
        .strip_prefix(name)
        .and_then(|r| r.strip_prefix(' '))
        .and_then(|r| r.parse().ok())
        .ok_or_else(|| malformed(0, format!("expected `{name} <length>`, found `{header}`")))?;
    let body = bytes
        .get(*pos..*pos + len)
        .ok_or_else(|| FormatError::Truncation(format!("{name} section shorter than {len} bytes")))?;
    *pos += len;
    match bytes.get(*pos) {
        Some(b'\n') => *pos += 1,
        Some(_) => return Err(malformed(0, format!("{name} section not terminated"))),
        None => return Err(FormatError::Truncation(format!("{name} section not terminated"))),
    }
    Ok(body)
}

pub fn decode_package(bytes: &[u8]) -> Result<Package, FormatError> {
    let mut pos = 0;
    let header = read_line(bytes, &mut pos).ok_or_else(|| FormatError::Truncation("empty package".into()))?;
    if header != format!("{PACKAGE_MAGIC} {FORMAT_VERSION}").as_bytes() {
        return Err(FormatError::Version(String::from_utf8_lossy(header).into_owned()));
    }
    let program = read_section(bytes, &mut pos, "program")?;
    let program = String::from_utf8(program.to_vec()).map_err(|_| malformed(0, "program is not UTF-8"))?;
    let certificate = read_section(bytes, &mut pos, "certificate")?.to_vec();
    let policy_ref = if pos < bytes.len() {
        let r = read_section(bytes, &mut pos, "policy-ref")?;
        Some(String::from_utf8(r.to_vec()).map_err(|_| malformed(0, "policy-ref is not UTF-8"))?)
    } else {
        None
    };
    if pos != bytes.len() {
        return Err(malformed(0, "trailing data after package sections"));
    }
    Ok(Package {
        program,
        certificate,
        policy_ref,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TypeValue;

    fn key(name: &str, vals: &str) -> CallKey<TypeValue> {
        let p: Pattern<TypeValue> = vals.parse().unwrap();
        CallKey::new(PredKey::new(name, p.values().unwrap().len()), p)
    }

    fn empty_cert() -> Certificate<TypeValue> {
        Certificate {
            kind: CertKind::Reduced,
            domain: "types-v1".into(),
            strategy: "redundant-updates-first".into(),
            digest: "sha256:00".into(),
            entry_points: [key("rectoy", "(int,term)")].into(),
            entries: AnswerTable::new(),
        }
    }

    #[test]
    fn empty_certificate_layout() {
        let bytes = encode_certificate(&empty_cert());
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "acc-cert\t1\nkind\treduced\ndomain\ttypes-v1\nstrategy\tredundant-updates-first\n\
             digest\tsha256:00\nentry-points\t1\nrectoy\t2\t(int,term)\nentries\t0\n"
        );
        assert_eq!(decode_certificate::<TypeValue>(&bytes).unwrap(), empty_cert());
    }

    #[test]
    fn entries_are_sorted_and_bottom_is_spelled_out() {
        let mut c = empty_cert();
        c.kind = CertKind::Full;
        c.entries.insert(key("q", "(term)"), "(real)".parse().unwrap());
        c.entries.insert(key("p", "(term)"), Pattern::bottom());
        let text = String::from_utf8(encode_certificate(&c)).unwrap();
        assert!(
            text.ends_with("entries\t2\np\t1\t(term)\tbottom\nq\t1\t(term)\t(real)\n"),
            "{text}"
        );
        assert_eq!(decode_certificate::<TypeValue>(text.as_bytes()).unwrap(), c);
    }

    #[test]
    fn decode_errors() {
        assert!(matches!(
            decode_certificate::<TypeValue>(b""),
            Err(FormatError::Truncation(_))
        ));
        let good = String::from_utf8(encode_certificate(&empty_cert())).unwrap();
        let v2 = good.replacen("acc-cert\t1", "acc-cert\t2", 1);
        assert!(matches!(
            decode_certificate::<TypeValue>(v2.as_bytes()),
            Err(FormatError::Version(_))
        ));
        let cut = good.replace("entries\t0\n", "entries\t1\n");
        assert!(matches!(
            decode_certificate::<TypeValue>(cut.as_bytes()),
            Err(FormatError::Truncation(_))
        ));
        let bad = good.replace("(int,term)", "(int,qq)");
        assert!(matches!(
            decode_certificate::<TypeValue>(bad.as_bytes()),
            Err(FormatError::Malformed { line: 7, .. })
        ));
        let arity = good.replace("rectoy\t2", "rectoy\t3");
        assert!(matches!(
            decode_certificate::<TypeValue>(arity.as_bytes()),
            Err(FormatError::Malformed { .. })
        ));
    }

    #[test]
    fn policy_round_trip() {
        let pol = SafetyPolicy::new(
            "types-v1",
            [(key("rectoy", "(int,term)"), "(int,real)".parse().unwrap())].into(),
        );
        let bytes = encode_policy(&pol);
        assert_eq!(peek_policy_domain(&bytes).unwrap(), "types-v1");
        assert_eq!(decode_policy::<TypeValue>(&bytes).unwrap(), pol);
    }

    #[test]
    fn package_round_trip() {
        let pkg = Package {
            program: "p(X) :- X = 1.\n".into(),
            certificate: encode_certificate(&empty_cert()),
            policy_ref: Some("rectoy.types-v1.apol".into()),
        };
        let bytes = encode_package(&pkg);
        assert_eq!(decode_package(&bytes).unwrap(), pkg);
        let bare = Package {
            policy_ref: None,
            ..pkg
        };
        assert_eq!(decode_package(&encode_package(&bare)).unwrap(), bare);
        assert!(matches!(decode_package(b""), Err(FormatError::Truncation(_))));
        let bytes = encode_package(&bare);
        assert!(matches!(
            decode_package(&bytes[..bytes.len() - 5]),
            Err(FormatError::Truncation(_))
        ));
        assert!(matches!(decode_package(b"acc-pkg 9\n"), Err(FormatError::Version(_))));
    }

    #[test]
    fn measure_counts_bytes_and_entries() {
        let c = empty_cert();
        let m = measure(&c);
        assert_eq!(m.entries, 0);
        assert_eq!(m.bytes, encode_certificate(&c).len());
        assert_eq!(measure(&c), measure(&c.clone()));
    }
}
