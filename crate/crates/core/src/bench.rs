//! Certificate-size and checking-cost comparison over a corpus directory.
//!
//! A corpus program `<name>.pl` is benchmarked under domain `d` when the
//! sidecars `<name>.<d>.entry` (entry points, one per line) and
//! `<name>.<d>.apol` (encoded policy) sit next to it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::certify::{certifier_f, certifier_r, Certification};
use crate::check::{checker_f, checker_r};
use crate::domain::{Domain, DomainKind, GroundDomain, TypeDomain};
use crate::engine::Strategy;
use crate::package::{decode_policy, measure};
use crate::pipeline::{entry_lines, load_program, parse_entry, PipelineError};

/// Environment variable naming the default corpus directory.
pub const CORPUS_ENV: &str = "ACC_KIT_CORPUS";

/// The corpus directory: `$ACC_KIT_CORPUS`, else the bundled one.
pub fn default_corpus() -> PathBuf {
    std::env::var_os(CORPUS_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus")))
}

/// One corpus program with its sidecars for a given domain.
#[derive(Debug, Clone)]
pub struct CorpusProgram {
    pub name: String,
    pub source: String,
    pub entries: Vec<String>,
    pub policy: Vec<u8>,
}

/// Programs found in `dir`, sorted by name. Programs whose sidecars are
/// missing or unreadable come back as `Err((name, message))`.
pub fn load_corpus(dir: &Path, domain: DomainKind) -> std::io::Result<Vec<Result<CorpusProgram, (String, String)>>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_suffix(".pl").map(str::to_string)
        })
        .collect();
    names.sort();
    Ok(names
        .into_iter()
        .map(|name| {
            let read = |ext: &str| {
                let path = dir.join(format!("{name}{ext}"));
                std::fs::read(&path).map_err(|e| (name.clone(), format!("{}: {e}", path.display())))
            };
            let source = String::from_utf8(read(".pl")?).map_err(|_| (name.clone(), "source is not UTF-8".into()))?;
            let entries = String::from_utf8(read(&format!(".{domain}.entry"))?)
                .map_err(|_| (name.clone(), "entry file is not UTF-8".into()))?;
            let policy = read(&format!(".{domain}.apol"))?;
            Ok(CorpusProgram {
                name: name.clone(),
                source,
                entries: entry_lines(&entries),
                policy,
            })
        })
        .collect())
}

/// Work and size figures for one program under one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub program: String,
    pub domain: DomainKind,
    pub strategy: String,
    pub source_bytes: usize,
    pub fcert_bytes: usize,
    pub fcert_entries: usize,
    pub rcert_bytes: usize,
    pub rcert_entries: usize,
    pub certify_f_arcs: u64,
    pub certify_r_arcs: u64,
    pub check_f_arcs: u64,
    pub check_r_arcs: u64,
    pub certify_f_time: Duration,
    pub certify_r_time: Duration,
    pub check_f_time: Duration,
    pub check_r_time: Duration,
    /// Whether both checkers trusted their certificates.
    pub trusted: bool,
}

impl BenchRow {
    /// FCert bytes over RCert bytes.
    pub fn f_r_bytes(&self) -> f64 {
        self.fcert_bytes as f64 / self.rcert_bytes as f64
    }

    /// FCert entries over RCert entries; `None` when RCert is empty.
    pub fn f_r_entries(&self) -> Option<f64> {
        (self.rcert_entries > 0).then(|| self.fcert_entries as f64 / self.rcert_entries as f64)
    }

    /// RCert bytes over source bytes.
    pub fn r_s_bytes(&self) -> f64 {
        self.rcert_bytes as f64 / self.source_bytes as f64
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    /// Programs that could not be benchmarked, with the reason.
    pub failures: Vec<(String, String)>,
}

/// Weighted means over all rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overall {
    pub f_r_bytes: f64,
    /// Full-checking cost over reduced-checking cost.
    pub check_ratio: f64,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn bench_in<D: Domain>(d: &D, p: &CorpusProgram, strategy: Strategy) -> Result<BenchRow, PipelineError> {
    let program = load_program(&p.source)?;
    let entries = p
        .entries
        .iter()
        .map(|e| parse_entry::<D::Value>(e))
        .collect::<Result<Vec<_>, _>>()?;
    let policy = decode_policy::<D::Value>(&p.policy)?;
    let (full, certify_f_time) = timed(|| certifier_f(&program, d, &entries, &policy, strategy));
    let full: Certification<D::Value> = full?;
    let (reduced, certify_r_time) = timed(|| certifier_r(&program, d, &entries, &policy, strategy));
    let reduced: Certification<D::Value> = reduced?;
    let (cf, check_f_time) = timed(|| checker_f(&program, d, &entries, &policy, &full.certificate.entries));
    let (cr, check_r_time) =
        timed(|| checker_r(&program, d, &entries, &policy, strategy, &reduced.certificate.entries));
    let fsize = measure(&full.certificate);
    let rsize = measure(&reduced.certificate);
    Ok(BenchRow {
        program: p.name.clone(),
        domain: DomainKind::from_id(d.id()).expect("bundled domain"),
        strategy: strategy.id().to_string(),
        source_bytes: p.source.len(),
        fcert_bytes: fsize.bytes,
        fcert_entries: fsize.entries,
        rcert_bytes: rsize.bytes,
        rcert_entries: rsize.entries,
        certify_f_arcs: full.analysis.counters.arcs,
        certify_r_arcs: reduced.analysis.counters.arcs,
        check_f_arcs: cf.counters.arcs,
        check_r_arcs: cr.counters.arcs,
        certify_f_time,
        certify_r_time,
        check_f_time,
        check_r_time,
        trusted: cf.is_trusted() && cr.is_trusted(),
    })
}

/// Benchmarks one program under one strategy.
pub fn bench_program(p: &CorpusProgram, domain: DomainKind, strategy: Strategy) -> Result<BenchRow, PipelineError> {
    match domain {
        DomainKind::Types => bench_in(&TypeDomain::new(), p, strategy),
        DomainKind::Groundness => bench_in(&GroundDomain::new(), p, strategy),
    }
}

/// Benchmarks every corpus program under every strategy, in parallel.
/// Rows come back ordered by program, then by the order of `strategies`.
pub fn run_bench(dir: &Path, domain: DomainKind, strategies: &[Strategy]) -> std::io::Result<BenchTable> {
    let mut table = BenchTable::default();
    let mut programs = Vec::new();
    for p in load_corpus(dir, domain)? {
        match p {
            Ok(p) => programs.push(p),
            Err(f) => table.failures.push(f),
        }
    }
    let jobs: Vec<(&CorpusProgram, Strategy)> = programs
        .iter()
        .flat_map(|p| strategies.iter().map(move |s| (p, *s)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(p, s)| (p.name.clone(), bench_program(p, domain, *s)))
        .collect();
    for (name, r) in results {
        match r {
            Ok(row) => table.rows.push(row),
            Err(e) => {
                if !table.failures.iter().any(|(n, _)| *n == name) {
                    table.failures.push((name, e.to_string()));
                }
            }
        }
    }
    table.failures.sort();
    Ok(table)
}

impl BenchTable {
    /// Means weighted by reduced-checking time, or by reduced-checking arcs
    /// when `timing` is off.
    pub fn overall(&self, timing: bool) -> Option<Overall> {
        let weight = |r: &BenchRow| {
            if timing {
                r.check_r_time.as_secs_f64()
            } else {
                r.check_r_arcs as f64
            }
        };
        let total: f64 = self.rows.iter().map(weight).sum();
        if total <= 0.0 {
            return None;
        }
        let mean = |f: &dyn Fn(&BenchRow) -> f64| self.rows.iter().map(|r| weight(r) * f(r)).sum::<f64>() / total;
        Some(Overall {
            f_r_bytes: mean(&|r| r.f_r_bytes()),
            check_ratio: mean(&|r| {
                if timing {
                    r.check_f_time.as_secs_f64() / r.check_r_time.as_secs_f64().max(f64::MIN_POSITIVE)
                } else {
                    r.check_f_arcs as f64 / (r.check_r_arcs as f64).max(1.0)
                }
            }),
        })
    }

    fn columns(timing: bool) -> Vec<&'static str> {
        let mut c = vec![
            "program",
            "domain",
            "strategy",
            "source_bytes",
            "fcert_bytes",
            "fcert_entries",
            "rcert_bytes",
            "rcert_entries",
            "f_r_bytes",
            "f_r_entries",
            "r_s_bytes",
            "certify_f_arcs",
            "certify_r_arcs",
            "check_f_arcs",
            "check_r_arcs",
            "trusted",
        ];
        if timing {
            c.extend(["certify_f_us", "certify_r_us", "check_f_us", "check_r_us"]);
        }
        c
    }

    fn cells(row: &BenchRow, timing: bool) -> Vec<String> {
        let mut c = vec![
            row.program.clone(),
            row.domain.to_string(),
            row.strategy.clone(),
            row.source_bytes.to_string(),
            row.fcert_bytes.to_string(),
            row.fcert_entries.to_string(),
            row.rcert_bytes.to_string(),
            row.rcert_entries.to_string(),
            format!("{:.2}", row.f_r_bytes()),
            row.f_r_entries()
                .map_or_else(|| "empty".to_string(), |r| format!("{r:.2}")),
            format!("{:.2}", row.r_s_bytes()),
            row.certify_f_arcs.to_string(),
            row.certify_r_arcs.to_string(),
            row.check_f_arcs.to_string(),
            row.check_r_arcs.to_string(),
            row.trusted.to_string(),
        ];
        if timing {
            for t in [
                row.certify_f_time,
                row.certify_r_time,
                row.check_f_time,
                row.check_r_time,
            ] {
                c.push(t.as_micros().to_string());
            }
        }
        c
    }

    fn overall_cells(&self, timing: bool) -> Vec<String> {
        let n = Self::columns(timing).len();
        let mut c = vec![String::new(); n];
        c[0] = "overall".into();
        let (fr, ratio) = match self.overall(timing) {
            Some(o) => (format!("{:.2}", o.f_r_bytes), format!("{:.2}", o.check_ratio)),
            None => ("n/a".into(), "n/a".into()),
        };
        c[8] = fr;
        c[13] = format!("check_f/check_r={ratio}");
        c
    }

    /// Rows as CSV with a header line, followed by the overall row.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = Self::columns(timing).join(",");
        out.push('\n');
        if self.rows.is_empty() {
            return out;
        }
        for r in &self.rows {
            out.push_str(&Self::cells(r, timing).join(","));
            out.push('\n');
        }
        out.push_str(&self.overall_cells(timing).join(","));
        out.push('\n');
        out
    }

    /// Column-aligned text table plus any failures.
    pub fn to_text(&self, timing: bool) -> String {
        let mut grid = vec![Self::columns(timing)
            .into_iter()
            .map(str::to_string)
            .collect::<Vec<_>>()];
        grid.extend(self.rows.iter().map(|r| Self::cells(r, timing)));
        if !self.rows.is_empty() {
            grid.push(self.overall_cells(timing));
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|i| grid.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &grid {
            let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        for (name, why) in &self.failures {
            let _ = writeln!(out, "failed {name}: {why}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus_gives_empty_table() {
        let dir = tempfile::tempdir().unwrap();
        let t = run_bench(dir.path(), DomainKind::Types, &Strategy::all()).unwrap();
        assert!(t.rows.is_empty() && t.failures.is_empty());
        assert_eq!(t.to_csv(false).lines().count(), 1);
        assert!(t.overall(false).is_none());
    }

    #[test]
    fn missing_sidecar_is_reported_and_bench_continues() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("lonely.pl"), "p(X) :- X = 1.\n").unwrap();
        std::fs::write(dir.path().join("ok.pl"), "p(X) :- X = 1.\n").unwrap();
        std::fs::write(dir.path().join("ok.types-v1.entry"), "p(X):(term)\n").unwrap();
        std::fs::write(
            dir.path().join("ok.types-v1.apol"),
            "acc-policy\t1\ndomain\ttypes-v1\nentries\t0\n",
        )
        .unwrap();
        let s = Strategy::from_id("textual-fifo").unwrap();
        let t = run_bench(dir.path(), DomainKind::Types, &[s]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.failures.len(), 1);
        assert_eq!(t.failures[0].0, "lonely");
        let row = &t.rows[0];
        assert!(row.trusted);
        assert_eq!((row.fcert_entries, row.rcert_entries), (1, 0));
        assert_eq!(row.f_r_entries(), None);
        assert!(t.to_text(false).contains("failed lonely"));
    }
}
