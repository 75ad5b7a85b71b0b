//! The generic event-driven fixpoint analyzer.
//!
//! One [`Analyzer`] implements three closely related algorithms selected by
//! [`Mode`]: plain analysis, analysis instrumented with traversal counters
//! and the relevant set, and single-pass checking against a certificate.

mod oracle;
mod queue;
mod tables;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

pub use oracle::{kleene, live_keys, one_round, RoundResult};
pub use queue::{ArcEvent, Event, EventQueue, Scheduling, Strategy, UpdatedRank, STRATEGY_IDS};
pub use tables::{AnswerTable, ArcSlot, DepArc, DepTable};

use crate::domain::{Domain, Lattice, Pattern, Substitution};
use crate::error::{AnalysisError, CheckError};
use crate::program::{canonicalize, CallKey, Literal, Program};

/// Which variant of the analysis loop to run.
#[derive(Debug, Clone, Copy)]
pub enum Mode<'c, V> {
    /// Every update is queued; no relevance tracking.
    Full,
    /// Redundant updates are dropped and multi-traversed arcs mark their
    /// callee as relevant.
    Reduced,
    /// Single-pass checking: certificate answers are installed on the first
    /// partial answer and any second traversal is an error.
    Checking(&'c AnswerTable<V>),
}

/// Work counters of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub events: u64,
    pub newcalls: u64,
    pub arcs: u64,
    pub updates: u64,
    pub dat_inserts: u64,
    pub suppressed_updates: u64,
    /// Dependent arcs not relaunched because they already saw the answer.
    pub stale_arcs: u64,
    pub max_u: u32,
}

/// One DAT insertion, recorded when tracing is on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry<V> {
    pub slot: ArcSlot<V>,
    pub callee: CallKey<V>,
    pub suspended: bool,
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct Analysis<V> {
    pub table: AnswerTable<V>,
    pub dat: DepTable<V>,
    pub red: BTreeSet<CallKey<V>>,
    pub counters: Counters,
    pub trace: Vec<TraceEntry<V>>,
}

impl<V: Lattice> Analysis<V> {
    /// Deterministic text dump of AT and DAT.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&dump_table(&self.table));
        let _ = writeln!(out, "DAT {}", self.dat.len());
        for (slot, arc) in self.dat.iter() {
            let _ = writeln!(out, "  {slot} u={} [{}] -> {}", arc.u, arc.cp, arc.callee);
        }
        if !self.red.is_empty() {
            let red: Vec<String> = self.red.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(out, "RED {}", red.join(" "));
        }
        let c = &self.counters;
        let _ = writeln!(
            out,
            "counters events={} newcalls={} arcs={} updates={} dat_inserts={} suppressed_updates={} stale_arcs={} max_u={}",
            c.events, c.newcalls, c.arcs, c.updates, c.dat_inserts, c.suppressed_updates, c.stale_arcs, c.max_u
        );
        out
    }
}

/// Sorted `key -> answer` lines of an answer table.
pub fn dump_table<V: Lattice>(table: &AnswerTable<V>) -> String {
    let mut out = format!("AT {}\n", table.len());
    for (k, ap) in table {
        let _ = writeln!(out, "  {k} -> {ap}");
    }
    out
}

/// The analysis state machine.
pub struct Analyzer<'a, D: Domain> {
    program: &'a Program,
    domain: &'a D,
    mode: Mode<'a, D::Value>,
    queue: EventQueue<D::Value>,
    at: AnswerTable<D::Value>,
    dat: DepTable<D::Value>,
    red: BTreeSet<CallKey<D::Value>>,
    counters: Counters,
    trace: Option<Vec<TraceEntry<D::Value>>>,
    queue_redundant: bool,
}

impl<'a, D: Domain> Analyzer<'a, D> {
    pub fn new(program: &'a Program, domain: &'a D, strategy: Strategy, mode: Mode<'a, D::Value>) -> Self {
        Analyzer {
            program,
            domain,
            mode,
            queue: EventQueue::new(strategy),
            at: BTreeMap::new(),
            dat: DepTable::default(),
            red: BTreeSet::new(),
            counters: Counters::default(),
            trace: None,
            queue_redundant: false,
        }
    }

    /// Records every DAT insertion.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    /// In reduced and checking modes, queue redundant updates instead of
    /// dropping them.
    pub fn queue_redundant_updates(mut self, on: bool) -> Self {
        self.queue_redundant = on;
        self
    }

    pub fn run(mut self, entries: &[CallKey<D::Value>]) -> Result<Analysis<D::Value>, CheckError> {
        for e in entries {
            if self.program.rules_of(&e.pred).is_none() {
                return Err(AnalysisError::UnknownPredicate(e.pred.clone()).into());
            }
            self.queue.push_newcall(e.clone());
        }
        while let Some(event) = self.queue.pop() {
            self.counters.events += 1;
            match event {
                Event::NewCall(key) => self.new_call_pattern(key)?,
                Event::Arc(arc) => self.process_arc(arc)?,
                Event::Updated(key) => self.add_dependent_rules(&key),
            }
        }
        self.counters.max_u = self.counters.max_u.max(self.dat.max_u());
        Ok(Analysis {
            table: self.at,
            dat: self.dat,
            red: self.red,
            counters: self.counters,
            trace: self.trace.unwrap_or_default(),
        })
    }

    fn new_call_pattern(&mut self, key: CallKey<D::Value>) -> Result<(), CheckError> {
        if self.at.contains_key(&key) {
            return Ok(());
        }
        self.counters.newcalls += 1;
        let rules = self
            .program
            .rules_of(&key.pred)
            .ok_or_else(|| AnalysisError::UnknownPredicate(key.pred.clone()))?;
        self.at.insert(key.clone(), Pattern::bottom());
        if key.pattern.is_bottom() {
            return Ok(());
        }
        for rule in rules {
            let head = rule
                .head
                .arg_vars()
                .ok_or_else(|| AnalysisError::NotNormalized(rule.head.to_string()))?;
            let cp = self.domain.extend(&key.substitution_over(&head), &rule.vars());
            if rule.body.is_empty() {
                let ap = self.domain.restrict(&cp, &head).to_pattern();
                self.insert_answer_info(&key, ap)?;
            } else {
                self.queue.push_arc(ArcEvent {
                    slot: ArcSlot {
                        head: key.clone(),
                        rule: rule.id,
                        pos: 1,
                    },
                    cp,
                    u: 0,
                });
            }
        }
        Ok(())
    }

    fn process_arc(&mut self, arc: ArcEvent<D::Value>) -> Result<(), CheckError> {
        self.counters.arcs += 1;
        let ArcEvent { slot, cp: cp1, u } = arc;
        let rule = self
            .program
            .rule(&slot.head.pred, slot.rule)
            .expect("arc slots refer to existing rules");
        let vars = rule.vars();
        let literal = &rule.body[slot.pos - 1];

        let (cp3, callee) = match literal {
            Literal::Constraint(c) => (self.domain.add_constraint(c, &cp1)?, None),
            Literal::Call(atom) => {
                if self.program.rules_of(&atom.pred).is_none() {
                    return Err(AnalysisError::UnknownPredicate(atom.pred.clone()).into());
                }
                let args = atom
                    .arg_vars()
                    .ok_or_else(|| AnalysisError::NotNormalized(atom.to_string()))?;
                let (key, _) = canonicalize(atom, &cp1);
                let seen = self.lookup_answer(&key);
                let ap = self.domain.extend(&Substitution::from_pattern(args, &seen), &vars);
                (self.domain.conj(&cp1, &ap), Some((key, seen)))
            }
        };

        if let Some((callee, seen)) = callee {
            self.store_arc(&slot, cp1, callee, seen, u, cp3.is_bottom())?;
        }
        if cp3.is_bottom() {
            return Ok(());
        }
        if slot.pos < rule.body.len() {
            let next = ArcSlot {
                head: slot.head.clone(),
                rule: slot.rule,
                pos: slot.pos + 1,
            };
            let w = self.dat.get(&next).map_or(0, |a| a.u);
            self.queue.push_arc(ArcEvent {
                slot: next,
                cp: cp3,
                u: w,
            });
        } else {
            let head = rule.head.arg_vars().expect("normalized head");
            let ap = self.domain.restrict(&cp3, &head).to_pattern();
            self.insert_answer_info(&slot.head, ap)?;
        }
        Ok(())
    }

    fn store_arc(
        &mut self,
        slot: &ArcSlot<D::Value>,
        cp: Substitution<D::Value>,
        callee: CallKey<D::Value>,
        seen: Pattern<D::Value>,
        u: u32,
        suspended: bool,
    ) -> Result<(), CheckError> {
        debug_assert_eq!(
            self.dat.get(slot).map_or(0, |a| a.u),
            u,
            "queued u of {slot} diverged from the table"
        );
        let u = if suspended { u } else { u + 1 };
        self.counters.dat_inserts += 1;
        self.counters.max_u = self.counters.max_u.max(u);
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEntry {
                slot: slot.clone(),
                callee: callee.clone(),
                suspended,
            });
        }
        self.dat.insert(
            slot.clone(),
            DepArc {
                cp,
                callee: callee.clone(),
                u,
                seen,
            },
        );
        if !suspended && u > 1 {
            match self.mode {
                Mode::Full => {}
                Mode::Reduced => {
                    self.red.insert(callee);
                }
                Mode::Checking(_) => {
                    return Err(CheckError::RecomputationRequired {
                        slot: slot.to_string(),
                        callee: callee.to_string(),
                        u,
                    })
                }
            }
        }
        Ok(())
    }

    fn lookup_answer(&mut self, key: &CallKey<D::Value>) -> Pattern<D::Value> {
        match self.at.get(key) {
            Some(ap) => ap.clone(),
            None => {
                self.queue.push_newcall(key.clone());
                Pattern::bottom()
            }
        }
    }

    fn insert_answer_info(&mut self, key: &CallKey<D::Value>, ap: Pattern<D::Value>) -> Result<(), CheckError> {
        let ap0 = self.at.get(key).cloned().expect("answer slot created by newcall");
        let mut ap1 = ap0.lub(&ap);
        let certified = match self.mode {
            Mode::Checking(cert) => cert.get(key),
            _ => None,
        };
        if let Some(cert_ap) = certified {
            if &ap.lub(cert_ap) != cert_ap {
                return Err(CheckError::AnswerMismatch {
                    key: key.to_string(),
                    checker: ap.to_string(),
                    certificate: cert_ap.to_string(),
                });
            }
        }
        if ap0 == ap1 {
            return Ok(());
        }
        if let (Some(cert_ap), true) = (certified, ap0.is_bottom()) {
            ap1 = cert_ap.clone();
        }
        assert!(ap0.leq(&ap1), "answers for {key} must ascend");
        self.at.insert(key.clone(), ap1);
        let redundant = !self.dat.has_dependents(key);
        match self.mode {
            Mode::Full => self.queue.push_updated(key.clone(), redundant),
            Mode::Reduced | Mode::Checking(_) => {
                if !redundant || self.queue_redundant {
                    self.queue.push_updated(key.clone(), redundant);
                } else {
                    self.counters.suppressed_updates += 1;
                }
            }
        }
        Ok(())
    }

    fn add_dependent_rules(&mut self, key: &CallKey<D::Value>) {
        self.counters.updates += 1;
        let current = &self.at[key];
        for slot in self.dat.dependents(key) {
            let arc = self.dat.get(&slot).expect("indexed slot");
            if &arc.seen == current {
                self.counters.stale_arcs += 1;
                continue;
            }
            let event = ArcEvent {
                cp: arc.cp.clone(),
                u: arc.u,
                slot,
            };
            self.queue.push_arc(event);
        }
    }
}

fn into_analysis_error(e: CheckError) -> AnalysisError {
    match e {
        CheckError::Analysis(e) => e,
        other => unreachable!("analysis modes never reject: {other}"),
    }
}

/// Plain fixpoint analysis of `program` from the entry call patterns.
pub fn analyze_f<D: Domain>(
    program: &Program,
    domain: &D,
    entries: &[CallKey<D::Value>],
    strategy: Strategy,
) -> Result<Analysis<D::Value>, AnalysisError> {
    Analyzer::new(program, domain, strategy, Mode::Full)
        .run(entries)
        .map_err(into_analysis_error)
}

/// Analysis instrumented with traversal counters; also returns the set of
/// relevant call patterns in [`Analysis::red`].
pub fn analyze_r<D: Domain>(
    program: &Program,
    domain: &D,
    entries: &[CallKey<D::Value>],
    strategy: Strategy,
) -> Result<Analysis<D::Value>, AnalysisError> {
    Analyzer::new(program, domain, strategy, Mode::Reduced)
        .run(entries)
        .map_err(into_analysis_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{TypeDomain, TypeValue};
    use crate::program::{normalize, parse, PredKey};

    const RECTOY: &str = "rectoy(N,M) :- N = 0, M = 0.\n\
                          rectoy(N,M) :- N1 is N-1, rectoy(N1,R), M is N1+R.\n";
    const QP: &str = "q(X) :- p(X).\np(X) :- X = 1.0.\np(X) :- X = 1.\n";

    fn key(name: &str, vals: &str) -> CallKey<TypeValue> {
        let p: Pattern<TypeValue> = vals.parse().unwrap();
        let arity = p.values().map_or(0, |v| v.len());
        CallKey::new(PredKey::new(name, arity), p)
    }

    fn run(src: &str, entry: CallKey<TypeValue>, strategy: &str, mode: Mode<TypeValue>) -> Analysis<TypeValue> {
        let p = normalize(&parse(src).unwrap());
        Analyzer::new(&p, &TypeDomain::new(), Strategy::from_id(strategy).unwrap(), mode)
            .run(&[entry])
            .unwrap()
    }

    #[test]
    fn rectoy_fixpoint_and_dat() {
        for s in STRATEGY_IDS {
            let a = run(RECTOY, key("rectoy", "(int,term)"), s, Mode::Full);
            assert_eq!(
                dump_table(&a.table),
                "AT 1\n  rectoy/2:(int,term) -> (int,int)\n",
                "strategy {s}"
            );
            let arcs: Vec<_> = a
                .dat
                .iter()
                .map(|(s, a)| (s.to_string(), a.callee.to_string()))
                .collect();
            assert_eq!(
                arcs,
                [("rectoy/2:(int,term)#2.2".to_string(), "rectoy/2:(int,term)".to_string())]
            );
        }
    }

    #[test]
    fn qp_red_depends_on_strategy() {
        let entry = key("q", "(term)");
        let fifo = run(QP, entry.clone(), "textual-fifo", Mode::Reduced);
        assert!(fifo.red.is_empty());
        let rev = run(QP, entry, "reverse-rules", Mode::Reduced);
        assert_eq!(
            rev.red.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
            ["p/1:(term)"]
        );
        assert_eq!(rev.table, fifo.table);
        assert_eq!(rev.counters.max_u, 2);
    }

    #[test]
    fn checking_rejects_a_second_traversal() {
        let p = normalize(&parse(QP).unwrap());
        let empty = AnswerTable::new();
        let err = Analyzer::new(
            &p,
            &TypeDomain::new(),
            Strategy::from_id("reverse-rules").unwrap(),
            Mode::Checking(&empty),
        )
        .run(&[key("q", "(term)")])
        .unwrap_err();
        assert!(matches!(err, CheckError::RecomputationRequired { u: 2, .. }), "{err}");
    }

    #[test]
    fn no_entries_no_table() {
        let p = normalize(&parse(RECTOY).unwrap());
        let a = analyze_f(&p, &TypeDomain::new(), &[], Strategy::from_id("textual-fifo").unwrap()).unwrap();
        assert!(a.table.is_empty());
        assert_eq!(a.counters, Counters::default());
    }

    #[test]
    fn unknown_predicate() {
        let p = normalize(&parse("a(X) :- b(X).").unwrap());
        let s = Strategy::from_id("textual-fifo").unwrap();
        let err = analyze_f(&p, &TypeDomain::new(), &[key("a", "(term)")], s).unwrap_err();
        assert_eq!(err, AnalysisError::UnknownPredicate(PredKey::new("b", 1)));
        let err = analyze_f(&p, &TypeDomain::new(), &[key("zz", "(term)")], s).unwrap_err();
        assert_eq!(err, AnalysisError::UnknownPredicate(PredKey::new("zz", 1)));
    }

    #[test]
    fn facts_answer_immediately() {
        let a = run("id(X).", key("id", "(int)"), "textual-fifo", Mode::Full);
        assert_eq!(a.table[&key("id", "(int)")], "(int)".parse().unwrap());
    }

    #[test]
    fn dump_is_sorted_text() {
        let a = run(QP, key("q", "(term)"), "textual-fifo", Mode::Full);
        let d = a.dump();
        assert!(
            d.starts_with("AT 2\n  p/1:(term) -> (real)\n  q/1:(term) -> (real)\nDAT 1\n"),
            "{d}"
        );
    }
}
