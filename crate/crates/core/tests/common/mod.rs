#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use acc_kit::bench::{default_corpus, load_corpus, CorpusProgram};
use acc_kit::certify::SafetyPolicy;
use acc_kit::domain::{Domain, DomainKind, Lattice, Pattern};
use acc_kit::engine::{AnswerTable, TraceEntry};
use acc_kit::package::decode_policy;
use acc_kit::pipeline::{load_program, parse_entry};
use acc_kit::program::{CallKey, Literal, PredKey, Program};

pub fn corpus(kind: DomainKind) -> Vec<CorpusProgram> {
    load_corpus(&default_corpus(), kind)
        .expect("corpus directory")
        .into_iter()
        .map(|p| p.unwrap_or_else(|(n, e)| panic!("corpus program {n}: {e}")))
        .collect()
}

pub struct Loaded<V> {
    pub name: String,
    pub program: Program,
    pub entries: Vec<CallKey<V>>,
    pub policy: SafetyPolicy<V>,
}

pub fn load<D: Domain>(p: &CorpusProgram) -> Loaded<D::Value> {
    Loaded {
        name: p.name.clone(),
        program: load_program(&p.source).unwrap(),
        entries: p.entries.iter().map(|e| parse_entry(e).unwrap()).collect(),
        policy: decode_policy(&p.policy).unwrap(),
    }
}

pub fn key<V: Lattice>(name: &str, vals: &str) -> CallKey<V> {
    let Ok(p) = vals.parse::<Pattern<V>>() else {
        panic!("pattern {vals}")
    };
    CallKey::new(PredKey::new(name, p.values().unwrap().len()), p)
}

/// Predicates that can reach themselves through body calls.
pub fn recursive_predicates(program: &Program) -> BTreeSet<PredKey> {
    let mut calls: BTreeMap<PredKey, BTreeSet<PredKey>> = BTreeMap::new();
    for r in program.rules() {
        let out = calls.entry(r.head.pred.clone()).or_default();
        for l in &r.body {
            if let Literal::Call(a) = l {
                out.insert(a.pred.clone());
            }
        }
    }
    let mut rec = BTreeSet::new();
    for p in calls.keys() {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<PredKey> = calls[p].iter().cloned().collect();
        while let Some(q) = stack.pop() {
            if &q == p {
                rec.insert(p.clone());
                break;
            }
            if seen.insert(q.clone()) {
                stack.extend(calls.get(&q).into_iter().flatten().cloned());
            }
        }
    }
    rec
}

/// Relevant call patterns recomputed from a DAT insertion trace: a slot
/// stored non-suspended twice makes its callee relevant.
pub fn replay_red<V: Lattice>(trace: &[TraceEntry<V>]) -> BTreeSet<CallKey<V>> {
    let mut traversals: BTreeMap<_, u32> = BTreeMap::new();
    let mut red = BTreeSet::new();
    for t in trace {
        if t.suspended {
            continue;
        }
        let n = traversals.entry(t.slot.clone()).or_insert(0);
        *n += 1;
        if *n >= 2 {
            red.insert(t.callee.clone());
        }
    }
    red
}

/// Immediate neighbours of `v` in the lattice order, below or above.
pub fn covers<V: Lattice>(v: V, up: bool) -> Vec<V> {
    let strictly = |a: V, b: V| a != b && a.leq(b);
    let candidates: Vec<V> = V::elements()
        .iter()
        .copied()
        .filter(|&w| if up { strictly(v, w) } else { strictly(w, v) })
        .collect();
    candidates
        .iter()
        .copied()
        .filter(|&w| {
            !candidates
                .iter()
                .any(|&x| if up { strictly(x, w) } else { strictly(w, x) })
        })
        .collect()
}

/// Every pattern obtained by moving one component of `ap` one lattice step.
pub fn one_step<V: Lattice>(ap: &Pattern<V>, up: bool) -> Vec<Pattern<V>> {
    let Some(vals) = ap.values() else { return Vec::new() };
    let mut out = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        for w in covers(v, up) {
            let mut next = vals.to_vec();
            next[i] = w;
            out.push(Pattern::new(next));
        }
    }
    out
}

/// `lower ⊑ upper` on every key of `lower`, with missing keys in `upper`
/// failing.
pub fn table_below<V: Lattice>(lower: &AnswerTable<V>, upper: &AnswerTable<V>) -> bool {
    lower.iter().all(|(k, ap)| upper.get(k).is_some_and(|u| ap.leq(u)))
}
