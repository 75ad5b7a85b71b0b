//! A table-driven, non-incremental evaluation of the abstract semantics.
//! Used as the fixpoint test of the full-certificate checker and as an
//! independent oracle for the event-driven analyzer.

use std::collections::{BTreeSet, VecDeque};

use super::AnswerTable;
use crate::domain::{Domain, Pattern, Substitution};
use crate::error::AnalysisError;
use crate::program::{canonicalize, CallKey, Literal, Program};

/// Output of one application of the abstract operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundResult<V> {
    pub table: AnswerTable<V>,
    /// Body call patterns the input table had no entry for.
    pub missing: BTreeSet<CallKey<V>>,
    /// Literals evaluated.
    pub literals: u64,
}

/// Evaluates every rule of `key` against `table`, reporting each body call
/// pattern reached to `on_call`. Returns the lub of the rule answers.
fn eval_key<D: Domain>(
    program: &Program,
    domain: &D,
    table: &AnswerTable<D::Value>,
    key: &CallKey<D::Value>,
    literals: &mut u64,
    on_call: &mut impl FnMut(&CallKey<D::Value>),
) -> Result<Pattern<D::Value>, AnalysisError> {
    let rules = program
        .rules_of(&key.pred)
        .ok_or_else(|| AnalysisError::UnknownPredicate(key.pred.clone()))?;
    let mut answer = Pattern::bottom();
    if key.pattern.is_bottom() {
        return Ok(answer);
    }
    for rule in rules {
        let head = rule
            .head
            .arg_vars()
            .ok_or_else(|| AnalysisError::NotNormalized(rule.head.to_string()))?;
        let vars = rule.vars();
        let mut cp = domain.extend(&key.substitution_over(&head), &vars);
        for lit in &rule.body {
            if cp.is_bottom() {
                break;
            }
            *literals += 1;
            cp = match lit {
                Literal::Constraint(c) => domain.add_constraint(c, &cp)?,
                Literal::Call(atom) => {
                    if program.rules_of(&atom.pred).is_none() {
                        return Err(AnalysisError::UnknownPredicate(atom.pred.clone()));
                    }
                    let args = atom
                        .arg_vars()
                        .ok_or_else(|| AnalysisError::NotNormalized(atom.to_string()))?;
                    let (callee, _) = canonicalize(atom, &cp);
                    on_call(&callee);
                    let ap = table.get(&callee).cloned().unwrap_or_else(Pattern::bottom);
                    let ap = domain.extend(&Substitution::from_pattern(args, &ap), &vars);
                    domain.conj(&cp, &ap)
                }
            };
        }
        if !cp.is_bottom() {
            answer = answer.lub(&domain.restrict(&cp, &head).to_pattern());
        }
    }
    Ok(answer)
}

/// Applies the abstract operator once: re-evaluates every rule for every
/// key of `table` and every entry, looking body calls up in `table` only.
/// Missing body keys are treated as ⊥ and appear in the output with ⊥.
pub fn one_round<D: Domain>(
    program: &Program,
    domain: &D,
    table: &AnswerTable<D::Value>,
    entries: &[CallKey<D::Value>],
) -> Result<RoundResult<D::Value>, AnalysisError> {
    let keys: BTreeSet<CallKey<D::Value>> = table.keys().chain(entries).cloned().collect();
    let mut out = AnswerTable::new();
    let mut missing = BTreeSet::new();
    let mut literals = 0;
    for key in &keys {
        let ap = eval_key(program, domain, table, key, &mut literals, &mut |callee| {
            if !table.contains_key(callee) {
                missing.insert(callee.clone());
            }
        })?;
        out.insert(key.clone(), ap);
    }
    for key in &missing {
        out.entry(key.clone()).or_insert_with(Pattern::bottom);
    }
    Ok(RoundResult {
        table: out,
        missing,
        literals,
    })
}

/// Kleene iteration of [`one_round`] from the all-⊥ table on the entries.
/// Returns the stable table and the number of rounds taken.
pub fn kleene<D: Domain>(
    program: &Program,
    domain: &D,
    entries: &[CallKey<D::Value>],
) -> Result<(AnswerTable<D::Value>, usize), AnalysisError> {
    let mut table: AnswerTable<D::Value> = entries.iter().map(|k| (k.clone(), Pattern::bottom())).collect();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let next = one_round(program, domain, &table, entries)?.table;
        if next == table {
            return Ok((table, rounds));
        }
        table = next;
    }
}

/// Call patterns reachable from the entries when every body call is
/// answered from `table`.
pub fn live_keys<D: Domain>(
    program: &Program,
    domain: &D,
    table: &AnswerTable<D::Value>,
    entries: &[CallKey<D::Value>],
) -> Result<BTreeSet<CallKey<D::Value>>, AnalysisError> {
    let mut seen: BTreeSet<CallKey<D::Value>> = entries.iter().cloned().collect();
    let mut work: VecDeque<CallKey<D::Value>> = entries.iter().cloned().collect();
    let mut literals = 0;
    while let Some(key) = work.pop_front() {
        let mut found = Vec::new();
        eval_key(program, domain, table, &key, &mut literals, &mut |c| {
            found.push(c.clone())
        })?;
        for c in found {
            if seen.insert(c.clone()) {
                work.push_back(c);
            }
        }
    }
    Ok(seen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{TypeDomain, TypeValue};
    use crate::program::{normalize, parse, PredKey};

    fn key(name: &str, vals: &str) -> CallKey<TypeValue> {
        let p: Pattern<TypeValue> = vals.parse().unwrap();
        CallKey::new(PredKey::new(name, p.values().unwrap().len()), p)
    }

    #[test]
    fn rectoy_answer_is_a_fixpoint() {
        let p = normalize(
            &parse("rectoy(N,M) :- N = 0, M = 0.\nrectoy(N,M) :- N1 is N-1, rectoy(N1,R), M is N1+R.").unwrap(),
        );
        let k = key("rectoy", "(int,term)");
        let table: AnswerTable<_> = [(k.clone(), "(int,int)".parse().unwrap())].into();
        let r = one_round(&p, &TypeDomain::new(), &table, std::slice::from_ref(&k)).unwrap();
        assert_eq!(r.table, table);
        assert!(r.missing.is_empty());
        let (fix, _) = kleene(&p, &TypeDomain::new(), &[k]).unwrap();
        assert_eq!(fix, table);
    }

    #[test]
    fn first_step_from_empty_grows() {
        let p = normalize(&parse("q(X) :- p(X).\np(X) :- X = 1.0.\np(X) :- X = 1.").unwrap());
        let q = key("q", "(term)");
        let r = one_round(&p, &TypeDomain::new(), &AnswerTable::new(), std::slice::from_ref(&q)).unwrap();
        assert_eq!(
            r.missing.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
            ["p/1:(term)"]
        );
        assert_eq!(r.table.len(), 2);
        let (fix, rounds) = kleene(&p, &TypeDomain::new(), std::slice::from_ref(&q)).unwrap();
        assert_eq!(fix[&q], "(real)".parse().unwrap());
        assert!(rounds >= 3);
        let live = live_keys(&p, &TypeDomain::new(), &fix, &[q]).unwrap();
        assert_eq!(live.len(), 2);
    }
}
