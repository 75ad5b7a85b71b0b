use std::collections::{BTreeMap, HashMap, HashSet};

use super::term::{Atom, Constraint, Literal, PredKey, Program, Rule, Term, Var};

struct Fresh(usize);

impl Fresh {
    fn next(&mut self) -> Var {
        let v = Var::fresh(self.0);
        self.0 += 1;
        v
    }
}

/// Rewrites a program so that every atom argument is a distinct variable and
/// all rules of a predicate share one head-variable sequence (base form).
///
/// Non-variable and repeated arguments are flattened into `=` constraints
/// placed before the literal. Idempotent.
pub fn normalize(program: &Program) -> Program {
    let mut fresh = Fresh(program.max_reserved_index().map_or(0, |i| i + 1));

    let mut bases: BTreeMap<PredKey, Vec<Var>> = BTreeMap::new();
    for pred in program.predicates() {
        let first = program
            .rules_of(pred)
            .and_then(|mut rs| rs.next())
            .expect("indexed predicates have rules");
        let base = first
            .head
            .arg_vars()
            .unwrap_or_else(|| (0..pred.arity()).map(|_| fresh.next()).collect());
        bases.insert(pred.clone(), base);
    }

    let rules = program
        .rules()
        .iter()
        .map(|r| normalize_rule(r, &bases[&r.head.pred], &mut fresh));
    Program::from_rules(rules)
}

fn normalize_rule(rule: &Rule, base: &[Var], fresh: &mut Fresh) -> Rule {
    let mut map: HashMap<Var, Var> = HashMap::new();
    let mut prefix: Vec<(Var, Term)> = Vec::new();
    for (arg, b) in rule.head.args.iter().zip(base) {
        match arg {
            Term::Var(v) if !map.contains_key(v) => {
                map.insert(v.clone(), b.clone());
            }
            t => prefix.push((b.clone(), t.clone())),
        }
    }
    let base_names: HashSet<&Var> = base.iter().collect();
    for v in rule.vars() {
        if map.contains_key(&v) {
            continue;
        }
        let target = if base_names.contains(&v) {
            fresh.next()
        } else {
            v.clone()
        };
        map.insert(v, target);
    }
    let rename = |v: &Var| map[v].clone();

    let mut body = Vec::with_capacity(rule.body.len() + prefix.len());
    for (b, t) in prefix {
        body.push(Literal::Constraint(Constraint::Unify(Term::Var(b), t.rename(&rename))));
    }
    for lit in &rule.body {
        flatten_literal(lit.rename(&rename), fresh, &mut body);
    }
    Rule {
        id: rule.id,
        head: Atom {
            pred: rule.head.pred.clone(),
            args: base.iter().cloned().map(Term::Var).collect(),
        },
        body,
    }
}

fn flatten_literal(lit: Literal, fresh: &mut Fresh, out: &mut Vec<Literal>) {
    match lit {
        Literal::Call(atom) => {
            let mut seen: Vec<Var> = Vec::new();
            let mut args = Vec::with_capacity(atom.args.len());
            for arg in atom.args {
                match arg {
                    Term::Var(v) if !seen.contains(&v) => {
                        seen.push(v.clone());
                        args.push(Term::Var(v));
                    }
                    t => {
                        let f = fresh.next();
                        out.push(Literal::Constraint(Constraint::Unify(Term::Var(f.clone()), t)));
                        seen.push(f.clone());
                        args.push(Term::Var(f));
                    }
                }
            }
            out.push(Literal::Call(Atom { pred: atom.pred, args }));
        }
        Literal::Constraint(Constraint::Unify(l, r)) => match (l, r) {
            (l @ Term::Var(_), r) => out.push(Literal::Constraint(Constraint::Unify(l, r))),
            (l, r @ Term::Var(_)) => out.push(Literal::Constraint(Constraint::Unify(r, l))),
            (l, r) => {
                let f = Term::Var(fresh.next());
                out.push(Literal::Constraint(Constraint::Unify(f.clone(), l)));
                out.push(Literal::Constraint(Constraint::Unify(f, r)));
            }
        },
        Literal::Constraint(Constraint::Builtin { name, mut args }) => match args.first() {
            Some(Term::Var(_)) | None => {
                out.push(Literal::Constraint(Constraint::Builtin { name, args }));
            }
            Some(_) => {
                let f = Term::Var(fresh.next());
                let lhs = std::mem::replace(&mut args[0], f.clone());
                out.push(Literal::Constraint(Constraint::Builtin { name, args }));
                out.push(Literal::Constraint(Constraint::Unify(f, lhs)));
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse;

    fn norm(src: &str) -> Program {
        normalize(&parse(src).unwrap())
    }

    #[test]
    fn already_normal_is_unchanged() {
        let p = parse("q(X) :- p(X).\np(X) :- X = 1.").unwrap();
        assert_eq!(normalize(&p), p);
    }

    #[test]
    fn ground_fact_is_flattened() {
        let n = norm("r(a).");
        assert_eq!(n.canonical_text(), "r(_G0) :- _G0 = a.\n");
        assert_eq!(normalize(&n), n);
    }

    #[test]
    fn rectoy_keeps_its_base_form() {
        let src = "rectoy(N,M) :- N = 0, M = 0.\n\
                   rectoy(N,M) :- N1 is N-1, rectoy(N1,R), M is N1+R.\n";
        let n = norm(src);
        assert_eq!(n, parse(src).unwrap());
        assert!(n.is_normalized());
    }

    #[test]
    fn heads_share_one_variable_sequence() {
        let n = norm("p(X, Y) :- q(Y).\np(A, X) :- q(X), A = 1.\nq(Z).");
        assert_eq!(n.canonical_text(), "p(X, Y) :- q(Y).\np(X, Y) :- q(Y), X = 1.\nq(Z).\n");
    }

    #[test]
    fn base_name_collision_is_renamed_apart() {
        // Y in rule 2's body is local, but Y is also a base variable.
        let n = norm("p(X, Y) :- q(X, Y).\np(A, B) :- q(A, Y), B = Y.\nq(U, V).");
        assert_eq!(
            n.canonical_text(),
            "p(X, Y) :- q(X, Y).\np(X, Y) :- q(X, _G0), Y = _G0.\nq(U, V).\n"
        );
        assert!(n.is_normalized());
    }

    #[test]
    fn repeated_and_constant_call_arguments() {
        let n = norm("p(X) :- q(X, X, 3).\nq(A, B, C).");
        assert_eq!(
            n.canonical_text(),
            "p(X) :- _G0 = X, _G1 = 3, q(X, _G0, _G1).\nq(A, B, C).\n"
        );
    }

    #[test]
    fn repeated_head_vars_and_swapped_unify() {
        let n = norm("eq(X, X).\nk(Z) :- 1 = Z, f(a) = g(b), 3 is Z + 1.");
        assert_eq!(
            n.canonical_text(),
            "eq(_G0, _G1) :- _G1 = _G0.\nk(Z) :- Z = 1, _G2 = f(a), _G2 = g(b), _G3 is Z + 1, _G3 = 3.\n"
        );
        assert_eq!(normalize(&n), n);
    }
}
