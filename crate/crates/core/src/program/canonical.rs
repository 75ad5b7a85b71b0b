use std::fmt;

use super::term::{Atom, PredKey, Var};
use crate::domain::{Lattice, Pattern, Substitution};

/// A bijective variable map with its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Renaming {
    pairs: Vec<(Var, Var)>,
}

impl Renaming {
    /// Builds a renaming from `(from, to)` pairs. Panics if not bijective.
    pub fn new(pairs: Vec<(Var, Var)>) -> Self {
        for (i, (a, b)) in pairs.iter().enumerate() {
            for (c, d) in &pairs[i + 1..] {
                assert!(a != c && b != d, "renaming must be bijective");
            }
        }
        Renaming { pairs }
    }

    pub fn apply(&self, v: &Var) -> Option<&Var> {
        self.pairs.iter().find(|(a, _)| a == v).map(|(_, b)| b)
    }

    pub fn inverse(&self) -> Renaming {
        Renaming {
            pairs: self.pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
        }
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.pairs.iter().map(|(a, _)| a)
    }

    pub fn is_identity(&self) -> bool {
        self.pairs.iter().all(|(a, b)| a == b)
    }
}

/// Name of the i-th canonical variable (1-based).
pub fn canonical_var(i: usize) -> Var {
    Var::new(&format!("v{i}"))
}

/// A call pattern modulo renaming: the predicate plus the abstract values of
/// its arguments in argument order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CallKey<V> {
    pub pred: PredKey,
    pub pattern: Pattern<V>,
}

impl<V: Lattice> CallKey<V> {
    pub fn new(pred: PredKey, pattern: Pattern<V>) -> Self {
        if let Some(vals) = pattern.values() {
            assert_eq!(vals.len(), pred.arity(), "pattern arity mismatch for {pred}");
        }
        CallKey { pred, pattern }
    }

    /// The substitution of this key over the given (head) variables.
    pub fn substitution_over(&self, vars: &[Var]) -> Substitution<V> {
        Substitution::from_pattern(vars.to_vec(), &self.pattern)
    }
}

impl<V: fmt::Debug> fmt::Debug for CallKey<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:?}", self.pred, self.pattern)
    }
}

impl<V: Lattice> fmt::Display for CallKey<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.pred, self.pattern)
    }
}

/// Computes the canonical key of `atom:cp` and the renaming from the atom's
/// variables to the canonical ones (`v1..vn` in argument order).
///
/// The atom must be normalized and `cp` must cover its variables.
pub fn canonicalize<V: Lattice>(atom: &Atom, cp: &Substitution<V>) -> (CallKey<V>, Renaming) {
    let args = atom
        .arg_vars()
        .unwrap_or_else(|| panic!("canonicalize: {atom} is not normalized"));
    let pattern = cp.pattern_over(&args);
    let renaming = Renaming::new(
        args.into_iter()
            .enumerate()
            .map(|(i, v)| (v, canonical_var(i + 1)))
            .collect(),
    );
    (CallKey::new(atom.pred.clone(), pattern), renaming)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TypeValue::{self, *};
    use crate::program::{parse_atom, Term as PTerm};

    fn cp(names: &[&str], vals: &[TypeValue]) -> Substitution<TypeValue> {
        Substitution::new(names.iter().map(|n| Var::new(n)).collect(), vals.to_vec())
    }

    #[test]
    fn renamed_call_has_same_key() {
        let a = parse_atom("rectoy(N1, R)").unwrap();
        let b = parse_atom("rectoy(N, M)").unwrap();
        let (ka, _) = canonicalize(&a, &cp(&["N1", "R", "N"], &[Int, Term, Int]));
        let (kb, _) = canonicalize(&b, &cp(&["N", "M"], &[Int, Term]));
        assert_eq!(ka, kb);
        assert_eq!(ka.to_string(), "rectoy/2:(int,term)");
    }

    #[test]
    fn already_canonical() {
        let a = Atom::new("p", vec![PTerm::var("v1")]);
        let (k, r) = canonicalize(&a, &cp(&["v1"], &[Term]));
        assert_eq!(k.to_string(), "p/1:(term)");
        assert!(r.is_identity());
    }

    #[test]
    fn key_is_constant_on_renaming_orbit() {
        let names = ["A", "B", "X", "Y", "Z"];
        for &x in TypeValue::elements() {
            for &y in TypeValue::elements() {
                let mut keys = Vec::new();
                for a in names {
                    for b in names {
                        if a == b {
                            continue;
                        }
                        let atom = Atom::new("q", vec![PTerm::var(a), PTerm::var(b)]);
                        keys.push(canonicalize(&atom, &cp(&[b, a], &[y, x])).0);
                    }
                }
                assert!(keys.windows(2).all(|w| w[0] == w[1]));
            }
        }
    }

    #[test]
    fn inverse_round_trips() {
        let atom = parse_atom("q(B, A)").unwrap();
        let (_, r) = canonicalize(&atom, &cp(&["A", "B"], &[Int, Real]));
        let inv = r.inverse();
        for v in r.domain() {
            assert_eq!(inv.apply(r.apply(v).unwrap()), Some(v));
        }
        assert_eq!(r.apply(&Var::new("B")), Some(&Var::new("v1")));
    }

    #[test]
    fn failed_substitution_gives_bottom_key() {
        let atom = parse_atom("p(X)").unwrap();
        let (k, _) = canonicalize(&atom, &Substitution::<TypeValue>::bottom(vec![Var::new("X")]));
        assert!(k.pattern.is_bottom());
    }
}
