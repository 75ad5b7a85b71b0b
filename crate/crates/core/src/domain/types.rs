use std::fmt;
use std::str::FromStr;

use super::{as_is, eval_arith, BuiltinSignature, Domain, DomainDescriptor, Lattice, Substitution, ARITH_OPS};
use crate::error::AnalysisError;
use crate::program::{Constraint, Term};

pub(super) const ID: &str = "types-v1";

/// The type chain ⊥ ⊑ int ⊑ real ⊑ term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeValue {
    Bottom,
    Int,
    Real,
    Term,
}

impl Lattice for TypeValue {
    fn bottom() -> Self {
        TypeValue::Bottom
    }

    fn top() -> Self {
        TypeValue::Term
    }

    fn leq(self, other: Self) -> bool {
        self <= other
    }

    fn lub(self, other: Self) -> Self {
        self.max(other)
    }

    fn glb(self, other: Self) -> Self {
        self.min(other)
    }

    fn elements() -> &'static [Self] {
        &[TypeValue::Bottom, TypeValue::Int, TypeValue::Real, TypeValue::Term]
    }
}

impl fmt::Display for TypeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypeValue::Bottom => "bottom",
            TypeValue::Int => "int",
            TypeValue::Real => "real",
            TypeValue::Term => "term",
        })
    }
}

impl FromStr for TypeValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bottom" => Ok(TypeValue::Bottom),
            "int" => Ok(TypeValue::Int),
            "real" => Ok(TypeValue::Real),
            "term" => Ok(TypeValue::Term),
            _ => Err(format!("unknown type `{s}`")),
        }
    }
}

/// Flat type inference over the int/real/term chain.
#[derive(Debug, Clone)]
pub struct TypeDomain {
    desc: DomainDescriptor<TypeValue>,
}

impl Default for TypeDomain {
    fn default() -> Self {
        Self::new()
    }
}

impl TypeDomain {
    pub fn new() -> Self {
        // int op int is int; a real operand makes it real; anything else is term.
        let proper = [TypeValue::Int, TypeValue::Real, TypeValue::Term];
        let mut signatures = Vec::new();
        for op in ARITH_OPS {
            for a in proper {
                for b in proper {
                    signatures.push(BuiltinSignature {
                        builtin: "is/2",
                        op,
                        operands: [a, b],
                        result: a.lub(b),
                    });
                }
            }
        }
        TypeDomain {
            desc: DomainDescriptor { id: ID, signatures },
        }
    }
}

fn literal_type(t: &Term) -> TypeValue {
    match t {
        Term::Int(_) => TypeValue::Int,
        Term::Float(_) => TypeValue::Real,
        _ => TypeValue::Term,
    }
}

impl Domain for TypeDomain {
    type Value = TypeValue;

    fn id(&self) -> &'static str {
        ID
    }

    fn descriptor(&self) -> &DomainDescriptor<TypeValue> {
        &self.desc
    }

    fn add_constraint(
        &self,
        constraint: &Constraint,
        cp: &Substitution<TypeValue>,
    ) -> Result<Substitution<TypeValue>, AnalysisError> {
        let is = as_is(constraint)?;
        if cp.is_bottom() {
            return Ok(cp.clone());
        }
        let mut out = cp.clone();
        match (constraint, is) {
            (_, Some((x, expr))) => {
                let t = eval_arith(&self.desc, expr, cp, &literal_type)?;
                out.refine(x, t);
            }
            (Constraint::Unify(lhs, rhs), None) => {
                let x = lhs
                    .as_var()
                    .ok_or_else(|| AnalysisError::NotNormalized(constraint.to_string()))?;
                match rhs {
                    Term::Var(y) => {
                        let g = cp.get(x).unwrap().glb(cp.get(y).unwrap());
                        out.refine(x, g);
                        out.refine(y, g);
                    }
                    t => out.refine(x, literal_type(t)),
                }
            }
            (Constraint::Builtin { .. }, None) => unreachable!("as_is rejects other builtins"),
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::TypeValue::*;
    use super::*;
    use crate::program::{parse, Literal, Var};
    use proptest::prelude::*;

    fn cp(names: &[&str], vals: &[TypeValue]) -> Substitution<TypeValue> {
        Substitution::new(names.iter().map(|n| Var::new(n)).collect(), vals.to_vec())
    }

    fn constraint(src: &str) -> Constraint {
        let p = parse(&format!("t :- {src}.")).unwrap();
        match &p.rules()[0].body[0] {
            Literal::Constraint(c) => c.clone(),
            other => panic!("not a constraint: {other}"),
        }
    }

    fn add(src: &str, s: &Substitution<TypeValue>) -> Substitution<TypeValue> {
        TypeDomain::new().add_constraint(&constraint(src), s).unwrap()
    }

    #[test]
    fn unify_with_literals() {
        assert_eq!(add("N = 0", &cp(&["N"], &[Int])), cp(&["N"], &[Int]));
        assert_eq!(
            add("M = 0", &cp(&["N", "M"], &[Int, Term])),
            cp(&["N", "M"], &[Int, Int])
        );
        assert_eq!(add("X = 1.0", &cp(&["X"], &[Term])), cp(&["X"], &[Real]));
        assert_eq!(
            add("X = f(Y)", &cp(&["X", "Y"], &[Int, Term])),
            cp(&["X", "Y"], &[Int, Term])
        );
        assert_eq!(add("X = a", &cp(&["X"], &[Real])), cp(&["X"], &[Real]));
    }

    #[test]
    fn unify_vars_takes_glb() {
        assert_eq!(
            add("X = Y", &cp(&["X", "Y"], &[Real, Int])),
            cp(&["X", "Y"], &[Int, Int])
        );
    }

    #[test]
    fn arithmetic_signatures() {
        assert_eq!(
            add("N1 is N - 1", &cp(&["N", "N1"], &[Int, Term])),
            cp(&["N", "N1"], &[Int, Int])
        );
        assert_eq!(
            add("M is N1 + R", &cp(&["M", "N1", "R"], &[Term, Int, Real])),
            cp(&["M", "N1", "R"], &[Real, Int, Real])
        );
        assert_eq!(
            add("M is N1 * 0.5", &cp(&["M", "N1"], &[Term, Int])),
            cp(&["M", "N1"], &[Real, Int])
        );
        assert_eq!(
            add("M is -X", &cp(&["M", "X"], &[Term, Term])),
            cp(&["M", "X"], &[Term, Term])
        );
        assert_eq!(
            add("M is X + 1", &cp(&["M", "X"], &[Int, Real])),
            cp(&["M", "X"], &[Int, Real])
        );
    }

    #[test]
    fn unknown_builtins() {
        let d = TypeDomain::new();
        let c = Constraint::Builtin {
            name: "succ".into(),
            args: vec![crate::program::Term::var("X"), crate::program::Term::var("Y")],
        };
        let s = cp(&["X", "Y"], &[Int, Int]);
        assert!(matches!(
            d.add_constraint(&c, &s),
            Err(AnalysisError::UnknownBuiltin(_))
        ));
        let c = constraint("X is max(Y, 1)");
        assert!(matches!(
            d.add_constraint(&c, &s),
            Err(AnalysisError::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn failed_input_stays_failed() {
        let bot = Substitution::bottom(vec![Var::new("X")]);
        assert!(add("X = 1", &bot).is_bottom());
        assert!(add("X is X + 1", &bot).is_bottom());
    }

    fn value() -> impl Strategy<Value = TypeValue> {
        prop::sample::select(TypeValue::elements().to_vec())
    }

    fn subst3() -> impl Strategy<Value = Substitution<TypeValue>> {
        prop::collection::vec(value(), 3).prop_map(|v| cp(&["X", "Y", "Z"], &v))
    }

    const CONSTRAINTS: &[&str] = &[
        "X = 1",
        "X = 2.5",
        "X = f(Y)",
        "X = Y",
        "X is Y + Z",
        "X is Y * 2.0",
        "Y is -Z",
    ];

    proptest! {
        #[test]
        fn lub_conj_laws(a in subst3(), b in subst3(), c in subst3()) {
            prop_assert_eq!(a.lub(&b), b.lub(&a));
            prop_assert_eq!(a.conj(&b), b.conj(&a));
            prop_assert_eq!(a.lub(&b).lub(&c), a.lub(&b.lub(&c)));
            prop_assert_eq!(a.conj(&b).conj(&c), a.conj(&b.conj(&c)));
            prop_assert_eq!(a.lub(&a), a.clone());
            prop_assert_eq!(a.conj(&a), a.clone());
            prop_assert!(a.leq(&a.lub(&b)));
            prop_assert!(a.conj(&b).leq(&a));
        }

        #[test]
        fn add_is_reductive(s in subst3(), i in 0..CONSTRAINTS.len()) {
            let out = add(CONSTRAINTS[i], &s);
            prop_assert!(out.leq(&s));
        }

        #[test]
        fn restrict_after_extend(s in prop::collection::vec(value(), 2)) {
            let s = cp(&["X", "Y"], &s);
            let wide: Vec<Var> = ["X", "Y", "Z"].iter().map(|n| Var::new(n)).collect();
            prop_assert_eq!(s.extend(&wide).restrict(s.scope()), s);
        }
    }
}
