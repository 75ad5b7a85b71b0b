use std::fmt;
use std::str::FromStr;

use super::{as_is, eval_arith, BuiltinSignature, Domain, DomainDescriptor, Lattice, Substitution, ARITH_OPS};
use crate::error::AnalysisError;
use crate::program::Constraint;

pub(super) const ID: &str = "ground-v1";

/// Groundness chain ⊥ ⊑ ground ⊑ any.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Groundness {
    Bottom,
    Ground,
    Any,
}

impl Lattice for Groundness {
    fn bottom() -> Self {
        Groundness::Bottom
    }

    fn top() -> Self {
        Groundness::Any
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
        &[Groundness::Bottom, Groundness::Ground, Groundness::Any]
    }
}

impl fmt::Display for Groundness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Groundness::Bottom => "bottom",
            Groundness::Ground => "ground",
            Groundness::Any => "any",
        })
    }
}

impl FromStr for Groundness {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bottom" => Ok(Groundness::Bottom),
            "ground" => Ok(Groundness::Ground),
            "any" => Ok(Groundness::Any),
            _ => Err(format!("unknown groundness `{s}`")),
        }
    }
}

/// Tracks which variables are certainly bound to ground terms.
#[derive(Debug, Clone)]
pub struct GroundDomain {
    desc: DomainDescriptor<Groundness>,
}

impl Default for GroundDomain {
    fn default() -> Self {
        Self::new()
    }
}

impl GroundDomain {
    pub fn new() -> Self {
        let proper = [Groundness::Ground, Groundness::Any];
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
        GroundDomain {
            desc: DomainDescriptor { id: ID, signatures },
        }
    }
}

impl Domain for GroundDomain {
    type Value = Groundness;

    fn id(&self) -> &'static str {
        ID
    }

    fn descriptor(&self) -> &DomainDescriptor<Groundness> {
        &self.desc
    }

    fn add_constraint(
        &self,
        constraint: &Constraint,
        cp: &Substitution<Groundness>,
    ) -> Result<Substitution<Groundness>, AnalysisError> {
        let is = as_is(constraint)?;
        if cp.is_bottom() {
            return Ok(cp.clone());
        }
        let mut out = cp.clone();
        match (constraint, is) {
            (_, Some((x, expr))) => {
                let g = eval_arith(&self.desc, expr, cp, &|_| Groundness::Ground)?;
                out.refine(x, g);
            }
            (Constraint::Unify(lhs, rhs), None) => {
                let x = lhs
                    .as_var()
                    .ok_or_else(|| AnalysisError::NotNormalized(constraint.to_string()))?;
                let vars = rhs.vars();
                // X = t: X is ground iff every variable of t is.
                let t = vars
                    .iter()
                    .map(|v| cp.get(v).unwrap())
                    .fold(Groundness::Ground, Groundness::lub);
                let g = cp.get(x).unwrap().glb(t);
                out.refine(x, g);
                if g == Groundness::Ground {
                    for v in &vars {
                        out.refine(v, Groundness::Ground);
                    }
                }
            }
            (Constraint::Builtin { .. }, None) => unreachable!("as_is rejects other builtins"),
        }
        Ok(out)
    }
}
