//! Abstract domains: the lattice of per-variable values, abstract
//! substitutions over it, and the five operations the fixpoint engine is
//! parameterized by (restrict, extend, add, conj, lub) plus the order.

mod ground;
mod types;

use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

pub use ground::{GroundDomain, Groundness};
pub use types::{TypeDomain, TypeValue};

use crate::error::AnalysisError;
use crate::program::{Constraint, Term, Var};

/// A finite lattice of per-variable abstract values.
pub trait Lattice: Copy + Eq + Ord + Hash + fmt::Debug + fmt::Display + FromStr + Send + Sync + 'static {
    fn bottom() -> Self;
    fn top() -> Self;
    fn leq(self, other: Self) -> bool;
    fn lub(self, other: Self) -> Self;
    fn glb(self, other: Self) -> Self;
    /// Every element, in a fixed order.
    fn elements() -> &'static [Self];
}

/// An abstract substitution: an ordered variable scope with one lattice value
/// per variable, or the failed substitution ⊥.
///
/// A substitution never holds an individual ⊥ value; any such value collapses
/// the whole substitution to ⊥.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Substitution<V> {
    scope: Vec<Var>,
    values: Option<Vec<V>>,
}

impl<V: Lattice> Substitution<V> {
    pub fn new(scope: Vec<Var>, values: Vec<V>) -> Self {
        assert_eq!(scope.len(), values.len(), "one value per scope variable");
        if values.iter().any(|&v| v == V::bottom()) {
            return Substitution::bottom(scope);
        }
        Substitution {
            scope,
            values: Some(values),
        }
    }

    pub fn top(scope: Vec<Var>) -> Self {
        let values = vec![V::top(); scope.len()];
        Substitution {
            scope,
            values: Some(values),
        }
    }

    pub fn bottom(scope: Vec<Var>) -> Self {
        Substitution { scope, values: None }
    }

    pub fn from_pattern(scope: Vec<Var>, pattern: &Pattern<V>) -> Self {
        match pattern.values() {
            Some(vals) => Substitution::new(scope, vals.to_vec()),
            None => Substitution::bottom(scope),
        }
    }

    pub fn scope(&self) -> &[Var] {
        &self.scope
    }

    pub fn is_bottom(&self) -> bool {
        self.values.is_none()
    }

    pub fn get(&self, var: &Var) -> Option<V> {
        let i = self.scope.iter().position(|v| v == var)?;
        Some(match &self.values {
            Some(vals) => vals[i],
            None => V::bottom(),
        })
    }

    /// Values in scope order, `None` for ⊥.
    pub fn values(&self) -> Option<&[V]> {
        self.values.as_deref()
    }

    /// The positional tuple over the given variables.
    pub fn pattern_over(&self, vars: &[Var]) -> Pattern<V> {
        match &self.values {
            None => Pattern::bottom(),
            Some(_) => Pattern::new(vars.iter().map(|v| self.get(v).expect("variable in scope")).collect()),
        }
    }

    pub fn to_pattern(&self) -> Pattern<V> {
        match &self.values {
            None => Pattern::bottom(),
            Some(vals) => Pattern::new(vals.clone()),
        }
    }

    /// Sets `var` to `glb(current, value)`. Returns ⊥ on collapse.
    pub fn refine(&mut self, var: &Var, value: V) {
        let Some(vals) = &mut self.values else { return };
        let i = self
            .scope
            .iter()
            .position(|v| v == var)
            .expect("refined variable must be in scope");
        let next = vals[i].glb(value);
        if next == V::bottom() {
            self.values = None;
        } else {
            vals[i] = next;
        }
    }

    fn same_scope(&self, other: &Self) -> bool {
        self.scope.len() == other.scope.len() && self.scope.iter().all(|v| other.scope.contains(v))
    }

    /// Abstract restriction to `vars` (which must be within scope).
    pub fn restrict(&self, vars: &[Var]) -> Self {
        for v in vars {
            assert!(self.scope.contains(v), "restrict: {v} not in scope");
        }
        match &self.values {
            None => Substitution::bottom(vars.to_vec()),
            Some(_) => Substitution {
                scope: vars.to_vec(),
                values: Some(vars.iter().map(|v| self.get(v).unwrap()).collect()),
            },
        }
    }

    /// Extends the scope to `vars` (a superset); new variables get top.
    pub fn extend(&self, vars: &[Var]) -> Self {
        for v in &self.scope {
            assert!(vars.contains(v), "extend: {v} dropped from scope");
        }
        match &self.values {
            None => Substitution::bottom(vars.to_vec()),
            Some(_) => Substitution {
                scope: vars.to_vec(),
                values: Some(vars.iter().map(|v| self.get(v).unwrap_or_else(V::top)).collect()),
            },
        }
    }

    /// Pointwise greatest lower bound; scope order of `self`.
    pub fn conj(&self, other: &Self) -> Self {
        assert!(self.same_scope(other), "conj requires equal scopes");
        match (&self.values, &other.values) {
            (Some(a), Some(_)) => {
                let vals = self
                    .scope
                    .iter()
                    .zip(a)
                    .map(|(v, &x)| x.glb(other.get(v).unwrap()))
                    .collect();
                Substitution::new(self.scope.clone(), vals)
            }
            _ => Substitution::bottom(self.scope.clone()),
        }
    }

    /// Pointwise least upper bound; ⊥ is the identity whatever its scope.
    pub fn lub(&self, other: &Self) -> Self {
        match (&self.values, &other.values) {
            (None, _) => other.clone(),
            (_, None) => self.clone(),
            (Some(a), Some(_)) => {
                assert!(self.same_scope(other), "lub requires equal scopes");
                let vals = self
                    .scope
                    .iter()
                    .zip(a)
                    .map(|(v, &x)| x.lub(other.get(v).unwrap()))
                    .collect();
                Substitution::new(self.scope.clone(), vals)
            }
        }
    }

    pub fn leq(&self, other: &Self) -> bool {
        match (&self.values, &other.values) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(_)) => {
                assert!(self.same_scope(other), "leq requires equal scopes");
                self.scope.iter().zip(a).all(|(v, &x)| x.leq(other.get(v).unwrap()))
            }
        }
    }
}

impl<V: fmt::Debug> fmt::Debug for Substitution<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.values {
            None => f.write_str("bottom"),
            Some(vals) => {
                let pairs: Vec<String> = self.scope.iter().zip(vals).map(|(v, x)| format!("{v}/{x:?}")).collect();
                write!(f, "{{{}}}", pairs.join(","))
            }
        }
    }
}

impl<V: Lattice> fmt::Display for Substitution<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.values {
            None => f.write_str("bottom"),
            Some(vals) => {
                f.write_str("{")?;
                for (i, (v, x)) in self.scope.iter().zip(vals).enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}/{x}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// A substitution in positional form ⟨t1,..,tn⟩, independent of variable
/// names. This is what answer tables and certificates store.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern<V>(Option<Vec<V>>);

impl<V: Lattice> Pattern<V> {
    pub fn new(values: Vec<V>) -> Self {
        if values.iter().any(|&v| v == V::bottom()) {
            Pattern(None)
        } else {
            Pattern(Some(values))
        }
    }

    pub fn bottom() -> Self {
        Pattern(None)
    }

    pub fn top(arity: usize) -> Self {
        Pattern(Some(vec![V::top(); arity]))
    }

    pub fn is_bottom(&self) -> bool {
        self.0.is_none()
    }

    pub fn values(&self) -> Option<&[V]> {
        self.0.as_deref()
    }

    pub fn leq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => a.len() == b.len() && a.iter().zip(b).all(|(&x, &y)| x.leq(y)),
        }
    }

    pub fn lub(&self, other: &Self) -> Self {
        match (&self.0, &other.0) {
            (None, _) => other.clone(),
            (_, None) => self.clone(),
            (Some(a), Some(b)) => {
                assert_eq!(a.len(), b.len(), "lub of patterns of different arity");
                Pattern::new(a.iter().zip(b).map(|(&x, &y)| x.lub(y)).collect())
            }
        }
    }
}

impl<V: fmt::Debug> fmt::Debug for Pattern<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            None => f.write_str("bottom"),
            Some(vals) => {
                let parts: Vec<String> = vals.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "({})", parts.join(","))
            }
        }
    }
}

impl<V: Lattice> fmt::Display for Pattern<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            None => f.write_str("bottom"),
            Some(vals) => {
                f.write_str("(")?;
                for (i, x) in vals.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed abstract pattern `{0}`")]
pub struct PatternParseError(pub String);

impl<V: Lattice> FromStr for Pattern<V> {
    type Err = PatternParseError;

    /// Accepts `(v1,..,vn)`, `()` or `bottom`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "bottom" {
            return Ok(Pattern::bottom());
        }
        let inner = s
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| PatternParseError(s.to_string()))?;
        if inner.trim().is_empty() {
            return Ok(Pattern::new(Vec::new()));
        }
        let values = inner
            .split(',')
            .map(|part| part.trim().parse::<V>().map_err(|_| PatternParseError(s.to_string())))
            .collect::<Result<Vec<V>, _>>()?;
        if values.iter().any(|&v| v == V::bottom()) {
            return Err(PatternParseError(s.to_string()));
        }
        Ok(Pattern::new(values))
    }
}

/// One row of a domain's builtin signature table: for `C is A op B`, the
/// abstract value of `C` given those of `A` and `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltinSignature<V> {
    pub builtin: &'static str,
    pub op: &'static str,
    pub operands: [V; 2],
    pub result: V,
}

/// Identity and builtin table of a domain, carried into certificates.
#[derive(Debug, Clone)]
pub struct DomainDescriptor<V> {
    pub id: &'static str,
    pub signatures: Vec<BuiltinSignature<V>>,
}

impl<V: Lattice> DomainDescriptor<V> {
    pub fn lookup(&self, op: &str, a: V, b: V) -> Option<V> {
        self.signatures
            .iter()
            .find(|s| s.op == op && s.operands == [a, b])
            .map(|s| s.result)
    }
}

pub const ARITH_OPS: [&str; 3] = ["+", "-", "*"];

/// An abstract domain D_α. Only `add_constraint` is domain specific; the
/// remaining operations default to the pointwise substitution machinery.
pub trait Domain: Send + Sync {
    type Value: Lattice;

    fn id(&self) -> &'static str;

    fn descriptor(&self) -> &DomainDescriptor<Self::Value>;

    /// `Aadd`: conjoins a constraint with a substitution. Only refines.
    fn add_constraint(
        &self,
        constraint: &Constraint,
        cp: &Substitution<Self::Value>,
    ) -> Result<Substitution<Self::Value>, AnalysisError>;

    fn restrict(&self, cp: &Substitution<Self::Value>, vars: &[Var]) -> Substitution<Self::Value> {
        cp.restrict(vars)
    }

    fn extend(&self, cp: &Substitution<Self::Value>, vars: &[Var]) -> Substitution<Self::Value> {
        cp.extend(vars)
    }

    fn conj(&self, a: &Substitution<Self::Value>, b: &Substitution<Self::Value>) -> Substitution<Self::Value> {
        a.conj(b)
    }

    fn lub(&self, a: &Substitution<Self::Value>, b: &Substitution<Self::Value>) -> Substitution<Self::Value> {
        a.lub(b)
    }

    fn leq(&self, a: &Substitution<Self::Value>, b: &Substitution<Self::Value>) -> bool {
        a.leq(b)
    }
}

/// Evaluates an arithmetic expression to an abstract value through the
/// domain's signature table. Number literals map to `literal(term)`.
pub(crate) fn eval_arith<V: Lattice>(
    desc: &DomainDescriptor<V>,
    expr: &Term,
    cp: &Substitution<V>,
    literal: &impl Fn(&Term) -> V,
) -> Result<V, AnalysisError> {
    match expr {
        Term::Var(v) => Ok(cp.get(v).expect("expression variable in scope")),
        Term::Int(_) | Term::Float(_) => Ok(literal(expr)),
        Term::Compound { functor, args } if args.len() == 2 && ARITH_OPS.contains(&&**functor) => {
            let a = eval_arith(desc, &args[0], cp, literal)?;
            let b = eval_arith(desc, &args[1], cp, literal)?;
            desc.lookup(functor, a, b)
                .ok_or_else(|| AnalysisError::UnknownBuiltin(format!("is/2 with {functor}")))
        }
        Term::Compound { functor, args } if args.len() == 1 && &**functor == "-" => {
            eval_arith(desc, &args[0], cp, literal)
        }
        Term::Compound { functor, args } => Err(AnalysisError::UnknownBuiltin(format!(
            "arithmetic {functor}/{}",
            args.len()
        ))),
    }
}

/// Splits a builtin into its `is/2` operands, or reports it as unknown.
pub(crate) fn as_is(constraint: &Constraint) -> Result<Option<(&Var, &Term)>, AnalysisError> {
    match constraint {
        Constraint::Unify(..) => Ok(None),
        Constraint::Builtin { name, args } if &**name == "is" && args.len() == 2 => {
            let lhs = args[0]
                .as_var()
                .ok_or_else(|| AnalysisError::NotNormalized(format!("{constraint}")))?;
            Ok(Some((lhs, &args[1])))
        }
        Constraint::Builtin { name, args } => Err(AnalysisError::UnknownBuiltin(format!("{name}/{}", args.len()))),
    }
}

/// Runtime selection between the bundled domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainKind {
    Types,
    Groundness,
}

impl DomainKind {
    pub const ALL: [DomainKind; 2] = [DomainKind::Types, DomainKind::Groundness];

    pub fn id(self) -> &'static str {
        match self {
            DomainKind::Types => types::ID,
            DomainKind::Groundness => ground::ID,
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        DomainKind::ALL.into_iter().find(|d| d.id() == id)
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> Vec<Var> {
        names.iter().map(|n| Var::new(n)).collect()
    }

    fn subst(names: &[&str], vals: &[TypeValue]) -> Substitution<TypeValue> {
        Substitution::new(vars(names), vals.to_vec())
    }

    use TypeValue::*;

    #[test]
    fn restrict_keeps_values() {
        let cp = subst(&["N", "M"], &[Int, Int]);
        assert_eq!(cp.restrict(&vars(&["M"])), subst(&["M"], &[Int]));
        assert_eq!(cp.restrict(&vars(&["N", "M"])), cp);
        let bot = Substitution::<TypeValue>::bottom(vars(&["N", "M"]));
        assert!(bot.restrict(&vars(&["N"])).is_bottom());
    }

    #[test]
    #[should_panic(expected = "not in scope")]
    fn restrict_outside_scope_panics() {
        subst(&["N"], &[Int]).restrict(&vars(&["Q"]));
    }

    #[test]
    fn extend_adds_top() {
        let cp = subst(&["N"], &[Int]);
        assert_eq!(cp.extend(&vars(&["N", "M"])), subst(&["N", "M"], &[Int, Term]));
        assert_eq!(cp.extend(&vars(&["N"])), cp);
        assert!(Substitution::<TypeValue>::bottom(vars(&["N"]))
            .extend(&vars(&["N", "M"]))
            .is_bottom());
    }

    #[test]
    fn conj_and_lub() {
        let a = subst(&["X"], &[Int]);
        let b = subst(&["X"], &[Real]);
        assert_eq!(a.conj(&b), a);
        assert_eq!(b.lub(&a), b);
        assert_eq!(a.conj(&Substitution::top(vars(&["X"]))), a);
        assert!(a.conj(&Substitution::bottom(vars(&["X"]))).is_bottom());
        let nm = subst(&["N", "M"], &[Int, Int]);
        assert_eq!(Substitution::bottom(Vec::new()).lub(&nm), nm);
        assert_eq!(nm.lub(&nm), nm);
    }

    #[test]
    fn conj_aligns_by_name() {
        let a = subst(&["X", "Y"], &[Int, Term]);
        let b = subst(&["Y", "X"], &[Real, Real]);
        assert_eq!(a.conj(&b), subst(&["X", "Y"], &[Int, Real]));
    }

    #[test]
    fn order() {
        assert!(subst(&["A", "B"], &[Int, Int]).leq(&subst(&["A", "B"], &[Int, Real])));
        assert!(!subst(&["A"], &[Term]).leq(&subst(&["A"], &[Int])));
        let x = subst(&["A"], &[Real]);
        assert!(x.leq(&x));
    }

    #[test]
    fn pattern_text() {
        let p: Pattern<TypeValue> = "(int, term)".parse().unwrap();
        assert_eq!(p.to_string(), "(int,term)");
        assert_eq!("bottom".parse::<Pattern<TypeValue>>().unwrap(), Pattern::bottom());
        assert_eq!("()".parse::<Pattern<TypeValue>>().unwrap().values(), Some(&[][..]));
        assert!("(int,bottom)".parse::<Pattern<TypeValue>>().is_err());
        assert!("int".parse::<Pattern<TypeValue>>().is_err());
    }
}
