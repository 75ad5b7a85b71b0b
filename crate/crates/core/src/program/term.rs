use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use sha2::{Digest, Sha256};

/// Prefix reserved for variables introduced by the parser (anonymous `_`)
/// and by normalization. User programs may not use it.
pub const RESERVED_VAR_PREFIX: &str = "_G";

/// A logic variable, identified by name within a rule.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Self {
        assert!(!name.is_empty(), "variable names are nonempty");
        Var(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub(crate) fn fresh(counter: usize) -> Self {
        Var::new(&format!("{RESERVED_VAR_PREFIX}{counter}"))
    }

    /// The counter of a reserved-prefix variable, if this is one.
    pub(crate) fn reserved_index(&self) -> Option<usize> {
        self.0
            .strip_prefix(RESERVED_VAR_PREFIX)
            .and_then(|rest| rest.parse().ok())
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Predicate symbol with arity, e.g. `rectoy/2`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredKey {
    name: Arc<str>,
    arity: usize,
}

impl PredKey {
    pub fn new(name: &str, arity: usize) -> Self {
        PredKey {
            name: Arc::from(name),
            arity,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

impl fmt::Debug for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(Var),
    Int(BigInt),
    Float(f64),
    /// Atoms are arity-0 compounds; lists use `'.'/2` and `[]`.
    Compound {
        functor: Arc<str>,
        args: Vec<Term>,
    },
}

pub(crate) const CONS: &str = ".";
pub(crate) const NIL: &str = "[]";

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Var::new(name))
    }

    pub fn atom(name: &str) -> Self {
        Term::Compound {
            functor: Arc::from(name),
            args: Vec::new(),
        }
    }

    pub fn compound(functor: &str, args: Vec<Term>) -> Self {
        Term::Compound {
            functor: Arc::from(functor),
            args,
        }
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Int(_) | Term::Float(_) => {}
            Term::Compound { args, .. } => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Int(_) | Term::Float(_) => true,
            Term::Compound { args, .. } => args.iter().all(Term::is_ground),
        }
    }

    pub(crate) fn rename(&self, map: &impl Fn(&Var) -> Var) -> Term {
        match self {
            Term::Var(v) => Term::Var(map(v)),
            Term::Int(_) | Term::Float(_) => self.clone(),
            Term::Compound { functor, args } => Term::Compound {
                functor: functor.clone(),
                args: args.iter().map(|a| a.rename(map)).collect(),
            },
        }
    }
}

fn binary_op(functor: &str) -> Option<u8> {
    match functor {
        "+" | "-" => Some(1),
        "*" => Some(2),
        _ => None,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Int(i) => write!(f, "{i}"),
            Term::Float(x) => write!(f, "{x:?}"),
            Term::Compound { functor, args } => {
                if args.is_empty() {
                    return f.write_str(functor);
                }
                if &**functor == CONS && args.len() == 2 {
                    return fmt_list(self, f);
                }
                if args.len() == 2 && binary_op(functor).is_some() {
                    fmt_operand(&args[0], f)?;
                    write!(f, " {functor} ")?;
                    return fmt_operand(&args[1], f);
                }
                if args.len() == 1 && &**functor == "-" {
                    f.write_str("-")?;
                    return fmt_operand(&args[0], f);
                }
                write!(f, "{functor}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn fmt_operand(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let nested_op = match t {
        Term::Compound { functor, args } => {
            (args.len() == 2 && binary_op(functor).is_some()) || (args.len() == 1 && &**functor == "-")
        }
        Term::Int(i) => i.sign() == num_bigint::Sign::Minus,
        Term::Float(x) => x.is_sign_negative(),
        Term::Var(_) => false,
    };
    if nested_op {
        write!(f, "({t})")
    } else {
        write!(f, "{t}")
    }
}

fn fmt_list(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    f.write_str("[")?;
    let mut cur = t;
    let mut first = true;
    loop {
        match cur {
            Term::Compound { functor, args } if &**functor == CONS && args.len() == 2 => {
                if !first {
                    f.write_str(", ")?;
                }
                write!(f, "{}", args[0])?;
                first = false;
                cur = &args[1];
            }
            Term::Compound { functor, args } if &**functor == NIL && args.is_empty() => break,
            tail => {
                write!(f, "|{tail}")?;
                break;
            }
        }
    }
    f.write_str("]")
}

/// A call to a user predicate. In normalized programs every argument is a
/// distinct variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub pred: PredKey,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(name: &str, args: Vec<Term>) -> Self {
        Atom {
            pred: PredKey::new(name, args.len()),
            args,
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.args.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }

    /// Argument variables, if the atom is in normal form.
    pub fn arg_vars(&self) -> Option<Vec<Var>> {
        let mut out: Vec<Var> = Vec::with_capacity(self.args.len());
        for a in &self.args {
            let v = a.as_var()?;
            if out.contains(v) {
                return None;
            }
            out.push(v.clone());
        }
        Some(out)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.pred.name())?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    Unify(Term, Term),
    /// Builtin predicate such as `is/2`; the domain decides whether it knows it.
    Builtin {
        name: Arc<str>,
        args: Vec<Term>,
    },
}

impl Constraint {
    pub fn is(lhs: Term, rhs: Term) -> Self {
        Constraint::Builtin {
            name: Arc::from("is"),
            args: vec![lhs, rhs],
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        match self {
            Constraint::Unify(l, r) => {
                l.collect_vars(&mut out);
                r.collect_vars(&mut out);
            }
            Constraint::Builtin { args, .. } => args.iter().for_each(|a| a.collect_vars(&mut out)),
        }
        out
    }

    fn rename(&self, map: &impl Fn(&Var) -> Var) -> Constraint {
        match self {
            Constraint::Unify(l, r) => Constraint::Unify(l.rename(map), r.rename(map)),
            Constraint::Builtin { name, args } => Constraint::Builtin {
                name: name.clone(),
                args: args.iter().map(|a| a.rename(map)).collect(),
            },
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Unify(l, r) => write!(f, "{l} = {r}"),
            Constraint::Builtin { name, args } if args.len() == 2 && &**name == "is" => {
                write!(f, "{} is {}", args[0], args[1])
            }
            Constraint::Builtin { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Call(Atom),
    Constraint(Constraint),
}

impl Literal {
    pub fn vars(&self) -> Vec<Var> {
        match self {
            Literal::Call(a) => a.vars(),
            Literal::Constraint(c) => c.vars(),
        }
    }

    pub fn is_constraint(&self) -> bool {
        matches!(self, Literal::Constraint(_))
    }

    pub(crate) fn rename(&self, map: &impl Fn(&Var) -> Var) -> Literal {
        match self {
            Literal::Call(a) => Literal::Call(Atom {
                pred: a.pred.clone(),
                args: a.args.iter().map(|t| t.rename(map)).collect(),
            }),
            Literal::Constraint(c) => Literal::Constraint(c.rename(map)),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Call(a) => write!(f, "{a}"),
            Literal::Constraint(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    /// 1-based index of the rule within its predicate.
    pub id: usize,
    pub head: Atom,
    pub body: Vec<Literal>,
}

impl Rule {
    /// All variables of the rule, head first, then in body order.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = self.head.vars();
        for lit in &self.body {
            for v in lit.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{l}")?;
            }
        }
        f.write_str(".")
    }
}

/// A finite set of rules, kept in textual order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Program {
    rules: Vec<Rule>,
    index: BTreeMap<PredKey, Vec<usize>>,
}

impl Program {
    /// Builds a program from rules in textual order, assigning dense rule ids.
    pub fn from_rules(rules: impl IntoIterator<Item = Rule>) -> Self {
        let mut program = Program::default();
        for mut rule in rules {
            let slot = program.index.entry(rule.head.pred.clone()).or_default();
            rule.id = slot.len() + 1;
            slot.push(program.rules.len());
            program.rules.push(rule);
        }
        program
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn predicates(&self) -> impl Iterator<Item = &PredKey> {
        self.index.keys()
    }

    pub fn predicate_count(&self) -> usize {
        self.index.len()
    }

    pub fn rules_of<'a>(&'a self, pred: &PredKey) -> Option<impl Iterator<Item = &'a Rule> + 'a> {
        self.index
            .get(pred)
            .map(move |idx| idx.iter().map(move |&i| &self.rules[i]))
    }

    pub fn rule(&self, pred: &PredKey, id: usize) -> Option<&Rule> {
        self.index
            .get(pred)
            .and_then(|idx| idx.get(id.checked_sub(1)?))
            .map(|&i| &self.rules[i])
    }

    /// Byte-stable canonical text: one rule per line in textual order.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }

    /// `sha256:<hex>` of the canonical text.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical_text().as_bytes());
        let mut out = String::from("sha256:");
        for b in hash {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    /// True when every atom argument is a distinct variable and all rules of
    /// a predicate share one head-variable sequence.
    pub fn is_normalized(&self) -> bool {
        for idx in self.index.values() {
            let base = match self.rules[idx[0]].head.arg_vars() {
                Some(b) => b,
                None => return false,
            };
            for &i in idx {
                let rule = &self.rules[i];
                if rule.head.arg_vars().as_ref() != Some(&base) {
                    return false;
                }
                let ok = rule.body.iter().all(|l| match l {
                    Literal::Call(a) => a.arg_vars().is_some(),
                    Literal::Constraint(Constraint::Unify(lhs, _)) => lhs.as_var().is_some(),
                    Literal::Constraint(Constraint::Builtin { args, .. }) => {
                        args.first().and_then(Term::as_var).is_some()
                    }
                });
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    pub(crate) fn max_reserved_index(&self) -> Option<usize> {
        let mut seen = BTreeSet::new();
        for r in &self.rules {
            for v in r.vars() {
                if let Some(i) = v.reserved_index() {
                    seen.insert(i);
                }
            }
        }
        seen.last().copied()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_text())
    }
}
