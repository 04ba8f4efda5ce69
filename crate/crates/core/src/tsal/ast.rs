//! Typed syntax tree for TSAL domain and problem files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Name of the implicit root type.
pub const ROOT_TYPE: &str = "object";

/// Declared types and their parents. A type without a parent hangs directly
/// off `object`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeHierarchy {
    parents: BTreeMap<String, Option<String>>,
}

impl TypeHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `name` with the given parent. A parent of `object` is
    /// normalized to the root.
    pub fn declare(&mut self, name: impl Into<String>, parent: Option<String>) {
        let parent = parent.filter(|p| p != ROOT_TYPE);
        self.parents.insert(name.into(), parent);
    }

    pub fn remove(&mut self, name: &str) -> Option<Option<String>> {
        self.parents.remove(name)
    }

    /// True for declared types and for `object`.
    pub fn contains(&self, name: &str) -> bool {
        name == ROOT_TYPE || self.parents.contains_key(name)
    }

    pub fn parent(&self, name: &str) -> Option<&str> {
        self.parents.get(name).and_then(|p| p.as_deref())
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    /// Declared types (excluding `object`) in sorted order with their parents.
    pub fn iter(&self) -> impl Iterator<Item = (&str, Option<&str>)> {
        self.parents.iter().map(|(k, v)| (k.as_str(), v.as_deref()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.parents.keys().map(String::as_str)
    }

    /// Reflexive-transitive subtype check. Every known type is a subtype of
    /// `object`. Cycles are tolerated (the walk is bounded) so the validator
    /// can call this before it has ruled them out.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sub == sup || sup == ROOT_TYPE {
            return self.contains(sub);
        }
        let mut current = sub;
        for _ in 0..=self.parents.len() {
            match self.parent(current) {
                Some(p) if p == sup => return true,
                Some(p) => current = p,
                None => return false,
            }
        }
        false
    }

    /// Ancestors of `name`, nearest first, ending with `object`.
    pub fn ancestors(&self, name: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut current = name;
        for _ in 0..=self.parents.len() {
            match self.parent(current) {
                Some(p) => {
                    out.push(p.to_string());
                    current = p;
                }
                None => break,
            }
        }
        out.push(ROOT_TYPE.to_string());
        out
    }
}

/// A name paired with its declared type: `?p - player` or `p1 - player`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Typed {
    pub name: String,
    pub ty: String,
}

impl Typed {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

/// Predicate or function declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub name: String,
    /// Parameter variables, stored without the leading `?`.
    pub params: Vec<Typed>,
}

pub type PredicateSchema = Schema;
pub type FluentSchema = Schema;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// A `?var`, stored without the `?`.
    Var(String),
    /// An object name.
    Object(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn object(name: impl Into<String>) -> Self {
        Term::Object(name.into())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Object(o) => f.write_str(o),
        }
    }
}

/// A predicate or function applied to terms: `(cash ?p)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub name: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Self {
        Self {
            name: name.into(),
            args,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Object(_)))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// Variable-free atom over object names, used for init facts and fluent keys.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub name: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(name: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            name: name.into(),
            args,
        }
    }

    pub fn to_atom(&self) -> Atom {
        Atom::new(
            self.name.clone(),
            self.args.iter().cloned().map(Term::Object).collect(),
        )
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }

    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            ArithOp::Add => a + b,
            ArithOp::Sub => a - b,
            ArithOp::Mul => a * b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NumExpr {
    Const(f64),
    Fluent(Atom),
    Binary(ArithOp, Box<NumExpr>, Box<NumExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    pub const ALL: [CmpOp; 5] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
        }
    }

    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Atom(Atom),
    Not(Box<Condition>),
    And(Vec<Condition>),
    Compare(CmpOp, NumExpr, NumExpr),
}

impl Condition {
    /// The always-true condition `(and)`.
    pub fn truth() -> Self {
        Condition::And(Vec::new())
    }

    /// Top-level conjuncts: the children of an `and`, or the condition itself.
    pub fn conjuncts(&self) -> Vec<Condition> {
        match self {
            Condition::And(items) => items.clone(),
            other => vec![other.clone()],
        }
    }

    /// A literal is an atom or a negated atom.
    pub fn is_literal(&self) -> bool {
        match self {
            Condition::Atom(_) => true,
            Condition::Not(inner) => matches!(**inner, Condition::Atom(_)),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UpdateOp {
    Assign,
    Increase,
    Decrease,
}

impl UpdateOp {
    pub fn keyword(self) -> &'static str {
        match self {
            UpdateOp::Assign => "assign",
            UpdateOp::Increase => "increase",
            UpdateOp::Decrease => "decrease",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    Add(Atom),
    Delete(Atom),
    Update(UpdateOp, Atom, NumExpr),
    And(Vec<Effect>),
}

impl Effect {
    /// Top-level effect items: the children of an `and`, or the effect itself.
    pub fn items(&self) -> Vec<Effect> {
        match self {
            Effect::And(items) => items.clone(),
            other => vec![other.clone()],
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Effect::Add(_) | Effect::Delete(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    Action,
    Event,
    Process,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 3] = [
        TransitionKind::Action,
        TransitionKind::Event,
        TransitionKind::Process,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            TransitionKind::Action => "action",
            TransitionKind::Event => "event",
            TransitionKind::Process => "process",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "action" => Some(TransitionKind::Action),
            "event" => Some(TransitionKind::Event),
            "process" => Some(TransitionKind::Process),
            _ => None,
        }
    }
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// An action, event, or process schema.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSchema {
    pub kind: TransitionKind,
    pub name: String,
    pub params: Vec<Typed>,
    pub precondition: Condition,
    pub effect: Effect,
}

impl TransitionSchema {
    /// Path prefix used by transformations and diffs, e.g. `event/pass-go`.
    pub fn path(&self) -> String {
        format!("{}/{}", self.kind, self.name)
    }

    pub fn param_type(&self, var: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|p| p.name == var)
            .map(|p| p.ty.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainModel {
    pub name: String,
    pub types: TypeHierarchy,
    pub predicates: Vec<PredicateSchema>,
    pub functions: Vec<FluentSchema>,
    pub transitions: Vec<TransitionSchema>,
}

impl DomainModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            types: TypeHierarchy::new(),
            predicates: Vec::new(),
            functions: Vec::new(),
            transitions: Vec::new(),
        }
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FluentSchema> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn transition(&self, kind: TransitionKind, name: &str) -> Option<&TransitionSchema> {
        self.transitions
            .iter()
            .find(|t| t.kind == kind && t.name == name)
    }

    pub fn transition_mut(
        &mut self,
        kind: TransitionKind,
        name: &str,
    ) -> Option<&mut TransitionSchema> {
        self.transitions
            .iter_mut()
            .find(|t| t.kind == kind && t.name == name)
    }

    pub fn transitions_of(&self, kind: TransitionKind) -> impl Iterator<Item = &TransitionSchema> {
        self.transitions.iter().filter(move |t| t.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemModel {
    pub name: String,
    pub domain: String,
    pub objects: Vec<Typed>,
    pub init_atoms: BTreeSet<GroundAtom>,
    pub init_fluents: BTreeMap<GroundAtom, f64>,
    pub goal: Condition,
}

impl ProblemModel {
    pub fn new(name: impl Into<String>, domain: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            domain: domain.into(),
            objects: Vec::new(),
            init_atoms: BTreeSet::new(),
            init_fluents: BTreeMap::new(),
            goal: Condition::truth(),
        }
    }

    pub fn object_type(&self, name: &str) -> Option<&str> {
        self.objects
            .iter()
            .find(|o| o.name == name)
            .map(|o| o.ty.as_str())
    }

    /// Objects whose declared type is a subtype of `ty`, in declaration order.
    pub fn objects_of<'a>(
        &'a self,
        types: &'a TypeHierarchy,
        ty: &'a str,
    ) -> impl Iterator<Item = &'a str> + 'a {
        self.objects
            .iter()
            .filter(move |o| types.is_subtype(&o.ty, ty))
            .map(|o| o.name.as_str())
    }
}
