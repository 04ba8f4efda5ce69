//! Grounding: schemas times type-compatible object tuples.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;

use super::state::State;
use super::SimError;
use crate::tsal::{
    ArithOp, Atom, CmpOp, Condition, DomainModel, Effect, GroundAtom, NumExpr, ProblemModel,
    Term, TransitionKind, TransitionSchema, Typed, UpdateOp,
};

/// Default cap on the number of ground transition instances.
pub const DEFAULT_INSTANCE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum GroundExpr {
    Const(f64),
    Fluent(usize),
    Binary(ArithOp, Box<GroundExpr>, Box<GroundExpr>),
}

impl GroundExpr {
    pub fn eval(&self, values: &[f64]) -> f64 {
        match self {
            GroundExpr::Const(c) => *c,
            GroundExpr::Fluent(i) => values[*i],
            GroundExpr::Binary(op, l, r) => op.apply(l.eval(values), r.eval(values)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundCondition {
    Atom(usize),
    Not(Box<GroundCondition>),
    And(Vec<GroundCondition>),
    Compare(CmpOp, GroundExpr, GroundExpr),
}

impl GroundCondition {
    pub fn holds(&self, state: &State) -> bool {
        match self {
            GroundCondition::Atom(i) => state.atoms.contains(*i),
            GroundCondition::Not(inner) => !inner.holds(state),
            GroundCondition::And(items) => items.iter().all(|c| c.holds(state)),
            GroundCondition::Compare(op, l, r) => {
                op.holds(l.eval(&state.values), r.eval(&state.values))
            }
        }
    }

    /// Top-level conjuncts, used by the goal-count heuristic.
    pub fn conjuncts(&self) -> &[GroundCondition] {
        match self {
            GroundCondition::And(items) => items,
            other => std::slice::from_ref(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericUpdate {
    pub op: UpdateOp,
    pub fluent: usize,
    pub value: GroundExpr,
}

/// A schema instantiated with concrete objects.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTransition {
    pub kind: TransitionKind,
    pub schema: String,
    pub args: Vec<String>,
    pub precondition: GroundCondition,
    pub deletes: Vec<usize>,
    pub adds: Vec<usize>,
    pub updates: Vec<NumericUpdate>,
}

impl GroundTransition {
    pub fn applicable(&self, state: &State) -> bool {
        self.precondition.holds(state)
    }

    /// Display name such as `(roll-move p1)`.
    pub fn label(&self) -> String {
        GroundAtom::new(self.schema.clone(), self.args.clone()).to_string()
    }
}

impl fmt::Display for GroundTransition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Everything the simulator needs, with atoms and fluents interned.
#[derive(Debug, Clone)]
pub struct GroundTask {
    pub atoms: Vec<GroundAtom>,
    pub fluents: Vec<GroundAtom>,
    pub actions: Vec<GroundTransition>,
    pub events: Vec<GroundTransition>,
    pub processes: Vec<GroundTransition>,
    pub init: State,
    pub goal: GroundCondition,
    atom_index: HashMap<GroundAtom, usize>,
    fluent_index: HashMap<GroundAtom, usize>,
    action_index: HashMap<String, usize>,
}

impl GroundTask {
    pub fn atom_id(&self, a: &GroundAtom) -> Option<usize> {
        self.atom_index.get(a).copied()
    }

    pub fn fluent_id(&self, f: &GroundAtom) -> Option<usize> {
        self.fluent_index.get(f).copied()
    }

    pub fn action_by_label(&self, label: &str) -> Option<usize> {
        self.action_index.get(label).copied()
    }

    pub fn is_goal(&self, state: &State) -> bool {
        self.goal.holds(state)
    }

    /// Indices of actions applicable in `state`, in instance order.
    pub fn applicable_actions(&self, state: &State) -> Vec<usize> {
        (0..self.actions.len())
            .filter(|&i| self.actions[i].applicable(state))
            .collect()
    }

    /// Canonical text of a state: true atoms then fluent values, both in
    /// universe order. Equal states give identical text.
    pub fn render(&self, state: &State) -> String {
        let mut out = String::new();
        for i in state.atoms.ones() {
            out.push_str(&self.atoms[i].to_string());
            out.push('\n');
        }
        for (f, v) in self.fluents.iter().zip(&state.values) {
            out.push_str(&crate::tsal::fmt_init_fluent(f, *v));
            out.push('\n');
        }
        out
    }
}

fn tuples(types: &crate::tsal::TypeHierarchy, p: &ProblemModel, params: &[Typed]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = vec![Vec::new()];
    for param in params {
        let objs: Vec<&str> = p.objects_of(types, &param.ty).collect();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                objs.iter().map(move |o| {
                    let mut t = prefix.clone();
                    t.push(o.to_string());
                    t
                })
            })
            .collect();
    }
    out
}

fn tuple_count(types: &crate::tsal::TypeHierarchy, p: &ProblemModel, params: &[Typed]) -> u128 {
    params
        .iter()
        .map(|param| p.objects_of(types, &param.ty).count() as u128)
        .product()
}

struct Binder<'a> {
    binding: BTreeMap<&'a str, &'a str>,
    atoms: &'a HashMap<GroundAtom, usize>,
    fluents: &'a HashMap<GroundAtom, usize>,
    context: String,
}

impl Binder<'_> {
    fn ground(&self, a: &Atom) -> Result<GroundAtom, SimError> {
        let args = a
            .args
            .iter()
            .map(|t| match t {
                Term::Object(o) => Ok(o.clone()),
                Term::Var(v) => self
                    .binding
                    .get(v.as_str())
                    .map(|o| o.to_string())
                    .ok_or_else(|| SimError::Grounding(format!("{}: unbound ?{v}", self.context))),
            })
            .collect::<Result<_, _>>()?;
        Ok(GroundAtom::new(a.name.clone(), args))
    }

    fn atom(&self, a: &Atom) -> Result<usize, SimError> {
        let g = self.ground(a)?;
        self.atoms
            .get(&g)
            .copied()
            .ok_or_else(|| SimError::Grounding(format!("{}: {g} outside the atom universe", self.context)))
    }

    fn fluent(&self, a: &Atom) -> Result<usize, SimError> {
        let g = self.ground(a)?;
        self.fluents
            .get(&g)
            .copied()
            .ok_or_else(|| SimError::Grounding(format!("{}: fluent {g} has no value", self.context)))
    }

    fn expr(&self, e: &NumExpr) -> Result<GroundExpr, SimError> {
        Ok(match e {
            NumExpr::Const(c) => GroundExpr::Const(*c),
            NumExpr::Fluent(a) => GroundExpr::Fluent(self.fluent(a)?),
            NumExpr::Binary(op, l, r) => {
                GroundExpr::Binary(*op, Box::new(self.expr(l)?), Box::new(self.expr(r)?))
            }
        })
    }

    fn condition(&self, c: &Condition) -> Result<GroundCondition, SimError> {
        Ok(match c {
            Condition::Atom(a) => GroundCondition::Atom(self.atom(a)?),
            Condition::Not(inner) => GroundCondition::Not(Box::new(self.condition(inner)?)),
            Condition::And(items) => GroundCondition::And(
                items.iter().map(|i| self.condition(i)).collect::<Result<_, _>>()?,
            ),
            Condition::Compare(op, l, r) => GroundCondition::Compare(*op, self.expr(l)?, self.expr(r)?),
        })
    }

    fn effect(&self, e: &Effect, t: &mut GroundTransition) -> Result<(), SimError> {
        match e {
            Effect::Add(a) => t.adds.push(self.atom(a)?),
            Effect::Delete(a) => t.deletes.push(self.atom(a)?),
            Effect::Update(op, head, value) => t.updates.push(NumericUpdate {
                op: *op,
                fluent: self.fluent(head)?,
                value: self.expr(value)?,
            }),
            Effect::And(items) => {
                for i in items {
                    self.effect(i, t)?;
                }
            }
        }
        Ok(())
    }
}

/// Grounds a validated pair with the default instance cap.
pub fn ground(d: &DomainModel, p: &ProblemModel) -> Result<GroundTask, SimError> {
    ground_with_cap(d, p, DEFAULT_INSTANCE_CAP)
}

pub fn ground_with_cap(d: &DomainModel, p: &ProblemModel, cap: usize) -> Result<GroundTask, SimError> {
    let total: u128 = d
        .transitions
        .iter()
        .map(|t| tuple_count(&d.types, p, &t.params))
        .sum();
    if total > cap as u128 {
        return Err(SimError::GroundingExplosion { count: total, cap });
    }

    let mut atoms: Vec<GroundAtom> = d
        .predicates
        .iter()
        .flat_map(|s| {
            tuples(&d.types, p, &s.params)
                .into_iter()
                .map(|args| GroundAtom::new(s.name.clone(), args))
        })
        .collect();
    atoms.sort();
    atoms.dedup();
    let mut fluents: Vec<GroundAtom> = d
        .functions
        .iter()
        .flat_map(|s| {
            tuples(&d.types, p, &s.params)
                .into_iter()
                .map(|args| GroundAtom::new(s.name.clone(), args))
        })
        .collect();
    fluents.sort();
    fluents.dedup();
    let atom_index: HashMap<_, _> = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
    let fluent_index: HashMap<_, _> = fluents.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();

    let mut actions = Vec::new();
    let mut events = Vec::new();
    let mut processes = Vec::new();
    for schema in &d.transitions {
        let bucket = match schema.kind {
            TransitionKind::Action => &mut actions,
            TransitionKind::Event => &mut events,
            TransitionKind::Process => &mut processes,
        };
        for args in tuples(&d.types, p, &schema.params) {
            bucket.push(instantiate(schema, args, &atom_index, &fluent_index)?);
        }
    }
    for bucket in [&mut actions, &mut events, &mut processes] {
        bucket.sort_by(|a, b| (&a.schema, &a.args).cmp(&(&b.schema, &b.args)));
    }

    let mut bits = FixedBitSet::with_capacity(atoms.len());
    for a in &p.init_atoms {
        let i = atom_index
            .get(a)
            .ok_or_else(|| SimError::Grounding(format!("init: {a} outside the atom universe")))?;
        bits.insert(*i);
    }
    let mut values = vec![f64::NAN; fluents.len()];
    for (f, v) in &p.init_fluents {
        let i = fluent_index
            .get(f)
            .ok_or_else(|| SimError::Grounding(format!("init: fluent {f} undeclared")))?;
        values[*i] = *v;
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(SimError::Grounding(format!("init: fluent {} has no value", fluents[i])));
    }

    let goal_binder = Binder {
        binding: BTreeMap::new(),
        atoms: &atom_index,
        fluents: &fluent_index,
        context: "goal".into(),
    };
    let goal = goal_binder.condition(&p.goal)?;

    let action_index = actions.iter().enumerate().map(|(i, a)| (a.label(), i)).collect();
    Ok(GroundTask {
        init: State::new(bits, values),
        atoms,
        fluents,
        actions,
        events,
        processes,
        goal,
        atom_index,
        fluent_index,
        action_index,
    })
}

fn instantiate(
    schema: &TransitionSchema,
    args: Vec<String>,
    atoms: &HashMap<GroundAtom, usize>,
    fluents: &HashMap<GroundAtom, usize>,
) -> Result<GroundTransition, SimError> {
    let binder = Binder {
        binding: schema
            .params
            .iter()
            .zip(&args)
            .map(|(p, o)| (p.name.as_str(), o.as_str()))
            .collect(),
        atoms,
        fluents,
        context: schema.path(),
    };
    let mut t = GroundTransition {
        kind: schema.kind,
        schema: schema.name.clone(),
        precondition: binder.condition(&schema.precondition)?,
        args: args.clone(),
        deletes: Vec::new(),
        adds: Vec::new(),
        updates: Vec::new(),
    };
    binder.effect(&schema.effect, &mut t)?;
    Ok(t)
}
