//! A direct interpreter over the syntax tree, written without reference to
//! the simulator's grounding or state layout. Used to cross-check it.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use noveltyforge::sim::{GroundTask, State};
use noveltyforge::tsal::{
    Atom, CmpOp, Condition, DomainModel, Effect, GroundAtom, NumExpr, ProblemModel, Term, TransitionKind,
    TransitionSchema, UpdateOp,
};

/// True atoms and fluent values, with values kept as normalized bit
/// patterns so states compare exactly.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OState {
    pub atoms: BTreeSet<GroundAtom>,
    pub values: BTreeMap<GroundAtom, u64>,
}

impl OState {
    pub fn value(&self, f: &GroundAtom) -> f64 {
        f64::from_bits(*self.values.get(f).unwrap_or_else(|| panic!("no value for {f}")))
    }

    fn set(&mut self, f: GroundAtom, v: f64) {
        self.values.insert(f, (v + 0.0).to_bits());
    }

    /// The same state read out of the simulator's representation.
    pub fn from_sim(task: &GroundTask, s: &State) -> Self {
        OState {
            atoms: s.atoms.ones().map(|i| task.atoms[i].clone()).collect(),
            values: task
                .fluents
                .iter()
                .zip(&s.values)
                .map(|(f, v)| (f.clone(), (v + 0.0).to_bits()))
                .collect(),
        }
    }
}

pub struct Instance<'a> {
    pub schema: &'a TransitionSchema,
    pub args: Vec<String>,
    binding: HashMap<String, String>,
}

impl Instance<'_> {
    pub fn label(&self) -> String {
        if self.args.is_empty() {
            format!("({})", self.schema.name)
        } else {
            format!("({} {})", self.schema.name, self.args.join(" "))
        }
    }
}

pub struct Oracle<'a> {
    pub actions: Vec<Instance<'a>>,
    pub events: Vec<Instance<'a>>,
    pub processes: Vec<Instance<'a>>,
    goal: &'a Condition,
    init: OState,
}

pub const SCAN_LIMIT: usize = 100;

fn is_subtype<'a>(d: &'a DomainModel, mut t: &'a str, sup: &str) -> bool {
    if sup == "object" {
        return true;
    }
    for _ in 0..64 {
        if t == sup {
            return true;
        }
        match d.types.parent(t) {
            Some(p) => t = p,
            None => return false,
        }
    }
    false
}

fn bindings(d: &DomainModel, p: &ProblemModel, params: &[noveltyforge::tsal::Typed]) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for param in params {
        let objs: Vec<&String> = p
            .objects
            .iter()
            .filter(|o| is_subtype(d, &o.ty, &param.ty))
            .map(|o| &o.name)
            .collect();
        let mut next = Vec::new();
        for prefix in &out {
            for o in &objs {
                let mut v: Vec<String> = prefix.clone();
                v.push((*o).clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

impl<'a> Oracle<'a> {
    pub fn new(d: &'a DomainModel, p: &'a ProblemModel) -> Self {
        let mut by_kind: BTreeMap<TransitionKind, Vec<Instance<'a>>> = BTreeMap::new();
        for schema in &d.transitions {
            for args in bindings(d, p, &schema.params) {
                let binding = schema
                    .params
                    .iter()
                    .map(|t| t.name.clone())
                    .zip(args.iter().cloned())
                    .collect();
                by_kind.entry(schema.kind).or_default().push(Instance { schema, args, binding });
            }
        }
        let mut take = |k| {
            let mut v = by_kind.remove(&k).unwrap_or_default();
            v.sort_by(|a, b| (&a.schema.name, &a.args).cmp(&(&b.schema.name, &b.args)));
            v
        };
        let actions = take(TransitionKind::Action);
        let events = take(TransitionKind::Event);
        let processes = take(TransitionKind::Process);
        let mut init = OState {
            atoms: p.init_atoms.clone(),
            values: BTreeMap::new(),
        };
        for (f, v) in &p.init_fluents {
            init.set(f.clone(), *v);
        }
        Oracle {
            actions,
            events,
            processes,
            goal: &p.goal,
            init,
        }
    }

    pub fn init(&self) -> &OState {
        &self.init
    }

    pub fn is_goal(&self, s: &OState) -> bool {
        holds(self.goal, &HashMap::new(), s)
    }

    pub fn applicable(&self, inst: &Instance<'_>, s: &OState) -> bool {
        holds(&inst.schema.precondition, &inst.binding, s)
    }

    /// One step with an optional action index. `Err` carries a reason.
    pub fn step(&self, s: &OState, action: Option<usize>) -> Result<OState, String> {
        let mut next = s.clone();
        if let Some(i) = action {
            let a = &self.actions[i];
            if !self.applicable(a, s) {
                return Err(format!("{} not applicable", a.label()));
            }
            fire(a, &mut next)?;
        }
        let mut fired = vec![false; self.events.len()];
        let mut scans = 0;
        self.settle(&mut next, &mut fired, &mut scans)?;
        let enabled: Vec<usize> = (0..self.processes.len())
            .filter(|&i| self.applicable(&self.processes[i], &next))
            .collect();
        for &i in &enabled {
            fire(&self.processes[i], &mut next)?;
        }
        if !enabled.is_empty() {
            self.settle(&mut next, &mut fired, &mut scans)?;
        }
        Ok(next)
    }

    fn settle(&self, s: &mut OState, fired: &mut [bool], scans: &mut usize) -> Result<(), String> {
        loop {
            let pending: Vec<usize> = (0..self.events.len())
                .filter(|&i| !fired[i] && self.applicable(&self.events[i], s))
                .collect();
            if pending.is_empty() {
                return Ok(());
            }
            if *scans == SCAN_LIMIT {
                return Err("event cascade".into());
            }
            *scans += 1;
            for i in 0..self.events.len() {
                if !fired[i] && self.applicable(&self.events[i], s) {
                    fire(&self.events[i], s)?;
                    fired[i] = true;
                }
            }
        }
    }

    /// Successors of `s` by action label, with `None` for passing.
    pub fn successors(&self, s: &OState) -> Result<Vec<(Option<String>, OState)>, String> {
        let mut out = Vec::new();
        for (i, a) in self.actions.iter().enumerate() {
            if self.applicable(a, s) {
                out.push((Some(a.label()), self.step(s, Some(i))?));
            }
        }
        out.push((None, self.step(s, None)?));
        Ok(out)
    }
}

fn ground(a: &Atom, b: &HashMap<String, String>) -> GroundAtom {
    GroundAtom::new(
        a.name.clone(),
        a.args
            .iter()
            .map(|t| match t {
                Term::Var(v) => b[v].clone(),
                Term::Object(o) => o.clone(),
            })
            .collect(),
    )
}

fn eval(e: &NumExpr, b: &HashMap<String, String>, s: &OState) -> f64 {
    match e {
        NumExpr::Const(c) => *c,
        NumExpr::Fluent(a) => s.value(&ground(a, b)),
        NumExpr::Binary(op, l, r) => {
            let (x, y) = (eval(l, b, s), eval(r, b, s));
            match op.symbol() {
                "+" => x + y,
                "-" => x - y,
                "*" => x * y,
                other => panic!("operator {other}"),
            }
        }
    }
}

fn compare(op: CmpOp, x: f64, y: f64) -> bool {
    match op.symbol() {
        "<" => x < y,
        "<=" => x <= y,
        ">" => x > y,
        ">=" => x >= y,
        "=" => x == y,
        other => panic!("comparison {other}"),
    }
}

fn holds(c: &Condition, b: &HashMap<String, String>, s: &OState) -> bool {
    match c {
        Condition::Atom(a) => s.atoms.contains(&ground(a, b)),
        Condition::Not(inner) => !holds(inner, b, s),
        Condition::And(items) => items.iter().all(|i| holds(i, b, s)),
        Condition::Compare(op, l, r) => compare(*op, eval(l, b, s), eval(r, b, s)),
    }
}

fn flatten<'e>(e: &'e Effect, out: &mut Vec<&'e Effect>) {
    match e {
        Effect::And(items) => items.iter().for_each(|i| flatten(i, out)),
        other => out.push(other),
    }
}

/// Deletes, then adds, then updates whose right sides were read before any
/// change.
fn fire(inst: &Instance<'_>, s: &mut OState) -> Result<(), String> {
    let mut items = Vec::new();
    flatten(&inst.schema.effect, &mut items);
    let b = &inst.binding;
    let pending: Vec<(UpdateOp, GroundAtom, f64)> = items
        .iter()
        .filter_map(|e| match e {
            Effect::Update(op, head, value) => Some((*op, ground(head, b), eval(value, b, s))),
            _ => None,
        })
        .collect();
    for e in &items {
        if let Effect::Delete(a) = e {
            s.atoms.remove(&ground(a, b));
        }
    }
    for e in &items {
        if let Effect::Add(a) = e {
            s.atoms.insert(ground(a, b));
        }
    }
    for (op, f, v) in pending {
        let old = s.value(&f);
        let new = match op {
            UpdateOp::Assign => v,
            UpdateOp::Increase => old + v,
            UpdateOp::Decrease => old - v,
        };
        if !new.is_finite() {
            return Err(format!("{} produced a non-finite value", inst.label()));
        }
        s.set(f, new);
    }
    Ok(())
}

/// Reachable state graph: every state with its labelled successors.
pub struct Graph {
    pub states: BTreeMap<OState, Vec<(Option<String>, OState)>>,
}

/// Breadth-first exploration, giving up beyond `cap` states.
pub fn explore(o: &Oracle<'_>, cap: usize) -> Option<Graph> {
    let mut states = BTreeMap::new();
    let mut queue = VecDeque::from([o.init().clone()]);
    let mut seen = BTreeSet::from([o.init().clone()]);
    while let Some(s) = queue.pop_front() {
        let succ = o.successors(&s).ok()?;
        for (_, t) in &succ {
            if seen.insert(t.clone()) {
                if seen.len() > cap {
                    return None;
                }
                queue.push_back(t.clone());
            }
        }
        states.insert(s, succ);
    }
    Some(Graph { states })
}

/// Shortest plan to a goal state as action labels (`None` = pass).
pub fn bfs_plan(o: &Oracle<'_>, g: &Graph) -> Option<Vec<Option<String>>> {
    let start = o.init().clone();
    let mut parent: BTreeMap<OState, (OState, Option<String>)> = BTreeMap::new();
    let mut queue = VecDeque::from([start.clone()]);
    let mut seen = BTreeSet::from([start]);
    while let Some(s) = queue.pop_front() {
        if o.is_goal(&s) {
            let mut plan = Vec::new();
            let mut cur = s;
            while let Some((prev, label)) = parent.get(&cur) {
                plan.push(label.clone());
                cur = prev.clone();
            }
            plan.reverse();
            return Some(plan);
        }
        for (label, t) in &g.states[&s] {
            if seen.insert(t.clone()) {
                parent.insert(t.clone(), (s.clone(), label.clone()));
                queue.push_back(t.clone());
            }
        }
    }
    None
}

/// Executes labels in the oracle, failing on an inapplicable action.
pub fn execute(o: &Oracle<'_>, plan: &[Option<String>]) -> Result<OState, String> {
    let mut s = o.init().clone();
    for label in plan {
        let idx = match label {
            None => None,
            Some(l) => Some(
                o.actions
                    .iter()
                    .position(|a| &a.label() == l)
                    .ok_or_else(|| format!("unknown action {l}"))?,
            ),
        };
        s = o.step(&s, idx)?;
    }
    Ok(s)
}
