//! Random model generators driven by a seed.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use noveltyforge::tsal::{
    parse_domain, parse_problem, print_domain, ArithOp, Atom, CmpOp, Condition, DomainModel, Effect, GroundAtom,
    NumExpr, ProblemModel, Schema, Term, TransitionKind, TransitionSchema, Typed, UpdateOp,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small planning task with bounded numeric state: a few unary or nullary
/// predicates over two or three objects and an optional counter kept in
/// `[0, cap]` by its guards. Returned as text so it goes through the parser.
pub fn micro_task_text(seed: u64) -> (String, String) {
    let mut r = rng(seed);
    let n_preds = r.random_range(3..=5);
    let preds: Vec<(String, bool)> = (0..n_preds).map(|i| (format!("q{i}"), r.random_bool(0.6))).collect();
    let counter = r.random_bool(0.5);
    let cap = r.random_range(2..=4);
    let objects = ["a", "b", "c"][..r.random_range(2..=3)].to_vec();

    let literal = |r: &mut ChaCha8Rng, var: Option<&str>| -> String {
        let (name, unary) = preds.choose(r).unwrap();
        let arg = if *unary {
            match var {
                Some(v) if r.random_bool(0.7) => format!(" ?{v}"),
                _ => format!(" ?{}", var.unwrap_or("x")),
            }
        } else {
            String::new()
        };
        format!("({name}{arg})")
    };

    let mut transitions = Vec::new();
    let n_actions = r.random_range(2..=4);
    let n_events = r.random_range(0..=2);
    let n_procs = r.random_range(0..=1);
    for (kind, count) in [("action", n_actions), ("event", n_events), ("process", n_procs)] {
        for i in 0..count {
            let has_param = r.random_bool(0.6);
            let var = has_param.then_some("x");
            let mut pre = Vec::new();
            let n_pre = if kind == "action" { r.random_range(0..=2) } else { r.random_range(1..=2) };
            for _ in 0..n_pre {
                let lit = literal(&mut r, var);
                if !has_param && lit.contains('?') {
                    continue;
                }
                pre.push(if r.random_bool(0.35) { format!("(not {lit})") } else { lit });
            }
            let mut eff = Vec::new();
            let n_eff = r.random_range(1..=2);
            for _ in 0..n_eff {
                let lit = literal(&mut r, var);
                if !has_param && lit.contains('?') {
                    continue;
                }
                let e = if r.random_bool(0.4) { format!("(not {lit})") } else { lit };
                if !eff.contains(&e) {
                    eff.push(e);
                }
            }
            if counter && r.random_bool(0.5) {
                if kind == "action" && r.random_bool(0.6) || kind == "process" {
                    pre.push(format!("(< (c) {cap})"));
                    eff.push("(increase (c) 1)".into());
                } else {
                    pre.push(format!("(>= (c) {cap})"));
                    eff.push("(assign (c) 0)".into());
                }
            }
            let params = if has_param { "?x - t" } else { "" };
            transitions.push(format!(
                "  (:{kind} {kind}{i}\n    :parameters ({params})\n    :precondition (and {})\n    :effect (and {}))",
                pre.join(" "),
                eff.join(" ")
            ));
        }
    }

    let pred_decls: Vec<String> = preds
        .iter()
        .map(|(n, unary)| if *unary { format!("({n} ?x - t)") } else { format!("({n})") })
        .collect();
    let functions = if counter { "\n  (:functions (c))" } else { "" };
    let domain = format!(
        "(define (domain micro)\n  (:types t)\n  (:predicates {}){functions}\n{})",
        pred_decls.join(" "),
        transitions.join("\n")
    );

    let ground_atoms: Vec<String> = preds
        .iter()
        .flat_map(|(n, unary)| {
            if *unary {
                objects.iter().map(|o| format!("({n} {o})")).collect::<Vec<_>>()
            } else {
                vec![format!("({n})")]
            }
        })
        .collect();
    let mut init: Vec<String> = ground_atoms.iter().filter(|_| r.random_bool(0.2)).cloned().collect();
    if counter {
        init.push("(= (c) 0)".into());
    }
    let n_goal = r.random_range(2..=3);
    let goal: Vec<String> = (0..n_goal).map(|_| ground_atoms.choose(&mut r).unwrap().clone()).collect();
    let problem = format!(
        "(define (problem micro-p)\n  (:domain micro)\n  (:objects {} - t)\n  (:init {})\n  (:goal (and {})))",
        objects.join(" "),
        init.join(" "),
        goal.join(" ")
    );
    (domain, problem)
}

pub fn micro_task(seed: u64) -> Option<(DomainModel, ProblemModel)> {
    let (dt, pt) = micro_task_text(seed);
    let d = parse_domain(&dt).ok()?;
    let p = parse_problem(&pt, &d).ok()?;
    Some((d, p))
}

/// Arbitrary valid domain exercising every construct: a type forest,
/// predicates and functions of arity up to 3, and schemas with nested
/// conditions, arithmetic, and all update operators.
pub fn random_domain(seed: u64) -> DomainModel {
    let mut r = rng(seed);
    let mut d = DomainModel::new(format!("dom{}", r.random_range(0..1000)));
    let n_types = r.random_range(0..=4);
    let mut types: Vec<String> = vec!["object".into()];
    for i in 0..n_types {
        let name = format!("ty{i}");
        let parent = types.choose(&mut r).unwrap().clone();
        d.types.declare(name.clone(), (parent != "object").then_some(parent));
        types.push(name);
    }
    let typed = |r: &mut ChaCha8Rng, prefix: &str, n: usize| -> Vec<Typed> {
        (0..n).map(|i| Typed::new(format!("{prefix}{i}"), types.choose(r).unwrap().clone())).collect()
    };
    for i in 0..r.random_range(0..=4) {
        let n = r.random_range(0..=3);
        d.predicates.push(Schema {
            name: format!("pr{i}"),
            params: typed(&mut r, "v", n),
        });
    }
    for i in 0..r.random_range(0..=3) {
        let n = r.random_range(0..=2);
        d.functions.push(Schema {
            name: format!("fn{i}"),
            params: typed(&mut r, "v", n),
        });
    }
    for (k, kind) in TransitionKind::ALL.into_iter().enumerate() {
        for i in 0..r.random_range(0..=2) {
            let n = r.random_range(0..=3);
            let params = typed(&mut r, "x", n);
            let precondition = random_condition(&mut r, &d, &params, 2);
            let effect = random_effect(&mut r, &d, &params);
            d.transitions.push(TransitionSchema {
                kind,
                name: format!("t{k}{i}"),
                params,
                precondition,
                effect,
            });
        }
    }
    d
}

fn is_subtype(d: &DomainModel, sub: &str, sup: &str) -> bool {
    d.types.is_subtype(sub, sup) || sup == "object"
}

/// An atom over `schema` using variables whose types fit, if possible.
fn atom_for(r: &mut ChaCha8Rng, d: &DomainModel, schema: &Schema, params: &[Typed]) -> Option<Atom> {
    let mut args = Vec::new();
    for slot in &schema.params {
        let fits: Vec<&Typed> = params.iter().filter(|p| is_subtype(d, &p.ty, &slot.ty)).collect();
        args.push(Term::Var(fits.choose(r)?.name.clone()));
    }
    Some(Atom::new(schema.name.clone(), args))
}

fn random_pred_atom(r: &mut ChaCha8Rng, d: &DomainModel, params: &[Typed]) -> Option<Atom> {
    let s = d.predicates.choose(r)?.clone();
    atom_for(r, d, &s, params)
}

fn random_fluent_atom(r: &mut ChaCha8Rng, d: &DomainModel, params: &[Typed]) -> Option<Atom> {
    let s = d.functions.choose(r)?.clone();
    atom_for(r, d, &s, params)
}

fn random_constant(r: &mut ChaCha8Rng) -> f64 {
    match r.random_range(0..4) {
        0 => r.random_range(-20..=20) as f64,
        1 => (r.random_range(-1000..=1000) as f64) / 100.0,
        2 => r.random_range(0.0..1e6),
        _ => [0.0, 1.0, 0.5, -0.25, 1e-3][r.random_range(0..5)],
    }
}

fn random_expr(r: &mut ChaCha8Rng, d: &DomainModel, params: &[Typed], depth: usize) -> NumExpr {
    if depth > 0 && r.random_bool(0.3) {
        let op = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul][r.random_range(0..3)];
        return NumExpr::Binary(
            op,
            Box::new(random_expr(r, d, params, depth - 1)),
            Box::new(random_expr(r, d, params, depth - 1)),
        );
    }
    if r.random_bool(0.5) {
        if let Some(a) = random_fluent_atom(r, d, params) {
            return NumExpr::Fluent(a);
        }
    }
    NumExpr::Const(random_constant(r))
}

fn random_condition(r: &mut ChaCha8Rng, d: &DomainModel, params: &[Typed], depth: usize) -> Condition {
    let roll = r.random_range(0..10);
    if depth > 0 && roll < 4 {
        let n = r.random_range(0..=3);
        return Condition::And((0..n).map(|_| random_condition(r, d, params, depth - 1)).collect());
    }
    if depth > 0 && roll < 5 {
        return Condition::Not(Box::new(random_condition(r, d, params, depth - 1)));
    }
    if roll < 8 {
        if let Some(a) = random_pred_atom(r, d, params) {
            return Condition::Atom(a);
        }
    }
    let op = CmpOp::ALL[r.random_range(0..CmpOp::ALL.len())];
    Condition::Compare(op, random_expr(r, d, params, 2), random_expr(r, d, params, 2))
}

fn random_effect(r: &mut ChaCha8Rng, d: &DomainModel, params: &[Typed]) -> Effect {
    let mut items = Vec::new();
    let mut heads: Vec<Atom> = Vec::new();
    for _ in 0..r.random_range(0..=4) {
        match r.random_range(0..3) {
            0 => {
                if let Some(a) = random_pred_atom(r, d, params) {
                    items.push(Effect::Add(a));
                }
            }
            1 => {
                if let Some(a) = random_pred_atom(r, d, params) {
                    items.push(Effect::Delete(a));
                }
            }
            _ => {
                if let Some(h) = random_fluent_atom(r, d, params) {
                    if !heads.contains(&h) {
                        heads.push(h.clone());
                        let op = [UpdateOp::Assign, UpdateOp::Increase, UpdateOp::Decrease][r.random_range(0..3)];
                        items.push(Effect::Update(op, h, random_expr(r, d, params, 2)));
                    }
                }
            }
        }
    }
    if items.len() == 1 && r.random_bool(0.5) {
        items.pop().unwrap()
    } else {
        Effect::And(items)
    }
}

/// A valid problem for `d` with up to three objects per type.
pub fn random_problem(seed: u64, d: &DomainModel) -> ProblemModel {
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut p = ProblemModel::new(format!("prob{}", r.random_range(0..1000)), d.name.clone());
    let mut types: Vec<String> = d.types.names().map(str::to_string).collect();
    types.push("object".into());
    let mut n = 0;
    for ty in &types {
        for _ in 0..r.random_range(0..=2) {
            p.objects.push(Typed::new(format!("o{n}"), ty.clone()));
            n += 1;
        }
    }
    let instances = |p: &ProblemModel, s: &Schema| noveltyforge::tsal::validate::ground_instances(&d.types, p, s);
    let mut all_atoms: Vec<GroundAtom> = Vec::new();
    for s in &d.predicates {
        all_atoms.extend(instances(&p, s));
    }
    for a in &all_atoms {
        if r.random_bool(0.3) {
            p.init_atoms.insert(a.clone());
        }
    }
    let mut fluents = Vec::new();
    for s in &d.functions {
        fluents.extend(instances(&p, s));
    }
    for f in &fluents {
        p.init_fluents.insert(f.clone(), random_constant(&mut r));
    }
    let mut goal = Vec::new();
    for _ in 0..r.random_range(0..=3) {
        if r.random_bool(0.6) {
            if let Some(a) = all_atoms.choose(&mut r) {
                let c = Condition::Atom(a.to_atom());
                goal.push(if r.random_bool(0.2) { Condition::Not(Box::new(c)) } else { c });
            }
        } else if let Some(f) = fluents.choose(&mut r) {
            goal.push(Condition::Compare(
                CmpOp::ALL[r.random_range(0..CmpOp::ALL.len())],
                NumExpr::Fluent(f.to_atom()),
                NumExpr::Const(random_constant(&mut r)),
            ));
        }
    }
    p.goal = if goal.len() == 1 && r.random_bool(0.5) {
        goal.pop().unwrap()
    } else {
        Condition::And(goal)
    };
    p
}

/// Canonical text of a domain, for messages.
pub fn show(d: &DomainModel) -> String {
    print_domain(d)
}
