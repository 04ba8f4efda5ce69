//! Target enumeration and application of catalog transformations.

use std::collections::BTreeMap;

use super::error::TransformError;
use super::kind::{Params, Transformation, TransformationKind as K};
use crate::tsal::{
    parse_condition, parse_effect, parse_ground_atom, validate::ground_instances, validate_pair,
    Condition, DomainModel, Effect, GroundAtom, NumExpr, ProblemModel, TransitionKind,
    TransitionSchema, Typed, UpdateOp, ROOT_TYPE,
};

type Result<T> = std::result::Result<T, TransformError>;

fn bad_target(t: &str) -> TransformError {
    TransformError::InvalidTarget(t.to_string())
}

// Numeric literal addressing. Below a transition, `precondition/{i}` and
// `effect/{i}` index top-level conjuncts and effect items; further segments
// are `{i}` inside nested `and`, `not`, `left`/`right` for comparison sides,
// `value` for an update's right side, and `l`/`r` for arithmetic operands.

fn expr_constants(e: &NumExpr, path: &str, out: &mut Vec<(String, f64)>) {
    match e {
        NumExpr::Const(c) => out.push((path.to_string(), *c)),
        NumExpr::Fluent(_) => {}
        NumExpr::Binary(_, l, r) => {
            expr_constants(l, &format!("{path}/l"), out);
            expr_constants(r, &format!("{path}/r"), out);
        }
    }
}

fn condition_constants(c: &Condition, path: &str, out: &mut Vec<(String, f64)>) {
    match c {
        Condition::Atom(_) => {}
        Condition::Not(inner) => condition_constants(inner, &format!("{path}/not"), out),
        Condition::And(items) => {
            for (i, item) in items.iter().enumerate() {
                condition_constants(item, &format!("{path}/{i}"), out);
            }
        }
        Condition::Compare(_, l, r) => {
            expr_constants(l, &format!("{path}/left"), out);
            expr_constants(r, &format!("{path}/right"), out);
        }
    }
}

fn effect_constants(e: &Effect, path: &str, out: &mut Vec<(String, f64)>) {
    match e {
        Effect::Add(_) | Effect::Delete(_) => {}
        Effect::Update(_, _, v) => expr_constants(v, &format!("{path}/value"), out),
        Effect::And(items) => {
            for (i, item) in items.iter().enumerate() {
                effect_constants(item, &format!("{path}/{i}"), out);
            }
        }
    }
}

/// Every numeric literal in a transition with its path.
pub fn transition_constants(t: &TransitionSchema) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let base = t.path();
    for (i, c) in t.precondition.conjuncts().iter().enumerate() {
        condition_constants(c, &format!("{base}/precondition/{i}"), &mut out);
    }
    for (i, e) in t.effect.items().iter().enumerate() {
        effect_constants(e, &format!("{base}/effect/{i}"), &mut out);
    }
    out
}

fn expr_slot<'a>(e: &'a mut NumExpr, segs: &[&str]) -> Option<&'a mut f64> {
    match (e, segs) {
        (NumExpr::Const(c), []) => Some(c),
        (NumExpr::Binary(_, l, _), ["l", rest @ ..]) => expr_slot(l, rest),
        (NumExpr::Binary(_, _, r), ["r", rest @ ..]) => expr_slot(r, rest),
        _ => None,
    }
}

fn condition_slot<'a>(c: &'a mut Condition, segs: &[&str]) -> Option<&'a mut f64> {
    match (c, segs) {
        (Condition::Not(inner), ["not", rest @ ..]) => condition_slot(inner, rest),
        (Condition::And(items), [i, rest @ ..]) => {
            condition_slot(items.get_mut(i.parse::<usize>().ok()?)?, rest)
        }
        (Condition::Compare(_, l, _), ["left", rest @ ..]) => expr_slot(l, rest),
        (Condition::Compare(_, _, r), ["right", rest @ ..]) => expr_slot(r, rest),
        _ => None,
    }
}

fn effect_slot<'a>(e: &'a mut Effect, segs: &[&str]) -> Option<&'a mut f64> {
    match (e, segs) {
        (Effect::Update(_, _, v), ["value", rest @ ..]) => expr_slot(v, rest),
        (Effect::And(items), [i, rest @ ..]) => effect_slot(items.get_mut(i.parse::<usize>().ok()?)?, rest),
        _ => None,
    }
}

fn conjunct_mut(c: &mut Condition, i: usize) -> Option<&mut Condition> {
    match c {
        Condition::And(items) => items.get_mut(i),
        other if i == 0 => Some(other),
        _ => None,
    }
}

fn item_mut(e: &mut Effect, i: usize) -> Option<&mut Effect> {
    match e {
        Effect::And(items) => items.get_mut(i),
        other if i == 0 => Some(other),
        _ => None,
    }
}

/// Locates a numeric literal by its full path.
fn constant_slot<'a>(d: &'a mut DomainModel, target: &str) -> Option<&'a mut f64> {
    let segs: Vec<&str> = target.split('/').collect();
    let [kind, name, section, index, rest @ ..] = segs.as_slice() else {
        return None;
    };
    let t = d.transition_mut(TransitionKind::from_keyword(kind)?, name)?;
    let i: usize = index.parse().ok()?;
    match *section {
        "precondition" => condition_slot(conjunct_mut(&mut t.precondition, i)?, rest),
        "effect" => effect_slot(item_mut(&mut t.effect, i)?, rest),
        _ => None,
    }
}

/// Reads the numeric literal at `target`, if there is one.
pub fn constant_at(d: &DomainModel, target: &str) -> Option<f64> {
    let mut copy = d.clone();
    constant_slot(&mut copy, target).copied()
}

fn fluent_path(f: &GroundAtom) -> String {
    let mut s = format!("init/{}", f.name);
    for a in &f.args {
        s.push('/');
        s.push_str(a);
    }
    s
}

fn parse_init_path(target: &str) -> Option<GroundAtom> {
    let mut segs = target.split('/');
    if segs.next()? != "init" {
        return None;
    }
    let name = segs.next()?.to_string();
    Some(GroundAtom::new(name, segs.map(str::to_string).collect()))
}

/// Types an object or parameter could be moved to: every declared type and
/// `object`, minus the current one.
pub fn retype_candidates(d: &DomainModel, current: &str) -> Vec<String> {
    std::iter::once(ROOT_TYPE)
        .chain(d.types.names())
        .filter(|t| *t != current)
        .map(str::to_string)
        .collect()
}

/// Types the parameter or object at `target` can move to while keeping the
/// models valid.
pub fn valid_retypes(d: &DomainModel, p: &ProblemModel, kind: K, target: &str) -> Vec<String> {
    let current = match kind {
        K::RetypeParameter => {
            let segs: Vec<&str> = target.split('/').collect();
            let [k, name, "parameters", i] = segs.as_slice() else {
                return Vec::new();
            };
            let param = TransitionKind::from_keyword(k)
                .and_then(|k| d.transition(k, name))
                .and_then(|t| t.params.get(i.parse::<usize>().ok()?));
            match param {
                Some(param) => param.ty.clone(),
                None => return Vec::new(),
            }
        }
        K::RetypeObject => match target.strip_prefix("objects/").and_then(|o| p.object_type(o)) {
            Some(ty) => ty.to_string(),
            None => return Vec::new(),
        },
        _ => return Vec::new(),
    };
    retype_candidates(d, &current)
        .into_iter()
        .filter(|ty| {
            let t = Transformation::new(kind, target, Params::ty(ty.clone()));
            apply_transformation(d, p, &t).is_ok()
        })
        .collect()
}

/// Ground atoms of `predicate` absent from the initial state.
pub fn absent_atoms(d: &DomainModel, p: &ProblemModel, predicate: &str) -> Vec<GroundAtom> {
    d.predicate(predicate)
        .map(|s| {
            ground_instances(&d.types, p, s)
                .into_iter()
                .filter(|a| !p.init_atoms.contains(a))
                .collect()
        })
        .unwrap_or_default()
}

fn object_types(d: &DomainModel, p: &ProblemModel) -> Vec<String> {
    let mut out: Vec<String> = d.types.names().map(str::to_string).collect();
    for o in &p.objects {
        if !out.contains(&o.ty) {
            out.push(o.ty.clone());
        }
    }
    out
}

fn swappable(e: &Effect) -> bool {
    matches!(
        e,
        Effect::Add(_) | Effect::Delete(_) | Effect::Update(UpdateOp::Increase | UpdateOp::Decrease, _, _)
    )
}

/// Every path where `kind` applies, sorted.
pub fn enumerate_targets(d: &DomainModel, p: &ProblemModel, kind: K) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    match kind {
        K::PerturbNumericConstant => {
            for t in &d.transitions {
                out.extend(transition_constants(t).into_iter().map(|(path, _)| path));
            }
        }
        K::AddPreconditionLiteral => {
            out.extend(d.transitions.iter().map(|t| format!("{}/precondition", t.path())))
        }
        K::RemovePreconditionLiteral => {
            for t in &d.transitions {
                let n = t.precondition.conjuncts().len();
                out.extend((0..n).map(|i| format!("{}/precondition/{i}", t.path())));
            }
        }
        K::NegatePreconditionLiteral => {
            for t in &d.transitions {
                for (i, c) in t.precondition.conjuncts().iter().enumerate() {
                    if c.is_literal() {
                        out.push(format!("{}/precondition/{i}", t.path()));
                    }
                }
            }
        }
        K::AddEffectLiteral => out.extend(d.transitions.iter().map(|t| format!("{}/effect", t.path()))),
        K::RemoveEffectLiteral | K::SwapEffectPolarity => {
            for t in &d.transitions {
                if t.effect == Effect::And(Vec::new()) {
                    continue;
                }
                for (i, e) in t.effect.items().iter().enumerate() {
                    if kind == K::RemoveEffectLiteral || swappable(e) {
                        out.push(format!("{}/effect/{i}", t.path()));
                    }
                }
            }
        }
        K::RetypeParameter => {
            for t in &d.transitions {
                for i in 0..t.params.len() {
                    let target = format!("{}/parameters/{i}", t.path());
                    if !valid_retypes(d, p, kind, &target).is_empty() {
                        out.push(target);
                    }
                }
            }
        }
        K::DisableTransition => out.extend(d.transitions.iter().map(TransitionSchema::path)),
        K::AddEventFromAction => out.extend(
            d.transitions_of(TransitionKind::Action)
                .map(TransitionSchema::path),
        ),
        K::AddSubtype => out.extend(d.types.names().map(|t| format!("types/{t}"))),
        K::PerturbInitFluent => out.extend(p.init_fluents.keys().map(fluent_path)),
        K::AddInitAtom => out.extend(
            d.predicates
                .iter()
                .filter(|s| !absent_atoms(d, p, &s.name).is_empty())
                .map(|s| format!("predicate/{}", s.name)),
        ),
        K::RemoveInitAtom => out.extend(p.init_atoms.iter().map(fluent_path)),
        K::ChangeObjectCount => out.extend(object_types(d, p).into_iter().map(|t| format!("object-type/{t}"))),
        K::RetypeObject => out.extend(
            p.objects
                .iter()
                .map(|o| format!("objects/{}", o.name))
                .filter(|target| !valid_retypes(d, p, kind, target).is_empty()),
        ),
    }
    out.sort();
    out.dedup();
    out
}

fn transition_at<'a>(d: &'a mut DomainModel, kind: &str, name: &str, target: &str) -> Result<&'a mut TransitionSchema> {
    let kind = TransitionKind::from_keyword(kind).ok_or_else(|| bad_target(target))?;
    d.transition_mut(kind, name).ok_or_else(|| bad_target(target))
}

fn required<'a, T>(v: &'a Option<T>, key: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| TransformError::InvalidParams(format!("missing `{key}`")))
}

fn push_conjunct(c: &Condition, lit: Condition) -> Condition {
    let mut items = match c {
        Condition::And(items) => items.clone(),
        other => vec![other.clone()],
    };
    items.push(lit);
    Condition::And(items)
}

fn push_effect(e: &Effect, lit: Effect) -> Effect {
    let mut items = match e {
        Effect::And(items) => items.clone(),
        other => vec![other.clone()],
    };
    items.push(lit);
    Effect::And(items)
}

fn index(seg: &str, target: &str) -> Result<usize> {
    seg.parse().map_err(|_| bad_target(target))
}

fn is_well_typed(d: &DomainModel, p: &ProblemModel, params: &[Typed], args: &[String]) -> bool {
    params.len() == args.len()
        && params.iter().zip(args).all(|(param, a)| {
            p.object_type(a)
                .is_some_and(|ty| d.types.is_subtype(ty, &param.ty))
        })
}

/// Restores closed-world consistency after objects change: drops init
/// entries that no longer type-check and gives every missing fluent the
/// value of `template(key)` or 0.
fn repair_init(d: &DomainModel, p: &mut ProblemModel, template: impl Fn(&GroundAtom) -> Option<GroundAtom>) {
    let atoms: Vec<GroundAtom> = p.init_atoms.iter().cloned().collect();
    for a in atoms {
        let ok = d
            .predicate(&a.name)
            .is_some_and(|s| is_well_typed(d, p, &s.params, &a.args));
        if !ok {
            p.init_atoms.remove(&a);
        }
    }
    let keys: Vec<GroundAtom> = p.init_fluents.keys().cloned().collect();
    for f in keys {
        let ok = d
            .function(&f.name)
            .is_some_and(|s| is_well_typed(d, p, &s.params, &f.args));
        if !ok {
            p.init_fluents.remove(&f);
        }
    }
    let mut fresh = BTreeMap::new();
    for s in &d.functions {
        for g in ground_instances(&d.types, p, s) {
            if !p.init_fluents.contains_key(&g) {
                let v = template(&g)
                    .and_then(|t| p.init_fluents.get(&t).copied())
                    .unwrap_or(0.0);
                fresh.insert(g, v);
            }
        }
    }
    p.init_fluents.extend(fresh);
}

/// A name based on `stem` that `taken` rejects for no suffix: `stem`,
/// `stem2`, `stem3`, ...
pub fn fresh_name(stem: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(stem) {
        return stem.to_string();
    }
    (2..)
        .map(|k| format!("{stem}{k}"))
        .find(|n| !taken(n))
        .expect("unbounded")
}

/// Applies `t` to copies of the models and validates the result.
pub fn apply_transformation(
    d: &DomainModel,
    p: &ProblemModel,
    t: &Transformation,
) -> Result<(DomainModel, ProblemModel)> {
    let mut d = d.clone();
    let mut p = p.clone();
    edit(&mut d, &mut p, t)?;
    let violations = validate_pair(&d, &p);
    if !violations.is_empty() {
        return Err(TransformError::ValidationFailed(violations));
    }
    Ok((d, p))
}

/// Applies a sequence of transformations, validating after each.
pub fn apply_all(
    d: &DomainModel,
    p: &ProblemModel,
    ts: &[Transformation],
) -> Result<(DomainModel, ProblemModel)> {
    let mut cur = (d.clone(), p.clone());
    for t in ts {
        cur = apply_transformation(&cur.0, &cur.1, t)?;
    }
    Ok(cur)
}

fn edit(d: &mut DomainModel, p: &mut ProblemModel, t: &Transformation) -> Result<()> {
    let target = t.target.as_str();
    let segs: Vec<&str> = target.split('/').collect();
    let Params {
        constant,
        literal,
        ty,
        name,
        atom,
        delta,
    } = &t.params;
    match (t.kind, segs.as_slice()) {
        (K::PerturbNumericConstant, _) => {
            let v = *required(constant, "constant")?;
            *constant_slot(d, target).ok_or_else(|| bad_target(target))? = v;
        }
        (K::AddPreconditionLiteral, [kind, tname, "precondition"]) => {
            let lit = parse_condition(required(literal, "literal")?)
                .map_err(|e| TransformError::InvalidParams(e.to_string()))?;
            let tr = transition_at(d, kind, tname, target)?;
            tr.precondition = push_conjunct(&tr.precondition, lit);
        }
        (K::RemovePreconditionLiteral | K::NegatePreconditionLiteral, [kind, tname, "precondition", i]) => {
            let i = index(i, target)?;
            let tr = transition_at(d, kind, tname, target)?;
            if tr.precondition == Condition::truth() {
                return Err(bad_target(target));
            }
            let mut items = tr.precondition.conjuncts();
            if i >= items.len() {
                return Err(bad_target(target));
            }
            if t.kind == K::RemovePreconditionLiteral {
                items.remove(i);
            } else {
                items[i] = match items[i].clone() {
                    Condition::Atom(a) => Condition::Not(Box::new(Condition::Atom(a))),
                    Condition::Not(inner) if matches!(*inner, Condition::Atom(_)) => *inner,
                    _ => return Err(bad_target(target)),
                };
            }
            tr.precondition = match (tr.precondition.clone(), items) {
                (Condition::And(_), items) => Condition::And(items),
                (_, mut items) if t.kind == K::NegatePreconditionLiteral => items.remove(0),
                (_, items) => Condition::And(items),
            };
        }
        (K::AddEffectLiteral, [kind, tname, "effect"]) => {
            let lit = parse_effect(required(literal, "literal")?)
                .map_err(|e| TransformError::InvalidParams(e.to_string()))?;
            if matches!(lit, Effect::And(_)) {
                return Err(TransformError::InvalidParams("expected a single effect, not a conjunction".into()));
            }
            let tr = transition_at(d, kind, tname, target)?;
            tr.effect = push_effect(&tr.effect, lit);
        }
        (K::RemoveEffectLiteral | K::SwapEffectPolarity, [kind, tname, "effect", i]) => {
            let i = index(i, target)?;
            let tr = transition_at(d, kind, tname, target)?;
            let conj = matches!(tr.effect, Effect::And(_));
            let mut items = tr.effect.items();
            if i >= items.len() || tr.effect == Effect::And(Vec::new()) {
                return Err(bad_target(target));
            }
            if t.kind == K::RemoveEffectLiteral {
                items.remove(i);
            } else {
                items[i] = match items[i].clone() {
                    Effect::Add(a) => Effect::Delete(a),
                    Effect::Delete(a) => Effect::Add(a),
                    Effect::Update(UpdateOp::Increase, f, v) => Effect::Update(UpdateOp::Decrease, f, v),
                    Effect::Update(UpdateOp::Decrease, f, v) => Effect::Update(UpdateOp::Increase, f, v),
                    _ => return Err(bad_target(target)),
                };
            }
            tr.effect = if !conj && t.kind == K::SwapEffectPolarity {
                items.remove(0)
            } else {
                Effect::And(items)
            };
        }
        (K::RetypeParameter, [kind, tname, "parameters", i]) => {
            let i = index(i, target)?;
            let new_ty = required(ty, "type")?.clone();
            let tr = transition_at(d, kind, tname, target)?;
            tr.params.get_mut(i).ok_or_else(|| bad_target(target))?.ty = new_ty;
        }
        (K::DisableTransition, [kind, tname]) => {
            let k = TransitionKind::from_keyword(kind).ok_or_else(|| bad_target(target))?;
            let before = d.transitions.len();
            d.transitions.retain(|x| !(x.kind == k && x.name == *tname));
            if d.transitions.len() == before {
                return Err(bad_target(target));
            }
        }
        (K::AddEventFromAction, ["action", tname]) => {
            let new_name = required(name, "name")?.clone();
            let mut ev = d
                .transition(TransitionKind::Action, tname)
                .ok_or_else(|| bad_target(target))?
                .clone();
            if d.transitions.iter().any(|x| x.name == new_name) {
                return Err(TransformError::InvalidParams(format!("transition `{new_name}` already exists")));
            }
            ev.kind = TransitionKind::Event;
            ev.name = new_name;
            d.transitions.push(ev);
        }
        (K::AddSubtype, ["types", parent]) => {
            let new_name = required(name, "name")?.clone();
            if !d.types.contains(parent) {
                return Err(bad_target(target));
            }
            if d.types.contains(&new_name) {
                return Err(TransformError::InvalidParams(format!("type `{new_name}` already exists")));
            }
            d.types.declare(new_name, Some(parent.to_string()));
        }
        (K::PerturbInitFluent, _) => {
            let v = *required(constant, "constant")?;
            let key = parse_init_path(target).ok_or_else(|| bad_target(target))?;
            *p.init_fluents.get_mut(&key).ok_or_else(|| bad_target(target))? = v;
        }
        (K::AddInitAtom, ["predicate", pred]) => {
            let a = parse_ground_atom(required(atom, "atom")?)
                .map_err(|e| TransformError::InvalidParams(e.to_string()))?;
            if d.predicate(pred).is_none() {
                return Err(bad_target(target));
            }
            if a.name != *pred {
                return Err(TransformError::InvalidParams(format!("atom {a} is not over `{pred}`")));
            }
            p.init_atoms.insert(a);
        }
        (K::RemoveInitAtom, _) => {
            let key = parse_init_path(target).ok_or_else(|| bad_target(target))?;
            if !p.init_atoms.remove(&key) {
                return Err(bad_target(target));
            }
        }
        (K::ChangeObjectCount, ["object-type", ty]) => {
            let delta = *required(delta, "delta")?;
            if delta == 0 {
                return Err(TransformError::InvalidParams("delta must be non-zero".into()));
            }
            if !d.types.contains(ty) {
                return Err(bad_target(target));
            }
            change_object_count(d, p, ty, delta)?;
        }
        (K::RetypeObject, ["objects", obj]) => {
            let new_ty = required(ty, "type")?.clone();
            let o = p
                .objects
                .iter_mut()
                .find(|o| o.name == *obj)
                .ok_or_else(|| bad_target(target))?;
            o.ty = new_ty;
            repair_init(d, p, |_| None);
        }
        _ => return Err(bad_target(target)),
    }
    Ok(())
}

fn change_object_count(d: &DomainModel, p: &mut ProblemModel, ty: &str, delta: i64) -> Result<()> {
    let existing: Vec<String> = p
        .objects
        .iter()
        .filter(|o| o.ty == ty)
        .map(|o| o.name.clone())
        .collect();
    if delta > 0 {
        let template = existing.first().cloned();
        let mut added = Vec::new();
        for _ in 0..delta {
            let n = fresh_name(&format!("{ty}{}", existing.len() + added.len() + 1), |n| {
                p.objects.iter().any(|o| o.name == n) || d.types.contains(n)
            });
            p.objects.push(Typed::new(n.clone(), ty));
            added.push(n);
        }
        repair_init(d, p, |g| {
            let t = template.as_ref()?;
            Some(GroundAtom::new(
                g.name.clone(),
                g.args
                    .iter()
                    .map(|a| if added.contains(a) { t.clone() } else { a.clone() })
                    .collect(),
            ))
        });
    } else {
        let remove = delta.unsigned_abs() as usize;
        if remove > existing.len() {
            return Err(TransformError::InvalidParams(format!(
                "cannot remove {remove} of {} `{ty}` objects",
                existing.len()
            )));
        }
        let gone: Vec<String> = existing[existing.len() - remove..].to_vec();
        p.objects.retain(|o| !gone.contains(&o.name));
        p.init_atoms.retain(|a| !a.args.iter().any(|x| gone.contains(x)));
        p.init_fluents.retain(|f, _| !f.args.iter().any(|x| gone.contains(x)));
        repair_init(d, p, |_| None);
    }
    Ok(())
}
