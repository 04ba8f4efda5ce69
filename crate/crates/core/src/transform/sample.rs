//! Random draws of kinds, targets, and kind-specific parameters.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;

use super::apply::{
    absent_atoms, constant_at, enumerate_targets, fresh_name, transition_constants, valid_retypes,
};
use super::config::{GeneratorConfig, NumericLaw, NumericMode};
use super::error::TransformError;
use super::kind::{Params, Transformation, TransformationKind as K};
use crate::tsal::{
    fmt_condition, fmt_effect, Atom, CmpOp, Condition, DomainModel, Effect, NumExpr, ProblemModel,
    Schema, Term, TransitionKind, Typed, UpdateOp,
};

/// Draws a replacement for `c` under `law`. Integers stay integers; the
/// result always differs from `c`.
pub fn perturb_value<R: Rng + ?Sized>(c: f64, law: &NumericLaw, rng: &mut R) -> Option<f64> {
    for _ in 0..16 {
        let scale = match law.mode {
            NumericMode::Scale => true,
            NumericMode::Shift => false,
            NumericMode::Either => rng.random_bool(0.5),
        };
        let mut v = if scale && c != 0.0 {
            c * rng.random_range(0.1f64.ln()..=10f64.ln()).exp()
        } else {
            let span = if c == 0.0 { 10.0 } else { 10.0 * c.abs() };
            c + rng.random_range(-span..=span)
        };
        v = if c.fract() == 0.0 {
            v.round()
        } else {
            (v * 100.0).round() / 100.0
        };
        v += 0.0;
        if law.preserve_sign && c != 0.0 {
            if v == 0.0 {
                continue;
            }
            if v.signum() != c.signum() {
                v = -v;
            }
        }
        if v != c && v.is_finite() {
            return Some(v);
        }
    }
    None
}

/// Variables in `params` usable where `ty` is expected.
fn vars_of(d: &DomainModel, params: &[Typed], ty: &str) -> Vec<String> {
    params
        .iter()
        .filter(|p| d.types.is_subtype(&p.ty, ty))
        .map(|p| p.name.clone())
        .collect()
}

/// A random atom over one of `schemas`, with arguments drawn from `params`.
fn random_atom<R: Rng + ?Sized>(d: &DomainModel, schemas: &[Schema], params: &[Typed], rng: &mut R) -> Option<Atom> {
    let options: Vec<(&Schema, Vec<Vec<String>>)> = schemas
        .iter()
        .map(|s| (s, s.params.iter().map(|a| vars_of(d, params, &a.ty)).collect::<Vec<_>>()))
        .filter(|(_, choices)| choices.iter().all(|c| !c.is_empty()))
        .collect();
    let (schema, choices) = options.choose(rng)?;
    let args = choices
        .iter()
        .map(|c| Term::Var(c.choose(rng).expect("non-empty").clone()))
        .collect();
    Some(Atom::new(schema.name.clone(), args))
}

/// Numeric literals appearing in the models, plus 0 and 1.
fn constant_pool(d: &DomainModel, p: &ProblemModel) -> Vec<f64> {
    let mut pool: Vec<f64> = vec![0.0, 1.0];
    for t in &d.transitions {
        pool.extend(transition_constants(t).into_iter().map(|(_, c)| c));
    }
    pool.extend(p.init_fluents.values().copied());
    pool.sort_by(f64::total_cmp);
    pool.dedup();
    pool
}

fn random_condition<R: Rng + ?Sized>(
    d: &DomainModel,
    p: &ProblemModel,
    params: &[Typed],
    rng: &mut R,
) -> Option<Condition> {
    let atom = random_atom(d, &d.predicates, params, rng);
    let fluent = random_atom(d, &d.functions, params, rng);
    let use_atom = match (&atom, &fluent) {
        (Some(_), Some(_)) => rng.random_bool(0.5),
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => return None,
    };
    if use_atom {
        let a = Condition::Atom(atom?);
        return Some(if rng.random_bool(0.5) {
            Condition::Not(Box::new(a))
        } else {
            a
        });
    }
    let op = *CmpOp::ALL.choose(rng)?;
    let right = if rng.random_bool(0.5) {
        NumExpr::Fluent(random_atom(d, &d.functions, params, rng)?)
    } else {
        NumExpr::Const(*constant_pool(d, p).choose(rng)?)
    };
    Some(Condition::Compare(op, NumExpr::Fluent(fluent?), right))
}

fn random_effect<R: Rng + ?Sized>(d: &DomainModel, p: &ProblemModel, params: &[Typed], rng: &mut R) -> Option<Effect> {
    let atom = random_atom(d, &d.predicates, params, rng);
    let fluent = random_atom(d, &d.functions, params, rng);
    let mut options = Vec::new();
    if atom.is_some() {
        options.extend([0, 1]);
    }
    if fluent.is_some() {
        options.push(2);
    }
    match options.choose(rng)? {
        0 => Some(Effect::Add(atom?)),
        1 => Some(Effect::Delete(atom?)),
        _ => {
            let op = *[UpdateOp::Increase, UpdateOp::Decrease, UpdateOp::Assign].choose(rng)?;
            let pool: Vec<f64> = constant_pool(d, p)
                .into_iter()
                .filter(|c| op == UpdateOp::Assign || *c != 0.0)
                .collect();
            Some(Effect::Update(op, fluent?, NumExpr::Const(*pool.choose(rng)?)))
        }
    }
}

fn transition_of<'a>(d: &'a DomainModel, target: &str) -> Option<&'a crate::tsal::TransitionSchema> {
    let mut segs = target.split('/');
    let kind = TransitionKind::from_keyword(segs.next()?)?;
    d.transition(kind, segs.next()?)
}

/// Draws parameters for `kind` at `target`, or `None` when no sensible
/// value exists there.
pub fn sample_params<R: Rng + ?Sized>(
    d: &DomainModel,
    p: &ProblemModel,
    kind: K,
    target: &str,
    law: &NumericLaw,
    rng: &mut R,
) -> Option<Params> {
    match kind {
        K::PerturbNumericConstant => {
            let c = constant_at(d, target)?;
            Some(Params::constant(perturb_value(c, law, rng)?))
        }
        K::PerturbInitFluent => {
            let mut segs = target.split('/').skip(1);
            let name = segs.next()?.to_string();
            let key = crate::tsal::GroundAtom::new(name, segs.map(str::to_string).collect());
            let c = *p.init_fluents.get(&key)?;
            Some(Params::constant(perturb_value(c, law, rng)?))
        }
        K::AddPreconditionLiteral => {
            let t = transition_of(d, target)?;
            let lit = random_condition(d, p, &t.params, rng)?;
            if t.precondition.conjuncts().contains(&lit) {
                return None;
            }
            Some(Params::literal(fmt_condition(&lit)))
        }
        K::AddEffectLiteral => {
            let t = transition_of(d, target)?;
            let lit = random_effect(d, p, &t.params, rng)?;
            if t.effect.items().contains(&lit) {
                return None;
            }
            Some(Params::literal(fmt_effect(&lit)))
        }
        K::RetypeParameter | K::RetypeObject => {
            Some(Params::ty(valid_retypes(d, p, kind, target).choose(rng)?.clone()))
        }
        K::AddSubtype => {
            let parent = target.strip_prefix("types/")?;
            let taken = |n: &str| {
                d.types.contains(n)
                    || d.predicate(n).is_some()
                    || d.function(n).is_some()
                    || p.objects.iter().any(|o| o.name == n)
            };
            Some(Params::name(fresh_name(&format!("{parent}-variant"), taken)))
        }
        K::AddEventFromAction => {
            let action = target.strip_prefix("action/")?;
            let taken = |n: &str| d.transitions.iter().any(|t| t.name == n);
            Some(Params::name(fresh_name(&format!("{action}-auto"), taken)))
        }
        K::AddInitAtom => {
            let pred = target.strip_prefix("predicate/")?;
            Some(Params::atom(absent_atoms(d, p, pred).choose(rng)?.to_string()))
        }
        K::ChangeObjectCount => {
            let ty = target.strip_prefix("object-type/")?;
            let any = p.objects.iter().any(|o| o.ty == ty);
            let delta = if any && rng.random_bool(0.5) { -1 } else { 1 };
            Some(Params::delta(delta))
        }
        K::RemovePreconditionLiteral
        | K::NegatePreconditionLiteral
        | K::RemoveEffectLiteral
        | K::SwapEffectPolarity
        | K::DisableTransition
        | K::RemoveInitAtom => Some(Params::none()),
    }
}

/// Draws a kind by weight among kinds with at least one target, a target
/// uniformly, and parameters by the kind's law. Retries up to the
/// configured limit when no parameters can be drawn.
pub fn sample_transformation<R: Rng + ?Sized>(
    d: &DomainModel,
    p: &ProblemModel,
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<Transformation, TransformError> {
    let live: Vec<(K, f64, Vec<String>)> = cfg
        .weights
        .iter()
        .filter(|(_, w)| **w > 0.0)
        .map(|(k, w)| (*k, *w, enumerate_targets(d, p, *k)))
        .filter(|(_, _, t)| !t.is_empty())
        .collect();
    if live.is_empty() {
        return Err(TransformError::NoApplicableKind);
    }
    let dist = WeightedIndex::new(live.iter().map(|(_, w, _)| *w)).map_err(|_| TransformError::NoApplicableKind)?;
    for _ in 0..cfg.retry_limit {
        let (kind, _, targets) = &live[dist.sample(rng)];
        let target = targets.choose(rng).expect("non-empty");
        if let Some(params) = sample_params(d, p, *kind, target, &cfg.numeric_law, rng) {
            return Ok(Transformation::new(*kind, target.clone(), params));
        }
    }
    Err(TransformError::NoApplicableKind)
}
