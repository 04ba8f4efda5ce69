//! Path-addressed structural diffs between models.
//!
//! A diff is a list of entries, each naming a path, the kind of change, and
//! the canonical text of the fragment before and after. Applying a diff to the
//! model it was computed from reproduces the other model exactly.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::error::SyntaxError;
use super::parse::{
    parse_condition, parse_effect, parse_ground_atom, parse_num_expr, parse_schema,
    parse_transition, parse_typed_name,
};
use super::print::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Change {
    Added,
    Removed,
    Changed,
    PreconditionAdded,
    PreconditionRemoved,
    EffectAdded,
    EffectRemoved,
    Reordered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub path: String,
    pub change: Change,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<String>,
}

impl DiffEntry {
    fn new(path: impl Into<String>, change: Change, before: Option<String>, after: Option<String>) -> Self {
        Self {
            path: path.into(),
            change,
            before,
            after,
        }
    }
}

impl std::fmt::Display for DiffEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let change = serde_json::to_value(self.change).expect("serializable");
        write!(f, "{} {}", change.as_str().unwrap_or_default(), self.path)?;
        match (&self.before, &self.after) {
            (Some(b), Some(a)) => write!(f, ": {b} -> {a}"),
            (Some(b), None) => write!(f, ": {b}"),
            (None, Some(a)) => write!(f, ": {a}"),
            (None, None) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StructuralDiff {
    pub entries: Vec<DiffEntry>,
}

impl StructuralDiff {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DiffEntry> {
        self.entries.iter()
    }

    /// Applies the domain entries of this diff to `base`.
    pub fn apply_to_domain(&self, base: &DomainModel) -> Result<DomainModel, DiffError> {
        let mut d = base.clone();
        for e in self.entries.iter().filter(|e| !e.path.starts_with("problem")) {
            apply_domain_entry(&mut d, e)?;
        }
        Ok(d)
    }

    /// Applies the problem entries of this diff to `base`.
    pub fn apply_to_problem(&self, base: &ProblemModel) -> Result<ProblemModel, DiffError> {
        let mut p = base.clone();
        for e in self.entries.iter().filter(|e| e.path.starts_with("problem")) {
            apply_problem_entry(&mut p, e)?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error("diff path `{0}` does not address anything in the model")]
    BadPath(String),
    #[error("diff entry at `{0}` is missing its fragment")]
    MissingFragment(String),
    #[error("diff fragment at `{path}` does not parse: {source}")]
    BadFragment { path: String, source: SyntaxError },
}

/// Diff of two domains. Empty iff the domains are structurally equal.
pub fn diff_domains(base: &DomainModel, novel: &DomainModel) -> StructuralDiff {
    let mut out = Vec::new();
    if base.name != novel.name {
        out.push(DiffEntry::new(
            "name",
            Change::Changed,
            Some(base.name.clone()),
            Some(novel.name.clone()),
        ));
    }
    let names: BTreeSet<&str> = base.types.names().chain(novel.types.names()).collect();
    for n in names {
        let path = format!("types/{n}");
        let (b, a) = (base.types.contains(n), novel.types.contains(n));
        let bf = fmt_type_decl(n, base.types.parent(n));
        let af = fmt_type_decl(n, novel.types.parent(n));
        match (b, a) {
            (true, false) => out.push(DiffEntry::new(path, Change::Removed, Some(bf), None)),
            (false, true) => out.push(DiffEntry::new(path, Change::Added, None, Some(af))),
            (true, true) if bf != af => {
                out.push(DiffEntry::new(path, Change::Changed, Some(bf), Some(af)))
            }
            _ => {}
        }
    }
    diff_keyed(
        &mut out,
        "predicate",
        &base.predicates,
        &novel.predicates,
        |s| s.name.clone(),
        fmt_schema,
        |_, b, n, out| {
            if b != n {
                out.push(DiffEntry::new(
                    format!("predicate/{}", b.name),
                    Change::Changed,
                    Some(fmt_schema(b)),
                    Some(fmt_schema(n)),
                ))
            }
        },
    );
    diff_keyed(
        &mut out,
        "function",
        &base.functions,
        &novel.functions,
        |s| s.name.clone(),
        fmt_schema,
        |_, b, n, out| {
            if b != n {
                out.push(DiffEntry::new(
                    format!("function/{}", b.name),
                    Change::Changed,
                    Some(fmt_schema(b)),
                    Some(fmt_schema(n)),
                ))
            }
        },
    );
    diff_keyed(
        &mut out,
        "transitions",
        &base.transitions,
        &novel.transitions,
        TransitionSchema::path,
        fmt_transition,
        |_, b, n, out| diff_transition(b, n, out),
    );
    StructuralDiff { entries: out }
}

/// Diff of two problems; every path starts with `problem`.
pub fn diff_problems(base: &ProblemModel, novel: &ProblemModel) -> StructuralDiff {
    let mut out = Vec::new();
    if base.name != novel.name {
        out.push(DiffEntry::new(
            "problem/name",
            Change::Changed,
            Some(base.name.clone()),
            Some(novel.name.clone()),
        ));
    }
    if base.domain != novel.domain {
        out.push(DiffEntry::new(
            "problem/domain",
            Change::Changed,
            Some(base.domain.clone()),
            Some(novel.domain.clone()),
        ));
    }
    diff_keyed(
        &mut out,
        "problem/objects",
        &base.objects,
        &novel.objects,
        |o| o.name.clone(),
        fmt_typed_name,
        |key, b, n, out| {
            if b != n {
                out.push(DiffEntry::new(
                    format!("problem/objects/{key}"),
                    Change::Changed,
                    Some(fmt_typed_name(b)),
                    Some(fmt_typed_name(n)),
                ))
            }
        },
    );
    for a in base.init_atoms.difference(&novel.init_atoms) {
        out.push(DiffEntry::new(
            format!("problem/init/{a}"),
            Change::Removed,
            Some(a.to_string()),
            None,
        ));
    }
    for a in novel.init_atoms.difference(&base.init_atoms) {
        out.push(DiffEntry::new(
            format!("problem/init/{a}"),
            Change::Added,
            None,
            Some(a.to_string()),
        ));
    }
    let keys: BTreeSet<&GroundAtom> = base
        .init_fluents
        .keys()
        .chain(novel.init_fluents.keys())
        .collect();
    for k in keys {
        let path = format!("problem/fluent/{k}");
        match (base.init_fluents.get(k), novel.init_fluents.get(k)) {
            (Some(b), None) => out.push(DiffEntry::new(path, Change::Removed, Some(fmt_number(*b)), None)),
            (None, Some(a)) => out.push(DiffEntry::new(path, Change::Added, None, Some(fmt_number(*a)))),
            (Some(b), Some(a)) if b.to_bits() != a.to_bits() && b != a => out.push(DiffEntry::new(
                path,
                Change::Changed,
                Some(fmt_number(*b)),
                Some(fmt_number(*a)),
            )),
            _ => {}
        }
    }
    if base.goal != novel.goal {
        out.push(DiffEntry::new(
            "problem/goal",
            Change::Changed,
            Some(fmt_condition(&base.goal)),
            Some(fmt_condition(&novel.goal)),
        ));
    }
    StructuralDiff { entries: out }
}

/// Domain entries followed by problem entries.
pub fn diff_models(
    base_domain: &DomainModel,
    base_problem: &ProblemModel,
    novel_domain: &DomainModel,
    novel_problem: &ProblemModel,
) -> StructuralDiff {
    let mut d = diff_domains(base_domain, novel_domain);
    d.entries
        .extend(diff_problems(base_problem, novel_problem).entries);
    d
}

/// Diff of an ordered, keyed list. Removals and additions are addressed by
/// key; additions append, and a trailing `reordered` entry fixes the order
/// whenever appending would not reproduce it.
fn diff_keyed<T>(
    out: &mut Vec<DiffEntry>,
    prefix: &str,
    base: &[T],
    novel: &[T],
    key: impl Fn(&T) -> String,
    fmt: impl Fn(&T) -> String,
    mut common: impl FnMut(&str, &T, &T, &mut Vec<DiffEntry>),
) {
    let item_path = |k: &str| {
        if prefix == "transitions" {
            k.to_string()
        } else {
            format!("{prefix}/{k}")
        }
    };
    let novel_keys: Vec<String> = novel.iter().map(&key).collect();
    let base_keys: Vec<String> = base.iter().map(&key).collect();
    for b in base {
        let k = key(b);
        if !novel_keys.contains(&k) {
            out.push(DiffEntry::new(item_path(&k), Change::Removed, Some(fmt(b)), None));
        }
    }
    for b in base {
        let k = key(b);
        if let Some(n) = novel.iter().find(|n| key(n) == k) {
            common(&k, b, n, out);
        }
    }
    let mut simulated: Vec<String> = base_keys
        .iter()
        .filter(|k| novel_keys.contains(k))
        .cloned()
        .collect();
    for n in novel {
        let k = key(n);
        if !base_keys.contains(&k) {
            out.push(DiffEntry::new(item_path(&k), Change::Added, None, Some(fmt(n))));
            simulated.push(k);
        }
    }
    if simulated != novel_keys {
        out.push(DiffEntry::new(
            prefix,
            Change::Reordered,
            Some(simulated.join(" ")),
            Some(novel_keys.join(" ")),
        ));
    }
}

/// Positions (in `long`) of items not matched when `short` is greedily
/// matched as a subsequence of `long`. `None` if `short` is not a subsequence.
fn insertions<T: PartialEq>(short: &[T], long: &[T]) -> Option<Vec<usize>> {
    let mut extra = Vec::new();
    let mut i = 0;
    for (j, item) in long.iter().enumerate() {
        if i < short.len() && short[i] == *item {
            i += 1;
        } else {
            extra.push(j);
        }
    }
    (i == short.len()).then_some(extra)
}

fn diff_transition(b: &TransitionSchema, n: &TransitionSchema, out: &mut Vec<DiffEntry>) {
    let prefix = b.path();
    if b.params != n.params {
        out.push(DiffEntry::new(
            format!("{prefix}/parameters"),
            Change::Changed,
            Some(fmt_param_list(&b.params)),
            Some(fmt_param_list(&n.params)),
        ));
    }
    if b.precondition != n.precondition {
        let before = b.precondition.conjuncts();
        let after = n.precondition.conjuncts();
        let mut entries = Vec::new();
        if matches!(n.precondition, Condition::And(_)) && before.len() != after.len() {
            if let Some(added) = insertions(&before, &after) {
                for i in added {
                    entries.push(DiffEntry::new(
                        format!("{prefix}/precondition/{i}"),
                        Change::PreconditionAdded,
                        None,
                        Some(fmt_condition(&after[i])),
                    ));
                }
            } else if let Some(removed) = insertions(&after, &before) {
                for i in removed.into_iter().rev() {
                    entries.push(DiffEntry::new(
                        format!("{prefix}/precondition/{i}"),
                        Change::PreconditionRemoved,
                        Some(fmt_condition(&before[i])),
                        None,
                    ));
                }
            }
        }
        if entries.is_empty() {
            entries.push(DiffEntry::new(
                format!("{prefix}/precondition"),
                Change::Changed,
                Some(fmt_condition(&b.precondition)),
                Some(fmt_condition(&n.precondition)),
            ));
        }
        out.extend(entries);
    }
    if b.effect != n.effect {
        out.extend(diff_effect(&prefix, &b.effect, &n.effect));
    }
}

fn update_key(e: &Effect) -> Option<(UpdateOp, &str)> {
    match e {
        Effect::Update(op, head, _) => Some((*op, head.name.as_str())),
        _ => None,
    }
}

fn diff_effect(prefix: &str, b: &Effect, n: &Effect) -> Vec<DiffEntry> {
    let before = b.items();
    let after = n.items();
    let same_form = matches!(b, Effect::And(_)) == matches!(n, Effect::And(_));
    let mut entries = Vec::new();
    if same_form && before.len() == after.len() {
        let keys: Vec<_> = after.iter().filter_map(update_key).collect();
        let unique = keys.iter().collect::<BTreeSet<_>>().len() == keys.len();
        let mut ok = unique;
        for (x, y) in before.iter().zip(&after) {
            if x == y {
                continue;
            }
            match (x, y) {
                (Effect::Update(op1, h1, v1), Effect::Update(op2, h2, v2)) if op1 == op2 && h1 == h2 => {
                    entries.push(DiffEntry::new(
                        format!("{prefix}/effect/{}/{}", op1.keyword(), h1.name),
                        Change::Changed,
                        Some(fmt_num_expr(v1)),
                        Some(fmt_num_expr(v2)),
                    ));
                }
                _ => ok = false,
            }
        }
        if ok && !entries.is_empty() {
            return entries;
        }
        entries.clear();
    }
    if matches!(n, Effect::And(_)) && before.len() != after.len() {
        if let Some(added) = insertions(&before, &after) {
            for i in added {
                entries.push(DiffEntry::new(
                    format!("{prefix}/effect/{i}"),
                    Change::EffectAdded,
                    None,
                    Some(fmt_effect(&after[i])),
                ));
            }
            return entries;
        }
        if let Some(removed) = insertions(&after, &before) {
            for i in removed.into_iter().rev() {
                entries.push(DiffEntry::new(
                    format!("{prefix}/effect/{i}"),
                    Change::EffectRemoved,
                    Some(fmt_effect(&before[i])),
                    None,
                ));
            }
            return entries;
        }
    }
    vec![DiffEntry::new(
        format!("{prefix}/effect"),
        Change::Changed,
        Some(fmt_effect(b)),
        Some(fmt_effect(n)),
    )]
}

pub fn fmt_param_list(params: &[Typed]) -> String {
    let inner: Vec<String> = params
        .iter()
        .map(|p| format!("?{} - {}", p.name, p.ty))
        .collect();
    format!("({})", inner.join(" "))
}

fn parse_param_list(text: &str) -> Result<Vec<Typed>, SyntaxError> {
    // A parameter list has the same shape as a schema without a name.
    let schema = parse_schema(&format!("(x {}", text.trim_start_matches('(')))?;
    Ok(schema.params)
}

fn fragment<'a>(e: &'a DiffEntry, after: bool) -> Result<&'a str, DiffError> {
    let f = if after { &e.after } else { &e.before };
    f.as_deref()
        .ok_or_else(|| DiffError::MissingFragment(e.path.clone()))
}

fn bad(e: &DiffEntry) -> DiffError {
    DiffError::BadPath(e.path.clone())
}

fn syntax(e: &DiffEntry) -> impl Fn(SyntaxError) -> DiffError + '_ {
    move |source| DiffError::BadFragment {
        path: e.path.clone(),
        source,
    }
}

fn reorder<T>(items: &mut Vec<T>, order: &str, key: impl Fn(&T) -> String, e: &DiffEntry) -> Result<(), DiffError> {
    let mut rest: Vec<Option<T>> = items.drain(..).map(Some).collect();
    for k in order.split_whitespace() {
        let pos = rest
            .iter()
            .position(|x| x.as_ref().is_some_and(|x| key(x) == k))
            .ok_or_else(|| bad(e))?;
        items.push(rest[pos].take().expect("taken once"));
    }
    if rest.iter().any(Option::is_some) {
        return Err(bad(e));
    }
    Ok(())
}

fn apply_keyed<T>(
    items: &mut Vec<T>,
    key: &str,
    e: &DiffEntry,
    keyf: impl Fn(&T) -> String,
    parse: impl Fn(&str) -> Result<T, SyntaxError>,
) -> Result<(), DiffError> {
    match e.change {
        Change::Removed => {
            let pos = items.iter().position(|x| keyf(x) == key).ok_or_else(|| bad(e))?;
            items.remove(pos);
        }
        Change::Added => items.push(parse(fragment(e, true)?).map_err(syntax(e))?),
        Change::Changed => {
            let pos = items.iter().position(|x| keyf(x) == key).ok_or_else(|| bad(e))?;
            items[pos] = parse(fragment(e, true)?).map_err(syntax(e))?;
        }
        _ => return Err(bad(e)),
    }
    Ok(())
}

fn apply_domain_entry(d: &mut DomainModel, e: &DiffEntry) -> Result<(), DiffError> {
    let segs: Vec<&str> = e.path.split('/').collect();
    match segs.as_slice() {
        ["name"] => d.name = fragment(e, true)?.to_string(),
        ["types", name] => match e.change {
            Change::Removed => {
                d.types.remove(name).ok_or_else(|| bad(e))?;
            }
            Change::Added | Change::Changed => {
                let t = parse_typed_name(fragment(e, true)?).map_err(syntax(e))?;
                d.types.declare(t.name, Some(t.ty));
            }
            _ => return Err(bad(e)),
        },
        ["predicate"] if e.change == Change::Reordered => {
            reorder(&mut d.predicates, fragment(e, true)?, |s| s.name.clone(), e)?
        }
        ["function"] if e.change == Change::Reordered => {
            reorder(&mut d.functions, fragment(e, true)?, |s| s.name.clone(), e)?
        }
        ["transitions"] if e.change == Change::Reordered => {
            reorder(&mut d.transitions, fragment(e, true)?, TransitionSchema::path, e)?
        }
        ["predicate", name] => apply_keyed(&mut d.predicates, name, e, |s| s.name.clone(), parse_schema)?,
        ["function", name] => apply_keyed(&mut d.functions, name, e, |s| s.name.clone(), parse_schema)?,
        [kind, name] if TransitionKind::from_keyword(kind).is_some() => {
            let key = format!("{kind}/{name}");
            apply_keyed(&mut d.transitions, &key, e, TransitionSchema::path, parse_transition)?
        }
        [kind, name, rest @ ..] => {
            let kind = TransitionKind::from_keyword(kind).ok_or_else(|| bad(e))?;
            let t = d.transition_mut(kind, name).ok_or_else(|| bad(e))?;
            apply_transition_entry(t, rest, e)?;
        }
        _ => return Err(bad(e)),
    }
    Ok(())
}

fn apply_transition_entry(t: &mut TransitionSchema, rest: &[&str], e: &DiffEntry) -> Result<(), DiffError> {
    match (rest, e.change) {
        (["parameters"], Change::Changed) => {
            t.params = parse_param_list(fragment(e, true)?).map_err(syntax(e))?;
        }
        (["precondition"], Change::Changed) => {
            t.precondition = parse_condition(fragment(e, true)?).map_err(syntax(e))?;
        }
        (["precondition", idx], Change::PreconditionAdded | Change::PreconditionRemoved) => {
            let idx: usize = idx.parse().map_err(|_| bad(e))?;
            let mut items = t.precondition.conjuncts();
            if e.change == Change::PreconditionAdded {
                if idx > items.len() {
                    return Err(bad(e));
                }
                items.insert(idx, parse_condition(fragment(e, true)?).map_err(syntax(e))?);
            } else {
                if idx >= items.len() {
                    return Err(bad(e));
                }
                items.remove(idx);
            }
            t.precondition = Condition::And(items);
        }
        (["effect"], Change::Changed) => {
            t.effect = parse_effect(fragment(e, true)?).map_err(syntax(e))?;
        }
        (["effect", idx], Change::EffectAdded | Change::EffectRemoved) => {
            let idx: usize = idx.parse().map_err(|_| bad(e))?;
            let mut items = t.effect.items();
            if e.change == Change::EffectAdded {
                if idx > items.len() {
                    return Err(bad(e));
                }
                items.insert(idx, parse_effect(fragment(e, true)?).map_err(syntax(e))?);
            } else {
                if idx >= items.len() {
                    return Err(bad(e));
                }
                items.remove(idx);
            }
            t.effect = Effect::And(items);
        }
        (["effect", op, fluent], Change::Changed) => {
            let value = parse_num_expr(fragment(e, true)?).map_err(syntax(e))?;
            let target = match &mut t.effect {
                Effect::And(items) => items.iter_mut().find(|i| {
                    matches!(i, Effect::Update(o, h, _) if o.keyword() == *op && h.name == *fluent)
                }),
                single @ Effect::Update(..) => Some(single),
                _ => None,
            };
            match target {
                Some(Effect::Update(o, h, v)) if o.keyword() == *op && h.name == *fluent => *v = value,
                _ => return Err(bad(e)),
            }
        }
        _ => return Err(bad(e)),
    }
    Ok(())
}

fn apply_problem_entry(p: &mut ProblemModel, e: &DiffEntry) -> Result<(), DiffError> {
    let rest = e.path.strip_prefix("problem/").ok_or_else(|| bad(e))?;
    if rest == "name" {
        p.name = fragment(e, true)?.to_string();
    } else if rest == "domain" {
        p.domain = fragment(e, true)?.to_string();
    } else if rest == "goal" {
        p.goal = parse_condition(fragment(e, true)?).map_err(syntax(e))?;
    } else if rest == "objects" && e.change == Change::Reordered {
        reorder(&mut p.objects, fragment(e, true)?, |o| o.name.clone(), e)?;
    } else if let Some(name) = rest.strip_prefix("objects/") {
        apply_keyed(&mut p.objects, name, e, |o| o.name.clone(), parse_typed_name)?;
    } else if let Some(atom) = rest.strip_prefix("init/") {
        let a = parse_ground_atom(atom).map_err(syntax(e))?;
        match e.change {
            Change::Added => {
                p.init_atoms.insert(a);
            }
            Change::Removed => {
                if !p.init_atoms.remove(&a) {
                    return Err(bad(e));
                }
            }
            _ => return Err(bad(e)),
        }
    } else if let Some(head) = rest.strip_prefix("fluent/") {
        let f = parse_ground_atom(head).map_err(syntax(e))?;
        match e.change {
            Change::Removed => {
                p.init_fluents.remove(&f).ok_or_else(|| bad(e))?;
            }
            Change::Added | Change::Changed => {
                let v = match parse_num_expr(fragment(e, true)?).map_err(syntax(e))? {
                    NumExpr::Const(v) => v,
                    _ => return Err(bad(e)),
                };
                p.init_fluents.insert(f, v);
            }
            _ => return Err(bad(e)),
        }
    } else {
        return Err(bad(e));
    }
    Ok(())
}
