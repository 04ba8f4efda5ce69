//! Semantic checks over domain and problem models.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::error::{Code, Violation};

/// Identifiers that would be read back as syntax rather than as names.
pub const RESERVED: [&str; 8] = [
    "and", "not", "assign", "increase", "decrease", "define", "domain", "problem",
];

/// How terms resolve in the current context.
enum Scope<'a> {
    /// Inside a schema: variables come from the parameter list.
    Params(&'a [Typed]),
    /// Inside a problem: only objects are allowed.
    Objects(&'a HashMap<&'a str, &'a str>),
}

struct Checker<'a> {
    domain: &'a DomainModel,
    out: Vec<Violation>,
}

impl<'a> Checker<'a> {
    fn push(&mut self, code: Code, path: &str, message: String) {
        self.out.push(Violation::new(code, path, message));
    }

    fn check_type(&mut self, ty: &str, path: &str) {
        if !self.domain.types.contains(ty) {
            self.push(Code::UnknownType, path, format!("unknown type `{ty}`"));
        }
    }

    fn check_params(&mut self, params: &[Typed], path: &str) {
        let mut seen = HashSet::new();
        for p in params {
            self.check_type(&p.ty, path);
            if !seen.insert(p.name.as_str()) {
                self.push(
                    Code::DuplicateName,
                    path,
                    format!("parameter `?{}` declared twice", p.name),
                );
            }
        }
    }

    fn term_type(&mut self, t: &Term, scope: &Scope<'_>, path: &str) -> Option<String> {
        match (t, scope) {
            (Term::Var(v), Scope::Params(params)) => {
                match params.iter().find(|p| &p.name == v) {
                    Some(p) => Some(p.ty.clone()),
                    None => {
                        self.push(Code::UnboundVar, path, format!("variable `?{v}` is not bound"));
                        None
                    }
                }
            }
            (Term::Var(v), Scope::Objects(_)) => {
                self.push(
                    Code::UnboundVar,
                    path,
                    format!("variable `?{v}` is not allowed here"),
                );
                None
            }
            (Term::Object(o), Scope::Objects(objs)) => match objs.get(o.as_str()) {
                Some(ty) => Some(ty.to_string()),
                None => {
                    self.push(Code::UnknownObject, path, format!("unknown object `{o}`"));
                    None
                }
            },
            (Term::Object(o), Scope::Params(_)) => {
                self.push(
                    Code::UnknownObject,
                    path,
                    format!("object `{o}` cannot appear in a domain schema"),
                );
                None
            }
        }
    }

    fn check_args(&mut self, atom: &Atom, schema: &Schema, scope: &Scope<'_>, path: &str) {
        if atom.args.len() != schema.params.len() {
            self.push(
                Code::ArityMismatch,
                path,
                format!(
                    "`{}` takes {} argument(s), got {}",
                    schema.name,
                    schema.params.len(),
                    atom.args.len()
                ),
            );
        }
        for (arg, param) in atom.args.iter().zip(schema.params.iter().chain(std::iter::repeat(
            &Typed {
                name: String::new(),
                ty: ROOT_TYPE.to_string(),
            },
        ))) {
            if let Some(ty) = self.term_type(arg, scope, path) {
                if !self.domain.types.is_subtype(&ty, &param.ty) {
                    self.push(
                        Code::TypeMismatch,
                        path,
                        format!(
                            "argument {arg} of `{}` has type `{ty}`, expected `{}`",
                            schema.name, param.ty
                        ),
                    );
                }
            }
        }
    }

    fn check_predicate_atom(&mut self, atom: &Atom, scope: &Scope<'_>, path: &str) {
        match self.domain.predicate(&atom.name) {
            Some(schema) => self.check_args(atom, schema, scope, path),
            None => {
                self.push(
                    Code::UnknownPredicate,
                    path,
                    format!("unknown predicate `{}`", atom.name),
                );
                for t in &atom.args {
                    self.term_type(t, scope, path);
                }
            }
        }
    }

    fn check_fluent_atom(&mut self, atom: &Atom, scope: &Scope<'_>, path: &str) {
        match self.domain.function(&atom.name) {
            Some(schema) => self.check_args(atom, schema, scope, path),
            None => {
                self.push(
                    Code::UnknownFunction,
                    path,
                    format!("unknown function `{}`", atom.name),
                );
                for t in &atom.args {
                    self.term_type(t, scope, path);
                }
            }
        }
    }

    fn check_num(&mut self, e: &NumExpr, scope: &Scope<'_>, path: &str) {
        match e {
            NumExpr::Const(c) => {
                if !c.is_finite() {
                    self.push(Code::NonFiniteValue, path, format!("non-finite constant {c}"));
                }
            }
            NumExpr::Fluent(a) => self.check_fluent_atom(a, scope, path),
            NumExpr::Binary(_, l, r) => {
                self.check_num(l, scope, path);
                self.check_num(r, scope, path);
            }
        }
    }

    fn check_condition(&mut self, c: &Condition, scope: &Scope<'_>, path: &str) {
        match c {
            Condition::Atom(a) => self.check_predicate_atom(a, scope, path),
            Condition::Not(inner) => self.check_condition(inner, scope, path),
            Condition::And(items) => {
                for item in items {
                    self.check_condition(item, scope, path);
                }
            }
            Condition::Compare(_, l, r) => {
                self.check_num(l, scope, path);
                self.check_num(r, scope, path);
            }
        }
    }

    fn check_effect(
        &mut self,
        e: &Effect,
        scope: &Scope<'_>,
        path: &str,
        updated: &mut HashSet<Atom>,
    ) {
        match e {
            Effect::Add(a) | Effect::Delete(a) => self.check_predicate_atom(a, scope, path),
            Effect::Update(_, head, value) => {
                self.check_fluent_atom(head, scope, path);
                self.check_num(value, scope, path);
                if !updated.insert(head.clone()) {
                    self.push(
                        Code::DuplicateUpdate,
                        path,
                        format!("fluent {head} updated more than once"),
                    );
                }
            }
            Effect::And(items) => {
                for item in items {
                    self.check_effect(item, scope, path, updated);
                }
            }
        }
    }
}

fn check_reserved(name: &str, path: &str, out: &mut Vec<Violation>) {
    if RESERVED.contains(&name) || name == ROOT_TYPE {
        out.push(Violation::new(
            Code::NameClash,
            path,
            format!("`{name}` is a reserved word"),
        ));
    }
}

fn type_cycles(types: &TypeHierarchy) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut reported: BTreeSet<String> = BTreeSet::new();
    for (start, _) in types.iter() {
        let mut seen = vec![start.to_string()];
        let mut current = start;
        while let Some(p) = types.parent(current) {
            if p == start {
                // Report each cycle once, keyed by its smallest member.
                let key = seen.iter().min().cloned().unwrap_or_default();
                if reported.insert(key) {
                    out.push(Violation::new(
                        Code::TypeCycle,
                        format!("types/{start}"),
                        format!("type hierarchy cycle: {} -> {start}", seen.join(" -> ")),
                    ));
                }
                break;
            }
            if seen.iter().any(|s| s == p) {
                break;
            }
            seen.push(p.to_string());
            current = p;
        }
    }
    out
}

/// Checks every domain invariant. Returns an empty list iff the domain is valid.
pub fn validate_domain(d: &DomainModel) -> Vec<Violation> {
    let mut c = Checker {
        domain: d,
        out: Vec::new(),
    };
    for (name, parent) in d.types.iter() {
        check_reserved(name, &format!("types/{name}"), &mut c.out);
        if let Some(p) = parent {
            if !d.types.contains(p) {
                c.push(
                    Code::UnknownType,
                    &format!("types/{name}"),
                    format!("parent type `{p}` of `{name}` is not declared"),
                );
            }
        }
    }
    c.out.extend(type_cycles(&d.types));

    let mut pred_names = HashSet::new();
    for p in &d.predicates {
        let path = format!("predicate/{}", p.name);
        check_reserved(&p.name, &path, &mut c.out);
        if !pred_names.insert(p.name.as_str()) {
            c.push(
                Code::DuplicateName,
                &path,
                format!("predicate `{}` declared twice", p.name),
            );
        }
        c.check_params(&p.params, &path);
    }
    let mut fn_names = HashSet::new();
    for f in &d.functions {
        let path = format!("function/{}", f.name);
        check_reserved(&f.name, &path, &mut c.out);
        if !fn_names.insert(f.name.as_str()) {
            c.push(
                Code::DuplicateName,
                &path,
                format!("function `{}` declared twice", f.name),
            );
        }
        if pred_names.contains(f.name.as_str()) {
            c.push(
                Code::NameClash,
                &path,
                format!("`{}` is both a predicate and a function", f.name),
            );
        }
        c.check_params(&f.params, &path);
    }

    let mut transition_names = HashSet::new();
    for t in &d.transitions {
        let path = t.path();
        if !transition_names.insert((t.kind, t.name.as_str())) {
            c.push(
                Code::DuplicateName,
                &path,
                format!("{} `{}` declared twice", t.kind, t.name),
            );
        }
        c.check_params(&t.params, &format!("{path}/parameters"));
        let scope = Scope::Params(&t.params);
        c.check_condition(&t.precondition, &scope, &format!("{path}/precondition"));
        let mut updated = HashSet::new();
        c.check_effect(&t.effect, &scope, &format!("{path}/effect"), &mut updated);
    }
    c.out
}

/// Every type-compatible ground instance of `schema` over `p`'s objects.
pub fn ground_instances(types: &TypeHierarchy, p: &ProblemModel, schema: &Schema) -> Vec<GroundAtom> {
    let domains: Vec<Vec<&str>> = schema
        .params
        .iter()
        .map(|param| p.objects_of(types, &param.ty).collect())
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; domains.len()];
    if domains.iter().any(|d| d.is_empty()) {
        return out;
    }
    loop {
        out.push(GroundAtom::new(
            schema.name.clone(),
            idx.iter()
                .zip(&domains)
                .map(|(&i, d)| d[i].to_string())
                .collect(),
        ));
        let mut k = domains.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Checks a problem against its domain. The domain is assumed valid.
pub fn validate_problem(d: &DomainModel, p: &ProblemModel) -> Vec<Violation> {
    let mut c = Checker {
        domain: d,
        out: Vec::new(),
    };
    if p.domain != d.name {
        c.push(
            Code::DomainMismatch,
            "domain",
            format!("problem targets domain `{}`, not `{}`", p.domain, d.name),
        );
    }
    let mut objects: HashMap<&str, &str> = HashMap::new();
    for o in &p.objects {
        let path = format!("objects/{}", o.name);
        c.check_type(&o.ty, &path);
        if objects.insert(&o.name, &o.ty).is_some() {
            c.push(
                Code::DuplicateName,
                &path,
                format!("object `{}` declared twice", o.name),
            );
        }
    }
    let scope = Scope::Objects(&objects);
    for a in &p.init_atoms {
        c.check_predicate_atom(&a.to_atom(), &scope, &format!("init/{}", a.name));
    }
    for (f, v) in &p.init_fluents {
        let path = format!("init/{}", f.name);
        c.check_fluent_atom(&f.to_atom(), &scope, &path);
        if !v.is_finite() {
            c.push(Code::NonFiniteValue, &path, format!("{f} = {v}"));
        }
    }
    for f in &d.functions {
        for g in ground_instances(&d.types, p, f) {
            if !p.init_fluents.contains_key(&g) {
                c.push(
                    Code::UninitializedFluent,
                    &format!("init/{}", f.name),
                    format!("fluent {g} has no initial value"),
                );
            }
        }
    }
    c.check_condition(&p.goal, &scope, "goal");
    c.out
}

/// Domain and problem checks together.
pub fn validate_pair(d: &DomainModel, p: &ProblemModel) -> Vec<Violation> {
    let mut v = validate_domain(d);
    if v.is_empty() {
        v.extend(validate_problem(d, p));
    }
    v
}
