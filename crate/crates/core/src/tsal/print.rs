//! Canonical text form of models and fragments.
//!
//! Files use two-space indentation with one construct per line. Fragments
//! (used in diffs and transformation parameters) render on a single line.

use std::fmt::Write as _;

use super::ast::*;

pub fn fmt_number(n: f64) -> String {
    format!("{n}")
}

fn fmt_params(params: &[Typed]) -> String {
    params
        .iter()
        .map(|p| format!("?{} - {}", p.name, p.ty))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn fmt_schema(s: &Schema) -> String {
    if s.params.is_empty() {
        format!("({})", s.name)
    } else {
        format!("({} {})", s.name, fmt_params(&s.params))
    }
}

pub fn fmt_typed_name(t: &Typed) -> String {
    format!("{} - {}", t.name, t.ty)
}

pub fn fmt_type_decl(name: &str, parent: Option<&str>) -> String {
    match parent {
        Some(p) => format!("{name} - {p}"),
        None => name.to_string(),
    }
}

pub fn fmt_num_expr(e: &NumExpr) -> String {
    match e {
        NumExpr::Const(c) => fmt_number(*c),
        NumExpr::Fluent(a) => a.to_string(),
        NumExpr::Binary(op, l, r) => {
            format!("({} {} {})", op.symbol(), fmt_num_expr(l), fmt_num_expr(r))
        }
    }
}

pub fn fmt_condition(c: &Condition) -> String {
    match c {
        Condition::Atom(a) => a.to_string(),
        Condition::Not(inner) => format!("(not {})", fmt_condition(inner)),
        Condition::And(items) => {
            let mut s = String::from("(and");
            for i in items {
                s.push(' ');
                s.push_str(&fmt_condition(i));
            }
            s.push(')');
            s
        }
        Condition::Compare(op, l, r) => {
            format!("({} {} {})", op.symbol(), fmt_num_expr(l), fmt_num_expr(r))
        }
    }
}

pub fn fmt_effect(e: &Effect) -> String {
    match e {
        Effect::Add(a) => a.to_string(),
        Effect::Delete(a) => format!("(not {a})"),
        Effect::Update(op, head, value) => {
            format!("({} {head} {})", op.keyword(), fmt_num_expr(value))
        }
        Effect::And(items) => {
            let mut s = String::from("(and");
            for i in items {
                s.push(' ');
                s.push_str(&fmt_effect(i));
            }
            s.push(')');
            s
        }
    }
}

pub fn fmt_init_fluent(f: &GroundAtom, v: f64) -> String {
    format!("(= {f} {})", fmt_number(v))
}

fn pad(n: usize) -> String {
    " ".repeat(n)
}

fn write_condition(out: &mut String, c: &Condition, indent: usize) {
    match c {
        Condition::And(items) if !items.is_empty() => {
            out.push_str("(and");
            for item in items {
                out.push('\n');
                out.push_str(&pad(indent + 2));
                write_condition(out, item, indent + 2);
            }
            out.push(')');
        }
        Condition::Not(inner) => {
            out.push_str("(not ");
            write_condition(out, inner, indent);
            out.push(')');
        }
        other => out.push_str(&fmt_condition(other)),
    }
}

fn write_effect(out: &mut String, e: &Effect, indent: usize) {
    match e {
        Effect::And(items) if !items.is_empty() => {
            out.push_str("(and");
            for item in items {
                out.push('\n');
                out.push_str(&pad(indent + 2));
                write_effect(out, item, indent + 2);
            }
            out.push(')');
        }
        other => out.push_str(&fmt_effect(other)),
    }
}

fn write_transition(out: &mut String, t: &TransitionSchema, indent: usize) {
    let inner = pad(indent + 2);
    let _ = write!(out, "(:{} {}", t.kind, t.name);
    let _ = write!(out, "\n{inner}:parameters ({})", fmt_params(&t.params));
    let _ = write!(out, "\n{inner}:precondition ");
    write_condition(out, &t.precondition, indent + 2);
    let _ = write!(out, "\n{inner}:effect ");
    write_effect(out, &t.effect, indent + 2);
    out.push(')');
}

/// Multi-line rendering of one transition schema at top-level indentation.
pub fn fmt_transition(t: &TransitionSchema) -> String {
    let mut s = String::new();
    write_transition(&mut s, t, 0);
    s
}

fn write_section<I: IntoIterator<Item = String>>(out: &mut String, keyword: &str, lines: I) {
    let _ = write!(out, "\n  (:{keyword}");
    for line in lines {
        let _ = write!(out, "\n    {line}");
    }
    out.push(')');
}

pub fn print_domain(d: &DomainModel) -> String {
    let mut out = format!("(define (domain {})", d.name);
    // Untyped names go last: in a type list they would otherwise join the
    // group of the next `- parent`.
    let (typed, roots): (Vec<_>, Vec<_>) = d.types.iter().partition(|(_, p)| p.is_some());
    write_section(
        &mut out,
        "types",
        typed.into_iter().chain(roots).map(|(n, p)| fmt_type_decl(n, p)),
    );
    write_section(&mut out, "predicates", d.predicates.iter().map(fmt_schema));
    if !d.functions.is_empty() {
        write_section(&mut out, "functions", d.functions.iter().map(fmt_schema));
    }
    for t in &d.transitions {
        out.push_str("\n  ");
        write_transition(&mut out, t, 2);
    }
    out.push_str(")\n");
    out
}

pub fn print_problem(p: &ProblemModel) -> String {
    let mut out = format!("(define (problem {})", p.name);
    let _ = write!(out, "\n  (:domain {})", p.domain);
    write_section(&mut out, "objects", p.objects.iter().map(fmt_typed_name));
    write_section(
        &mut out,
        "init",
        p.init_atoms
            .iter()
            .map(ToString::to_string)
            .chain(p.init_fluents.iter().map(|(f, v)| fmt_init_fluent(f, *v))),
    );
    out.push_str("\n  (:goal ");
    write_condition(&mut out, &p.goal, 2);
    out.push_str("))\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsal::parse::{parse_domain, parse_problem};

    #[test]
    fn minimal_domain_golden() {
        let d = parse_domain("(define (domain d) (:types) (:predicates))").unwrap();
        assert_eq!(print_domain(&d), "(define (domain d)\n  (:types)\n  (:predicates))\n");
    }

    #[test]
    fn small_domain_golden() {
        let d = parse_domain(
            "(define (domain d) (:types a - b b) (:predicates (p ?x - a)) (:functions (f))
               (:event e :parameters (?x - a) :precondition (and (p ?x) (not (p ?x)))
                 :effect (and (increase (f) (* 2 (f))) (not (p ?x)))))",
        )
        .unwrap();
        let expected = "\
(define (domain d)
  (:types
    a - b
    b)
  (:predicates
    (p ?x - a))
  (:functions
    (f))
  (:event e
    :parameters (?x - a)
    :precondition (and
      (p ?x)
      (not (p ?x)))
    :effect (and
      (increase (f) (* 2 (f)))
      (not (p ?x)))))
";
        assert_eq!(print_domain(&d), expected);
    }

    #[test]
    fn root_types_print_after_subtypes() {
        let d = parse_domain("(define (domain d) (:types b - a a) (:predicates))").unwrap();
        let text = print_domain(&d);
        assert_eq!(text, "(define (domain d)\n  (:types\n    b - a\n    a)\n  (:predicates))\n");
        assert_eq!(parse_domain(&text).unwrap(), d);
    }

    #[test]
    fn problem_golden() {
        let d = parse_domain(
            "(define (domain d) (:types t) (:predicates (p ?x - t)) (:functions (f ?x - t)))",
        )
        .unwrap();
        let p = parse_problem(
            "(define (problem q) (:domain d) (:objects b a - t)
               (:init (p b) (p a) (= (f b) -0.5) (= (f a) 2)) (:goal (p a)))",
            &d,
        )
        .unwrap();
        let expected = "\
(define (problem q)
  (:domain d)
  (:objects
    b - t
    a - t)
  (:init
    (p a)
    (p b)
    (= (f a) 2)
    (= (f b) -0.5))
  (:goal (p a)))
";
        assert_eq!(print_problem(&p), expected);
    }

    #[test]
    fn inline_fragments() {
        let d = parse_domain(
            "(define (domain d) (:types) (:predicates (p)) (:functions (f))
               (:action a :parameters () :precondition (and (p) (< (f) 3)) :effect (assign (f) (- (f) 1))))",
        )
        .unwrap();
        let t = &d.transitions[0];
        assert_eq!(fmt_condition(&t.precondition), "(and (p) (< (f) 3))");
        assert_eq!(fmt_effect(&t.effect), "(assign (f) (- (f) 1))");
    }
}
