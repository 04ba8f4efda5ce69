//! Conversion from s-expressions to the typed syntax tree.
//!
//! The converters here are purely syntactic. Semantic checks (types, arities,
//! bindings) live in [`super::validate`] and run afterwards.

use super::ast::*;
use super::error::{ParseError, SyntaxError};
use super::sexp::{read_one, Sexp, Span, Token};
use super::validate;

type Result<T> = std::result::Result<T, SyntaxError>;

fn err(span: Span, expected: &[&str], found: impl Into<String>) -> SyntaxError {
    SyntaxError {
        line: span.line,
        column: span.column,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found: found.into(),
    }
}

fn unexpected(s: &Sexp, expected: &[&str]) -> SyntaxError {
    err(s.span(), expected, s.describe())
}

fn as_list<'a>(s: &'a Sexp, expected: &[&str]) -> Result<&'a [Sexp]> {
    match s {
        Sexp::List(items, _) => Ok(items),
        _ => Err(unexpected(s, expected)),
    }
}

fn ident(s: &Sexp) -> Result<&str> {
    match s {
        Sexp::Leaf(Token::Ident(name), _) => Ok(name),
        _ => Err(unexpected(s, &["identifier"])),
    }
}

fn head_ident(items: &[Sexp]) -> Option<&str> {
    match items.first() {
        Some(Sexp::Leaf(Token::Ident(name), _)) => Some(name),
        _ => None,
    }
}

fn head_keyword(items: &[Sexp]) -> Option<&str> {
    match items.first() {
        Some(Sexp::Leaf(Token::Keyword(name), _)) => Some(name),
        _ => None,
    }
}

fn head_symbol(items: &[Sexp]) -> Option<&'static str> {
    match items.first() {
        Some(Sexp::Leaf(Token::Symbol(sym), _)) => Some(sym),
        _ => None,
    }
}

fn expect_len(items: &[Sexp], span: Span, n: usize, what: &str) -> Result<()> {
    if items.len() == n {
        Ok(())
    } else if items.len() > n {
        Err(unexpected(&items[n], &["`)`"]))
    } else {
        Err(err(span, &[what], "`)`"))
    }
}

/// Parses a typed list: `a b - t c - u d`. Names without a trailing type get
/// `default_ty`. `want_vars` selects `?var` versus plain identifiers.
fn typed_list(items: &[Sexp], want_vars: bool, default_ty: &str) -> Result<Vec<Typed>> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        match &items[i] {
            Sexp::Leaf(Token::Symbol("-"), span) => {
                if pending.is_empty() {
                    return Err(err(
                        *span,
                        &[if want_vars { "variable" } else { "name" }],
                        "`-`",
                    ));
                }
                let ty = items
                    .get(i + 1)
                    .ok_or_else(|| err(*span, &["type name"], "`)`"))
                    .and_then(ident)?;
                out.extend(pending.drain(..).map(|n| Typed::new(n, ty)));
                i += 2;
            }
            Sexp::Leaf(Token::Var(v), _) if want_vars => {
                pending.push(v.clone());
                i += 1;
            }
            Sexp::Leaf(Token::Ident(n), _) if !want_vars => {
                pending.push(n.clone());
                i += 1;
            }
            other => {
                return Err(unexpected(
                    other,
                    &[if want_vars { "variable" } else { "name" }, "`-`"],
                ))
            }
        }
    }
    out.extend(pending.drain(..).map(|n| Typed::new(n, default_ty)));
    Ok(out)
}

fn term(s: &Sexp) -> Result<Term> {
    match s {
        Sexp::Leaf(Token::Var(v), _) => Ok(Term::Var(v.clone())),
        Sexp::Leaf(Token::Ident(n), _) => Ok(Term::Object(n.clone())),
        _ => Err(unexpected(s, &["variable", "object name"])),
    }
}

/// `(name term*)`
pub fn atom(s: &Sexp) -> Result<Atom> {
    let items = as_list(s, &["`(`"])?;
    let name = items
        .first()
        .ok_or_else(|| err(s.span(), &["identifier"], "`)`"))
        .and_then(ident)?;
    let args = items[1..].iter().map(term).collect::<Result<_>>()?;
    Ok(Atom::new(name, args))
}

pub fn num_expr(s: &Sexp) -> Result<NumExpr> {
    match s {
        Sexp::Leaf(Token::Number(n), _) => Ok(NumExpr::Const(*n)),
        Sexp::List(items, span) => match head_symbol(items) {
            Some(sym @ ("+" | "-" | "*")) => {
                expect_len(items, *span, 3, "numeric expression")?;
                let op = match sym {
                    "+" => ArithOp::Add,
                    "-" => ArithOp::Sub,
                    _ => ArithOp::Mul,
                };
                Ok(NumExpr::Binary(
                    op,
                    Box::new(num_expr(&items[1])?),
                    Box::new(num_expr(&items[2])?),
                ))
            }
            Some(_) => Err(unexpected(&items[0], &["`+`", "`-`", "`*`", "function name"])),
            None => Ok(NumExpr::Fluent(atom(s)?)),
        },
        _ => Err(unexpected(s, &["number", "`(`"])),
    }
}

pub fn condition(s: &Sexp) -> Result<Condition> {
    let items = as_list(s, &["`(`"])?;
    let span = s.span();
    if let Some(sym) = head_symbol(items) {
        let op = match sym {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "=" => CmpOp::Eq,
            _ => return Err(unexpected(&items[0], &["comparison operator"])),
        };
        expect_len(items, span, 3, "numeric expression")?;
        return Ok(Condition::Compare(
            op,
            num_expr(&items[1])?,
            num_expr(&items[2])?,
        ));
    }
    match head_ident(items) {
        Some("and") => Ok(Condition::And(
            items[1..].iter().map(condition).collect::<Result<_>>()?,
        )),
        Some("not") => {
            expect_len(items, span, 2, "condition")?;
            Ok(Condition::Not(Box::new(condition(&items[1])?)))
        }
        Some(_) => Ok(Condition::Atom(atom(s)?)),
        None => match items.first() {
            Some(first) => Err(unexpected(first, &["predicate name", "`and`", "`not`"])),
            None => Err(err(span, &["predicate name", "`and`", "`not`"], "`)`")),
        },
    }
}

pub fn effect(s: &Sexp) -> Result<Effect> {
    let items = as_list(s, &["`(`"])?;
    let span = s.span();
    match head_ident(items) {
        Some("and") => Ok(Effect::And(
            items[1..].iter().map(effect).collect::<Result<_>>()?,
        )),
        Some("not") => {
            expect_len(items, span, 2, "atom")?;
            Ok(Effect::Delete(atom(&items[1])?))
        }
        Some(kw @ ("assign" | "increase" | "decrease")) => {
            expect_len(items, span, 3, "numeric expression")?;
            let op = match kw {
                "assign" => UpdateOp::Assign,
                "increase" => UpdateOp::Increase,
                _ => UpdateOp::Decrease,
            };
            Ok(Effect::Update(op, atom(&items[1])?, num_expr(&items[2])?))
        }
        Some(_) => Ok(Effect::Add(atom(s)?)),
        None => match items.first() {
            Some(first) => Err(unexpected(first, &["predicate name", "`and`", "`not`"])),
            None => Err(err(span, &["predicate name", "`and`", "`not`"], "`)`")),
        },
    }
}

fn schema(s: &Sexp) -> Result<Schema> {
    let items = as_list(s, &["`(`"])?;
    let name = items
        .first()
        .ok_or_else(|| err(s.span(), &["identifier"], "`)`"))
        .and_then(ident)?;
    Ok(Schema {
        name: name.to_string(),
        params: typed_list(&items[1..], true, ROOT_TYPE)?,
    })
}

fn keyword_list<'a>(s: &'a Sexp, kw: &str) -> Result<&'a [Sexp]> {
    let items = as_list(s, &[&format!("`(:{kw}`")])?;
    match head_keyword(items) {
        Some(k) if k == kw => Ok(&items[1..]),
        _ => Err(match items.first() {
            Some(first) => unexpected(first, &[&format!("`:{kw}`")]),
            None => err(s.span(), &[&format!("`:{kw}`")], "`)`"),
        }),
    }
}

/// `(:action NAME :parameters (...) :precondition C :effect E)`
pub fn transition(s: &Sexp) -> Result<TransitionSchema> {
    let items = as_list(s, &["`(`"])?;
    let span = s.span();
    let kind = head_keyword(items)
        .and_then(TransitionKind::from_keyword)
        .ok_or_else(|| match items.first() {
            Some(first) => unexpected(first, &["`:action`", "`:event`", "`:process`"]),
            None => err(span, &["`:action`", "`:event`", "`:process`"], "`)`"),
        })?;
    expect_len(items, span, 8, "transition body")?;
    let name = ident(&items[1])?;
    let mut parts = Vec::with_capacity(3);
    for (i, kw) in ["parameters", "precondition", "effect"].iter().enumerate() {
        let key = &items[2 + 2 * i];
        match key {
            Sexp::Leaf(Token::Keyword(k), _) if k == kw => parts.push(&items[3 + 2 * i]),
            other => return Err(unexpected(other, &[&format!("`:{kw}`")])),
        }
    }
    let params = typed_list(
        as_list(parts[0], &["parameter list"])?,
        true,
        ROOT_TYPE,
    )?;
    Ok(TransitionSchema {
        kind,
        name: name.to_string(),
        params,
        precondition: condition(parts[1])?,
        effect: effect(parts[2])?,
    })
}

fn define_header<'a>(s: &'a Sexp, what: &str) -> Result<(&'a str, &'a [Sexp])> {
    let items = as_list(s, &["`(define`"])?;
    let span = s.span();
    match head_ident(items) {
        Some("define") => {}
        _ => {
            return Err(match items.first() {
                Some(first) => unexpected(first, &["`define`"]),
                None => err(span, &["`define`"], "`)`"),
            })
        }
    }
    let header = items
        .get(1)
        .ok_or_else(|| err(span, &[&format!("`({what}`")], "`)`"))?;
    let h = as_list(header, &[&format!("`({what}`")])?;
    if head_ident(h) != Some(what) {
        return Err(match h.first() {
            Some(first) => unexpected(first, &[&format!("`{what}`")]),
            None => err(header.span(), &[&format!("`{what}`")], "`)`"),
        });
    }
    expect_len(h, header.span(), 2, "name")?;
    Ok((ident(&h[1])?, &items[2..]))
}

/// Syntactic domain conversion without semantic validation.
pub fn domain_syntax(s: &Sexp) -> Result<DomainModel> {
    let (name, rest) = define_header(s, "domain")?;
    let mut d = DomainModel::new(name);
    let types_sexp = rest
        .first()
        .ok_or_else(|| err(s.span(), &["`(:types`"], "`)`"))?;
    for t in typed_list(keyword_list(types_sexp, "types")?, false, ROOT_TYPE)? {
        if t.name != ROOT_TYPE {
            d.types.declare(t.name, Some(t.ty));
        }
    }
    let preds = rest
        .get(1)
        .ok_or_else(|| err(s.span(), &["`(:predicates`"], "`)`"))?;
    d.predicates = keyword_list(preds, "predicates")?
        .iter()
        .map(schema)
        .collect::<Result<_>>()?;
    let mut idx = 2;
    if let Some(Sexp::List(items, _)) = rest.get(2) {
        if head_keyword(items) == Some("functions") {
            d.functions = items[1..].iter().map(schema).collect::<Result<_>>()?;
            idx = 3;
        }
    }
    d.transitions = rest[idx..]
        .iter()
        .map(transition)
        .collect::<Result<_>>()?;
    Ok(d)
}

fn ground_atom(s: &Sexp) -> Result<GroundAtom> {
    let items = as_list(s, &["`(`"])?;
    let name = items
        .first()
        .ok_or_else(|| err(s.span(), &["identifier"], "`)`"))
        .and_then(ident)?;
    let args = items[1..]
        .iter()
        .map(|a| ident(a).map(str::to_string))
        .collect::<Result<_>>()?;
    Ok(GroundAtom::new(name, args))
}

/// One init entry: a ground atom or `(= (f args) NUMBER)`.
pub enum InitEntry {
    Atom(GroundAtom),
    Fluent(GroundAtom, f64),
}

pub fn init_entry(s: &Sexp) -> Result<InitEntry> {
    let items = as_list(s, &["`(`"])?;
    if head_symbol(items) == Some("=") {
        expect_len(items, s.span(), 3, "number")?;
        let head = ground_atom(&items[1])?;
        match &items[2] {
            Sexp::Leaf(Token::Number(n), _) => Ok(InitEntry::Fluent(head, *n)),
            other => Err(unexpected(other, &["number"])),
        }
    } else {
        Ok(InitEntry::Atom(ground_atom(s)?))
    }
}

/// Syntactic problem conversion without semantic validation. Duplicate init
/// fluent assignments are reported as semantic violations by the caller, so
/// they are collected here.
pub fn problem_syntax(s: &Sexp) -> Result<(ProblemModel, Vec<GroundAtom>)> {
    let (name, rest) = define_header(s, "problem")?;
    let domain_sexp = rest
        .first()
        .ok_or_else(|| err(s.span(), &["`(:domain`"], "`)`"))?;
    let dom = keyword_list(domain_sexp, "domain")?;
    expect_len(dom, domain_sexp.span(), 1, "domain name")?;
    let mut p = ProblemModel::new(name, ident(&dom[0])?);
    let objs = rest
        .get(1)
        .ok_or_else(|| err(s.span(), &["`(:objects`"], "`)`"))?;
    p.objects = typed_list(keyword_list(objs, "objects")?, false, ROOT_TYPE)?;
    let init = rest
        .get(2)
        .ok_or_else(|| err(s.span(), &["`(:init`"], "`)`"))?;
    let mut duplicates = Vec::new();
    for entry in keyword_list(init, "init")? {
        match init_entry(entry)? {
            InitEntry::Atom(a) => {
                p.init_atoms.insert(a);
            }
            InitEntry::Fluent(f, v) => {
                if p.init_fluents.insert(f.clone(), v).is_some() {
                    duplicates.push(f);
                }
            }
        }
    }
    let goal = rest
        .get(3)
        .ok_or_else(|| err(s.span(), &["`(:goal`"], "`)`"))?;
    let g = keyword_list(goal, "goal")?;
    expect_len(g, goal.span(), 1, "goal condition")?;
    p.goal = condition(&g[0])?;
    if let Some(extra) = rest.get(4) {
        return Err(unexpected(extra, &["`)`"]));
    }
    Ok((p, duplicates))
}

/// Parses and validates a domain file.
pub fn parse_domain(text: &str) -> std::result::Result<DomainModel, ParseError> {
    let d = domain_syntax(&read_one(text)?)?;
    let violations = validate::validate_domain(&d);
    if violations.is_empty() {
        Ok(d)
    } else {
        Err(ParseError::Semantic(violations))
    }
}

/// Parses a problem file and cross-checks it against `domain`.
pub fn parse_problem(
    text: &str,
    domain: &DomainModel,
) -> std::result::Result<ProblemModel, ParseError> {
    let (p, duplicates) = problem_syntax(&read_one(text)?)?;
    let mut violations: Vec<_> = duplicates
        .into_iter()
        .map(|f| {
            super::error::Violation::new(
                super::error::Code::DuplicateName,
                format!("init/{}", f.name),
                format!("fluent {f} initialized twice"),
            )
        })
        .collect();
    violations.extend(validate::validate_problem(domain, &p));
    if violations.is_empty() {
        Ok(p)
    } else {
        Err(ParseError::Semantic(violations))
    }
}

/// Parses a standalone condition fragment such as `(= (die1) (die2))`.
pub fn parse_condition(text: &str) -> std::result::Result<Condition, SyntaxError> {
    condition(&read_one(text)?)
}

pub fn parse_effect(text: &str) -> std::result::Result<Effect, SyntaxError> {
    effect(&read_one(text)?)
}

pub fn parse_num_expr(text: &str) -> std::result::Result<NumExpr, SyntaxError> {
    let trimmed = text.trim();
    if let Ok(n) = trimmed.parse::<f64>() {
        if n.is_finite() {
            return Ok(NumExpr::Const(n));
        }
    }
    num_expr(&read_one(text)?)
}

pub fn parse_transition(text: &str) -> std::result::Result<TransitionSchema, SyntaxError> {
    transition(&read_one(text)?)
}

pub fn parse_schema(text: &str) -> std::result::Result<Schema, SyntaxError> {
    schema(&read_one(text)?)
}

pub fn parse_ground_atom(text: &str) -> std::result::Result<GroundAtom, SyntaxError> {
    ground_atom(&read_one(text)?)
}

pub fn parse_init_entry(text: &str) -> std::result::Result<InitEntry, SyntaxError> {
    init_entry(&read_one(text)?)
}

/// Parses `a - t` / `a` style single typed names (used by diff fragments).
pub fn parse_typed_name(text: &str) -> std::result::Result<Typed, SyntaxError> {
    let wrapped = format!("({text})");
    let items = match read_one(&wrapped)? {
        Sexp::List(items, _) => items,
        other => return Err(unexpected(&other, &["name"])),
    };
    let mut list = typed_list(&items, false, ROOT_TYPE)?;
    if list.len() != 1 {
        return Err(err(Span { line: 1, column: 1 }, &["one typed name"], text));
    }
    Ok(list.remove(0))
}
