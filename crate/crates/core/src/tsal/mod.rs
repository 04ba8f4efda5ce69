//! The TSAL modelling language: a PDDL-flavoured s-expression subset with
//! typed objects, predicates, numeric fluents, and action/event/process
//! schemas.

pub mod ast;
pub mod diff;
pub mod error;
pub mod parse;
pub mod print;
pub mod sexp;
pub mod validate;

pub use ast::*;
pub use diff::{diff_domains, diff_models, diff_problems, Change, DiffEntry, DiffError, StructuralDiff};
pub use error::{Code, ParseError, SyntaxError, Violation};
pub use parse::{
    parse_condition, parse_domain, parse_effect, parse_ground_atom, parse_init_entry, parse_num_expr,
    parse_problem, parse_schema, parse_transition, parse_typed_name, InitEntry,
};
pub use print::{
    fmt_condition, fmt_effect, fmt_init_fluent, fmt_num_expr, fmt_number, fmt_schema, fmt_transition,
    print_domain, print_problem,
};
pub use validate::{validate_domain, validate_pair, validate_problem};
