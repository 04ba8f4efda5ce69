//! Models shipped with the crate.

use crate::tsal::{parse_domain, parse_problem, DomainModel, ProblemModel};

pub const BOARD_LITE: &str = include_str!("../domains/board-lite.tsal");
pub const BOARD_LITE_P1: &str = include_str!("../domains/board-lite-p1.tsal");
pub const DELIVERY: &str = include_str!("../domains/delivery.tsal");
pub const DELIVERY_P1: &str = include_str!("../domains/delivery-p1.tsal");

/// `(name, domain text, problem text)` for every bundled pair.
pub const ALL: [(&str, &str, &str); 2] = [
    ("board-lite", BOARD_LITE, BOARD_LITE_P1),
    ("delivery", DELIVERY, DELIVERY_P1),
];

/// Domain and problem text of a bundled pair.
pub fn by_name(name: &str) -> Option<(&'static str, &'static str)> {
    ALL.iter().find(|(n, _, _)| *n == name).map(|(_, d, p)| (*d, *p))
}

fn load(domain: &str, problem: &str) -> (DomainModel, ProblemModel) {
    let d = parse_domain(domain).expect("bundled domain parses");
    let p = parse_problem(problem, &d).expect("bundled problem parses");
    (d, p)
}

pub fn board_lite() -> (DomainModel, ProblemModel) {
    load(BOARD_LITE, BOARD_LITE_P1)
}

pub fn delivery() -> (DomainModel, ProblemModel) {
    load(DELIVERY, DELIVERY_P1)
}
