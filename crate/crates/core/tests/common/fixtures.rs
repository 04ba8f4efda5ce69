//! Hand-built novelties over the bundled models with known effects.

use noveltyforge::bundled;
use noveltyforge::transform::{Params, Transformation, TransformationKind as K};
use noveltyforge::tsal::{DomainModel, ProblemModel};

pub struct Fixture {
    pub name: &'static str,
    pub base: fn() -> (DomainModel, ProblemModel),
    pub transformations: Vec<Transformation>,
    pub relevant: bool,
}

pub fn labelled() -> Vec<Fixture> {
    let c = |kind, target: &str, v: f64| Transformation::new(kind, target, Params::constant(v));
    let pass_go = "event/pass-go/effect/1/value";
    vec![
        Fixture {
            name: "pass-go pays 1000",
            base: bundled::board_lite,
            transformations: vec![c(K::PerturbNumericConstant, pass_go, 1000.0)],
            relevant: true,
        },
        Fixture {
            name: "pass-go costs 500",
            base: bundled::board_lite,
            transformations: vec![c(K::PerturbNumericConstant, pass_go, -500.0)],
            relevant: true,
        },
        Fixture {
            name: "roll-move disabled",
            base: bundled::board_lite,
            transformations: vec![Transformation::new(K::DisableTransition, "action/roll-move", Params::none())],
            relevant: true,
        },
        Fixture {
            name: "faster battery drain",
            base: bundled::delivery,
            transformations: vec![c(K::PerturbInitFluent, "init/drain-rate/r1", 4.0)],
            relevant: true,
        },
        Fixture {
            name: "lab and office disconnected",
            base: bundled::delivery,
            transformations: vec![Transformation::new(K::RemoveInitAtom, "init/connected/lab/office", Params::none())],
            relevant: true,
        },
        Fixture {
            name: "turn by 45",
            base: bundled::delivery,
            transformations: vec![c(K::PerturbNumericConstant, "action/turn/effect/0/value", 45.0)],
            relevant: false,
        },
        Fixture {
            name: "heading wraps at 720",
            base: bundled::delivery,
            transformations: vec![c(K::PerturbNumericConstant, "event/heading-wrap/precondition/0/right", 720.0)],
            relevant: false,
        },
        Fixture {
            name: "initial heading 180",
            base: bundled::delivery,
            transformations: vec![c(K::PerturbInitFluent, "init/heading/r1", 180.0)],
            relevant: false,
        },
        Fixture {
            name: "cycle every 7",
            base: bundled::delivery,
            transformations: vec![c(K::PerturbNumericConstant, "event/cycle/precondition/0/right", 7.0)],
            relevant: false,
        },
        Fixture {
            name: "opponent starts richer",
            base: bundled::board_lite,
            transformations: vec![c(K::PerturbInitFluent, "init/cash/p2", 3000.0)],
            relevant: false,
        },
    ]
}

/// The reference archetypes, as transformation stacks. Their effect on the
/// planner is not labelled.
pub fn archetypes() -> Vec<Fixture> {
    let lit = |kind, target: &str, text: &str| Transformation::new(kind, target, Params::literal(text));
    let pass_go = "event/pass-go/effect/1/value";
    let board = |name, transformations| Fixture {
        name,
        base: bundled::board_lite,
        transformations,
        relevant: false,
    };
    let delivery = |name, transformations| Fixture {
        name,
        base: bundled::delivery,
        transformations,
        relevant: false,
    };
    vec![
        board("gain 1000 passing GO", vec![Transformation::new(K::PerturbNumericConstant, pass_go, Params::constant(1000.0))]),
        board("lose 500 passing GO", vec![Transformation::new(K::PerturbNumericConstant, pass_go, Params::constant(-500.0))]),
        board("move only on doubles", vec![lit(K::AddPreconditionLiteral, "action/roll-move/precondition", "(= (die1) (die2))")]),
        board("gain 25 each turn", vec![lit(K::AddEffectLiteral, "process/settle/effect", "(increase (cash ?p) 25)")]),
        board("rent only while the owner is jailed", vec![lit(K::AddPreconditionLiteral, "event/pay-rent/precondition", "(in-jail ?owner)")]),
        delivery(
            "battery loss every 7 ticks",
            vec![
                Transformation::new(K::PerturbNumericConstant, "event/cycle/precondition/0/right", Params::constant(7.0)),
                lit(K::AddEffectLiteral, "event/cycle/effect", "(decrease (battery ?r) 1)"),
            ],
        ),
        delivery("turned every 3 ticks", vec![lit(K::AddEffectLiteral, "event/cycle/effect", "(increase (heading ?r) 90)")]),
    ]
}

impl Fixture {
    /// Base and novel models.
    pub fn models(&self) -> ((DomainModel, ProblemModel), (DomainModel, ProblemModel)) {
        let (d, p) = (self.base)();
        let novel = noveltyforge::transform::apply_all(&d, &p, &self.transformations)
            .unwrap_or_else(|e| panic!("{}: {e}", self.name));
        ((d, p), novel)
    }
}
