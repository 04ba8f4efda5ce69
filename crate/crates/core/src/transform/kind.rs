use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The transformation catalog. R-kinds edit the domain, T-kinds edit the
/// problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformationKind {
    PerturbNumericConstant,
    AddPreconditionLiteral,
    RemovePreconditionLiteral,
    NegatePreconditionLiteral,
    AddEffectLiteral,
    RemoveEffectLiteral,
    SwapEffectPolarity,
    RetypeParameter,
    DisableTransition,
    AddEventFromAction,
    AddSubtype,
    PerturbInitFluent,
    AddInitAtom,
    RemoveInitAtom,
    ChangeObjectCount,
    RetypeObject,
}

use TransformationKind as K;

impl TransformationKind {
    pub const ALL: [TransformationKind; 16] = [
        K::PerturbNumericConstant,
        K::AddPreconditionLiteral,
        K::RemovePreconditionLiteral,
        K::NegatePreconditionLiteral,
        K::AddEffectLiteral,
        K::RemoveEffectLiteral,
        K::SwapEffectPolarity,
        K::RetypeParameter,
        K::DisableTransition,
        K::AddEventFromAction,
        K::AddSubtype,
        K::PerturbInitFluent,
        K::AddInitAtom,
        K::RemoveInitAtom,
        K::ChangeObjectCount,
        K::RetypeObject,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            K::PerturbNumericConstant => "perturb-numeric-constant",
            K::AddPreconditionLiteral => "add-precondition-literal",
            K::RemovePreconditionLiteral => "remove-precondition-literal",
            K::NegatePreconditionLiteral => "negate-precondition-literal",
            K::AddEffectLiteral => "add-effect-literal",
            K::RemoveEffectLiteral => "remove-effect-literal",
            K::SwapEffectPolarity => "swap-effect-polarity",
            K::RetypeParameter => "retype-parameter",
            K::DisableTransition => "disable-transition",
            K::AddEventFromAction => "add-event-from-action",
            K::AddSubtype => "add-subtype",
            K::PerturbInitFluent => "perturb-init-fluent",
            K::AddInitAtom => "add-init-atom",
            K::RemoveInitAtom => "remove-init-atom",
            K::ChangeObjectCount => "change-object-count",
            K::RetypeObject => "retype-object",
        }
    }

    /// True for kinds that edit the domain model.
    pub fn is_domain_kind(self) -> bool {
        !matches!(
            self,
            K::PerturbInitFluent | K::AddInitAtom | K::RemoveInitAtom | K::ChangeObjectCount | K::RetypeObject
        )
    }

    /// The parameter key this kind carries, if any.
    pub fn param_key(self) -> Option<&'static str> {
        match self {
            K::PerturbNumericConstant | K::PerturbInitFluent => Some("constant"),
            K::AddPreconditionLiteral | K::AddEffectLiteral => Some("literal"),
            K::RetypeParameter | K::RetypeObject => Some("type"),
            K::AddSubtype | K::AddEventFromAction => Some("name"),
            K::AddInitAtom => Some("atom"),
            K::ChangeObjectCount => Some("delta"),
            K::RemovePreconditionLiteral
            | K::NegatePreconditionLiteral
            | K::RemoveEffectLiteral
            | K::SwapEffectPolarity
            | K::DisableTransition
            | K::RemoveInitAtom => None,
        }
    }
}

impl fmt::Display for TransformationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for TransformationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        K::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| format!("unknown transformation kind `{s}`"))
    }
}

/// Kind-specific values. Exactly the field named by
/// [`TransformationKind::param_key`] is set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Replacement numeric value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    /// Condition or effect text to inject.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub literal: Option<String>,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub ty: Option<String>,
    /// Name of a new type or transition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Ground atom text to add to the initial state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<String>,
    /// Change in object count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<i64>,
}

impl Params {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn constant(v: f64) -> Self {
        Self {
            constant: Some(v),
            ..Self::default()
        }
    }

    pub fn literal(text: impl Into<String>) -> Self {
        Self {
            literal: Some(text.into()),
            ..Self::default()
        }
    }

    pub fn ty(ty: impl Into<String>) -> Self {
        Self {
            ty: Some(ty.into()),
            ..Self::default()
        }
    }

    pub fn name(name: impl Into<String>) -> Self {
        Self {
            name: Some(name.into()),
            ..Self::default()
        }
    }

    pub fn atom(text: impl Into<String>) -> Self {
        Self {
            atom: Some(text.into()),
            ..Self::default()
        }
    }

    pub fn delta(d: i64) -> Self {
        Self {
            delta: Some(d),
            ..Self::default()
        }
    }

    /// Sets one field from its textual override form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "constant" => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| format!("`{value}` is not a number"))?;
                if !v.is_finite() {
                    return Err(format!("`{value}` is not finite"));
                }
                self.constant = Some(v);
            }
            "delta" => {
                self.delta = Some(
                    value
                        .parse()
                        .map_err(|_| format!("`{value}` is not an integer"))?,
                )
            }
            "literal" => self.literal = Some(value.to_string()),
            "type" => self.ty = Some(value.to_string()),
            "name" => self.name = Some(value.to_string()),
            "atom" => self.atom = Some(value.to_string()),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }
}

/// One edit: a kind, a path into the model, and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transformation {
    pub kind: TransformationKind,
    pub target: String,
    #[serde(default)]
    pub params: Params,
}

impl Transformation {
    pub fn new(kind: TransformationKind, target: impl Into<String>, params: Params) -> Self {
        Self {
            kind,
            target: target.into(),
            params,
        }
    }
}
