use std::hash::{Hash, Hasher};

use fixedbitset::FixedBitSet;

/// True atoms plus a total fluent valuation. Values are compared and hashed
/// by bit pattern, with `-0.0` normalized to `0.0` on write.
#[derive(Debug, Clone)]
pub struct State {
    pub atoms: FixedBitSet,
    pub values: Vec<f64>,
}

impl State {
    pub fn new(atoms: FixedBitSet, values: Vec<f64>) -> Self {
        let values = values.into_iter().map(|v| v + 0.0).collect();
        Self { atoms, values }
    }

    pub fn set_value(&mut self, fluent: usize, v: f64) {
        self.values[fluent] = v + 0.0;
    }
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Eq for State {}

impl Hash for State {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.atoms.hash(h);
        for v in &self.values {
            v.to_bits().hash(h);
        }
    }
}
