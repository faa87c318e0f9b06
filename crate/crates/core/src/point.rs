//! Points of `[0, 1]` given by finite digit strings.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::digits::{digits_of, point_from_digits, DigitModel};
use crate::error::{domain, Result};
use crate::rng;

/// A point `x = 0.d_1 d_2 ...` in base `b`, optionally remembering the seed it
/// was drawn with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSpec {
    digits: Vec<u8>,
    base: usize,
    seed: Option<u64>,
}

impl PointSpec {
    pub fn from_digits(base: usize, digits: Vec<u8>) -> Result<Self> {
        if let Some(&d) = digits.iter().find(|&&d| d as usize >= base) {
            return domain(format!("digit {d} out of range for base {base}"));
        }
        Ok(PointSpec { digits, base, seed: None })
    }

    /// Digits of a double; only the first ~`53 / log2 b` digits are meaningful.
    pub fn from_x(x: f64, base: usize, n_digits: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&x) {
            return domain(format!("point {x} outside [0, 1)"));
        }
        Ok(PointSpec { digits: digits_of(x, base, n_digits), base, seed: None })
    }

    /// Draws a model-typical point with `n_digits` digits.
    pub fn sample(model: &DigitModel, n_digits: usize, seed: u64) -> Self {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        PointSpec { digits: model.sample_digits(n_digits, &mut r), base: model.base(), seed: Some(seed) }
    }

    /// The `index`-th point of a sample rooted at `root`, using the shared
    /// seed-splitting scheme.
    pub fn sample_indexed(model: &DigitModel, n_digits: usize, root: u64, stream: u64, index: u64) -> Self {
        Self::sample(model, n_digits, rng::split(root, stream, index))
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn x(&self) -> f64 {
        point_from_digits(&self.digits, self.base)
    }

    /// Position inside the level-`m` cell, in units of that cell.
    pub fn local_coordinate(&self, m: usize) -> f64 {
        point_from_digits(&self.digits[m.min(self.digits.len())..], self.base)
    }
}
