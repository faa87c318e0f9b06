//! Bounded test functionals on measures of `[-1, 1]`, evaluated exactly on
//! cell-uniform grid measures.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::grid::GridMeasure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunctional {
    /// Mass of `[a, b]`.
    IntervalMass { a: f64, b: f64 },
    /// `integral z^order`.
    Moment { order: u32 },
    /// Integral of the tent of height 1 around `center`.
    Tent { center: f64, half_width: f64 },
}

impl TestFunctional {
    pub fn interval_mass(a: f64, b: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&a) || !(-1.0..=1.0).contains(&b) || a >= b {
            return domain(format!("interval [{a}, {b}] not a sub-interval of [-1, 1]"));
        }
        Ok(TestFunctional::IntervalMass { a, b })
    }

    pub fn moment(order: u32) -> Result<Self> {
        if !(1..=4).contains(&order) {
            return domain(format!("moment order {order} outside 1..=4"));
        }
        Ok(TestFunctional::Moment { order })
    }

    pub fn tent(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !center.is_finite() {
            return domain("tent needs a finite center and positive half-width");
        }
        Ok(TestFunctional::Tent { center, half_width })
    }

    /// The six functionals used by default.
    pub fn default_bank() -> Vec<TestFunctional> {
        vec![
            TestFunctional::IntervalMass { a: 0.0, b: 1.0 / 3.0 },
            TestFunctional::IntervalMass { a: -1.0 / 3.0, b: 1.0 / 3.0 },
            TestFunctional::IntervalMass { a: -1.0, b: 0.0 },
            TestFunctional::Moment { order: 1 },
            TestFunctional::Moment { order: 2 },
            TestFunctional::Tent { center: 0.0, half_width: 0.5 },
        ]
    }

    pub fn name(&self) -> String {
        match self {
            TestFunctional::IntervalMass { a, b } => format!("mass[{a:.4},{b:.4}]"),
            TestFunctional::Moment { order } => format!("moment{order}"),
            TestFunctional::Tent { center, half_width } => format!("tent({center:.4},{half_width:.4})"),
        }
    }

    pub fn evaluate(&self, g: &GridMeasure) -> f64 {
        match *self {
            TestFunctional::IntervalMass { a, b } => g.mass_between(a, b),
            TestFunctional::Moment { order } => {
                let k = order as i32;
                let mut s = 0.0;
                for (i, &m) in g.masses().iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    let (a, b) = g.cell_bounds(i);
                    s += m * (b.powi(k + 1) - a.powi(k + 1)) / ((k + 1) as f64 * (b - a));
                }
                s
            }
            TestFunctional::Tent { center, half_width } => {
                let mut s = 0.0;
                for (i, &m) in g.masses().iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    let (a, b) = g.cell_bounds(i);
                    s += m * tent_integral(center, half_width, a, b) / (b - a);
                }
                s
            }
        }
    }
}

fn tent_integral(c: f64, h: f64, a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    let (p, q) = (a.max(c - h), b.min(c));
    if q > p {
        total += ((q - c + h).powi(2) - (p - c + h).powi(2)) / (2.0 * h);
    }
    let (p, q) = (a.max(c), b.min(c + h));
    if q > p {
        total += ((c + h - p).powi(2) - (c + h - q).powi(2)) / (2.0 * h);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_uniform() {
        let u = GridMeasure::uniform(2, 6, -1.0, 1.0, 1.0).unwrap();
        let bank = TestFunctional::default_bank();
        let want = [1.0 / 6.0, 1.0 / 3.0, 0.5, 0.0, 1.0 / 3.0, 0.25];
        for (f, w) in bank.iter().zip(want) {
            assert!((f.evaluate(&u) - w).abs() < 1e-12, "{}", f.name());
        }
    }

    #[test]
    fn bounded_by_one() {
        let atom = GridMeasure::cell_atom(2, 8, -1.0, 1.0, 0.999).unwrap();
        for f in TestFunctional::default_bank() {
            assert!(f.evaluate(&atom).abs() <= 1.0);
        }
        assert!(TestFunctional::moment(5).is_err());
        assert!(TestFunctional::interval_mass(0.5, 0.2).is_err());
    }
}
