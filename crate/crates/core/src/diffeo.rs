//! Smooth monotone maps of the line: affine maps, polynomials on an interval,
//! and compositions of those.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_DERIVATIVE: f64 = 1e-6;
pub const MAX_DERIVATIVE: f64 = 1e6;

const CHECK_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffeoSpec {
    /// `x -> u x + v`.
    Affine { u: f64, v: f64 },
    /// `x -> sum c_k x^k` on `[lo, hi]`.
    Polynomial { coefficients: Vec<f64>, lo: f64, hi: f64 },
    /// `parts[0]` applied first.
    Composition { parts: Vec<DiffeoSpec> },
}

fn diffeo_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Diffeo(msg.into()))
}

impl DiffeoSpec {
    pub fn identity() -> Self {
        DiffeoSpec::Affine { u: 1.0, v: 0.0 }
    }

    pub fn affine(u: f64, v: f64) -> Result<Self> {
        let f = DiffeoSpec::Affine { u, v };
        f.validate()?;
        Ok(f)
    }

    pub fn polynomial(coefficients: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        let f = DiffeoSpec::Polynomial { coefficients, lo, hi };
        f.validate()?;
        Ok(f)
    }

    pub fn compose(parts: Vec<DiffeoSpec>) -> Result<Self> {
        let f = DiffeoSpec::Composition { parts };
        f.validate()?;
        Ok(f)
    }

    /// Interval on which the map is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            DiffeoSpec::Affine { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            DiffeoSpec::Polynomial { lo, hi, .. } => (*lo, *hi),
            DiffeoSpec::Composition { parts } => {
                parts.first().map(|p| p.domain()).unwrap_or((f64::NEG_INFINITY, f64::INFINITY))
            }
        }
    }

    pub fn is_affine(&self) -> bool {
        match self {
            DiffeoSpec::Affine { .. } => true,
            DiffeoSpec::Polynomial { coefficients, .. } => {
                coefficients.iter().skip(2).all(|&c| c == 0.0)
            }
            DiffeoSpec::Composition { parts } => parts.iter().all(|p| p.is_affine()),
        }
    }

    /// Checks finiteness, strict monotonicity and derivative bounds on the domain.
    pub fn validate(&self) -> Result<()> {
        match self {
            DiffeoSpec::Affine { u, v } => {
                if !u.is_finite() || !v.is_finite() {
                    return diffeo_err("non-finite affine coefficients");
                }
                let a = u.abs();
                if !(MIN_DERIVATIVE..=MAX_DERIVATIVE).contains(&a) {
                    return diffeo_err(format!("slope {u} outside derivative bounds"));
                }
                Ok(())
            }
            DiffeoSpec::Polynomial { coefficients, lo, hi } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return diffeo_err("polynomial needs finite coefficients");
                }
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return diffeo_err(format!("bad polynomial domain [{lo}, {hi}]"));
                }
                self.check_derivative_on_domain()
            }
            DiffeoSpec::Composition { parts } => {
                if parts.is_empty() {
                    return diffeo_err("empty composition");
                }
                for p in parts {
                    p.validate()?;
                }
                for w in parts.windows(2) {
                    let (lo, hi) = w[0].domain();
                    if lo.is_finite() && hi.is_finite() {
                        let (a, b) = (w[0].eval(lo), w[0].eval(hi));
                        let (ilo, ihi) = (a.min(b), a.max(b));
                        let (nlo, nhi) = w[1].domain();
                        if ilo < nlo || ihi > nhi {
                            return diffeo_err("composition: image leaves the next map's domain");
                        }
                    } else if w[1].domain().0.is_finite() || w[1].domain().1.is_finite() {
                        return diffeo_err("composition: unbounded image fed into a bounded map");
                    }
                }
                self.check_derivative_on_domain()
            }
        }
    }

    fn check_derivative_on_domain(&self) -> Result<()> {
        let (lo, hi) = self.domain();
        if !(lo.is_finite() && hi.is_finite()) {
            return Ok(());
        }
        let mut sign = 0.0;
        for i in 0..=CHECK_POINTS {
            let x = lo + (hi - lo) * i as f64 / CHECK_POINTS as f64;
            let d = self.derivative(x);
            let a = d.abs();
            if !(MIN_DERIVATIVE..=MAX_DERIVATIVE).contains(&a) {
                return diffeo_err(format!("derivative {d} at {x} outside [1e-6, 1e6]"));
            }
            if sign == 0.0 {
                sign = d.signum();
            } else if d.signum() != sign {
                return diffeo_err(format!("map is not monotone: derivative changes sign near {x}"));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            DiffeoSpec::Affine { u, v } => u * x + v,
            DiffeoSpec::Polynomial { coefficients, .. } => {
                coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            DiffeoSpec::Composition { parts } => parts.iter().fold(x, |y, p| p.eval(y)),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            DiffeoSpec::Affine { u, .. } => *u,
            DiffeoSpec::Polynomial { coefficients, .. } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c),
            DiffeoSpec::Composition { parts } => {
                let mut y = x;
                let mut d = 1.0;
                for p in parts {
                    d *= p.derivative(y);
                    y = p.eval(y);
                }
                d
            }
        }
    }

    pub fn is_increasing(&self) -> bool {
        let (lo, hi) = self.domain();
        let mid = if lo.is_finite() && hi.is_finite() { 0.5 * (lo + hi) } else { 0.0 };
        self.derivative(mid) > 0.0
    }

    /// `(f(x + h) - f(x)) / h`, evaluated without cancellation; `f'(x)` at `h = 0`.
    pub fn difference_quotient(&self, x: f64, h: f64) -> f64 {
        match self {
            DiffeoSpec::Affine { u, .. } => *u,
            DiffeoSpec::Polynomial { coefficients, .. } => {
                let y = x + h;
                let mut total = 0.0;
                for (k, &c) in coefficients.iter().enumerate().skip(1) {
                    if c == 0.0 {
                        continue;
                    }
                    // ((x+h)^k - x^k) / h = sum_{j<k} y^j x^(k-1-j)
                    let mut s = 0.0;
                    let mut yj = 1.0;
                    for j in 0..k {
                        s += yj * x.powi((k - 1 - j) as i32);
                        yj *= y;
                    }
                    total += c * s;
                }
                total
            }
            DiffeoSpec::Composition { parts } => {
                let mut y = x;
                let mut hh = h;
                let mut prod = 1.0;
                for p in parts {
                    let q = p.difference_quotient(y, hh);
                    prod *= q;
                    y = p.eval(y);
                    hh *= q;
                }
                prod
            }
        }
    }

    /// Offset `v` with `f(x + v) - f(x) = h`, clamped to the domain. Solved by
    /// safeguarded Newton on the stable difference quotient.
    pub fn solve_offset(&self, x: f64, h: f64) -> f64 {
        if let DiffeoSpec::Affine { u, .. } = self {
            return h / u;
        }
        if h == 0.0 {
            return 0.0;
        }
        let (lo, hi) = self.domain();
        let inc = self.is_increasing();
        let g = |v: f64| v * self.difference_quotient(x, v);
        let (mut a, mut b) = (lo - x, hi - x);
        let (ga, gb) = (g(a), g(b));
        let (gmin, gmax) = if inc { (ga, gb) } else { (gb, ga) };
        if h <= gmin {
            return if inc { a } else { b };
        }
        if h >= gmax {
            return if inc { b } else { a };
        }
        let mut v = (h / self.derivative(x)).clamp(a, b);
        for _ in 0..200 {
            let r = g(v) - h;
            if r == 0.0 {
                return v;
            }
            // keep the bracket [a, b] around the root
            if (r > 0.0) == inc {
                b = v;
            } else {
                a = v;
            }
            let d = self.derivative(x + v);
            let mut next = v - r / d;
            if !(next > a && next < b) || !next.is_finite() {
                next = 0.5 * (a + b);
            }
            if (next - v).abs() <= 1e-17 * (1.0 + v.abs()) || b - a <= 4.0 * f64::EPSILON * v.abs() {
                return next;
            }
            v = next;
        }
        v
    }

    /// `f^{-1}(y)`, clamped to the domain.
    pub fn inverse(&self, y: f64) -> f64 {
        match self {
            DiffeoSpec::Affine { u, v } => (y - v) / u,
            _ => {
                let (lo, hi) = self.domain();
                let x0 = 0.5 * (lo + hi);
                x0 + self.solve_offset(x0, y - self.eval(x0))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square_tenth() -> DiffeoSpec {
        DiffeoSpec::polynomial(vec![0.0, 1.0, 0.1], -1.0, 2.0).unwrap()
    }

    #[test]
    fn rejects_non_monotone() {
        assert!(DiffeoSpec::polynomial(vec![0.0, 0.0, 1.0], -1.0, 1.0).is_err());
        assert!(DiffeoSpec::affine(0.0, 1.0).is_err());
        assert!(DiffeoSpec::affine(2e6, 0.0).is_err());
    }

    #[test]
    fn composition_chain_rule() {
        let f = DiffeoSpec::compose(vec![square_tenth(), DiffeoSpec::affine(2.0, 1.0).unwrap()]).unwrap();
        let x = 0.3;
        assert!((f.eval(x) - (2.0 * (x + 0.1 * x * x) + 1.0)).abs() < 1e-15);
        assert!((f.derivative(x) - 2.0 * (1.0 + 0.2 * x)).abs() < 1e-15);
    }

    #[test]
    fn difference_quotient_is_stable() {
        let f = square_tenth();
        let x = 0.4;
        let h = 1e-12;
        let dq = f.difference_quotient(x, h);
        assert!((dq - (1.0 + 0.1 * (2.0 * x + h))).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn offsets_invert(x in 0.0f64..1.0, e in -30.0f64..-0.5, s in prop::bool::ANY) {
            let f = square_tenth();
            let h = if s { e.exp() } else { -e.exp() };
            let v = f.solve_offset(x, h);
            let back = v * f.difference_quotient(x, v);
            prop_assert!((back - h).abs() <= 1e-13 * h.abs());
        }

        #[test]
        fn inverse_roundtrip(x in -0.9f64..1.9) {
            let f = square_tenth();
            prop_assert!((f.inverse(f.eval(x)) - x).abs() < 1e-12);
        }
    }
}
