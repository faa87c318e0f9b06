//! Two-sided digit paths and the prediction measures `mu_omega`: the law of the
//! digit tail given the past, recentred at the coded point.
//!
//! For an order-1 chain the past enters only through `omega_k`, so `mu_{omega,k}`
//! is the chart at level `|k|` around the word `omega_{k+1} ... omega_0`, started
//! from state `omega_k`, in units of the level-0 cell.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::{ln_mass_from, Chart};
use crate::digits::{draw_from, point_from_digits, DigitModel};
use crate::error::{domain, Error, Result};
use crate::grid::{least_squares, wasserstein1, GridMeasure};
use crate::rng;
use crate::scenery::GUARD_DIGITS;

/// Digits `omega_i` for `-past < i <= future`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoSidedPath {
    base: usize,
    past: usize,
    future: usize,
    digits: Vec<u8>,
    seed: Option<u64>,
}

impl TwoSidedPath {
    pub fn new(base: usize, past: usize, future: usize, digits: Vec<u8>) -> Result<Self> {
        if digits.len() != past + future {
            return domain(format!("expected {} digits, got {}", past + future, digits.len()));
        }
        if past == 0 {
            return domain("window must contain index 0");
        }
        if let Some(&d) = digits.iter().find(|&&d| d as usize >= base) {
            return domain(format!("digit {d} out of range for base {base}"));
        }
        Ok(TwoSidedPath { base, past, future, digits, seed: None })
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn past(&self) -> usize {
        self.past
    }

    pub fn future(&self) -> usize {
        self.future
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `omega_i` for `-past < i <= future`.
    pub fn get(&self, i: i64) -> u8 {
        assert!(i > -(self.past as i64) && i <= self.future as i64, "index {i} outside window");
        self.digits[(i + self.past as i64 - 1) as usize]
    }

    /// `omega_a ... omega_b` inclusive.
    pub fn range(&self, a: i64, b: i64) -> &[u8] {
        let lo = (a + self.past as i64 - 1) as usize;
        let hi = (b + self.past as i64) as usize;
        &self.digits[lo..hi]
    }

    /// `omega_1 omega_2 ...`
    pub fn forward(&self) -> &[u8] {
        &self.digits[self.past..]
    }

    /// `xi_k(omega) = sum_{i > k} b^-i omega_i`, truncated to the window.
    pub fn xi(&self, k: i64) -> f64 {
        let b = self.base as f64;
        if k >= 0 {
            let tail = &self.forward()[k as usize..];
            return b.powi(-(k as i32)) * point_from_digits(tail, self.base);
        }
        let int_part = self
            .range(k + 1, 0)
            .iter()
            .fold(0.0, |acc, &d| acc * b + d as f64);
        int_part + point_from_digits(self.forward(), self.base)
    }

    /// The shifted path `T omega`, `(T omega)_i = omega_{i+1}`.
    pub fn shift(&self) -> Result<Self> {
        if self.future == 0 {
            return domain("cannot shift past the end of the window");
        }
        Ok(TwoSidedPath {
            base: self.base,
            past: self.past + 1,
            future: self.future - 1,
            digits: self.digits.clone(),
            seed: self.seed,
        })
    }

    /// `past:future:digits` text record.
    pub fn to_record(&self) -> String {
        let ds: String = self.digits.iter().map(|&d| char::from_digit(d as u32, 36).unwrap()).collect();
        format!("{}:{}:{}:{}", self.base, self.past, self.future, ds)
    }

    pub fn from_record(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 4 {
            return domain("path record needs base:past:future:digits");
        }
        let num = |p: &str| p.parse::<usize>().map_err(|e| Error::Domain(format!("bad number `{p}`: {e}")));
        let digits = parts[3]
            .chars()
            .map(|c| c.to_digit(36).map(|d| d as u8).ok_or_else(|| Error::Domain(format!("bad digit `{c}`"))))
            .collect::<Result<Vec<u8>>>()?;
        Self::new(num(parts[0])?, num(parts[1])?, num(parts[2])?, digits)
    }
}

/// Samples `omega_i`, `-past < i <= future`: `omega_0` from the stationary law,
/// the future by the chain, the past by the time-reversed chain.
pub fn sample_path(model: &DigitModel, past: usize, future: usize, seed: u64) -> Result<TwoSidedPath> {
    if past < 1 || future < 1 {
        return domain("need past >= 1 and future >= 1");
    }
    if model.is_atomic() {
        return Err(Error::AtomicModel(model.label().to_string()));
    }
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let reversed = model.reversed_transition();
    let mut digits = vec![0u8; past + future];
    let zero = past - 1;
    digits[zero] = draw_from(model.start_distribution(), &mut r);
    for i in zero + 1..digits.len() {
        digits[i] = model.draw_digit(Some(digits[i - 1]), &mut r);
    }
    for i in (0..zero).rev() {
        digits[i] = draw_from(&reversed[digits[i + 1] as usize], &mut r);
    }
    Ok(TwoSidedPath { base: model.base(), past, future, digits, seed: Some(seed) })
}

/// `mu_{omega,k}` on cells of width `b^-depth` covering `[-b, b]`, scaled to unit mass on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct PredictionMeasure {
    pub grid: GridMeasure,
    pub k: i64,
    pub depth: u32,
}

fn chart_for<'a>(model: &'a DigitModel, path: &TwoSidedPath, k: i64) -> Result<Chart<'a>> {
    if k > 0 {
        return domain("truncation index must be <= 0");
    }
    if k <= -(path.past() as i64) {
        return domain(format!("truncation {k} needs more than {} past digits", path.past()));
    }
    if path.future() < GUARD_DIGITS {
        return domain(format!("need at least {GUARD_DIGITS} future digits"));
    }
    let word = if k < 0 { path.range(k + 1, 0) } else { &[][..] };
    Chart::new(model, Some(path.get(k)), word, model.base() + 1)
}

pub fn prediction_measure(model: &DigitModel, path: &TwoSidedPath, k: i64, depth: u32) -> Result<PredictionMeasure> {
    if path.base() != model.base() {
        return domain("path and model bases differ");
    }
    let chart = chart_for(model, path, k)?;
    let b = model.base() as f64;
    let n = model
        .base()
        .checked_pow(depth + 1)
        .map(|n| 2 * n)
        .filter(|&n| n <= 1 << 24)
        .ok_or_else(|| Error::Resolution(format!("depth {depth} too large")))?;
    let u = point_from_digits(path.forward(), model.base());
    let cums: Vec<f64> = (0..=n).map(|i| chart.cum(u - b + 2.0 * b * i as f64 / n as f64)).collect();
    let masses: Vec<f64> = cums.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let raw = GridMeasure::new(model.base(), -b, b, masses)?;
    let grid = raw.star_normalize()?;
    Ok(PredictionMeasure { grid, k, depth })
}

/// `W1((S_{log b} mu_omega^*)^□, (mu_{T omega}^*)^□)` at truncation `k`.
pub fn intertwine_check(model: &DigitModel, path: &TwoSidedPath, k: i64, depth: u32) -> Result<f64> {
    let here = prediction_measure(model, path, k, depth + 1)?;
    let zoomed = here.grid.affine_rescale(0.0, model.ln_base())?.restrict_normalize()?;
    let there = prediction_measure(model, &path.shift()?, k, depth)?;
    wasserstein1(&zoomed, &there.grid.restrict_normalize()?)
}

/// Averages `(U_{-xi(omega)} mu_omega)|_[0,1]` over sampled paths and returns its
/// W1 distance to `mu`, both carried to `[-1, 1]` by `x -> 2x - 1`.
pub fn superposition_check(model: &DigitModel, n_paths: usize, depth: u32, seed: u64) -> Result<f64> {
    let avg = superposition_average(model, n_paths, depth, seed)?;
    let target = GridMeasure::from_model(model, depth)?;
    let to_sym = |g: &GridMeasure| g.affine_rescale(0.5, 2f64.ln());
    wasserstein1(&to_sym(&avg)?, &to_sym(&target)?)
}

pub fn superposition_average(model: &DigitModel, n_paths: usize, depth: u32, seed: u64) -> Result<GridMeasure> {
    if n_paths == 0 {
        return domain("need at least one path");
    }
    let n = model
        .base()
        .checked_pow(depth)
        .filter(|&n| n <= 1 << 22)
        .ok_or_else(|| Error::Resolution(format!("depth {depth} too large")))?;
    use rayon::prelude::*;
    let per_path: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let path = sample_path(model, 3, GUARD_DIGITS + 2, rng::split(seed, rng::STREAM_PATHS, i))?;
            let chart = chart_for(model, &path, -2)?;
            // the chart's center cell is the translated [0, 1]
            let cums: Vec<f64> = (0..=n).map(|j| chart.cum(j as f64 / n as f64)).collect();
            let total = cums[n] - cums[0];
            Ok(cums.windows(2).map(|w| (w[1] - w[0]).max(0.0) / total).collect())
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![0.0; n];
    for row in &per_path {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    let masses = acc.into_iter().map(|a| a / n_paths as f64).collect();
    GridMeasure::new(model.base(), 0.0, 1.0, masses)
}

/// Local-dimension slope of `mu_omega` at the origin over balls `B(0, b^-n)`.
pub fn prediction_dimension_check(model: &DigitModel, path: &TwoSidedPath, depths: &[usize]) -> Result<f64> {
    if depths.len() < 2 {
        return domain("need at least two depths");
    }
    let need = depths.iter().max().unwrap() + GUARD_DIGITS;
    if path.future() < need {
        return Err(Error::InsufficientDigits { needed: need, available: path.future() });
    }
    let lnb = model.ln_base();
    let start = Some(path.get(0));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in depths {
        let word = &path.forward()[..n];
        let ln_w = ln_mass_from(model, start, word);
        if ln_w == f64::NEG_INFINITY {
            return Err(Error::ZeroMass);
        }
        let chart = Chart::new(model, start, word, 2)?;
        let u = point_from_digits(&path.forward()[n..], model.base());
        let rel = chart.cum(u + 1.0) - chart.cum(u - 1.0);
        xs.push(-(n as f64) * lnb);
        ys.push(ln_w + rel.ln());
    }
    Ok(least_squares(&xs, &ys).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::shipped;

    #[test]
    fn xi_shift_identity() {
        let m = shipped::golden_mean();
        let p = sample_path(&m, 20, 60, 9).unwrap();
        let b = 2f64;
        for k in 1..10 {
            let lhs = p.xi(k);
            let mut q = p.clone();
            for _ in 0..k {
                q = q.shift().unwrap();
            }
            assert!((lhs - b.powi(-(k as i32)) * q.xi(0)).abs() < 1e-15);
        }
    }

    #[test]
    fn record_roundtrip() {
        let p = sample_path(&shipped::period_two(), 5, 30, 1).unwrap();
        let mut q = TwoSidedPath::from_record(&p.to_record()).unwrap();
        q.seed = p.seed;
        assert_eq!(p, q);
    }

    #[test]
    fn uniform_prediction_measure() {
        let fair = DigitModel::bernoulli(2, vec![0.5, 0.5], "fair").unwrap();
        let mut digits = vec![0u8; 4];
        digits.extend(std::iter::repeat(1).take(1).chain(std::iter::repeat(0).take(30)));
        // omega_0 = 0, omega_1 = 1 so xi_0 = 1/2
        let path = TwoSidedPath::new(2, 4, 31, digits).unwrap();
        let pm = prediction_measure(&fair, &path, -1, 4).unwrap();
        // support [-xi_{-1}, 2 - xi_{-1}] = [-1/2, 3/2]; [-1, 1] holds 3/4 of it
        for (i, &m) in pm.grid.masses().iter().enumerate() {
            let (a, b) = pm.grid.cell_bounds(i);
            let inside = (b.min(1.5) - a.max(-0.5)).max(0.0);
            assert!((m - inside / 1.5).abs() < 1e-12, "cell {i}");
        }
    }

    #[test]
    fn cantor_zero_path() {
        let c = shipped::cantor();
        let path = TwoSidedPath::new(3, 6, 40, vec![0; 46]).unwrap();
        let pm = prediction_measure(&c, &path, -4, 3).unwrap();
        for k in 0..=13u64 {
            let x = 2.0 * k as f64 / 27.0;
            let (got, want) = (pm.grid.mass_between(0.0, x), c.cdf_b_adic(2 * k, 3));
            assert!((got - want).abs() < 1e-9, "k={k} {got} {want}");
        }
        assert!(pm.grid.mass_between(-3.0, 0.0) < 1e-15);
    }
}
