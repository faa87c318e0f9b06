//! Sceneries `mu_{x,t}`: the measure around `x`, zoomed by `e^t`, restricted to
//! `[-1, 1]` and normalized; also sceneries of pushforwards `f mu` at `f(x)`,
//! orbits, discrete-time averages and the time-shift check for smooth maps.
//!
//! Frames are computed from a local chart at level `m = floor(t / log b)`, so a
//! frame at any depth costs the same and is exact up to the conditional-CDF
//! resolution.

use rayon::prelude::*;

use crate::chart::Chart;
use crate::diffeo::DiffeoSpec;
use crate::digits::DigitModel;
use crate::error::{domain, Error, Result};
use crate::functional::TestFunctional;
use crate::grid::{wasserstein1, GridMeasure};
use crate::point::PointSpec;

/// Digits a point must carry beyond the deepest level used.
pub const GUARD_DIGITS: usize = 10;

/// Default frame resolution: `12` digits in base 2, and roughly the same cell
/// count in other bases.
pub fn default_frame_depth(base: usize) -> u32 {
    ((12.0 * 2f64.ln() / (base as f64).ln()).floor() as u32).max(1)
}

/// Digits needed for an orbit up to `t_max`, including guard digits and the
/// digits resolved by the conditional CDF.
pub fn digits_needed(base: usize, t_max: f64) -> usize {
    (t_max / (base as f64).ln()).ceil() as usize + crate::chart::cdf_depth(base) + 2
}

fn level_of(t: f64, ln_b: f64) -> usize {
    if t <= 0.0 {
        0
    } else {
        (t / ln_b + 1e-9).floor() as usize
    }
}

/// Computes frames of one point, reusing the chart while the level is unchanged.
pub(crate) struct FrameMaker<'a> {
    model: &'a DigitModel,
    point: &'a PointSpec,
    distortion: Option<&'a DiffeoSpec>,
    n_cells: usize,
    x: f64,
    log_fprime: f64,
    cache: Option<(usize, Chart<'a>)>,
}

impl<'a> FrameMaker<'a> {
    pub fn new(
        model: &'a DigitModel,
        point: &'a PointSpec,
        distortion: Option<&'a DiffeoSpec>,
        frame_depth: u32,
    ) -> Result<Self> {
        if model.is_atomic() {
            return Err(Error::AtomicModel(model.label().to_string()));
        }
        if point.base() != model.base() {
            return domain("point and model bases differ");
        }
        let n_cells = model
            .base()
            .checked_pow(frame_depth)
            .filter(|&n| n <= 1 << 24)
            .ok_or_else(|| Error::Resolution(format!("frame depth {frame_depth} too large")))?;
        let x = point.x();
        let mut log_fprime = 0.0;
        if let Some(f) = distortion {
            f.validate()?;
            let (lo, hi) = f.domain();
            if !(x >= lo && x <= hi) {
                return Err(Error::Diffeo(format!("point {x} outside the map's domain")));
            }
            let d = f.derivative(x);
            if !(d > 0.0) {
                return Err(Error::Diffeo("sceneries of pushforwards need an increasing map".into()));
            }
            log_fprime = d.ln();
        }
        Ok(FrameMaker { model, point, distortion, n_cells, x, log_fprime, cache: None })
    }

    /// `log f'(x)`, zero without distortion.
    pub fn log_fprime(&self) -> f64 {
        self.log_fprime
    }

    fn chart(&mut self, m: usize) -> Result<&Chart<'a>> {
        let stale = !matches!(&self.cache, Some((lvl, _)) if *lvl == m);
        if stale {
            let need = m + GUARD_DIGITS;
            if self.point.len() < need {
                return Err(Error::InsufficientDigits { needed: need, available: self.point.len() });
            }
            let chart = Chart::new(self.model, None, &self.point.digits()[..m], 2)?;
            self.cache = Some((m, chart));
        }
        Ok(&self.cache.as_ref().unwrap().1)
    }

    /// Local-coordinate positions of the frame edges at time `t`, and the level.
    fn edges(&mut self, t: f64) -> Result<(usize, Vec<f64>)> {
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("scenery time {t} must be finite and nonnegative"));
        }
        let n = self.n_cells;
        let ln_b = self.model.ln_base();
        let zs = (0..=n).map(move |k| -1.0 + 2.0 * k as f64 / n as f64);
        match self.distortion {
            None => {
                let m = level_of(t, ln_b);
                let lambda = (m as f64 * ln_b - t).exp();
                let u = self.point.local_coordinate(m);
                Ok((m, zs.map(|z| u + lambda * z).collect()))
            }
            Some(f) => {
                let h = (-t).exp();
                let offsets: Vec<f64> = zs.map(|z| f.solve_offset(self.x, h * z)).collect();
                let mut m = level_of(t + self.log_fprime, ln_b);
                loop {
                    let scale = (m as f64 * ln_b).exp();
                    let u = self.point.local_coordinate(m);
                    let e: Vec<f64> = offsets.iter().map(|v| u + scale * v).collect();
                    let fits = m == 0 || (e[0] >= -2.0 && e[n] <= 3.0);
                    if fits {
                        return Ok((m, e));
                    }
                    m -= 1;
                }
            }
        }
    }

    pub fn frame(&mut self, t: f64) -> Result<GridMeasure> {
        let (m, edges) = self.edges(t)?;
        let base = self.model.base();
        let chart = self.chart(m)?;
        let cums: Vec<f64> = edges.iter().map(|&e| chart.cum(e)).collect();
        let total = cums[cums.len() - 1] - cums[0];
        if !(total > 0.0) {
            return Err(Error::ZeroMass);
        }
        let masses = cums.windows(2).map(|w| (w[1] - w[0]).max(0.0) / total).collect();
        Ok(GridMeasure::from_parts_unchecked(base, -1.0, 1.0, masses))
    }
}

/// `mu_{x,t}` on `base^frame_depth` cells of `[-1, 1]`.
pub fn scenery(model: &DigitModel, point: &PointSpec, t: f64, frame_depth: u32) -> Result<GridMeasure> {
    FrameMaker::new(model, point, None, frame_depth)?.frame(t)
}

/// `(f mu)_{f(x),t}` for increasing `f`.
pub fn distorted_scenery(
    model: &DigitModel,
    point: &PointSpec,
    f: &DiffeoSpec,
    t: f64,
    frame_depth: u32,
) -> Result<GridMeasure> {
    FrameMaker::new(model, point, Some(f), frame_depth)?.frame(t)
}

#[derive(Debug, Clone)]
pub struct SceneryOrbit {
    pub times: Vec<f64>,
    pub frames: Vec<GridMeasure>,
    pub distorted: bool,
}

/// Frames at `t = 0, dt, ..., t_max`.
pub fn scenery_orbit(
    model: &DigitModel,
    point: &PointSpec,
    t_max: f64,
    dt: f64,
    frame_depth: u32,
    distortion: Option<&DiffeoSpec>,
) -> Result<SceneryOrbit> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return domain("orbit needs dt > 0 and t_max >= 0");
    }
    let count = (t_max / dt + 1e-9).floor() as usize + 1;
    let times: Vec<f64> = (0..count).map(|i| i as f64 * dt).collect();
    let mut maker = FrameMaker::new(model, point, distortion, frame_depth)?;
    let frames = times.iter().map(|&t| maker.frame(t)).collect::<Result<Vec<_>>>()?;
    Ok(SceneryOrbit { times, frames, distorted: distortion.is_some() })
}

/// `values[i][j] = F_j(frame at times[i])`, without keeping the frames.
pub fn functional_series(
    model: &DigitModel,
    point: &PointSpec,
    times: &[f64],
    frame_depth: u32,
    functionals: &[TestFunctional],
    distortion: Option<&DiffeoSpec>,
) -> Result<Vec<Vec<f64>>> {
    let mut maker = FrameMaker::new(model, point, distortion, frame_depth)?;
    times
        .iter()
        .map(|&t| {
            let fr = maker.frame(t)?;
            Ok(functionals.iter().map(|f| f.evaluate(&fr)).collect())
        })
        .collect()
}

/// Functional values along an orbit with uniform weights, plus prefix means.
#[derive(Debug, Clone)]
pub struct EmpiricalSceneryDistribution {
    pub functional_names: Vec<String>,
    pub times: Vec<f64>,
    /// `values[i][j]`: functional `j` on frame `i`.
    pub values: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// `prefix_means[n - 1][j]`: mean of functional `j` over the first `n` frames.
    pub prefix_means: Vec<Vec<f64>>,
}

impl EmpiricalSceneryDistribution {
    pub fn from_values(functional_names: Vec<String>, times: Vec<f64>, values: Vec<Vec<f64>>) -> Self {
        let n = values.len();
        let k = functional_names.len();
        let mut sums = vec![0.0; k];
        let mut prefix_means = Vec::with_capacity(n);
        for (i, row) in values.iter().enumerate() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
            prefix_means.push(sums.iter().map(|s| s / (i + 1) as f64).collect());
        }
        EmpiricalSceneryDistribution {
            functional_names,
            times,
            weights: vec![1.0 / n.max(1) as f64; n],
            values,
            prefix_means,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> Vec<f64> {
        self.prefix_means.last().cloned().unwrap_or_default()
    }

    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        let n = self.values.len().max(1) as f64;
        (0..mean.len())
            .map(|j| self.values.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n)
            .collect()
    }

    /// `|avg_N - avg_2N|` per functional.
    pub fn cauchy_gap(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 || 2 * n > self.values.len() {
            return Err(Error::InsufficientData(format!(
                "need {} frames for N = {n}, have {}",
                2 * n,
                self.values.len()
            )));
        }
        Ok(self.prefix_means[n - 1]
            .iter()
            .zip(&self.prefix_means[2 * n - 1])
            .map(|(a, b)| (a - b).abs())
            .collect())
    }

    /// `(N, max_j |avg_N - avg_2N|)` for `N = 1, 2, 4, ...`.
    pub fn cauchy_decay(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        let mut n = 1;
        while 2 * n <= self.values.len() {
            let g = self.cauchy_gap(n).unwrap();
            out.push((n, g.into_iter().fold(0.0, f64::max)));
            n *= 2;
        }
        out
    }
}

/// Averages over the frames at `t = n step`, `n >= 1`. The orbit must be
/// sampled at multiples of `step`.
pub fn maker_average(
    orbit: &SceneryOrbit,
    functionals: &[TestFunctional],
    step: f64,
) -> Result<EmpiricalSceneryDistribution> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (t, fr) in orbit.times.iter().zip(&orbit.frames) {
        let r = t / step;
        if (r - r.round()).abs() > 1e-6 {
            return domain(format!("orbit time {t} is not a multiple of step {step}"));
        }
        if r.round() < 1.0 {
            continue;
        }
        times.push(*t);
        values.push(functionals.iter().map(|f| f.evaluate(fr)).collect());
    }
    Ok(EmpiricalSceneryDistribution::from_values(
        functionals.iter().map(|f| f.name()).collect(),
        times,
        values,
    ))
}

/// One entry of a time-shift comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftDistance {
    pub t: f64,
    /// `None` when `t - log f'(x) < 0`.
    pub distance: Option<f64>,
}

/// `W1(mu_{x,t}, (f mu)_{f(x), t - s})` with `s = log f'(x)`.
pub fn diffeo_shift_check(
    model: &DigitModel,
    point: &PointSpec,
    f: &DiffeoSpec,
    times: &[f64],
    frame_depth: u32,
) -> Result<Vec<ShiftDistance>> {
    let mut plain = FrameMaker::new(model, point, None, frame_depth)?;
    let mut pushed = FrameMaker::new(model, point, Some(f), frame_depth)?;
    let s = pushed.log_fprime();
    times
        .iter()
        .map(|&t| {
            if t - s < 0.0 {
                return Ok(ShiftDistance { t, distance: None });
            }
            let a = plain.frame(t)?;
            let b = pushed.frame(t - s)?;
            Ok(ShiftDistance { t, distance: Some(wasserstein1(&a, &b)?) })
        })
        .collect()
}

/// Applies `job` to every point in parallel; results keep the input order.
pub fn par_map_points<T, F>(points: &[PointSpec], job: F) -> Vec<T>
where
    T: Send,
    F: Fn(&PointSpec) -> T + Sync + Send,
{
    points.par_iter().map(|p| job(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::shipped;

    #[test]
    fn lebesgue_frame_is_uniform() {
        let leb = shipped::lebesgue(2);
        let p = PointSpec::from_x(0.5, 2, 60).unwrap();
        let f = scenery(&leb, &p, 1.0, 8).unwrap();
        assert!(f.masses().iter().all(|&m| (m - 1.0 / 256.0).abs() < 1e-12));
    }

    #[test]
    fn cantor_fixed_point_frames_repeat() {
        let c = shipped::cantor();
        let zero = PointSpec::from_digits(3, vec![0; 80]).unwrap();
        let first = scenery(&c, &zero, 0.0, 5).unwrap();
        for m in 1..30 {
            let fr = scenery(&c, &zero, m as f64 * 3f64.ln(), 5).unwrap();
            for (a, b) in fr.masses().iter().zip(first.masses()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn atomic_models_refused() {
        let d = shipped::deterministic();
        let p = PointSpec::from_digits(2, vec![0; 40]).unwrap();
        assert!(matches!(scenery(&d, &p, 1.0, 4), Err(Error::AtomicModel(_))));
    }

    #[test]
    fn insufficient_digits() {
        let c = shipped::cantor();
        let p = PointSpec::from_digits(3, vec![0; 12]).unwrap();
        assert!(matches!(scenery(&c, &p, 5.0, 4), Err(Error::InsufficientDigits { .. })));
    }

    #[test]
    fn point_outside_support() {
        let c = shipped::cantor();
        let p = PointSpec::from_digits(3, vec![1; 40]).unwrap();
        assert!(matches!(scenery(&c, &p, 5.0, 4), Err(Error::ZeroMass)));
    }

    #[test]
    fn maker_step_mismatch() {
        let c = shipped::cantor();
        let p = PointSpec::sample(&c, 60, 3);
        let orbit = scenery_orbit(&c, &p, 5.0, 0.5, 3, None).unwrap();
        assert!(maker_average(&orbit, &TestFunctional::default_bank(), 3f64.ln()).is_err());
    }

    #[test]
    fn frame_depth_defaults() {
        assert_eq!(default_frame_depth(2), 12);
        assert_eq!(default_frame_depth(3), 7);
    }
}
