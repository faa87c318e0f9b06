//! Fourier averages of test functionals along scenery orbits, frequency scans
//! and the peak/control decision rule.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::digits::DigitModel;
use crate::error::{domain, Error, Result};
use crate::functional::TestFunctional;
use crate::point::PointSpec;
use crate::rng;
use crate::scenery::{digits_needed, functional_series, par_map_points};

/// Frame resolution used by scans: about 64 cells.
pub fn scan_frame_depth(base: usize) -> u32 {
    (6.0 * 2f64.ln() / (base as f64).ln()).ceil() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    /// Averaging length `T`; rounded down to a multiple of `dt`.
    pub t_max: f64,
    pub dt: f64,
    /// Orbit times are `t_start + i dt`; the default skips `8 log b` so points
    /// near the ends of `[0, 1]` do not contribute boundary transients.
    pub t_start: f64,
    pub frame_depth: u32,
}

impl ScanParams {
    pub fn defaults(base: usize) -> Self {
        let lnb = (base as f64).ln();
        ScanParams { t_max: 400.0 * lnb, dt: lnb / 8.0, t_start: 8.0 * lnb, frame_depth: scan_frame_depth(base) }
    }

    pub fn validate(&self, base: usize) -> Result<()> {
        let lnb = (base as f64).ln();
        if !(self.dt > 0.0) || self.dt > lnb / 8.0 + 1e-12 {
            return domain(format!("dt = {} must lie in (0, log b / 8]", self.dt));
        }
        if !(self.t_max >= 50.0 * lnb) {
            return domain(format!("T = {} must be at least 50 log b", self.t_max));
        }
        if !(self.t_start >= 0.0) {
            return domain("t_start must be nonnegative");
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        (self.t_max / self.dt + 1e-9).floor() as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples()).map(|i| self.t_start + i as f64 * self.dt).collect()
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.n_samples() as f64 * self.dt
    }
}

#[derive(Default)]
struct CompensatedComplex {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier_add(acc: &mut (f64, f64), x: f64) {
    let (s, c) = *acc;
    let t = s + x;
    let c = if s.abs() >= x.abs() { c + ((s - t) + x) } else { c + ((x - t) + s) };
    *acc = (t, c);
}

impl CompensatedComplex {
    fn add(&mut self, z: Complex64) {
        neumaier_add(&mut self.re, z.re);
        neumaier_add(&mut self.im, z.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

/// `e(-alpha t) = exp(-2 pi i alpha t)`.
pub fn character(alpha: f64, t: f64) -> Complex64 {
    let (s, c) = (2.0 * std::f64::consts::PI * alpha * t).sin_cos();
    Complex64::new(c, -s)
}

/// `(1/N) sum_i e(-alpha t_i) v_i`, the Riemann sum `(1/T) sum e(-alpha t_i) v_i dt`.
pub fn fourier_sum(times: &[f64], values: &[f64], alpha: f64) -> Complex64 {
    assert_eq!(times.len(), values.len());
    if times.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let mut acc = CompensatedComplex::default();
    for (&t, &v) in times.iter().zip(values) {
        acc.add(character(alpha, t) * v);
    }
    acc.value() / times.len() as f64
}

/// Fourier average of `F(mu_{x,t})` along the orbit of one point.
pub fn fourier_average(
    model: &DigitModel,
    point: &PointSpec,
    alpha: f64,
    f: &TestFunctional,
    params: &ScanParams,
) -> Result<Complex64> {
    params.validate(model.base())?;
    let times = params.times();
    let series = functional_series(model, point, &times, params.frame_depth, std::slice::from_ref(f), None)?;
    let values: Vec<f64> = series.iter().map(|r| r[0]).collect();
    Ok(fourier_sum(&times, &values, alpha))
}

/// Functional values along one orbit, `values[j][i] = F_j(mu_{x, t_i})`.
#[derive(Debug, Clone)]
pub struct OrbitSeries {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl OrbitSeries {
    pub fn compute(
        model: &DigitModel,
        point: &PointSpec,
        functionals: &[TestFunctional],
        params: &ScanParams,
    ) -> Result<Self> {
        let times = params.times();
        let rows = functional_series(model, point, &times, params.frame_depth, functionals, None)?;
        let values = (0..functionals.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Ok(OrbitSeries { times, values })
    }

    /// Fourier average of every functional at `alpha`. For `alpha != 0` the
    /// orbit mean is removed first, so a constant orbit gives exactly zero.
    pub fn coefficients(&self, alpha: f64) -> Vec<Complex64> {
        self.values
            .iter()
            .map(|v| {
                if alpha == 0.0 || v.is_empty() {
                    return fourier_sum(&self.times, v, alpha);
                }
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                let centered: Vec<f64> = v.iter().map(|x| x - mean).collect();
                fourier_sum(&self.times, &centered, alpha)
            })
            .collect()
    }
}

/// Samples `n` points with enough digits for orbits up to `t_end`.
pub fn sample_points(model: &DigitModel, n: usize, t_end: f64, seed: u64) -> Vec<PointSpec> {
    let digits = digits_needed(model.base(), t_end) + crate::scenery::GUARD_DIGITS;
    (0..n as u64)
        .map(|i| PointSpec::sample_indexed(model, digits, seed, rng::STREAM_POINTS, i))
        .collect()
}

/// Frequencies to scan; `control[i]` marks off-lattice controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub alphas: Vec<f64>,
    pub control: Vec<bool>,
}

const LATTICE_K: u32 = 6;
const LATTICE_M: u32 = 3;
/// Minimum distance of a control from the lattice, in units of `1 / log b`.
const CONTROL_GAP: f64 = 0.04;
const CONTROL_MAX: f64 = 6.5;

fn lattice_units() -> Vec<f64> {
    let mut v: Vec<f64> = Vec::new();
    for m in 1..=LATTICE_M {
        for k in 1..=LATTICE_K {
            if gcd(k, m) == 1 {
                v.push(k as f64 / m as f64);
            }
        }
    }
    v.sort_by(f64::total_cmp);
    v
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl AlphaGrid {
    /// Lattice points `k / (m log b)`, `k <= 6`, `m <= 3`, plus `n_controls`
    /// off-lattice frequencies including `golden / log b` and `sqrt 2 / log b`.
    pub fn standard(base: usize, n_controls: usize) -> Self {
        let lnb = (base as f64).ln();
        let lattice = lattice_units();
        let far = |u: f64| u > CONTROL_GAP && lattice.iter().all(|&l| (u - l).abs() >= CONTROL_GAP);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let mut controls: Vec<f64> = vec![golden, 2f64.sqrt()];
        let mut j = 1u32;
        while controls.len() < n_controls {
            let u = 0.1 + (j as f64 * (golden - 1.0)).fract() * (CONTROL_MAX - 0.1);
            if far(u) && controls.iter().all(|&c| (c - u).abs() > 0.01) {
                controls.push(u);
            }
            j += 1;
        }
        let mut entries: Vec<(f64, bool)> = lattice
            .iter()
            .map(|&u| (u / lnb, false))
            .chain(controls.into_iter().map(|u| (u / lnb, true)))
            .collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        AlphaGrid { alphas: entries.iter().map(|e| e.0).collect(), control: entries.iter().map(|e| e.1).collect() }
    }

    pub fn new(alphas: Vec<f64>, control: Vec<bool>) -> Result<Self> {
        if alphas.len() != control.len() {
            return domain("alpha and control lists differ in length");
        }
        if alphas.windows(2).any(|w| !(w[0] < w[1])) {
            return domain("alpha grid must be strictly increasing");
        }
        Ok(AlphaGrid { alphas, control })
    }

    pub fn index_of(&self, alpha: f64) -> Option<usize> {
        self.alphas.iter().position(|&a| (a - alpha).abs() <= 1e-9 * alpha.abs().max(1.0))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumScan {
    pub base: usize,
    pub grid: AlphaGrid,
    /// Mean over points of the largest `|Fourier average|` over functionals,
    /// orbit means removed.
    pub magnitudes: Vec<f64>,
    pub magnitude_std: Vec<f64>,
    pub n_points: usize,
    pub t_max: f64,
    pub dt: f64,
}

/// Per-point, per-alpha largest coefficient magnitude over functionals.
pub fn point_magnitudes(series: &OrbitSeries, grid: &AlphaGrid) -> Vec<f64> {
    grid.alphas
        .iter()
        .map(|&a| series.coefficients(a).iter().map(|z| z.norm()).fold(0.0, f64::max))
        .collect()
}

pub fn spectrum_scan(
    model: &DigitModel,
    points: &[PointSpec],
    grid: &AlphaGrid,
    functionals: &[TestFunctional],
    params: &ScanParams,
) -> Result<SpectrumScan> {
    params.validate(model.base())?;
    if functionals.is_empty() {
        return domain("need at least one functional");
    }
    let per_point: Vec<Vec<f64>> = par_map_points(points, |p| {
        OrbitSeries::compute(model, p, functionals, params).map(|s| point_magnitudes(&s, grid))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let n = per_point.len();
    let mut magnitudes = vec![0.0; grid.alphas.len()];
    let mut magnitude_std = vec![0.0; grid.alphas.len()];
    if n > 0 {
        for i in 0..grid.alphas.len() {
            let col: Vec<f64> = per_point.iter().map(|r| r[i]).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            magnitudes[i] = mean;
            magnitude_std[i] = var.sqrt();
        }
    }
    Ok(SpectrumScan {
        base: model.base(),
        grid: grid.clone(),
        magnitudes,
        magnitude_std,
        n_points: n,
        t_max: params.n_samples() as f64 * params.dt,
        dt: params.dt,
    })
}

impl SpectrumScan {
    pub fn control_median(&self) -> Option<f64> {
        let mut c: Vec<f64> = self
            .magnitudes
            .iter()
            .zip(&self.grid.control)
            .filter(|(_, &is)| is)
            .map(|(&m, _)| m)
            .collect();
        if c.is_empty() {
            return None;
        }
        c.sort_by(f64::total_cmp);
        let k = c.len();
        Some(if k % 2 == 1 { c[k / 2] } else { 0.5 * (c[k / 2 - 1] + c[k / 2]) })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "alpha,magnitude,magnitude_std,n_points,T")?;
        for i in 0..self.grid.alphas.len() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{},{:.17e}",
                self.grid.alphas[i], self.magnitudes[i], self.magnitude_std[i], self.n_points, self.t_max
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub present: f64,
    pub absent: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { present: 5.0, absent: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Present,
    Absent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub alpha: f64,
    pub decision: Decision,
    pub magnitude: f64,
    pub control_median: f64,
    pub ratio: f64,
}

/// Fewest controls for which a decision is made.
pub const MIN_CONTROLS: usize = 8;

/// Magnitudes below this are treated as zero when forming ratios.
pub const NOISE_FLOOR: f64 = 1e-6;

pub fn eigenvalue_present(scan: &SpectrumScan, alpha: f64, th: Thresholds) -> Result<Detection> {
    let i = scan
        .grid
        .index_of(alpha)
        .ok_or_else(|| Error::Domain(format!("alpha {alpha} is not on the scan grid")))?;
    let magnitude = scan.magnitudes[i];
    let n_controls = scan.grid.control.iter().filter(|&&c| c).count();
    let median = scan.control_median().unwrap_or(0.0);
    if scan.n_points == 0 || n_controls < MIN_CONTROLS {
        return Ok(Detection { alpha, decision: Decision::Inconclusive, magnitude, control_median: median, ratio: f64::NAN });
    }
    let ratio = magnitude / median.max(NOISE_FLOOR);
    let decision = if ratio >= th.present {
        Decision::Present
    } else if ratio <= th.absent {
        Decision::Absent
    } else {
        Decision::Inconclusive
    };
    Ok(Detection { alpha, decision, magnitude, control_median: median, ratio })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakReport {
    /// Smallest `n <= 6` with `n / log b` present.
    pub detected_n: Option<u32>,
    pub lattice: Vec<Detection>,
}

pub fn peak_report(scan: &SpectrumScan, th: Thresholds) -> Result<PeakReport> {
    let lnb = (scan.base as f64).ln();
    let lattice = scan
        .grid
        .alphas
        .iter()
        .zip(&scan.grid.control)
        .filter(|(_, &c)| !c)
        .map(|(&a, _)| eigenvalue_present(scan, a, th))
        .collect::<Result<Vec<_>>>()?;
    let detected_n = (1..=LATTICE_K).find(|&n| {
        lattice
            .iter()
            .any(|d| (d.alpha * lnb - n as f64).abs() < 1e-9 && d.decision == Decision::Present)
    });
    Ok(PeakReport { detected_n, lattice })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_grid_shape() {
        let g = AlphaGrid::standard(3, 24);
        let lnb = 3f64.ln();
        assert_eq!(g.control.iter().filter(|&&c| c).count(), 24);
        assert!(g.alphas.windows(2).all(|w| w[0] < w[1]));
        for k in 1..=6u32 {
            for m in 1..=3u32 {
                assert!(g.index_of(k as f64 / (m as f64 * lnb)).is_some(), "{k}/{m}");
            }
        }
        assert!(g.index_of((1.0 + 5f64.sqrt()) / 2.0 / lnb).is_some());
        assert!(g.alphas.iter().all(|&a| a > 0.0 && a < 6.5 / lnb));
    }

    #[test]
    fn conjugate_symmetry() {
        let times: Vec<f64> = (0..500).map(|i| i as f64 * 0.1).collect();
        let vals: Vec<f64> = times.iter().map(|t| (t * 0.7).sin().abs()).collect();
        let a = fourier_sum(&times, &vals, 0.37);
        let b = fourier_sum(&times, &vals, -0.37);
        assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn off_grid_alpha_rejected() {
        let g = AlphaGrid::standard(2, 20);
        let scan = SpectrumScan {
            base: 2,
            magnitudes: vec![0.0; g.alphas.len()],
            magnitude_std: vec![0.0; g.alphas.len()],
            grid: g,
            n_points: 1,
            t_max: 100.0,
            dt: 0.05,
        };
        assert!(eigenvalue_present(&scan, 0.123456, Thresholds::default()).is_err());
    }

    #[test]
    fn empty_scan_inconclusive() {
        let g = AlphaGrid::standard(2, 20);
        let a = g.alphas[0];
        let scan = SpectrumScan {
            base: 2,
            magnitudes: vec![0.0; g.alphas.len()],
            magnitude_std: vec![0.0; g.alphas.len()],
            grid: g,
            n_points: 0,
            t_max: 0.0,
            dt: 0.05,
        };
        assert_eq!(eigenvalue_present(&scan, a, Thresholds::default()).unwrap().decision, Decision::Inconclusive);
    }
}
