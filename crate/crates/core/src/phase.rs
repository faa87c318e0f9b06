//! Phases of scenery-flow eigenfunctions read off from Fourier averages,
//! relative phases `p_alpha(x0, y)`, phase measures and circular statistics.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffeo::DiffeoSpec;
use crate::digits::DigitModel;
use crate::error::{domain, Error, Result};
use crate::functional::TestFunctional;
use crate::point::PointSpec;
use crate::rng;
use crate::scenery::{digits_needed, functional_series, par_map_points, GUARD_DIGITS};
use crate::spectral::{fourier_sum, OrbitSeries, ScanParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub scan: ScanParams,
    pub functionals: Vec<TestFunctional>,
    /// Coefficients smaller than this are low-signal.
    pub abs_floor: f64,
    /// Fraction of the median sample magnitude below which a sample is low-signal.
    pub rel_floor: f64,
    /// Histograms use `2^bins_log2` bins.
    pub bins_log2: u32,
    /// Largest tolerated fraction of low-signal samples.
    pub max_low_fraction: f64,
}

impl PhaseParams {
    pub fn defaults(base: usize) -> Self {
        PhaseParams {
            scan: ScanParams::defaults(base),
            functionals: TestFunctional::default_bank(),
            abs_floor: 2e-3,
            rel_floor: 0.25,
            bins_log2: 5,
            max_low_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSample {
    pub point_seed: Option<u64>,
    pub alpha: f64,
    /// Unit-modulus phase.
    pub value: Complex64,
    /// `|c|` before normalization.
    pub magnitude: f64,
    pub good: bool,
    /// Index of the functional the phase was read from.
    pub functional: usize,
}

impl PhaseSample {
    /// Angle in `[0, 2 pi)`.
    pub fn angle(&self) -> f64 {
        self.value.arg().rem_euclid(TAU)
    }
}

fn unit(z: Complex64) -> Complex64 {
    z / z.norm()
}

/// Coefficients of every functional at `alpha` along the (possibly distorted) orbit.
fn coefficients(
    model: &DigitModel,
    point: &PointSpec,
    alpha: f64,
    params: &PhaseParams,
    distortion: Option<&DiffeoSpec>,
) -> Result<Vec<Complex64>> {
    params.scan.validate(model.base())?;
    if params.functionals.is_empty() {
        return domain("need at least one functional");
    }
    if distortion.is_none() {
        let s = OrbitSeries::compute(model, point, &params.functionals, &params.scan)?;
        return Ok(s.coefficients(alpha));
    }
    let times = params.scan.times();
    let rows = functional_series(model, point, &times, params.scan.frame_depth, &params.functionals, distortion)?;
    Ok((0..params.functionals.len())
        .map(|j| {
            let v: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
            let centered: Vec<f64> = v.iter().map(|x| x - mean).collect();
            fourier_sum(&times, &centered, alpha)
        })
        .collect())
}

fn sample_from(c: Complex64, j: usize, alpha: f64, seed: Option<u64>, floor: f64) -> PhaseSample {
    let magnitude = c.norm();
    let good = magnitude >= floor && magnitude > 0.0;
    let value = if magnitude > 0.0 { unit(c) } else { Complex64::new(1.0, 0.0) };
    PhaseSample { point_seed: seed, alpha, value, magnitude, good, functional: j }
}

fn argmax(cs: &[Complex64]) -> usize {
    let mut best = 0;
    for (j, c) in cs.iter().enumerate() {
        if c.norm() > cs[best].norm() {
            best = j;
        }
    }
    best
}

/// Phase of the largest Fourier coefficient over the functional bank.
pub fn phase_at_point(model: &DigitModel, point: &PointSpec, alpha: f64, params: &PhaseParams) -> Result<PhaseSample> {
    let cs = coefficients(model, point, alpha, params, None)?;
    let j = argmax(&cs);
    let s = sample_from(cs[j], j, alpha, point.seed(), params.abs_floor);
    if !s.good {
        return Err(Error::LowSignal { magnitude: s.magnitude, floor: params.abs_floor });
    }
    Ok(s)
}

/// `p_alpha(x0, y)`, both phases read from the functional chosen at `x0`.
pub fn relative_phase(
    model: &DigitModel,
    x0: &PointSpec,
    y: &PointSpec,
    alpha: f64,
    params: &PhaseParams,
) -> Result<Complex64> {
    let c0 = coefficients(model, x0, alpha, params, None)?;
    let j = argmax(&c0);
    let cy = coefficients(model, y, alpha, params, None)?;
    for c in [c0[j], cy[j]] {
        if !(c.norm() >= params.abs_floor) || c.norm() == 0.0 {
            return Err(Error::LowSignal { magnitude: c.norm(), floor: params.abs_floor });
        }
    }
    Ok(ratio(c0[j], cy[j]))
}

/// `(a/|a|) / (b/|b|)`, exactly 1 when `a == b`.
fn ratio(a: Complex64, b: Complex64) -> Complex64 {
    unit(a * b.conj())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseMeasure {
    pub alpha: f64,
    pub reference: PhaseSample,
    /// `p_alpha(x0, y_i)` with each sample's own quality flag.
    pub samples: Vec<PhaseSample>,
    pub bins_log2: u32,
    /// Histogram of the good samples on `[0, 2 pi)`.
    pub histogram: Vec<f64>,
}

impl PhaseMeasure {
    fn assemble(alpha: f64, reference: PhaseSample, samples: Vec<PhaseSample>, bins_log2: u32) -> Self {
        let histogram = histogram(&good_angles(&samples), bins_log2);
        PhaseMeasure { alpha, reference, samples, bins_log2, histogram }
    }

    pub fn good(&self) -> impl Iterator<Item = &PhaseSample> {
        self.samples.iter().filter(|s| s.good)
    }

    pub fn angles(&self) -> Vec<f64> {
        good_angles(&self.samples)
    }

    pub fn low_signal_count(&self) -> usize {
        self.samples.iter().filter(|s| !s.good).count()
    }

    /// Rotates every sample by `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        let r = Complex64::from_polar(1.0, angle);
        let samples = self.samples.iter().map(|s| PhaseSample { value: s.value * r, ..*s }).collect();
        Self::assemble(self.alpha, self.reference, samples, self.bins_log2)
    }

    pub fn write_samples_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "point_seed,re,im,magnitude,quality")?;
        for s in &self.samples {
            let seed = s.point_seed.map(|v| v.to_string()).unwrap_or_default();
            let q = if s.good { "good" } else { "low" };
            writeln!(w, "{seed},{:.17e},{:.17e},{:.17e},{q}", s.value.re, s.value.im, s.magnitude)?;
        }
        Ok(())
    }

    pub fn write_histogram_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_center,mass")?;
        let n = self.histogram.len();
        for (i, m) in self.histogram.iter().enumerate() {
            writeln!(w, "{:.17e},{:.17e}", (i as f64 + 0.5) * TAU / n as f64, m)?;
        }
        Ok(())
    }
}

fn good_angles(samples: &[PhaseSample]) -> Vec<f64> {
    samples.iter().filter(|s| s.good).map(|s| s.angle()).collect()
}

/// Normalized histogram of angles in `[0, 2 pi)` with `2^bins_log2` bins.
pub fn histogram(angles: &[f64], bins_log2: u32) -> Vec<f64> {
    let n = 1usize << bins_log2;
    let mut h = vec![0.0; n];
    if angles.is_empty() {
        return h;
    }
    for &a in angles {
        let i = ((a.rem_euclid(TAU) / TAU) * n as f64).floor() as usize;
        h[i.min(n - 1)] += 1.0;
    }
    let total = angles.len() as f64;
    h.iter_mut().for_each(|v| *v /= total);
    h
}

/// Points with enough digits for orbits up to `t_end`, distortion included.
fn phase_points(model: &DigitModel, n: usize, t_end: f64, seed: u64) -> Vec<PointSpec> {
    let digits = digits_needed(model.base(), t_end) + 2 * GUARD_DIGITS;
    (0..n as u64)
        .map(|i| PointSpec::sample_indexed(model, digits, seed, rng::STREAM_POINTS, i))
        .collect()
}

/// Digits the reference point should carry for these parameters.
pub fn reference_digits(model: &DigitModel, params: &PhaseParams) -> usize {
    digits_needed(model.base(), params.scan.t_end()) + 2 * GUARD_DIGITS
}

pub fn reference_point(model: &DigitModel, params: &PhaseParams, seed: u64) -> PointSpec {
    PointSpec::sample_indexed(model, reference_digits(model, params), seed, rng::STREAM_REFERENCE, 0)
}

struct Reference {
    sample: PhaseSample,
    coefficient: Complex64,
}

fn reference(model: &DigitModel, x0: &PointSpec, alpha: f64, params: &PhaseParams) -> Result<Reference> {
    let c0 = coefficients(model, x0, alpha, params, None)?;
    let j = argmax(&c0);
    let sample = sample_from(c0[j], j, alpha, x0.seed(), params.abs_floor);
    if !sample.good {
        return Err(Error::LowSignal { magnitude: sample.magnitude, floor: params.abs_floor });
    }
    Ok(Reference { sample, coefficient: c0[j] })
}

/// Builds samples `p = c0 * conj(c)` from raw coefficients, marking those below
/// `max(abs_floor, rel_floor * median magnitude)` as low-signal.
fn relative_samples(
    reference: &Reference,
    raw: &[(Option<u64>, Complex64)],
    params: &PhaseParams,
    rotate: Option<&[f64]>,
) -> Result<Vec<PhaseSample>> {
    let mut mags: Vec<f64> = raw.iter().map(|(_, c)| c.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let median = if mags.is_empty() { 0.0 } else { mags[mags.len() / 2] };
    let floor = params.abs_floor.max(params.rel_floor * median);
    let j = reference.sample.functional;
    let alpha = reference.sample.alpha;
    let samples: Vec<PhaseSample> = raw
        .iter()
        .enumerate()
        .map(|(i, &(seed, c))| {
            let mut s = sample_from(c, j, alpha, seed, floor);
            s.value = ratio(reference.coefficient, c);
            if !(c.norm() > 0.0) {
                s.value = Complex64::new(1.0, 0.0);
            }
            if let Some(angles) = rotate {
                s.value *= Complex64::from_polar(1.0, angles[i]);
            }
            s
        })
        .collect();
    let low = samples.iter().filter(|s| !s.good).count();
    if low as f64 > params.max_low_fraction * samples.len() as f64 {
        return Err(Error::LowSignalFraction { low, total: samples.len() });
    }
    Ok(samples)
}

/// Samples `p_alpha(x0, y_i)` for `y_i` drawn from the model.
pub fn phase_measure(
    model: &DigitModel,
    x0: &PointSpec,
    n_points: usize,
    alpha: f64,
    params: &PhaseParams,
    seed: u64,
) -> Result<PhaseMeasure> {
    if n_points == 0 {
        return domain("need at least one point");
    }
    let r = reference(model, x0, alpha, params)?;
    let j = r.sample.functional;
    let points = phase_points(model, n_points, params.scan.t_end(), seed);
    let raw = par_map_points(&points, |p| coefficients(model, p, alpha, params, None).map(|c| (p.seed(), c[j])))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let samples = relative_samples(&r, &raw, params, None)?;
    Ok(PhaseMeasure::assemble(alpha, r.sample, samples, params.bins_log2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Circular mean angle of the mode's samples.
    pub center: f64,
    pub mass: f64,
    pub resultant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularStats {
    pub resultant_length: f64,
    pub circular_variance: f64,
    pub mean_angle: f64,
    pub n_modes: usize,
    pub modes: Vec<Mode>,
}

/// Fewest good samples for circular statistics.
pub const MIN_SAMPLES: usize = 30;

pub fn circular_stats(pm: &PhaseMeasure) -> Result<CircularStats> {
    circular_stats_of(&pm.angles(), pm.bins_log2)
}

/// Resultant length, variance and histogram modes: circular runs of bins whose
/// mass exceeds three times the uniform level.
pub fn circular_stats_of(angles: &[f64], bins_log2: u32) -> Result<CircularStats> {
    if angles.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!("{} samples, need {MIN_SAMPLES}", angles.len())));
    }
    let mean = resultant(angles);
    let r = mean.norm();
    let h = histogram(angles, bins_log2);
    let n = h.len();
    let hot: Vec<bool> = h.iter().map(|&m| m > 3.0 / n as f64).collect();
    let mut modes = Vec::new();
    if hot.iter().all(|&b| b) {
        modes.push(mode_of(angles, &(0..n).collect::<Vec<_>>(), n));
    } else if hot.iter().any(|&b| b) {
        // start scanning just after a cold bin so runs do not wrap mid-way
        let start = (0..n).find(|&i| !hot[i]).unwrap();
        let mut run: Vec<usize> = Vec::new();
        for k in 1..=n {
            let i = (start + k) % n;
            if hot[i] {
                run.push(i);
            } else if !run.is_empty() {
                modes.push(mode_of(angles, &run, n));
                run.clear();
            }
        }
        if !run.is_empty() {
            modes.push(mode_of(angles, &run, n));
        }
    }
    Ok(CircularStats {
        resultant_length: r,
        circular_variance: 1.0 - r,
        mean_angle: mean.arg().rem_euclid(TAU),
        n_modes: modes.len(),
        modes,
    })
}

fn bin_of(a: f64, n: usize) -> usize {
    (((a.rem_euclid(TAU)) / TAU * n as f64).floor() as usize).min(n - 1)
}

fn mode_of(angles: &[f64], bins: &[usize], n: usize) -> Mode {
    let members: Vec<f64> = angles.iter().copied().filter(|&a| bins.contains(&bin_of(a, n))).collect();
    let m = resultant(&members);
    Mode {
        center: m.arg().rem_euclid(TAU),
        mass: members.len() as f64 / angles.len() as f64,
        resultant: m.norm(),
    }
}

/// Mean of `e^{i a}`.
pub fn resultant(angles: &[f64]) -> Complex64 {
    if angles.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let s: Complex64 = angles.iter().map(|&a| Complex64::from_polar(1.0, a)).sum();
    s / angles.len() as f64
}

/// Resultant length of `n` uniform angles drawn from `seed`.
pub fn null_resultant(n: usize, seed: u64) -> f64 {
    let mut r = rng::stream_rng(seed, rng::STREAM_NULL, n as u64);
    let angles: Vec<f64> = (0..n).map(|_| r.gen::<f64>() * TAU).collect();
    resultant(&angles).norm()
}

/// `sum_bins min(h_i, 1/n)` at resolutions `2^h` for `h` in `levels`: stays
/// near 1 for Lebesgue-like phase measures and decays for singular ones.
pub fn uniform_overlap_profile(angles: &[f64], levels: std::ops::RangeInclusive<u32>) -> Vec<(u32, f64)> {
    levels
        .map(|h| {
            let hist = histogram(angles, h);
            let u = 1.0 / hist.len() as f64;
            (h, hist.iter().map(|&m| m.min(u)).sum())
        })
        .collect()
}

/// Circular W1 between two angle samples, in radians, for a fixed rotation of `b`.
fn circular_w1_at(a: &[f64], b: &[f64], rot: f64) -> f64 {
    // work in turns on [0, 1)
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(a.len() + b.len());
    let wa = 1.0 / a.len() as f64;
    let wb = 1.0 / b.len() as f64;
    for &x in a {
        events.push(((x / TAU).rem_euclid(1.0), wa));
    }
    for &y in b {
        events.push((((y + rot) / TAU).rem_euclid(1.0), -wb));
    }
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    // D is constant between consecutive events; D on [0, first) is 0
    let mut segs: Vec<(f64, f64)> = Vec::with_capacity(events.len() + 1);
    let mut d = 0.0;
    let mut prev = 0.0;
    for &(x, w) in &events {
        if x > prev {
            segs.push((d, x - prev));
        }
        d += w;
        prev = x;
    }
    if prev < 1.0 {
        segs.push((d, 1.0 - prev));
    }
    // weighted median of D minimizes the integral of |D - c|
    let mut sorted = segs.clone();
    sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut acc = 0.0;
    let mut c = sorted.last().map(|s| s.0).unwrap_or(0.0);
    for &(v, len) in &sorted {
        acc += len;
        if acc >= 0.5 {
            c = v;
            break;
        }
    }
    TAU * segs.iter().map(|&(v, len)| (v - c).abs() * len).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedDistance {
    /// Circular W1 in radians after the best rotation.
    pub distance: f64,
    /// Rotation applied to the second sample, in radians.
    pub rotation: f64,
}

const ROTATION_GRID: usize = 512;

/// Circular W1 (radians) minimized over rotations of `b`: a 512-point grid
/// search refined by golden-section search.
pub fn circular_w1_aligned(a: &[f64], b: &[f64]) -> Result<AlignedDistance> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("empty phase sample".into()));
    }
    let step = TAU / ROTATION_GRID as f64;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..ROTATION_GRID {
        let rot = k as f64 * step;
        let d = circular_w1_at(a, b, rot);
        if d < best.0 {
            best = (d, rot);
        }
    }
    let (mut lo, mut hi) = (best.1 - step, best.1 + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = circular_w1_at(a, b, x1);
    let mut f2 = circular_w1_at(a, b, x2);
    for _ in 0..60 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = circular_w1_at(a, b, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = circular_w1_at(a, b, x2);
        }
    }
    let (d, rot) = if f1 <= f2 { (f1, x1) } else { (f2, x2) };
    let (distance, rotation) = if d < best.0 { (d, rot) } else { best };
    Ok(AlignedDistance { distance, rotation: rotation.rem_euclid(TAU) })
}

/// Circular W1 in radians without rotation.
pub fn circular_w1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("empty phase sample".into()));
    }
    Ok(circular_w1_at(a, b, 0.0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PushforwardPhase {
    pub measured: PhaseMeasure,
    pub predicted: PhaseMeasure,
    /// The phase measure of the undistorted model at the same points.
    pub original: PhaseMeasure,
    pub aligned: AlignedDistance,
}

/// Phase measure of `f mu` at the points `f(y_i)` against the prediction
/// `e(-alpha log f'(y_i)) p_alpha(x0, y_i)`; both use `mu`'s reference at `x0`.
pub fn pushforward_phase_check(
    model: &DigitModel,
    x0: &PointSpec,
    f: &DiffeoSpec,
    alpha: f64,
    n_points: usize,
    params: &PhaseParams,
    seed: u64,
) -> Result<PushforwardPhase> {
    f.validate()?;
    if !f.is_increasing() {
        return Err(Error::Diffeo("phase law needs an increasing map".into()));
    }
    let r = reference(model, x0, alpha, params)?;
    let j = r.sample.functional;
    let max_shift = (0..=64)
        .map(|i| f.derivative(i as f64 / 64.0).ln().abs())
        .fold(0.0, f64::max);
    let points = phase_points(model, n_points, params.scan.t_end() + max_shift + 1.0, seed);
    let both = par_map_points(&points, |p| -> Result<(Complex64, Complex64, f64)> {
        let plain = coefficients(model, p, alpha, params, None)?[j];
        let pushed = coefficients(model, p, alpha, params, Some(f))?[j];
        Ok((plain, pushed, f.derivative(p.x()).ln()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let plain: Vec<(Option<u64>, Complex64)> = points.iter().zip(&both).map(|(p, b)| (p.seed(), b.0)).collect();
    let pushed: Vec<(Option<u64>, Complex64)> = points.iter().zip(&both).map(|(p, b)| (p.seed(), b.1)).collect();
    let turns: Vec<f64> = both.iter().map(|b| -TAU * alpha * b.2).collect();
    let original = relative_samples(&r, &plain, params, None)?;
    let predicted = relative_samples(&r, &plain, params, Some(&turns))?;
    let measured = relative_samples(&r, &pushed, params, None)?;
    let original = PhaseMeasure::assemble(alpha, r.sample, original, params.bins_log2);
    let predicted = PhaseMeasure::assemble(alpha, r.sample, predicted, params.bins_log2);
    let measured = PhaseMeasure::assemble(alpha, r.sample, measured, params.bins_log2);
    let aligned = circular_w1_aligned(&predicted.angles(), &measured.angles())?;
    Ok(PushforwardPhase { measured, predicted, original, aligned })
}

/// Phases of the mixture `(mu + f mu) / 2`, each sample read from the scenery
/// of the component it was drawn from: `p(x0, y)` for `mu` at `y`, and the
/// phase of `f mu` at `f(y)` otherwise. Components alternate by index.
pub fn mixture_phase_measure(
    model: &DigitModel,
    x0: &PointSpec,
    f: &DiffeoSpec,
    alpha: f64,
    n_points: usize,
    params: &PhaseParams,
    seed: u64,
) -> Result<PhaseMeasure> {
    f.validate()?;
    let r = reference(model, x0, alpha, params)?;
    let j = r.sample.functional;
    let max_shift = (0..=64)
        .map(|i| f.derivative(i as f64 / 64.0).ln().abs())
        .fold(0.0, f64::max);
    let points = phase_points(model, n_points, params.scan.t_end() + max_shift + 1.0, seed);
    let indexed: Vec<(usize, &PointSpec)> = points.iter().enumerate().collect();
    use rayon::prelude::*;
    let raw = indexed
        .par_iter()
        .map(|&(i, p)| {
            let d = if i % 2 == 0 { None } else { Some(f) };
            coefficients(model, p, alpha, params, d).map(|c| (p.seed(), c[j]))
        })
        .collect::<Result<Vec<_>>>()?;
    let samples = relative_samples(&r, &raw, params, None)?;
    Ok(PhaseMeasure::assemble(alpha, r.sample, samples, params.bins_log2))
}

/// `log u` recovered from a rotation `theta = -2 pi alpha log u`, modulo `1 / alpha`.
pub fn recover_log_slope(theta: f64, alpha: f64) -> f64 {
    let period = 1.0 / alpha;
    (-theta / (TAU * alpha)).rem_euclid(period)
}

/// Distance between `a` and `b` on the circle `R / period Z`.
pub fn circular_gap(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Rotation taking `from` to `to` by their circular means, in `(-pi, pi]`.
pub fn mean_rotation(from: &[f64], to: &[f64]) -> f64 {
    let z = resultant(to) * resultant(from).conj();
    z.arg()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom_stats() {
        let angles = vec![1.0; 50];
        let s = circular_stats_of(&angles, 5).unwrap();
        assert!((s.resultant_length - 1.0).abs() < 1e-12);
        assert_eq!(s.n_modes, 1);
    }

    #[test]
    fn roots_of_unity_stats() {
        for m in 2..=5usize {
            let angles: Vec<f64> = (0..60 * m).map(|i| 0.1 + TAU * (i % m) as f64 / m as f64).collect();
            let s = circular_stats_of(&angles, 5).unwrap();
            assert!(s.resultant_length < 1e-12);
            assert_eq!(s.n_modes, m);
        }
    }

    #[test]
    fn mode_wrapping_zero() {
        let angles: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 0.01 } else { TAU - 0.01 }).collect();
        let s = circular_stats_of(&angles, 5).unwrap();
        assert_eq!(s.n_modes, 1);
        assert!(s.modes[0].resultant > 0.99);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(circular_stats_of(&[0.0; 10], 5), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn w1_of_rotated_atoms() {
        let a = vec![0.5; 10];
        let b = vec![1.5; 10];
        assert!((circular_w1(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let al = circular_w1_aligned(&a, &b).unwrap();
        assert!(al.distance < 1e-9);
        assert!(circular_gap(al.rotation, TAU - 1.0, TAU) < 1e-6);
    }

    #[test]
    fn w1_wraps_the_short_way() {
        let a = vec![0.1; 4];
        let b = vec![TAU - 0.1; 4];
        assert!((circular_w1(&a, &b).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn slope_recovery_roundtrip() {
        let alpha = 1.0 / 3f64.ln();
        for u in [1.0f64, 2.0, 3.0, 6.0] {
            let theta = (-TAU * alpha * u.ln()).rem_euclid(TAU);
            let got = recover_log_slope(theta, alpha);
            assert!(circular_gap(got, u.ln(), 3f64.ln()) < 1e-12);
        }
    }

    #[test]
    fn reciprocal_ratio() {
        let a = Complex64::new(0.3, -0.7);
        let b = Complex64::new(-1.2, 0.4);
        assert!((ratio(a, b) * ratio(b, a) - 1.0).norm() < 1e-15);
        assert_eq!(ratio(a, a), Complex64::new(1.0, 0.0));
    }
}
