//! Finite-resolution measures on an interval: nonnegative masses over a uniform
//! partition, with mass spread uniformly inside each cell.

use std::io::{Read, Write};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::chart::{ln_mass_from, Chart};
use crate::diffeo::DiffeoSpec;
use crate::digits::DigitModel;
use crate::error::{domain, Error, Result};
use crate::point::PointSpec;

/// Relative tolerance on unit-mass checks.
pub const MASS_TOL: f64 = 1e-9;
const MIN_WIDTH: f64 = 1e-15;
const DIRECT_CONVOLUTION_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    base: usize,
    lo: f64,
    hi: f64,
    masses: Vec<f64>,
}

/// Source measure for a pushforward.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Model(&'a DigitModel),
    Grid(&'a GridMeasure),
}

/// Direction in which a map is applied.
#[derive(Debug, Clone, Copy)]
pub enum Mapping<'a> {
    Forward(&'a DiffeoSpec),
    Inverse(&'a DiffeoSpec),
}

impl GridMeasure {
    pub fn new(base: usize, lo: f64, hi: f64, masses: Vec<f64>) -> Result<Self> {
        if base < 2 {
            return domain(format!("base {base} < 2"));
        }
        if masses.is_empty() {
            return domain("grid measure needs at least one cell");
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return domain(format!("bad support [{lo}, {hi}]"));
        }
        let width = (hi - lo) / masses.len() as f64;
        if !(width > MIN_WIDTH) {
            return Err(Error::Resolution(format!("cell width {width:e} below 1e-15")));
        }
        if masses.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return domain("masses must be finite and nonnegative");
        }
        Ok(GridMeasure { base, lo, hi, masses })
    }

    pub(crate) fn from_parts_unchecked(base: usize, lo: f64, hi: f64, masses: Vec<f64>) -> Self {
        GridMeasure { base, lo, hi, masses }
    }

    /// Uniform measure of the given total on `base^depth` cells of `[lo, hi)`.
    pub fn uniform(base: usize, depth: u32, lo: f64, hi: f64, total: f64) -> Result<Self> {
        let n = checked_cells(base, depth)?;
        Self::new(base, lo, hi, vec![total / n as f64; n])
    }

    /// Unit mass on the single cell containing `z`.
    pub fn cell_atom(base: usize, depth: u32, lo: f64, hi: f64, z: f64) -> Result<Self> {
        let n = checked_cells(base, depth)?;
        if !(z >= lo && z < hi) {
            return domain(format!("{z} outside [{lo}, {hi})"));
        }
        let mut masses = vec![0.0; n];
        let k = (((z - lo) / (hi - lo)) * n as f64).floor() as usize;
        masses[k.min(n - 1)] = 1.0;
        Self::new(base, lo, hi, masses)
    }

    /// Cell masses of a digit model on `base^depth` cells of `[0, 1]`.
    pub fn from_model(model: &DigitModel, depth: u32) -> Result<Self> {
        let n = checked_cells(model.base(), depth)?;
        let cdf: Vec<f64> = (0..=n as u64).map(|k| model.cdf_b_adic(k, depth)).collect();
        let masses = cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
        Self::new(model.base(), 0.0, 1.0, masses)
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn cell_width(&self) -> f64 {
        (self.hi - self.lo) / self.masses.len() as f64
    }

    /// `Some(k)` when the cell count is `base^k`.
    pub fn depth(&self) -> Option<u32> {
        let mut n = 1usize;
        for k in 0..64u32 {
            if n == self.masses.len() {
                return Some(k);
            }
            n = n.checked_mul(self.base)?;
        }
        None
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.masses.iter().copied())
    }

    pub fn cell_bounds(&self, k: usize) -> (f64, f64) {
        let n = self.masses.len() as f64;
        let a = self.lo + (self.hi - self.lo) * k as f64 / n;
        let b = self.lo + (self.hi - self.lo) * (k + 1) as f64 / n;
        (a, b)
    }

    fn prefix(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.masses.len() + 1);
        let mut acc = 0.0;
        p.push(0.0);
        for &m in &self.masses {
            acc += m;
            p.push(acc);
        }
        p
    }

    fn cdf_with(&self, prefix: &[f64], x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return prefix[self.masses.len()];
        }
        let n = self.masses.len();
        let pos = (x - self.lo) / (self.hi - self.lo) * n as f64;
        let k = (pos.floor() as usize).min(n - 1);
        prefix[k] + self.masses[k] * (pos - k as f64).clamp(0.0, 1.0)
    }

    /// Mass of `(-inf, x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_with(&self.prefix(), x)
    }

    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let p = self.prefix();
        (self.cdf_with(&p, b) - self.cdf_with(&p, a)).max(0.0)
    }

    /// Masses of `n` equal cells of `[lo, hi)` under this measure.
    pub fn resample(&self, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let p = self.prefix();
        let cdf: Vec<f64> = (0..=n)
            .map(|k| self.cdf_with(&p, lo + (hi - lo) * k as f64 / n as f64))
            .collect();
        cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
    }

    /// `S_t U_x`: translate by `-shift`, then scale by `e^log_scale`.
    pub fn affine_rescale(&self, shift: f64, log_scale: f64) -> Result<Self> {
        let s = log_scale.exp();
        let lo = s * (self.lo - shift);
        let hi = s * (self.hi - shift);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Resolution("rescaled support overflows".into()));
        }
        let width = (hi - lo) / self.masses.len() as f64;
        if !(width > MIN_WIDTH) {
            return Err(Error::Resolution(format!("rescaled cell width {width:e} below 1e-15")));
        }
        Ok(GridMeasure { base: self.base, lo, hi, masses: self.masses.clone() })
    }

    /// Restriction to `[-1, 1]`, normalized to unit mass. Keeps the cell width
    /// when the input partition is aligned with `[-1, 1]`, otherwise keeps the
    /// cell count.
    pub fn restrict_normalize(&self) -> Result<Self> {
        let w = self.cell_width();
        let n = (2.0 / w).round();
        let aligned = n >= 1.0
            && (n * w - 2.0).abs() <= 1e-9
            && {
                let off = (-1.0 - self.lo) / w;
                (off - off.round()).abs() <= 1e-6
            };
        let n = if aligned { n as usize } else { self.masses.len() };
        self.restrict_normalize_to(n)
    }

    pub fn restrict_normalize_to(&self, n: usize) -> Result<Self> {
        let masses = self.resample(-1.0, 1.0, n);
        let total = neumaier_sum(masses.iter().copied());
        if !(total > 0.0) {
            return Err(Error::Normalization("zero mass on [-1, 1]".into()));
        }
        Ok(GridMeasure {
            base: self.base,
            lo: -1.0,
            hi: 1.0,
            masses: masses.into_iter().map(|m| m / total).collect(),
        })
    }

    /// Rescales masses so that `[-1, 1]` carries unit mass, without restricting.
    pub fn star_normalize(&self) -> Result<Self> {
        let m = self.mass_between(-1.0, 1.0);
        if !(m > 0.0) {
            return Err(Error::Normalization("zero mass on [-1, 1]".into()));
        }
        Ok(GridMeasure {
            base: self.base,
            lo: self.lo,
            hi: self.hi,
            masses: self.masses.iter().map(|x| x / m).collect(),
        })
    }

    pub fn is_unit_mass(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= MASS_TOL
    }

    /// Maps the measure through `f` (or `f^{-1}`) onto `n` cells of `[lo, hi)`.
    pub fn pushforward(source: Source<'_>, map: Mapping<'_>, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let f = match map {
            Mapping::Forward(f) | Mapping::Inverse(f) => f,
        };
        f.validate()?;
        let (slo, shi, base) = match source {
            Source::Model(m) => (0.0, 1.0, m.base()),
            Source::Grid(g) => (g.lo, g.hi, g.base),
        };
        let (dlo, dhi) = f.domain();
        let covered = match map {
            Mapping::Forward(_) => dlo <= slo && dhi >= shi,
            Mapping::Inverse(_) => {
                let (a, b) = (f.eval(dlo.max(-1e300)), f.eval(dhi.min(1e300)));
                a.min(b) <= slo && a.max(b) >= shi
            }
        };
        if !covered {
            return Err(Error::Diffeo("map is not defined on the whole support".into()));
        }
        let pull = |y: f64| -> f64 {
            match map {
                Mapping::Forward(f) => f.inverse(y),
                Mapping::Inverse(f) => {
                    let (a, b) = f.domain();
                    f.eval(y.clamp(a, b))
                }
            }
        };
        let src_cdf: Box<dyn Fn(f64) -> f64> = match source {
            Source::Model(m) => {
                let d = crate::chart::cdf_depth(m.base());
                Box::new(move |x: f64| m.cdf(x.clamp(0.0, 1.0), d))
            }
            Source::Grid(g) => {
                let p = g.prefix();
                Box::new(move |x: f64| g.cdf_with(&p, x))
            }
        };
        let increasing = match map {
            Mapping::Forward(f) | Mapping::Inverse(f) => f.is_increasing(),
        };
        let cdf: Vec<f64> = (0..=n)
            .map(|k| src_cdf(pull(lo + (hi - lo) * k as f64 / n as f64)))
            .collect();
        let masses = cdf
            .windows(2)
            .map(|w| if increasing { w[1] - w[0] } else { w[0] - w[1] }.max(0.0))
            .collect();
        Self::new(base, lo, hi, masses)
    }

    /// Convolution with cell masses treated as atoms at cell centers. The result
    /// lives on `n1 + n2 - 1` cells starting at `lo1 + lo2 + w/2`.
    pub fn convolve(&self, other: &GridMeasure) -> Result<Self> {
        let w1 = self.cell_width();
        let w2 = other.cell_width();
        if ((w1 - w2) / w1).abs() > 1e-9 {
            return domain(format!("cell widths differ: {w1} vs {w2}"));
        }
        let n = self.masses.len() + other.masses.len() - 1;
        let lo = self.lo + other.lo + 0.5 * w1;
        let hi = lo + n as f64 * w1;
        if !hi.is_finite() {
            return Err(Error::Resolution("convolution support overflows".into()));
        }
        let masses = if self.masses.len().saturating_mul(other.masses.len()) <= DIRECT_CONVOLUTION_LIMIT {
            direct_convolution(&self.masses, &other.masses)
        } else {
            fft_convolution(&self.masses, &other.masses)
        };
        Self::new(self.base, lo, hi, masses)
    }

    /// Writes `cell_lo,cell_hi,mass` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cell_lo,cell_hi,mass")?;
        for k in 0..self.masses.len() {
            let (a, b) = self.cell_bounds(k);
            writeln!(w, "{a:?},{b:?},{:?}", self.masses[k])?;
        }
        Ok(())
    }

    /// Binary dump: base (u32), depth (u32, `u32::MAX` when the cell count is not
    /// a power of the base), lo and hi (f64), cell count (u64), then masses; all
    /// little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.base as u32).to_le_bytes())?;
        w.write_all(&self.depth().unwrap_or(u32::MAX).to_le_bytes())?;
        w.write_all(&self.lo.to_le_bytes())?;
        w.write_all(&self.hi.to_le_bytes())?;
        w.write_all(&(self.masses.len() as u64).to_le_bytes())?;
        for m in &self.masses {
            w.write_all(&m.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let base = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let depth = u32::from_le_bytes(b4);
        r.read_exact(&mut b8)?;
        let lo = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let hi = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let mut masses = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8)?;
            masses.push(f64::from_le_bytes(b8));
        }
        let g = Self::new(base, lo, hi, masses)?;
        if depth != u32::MAX && g.depth() != Some(depth) {
            return domain("binary header depth does not match cell count");
        }
        Ok(g)
    }
}

fn checked_cells(base: usize, depth: u32) -> Result<usize> {
    base.checked_pow(depth)
        .filter(|&n| n <= 1 << 28)
        .ok_or_else(|| Error::Resolution(format!("{base}^{depth} cells is too many")))
}

fn direct_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn fft_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() + b.len() - 1;
    let size = n.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fa.resize(size, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fb.resize(size, Complex::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa[..n].iter().map(|c| (c.re * scale).max(0.0)).collect()
}

pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `W1(a, b) = integral |F_a - F_b|`, exact for cell-uniform measures.
pub fn wasserstein1(a: &GridMeasure, b: &GridMeasure) -> Result<f64> {
    for g in [a, b] {
        if !g.is_unit_mass() {
            return domain(format!("W1 needs unit-mass measures, got total {}", g.total_mass()));
        }
    }
    let pa = a.prefix();
    let pb = b.prefix();
    let edges = merged_edges(a, b);
    let mut total = 0.0;
    let mut prev_x = edges[0];
    let mut prev_d = a.cdf_with(&pa, prev_x) - b.cdf_with(&pb, prev_x);
    for &x in &edges[1..] {
        let d = a.cdf_with(&pa, x) - b.cdf_with(&pb, x);
        let len = x - prev_x;
        if len > 0.0 {
            total += if prev_d * d >= 0.0 {
                0.5 * (prev_d.abs() + d.abs()) * len
            } else {
                0.5 * (prev_d * prev_d + d * d) / (prev_d.abs() + d.abs()) * len
            };
        }
        prev_x = x;
        prev_d = d;
    }
    Ok(total)
}

fn merged_edges(a: &GridMeasure, b: &GridMeasure) -> Vec<f64> {
    let ea: Vec<f64> = (0..=a.len()).map(|k| a.lo + (a.hi - a.lo) * k as f64 / a.len() as f64).collect();
    let eb: Vec<f64> = (0..=b.len()).map(|k| b.lo + (b.hi - b.lo) * k as f64 / b.len() as f64).collect();
    let mut out = Vec::with_capacity(ea.len() + eb.len());
    let (mut i, mut j) = (0, 0);
    while i < ea.len() || j < eb.len() {
        let next = if j >= eb.len() || (i < ea.len() && ea[i] <= eb[j]) {
            i += 1;
            ea[i - 1]
        } else {
            j += 1;
            eb[j - 1]
        };
        if out.last().map_or(true, |&l| next > l) {
            out.push(next);
        }
    }
    out
}

/// `sum_cells min(m1, m2)` on a common partition; the coarser grid is refined
/// by splitting its cells uniformly.
pub fn overlap_statistic(a: &GridMeasure, b: &GridMeasure) -> Result<f64> {
    if (a.lo - b.lo).abs() > 1e-12 || (a.hi - b.hi).abs() > 1e-12 {
        return domain("overlap needs a common support window");
    }
    let (na, nb) = (a.len(), b.len());
    let (fine, coarse) = if na >= nb { (a, b) } else { (b, a) };
    if fine.len() % coarse.len() != 0 {
        return domain(format!("no common refinement of {na} and {nb} cells"));
    }
    let r = fine.len() / coarse.len();
    let s = neumaier_sum(
        fine.masses
            .iter()
            .enumerate()
            .map(|(k, &m)| m.min(coarse.masses[k / r] / r as f64)),
    );
    Ok(s.min(1.0))
}

/// Result of a local-dimension regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDimension {
    pub slope: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub log_radii: Vec<f64>,
    pub log_masses: Vec<f64>,
}

/// Least-squares slope of `log mu(B(x, b^-n))` against `log b^-n` over `depths`.
pub fn local_dimension_estimate(model: &DigitModel, point: &PointSpec, depths: &[usize]) -> Result<LocalDimension> {
    if point.base() != model.base() {
        return domain("point and model bases differ");
    }
    if depths.len() < 2 {
        return domain("need at least two depths");
    }
    let guard = 10;
    let need = depths.iter().max().unwrap() + guard;
    if point.len() < need {
        return Err(Error::InsufficientDigits { needed: need, available: point.len() });
    }
    let lnb = model.ln_base();
    let mut xs = Vec::with_capacity(depths.len());
    let mut ys = Vec::with_capacity(depths.len());
    for &n in depths {
        let word = &point.digits()[..n];
        let ln_w = ln_mass_from(model, None, word);
        if ln_w == f64::NEG_INFINITY {
            return Err(Error::ZeroMass);
        }
        let chart = Chart::new(model, None, word, 2)?;
        let u = point.local_coordinate(n);
        let rel = chart.cum(u + 1.0) - chart.cum(u - 1.0);
        if !(rel > 0.0) {
            return Err(Error::ZeroMass);
        }
        xs.push(-(n as f64) * lnb);
        ys.push(ln_w + rel.ln());
    }
    let (slope, residual) = least_squares(&xs, &ys);
    Ok(LocalDimension { slope, residual, log_radii: xs, log_masses: ys })
}

/// Slope and RMS residual of the least-squares line through `(x, y)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::shipped;
    use proptest::prelude::*;

    fn uniform01(depth: u32) -> GridMeasure {
        GridMeasure::uniform(2, depth, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn rescale_examples() {
        let u = uniform01(4);
        let s = u.affine_rescale(0.5, 0.0).unwrap();
        assert_eq!((s.lo(), s.hi()), (-0.5, 0.5));
        assert_eq!(u.affine_rescale(0.0, 0.0).unwrap(), u);
        let z = u.affine_rescale(0.0, 2f64.ln()).unwrap();
        assert!((z.hi() - 2.0).abs() < 1e-15);
        assert_eq!(z.total_mass(), u.total_mass());
    }

    #[test]
    fn restrict_examples() {
        let u = GridMeasure::uniform(2, 3, -1.0, 1.0, 2.0).unwrap();
        let r = u.restrict_normalize().unwrap();
        assert_eq!(r.len(), 8);
        assert!(r.masses().iter().all(|&m| (m - 0.125).abs() < 1e-15));
        let two = GridMeasure::new(2, 0.0, 2.0, vec![0.0, 0.5, 0.0, 0.5]).unwrap();
        let r = two.restrict_normalize().unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(r.masses(), &[0.0, 0.0, 0.0, 1.0]);
        let out = GridMeasure::new(2, 2.0, 3.0, vec![1.0]).unwrap();
        assert!(matches!(out.restrict_normalize(), Err(Error::Normalization(_))));
    }

    #[test]
    fn w1_examples() {
        let a = GridMeasure::cell_atom(2, 10, -1.0, 1.0, 0.0).unwrap();
        let b = GridMeasure::cell_atom(2, 10, -1.0, 1.0, 0.5).unwrap();
        let w = a.cell_width();
        assert_eq!(wasserstein1(&a, &a).unwrap(), 0.0);
        assert!((wasserstein1(&a, &b).unwrap() - 0.5).abs() <= w);
        let u = GridMeasure::uniform(2, 10, -1.0, 1.0, 1.0).unwrap();
        assert!((wasserstein1(&u, &a).unwrap() - 0.5).abs() <= w);
        let heavy = GridMeasure::uniform(2, 3, -1.0, 1.0, 2.0).unwrap();
        assert!(wasserstein1(&heavy, &u).is_err());
    }

    #[test]
    fn overlap_examples() {
        let c = shipped::cantor();
        let l = shipped::lebesgue(3);
        for m in 1..=6u32 {
            let gc = GridMeasure::from_model(&c, m).unwrap();
            let gl = GridMeasure::from_model(&l, m).unwrap();
            let o = overlap_statistic(&gc, &gl).unwrap();
            assert!((o - (2.0f64 / 3.0).powi(m as i32)).abs() < 1e-12, "m={m}: {o}");
            assert!((overlap_statistic(&gc, &gc).unwrap() - 1.0).abs() < 1e-12);
        }
        let a = GridMeasure::new(2, 0.0, 1.0, vec![1.0, 0.0]).unwrap();
        let b = GridMeasure::new(2, 0.0, 1.0, vec![0.0, 1.0]).unwrap();
        assert_eq!(overlap_statistic(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn pushforward_examples() {
        let leb = shipped::lebesgue(2);
        let shift = DiffeoSpec::affine(1.0, 0.25).unwrap();
        let g = GridMeasure::pushforward(Source::Model(&leb), Mapping::Forward(&shift), 0.25, 1.25, 16).unwrap();
        assert!(g.masses().iter().all(|&m| (m - 1.0 / 16.0).abs() < 1e-12));
        let dbl = DiffeoSpec::affine(2.0, 0.0).unwrap();
        let g = GridMeasure::pushforward(Source::Model(&leb), Mapping::Forward(&dbl), 0.0, 2.0, 16).unwrap();
        assert!(g.masses().iter().all(|&m| (m - 1.0 / 16.0).abs() < 1e-12));
        let sq = DiffeoSpec::polynomial(vec![0.0, 0.0, 1.0], 0.5, 1.0).unwrap();
        assert!(DiffeoSpec::polynomial(vec![0.0, 0.0, 1.0], -0.5, 1.0).is_err());
        let u = GridMeasure::uniform(2, 6, 0.5, 1.0, 1.0).unwrap();
        let g = GridMeasure::pushforward(Source::Grid(&u), Mapping::Forward(&sq), 0.25, 1.0, 32).unwrap();
        for k in 0..32 {
            let (a, b) = g.cell_bounds(k);
            let want = (b.sqrt() - a.sqrt()) / 0.5;
            assert!((g.masses()[k] - want).abs() < 1e-12, "cell {k}");
        }
    }

    #[test]
    fn convolution_examples() {
        let c = GridMeasure::from_model(&shipped::cantor(), 4).unwrap();
        let c2 = GridMeasure::from_model(&shipped::cantor(), 4).unwrap();
        let id = GridMeasure::uniform(3, 0, -0.5 / 81.0, 0.5 / 81.0, 1.0).unwrap();
        let same = c.convolve(&id).unwrap();
        assert!((same.lo() - c.lo()).abs() < 1e-15);
        for (x, y) in same.masses().iter().zip(c.masses()) {
            assert!((x - y).abs() < 1e-15);
        }
        let cc = c.convolve(&c2).unwrap();
        assert!((cc.total_mass() - 1.0).abs() < 1e-12);
        assert!(cc.lo() >= 0.0 && cc.hi() <= 2.0);
        assert!(cc.masses()[0] > 0.0 && *cc.masses().last().unwrap() > 0.0);
        let u = uniform01(5);
        let tri = u.convolve(&u).unwrap();
        let peak = tri.masses().iter().cloned().fold(0.0, f64::max);
        assert_eq!(tri.masses()[31], peak);
        assert!((tri.lo() + tri.cell_width() * 31.5 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fft_matches_direct() {
        let a: Vec<f64> = (0..300).map(|i| ((i * 7919) % 13) as f64 / 13.0).collect();
        let b: Vec<f64> = (0..200).map(|i| ((i * 104729) % 17) as f64 / 17.0).collect();
        let d = direct_convolution(&a, &b);
        let f = fft_convolution(&a, &b);
        for (x, y) in d.iter().zip(&f) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn serialization_roundtrip() {
        let g = GridMeasure::from_model(&shipped::golden_mean(), 5).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 + 8 + 8 + 32 * 8);
        assert_eq!(GridMeasure::read_binary(&buf[..]).unwrap(), g);
        let mut csv = Vec::new();
        g.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 33);
        assert!(text.starts_with("cell_lo,cell_hi,mass\n"));
    }

    #[test]
    fn local_dimension_examples() {
        let leb = shipped::lebesgue(2);
        let p = PointSpec::from_x(0.3, 2, 60).unwrap();
        let depths: Vec<usize> = (10..=40).collect();
        let d = local_dimension_estimate(&leb, &p, &depths).unwrap();
        assert!((d.slope - 1.0).abs() < 0.01, "{}", d.slope);
        let c = shipped::cantor();
        let zero = PointSpec::from_digits(3, vec![0; 60]).unwrap();
        let d = local_dimension_estimate(&c, &zero, &depths).unwrap();
        assert!((d.slope - 2f64.ln() / 3f64.ln()).abs() < 0.01);
        let off = PointSpec::from_digits(3, vec![1; 60]).unwrap();
        assert!(matches!(local_dimension_estimate(&c, &off, &depths), Err(Error::ZeroMass)));
    }

    fn arb_unit_grid() -> impl Strategy<Value = GridMeasure> {
        (prop::collection::vec(0.0f64..1.0, 1..40), -1.0f64..0.0, 0.1f64..1.0).prop_filter_map(
            "positive mass",
            |(m, lo, len)| {
                let t: f64 = m.iter().sum();
                if t <= 1e-6 {
                    return None;
                }
                let hi = (lo + len * (1.0 - lo)).min(1.0).max(lo + 0.05);
                GridMeasure::new(2, lo, hi, m.iter().map(|x| x / t).collect()).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn w1_metric_axioms(a in arb_unit_grid(), b in arb_unit_grid(), c in arb_unit_grid()) {
            let ab = wasserstein1(&a, &b).unwrap();
            let ba = wasserstein1(&b, &a).unwrap();
            let bc = wasserstein1(&b, &c).unwrap();
            let ac = wasserstein1(&a, &c).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-10);
            prop_assert!(ac <= ab + bc + 1e-10);
            prop_assert!(wasserstein1(&a, &a).unwrap() <= 1e-12);
        }

        #[test]
        fn restrict_is_idempotent(a in arb_unit_grid()) {
            let r = a.restrict_normalize().unwrap();
            let rr = r.restrict_normalize().unwrap();
            prop_assert_eq!(r.len(), rr.len());
            for (x, y) in r.masses().iter().zip(rr.masses()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn rescale_group_law(a in arb_unit_grid(), x in -1.0f64..1.0, t in -3.0f64..3.0) {
            let fwd = a.affine_rescale(x, t).unwrap();
            let back = fwd.affine_rescale(-t.exp() * x, -t).unwrap();
            prop_assert!((back.lo() - a.lo()).abs() <= 1e-12);
            prop_assert!((back.hi() - a.hi()).abs() <= 1e-12);
            prop_assert_eq!(back.masses(), a.masses());
        }

        #[test]
        fn convolution_commutes(a in arb_unit_grid(), b in prop::collection::vec(0.0f64..1.0, 1..30)) {
            let w = a.cell_width();
            let t: f64 = b.iter().sum::<f64>().max(1e-9);
            let b = GridMeasure::new(2, 0.3, 0.3 + w * b.len() as f64, b.iter().map(|x| x / t).collect()).unwrap();
            let ab = a.convolve(&b).unwrap();
            let ba = b.convolve(&a).unwrap();
            prop_assert!((ab.lo() - ba.lo()).abs() <= 1e-12);
            for (x, y) in ab.masses().iter().zip(ba.masses()) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
            prop_assert!((ab.total_mass() - a.total_mass() * b.total_mass()).abs() <= 1e-10);
        }

        #[test]
        fn overlap_refinement_monotone(k in 1u32..7, w0 in 0.05f64..0.95, w1 in 0.05f64..0.95) {
            let m1 = DigitModel::bernoulli(2, vec![w0, 1.0 - w0], "a").unwrap();
            let m2 = DigitModel::bernoulli(2, vec![w1, 1.0 - w1], "b").unwrap();
            let o = |d| overlap_statistic(&GridMeasure::from_model(&m1, d).unwrap(), &GridMeasure::from_model(&m2, d).unwrap()).unwrap();
            prop_assert!(o(k + 1) <= o(k) + 1e-12);
        }

        #[test]
        fn pushforward_roundtrip(u in 0.5f64..2.0, v in -0.2f64..0.2) {
            let f = DiffeoSpec::compose(vec![
                DiffeoSpec::polynomial(vec![0.0, 1.0, 0.1], -1.0, 2.0).unwrap(),
                DiffeoSpec::affine(u, v).unwrap(),
            ]).unwrap();
            let src = GridMeasure::from_model(&shipped::golden_mean(), 6).unwrap();
            let (a, b) = (f.eval(0.0), f.eval(1.0));
            let fw = GridMeasure::pushforward(Source::Grid(&src), Mapping::Forward(&f), a, b, 256).unwrap();
            let back = GridMeasure::pushforward(Source::Grid(&fw), Mapping::Inverse(&f), 0.0, 1.0, 64).unwrap();
            let bound = 2.0 * fw.masses().iter().cloned().fold(0.0, f64::max);
            for (x, y) in back.masses().iter().zip(src.masses()) {
                prop_assert!((x - y).abs() <= bound);
            }
        }
    }
}
