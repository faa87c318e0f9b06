//! Multiscale overlap of two (possibly pushed-forward) invariant measures on a
//! common dyadic window, and a local-dimension probe for self-convolutions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chart::cdf_depth;
use crate::diffeo::DiffeoSpec;
use crate::digits::DigitModel;
use crate::error::{domain, Error, Result};
use crate::grid::{least_squares, neumaier_sum, GridMeasure};
use crate::point::PointSpec;
use crate::rng;

/// Deepest dyadic level an overlap profile may use.
pub const MAX_DEPTH: u32 = 24;

/// `f mu`, or `mu` itself when `f` is absent.
#[derive(Debug, Clone, Copy)]
pub struct Source<'a> {
    pub model: &'a DigitModel,
    pub map: Option<&'a DiffeoSpec>,
}

impl<'a> Source<'a> {
    pub fn plain(model: &'a DigitModel) -> Self {
        Source { model, map: None }
    }

    pub fn mapped(model: &'a DigitModel, f: &'a DiffeoSpec) -> Self {
        Source { model, map: Some(f) }
    }

    /// Image of `[0, 1]`.
    pub fn support(&self) -> Result<(f64, f64)> {
        match self.map {
            None => Ok((0.0, 1.0)),
            Some(f) => {
                f.validate()?;
                let (lo, hi) = f.domain();
                if lo > 0.0 || hi < 1.0 {
                    return Err(Error::Diffeo("map must be defined on [0, 1]".into()));
                }
                let (a, b) = (f.eval(0.0), f.eval(1.0));
                Ok((a.min(b), a.max(b)))
            }
        }
    }

    /// `(f mu)((-inf, y])`.
    fn cdf(&self, y: f64) -> f64 {
        let d = cdf_depth(self.model.base());
        match self.map {
            None => self.model.cdf(y.clamp(0.0, 1.0), d),
            Some(f) => {
                let (a, b) = (f.eval(0.0), f.eval(1.0));
                if f.is_increasing() {
                    if y <= a {
                        0.0
                    } else if y >= b {
                        1.0
                    } else {
                        self.model.cdf(f.inverse(y).clamp(0.0, 1.0), d)
                    }
                } else if y <= b {
                    0.0
                } else if y >= a {
                    1.0
                } else {
                    1.0 - self.model.cdf(f.inverse(y).clamp(0.0, 1.0), d)
                }
            }
        }
    }

    /// Masses of the `2^depth` equal cells of `[lo, lo + len)`.
    fn cell_masses(&self, lo: f64, len: f64, depth: u32) -> Vec<f64> {
        let n = 1usize << depth;
        let cdf: Vec<f64> = (0..=n).map(|k| self.cdf(lo + len * k as f64 / n as f64)).collect();
        cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
    }
}

/// Smallest window `[lo, lo + 2^p)` with integer `lo` containing both supports.
pub fn common_window(a: &Source<'_>, b: &Source<'_>) -> Result<(f64, f64)> {
    let (a0, a1) = a.support()?;
    let (b0, b1) = b.support()?;
    let lo = a0.min(b0).floor();
    let span = a1.max(b1) - lo;
    let mut len = 1.0;
    while len < span {
        len *= 2.0;
    }
    Ok((lo, len))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    EquivalentLike,
    SingularLike,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictRule {
    pub equivalent_floor: f64,
    pub singular_final: f64,
    pub min_r2: f64,
}

impl Default for VerdictRule {
    fn default() -> Self {
        VerdictRule { equivalent_floor: 0.9, singular_final: 0.2, min_r2: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub depths: Vec<u32>,
    pub overlaps: Vec<f64>,
    /// `c` in `log overlap ~ -c depth`.
    pub decay_rate: f64,
    pub r2: f64,
    pub verdict: Verdict,
    pub window: (f64, f64),
}

impl SingularityReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.overlaps.windows(2).all(|w| w[1] < w[0])
    }

    pub fn final_overlap(&self) -> f64 {
        *self.overlaps.last().unwrap_or(&f64::NAN)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "depth,overlap")?;
        for (d, o) in self.depths.iter().zip(&self.overlaps) {
            writeln!(w, "{d},{o:.17e}")?;
        }
        Ok(())
    }
}

/// `sum min(a_i, b_i) / max(sum a, sum b)`; exactly 1 for identical inputs.
fn normalized_overlap(a: &[f64], b: &[f64]) -> f64 {
    let num = neumaier_sum(a.iter().zip(b).map(|(x, y)| x.min(*y)));
    let den = neumaier_sum(a.iter().copied()).max(neumaier_sum(b.iter().copied()));
    if den > 0.0 {
        (num / den).min(1.0)
    } else {
        0.0
    }
}

fn coarsen(m: &[f64]) -> Vec<f64> {
    m.chunks(2).map(|c| c[0] + c[1]).collect()
}

/// Overlap at each dyadic depth of the window (by default the common window).
pub fn overlap_profile(
    a: &Source<'_>,
    b: &Source<'_>,
    depths: &[u32],
    window: Option<(f64, f64)>,
    rule: VerdictRule,
) -> Result<SingularityReport> {
    if depths.len() < 2 {
        return domain("need at least two depths");
    }
    let max = *depths.iter().max().unwrap();
    if max > MAX_DEPTH {
        return Err(Error::Resolution(format!("depth {max} exceeds {MAX_DEPTH}")));
    }
    let (lo, len) = match window {
        Some(w) => w,
        None => common_window(a, b)?,
    };
    if !(len > 0.0) {
        return domain("window must have positive length");
    }
    let (ma, mb) = rayon::join(|| a.cell_masses(lo, len, max), || b.cell_masses(lo, len, max));
    let mut levels = vec![(ma, mb)];
    for _ in 0..max {
        let (x, y) = levels.last().unwrap();
        let next = (coarsen(x), coarsen(y));
        levels.push(next);
    }
    let overlaps: Vec<f64> = depths
        .iter()
        .map(|&d| {
            let (x, y) = &levels[(max - d) as usize];
            normalized_overlap(x, y)
        })
        .collect();
    let xs: Vec<f64> = depths.iter().map(|&d| d as f64).collect();
    let ys: Vec<f64> = overlaps.iter().map(|&o| o.max(1e-300).ln()).collect();
    let (slope, rms) = least_squares(&xs, &ys);
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let tss = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / ys.len() as f64;
    let r2 = if tss > 0.0 { 1.0 - rms * rms / tss } else { 0.0 };
    let decay_rate = if slope.is_finite() { -slope } else { 0.0 };
    let verdict = if overlaps.iter().all(|&o| o >= rule.equivalent_floor) {
        Verdict::EquivalentLike
    } else if decay_rate > 0.0 && r2 >= rule.min_r2 && *overlaps.last().unwrap() < rule.singular_final {
        Verdict::SingularLike
    } else {
        Verdict::Inconclusive
    };
    Ok(SingularityReport { depths: depths.to_vec(), overlaps, decay_rate, r2, verdict, window: (lo, len) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionProbe {
    pub d: u32,
    /// Mean of the per-point slopes.
    pub slope: f64,
    pub per_point: Vec<f64>,
}

/// Local dimension of the `d`-fold self-convolution of the model measure, at
/// points `x_1 + ... + x_d` with `x_i` drawn from the model, over radii `b^-n`.
pub fn convolution_dimension_probe(
    model: &DigitModel,
    d: u32,
    grid_depth: u32,
    radii_depths: &[u32],
    n_points: usize,
    seed: u64,
) -> Result<ConvolutionProbe> {
    if d == 0 {
        return domain("need d >= 1");
    }
    if radii_depths.len() < 2 || radii_depths.iter().any(|&n| n + 2 > grid_depth) {
        return domain("radii must be at least two levels coarser than the grid");
    }
    let cells = (model.base() as u64).checked_pow(grid_depth).map(|c| c.saturating_mul(d as u64));
    if cells.map_or(true, |c| c > 1 << 24) {
        return Err(Error::Resolution(format!("{d}-fold convolution at depth {grid_depth} is too large")));
    }
    let base = GridMeasure::from_model(model, grid_depth)?;
    let mut conv = base.clone();
    for _ in 1..d {
        conv = conv.convolve(&base)?;
    }
    let lnb = model.ln_base();
    let digits = grid_depth as usize + 20;
    let per_point: Vec<f64> = (0..n_points as u64)
        .map(|i| {
            let x: f64 = (0..d as u64)
                .map(|j| PointSpec::sample_indexed(model, digits, seed, rng::STREAM_AUX, i * d as u64 + j).x())
                .sum();
            let xs: Vec<f64> = radii_depths.iter().map(|&n| -(n as f64) * lnb).collect();
            let ys: Vec<f64> = radii_depths
                .iter()
                .map(|&n| {
                    let r = (-(n as f64) * lnb).exp();
                    conv.mass_between(x - r, x + r).max(1e-300).ln()
                })
                .collect();
            least_squares(&xs, &ys).0
        })
        .collect();
    let slope = per_point.iter().sum::<f64>() / per_point.len().max(1) as f64;
    Ok(ConvolutionProbe { d, slope, per_point })
}
