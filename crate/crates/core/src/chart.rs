//! Local charts: a digit model seen from one b-adic cell.
//!
//! Deep sceneries cannot be computed in absolute coordinates once the window
//! shrinks below double precision. A chart instead works in units of a level-`m`
//! cell `[w]`: the cell itself is `[0, 1)`, its neighbors are `[j, j + 1)`, and
//! every mass is expressed relative to `mu([w])`. Neighbor masses are ratios
//! computed in log space over the digits where the neighbor word differs from
//! `w`, so nothing underflows however deep the level.

use crate::digits::{DigitModel, State};
use crate::error::{Error, Result};

/// Number of digits the conditional CDF walks before spreading mass uniformly;
/// the smallest `L` with `b^-L < 1e-13`.
pub fn cdf_depth(base: usize) -> usize {
    (13.0 * 10f64.ln() / (base as f64).ln()).ceil() as usize
}

/// `word + j` as a base-`b` numeral of fixed length, or `None` on overflow.
pub(crate) fn add_signed(word: &[u8], base: usize, j: i64) -> Option<Vec<u8>> {
    let mut out = word.to_vec();
    let b = base as i64;
    let mut carry = j;
    for d in out.iter_mut().rev() {
        if carry == 0 {
            break;
        }
        let v = *d as i64 + carry;
        let r = v.rem_euclid(b);
        carry = (v - r) / b;
        *d = r as u8;
    }
    if carry != 0 {
        None
    } else {
        Some(out)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Chart<'a> {
    model: &'a DigitModel,
    reach: i64,
    states: Vec<State>,
    ratios: Vec<f64>,
    prefix: Vec<f64>,
    depth: usize,
}

impl<'a> Chart<'a> {
    /// Chart around the cell `word`, for the digit process started in `start`
    /// (`None` for the stationary law). Neighbors `-reach..=reach` are resolved.
    pub fn new(model: &'a DigitModel, start: State, word: &[u8], reach: usize) -> Result<Self> {
        let b = model.base();
        let ln_w = ln_mass_from(model, start, word);
        if ln_w == f64::NEG_INFINITY {
            return Err(Error::ZeroMass);
        }
        let reach = reach as i64;
        let n = (2 * reach + 1) as usize;
        let mut states = Vec::with_capacity(n);
        let mut ratios = Vec::with_capacity(n);
        for j in -reach..=reach {
            if j == 0 {
                states.push(word.last().copied().or(start));
                ratios.push(1.0);
                continue;
            }
            match add_signed(word, b, j) {
                None => {
                    states.push(None);
                    ratios.push(0.0);
                }
                Some(nb) => {
                    let p = word.iter().zip(&nb).position(|(a, c)| a != c).unwrap_or(word.len());
                    let mut ln_r = 0.0;
                    for i in p..word.len() {
                        let s = if i == 0 { start } else { Some(word[i - 1]) };
                        let s_nb = if i == 0 { start } else { Some(nb[i - 1]) };
                        ln_r += model.ln_weight(s_nb, nb[i]) - model.ln_weight(s, word[i]);
                    }
                    states.push(nb.last().copied().or(start));
                    ratios.push(if ln_r == f64::NEG_INFINITY { 0.0 } else { ln_r.exp() });
                }
            }
        }
        let mut prefix = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &r in &ratios {
            acc += r;
            prefix.push(acc);
        }
        Ok(Chart { model, reach, states, ratios, prefix, depth: cdf_depth(b) })
    }

    /// Mass of `(-inf, z]` in units of the center cell.
    pub fn cum(&self, z: f64) -> f64 {
        let k = z.floor();
        if k < -(self.reach as f64) {
            return 0.0;
        }
        if k > self.reach as f64 {
            return *self.prefix.last().unwrap();
        }
        let idx = (k as i64 + self.reach) as usize;
        let r = self.ratios[idx];
        if r == 0.0 {
            return self.prefix[idx];
        }
        self.prefix[idx] + r * self.model.cond_cdf(self.states[idx], z - k, self.depth).0
    }
}

/// `ln mu([word] | start)`.
pub(crate) fn ln_mass_from(model: &DigitModel, start: State, word: &[u8]) -> f64 {
    let mut s = start;
    let mut acc = 0.0;
    for &d in word {
        acc += model.ln_weight(s, d);
        if acc == f64::NEG_INFINITY {
            break;
        }
        s = Some(d);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::{point_from_digits, shipped};

    #[test]
    fn carries() {
        assert_eq!(add_signed(&[0, 2, 2], 3, 1), Some(vec![1, 0, 0]));
        assert_eq!(add_signed(&[1, 0, 0], 3, -1), Some(vec![0, 2, 2]));
        assert_eq!(add_signed(&[2, 2], 3, 1), None);
        assert_eq!(add_signed(&[0, 0], 3, -1), None);
        assert_eq!(add_signed(&[], 3, 0), Some(vec![]));
        assert_eq!(add_signed(&[0, 1], 2, 2), Some(vec![1, 1]));
    }

    #[test]
    fn cdf_depths() {
        assert_eq!(cdf_depth(2), 44);
        assert_eq!(cdf_depth(3), 28);
    }

    #[test]
    fn chart_matches_absolute_cdf() {
        let m = shipped::golden_mean();
        let word = [0u8, 1, 0, 0, 1, 0];
        let level = word.len() as i32;
        let chart = Chart::new(&m, None, &word, 2).unwrap();
        let left = point_from_digits(&word, 2);
        let cell = 2f64.powi(-level);
        let mw = chart_mass_abs(&m, &word);
        for &z in &[-1.5, -0.3, 0.0, 0.25, 0.8, 1.6, 2.9] {
            let lo = (left + 0.1 * cell).min(left + z * cell);
            let hi = (left + 0.1 * cell).max(left + z * cell);
            let want = (m.cdf(hi.clamp(0.0, 1.0), 50) - m.cdf(lo.clamp(0.0, 1.0), 50)) / mw;
            let got = (chart.cum(0.1) - chart.cum(z)).abs();
            assert!((got - want).abs() < 1e-9, "z={z}: {got} vs {want}");
        }
    }

    fn chart_mass_abs(m: &DigitModel, word: &[u8]) -> f64 {
        ln_mass_from(m, None, word).exp()
    }

    #[test]
    fn null_cell_rejected() {
        let c = shipped::cantor();
        assert!(matches!(Chart::new(&c, None, &[1], 1), Err(Error::ZeroMass)));
    }
}
