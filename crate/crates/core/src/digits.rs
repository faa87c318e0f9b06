//! Digit models: `T_b`-invariant measures on `[0, 1]` specified by the
//! statistics of their base-`b` digits.
//!
//! A model is either Bernoulli (i.i.d. digits), an order-1 stationary Markov
//! chain, or Lebesgue measure (uniform digits). Every model is represented
//! internally as a start distribution plus a transition matrix, so cylinder
//! masses are always `start[w_1] * prod P[w_i][w_{i+1}]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use num_rational::Ratio;

use crate::error::{domain, Error, Result};

/// Tolerance on probability vectors summing to one and on stationarity.
pub const PROB_TOL: f64 = 1e-12;

/// Default maximal refinement depth for interval queries.
pub const DEFAULT_MAX_DEPTH: usize = 60;

/// Conditioning state of the digit process: `None` before the first digit,
/// otherwise the previous digit.
pub type State = Option<u8>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Bernoulli { weights: Vec<f64> },
    Markov { stationary: Vec<f64>, transition: Vec<Vec<f64>> },
    Lebesgue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DigitModel {
    base: usize,
    kind: ModelKind,
    label: String,
    start: Vec<f64>,
    rows: Vec<Vec<f64>>,
    cum_start: Vec<f64>,
    cum_rows: Vec<Vec<f64>>,
    ln_start: Vec<f64>,
    ln_rows: Vec<Vec<f64>>,
    stationary: bool,
    atomic: bool,
    max_depth: usize,
}

/// Outcome of [`DigitModel::exact_bernoulli_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactCheck {
    pub additive: bool,
    pub invariant: bool,
    pub words: u64,
    pub denominator: i128,
}

fn lcm(a: i128, b: i128) -> i128 {
    fn gcd(a: i128, b: i128) -> i128 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}

/// A finite digit string `[w_1 ... w_n]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    digits: Vec<u8>,
    base: usize,
}

impl Word {
    pub fn new(base: usize, digits: Vec<u8>) -> Result<Self> {
        if let Some(&d) = digits.iter().find(|&&d| d as usize >= base) {
            return domain(format!("digit {d} out of range for base {base}"));
        }
        Ok(Word { digits, base })
    }

    pub fn empty(base: usize) -> Self {
        Word { digits: Vec::new(), base }
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn child(&self, d: u8) -> Word {
        let mut digits = self.digits.clone();
        digits.push(d);
        Word { digits, base: self.base }
    }
}

/// Mass of an interval together with the mass of the unresolved boundary cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalMass {
    pub mass: f64,
    pub error_bound: f64,
}

fn check_prob(v: &[f64], base: usize, what: &str) -> Result<()> {
    if v.len() != base {
        return Err(Error::InvalidModel(format!(
            "{what} has {} entries, expected {base}",
            v.len()
        )));
    }
    if v.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidModel(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidModel(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

fn cumulative(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for &p in v {
        acc += p;
        out.push(acc);
    }
    out
}

fn ln_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect()
}

impl DigitModel {
    fn build(
        base: usize,
        kind: ModelKind,
        label: String,
        start: Vec<f64>,
        rows: Vec<Vec<f64>>,
        stationary: bool,
    ) -> Self {
        let mut m = DigitModel {
            base,
            kind,
            label,
            cum_start: cumulative(&start),
            cum_rows: rows.iter().map(|r| cumulative(r)).collect(),
            ln_start: ln_vec(&start),
            ln_rows: rows.iter().map(|r| ln_vec(r)).collect(),
            start,
            rows,
            stationary,
            atomic: false,
            max_depth: DEFAULT_MAX_DEPTH,
        };
        m.atomic = m.detect_atom();
        m
    }

    fn check_base(base: usize) -> Result<()> {
        if !(2..=255).contains(&base) {
            return Err(Error::InvalidModel(format!("base {base} outside 2..=255")));
        }
        Ok(())
    }

    pub fn bernoulli(base: usize, weights: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        Self::check_base(base)?;
        check_prob(&weights, base, "weights")?;
        let rows = vec![weights.clone(); base];
        Ok(Self::build(
            base,
            ModelKind::Bernoulli { weights: weights.clone() },
            label.into(),
            weights,
            rows,
            true,
        ))
    }

    /// Stationary order-1 Markov model. Rejects `stationary` vectors that are
    /// not invariant under `transition`.
    pub fn markov(
        base: usize,
        stationary: Vec<f64>,
        transition: Vec<Vec<f64>>,
        label: impl Into<String>,
    ) -> Result<Self> {
        Self::check_base(base)?;
        check_prob(&stationary, base, "stationary distribution")?;
        if transition.len() != base {
            return Err(Error::InvalidModel(format!(
                "transition has {} rows, expected {base}",
                transition.len()
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            check_prob(row, base, &format!("transition row {i}"))?;
        }
        let defect = stationarity_defect(&stationary, &transition);
        if defect > PROB_TOL {
            return Err(Error::InvalidModel(format!(
                "stationary distribution is not invariant: |piP - pi| = {defect:e}"
            )));
        }
        Ok(Self::build(
            base,
            ModelKind::Markov { stationary: stationary.clone(), transition: transition.clone() },
            label.into(),
            stationary,
            transition,
            true,
        ))
    }

    /// Markov chain started from an arbitrary distribution. The resulting
    /// measure is generally not `T_b`-invariant; it is flagged as such.
    pub fn markov_with_start(
        base: usize,
        start: Vec<f64>,
        transition: Vec<Vec<f64>>,
        label: impl Into<String>,
    ) -> Result<Self> {
        Self::check_base(base)?;
        check_prob(&start, base, "start distribution")?;
        if transition.len() != base {
            return Err(Error::InvalidModel("transition row count".into()));
        }
        for (i, row) in transition.iter().enumerate() {
            check_prob(row, base, &format!("transition row {i}"))?;
        }
        let stationary = stationarity_defect(&start, &transition) <= PROB_TOL;
        Ok(Self::build(
            base,
            ModelKind::Markov { stationary: start.clone(), transition: transition.clone() },
            label.into(),
            start,
            transition,
            stationary,
        ))
    }

    pub fn lebesgue(base: usize) -> Result<Self> {
        Self::check_base(base)?;
        let w = vec![1.0 / base as f64; base];
        Ok(Self::build(
            base,
            ModelKind::Lebesgue,
            format!("lebesgue-{base}"),
            w.clone(),
            vec![w; base],
            true,
        ))
    }

    pub fn from_kind(base: usize, kind: ModelKind, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        match kind {
            ModelKind::Bernoulli { weights } => Self::bernoulli(base, weights, label),
            ModelKind::Markov { stationary, transition } => {
                Self::markov(base, stationary, transition, label)
            }
            ModelKind::Lebesgue => {
                let mut m = Self::lebesgue(base)?;
                m.label = label;
                Ok(m)
            }
        }
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn ln_base(&self) -> f64 {
        (self.base as f64).ln()
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    /// True when some infinite digit path carries positive mass.
    pub fn is_atomic(&self) -> bool {
        self.atomic
    }

    pub fn start_distribution(&self) -> &[f64] {
        &self.start
    }

    /// Distribution of the next digit given the conditioning state.
    pub fn weights(&self, state: State) -> &[f64] {
        match state {
            None => &self.start,
            Some(s) => &self.rows[s as usize],
        }
    }

    pub(crate) fn cum_weights(&self, state: State) -> &[f64] {
        match state {
            None => &self.cum_start,
            Some(s) => &self.cum_rows[s as usize],
        }
    }

    pub(crate) fn ln_weight(&self, state: State, d: u8) -> f64 {
        match state {
            None => self.ln_start[d as usize],
            Some(s) => self.ln_rows[s as usize][d as usize],
        }
    }

    /// Transition matrix of the time-reversed stationary chain,
    /// `Phat[i][j] = pi_j P[j][i] / pi_i`.
    pub fn reversed_transition(&self) -> Vec<Vec<f64>> {
        let b = self.base;
        (0..b)
            .map(|i| {
                if self.start[i] > 0.0 {
                    (0..b).map(|j| self.start[j] * self.rows[j][i] / self.start[i]).collect()
                } else {
                    vec![1.0 / b as f64; b]
                }
            })
            .collect()
    }

    fn detect_atom(&self) -> bool {
        let b = self.base;
        // states reachable with positive probability
        let mut reach = vec![false; b];
        let mut stack: Vec<usize> = (0..b).filter(|&i| self.start[i] > 0.0).collect();
        for &i in &stack {
            reach[i] = true;
        }
        while let Some(i) = stack.pop() {
            for j in 0..b {
                if self.rows[i][j] > 0.0 && !reach[j] {
                    reach[j] = true;
                    stack.push(j);
                }
            }
        }
        let det = |i: usize| (0..b).find(|&j| self.rows[i][j] >= 1.0 - 1e-15);
        for i in (0..b).filter(|&i| reach[i]) {
            let mut cur = i;
            for _ in 0..=b {
                match det(cur) {
                    Some(j) => cur = j,
                    None => break,
                }
                if cur == i {
                    return true;
                }
            }
        }
        false
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        if w.base != self.base {
            return domain(format!("word base {} differs from model base {}", w.base, self.base));
        }
        Ok(())
    }

    /// Natural log of the cylinder mass of a digit string, `-inf` for null cylinders.
    pub fn ln_cylinder_mass_digits(&self, digits: &[u8]) -> f64 {
        let mut state: State = None;
        let mut acc = 0.0;
        for &d in digits {
            acc += self.ln_weight(state, d);
            if acc == f64::NEG_INFINITY {
                return acc;
            }
            state = Some(d);
        }
        acc
    }

    pub fn cylinder_mass(&self, w: &Word) -> Result<f64> {
        self.check_word(w)?;
        let mut state: State = None;
        let mut mass = 1.0;
        for &d in w.digits() {
            mass *= self.weights(state)[d as usize];
            state = Some(d);
        }
        Ok(mass)
    }

    pub fn ln_cylinder_mass(&self, w: &Word) -> Result<f64> {
        self.check_word(w)?;
        Ok(self.ln_cylinder_mass_digits(w.digits()))
    }

    /// CDF `nu_state([0, u])` of the conditional measure of the digit tail
    /// given the previous digit, resolved to `depth` digits with mass spread
    /// uniformly inside the last cell. Returns `(value, boundary cell mass)`.
    pub(crate) fn cond_cdf(&self, state: State, u: f64, depth: usize) -> (f64, f64) {
        if u.is_nan() || u <= 0.0 {
            return (0.0, 0.0);
        }
        if u >= 1.0 {
            return (1.0, 0.0);
        }
        let b = self.base as f64;
        let top = b - 1.0;
        let mut acc = 0.0;
        let mut w = 1.0;
        let mut s = state;
        let mut y = u;
        for _ in 0..depth {
            y *= b;
            let mut d = y.floor();
            if d > top {
                d = top;
            }
            y -= d;
            let di = d as usize;
            let (cum, row) = match s {
                None => (&self.cum_start, &self.start),
                Some(k) => (&self.cum_rows[k as usize], &self.rows[k as usize]),
            };
            acc += w * cum[di];
            w *= row[di];
            if w == 0.0 {
                return (acc, 0.0);
            }
            s = Some(di as u8);
        }
        (acc + w * y, w)
    }

    /// `mu([0, x])` resolved to `depth` digits.
    pub fn cdf(&self, x: f64, depth: usize) -> f64 {
        self.cond_cdf(None, x, depth).0
    }

    /// `mu([0, k b^-depth])`, exact up to rounding of the weight products.
    pub fn cdf_b_adic(&self, k: u64, depth: u32) -> f64 {
        let b = self.base as u64;
        let n = b.checked_pow(depth).expect("b-adic depth overflows u64");
        if k >= n {
            return 1.0;
        }
        let mut digits = vec![0u8; depth as usize];
        let mut r = k;
        for d in digits.iter_mut().rev() {
            *d = (r % b) as u8;
            r /= b;
        }
        let mut acc = 0.0;
        let mut w = 1.0;
        let mut s: State = None;
        for &d in &digits {
            acc += w * self.cum_weights(s)[d as usize];
            w *= self.weights(s)[d as usize];
            if w == 0.0 {
                break;
            }
            s = Some(d);
        }
        acc
    }

    /// `mu([lo, hi])` by b-adic refinement to `depth` digits. The error bound
    /// is the total mass of the two unresolved boundary cells.
    pub fn interval_mass(&self, lo: f64, hi: f64, depth: usize) -> Result<IntervalMass> {
        if !(lo >= 0.0 && hi <= 1.0) {
            return domain(format!("interval [{lo}, {hi}] not inside [0, 1]"));
        }
        if lo > hi {
            return domain(format!("inverted interval [{lo}, {hi}]"));
        }
        if depth > self.max_depth {
            return domain(format!("depth {depth} exceeds max depth {}", self.max_depth));
        }
        let (a, ea) = self.cond_cdf(None, lo, depth);
        let (c, ec) = self.cond_cdf(None, hi, depth);
        Ok(IntervalMass { mass: (c - a).max(0.0), error_bound: ea + ec })
    }

    /// Entropy of the digit process in nats.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (i, &pi) in self.start.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            let row_h: f64 =
                self.rows[i].iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
            h += pi * row_h;
        }
        h
    }

    /// Exact dimension `h / log b`.
    pub fn dimension(&self) -> f64 {
        self.entropy() / self.ln_base()
    }

    pub fn is_intermediate(&self) -> bool {
        let d = self.dimension();
        d > 1e-12 && d < 1.0 - 1e-12
    }

    /// Largest discrepancy `|sum_d mu([d w]) - mu([w])|` over words of length
    /// at most `depth`; zero for `T_b`-invariant models.
    pub fn invariance_defect(&self, depth: usize) -> f64 {
        let b = self.base;
        let mut worst = 0.0f64;
        // level 0: sum_d mu([d]) - 1
        worst = worst.max((self.start.iter().sum::<f64>() - 1.0).abs());
        if depth == 0 {
            return worst;
        }
        for e in 0..b {
            let m_w = self.start[e];
            let m_dw: Vec<f64> = (0..b).map(|d| self.start[d] * self.rows[d][e]).collect();
            self.defect_rec(depth - 1, e as u8, m_w, &m_dw, &mut worst);
        }
        worst
    }

    fn defect_rec(&self, left: usize, last: u8, m_w: f64, m_dw: &[f64], worst: &mut f64) {
        let s: f64 = m_dw.iter().sum();
        *worst = worst.max((s - m_w).abs());
        if left == 0 {
            return;
        }
        let row = &self.rows[last as usize];
        let mut next = vec![0.0; self.base];
        for (e, &p) in row.iter().enumerate() {
            for (n, &m) in next.iter_mut().zip(m_dw) {
                *n = m * p;
            }
            self.defect_rec(left - 1, e as u8, m_w * p, &next, worst);
        }
    }

    /// Largest `|mu([w]) - sum_d mu([w d])|` over words of length below `depth`.
    pub fn additivity_defect(&self, depth: usize) -> f64 {
        let mut worst = (self.start.iter().sum::<f64>() - 1.0).abs();
        let mut stack: Vec<(usize, u8, f64)> = (0..self.base).map(|d| (1, d as u8, self.start[d])).collect();
        while let Some((len, last, m)) = stack.pop() {
            if len >= depth {
                continue;
            }
            let row = &self.rows[last as usize];
            let children: Vec<f64> = row.iter().map(|&p| m * p).collect();
            worst = worst.max((m - children.iter().sum::<f64>()).abs());
            for (d, &c) in children.iter().enumerate() {
                stack.push((len + 1, d as u8, c));
            }
        }
        worst
    }

    /// Additivity and invariance of a Bernoulli model checked in exact integer
    /// arithmetic: weights are written `n_d / D` and word masses as numerators
    /// over `D^len`.
    pub fn exact_bernoulli_check(&self, depth: usize) -> Result<ExactCheck> {
        let weights = match &self.kind {
            ModelKind::Bernoulli { weights } => weights.clone(),
            ModelKind::Lebesgue => vec![1.0 / self.base as f64; self.base],
            ModelKind::Markov { .. } => return domain("exact mode needs a Bernoulli model"),
        };
        let ratios = weights
            .iter()
            .map(|&w| {
                let r = Ratio::<i64>::approximate_float(w)
                    .filter(|r| (*r.numer() as f64 / *r.denom() as f64 - w).abs() <= 1e-15)
                    .filter(|r| *r.denom() <= 1 << 20);
                r.ok_or_else(|| Error::InvalidModel(format!("weight {w} is not a small rational")))
            })
            .collect::<Result<Vec<_>>>()?;
        let den = ratios.iter().fold(1i128, |acc, r| lcm(acc, *r.denom() as i128));
        let nums: Vec<i128> = ratios.iter().map(|r| *r.numer() as i128 * (den / *r.denom() as i128)).collect();
        let exact_sum = nums.iter().sum::<i128>() == den;
        // numerators reach den^(depth + 1)
        let fits = (den as f64).log2() * (depth + 1) as f64 <= 120.0;
        if !fits {
            return Err(Error::Resolution(format!("denominator {den} too large for depth {depth}")));
        }
        let mut additive = exact_sum;
        let mut invariant = exact_sum;
        let mut words = 0u64;
        // (length, numerator of mu([w]) over den^len)
        let mut stack: Vec<(usize, i128)> = vec![(0, 1)];
        while let Some((len, m)) = stack.pop() {
            words += 1;
            // mu([d w]) = n_d m / den^(len+1), summed over the prepended digit
            let preimage: i128 = nums.iter().map(|&n| n * m).sum();
            invariant &= preimage == m * den;
            if len >= depth {
                continue;
            }
            let children: i128 = nums.iter().map(|&n| m * n).sum();
            additive &= children == m * den;
            for &n in &nums {
                stack.push((len + 1, m * n));
            }
        }
        Ok(ExactCheck { additive, invariant, words, denominator: den })
    }

    /// Draws one digit from the conditional distribution given `state`.
    pub(crate) fn draw_digit<R: Rng + ?Sized>(&self, state: State, rng: &mut R) -> u8 {
        draw_from(self.weights(state), rng)
    }

    /// Draws `n` digits of a model-typical point.
    pub fn sample_digits<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u8> {
        let mut out = Vec::with_capacity(n);
        let mut state: State = None;
        for _ in 0..n {
            let d = self.draw_digit(state, rng);
            out.push(d);
            state = Some(d);
        }
        out
    }
}

pub(crate) fn draw_from<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> u8 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (d, &p) in weights.iter().enumerate() {
        if p > 0.0 {
            last_positive = d;
            acc += p;
            if u < acc {
                return d as u8;
            }
        }
    }
    last_positive as u8
}

pub(crate) fn stationarity_defect(pi: &[f64], p: &[Vec<f64>]) -> f64 {
    let b = pi.len();
    (0..b)
        .map(|j| {
            let s: f64 = (0..b).map(|i| pi[i] * p[i][j]).sum();
            (s - pi[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// The coding map `xi`: the point with base-`b` expansion `0.d_1 d_2 ...`,
/// truncated to the given digits.
pub fn point_from_digits(digits: &[u8], base: usize) -> f64 {
    let b = base as f64;
    digits.iter().rev().fold(0.0, |acc, &d| (acc + d as f64) / b)
}

/// Base-`b` digits of `x` in `[0, 1)`, as far as double precision resolves them.
pub fn digits_of(x: f64, base: usize, n: usize) -> Vec<u8> {
    let b = base as f64;
    let mut y = x.clamp(0.0, 1.0);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        y *= b;
        let d = y.floor().min(b - 1.0);
        y -= d;
        out.push(d as u8);
    }
    out
}

/// Shipped models used throughout the experiments.
pub mod shipped {
    use super::DigitModel;

    /// Uniform measure on the middle-thirds Cantor set (base 3, weights ½, 0, ½).
    pub fn cantor() -> DigitModel {
        DigitModel::bernoulli(3, vec![0.5, 0.0, 0.5], "cantor").expect("valid model")
    }

    pub fn lebesgue(base: usize) -> DigitModel {
        DigitModel::lebesgue(base).expect("valid model")
    }

    /// Base-2 Bernoulli(0.3, 0.7).
    pub fn bernoulli_03_07() -> DigitModel {
        DigitModel::bernoulli(2, vec![0.3, 0.7], "bernoulli-0.3-0.7").expect("valid model")
    }

    /// Base-3 chain alternating between 0 and a uniformly chosen nonzero digit.
    pub fn period_two() -> DigitModel {
        DigitModel::markov(
            3,
            vec![0.5, 0.25, 0.25],
            vec![vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
            "period-two",
        )
        .expect("valid model")
    }

    /// Base-2 chain forbidding the word `11`, with stationary law (2/3, 1/3).
    pub fn golden_mean() -> DigitModel {
        DigitModel::markov(
            2,
            vec![2.0 / 3.0, 1.0 / 3.0],
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
            "golden-mean",
        )
        .expect("valid model")
    }

    /// The point mass at 0 (all digits 0).
    pub fn deterministic() -> DigitModel {
        DigitModel::bernoulli(2, vec![1.0, 0.0], "deterministic").expect("valid model")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn word(base: usize, s: &str) -> Word {
        Word::new(base, s.bytes().map(|c| c - b'0').collect()).unwrap()
    }

    #[test]
    fn cylinder_examples() {
        let fair = DigitModel::bernoulli(2, vec![0.5, 0.5], "fair").unwrap();
        assert_eq!(fair.cylinder_mass(&word(2, "01")).unwrap(), 0.25);
        assert_eq!(fair.cylinder_mass(&Word::empty(2)).unwrap(), 1.0);
        let g = shipped::golden_mean();
        assert_eq!(g.cylinder_mass(&word(2, "011")).unwrap(), 0.0);
        assert!((g.cylinder_mass(&word(2, "01")).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn digit_out_of_range() {
        assert!(matches!(Word::new(2, vec![0, 2]), Err(Error::Domain(_))));
        let fair = DigitModel::bernoulli(2, vec![0.5, 0.5], "fair").unwrap();
        assert!(fair.cylinder_mass(&word(3, "2")).is_err());
    }

    #[test]
    fn interval_examples() {
        let c = shipped::cantor();
        let m = c.interval_mass(0.0, 1.0 / 3.0, 60).unwrap();
        assert!((m.mass - 0.5).abs() < 1e-12, "{m:?}");
        let l = shipped::lebesgue(2);
        assert!((l.interval_mass(0.25, 0.75, 60).unwrap().mass - 0.5).abs() < 1e-15);
        let whole = c.interval_mass(0.0, 1.0, 60).unwrap();
        assert!((whole.mass - 1.0).abs() <= whole.error_bound + 1e-15);
        assert!(c.interval_mass(0.6, 0.4, 10).is_err());
        assert!(c.interval_mass(0.1, 0.2, 61).is_err());
    }

    #[test]
    fn cantor_interval_matches_enumeration() {
        // brute force: sum of depth-20 triadic cells fully inside [0.3, 0.4],
        // plus partial boundary cells weighted by overlap
        let c = shipped::cantor();
        let depth = 20u32;
        let n = 3u64.pow(depth);
        let (lo, hi) = (0.3, 0.4);
        let (plo, phi) = (lo * n as f64, hi * n as f64);
        let (first, last) = (plo.floor() as u64, phi.floor() as u64);
        let cantor_cell = |mut k: u64| {
            for _ in 0..depth {
                if k % 3 == 1 {
                    return false;
                }
                k /= 3;
            }
            true
        };
        let cell = 0.5f64.powi(depth as i32);
        let mut total = 0.0;
        for idx in first..=last {
            if !cantor_cell(idx) {
                continue;
            }
            let mut frac = 1.0;
            if idx == first {
                frac -= plo - first as f64;
            }
            if idx == last {
                frac -= 1.0 - (phi - last as f64);
            }
            total += frac * cell;
        }
        let m = c.interval_mass(lo, hi, depth as usize).unwrap();
        assert!((m.mass - total).abs() < 1e-12, "{} vs {}", m.mass, total);
    }

    #[test]
    fn entropy_examples() {
        let fair = DigitModel::bernoulli(2, vec![0.5, 0.5], "fair").unwrap();
        assert!((fair.entropy() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(shipped::deterministic().entropy(), 0.0);
        let g = shipped::golden_mean();
        assert!((g.entropy() - 2.0 / 3.0 * 2f64.ln()).abs() < 1e-15);
        assert!((shipped::lebesgue(3).dimension() - 1.0).abs() < 1e-15);
        assert_eq!(shipped::deterministic().dimension(), 0.0);
        assert!(shipped::cantor().is_intermediate());
        assert!(shipped::period_two().is_intermediate());
        assert!(!shipped::lebesgue(2).is_intermediate());
    }

    #[test]
    fn invariance_defects() {
        assert_eq!(shipped::cantor().invariance_defect(8), 0.0);
        assert!(shipped::golden_mean().invariance_defect(10) <= 1e-12);
        assert!(shipped::period_two().invariance_defect(8) <= 1e-12);
        let started = DigitModel::markov_with_start(
            2,
            vec![1.0, 0.0],
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
            "started",
        )
        .unwrap();
        assert!(!started.is_stationary());
        // depth-1 words: w = "0": mu([00]) + mu([10]) = 0.5 + 0 vs mu([0]) = 1
        let d = started.invariance_defect(1);
        assert!((d - 0.5).abs() < 1e-15, "{d}");
    }

    #[test]
    fn rejects_non_stationary_markov() {
        let r = DigitModel::markov(
            2,
            vec![0.5, 0.5],
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
            "bad",
        );
        assert!(matches!(r, Err(Error::InvalidModel(_))));
        assert!(DigitModel::bernoulli(2, vec![0.5, 0.6], "bad").is_err());
    }

    #[test]
    fn atom_detection() {
        assert!(shipped::deterministic().is_atomic());
        assert!(!shipped::cantor().is_atomic());
        assert!(!shipped::period_two().is_atomic());
        let cycle = DigitModel::markov(
            2,
            vec![0.5, 0.5],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            "cycle",
        )
        .unwrap();
        assert!(cycle.is_atomic());
    }

    #[test]
    fn coding_map() {
        assert_eq!(point_from_digits(&[0; 30], 3), 0.0);
        for k in 1..40 {
            let x = point_from_digits(&vec![1; k], 2);
            assert_eq!(x, 1.0 - 2f64.powi(-(k as i32)));
        }
    }

    #[test]
    fn reversed_chain_is_stochastic() {
        let m = shipped::golden_mean();
        for row in m.reversed_transition() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_digits_respect_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = shipped::cantor().sample_digits(1000, &mut rng);
        assert!(d.iter().all(|&x| x == 0 || x == 2));
        let p = shipped::period_two().sample_digits(1000, &mut rng);
        for w in p.windows(2) {
            assert!((w[0] == 0) != (w[1] == 0));
        }
    }

    #[test]
    fn exact_mode_bernoulli() {
        for m in [shipped::cantor(), shipped::bernoulli_03_07(), shipped::lebesgue(3)] {
            let r = m.exact_bernoulli_check(12).unwrap();
            assert!(r.additive && r.invariant, "{}", m.label());
        }
        assert_eq!(shipped::bernoulli_03_07().exact_bernoulli_check(2).unwrap().denominator, 10);
        assert!(shipped::golden_mean().exact_bernoulli_check(3).is_err());
    }

    #[test]
    fn markov_additivity() {
        assert!(shipped::golden_mean().additivity_defect(12) < 1e-12);
        assert!(shipped::period_two().additivity_defect(12) < 1e-12);
    }
}
