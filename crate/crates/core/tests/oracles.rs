use scenery_core::digits::shipped;
use scenery_core::grid::wasserstein1;
use scenery_core::prediction::{prediction_measure, sample_path};
use scenery_core::scenery::{digits_needed, scenery, GUARD_DIGITS};
use scenery_core::{DigitModel, PointSpec};

/// Frame masses against `mu([x + e^-t z_k, x + e^-t z_{k+1}])`, normalized.
#[test]
fn cantor_frame_matches_interval_masses() {
    let c = shipped::cantor();
    let t = 3.7;
    let p = PointSpec::sample(&c, digits_needed(3, t) + 30, 19);
    let frame = scenery(&c, &p, t, 5).unwrap();
    let (x, h) = (p.x(), (-t as f64).exp());
    let n = frame.len();
    let edge = |k: usize| (x + h * (-1.0 + 2.0 * k as f64 / n as f64)).clamp(0.0, 1.0);
    let raw: Vec<f64> = (0..n)
        .map(|k| c.interval_mass(edge(k), edge(k + 1), 30).unwrap().mass)
        .collect();
    let total: f64 = raw.iter().sum();
    assert!(total > 0.0);
    for (got, want) in frame.masses().iter().zip(&raw) {
        assert!((got - want / total).abs() < 1e-9, "{got} vs {}", want / total);
    }
}

fn bigram_counts(model: &DigitModel, draws: u64, backward: bool) -> Vec<Vec<f64>> {
    let b = model.base();
    let mut counts = vec![vec![0.0; b]; b];
    for i in 0..draws {
        let path = sample_path(model, 2, 2, 1_000 + i).unwrap();
        let (a, c) = if backward { (path.get(-1), path.get(0)) } else { (path.get(0), path.get(1)) };
        counts[a as usize][c as usize] += 1.0;
    }
    counts
}

/// Independent draws, so each pair count is binomial.
fn assert_within_three_sigma(counts: &[Vec<f64>], expected: &[Vec<f64>], draws: f64) {
    for (row, erow) in counts.iter().zip(expected) {
        for (&got, &p) in row.iter().zip(erow) {
            let sigma = (draws * p * (1.0 - p)).sqrt();
            if p == 0.0 {
                assert_eq!(got, 0.0);
            } else {
                assert!((got - draws * p).abs() <= 3.0 * sigma, "{got} vs {}", draws * p);
            }
        }
    }
}

#[test]
fn forward_bigrams_follow_the_chain() {
    let g = shipped::golden_mean();
    let draws = 100_000;
    let pi = g.start_distribution().to_vec();
    let expected: Vec<Vec<f64>> =
        (0..2).map(|i| (0..2).map(|j| pi[i] * g.weights(Some(i as u8))[j]).collect()).collect();
    assert_within_three_sigma(&bigram_counts(&g, draws, false), &expected, draws as f64);
}

#[test]
fn backward_bigrams_follow_the_reversed_chain() {
    let m = shipped::period_two();
    let draws = 100_000;
    let pi = m.start_distribution().to_vec();
    let rev = m.reversed_transition();
    // pair (omega_-1, omega_0) = (j, i) has probability pi_i * rev[i][j]
    let mut expected = vec![vec![0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            expected[j][i] = pi[i] * rev[i][j];
        }
    }
    assert_within_three_sigma(&bigram_counts(&m, draws, true), &expected, draws as f64);
}

/// `mu_{omega,-9}` restricted to the level-5 cell of the path is `mu_{omega,-5}`
/// up to a constant.
#[test]
fn prediction_measures_agree_across_truncations() {
    let g = shipped::golden_mean();
    let depth = 8;
    for seed in 0..5 {
        let path = sample_path(&g, 12, 2 * GUARD_DIGITS, seed).unwrap();
        let a = prediction_measure(&g, &path, -5, depth).unwrap().grid;
        let b = prediction_measure(&g, &path, -9, depth).unwrap().grid;
        let xi = path.xi(-5);
        let (lo, hi) = ((-xi).max(-2.0), (32.0 - xi).min(2.0));
        let w = a.cell_width();
        let inside: Vec<usize> = (0..a.len())
            .filter(|&k| {
                let (c0, c1) = a.cell_bounds(k);
                c0 >= lo - 1e-12 && c1 <= hi + 1e-12
            })
            .collect();
        assert!(inside.len() as f64 * w > 1.0);
        let sa: f64 = inside.iter().map(|&k| a.masses()[k]).sum();
        let sb: f64 = inside.iter().map(|&k| b.masses()[k]).sum();
        for &k in &inside {
            assert!((a.masses()[k] / sa - b.masses()[k] / sb).abs() < 1e-10);
        }
    }
}

#[test]
fn frame_distance_to_itself_is_zero() {
    let c = shipped::cantor();
    let p = PointSpec::sample(&c, 60, 5);
    let f = scenery(&c, &p, 2.2, 5).unwrap();
    assert_eq!(wasserstein1(&f, &f).unwrap(), 0.0);
}
