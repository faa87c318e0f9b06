use proptest::prelude::*;
use scenery_core::digits::shipped;
use scenery_core::singularity::{convolution_dimension_probe, overlap_profile, Source, Verdict, VerdictRule};
use scenery_core::{DiffeoSpec, DigitModel};

#[test]
fn bernoulli_versus_cantor_is_singular_like() {
    let b = shipped::bernoulli_03_07();
    let c = shipped::cantor();
    let id = DiffeoSpec::identity();
    let depths: Vec<u32> = (4..=20).collect();
    let r = overlap_profile(&Source::mapped(&b, &id), &Source::plain(&c), &depths, None, VerdictRule::default()).unwrap();
    assert!(r.strictly_decreasing());
    assert_eq!(r.verdict, Verdict::SingularLike);
    assert!(r.decay_rate > 0.0 && r.r2 >= 0.9);
}

#[test]
fn same_measure_in_two_bases_is_equivalent_like() {
    let b2 = shipped::bernoulli_03_07();
    let b4 = DigitModel::bernoulli(4, vec![0.09, 0.21, 0.21, 0.49], "b4").unwrap();
    let depths: Vec<u32> = (4..=16).collect();
    let r = overlap_profile(&Source::plain(&b2), &Source::plain(&b4), &depths, None, VerdictRule::default()).unwrap();
    assert!(r.overlaps.iter().all(|&o| o > 0.999_999));
    assert_eq!(r.verdict, Verdict::EquivalentLike);
}

/// The digit sum of two Cantor points has digits 0, 2, 4 with weights 1/4, 1/2, 1/4,
/// so the self-convolution has dimension `1.5 log 2 / log 3`.
#[test]
fn cantor_self_convolution_dimension() {
    let c = shipped::cantor();
    let p = convolution_dimension_probe(&c, 2, 11, &[3, 4, 5, 6, 7, 8], 50, 3).unwrap();
    let want = 1.5 * 2f64.ln() / 3f64.ln();
    assert!((p.slope - want).abs() < 0.03, "{} vs {want}", p.slope);
    let one = convolution_dimension_probe(&c, 1, 11, &[3, 4, 5, 6, 7, 8], 50, 3).unwrap();
    assert!((one.slope - c.dimension()).abs() < 0.02);
}

fn model() -> impl Strategy<Value = DigitModel> {
    (0.05f64..0.95, 0.05f64..0.95).prop_map(|(p, q)| {
        DigitModel::bernoulli(3, vec![p * q, p * (1.0 - q), 1.0 - p], "m").unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn overlap_is_symmetric_and_nonincreasing(a in model(), b in model(), u in 0.3f64..3.0, v in -1.0f64..1.0) {
        let f = DiffeoSpec::affine(u, v).unwrap();
        let depths: Vec<u32> = (1..=12).collect();
        let rule = VerdictRule::default();
        let ab = overlap_profile(&Source::mapped(&a, &f), &Source::plain(&b), &depths, None, rule).unwrap();
        let ba = overlap_profile(&Source::plain(&b), &Source::mapped(&a, &f), &depths, None, rule).unwrap();
        for (x, y) in ab.overlaps.iter().zip(&ba.overlaps) {
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(x));
        }
        for w in ab.overlaps.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }
}
