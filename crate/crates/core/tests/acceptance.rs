//! Runs the shipped suite twice and prints one PASS/FAIL line per criterion.
//! Thresholds and sample sizes are pinned here, so loosening a shipped config
//! fails the criterion instead of passing it.

use std::path::Path;

use scenery_core::experiments::{load_suite, run, ExperimentConfig, ResultBundle};

struct Outcome {
    ok: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { ok: true, notes: Vec::new() }
    }

    fn fail(&mut self, note: String) {
        self.ok = false;
        self.notes.push(note);
    }

    /// Every check whose name ends in `suffix` passed against exactly `threshold`;
    /// at least `count` such checks exist.
    fn checks(&mut self, b: &ResultBundle, suffix: &str, threshold: f64, count: usize) {
        let found: Vec<_> = b.checks.iter().filter(|c| c.name.ends_with(suffix)).collect();
        if found.len() < count {
            self.fail(format!("{suffix}: {} checks, want {count}", found.len()));
        }
        for c in found {
            if (c.threshold - threshold).abs() > 1e-15 * threshold.abs().max(1.0) {
                self.fail(format!("{}: threshold {} not pinned {threshold}", c.name, c.threshold));
            } else if !c.passed {
                self.fail(format!("{}: {:.6e} vs {threshold}", c.name, c.value));
            } else {
                self.notes.push(format!("{}={:.4e}", c.name, c.value));
            }
        }
    }

    fn param(&mut self, cfg: &ExperimentConfig, key: &str, want: u64) {
        let got = cfg.int(key, 0);
        if got != want {
            self.fail(format!("params.{key} = {got}, want {want}"));
        }
    }

    fn budget(&mut self, b: &ResultBundle, secs: f64) {
        if b.runtime_secs >= secs {
            self.fail(format!("runtime {:.1}s over {secs}s", b.runtime_secs));
        }
    }
}

fn report(n: u32, title: &str, o: &Outcome) -> bool {
    println!("{} criterion {n:>2} {title}: {}", if o.ok { "PASS" } else { "FAIL" }, o.notes.join(", "));
    o.ok
}

fn find<'a>(
    runs: &'a [(ExperimentConfig, ResultBundle)],
    name: &str,
) -> Option<&'a (ExperimentConfig, ResultBundle)> {
    runs.iter().find(|(c, _)| c.experiment.name == name)
}

fn criterion(
    runs: &[(ExperimentConfig, ResultBundle)],
    name: &str,
    budget: f64,
    body: impl FnOnce(&mut Outcome, &ExperimentConfig, &ResultBundle),
) -> Outcome {
    let mut o = Outcome::new();
    match find(runs, name) {
        None => o.fail(format!("no `{name}` experiment in the suite")),
        Some((cfg, b)) => {
            body(&mut o, cfg, b);
            o.budget(b, budget);
        }
    }
    o
}

fn run_all(configs: &[ExperimentConfig]) -> Vec<(ExperimentConfig, ResultBundle)> {
    configs
        .iter()
        .map(|c| {
            let b = run(c).unwrap_or_else(|e| panic!("{} failed to run: {e}", c.experiment.name));
            (c.clone(), b)
        })
        .collect()
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let configs = load_suite(&dir).expect("shipped configs load");
    let first = run_all(&configs);
    let mut all = true;

    all &= report(1, "cylinder additivity and invariance", &criterion(&first, "invariance", 1.0, |o, c, b| {
        o.param(c, "depth", 12);
        o.checks(b, ".exact_additivity", 1.0, 2);
        o.checks(b, ".exact_invariance", 1.0, 2);
        o.checks(b, ".additivity_defect", 1e-12, 2);
        o.checks(b, ".invariance_defect", 1e-12, 2);
    }));

    all &= report(2, "Cantor local dimension", &criterion(&first, "dimension", 60.0, |o, c, b| {
        o.param(c, "n_points", 500);
        o.param(c, "depth", 40);
        o.checks(b, "abs_error", 0.02, 1);
    }));

    all &= report(3, "diffeomorphisms shift sceneries", &criterion(&first, "diffeo_shift", 60.0, |o, c, b| {
        if c.float("t_max", 0.0) != 10.0 {
            o.fail("t_max is not 10".into());
        }
        let cell = b.find_metric("cell_width").unwrap_or(f64::NAN);
        o.checks(b, ".max_distance", 2.0 * cell, 1);
        o.checks(b, "quad_tenth.strictly_decreasing", 1.0, 1);
        o.checks(b, "quad_tenth.final_distance", 0.05, 1);
    }));

    all &= report(4, "discrete scenery averages converge", &criterion(&first, "equidistribution", 120.0, |o, c, b| {
        o.param(c, "n", 200);
        o.checks(b, ".cauchy_gap", 0.03, 6);
    }));

    all &= report(5, "scenery-flow spectrum", &criterion(&first, "spectrum", 300.0, |o, c, b| {
        if c.int("n_controls", 0) < 20 {
            o.fail("fewer than 20 controls".into());
        }
        o.checks(b, "cantor.ratio_at_1", 5.0, 1);
        o.checks(b, "lebesgue.max_lattice_ratio", 2.0, 1);
        o.checks(b, "period_two.ratio_at_half", 5.0, 1);
    }));

    all &= report(6, "prediction measures", &criterion(&first, "prediction", 300.0, |o, c, b| {
        o.param(c, "intertwine_paths", 100);
        o.param(c, "superposition_paths", 10_000);
        let cell = b.find_metric("intertwine.cell_width").unwrap_or(f64::NAN);
        o.checks(b, "intertwine.max_distance", 2.0 * cell, 1);
        o.checks(b, "superposition.distance", 0.02, 1);
        o.checks(b, "dimension.abs_error", 0.03, 1);
    }));

    all &= report(7, "phase trichotomy", &criterion(&first, "phase_trichotomy", 600.0, |o, c, b| {
        o.param(c, "n_points", 200);
        o.param(c, "null_samples", 1000);
        o.param(c, "null_seeds", 100);
        if c.tolerance("null_resultant", 0.0) != 0.08 {
            o.fail("null resultant bound is not 0.08".into());
        }
        o.checks(b, "atom.resultant", 0.9, 1);
        o.checks(b, "roots.two_modes", 1.0, 1);
        o.checks(b, "roots.min_mode_resultant", 0.85, 1);
        o.checks(b, "null.fraction_below", 0.95, 1);
    }));

    all &= report(8, "diffeomorphism phase law", &criterion(&first, "pushforward_phase", 600.0, |o, _, b| {
        o.checks(b, "double.rotation_error", 0.05, 1);
        o.checks(b, "quad_quarter.aligned_distance", 0.1, 1);
    }));

    all &= report(9, "slope detection", &criterion(&first, "slope_detection", 600.0, |o, c, b| {
        if c.floats("slopes") != [1.0, 2.0, 3.0, 6.0] {
            o.fail("slopes are not 1, 2, 3, 6".into());
        }
        o.checks(b, ".error", 0.02, 4);
    }));

    all &= report(10, "cross-base singularity", &criterion(&first, "cross_base", 300.0, |o, c, b| {
        o.param(c, "min_depth", 4);
        o.param(c, "max_depth", 20);
        // four affine maps and both polynomials
        o.checks(b, ".strictly_decreasing", 1.0, 6);
        o.checks(b, ".decay_positive", 0.0, 6);
        o.checks(b, ".r2_fit", 0.9, 6);
        o.checks(b, ".final_overlap", 0.2, 6);
        o.checks(b, "control.min_overlap", 0.999, 1);
    }));

    let second = run_all(&configs);
    let mut det = Outcome::new();
    for ((c, a), (_, b)) in first.iter().zip(&second) {
        let (fa, fb) = (a.fingerprint(), b.fingerprint());
        if fa != fb {
            det.fail(format!("{} differs", c.experiment.name));
        }
    }
    let values: usize = first.iter().map(|(_, b)| b.fingerprint().len()).sum();
    det.notes.push(format!("{values} values over {} experiments", first.len()));
    all &= report(11, "determinism", &det);

    if !all {
        eprintln!("acceptance criteria failed");
        std::process::exit(1);
    }
}
