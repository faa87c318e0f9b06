//! One runner per experiment name. Every runner is a pure function of its
//! configuration; wall-clock time is recorded but never feeds a metric.

use std::f64::consts::TAU;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::bundle::{Check, ResultBundle};
use super::config::ExperimentConfig;
use crate::diffeo::DiffeoSpec;
use crate::digits::{DigitModel, ModelKind};
use crate::error::{Error, Result};
use crate::functional::TestFunctional;
use crate::grid::local_dimension_estimate;
use crate::phase::{
    circular_gap, circular_stats, mean_rotation, mixture_phase_measure, null_resultant, phase_measure,
    pushforward_phase_check, recover_log_slope, reference_point, uniform_overlap_profile, PhaseParams,
};
use crate::point::PointSpec;
use crate::prediction::{
    intertwine_check, prediction_dimension_check, sample_path, superposition_check,
};
use crate::rng;
use crate::scenery::{
    default_frame_depth, diffeo_shift_check, digits_needed, maker_average, par_map_points, scenery_orbit,
    GUARD_DIGITS,
};
use crate::singularity::{overlap_profile, Source, Verdict, VerdictRule};
use crate::spectral::{
    eigenvalue_present, peak_report, sample_points, spectrum_scan, AlphaGrid, Decision, ScanParams, Thresholds,
};

/// Runs the experiment named in `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let start = Instant::now();
    let mut bundle = match cfg.experiment.name.as_str() {
        "invariance" => invariance(cfg),
        "dimension" => dimension(cfg),
        "diffeo_shift" => diffeo_shift(cfg),
        "equidistribution" => equidistribution(cfg),
        "spectrum" => spectrum(cfg),
        "prediction" => prediction(cfg),
        "phase_trichotomy" => phase_trichotomy(cfg),
        "pushforward_phase" => pushforward_phase(cfg),
        "slope_detection" => slope_detection(cfg),
        "cross_base" => cross_base(cfg),
        "mixture" => mixture(cfg),
        "scenery" => scenery_dump(cfg),
        other => Err(Error::Config(vec![format!("experiment.name: unknown experiment `{other}`")])),
    }?;
    bundle.runtime_secs = start.elapsed().as_secs_f64();
    Ok(bundle)
}

/// Parses every `*.toml` in `dir` (sorted by file name) and runs them in order.
pub fn run_suite(dir: &Path) -> Result<Vec<ResultBundle>> {
    let configs = load_suite(dir)?;
    configs.par_iter().map(run).collect()
}

pub fn load_suite(dir: &Path) -> Result<Vec<ExperimentConfig>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    let mut errors = Vec::new();
    let mut configs = Vec::new();
    for p in &paths {
        match ExperimentConfig::load(p) {
            Ok(c) => configs.push(c),
            Err(Error::Config(v)) => errors.extend(v),
            Err(e) => errors.push(format!("{}: {e}", p.display())),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    Ok(configs)
}

fn start(cfg: &ExperimentConfig, claim: &str) -> ResultBundle {
    ResultBundle::new(&cfg.experiment.name, claim, cfg.hash(), cfg.experiment.seed)
}

fn required_model(cfg: &ExperimentConfig, key: &str) -> Result<DigitModel> {
    let name = cfg.name_param(key).ok_or_else(|| Error::Config(vec![format!("params.{key}: missing")]))?;
    cfg.model(&name)
}

fn required_diffeo(cfg: &ExperimentConfig, key: &str) -> Result<(String, DiffeoSpec)> {
    let name = cfg.name_param(key).ok_or_else(|| Error::Config(vec![format!("params.{key}: missing")]))?;
    let f = cfg.diffeo(&name)?;
    Ok((name, f))
}

fn diffeo_list(cfg: &ExperimentConfig, key: &str) -> Result<Vec<(String, DiffeoSpec)>> {
    cfg.names(key).into_iter().map(|n| cfg.diffeo(&n).map(|f| (n, f))).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Largest `|log f'|` over `[0, 1]`, sampled.
fn max_log_slope(f: &DiffeoSpec) -> f64 {
    (0..=64).map(|i| f.derivative(i as f64 / 64.0).ln().abs()).fold(0.0, f64::max)
}

fn invariance(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = start(cfg, "cylinder masses are additive and invariant under x -> bx mod 1");
    let depth = cfg.int("depth", 12) as usize;
    let tol = cfg.tolerance("markov", 1e-12);
    for name in cfg.names("models") {
        let m = cfg.model(&name)?;
        match m.kind() {
            ModelKind::Markov { .. } => {
                let add = m.additivity_defect(depth);
                let inv = m.invariance_defect(depth);
                b.check(Check::at_most(format!("{name}.additivity_defect"), add, tol));
                b.check(Check::at_most(format!("{name}.invariance_defect"), inv, tol));
            }
            _ => {
                let r = m.exact_bernoulli_check(depth)?;
                b.metric(format!("{name}.words"), r.words as f64);
                b.check(Check::holds(format!("{name}.exact_additivity"), r.additive));
                b.check(Check::holds(format!("{name}.exact_invariance"), r.invariant));
            }
        }
    }
    Ok(b)
}

fn dimension(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = start(cfg, "the model measure is exact dimensional with dimension h / log b");
    let m = required_model(cfg, "model")?;
    let n = cfg.int("n_points", 500) as usize;
    let depth = cfg.int("depth", 40) as usize;
    let min_depth = cfg.int("min_depth", 10) as usize;
    let depths: Vec<usize> = (min_depth..=depth).collect();
    let seed = cfg.experiment.seed;
    let points: Vec<PointSpec> = (0..n as u64)
        .map(|i| PointSpec::sample_indexed(&m, depth + 2 * GUARD_DIGITS, seed, rng::STREAM_POINTS, i))
        .collect();
    let slopes = par_map_points(&points, |p| local_dimension_estimate(&m, p, &depths).map(|d| d.slope))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let avg = mean(&slopes);
    let sd = (slopes.iter().map(|s| (s - avg).powi(2)).sum::<f64>() / slopes.len().max(1) as f64).sqrt();
    let target = m.dimension();
    b.metric("mean_slope", avg);
    b.metric("slope_std", sd);
    b.metric("target", target);
    b.check(Check::at_most("abs_error", (avg - target).abs(), cfg.tolerance("dimension", 0.02)));
    Ok(b)
}

fn diffeo_shift(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = start(cfg, "the scenery of f mu at f(x) is the scenery of mu at x shifted by log f'(x)");
    let m = required_model(cfg, "model")?;
    let n = cfg.int("n_points", 16) as usize;
    let t_max = cfg.float("t_max", 10.0);
    let depth = cfg.int("frame_depth", default_frame_depth(m.base()) as u64) as u32;
    let window = cfg.int("window_samples", 8).max(1) as usize;
    let lnb = m.ln_base();
    let cell = 2.0 / (m.base() as f64).powi(depth as i32);
    let affine = diffeo_list(cfg, "affine")?;
    let nonaffine = diffeo_list(cfg, "nonaffine")?;
    let margin = affine.iter().chain(&nonaffine).map(|(_, f)| max_log_slope(f)).fold(0.0, f64::max);
    let digits = digits_needed(m.base(), t_max + margin + 1.0) + GUARD_DIGITS;
    let seed = cfg.experiment.seed;
    let points: Vec<PointSpec> =
        (0..n as u64).map(|i| PointSpec::sample_indexed(&m, digits, seed, rng::STREAM_POINTS, i)).collect();
    b.metric("cell_width", cell);
    let steps = (t_max / 0.5).floor() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * 0.5).collect();
    for (name, f) in &affine {
        let per = par_map_points(&points, |p| diffeo_shift_check(&m, p, f, &grid, depth))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let worst = per.iter().flatten().filter_map(|s| s.distance).fold(0.0, f64::max);
        b.check(Check::at_most(format!("{name}.max_distance"), worst, cfg.tolerance("affine_cells", 2.0) * cell));
    }
    // per integer t, median over points and over a trailing window of one period
    let ts: Vec<usize> = (1..=t_max.floor() as usize).collect();
    for (name, f) in &nonaffine {
        let times: Vec<f64> = ts
            .iter()
            .flat_map(|&t| (0..window).map(move |k| t as f64 - lnb * k as f64 / window as f64))
            .collect();
        let per = par_map_points(&points, |p| diffeo_shift_check(&m, p, f, &times, depth))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut profile = Vec::new();
        for (i, &t) in ts.iter().enumerate() {
            let vals: Vec<f64> = per
                .iter()
                .flat_map(|row| row[i * window..(i + 1) * window].iter().filter_map(|s| s.distance))
                .collect();
            let v = median(&vals);
            b.metric(format!("{name}.median_distance_t{t}"), v);
            profile.push(v);
        }
        let decreasing = profile.windows(2).all(|w| w[1] < w[0]);
        b.check(Check::holds(format!("{name}.strictly_decreasing"), decreasing));
        b.check(Check::below(
            format!("{name}.final_distance"),
            *profile.last().unwrap_or(&f64::NAN),
            cfg.tolerance("final_distance", 0.05),
        ));
    }
    Ok(b)
}

fn equidistribution(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = start(cfg, "discrete-time scenery averages at times n log b converge");
    let m = required_model(cfg, "model")?;
    let n = cfg.int("n", 200) as usize;
    let n_points = cfg.int("n_points", 8).max(1) as usize;
    let depth = cfg.int("frame_depth", default_frame_depth(m.base()) as u64) as u32;
    let lnb = m.ln_base();
    let t_max = 2.0 * n as f64 * lnb;
    let digits = digits_needed(m.base(), t_max) + GUARD_DIGITS;
    let seed = cfg.experiment.seed;
    let bank = TestFunctional::default_bank();
    let points: Vec<PointSpec> =
        (0..n_points as u64).map(|i| PointSpec::sample_indexed(&m, digits, seed, rng::STREAM_POINTS, i)).collect();
    let dists = par_map_points(&points, |p| {
        scenery_orbit(&m, p, t_max, lnb, depth, None).and_then(|o| maker_average(&o, &bank, lnb))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let tol = cfg.tolerance("cauchy", 0.03);
    for (j, f) in bank.iter().enumerate() {
        let avg = |k: usize| dists.iter().map(|d| d.prefix_means[k - 1][j]).sum::<f64>() / dists.len() as f64;
        if dists.iter().any(|d| d.len() < 2 * n) {
            return Err(Error::InsufficientData("orbit shorter than 2N frames".into()));
        }
        b.metric(format!("{}.avg_N", f.name()), avg(n));
        b.metric(format!("{}.avg_2N", f.name()), avg(2 * n));
        b.check(Check::below(format!("{}.cauchy_gap", f.name()), (avg(n) - avg(2 * n)).abs(), tol));
    }
    Ok(b)
}

fn scan_params(m: &DigitModel, cfg: &ExperimentConfig) -> ScanParams {
    let lnb = m.ln_base();
    let mut p = ScanParams::defaults(m.base());
    p.t_max = cfg.float("t_levels", 400.0) * lnb;
    p.t_start = cfg.float("burn_in_levels", 8.0) * lnb;
    if let Some(d) = cfg.params.get("frame_depth").and_then(|v| v.as_integer()) {
        p.frame_depth = d as u32;
    }
    p
}

fn spectrum(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = start(cfg, "the scenery flow has an eigenvalue n / log b for some integer n");
    let th = Thresholds { present: cfg.tolerance("present_ratio", 5.0), absent: cfg.tolerance("absent_ratio", 2.0) };
    let n_points = cfg.int("n_points", 32) as usize;
    let n_controls = cfg.int("n_controls", 24) as usize;
    let seed = cfg.experiment.seed;
    let bank = TestFunctional::default_bank();
    let mut scan_of = |key: &str| -> Result<Option<(String, DigitModel, crate::spectral::SpectrumScan)>> {
        let Some(name) = cfg.name_param(key) else { return Ok(None) };
        let m = cfg.model(&name)?;
        let p = scan_params(&m, cfg);
        let pts = sample_points(&m, n_points, p.t_end(), seed);
        let grid = AlphaGrid::standard(m.base(), n_controls);
        let s = spectrum_scan(&m, &pts, &grid, &bank, &p)?;
        let mut csv = Vec::new();
        s.write_csv(&mut csv)?;
        b.artifact(format!("spectrum_{name}.csv"), String::from_utf8(csv).unwrap());
        let report = peak_report(&s, th)?;
        b.artifact(format!("peaks_{name}.json"), serde_json::to_string_pretty(&report).unwrap());
        Ok(Some((name, m, s)))
    };
    let main = scan_of("model")?.expect("model is required");
    let null = scan_of("null_model")?.expect("null_model is required");
    let periodic = scan_of("periodic_model")?;

    let (name, m, s) = &main;
    let lnb = m.ln_base();
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let peak = eigenvalue_present(s, 1.0 / lnb, th)?;
    b.metric(format!("{name}.control_median"), peak.control_median);
    b.check(Check::at_least(format!("{name}.ratio_at_1"), peak.ratio, th.present));
    let g = eigenvalue_present(s, golden / lnb, th)?;
    b.check(Check::holds(format!("{name}.golden_absent"), g.decision == Decision::Absent));
    b.metric(format!("{name}.ratio_at_golden"), g.ratio);
    let report = peak_report(s, th)?;
    b.metric(format!("{name}.detected_n"), report.detected_n.map_or(0.0, |n| n as f64));
    let half = eigenvalue_present(s, 0.5 / lnb, th)?;
    b.observe(format!("{name}.ratio_at_half"), half.ratio);
    b.observe(format!("{name}.magnitude_at_half"), half.magnitude);

    let (nname, _, ns) = &null;
    let worst = peak_report(ns, th)?.lattice.iter().map(|d| d.ratio).fold(0.0, f64::max);
    b.check(Check::below(format!("{nname}.max_lattice_ratio"), worst, th.absent));

    if let Some((pname, pm, ps)) = &periodic {
        let d = eigenvalue_present(ps, 0.5 / pm.ln_base(), th)?;
        b.check(Check::at_least(format!("{pname}.ratio_at_half"), d.ratio, th.present));
        b.observe(format!("{pname}.magnitude_at_half"), d.magnitude);
        let one = eigenvalue_present(ps, 1.0 / pm.ln_base(), th)?;
        b.observe(format!("{pname}.ratio_at_1"), one.ratio);
    }
    Ok(b)
}

fn prediction(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = start(cfg, "prediction measures represent mu, intertwine the shift with zooming, and have dimension h / log b");
    let m = required_model(cfg, "model")?;
    let mk = required_model(cfg, "markov_model")?;
    let depth = cfg.int("depth", 6) as u32;
    let seed = cfg.experiment.seed;

    let n_int = cfg.int("intertwine_paths", 100);
    let k = -12i64;
    let cell = (mk.base() as f64).powi(-(depth as i32));
    let dists = (0..n_int)
        .map(|i| {
            let path = sample_path(&mk, 20, 2 * GUARD_DIGITS, rng::split(seed, rng::STREAM_PATHS, i))?;
            intertwine_check(&mk, &path, k, depth)
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = dists.iter().copied().fold(0.0, f64::max);
    b.metric("intertwine.cell_width", cell);
    b.check(Check::at_most("intertwine.max_distance", worst, cfg.tolerance("intertwine_cells", 2.0) * cell));

    let n_sup = cfg.int("superposition_paths", 10_000) as usize;
    let sdepth = cfg.int("superposition_depth", 6) as u32;
    let d = superposition_check(&m, n_sup, sdepth, rng::split(seed, rng::STREAM_AUX, 0))?;
    b.check(Check::below("superposition.distance", d, cfg.tolerance("superposition", 0.02)));
    b.observe("superposition.single_path", superposition_check(&m, 1, sdepth, rng::split(seed, rng::STREAM_AUX, 1))?);
    b.observe(
        "superposition.markov_single_path",
        superposition_check(&mk, 1, sdepth, rng::split(seed, rng::STREAM_AUX, 2))?,
    );

    let n_dim = cfg.int("dimension_paths", 20);
    let ddepth = cfg.int("dimension_depth", 40) as usize;
    let depths: Vec<usize> = (10..=ddepth).collect();
    let slopes = (0..n_dim)
        .map(|i| {
            let path = sample_path(&m, 4, ddepth + 2 * GUARD_DIGITS, rng::split(seed, rng::STREAM_PATHS, 1_000_000 + i))?;
            prediction_dimension_check(&m, &path, &depths)
        })
        .collect::<Result<Vec<f64>>>()?;
    let avg = mean(&slopes);
    b.metric("dimension.mean_slope", avg);
    b.metric("dimension.target", m.dimension());
    b.check(Check::at_most("dimension.abs_error", (avg - m.dimension()).abs(), cfg.tolerance("dimension", 0.03)));
    Ok(b)
}

fn phase_params(m: &DigitModel, cfg: &ExperimentConfig) -> PhaseParams {
    let mut p = PhaseParams::defaults(m.base());
    p.scan.t_max = cfg.float("t_levels", 400.0) * m.ln_base();
    p.bins_log2 = cfg.int("bins_log2", 5) as u32;
    p
}

fn phase_trichotomy(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = start(cfg, "the phase measure is an atom for ergodic mu and uniform on rotated m-th roots of unity at alpha = 1/(m log b)");
    let m = required_model(cfg, "model")?;
    let pm = required_model(cfg, "periodic_model")?;
    let n = cfg.int("n_points", 200) as usize;
    let seed = cfg.experiment.seed;

    let p = phase_params(&m, cfg);
    let x0 = reference_point(&m, &p, seed);
    let atom = phase_measure(&m, &x0, n, 1.0 / m.ln_base(), &p, seed)?;
    let st = circular_stats(&atom)?;
    b.metric("atom.low_signal", atom.low_signal_count() as f64);
    b.metric("atom.n_modes", st.n_modes as f64);
    b.check(Check::at_least("atom.resultant", st.resultant_length, cfg.tolerance("atom_resultant", 0.9)));
    let profile = uniform_overlap_profile(&atom.angles(), 2..=7);
    b.observe("atom.uniform_overlap_finest", profile.last().unwrap().1);
    let mut csv = Vec::new();
    atom.write_samples_csv(&mut csv)?;
    b.artifact("phase_atom_samples.csv", String::from_utf8(csv).unwrap());

    let pp = phase_params(&pm, cfg);
    let y0 = reference_point(&pm, &pp, seed);
    let roots = phase_measure(&pm, &y0, n, 0.5 / pm.ln_base(), &pp, seed)?;
    let rs = circular_stats(&roots)?;
    b.metric("roots.low_signal", roots.low_signal_count() as f64);
    b.check(Check::holds("roots.two_modes", rs.n_modes == 2));
    let min_res = rs.modes.iter().map(|m| m.resultant).fold(f64::INFINITY, f64::min);
    b.check(Check::at_least("roots.min_mode_resultant", min_res, cfg.tolerance("mode_resultant", 0.85)));
    if rs.n_modes == 2 {
        b.observe("roots.mode_separation", circular_gap(rs.modes[0].center, rs.modes[1].center, TAU));
    }
    b.observe("roots.resultant", rs.resultant_length);
    let mut csv = Vec::new();
    roots.write_histogram_csv(&mut csv)?;
    b.artifact("phase_roots_histogram.csv", String::from_utf8(csv).unwrap());

    let null_n = cfg.int("null_samples", 1000) as usize;
    let seeds = cfg.int("null_seeds", 100);
    let bound = cfg.tolerance("null_resultant", 0.08);
    let below = (0..seeds).filter(|&i| null_resultant(null_n, rng::split(seed, rng::STREAM_NULL, i)) <= bound).count();
    let frac = below as f64 / seeds.max(1) as f64;
    b.check(Check::at_least("null.fraction_below", frac, cfg.tolerance("null_probability", 0.95)));
    Ok(b)
}

fn pushforward_phase(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = start(cfg, "pushing mu forward by f multiplies each phase sample by e(-alpha log f'(y))");
    let m = required_model(cfg, "model")?;
    let n = cfg.int("n_points", 100) as usize;
    let seed = cfg.experiment.seed;
    let p = phase_params(&m, cfg);
    let alpha = 1.0 / m.ln_base();
    let x0 = reference_point(&m, &p, seed);

    let (aname, f) = required_diffeo(cfg, "affine")?;
    let DiffeoSpec::Affine { u, .. } = f else {
        return Err(Error::Config(vec![format!("params.affine: `{aname}` is not affine")]));
    };
    let r = pushforward_phase_check(&m, &x0, &f, alpha, n, &p, seed)?;
    let rot = mean_rotation(&r.original.angles(), &r.measured.angles());
    let want = (-TAU * alpha * u.ln()).rem_euclid(TAU);
    b.metric(format!("{aname}.rotation"), rot.rem_euclid(TAU));
    b.metric(format!("{aname}.predicted_rotation"), want);
    b.check(Check::at_most(format!("{aname}.rotation_error"), circular_gap(rot, want, TAU), cfg.tolerance("rotation", 0.05)));
    b.observe(format!("{aname}.aligned_distance"), r.aligned.distance);

    for (name, g) in diffeo_list(cfg, "nonaffine")? {
        let r = pushforward_phase_check(&m, &x0, &g, alpha, n, &p, seed)?;
        b.check(Check::below(format!("{name}.aligned_distance"), r.aligned.distance, cfg.tolerance("distance", 0.1)));
        b.observe(format!("{name}.alignment_rotation"), r.aligned.rotation);
        let mut csv = Vec::new();
        r.measured.write_samples_csv(&mut csv)?;
        b.artifact(format!("pushforward_{name}_measured.csv"), String::from_utf8(csv).unwrap());
        let mut csv = Vec::new();
        r.predicted.write_samples_csv(&mut csv)?;
        b.artifact(format!("pushforward_{name}_predicted.csv"), String::from_utf8(csv).unwrap());
    }
    Ok(b)
}

fn slope_detection(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = start(cfg, "phase rotations of affine pushforwards recover log u modulo log b / n");
    let m = required_model(cfg, "model")?;
    let n = cfg.int("n_points", 50) as usize;
    let seed = cfg.experiment.seed;
    let lnb = m.ln_base();

    let sp = scan_params(&m, cfg);
    let pts = sample_points(&m, cfg.int("scan_points", 8) as usize, sp.t_end(), seed);
    let scan = spectrum_scan(&m, &pts, &AlphaGrid::standard(m.base(), 24), &TestFunctional::default_bank(), &sp)?;
    let n_det = peak_report(&scan, Thresholds::default())?
        .detected_n
        .ok_or_else(|| Error::InsufficientData("spectrum scan inconclusive: no n / log b peak".into()))?;
    b.metric("detected_n", n_det as f64);
    let alpha = n_det as f64 / lnb;
    let period = lnb / n_det as f64;

    let p = phase_params(&m, cfg);
    let x0 = reference_point(&m, &p, seed);
    for u in cfg.floats("slopes") {
        let f = DiffeoSpec::affine(u, 0.0)?;
        let r = pushforward_phase_check(&m, &x0, &f, alpha, n, &p, seed)?;
        let theta = mean_rotation(&r.original.angles(), &r.measured.angles());
        let got = recover_log_slope(theta, alpha);
        let truth = u.ln().rem_euclid(period);
        b.metric(format!("u{u}.recovered"), got);
        b.metric(format!("u{u}.true"), truth);
        b.check(Check::at_most(format!("u{u}.error"), circular_gap(got, truth, period), cfg.tolerance("slope", 0.02)));
    }
    Ok(b)
}

fn cross_base(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = start(cfg, "f mu and nu are mutually singular when mu and nu are invariant under x -> ax, x -> bx with a, b multiplicatively independent");
    let m = required_model(cfg, "model")?;
    let other = required_model(cfg, "other")?;
    let lo = cfg.int("min_depth", 4) as u32;
    let hi = cfg.int("max_depth", 20) as u32;
    let depths: Vec<u32> = (lo..=hi).collect();
    let rule = VerdictRule {
        equivalent_floor: 0.9,
        singular_final: cfg.tolerance("final_overlap", 0.2),
        min_r2: cfg.tolerance("min_r2", 0.9),
    };
    let mut reports = Vec::new();
    for (name, f) in diffeo_list(cfg, "maps")? {
        let r = overlap_profile(&Source::mapped(&m, &f), &Source::plain(&other), &depths, None, rule)?;
        b.metric(format!("{name}.decay_rate"), r.decay_rate);
        b.metric(format!("{name}.r2"), r.r2);
        b.check(Check::holds(format!("{name}.strictly_decreasing"), r.strictly_decreasing()));
        b.check(Check::above(format!("{name}.decay_positive"), r.decay_rate, 0.0));
        b.check(Check::at_least(format!("{name}.r2_fit"), r.r2, rule.min_r2));
        b.check(Check::below(format!("{name}.final_overlap"), r.final_overlap(), rule.singular_final));
        b.check(Check::holds(format!("{name}.singular_like"), r.verdict == Verdict::SingularLike));
        let mut csv = Vec::new();
        r.write_csv(&mut csv)?;
        b.artifact(format!("overlap_{name}.csv"), String::from_utf8(csv).unwrap());
        reports.push((name, r));
    }
    let id = DiffeoSpec::identity();
    let control = overlap_profile(&Source::mapped(&m, &id), &Source::plain(&m), &depths, None, rule)?;
    let min_control = control.overlaps.iter().copied().fold(f64::INFINITY, f64::min);
    b.check(Check::at_least("control.min_overlap", min_control, cfg.tolerance("control", 0.999)));
    if let Some(rname) = cfg.name_param("related_model") {
        let rm = cfg.model(&rname)?;
        let r = overlap_profile(&Source::plain(&m), &Source::plain(&rm), &depths, None, rule)?;
        b.observe(format!("{rname}.final_overlap"), r.final_overlap());
        b.observe(format!("{rname}.equivalent_like"), (r.verdict == Verdict::EquivalentLike) as u8 as f64);
    }
    let json: Vec<_> = reports
        .iter()
        .map(|(n, r)| serde_json::json!({ "map": n, "report": r }))
        .collect();
    b.artifact("overlap_reports.json", serde_json::to_string_pretty(&json).unwrap());
    Ok(b)
}

fn mixture(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = start(cfg, "phase measure of a non-ergodic mixture of mu and f mu");
    let m = required_model(cfg, "model")?;
    let (fname, f) = required_diffeo(cfg, "map")?;
    let n = cfg.int("n_points", 100) as usize;
    let seed = cfg.experiment.seed;
    let p = phase_params(&m, cfg);
    let alpha = 1.0 / m.ln_base();
    let x0 = reference_point(&m, &p, seed);
    let pm = mixture_phase_measure(&m, &x0, &f, alpha, n, &p, seed)?;
    let st = circular_stats(&pm)?;
    b.observe("n_modes", st.n_modes as f64);
    b.observe("resultant", st.resultant_length);
    if st.n_modes == 2 {
        b.observe("mode_separation", circular_gap(st.modes[0].center, st.modes[1].center, TAU));
    }
    if let DiffeoSpec::Affine { u, .. } = f {
        b.observe(format!("{fname}.predicted_separation"), circular_gap(-TAU * alpha * u.ln(), 0.0, TAU));
    }
    let mut csv = Vec::new();
    pm.write_samples_csv(&mut csv)?;
    b.artifact("mixture_samples.csv", String::from_utf8(csv).unwrap());
    Ok(b)
}

fn scenery_dump(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = start(cfg, "scenery orbit of one point");
    let m = required_model(cfg, "model")?;
    let t_max = cfg.float("t_max", 10.0);
    let dt = cfg.float("dt", 0.1);
    let depth = cfg.int("frame_depth", default_frame_depth(m.base()) as u64) as u32;
    let f = match cfg.name_param("distortion") {
        Some(n) => Some(cfg.diffeo(&n)?),
        None => None,
    };
    let margin = f.as_ref().map_or(0.0, max_log_slope);
    let digits = digits_needed(m.base(), t_max + margin + 1.0) + GUARD_DIGITS;
    let p = PointSpec::sample_indexed(&m, digits, cfg.experiment.seed, rng::STREAM_POINTS, cfg.int("point_seed", 0));
    let orbit = scenery_orbit(&m, &p, t_max, dt, depth, f.as_ref())?;
    let bank = TestFunctional::default_bank();
    let mut csv = String::from("t");
    for g in &bank {
        csv += &format!(",{}", g.name());
    }
    csv.push('\n');
    for (t, fr) in orbit.times.iter().zip(&orbit.frames) {
        csv += &format!("{t:?}");
        for g in &bank {
            csv += &format!(",{:?}", g.evaluate(fr));
        }
        csv.push('\n');
    }
    b.artifact("scenery_functionals.csv", csv);
    if let Some(last) = orbit.frames.last() {
        let mut out = Vec::new();
        last.write_csv(&mut out)?;
        b.artifact("scenery_last_frame.csv", String::from_utf8(out).unwrap());
    }
    b.metric("x", p.x());
    b.metric("frames", orbit.frames.len() as f64);
    Ok(b)
}
