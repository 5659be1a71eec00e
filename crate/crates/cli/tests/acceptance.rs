//! Acceptance criteria 1–10, one pass/fail line each.
//!
//! Reference values come from closed forms written out here, not from the
//! library: the cap volume `π(1 − cos θ)²(2 + cos θ)/3`, subset sums for
//! `σ_k`, and the AF gap recomputed from the emitted `V_m` columns.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use capflow::flow::{rhs, Checkpoint};
use capflow::geometry::evaluate;
use capflow::symfun::newton_maclaurin_gap;
use capflow::{
    CurvatureVector, FlowConfig, GridSpec, HalfSphereGrid, QuotientFunction, RadialField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// `|B_θ^3|` for `n = 2`.
fn cap_volume(theta: f64) -> f64 {
    let c = theta.cos();
    PI * (1.0 - c).powi(2) * (2.0 + c) / 3.0
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Work {
    dir: PathBuf,
}

impl Work {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    /// Runs the binary; returns the exit code.
    fn capflow(&self, args: &[&str]) -> i32 {
        let out = Command::new(env!("CARGO_BIN_EXE_capflow"))
            .args(args)
            .arg("--quiet")
            .current_dir(&self.dir)
            .output()
            .unwrap();
        if !out.status.success() {
            eprint!("{}", String::from_utf8_lossy(&out.stderr));
        }
        out.status.code().unwrap_or(-1)
    }
}

type Table = Vec<HashMap<String, String>>;

fn csv(path: &Path) -> Table {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn f(row: &HashMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap_or_else(|_| panic!("column {col}"))
}

fn report(dir: &Path) -> Vec<Value> {
    let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
    text.lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn max_by<T>(xs: impl IntoIterator<Item = T>, key: impl Fn(&T) -> f64) -> f64 {
    xs.into_iter()
        .map(|x| key(&x))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn criterion_1(w: &Work) -> (Outcome, Table) {
    let code = w.capflow(&[
        "cap-table",
        "--n",
        "2",
        "--thetas",
        "pi/2,pi/3",
        "--radii",
        "0.5,1,2",
        "--n-beta",
        "400",
        "--out",
        "c1",
    ]);
    let rows = csv(&w.path("c1/cap_table.csv"));
    let mut worst: f64 = 0.0;
    let mut oracle_ok = code == 0 && rows.len() == 2 * 3 * 4;
    for r in &rows {
        let (theta, radius, m) = (f(r, "theta"), f(r, "r"), f(r, "m") as i32);
        let expected = cap_volume(theta) * radius.powi((3 - m).max(0));
        worst = worst.max((f(r, "numeric") - expected).abs() / expected);
        oracle_ok &= (f(r, "exact") - expected).abs() <= 1e-14 * expected;
    }
    let at = |theta: f64, value: f64| {
        rows.iter()
            .filter(|r| (f(r, "theta") - theta).abs() < 1e-15 && f(r, "r") == 1.0)
            .all(|r| (f(r, "numeric") - value).abs() <= 1e-5 * value)
    };
    let named = at(FRAC_PI_2, 2.0 * PI / 3.0) && at(FRAC_PI_3, 5.0 * PI / 24.0);
    let pass = oracle_ok && named && worst <= 1e-5;
    (
        outcome(
            pass,
            format!(
                "{} rows, max rel error {worst:.2e} (≤ 1e-5), 2π/3 and 5π/24 at r = 1: {named}",
                rows.len()
            ),
        ),
        rows,
    )
}

fn criterion_2(w: &Work) -> Outcome {
    let cases = [
        (
            2,
            "pi/3",
            r#"[{"m": 1, "amplitude": 0.05}, {"m": 2, "amplitude": 0.02}]"#,
        ),
        (
            2,
            "pi/2",
            r#"[{"m": 1, "amplitude": 0.08}, {"m": 3, "amplitude": -0.01}]"#,
        ),
        (
            3,
            "pi/4",
            r#"[{"m": 1, "amplitude": -0.04}, {"m": 2, "amplitude": 0.01}]"#,
        ),
    ];
    let mut pass = true;
    let (mut worst_400, mut lo, mut hi): (f64, f64, f64) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
    for (i, (n, theta, modes)) in cases.iter().enumerate() {
        let text = format!(
            r#"{{"n": {n}, "theta": "{theta}", "ladder": [100, 200, 400, 800], "seed": {i},
 "initial": {{"perturbed_cap": {{"r": 1.0, "modes": {modes}}}}}}}"#
        );
        let cfg = w.config(&format!("c2_{i}.json"), &text);
        let spec: capflow_cli::config::MinkowskiConfig = capflow_cli::config::load(&cfg).unwrap();
        let field = capflow_cli::fields::initial_field(
            &spec.initial,
            GridSpec::axisym(*n, 100),
            spec.theta,
            spec.seed,
            None,
        )
        .unwrap();
        let curv = evaluate(&field, spec.theta).unwrap();
        let cap = RadialField::cap(field.grid().clone(), 1.0, spec.theta).unwrap();
        // convex and not a cap
        pass &= curv.min_kappa().0 > 0.0
            && field
                .phi()
                .iter()
                .zip(cap.phi())
                .any(|(a, b)| (a - b).abs() > 1e-3);

        let out = format!("c2_{i}");
        pass &= w.capflow(&[
            "minkowski-check",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            &out,
        ]) == 0;
        let rows = csv(&w.path(&format!("{out}/minkowski.csv")));
        pass &= rows.len() == 4 * n;
        for r in &rows {
            if r["n_beta"] == "400" {
                worst_400 = worst_400.max(f(r, "residual").abs());
            }
            if let Ok(order) = r["order"].parse::<f64>() {
                lo = lo.min(order);
                hi = hi.max(order);
            }
        }
    }
    pass &= worst_400 <= 1e-3 && lo >= 1.7 && hi <= 2.3;
    outcome(pass, format!("3 fields, residual at 400 ≤ {worst_400:.2e} (≤ 1e-3), orders in [{lo:.3}, {hi:.3}] (⊂ [1.7, 2.3])"))
}

fn criterion_3() -> Outcome {
    let max_rhs = |theta: f64, nb: usize| {
        let cfg = FlowConfig {
            theta,
            grid: GridSpec::axisym(2, nb),
            ..FlowConfig::default()
        };
        let g = HalfSphereGrid::shared(cfg.grid).unwrap();
        rhs(&RadialField::cap(g, 1.0, theta).unwrap(), &cfg)
            .unwrap()
            .iter()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    };
    let mut pass = true;
    let (mut at_400, mut lo, mut hi): (f64, f64, f64) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
    for theta in [FRAC_PI_3, FRAC_PI_4, FRAC_PI_6] {
        let ladder: Vec<f64> = [100, 200, 400, 800]
            .iter()
            .map(|&nb| max_rhs(theta, nb))
            .collect();
        at_400 = at_400.max(ladder[2]);
        for p in ladder.windows(2) {
            let order = (p[0] / p[1]).log2();
            lo = lo.min(order);
            hi = hi.max(order);
        }
    }
    let hemisphere = max_rhs(FRAC_PI_2, 400);
    pass &= at_400 <= 5e-4 && lo >= 1.7 && hi <= 2.3 && hemisphere <= 1e-10;
    outcome(
        pass,
        format!("θ ∈ {{π/3, π/4, π/6}}: max|∂_tφ| at 400 = {at_400:.2e} (≤ 5e-4), orders [{lo:.3}, {hi:.3}]; θ = π/2: {hemisphere:.1e}"),
    )
}

struct FlowRun {
    dir: PathBuf,
    code: i32,
    secs: f64,
    series: Table,
    summary: Value,
    header: Value,
}

fn flow_run(w: &Work, name: &str, text: &str) -> FlowRun {
    let cfg = w.config(&format!("{name}.json"), text);
    let start = Instant::now();
    let code = w.capflow(&["run", "--config", cfg.to_str().unwrap(), "--out", name]);
    let secs = start.elapsed().as_secs_f64();
    let dir = w.path(name);
    let records = report(&dir);
    FlowRun {
        series: csv(&dir.join("series.csv")),
        summary: records.last().unwrap().clone(),
        header: records[0].clone(),
        dir,
        code,
        secs,
    }
}

const AXISYM_RUN: &str = r#"{"flow": {"k": 1, "theta": "pi/3", "grid": {"n": 2, "backend": "axisym", "n_beta": 400},
 "cfl_factor": 0.5, "emit_every": 1000},
 "initial": {"perturbed_cap": {"r": 1.0, "modes": [{"m": 1, "amplitude": 0.05}]}}, "af_pairs": [[1, 0], [2, 1]]}"#;

const SPHERE2D_RUN: &str = r#"{"flow": {"k": 1, "theta": "pi/3", "grid": {"n": 2, "backend": "sphere2d", "n_beta": 96, "n_alpha": 64},
 "cfl_factor": 0.5, "emit_every": 2000},
 "initial": {"perturbed_cap": {"r": 1.0, "modes": [{"m": 1, "j": 1, "amplitude": 0.03}, {"m": 0, "j": 2, "amplitude": 0.02},
 {"m": 1, "amplitude": 0.02}]}}, "seed": 1, "af_pairs": [[1, 0], [2, 1]]}"#;

fn criterion_4(run: &FlowRun) -> Outcome {
    let v1_0 = f(&run.series[0], "V_1");
    let drift = max_by(&run.series, |r| (f(r, "V_1") - v1_0).abs() / v1_0);
    let v0: Vec<f64> = run.series.iter().map(|r| f(r, "V_0")).collect();
    let worst_step = v0
        .windows(2)
        .map(|p| (p[1] - p[0]) / p[0].abs())
        .fold(f64::INFINITY, f64::min);
    let converged = run.code == 0 && run.summary["status"] == "converged";
    let pass = converged && drift <= 1e-3 && worst_step >= -1e-8 && v0.last() > v0.first();
    outcome(
        pass,
        format!(
            "converged in {:.0} s, {} rows, max |ΔV_1|/V_1 = {drift:.2e} (≤ 1e-3), min relative ΔV_0 between rows = {worst_step:.2e} (≥ -1e-8)",
            run.secs,
            run.series.len()
        ),
    )
}

/// `(sup distance, |r_fit − r_∞|)` with `r_∞` from the first row and the closed-form cap volume.
fn cap_distance(run: &FlowRun) -> (f64, f64) {
    let r_inf = (f(&run.series[0], "V_1") / cap_volume(FRAC_PI_3)).sqrt();
    let r_fit = run.summary["r_fit"].as_f64().unwrap();
    (
        run.summary["sup_error"].as_f64().unwrap(),
        (r_fit - r_inf).abs(),
    )
}

fn criterion_5(axisym: &FlowRun, sphere: &FlowRun) -> Outcome {
    let (sup_a, r_a) = cap_distance(axisym);
    let (sup_s, r_s) = cap_distance(sphere);
    let pass = axisym.code == 0
        && sphere.code == 0
        && sphere.summary["status"] == "converged"
        && sup_a <= 1e-3
        && r_a <= 1e-3
        && sup_s <= 2e-3
        && r_s <= 2e-3;
    outcome(
        pass,
        format!(
            "axisym: sup {sup_a:.1e}, |r_fit − r_∞| {r_a:.1e} (≤ 1e-3); sphere2d 96×64 in {:.0} s: sup {sup_s:.1e}, |r_fit − r_∞| {r_s:.1e} (≤ 2e-3)",
            sphere.secs
        ),
    )
}

const POINTWISE: [&str; 5] = [
    "convexity",
    "speed_upper",
    "modified_speed_lower",
    "support_lower",
    "barrier",
];

fn criterion_6(runs: &[&FlowRun]) -> Outcome {
    let mut pass = true;
    let mut worst = f64::INFINITY;
    for run in runs {
        pass &= run.header["config"]["flow"]["tolerances"]["bounds"].as_f64() == Some(1e-8);
        pass &= run.header["config"]["flow"]["tolerances"]["monotonicity"].as_f64() == Some(1e-8);
        for m in run.summary["monitors"].as_array().unwrap() {
            pass &= m["first_violation"].is_null();
            if POINTWISE.contains(&m["kind"].as_str().unwrap()) {
                worst = worst.min(m["worst_margin"].as_f64().unwrap());
            }
        }
        for name in POINTWISE.iter().chain(&["conservation", "monotonicity"]) {
            pass &= run
                .series
                .iter()
                .all(|r| r[&format!("violated_{name}")] == "0");
        }
        pass &= run.dir.join("final_state.json").exists();
    }
    outcome(
        pass,
        format!(
            "{} runs, no monitor tripped at 1e-8 slack, worst pointwise margin {worst:.1e}",
            runs.len()
        ),
    )
}

fn criterion_7(w: &Work) -> Outcome {
    let start = Instant::now();
    let audit_code = w.capflow(&["af-check", "--out", "c7", "--seed", "7"]);
    let rows = csv(&w.path("c7/audit.csv"));
    let mut pass = audit_code == 0 && rows.len() == 200;
    let gap_cols: Vec<String> = rows[0]
        .keys()
        .filter(|k| k.starts_with("af_gap_"))
        .cloned()
        .collect();
    pass &= gap_cols.len() == 3;
    let (mut min_gap, mut recompute): (f64, f64) = (f64::INFINITY, 0.0);
    for r in &rows {
        pass &= f(r, "min_kappa") > 0.0;
        let b = cap_volume(f(r, "theta"));
        for c in &gap_cols {
            let kl: Vec<i32> = c["af_gap_".len()..]
                .split('_')
                .map(|x| x.parse().unwrap())
                .collect();
            let (k, l) = (kl[0], kl[1]);
            let oracle = f(r, &format!("V_{k}")) / b
                - (f(r, &format!("V_{l}")) / b).powf((3 - k) as f64 / (3 - l) as f64);
            recompute = recompute.max((oracle - f(r, c)).abs());
            min_gap = min_gap.min(f(r, c));
        }
        min_gap = min_gap.min(f(r, "minkowski_gap"));
    }
    let thetas: Vec<f64> = rows.iter().map(|r| f(r, "theta")).collect();
    pass &= thetas.iter().filter(|&&t| t == FRAC_PI_2).count() == 100
        && thetas.iter().filter(|&&t| t == FRAC_PI_3).count() == 100;

    let caps = w.config("c7caps.json", r#"{"exact_caps": true, "n_beta": 800}"#);
    let caps_code = w.capflow(&[
        "af-check",
        "--config",
        caps.to_str().unwrap(),
        "--out",
        "c7caps",
    ]);
    let cap_rows = csv(&w.path("c7caps/audit.csv"));
    let cap_worst = max_by(&cap_rows, |r| {
        gap_cols
            .iter()
            .map(|c| f(r, c).abs())
            .fold(f(r, "minkowski_gap").abs(), f64::max)
    });
    pass &= caps_code == 0
        && cap_rows.len() == 200
        && min_gap >= -1e-8
        && recompute <= 1e-12
        && cap_worst <= 1e-6;
    outcome(
        pass,
        format!(
            "200 samples in {:.0} s, min gap {min_gap:.2e} (≥ -1e-8), oracle recomputation {recompute:.0e}; exact caps at n_beta 800: max |gap| {cap_worst:.1e} (≤ 1e-6)",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_8(w: &Work) -> Outcome {
    let cfg = w.config(
        "c8.json",
        r#"{"flow": {"theta": "pi/3", "grid": {"n": 2, "backend": "axisym", "n_beta": 400}, "cfl_factor": 0.5},
 "initial": {"perturbed_cap": {"r": 1.0, "modes": [{"m": 2, "amplitude": 0.2}]}}, "t_stop": 0.01, "weaken": true}"#,
    );
    let code = w.capflow(&[
        "convexify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        "c8",
    ]);
    let summary = report(&w.path("c8")).pop().unwrap();
    let k0 = summary["min_kappa_initial"].as_f64().unwrap();
    let t = summary["t"].as_f64().unwrap();
    // independent evaluation of the saved surface
    let (state, config) = Checkpoint::load(&w.path("c8/convexified.json"))
        .unwrap()
        .into_state()
        .unwrap();
    let curv = evaluate(&state.field, config.theta).unwrap();
    let k1 = curv.min_kappa().0;
    let u = curv.support.iter().copied().fold(f64::INFINITY, f64::min);
    let graph = state.field.phi().iter().all(|p| p.is_finite()) && u > 0.0;
    let pass = code == 0 && k0.abs() <= 1e-8 && (t - 0.01).abs() <= 1e-12 && k1 >= 1e-3 && graph;
    outcome(
        pass,
        format!("min κ {k0:.1e} → {k1:.3} at t = {t} (≥ 1e-3), min support {u:.3} > 0"),
    )
}

fn sigma_bruteforce(kappa: &[f64], j: usize) -> f64 {
    let n = kappa.len();
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == j)
        .map(|m| {
            (0..n)
                .filter(|i| m & (1 << i) != 0)
                .map(|i| kappa[i])
                .product::<f64>()
        })
        .sum()
}

fn criterion_9() -> Outcome {
    const SAMPLES: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut fails: HashMap<&str, usize> = HashMap::new();
    let mut bad = |name: &'static str, ok: bool| {
        if !ok {
            *fails.entry(name).or_default() += 1;
        }
    };
    let mut worst_inv = f64::INFINITY;
    for _ in 0..SAMPLES {
        let n = rng.random_range(2..=6);
        let kappa: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.random_range(-2.0..1.0)))
            .collect();
        let v = CurvatureVector::new(kappa.clone()).unwrap();
        for j in 0..=n {
            let (s, b) = (v.sigma(j).unwrap(), sigma_bruteforce(&kappa, j));
            bad("brute-force σ", (s - b).abs() <= 1e-12 * b);
        }
        let h = v.normalized_all();
        for k in 2..=n {
            for l in 1..k {
                bad(
                    "Newton–MacLaurin",
                    newton_maclaurin_gap(&v, k, l).unwrap() >= -1e-12 * h[l] * h[k - 1],
                );
            }
        }
        for k in 1..=n {
            let q = QuotientFunction::new(k, n).unwrap();
            let t = q.key_inequality_terms(&v).unwrap();
            bad(
                "sandwich",
                t.lower <= t.middle * (1.0 + 1e-12) && t.middle <= t.upper * (1.0 + 1e-12),
            );
            let g = q.gradient(&v).unwrap();
            let value = q.value(&v).unwrap();
            let euler: f64 = g.iter().zip(&kappa).map(|(a, b)| a * b).sum();
            bad("Euler", (euler - value).abs() <= 1e-10 * value);
            let ordered =
                (0..n).all(|a| (0..a).all(|b| (g[a] - g[b]) * (kappa[a] - kappa[b]) <= 1e-12));
            bad(
                "concavity ordering",
                ordered && g.iter().sum::<f64>() >= 1.0 - 1e-12,
            );
        }
        // the residual scales like 1/κ, so the absolute floor is checked on [0.1, 10]
        let bounded: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.random_range(-1.0..1.0)))
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = QuotientFunction::new(rng.random_range(1..=n), n).unwrap();
        let r = q
            .inverse_concavity_residual(&CurvatureVector::new(bounded).unwrap(), &y)
            .unwrap();
        worst_inv = worst_inv.min(r);
        bad("inverse concavity", r >= -1e-6);
    }
    let pass = fails.is_empty();
    let detail = if pass {
        format!("{SAMPLES} samples, n ∈ 2..=6, all five properties hold; min inverse-concavity residual {worst_inv:.1e}")
    } else {
        format!("{SAMPLES} samples, failures: {fails:?}")
    };
    outcome(pass, detail)
}

fn criterion_10(rows: &Table) -> Outcome {
    let mut pass = true;
    let mut spread: f64 = 0.0;
    for theta in [FRAC_PI_2, FRAC_PI_3] {
        let top: Vec<f64> = rows
            .iter()
            .filter(|r| (f(r, "theta") - theta).abs() < 1e-15 && r["m"] == "3")
            .map(|r| f(r, "numeric"))
            .collect();
        pass &= top.len() == 3;
        let mean = top.iter().sum::<f64>() / top.len() as f64;
        let s = (max_by(&top, |x| **x) - top.iter().copied().fold(f64::INFINITY, f64::min)) / mean;
        spread = spread.max(s);
    }
    pass &= spread <= 1e-5;
    outcome(pass, format!("V_3 over r ∈ {{0.5, 1, 2}}, θ ∈ {{π/2, π/3}}: max relative spread {spread:.1e} (≤ 1e-5)"))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let w = Work {
        dir: tmp.path().to_path_buf(),
    };
    let mut lines = Vec::new();
    let mut record = |id: u32, name: &str, o: Outcome| {
        let line = format!(
            "criterion {id:>2} {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        println!("{line}");
        lines.push((o.pass, line));
    };

    let (c1, table) = criterion_1(&w);
    record(1, "cap quermass table", c1);
    record(2, "Minkowski identity", criterion_2(&w));
    record(3, "cap stationarity", criterion_3());
    let axisym = flow_run(&w, "c4", AXISYM_RUN);
    record(4, "conservation and monotonicity", criterion_4(&axisym));
    let sphere = flow_run(&w, "c5", SPHERE2D_RUN);
    record(5, "convergence to the cap", criterion_5(&axisym, &sphere));
    record(
        6,
        "monitors on valid runs",
        criterion_6(&[&axisym, &sphere]),
    );
    record(7, "AF and Minkowski inequality audit", criterion_7(&w));
    record(8, "convexifier", criterion_8(&w));
    record(9, "symmetric function properties", criterion_9());
    record(
        10,
        "top quermassintegral is radius-free",
        criterion_10(&table),
    );

    let failed = lines.iter().filter(|(p, _)| !p).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        lines.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
