//! `capflow af-check`: Alexandrov–Fenchel and Minkowski inequality gaps on
//! seeded random convex capillary surfaces.
//!
//! A sample is a cap of random radius times `1 + Σ c_m cos(2mβ)`, where
//! `c_m` is uniform in `[−1/m², 1/m²]` and the vector is then rescaled to a
//! random norm. When that is not convex the
//! perturbation is scaled down to the convexity threshold and the mean
//! curvature flow makes it strictly convex.

use capflow::flow::convexify;
use capflow::functionals::minkowski_inequality_gap;
use capflow::geometry::{evaluate, MAX_DIM};
use capflow::{FlowConfig, GridSpec, HalfSphereGrid, QuermassReport, RadialField, SphericalCap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{self, AfCheckConfig, Mode};
use crate::fields::{self, perturbed_cap, weak_convexity_scale};
use crate::output::{self, num, CsvWriter, Report};
use crate::{Context, Failure, EXIT_VIOLATION};

pub const AUDIT_FILE: &str = "audit.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub theta: f64,
    pub index: usize,
    pub r: f64,
    /// Norm of the perturbation coefficients.
    pub amplitude: f64,
    /// Factor applied to reach the convexity threshold, 1 if not needed.
    pub scale: f64,
    pub convexified: bool,
    pub min_kappa: f64,
    pub v: Vec<f64>,
    pub af_gaps: Vec<f64>,
    /// Minkowski inequality gap divided by `∫ H dA`.
    pub minkowski_gap: f64,
}

pub fn pairs(cfg: &AfCheckConfig) -> Vec<(usize, usize)> {
    cfg.af_pairs.clone().unwrap_or_else(|| {
        (1..=cfg.n)
            .flat_map(|k| (0..k).map(move |l| (k, l)))
            .collect()
    })
}

pub fn validate(cfg: &AfCheckConfig) -> Result<(), Failure> {
    let bad = |msg: String| Err(Failure::usage(msg));
    if !(2..=MAX_DIM).contains(&cfg.n) {
        return bad(format!("n = {} must lie in 2..={MAX_DIM}", cfg.n));
    }
    if cfg.thetas.is_empty() || cfg.samples == 0 || cfg.modes == 0 {
        return bad("thetas, samples and modes must be non-empty".into());
    }
    for &t in &cfg.thetas {
        SphericalCap::new(1.0, t).map_err(|e| Failure::usage(e.to_string()))?;
    }
    let (a0, a1) = cfg.amplitude;
    if !(0.0 <= a0 && a0 <= a1 && a1 < 1.0 / (cfg.modes as f64).sqrt()) {
        return bad(format!(
            "amplitude range {:?} must satisfy 0 <= lo <= hi < 1/sqrt(modes)",
            cfg.amplitude
        ));
    }
    let (r0, r1) = cfg.radius;
    if !(0.0 < r0 && r0 <= r1 && r1.is_finite()) {
        return bad(format!(
            "radius range {:?} must satisfy 0 < lo <= hi",
            cfg.radius
        ));
    }
    if let Some((k, l)) = pairs(cfg)
        .into_iter()
        .find(|&(k, l)| !(l < k && k <= cfg.n))
    {
        return bad(format!("af pair ({k}, {l}) needs 0 <= l < k <= {}", cfg.n));
    }
    let positive = [cfg.cap_tolerance, cfg.violation_tolerance, cfg.cfl_factor];
    if positive.iter().any(|x| !(*x > 0.0)) || !(cfg.convexify_t >= 0.0) || cfg.cfl_factor > 0.5 {
        return bad("tolerances must be positive, cfl_factor in (0, 0.5], convexify_t >= 0".into());
    }
    HalfSphereGrid::new(GridSpec::axisym(cfg.n, cfg.n_beta))
        .map_err(|e| Failure::usage(e.to_string()))?;
    Ok(())
}

/// Independent stream per `(angle, sample)`.
fn rng_for(seed: u64, angle: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((angle as u64) << 32) | index as u64);
    rng
}

pub fn audit_sample(cfg: &AfCheckConfig, angle: usize, index: usize) -> Result<Sample, Failure> {
    let theta = cfg.thetas[angle];
    let mut rng = rng_for(cfg.seed, angle, index);
    let r = cfg.radius.0 + (cfg.radius.1 - cfg.radius.0) * rng.random::<f64>();
    let mut coeffs: Vec<f64> = (1..=cfg.modes)
        .map(|m| (2.0 * rng.random::<f64>() - 1.0) / (m * m) as f64)
        .collect();
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let amplitude = cfg.amplitude.0 + (cfg.amplitude.1 - cfg.amplitude.0) * rng.random::<f64>();
    coeffs.iter_mut().for_each(|c| *c *= amplitude / norm);
    let modes: Vec<Mode> = coeffs
        .iter()
        .zip(1..)
        .map(|(&a, m)| Mode {
            m,
            j: 0,
            amplitude: a,
        })
        .collect();
    let zeros = vec![0.0; modes.len()];

    let spec = GridSpec::axisym(cfg.n, cfg.n_beta);
    let grid = HalfSphereGrid::shared(spec)?;
    let build = |s: f64| perturbed_cap(grid.clone(), theta, r, &modes, &zeros, s);
    let (field, scale, convexified) = if cfg.exact_caps {
        (RadialField::cap(grid.clone(), r, theta)?, 0.0, false)
    } else if fields::min_kappa(&build(1.0)?, theta)? > 0.0 {
        (build(1.0)?, 1.0, false)
    } else {
        let s = weak_convexity_scale(build, theta)?;
        let flow = FlowConfig {
            theta,
            grid: spec,
            cfl_factor: cfg.cfl_factor,
            ..FlowConfig::default()
        };
        (convexify(build(s)?, &flow, cfg.convexify_t)?, s, true)
    };
    let curv = evaluate(&field, theta)?;
    let min_kappa = curv.min_kappa().0;
    if !(min_kappa > 0.0) {
        return Err(Failure::new(
            crate::EXIT_NUMERIC,
            format!("sample {index} at θ = {theta} is not strictly convex: min κ = {min_kappa:e}"),
        ));
    }
    let report = QuermassReport::compute(&curv, &field, theta, 0.0, &pairs(cfg))?;
    Ok(Sample {
        theta,
        index,
        r,
        amplitude: if cfg.exact_caps { 0.0 } else { amplitude },
        scale,
        convexified,
        min_kappa,
        af_gaps: report.af_gaps.iter().map(|g| g.gap).collect(),
        minkowski_gap: minkowski_inequality_gap(&report) / report.total_mean_curvature,
        v: report.v,
    })
}

/// Every sample, in `(angle, index)` order whatever the thread count.
pub fn audit(cfg: &AfCheckConfig) -> Result<Vec<Sample>, Failure> {
    validate(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.thetas.len())
        .flat_map(|a| (0..cfg.samples).map(move |i| (a, i)))
        .collect();
    jobs.par_iter()
        .map(|&(a, i)| audit_sample(cfg, a, i))
        .collect()
}

/// Whether a sample breaks the audit: any gap below `−violation_tolerance`,
/// or for exact caps any gap beyond `cap_tolerance` in absolute value.
pub fn violates(cfg: &AfCheckConfig, s: &Sample) -> bool {
    let gaps = s.af_gaps.iter().chain(std::iter::once(&s.minkowski_gap));
    if cfg.exact_caps {
        gaps.clone().any(|g| !(g.abs() <= cfg.cap_tolerance))
    } else {
        gaps.clone().any(|g| !(*g >= -cfg.violation_tolerance))
    }
}

pub fn execute(ctx: &Context) -> Result<(), Failure> {
    let mut cfg: AfCheckConfig = match &ctx.config {
        Some(path) => config::load(path)?,
        None => AfCheckConfig::default(),
    };
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    validate(&cfg)?;
    let out = ctx.out_dir(None);
    output::create_dir(&out)?;
    let mut report = Report::create(&out, "af-check", &cfg)?;
    let result = write_audit(ctx, &cfg, &out, &mut report);
    report.close(result)
}

fn write_audit(
    ctx: &Context,
    cfg: &AfCheckConfig,
    out: &std::path::Path,
    report: &mut Report,
) -> Result<(), Failure> {
    let pairs = pairs(cfg);
    let samples = audit(cfg)?;
    let mut header: Vec<String> = [
        "theta",
        "sample",
        "r",
        "amplitude",
        "scale",
        "convexified",
        "min_kappa",
    ]
    .map(String::from)
    .to_vec();
    header.extend((0..=cfg.n + 1).map(|m| format!("V_{m}")));
    header.extend(pairs.iter().map(|(k, l)| format!("af_gap_{k}_{l}")));
    header.push("minkowski_gap".into());
    let mut csv = CsvWriter::create(&out.join(AUDIT_FILE), &header)?;
    for s in &samples {
        let mut row = vec![
            num(s.theta),
            s.index.to_string(),
            num(s.r),
            num(s.amplitude),
            num(s.scale),
            u8::from(s.convexified).to_string(),
            num(s.min_kappa),
        ];
        row.extend(s.v.iter().map(|&v| num(v)));
        row.extend(s.af_gaps.iter().map(|&g| num(g)));
        row.push(num(s.minkowski_gap));
        csv.row(&row)?;
    }
    csv.finish()?;
    let min_gap = |i: usize| {
        samples
            .iter()
            .map(|s| s.af_gaps[i])
            .fold(f64::INFINITY, f64::min)
    };
    let min_gaps: Vec<_> = pairs
        .iter()
        .enumerate()
        .map(|(i, &(k, l))| json!({"k": k, "l": l, "min_gap": min_gap(i)}))
        .collect();
    let max_abs = samples
        .iter()
        .flat_map(|s| s.af_gaps.iter().chain([&s.minkowski_gap]))
        .fold(0.0_f64, |m, g| m.max(g.abs()));
    let violations: Vec<_> = samples
        .iter()
        .filter(|s| violates(cfg, s))
        .map(|s| (s.theta, s.index))
        .collect();
    let code = if violations.is_empty() {
        0
    } else {
        EXIT_VIOLATION
    };
    ctx.progress(format_args!(
        "{} samples, {} convexified, {} violations",
        samples.len(),
        samples.iter().filter(|s| s.convexified).count(),
        violations.len()
    ));
    report.record(
        "summary",
        json!({
            "exit_code": code,
            "samples": samples.len(),
            "convexified": samples.iter().filter(|s| s.convexified).count(),
            "min_af_gaps": min_gaps,
            "min_minkowski_gap": samples.iter().map(|s| s.minkowski_gap).fold(f64::INFINITY, f64::min),
            "max_abs_gap": max_abs,
            "violations": violations,
        }),
    )?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_VIOLATION,
            format!("{} samples violate the audit", violations.len()),
        ))
    }
}
