//! `capflow cap-table`: numeric `V_m` of exact caps against the closed form,
//! and the log-log slopes in `r`.

use capflow::geometry::{evaluate, MAX_DIM};
use capflow::{cap_quermass, GridSpec, HalfSphereGrid, QuermassReport, RadialField, SphericalCap};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{self, parse_angle, CapTableConfig};
use crate::output::{self, num, CsvWriter, Report};
use crate::{CapTableArgs, Context, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapRow {
    pub theta: f64,
    pub r: f64,
    pub m: usize,
    pub numeric: f64,
    pub exact: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slope {
    pub theta: f64,
    pub m: usize,
    pub slope: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapTable {
    pub rows: Vec<CapRow>,
    /// Empty with fewer than two distinct radii.
    pub slopes: Vec<Slope>,
    /// `(θ, (max − min)/mean of V_{n+1} over the radii)`.
    pub top_spread: Vec<(f64, f64)>,
}

pub fn validate(cfg: &CapTableConfig) -> Result<(), Failure> {
    if !(2..=MAX_DIM).contains(&cfg.n) {
        return Err(Failure::usage(format!(
            "n = {} must lie in 2..={MAX_DIM}",
            cfg.n
        )));
    }
    if cfg.thetas.is_empty() || cfg.radii.is_empty() {
        return Err(Failure::usage("theta and radius lists must be non-empty"));
    }
    for &t in &cfg.thetas {
        SphericalCap::new(1.0, t).map_err(|e| Failure::usage(e.to_string()))?;
    }
    if let Some(r) = cfg.radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Failure::usage(format!("radius {r} must be positive")));
    }
    HalfSphereGrid::new(GridSpec::axisym(cfg.n, cfg.n_beta))
        .map_err(|e| Failure::usage(e.to_string()))?;
    Ok(())
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn compute(cfg: &CapTableConfig) -> Result<CapTable, Failure> {
    validate(cfg)?;
    let n = cfg.n;
    let grid = HalfSphereGrid::shared(GridSpec::axisym(n, cfg.n_beta))?;
    let cases: Vec<(f64, f64)> = cfg
        .thetas
        .iter()
        .flat_map(|&t| cfg.radii.iter().map(move |&r| (t, r)))
        .collect();
    let per_case: Vec<Vec<CapRow>> = cases
        .par_iter()
        .map(|&(theta, r)| -> Result<Vec<CapRow>, Failure> {
            let field = RadialField::cap(grid.clone(), r, theta)?;
            let report =
                QuermassReport::compute(&evaluate(&field, theta)?, &field, theta, 0.0, &[])?;
            let cap = SphericalCap::new(r, theta)?;
            (0..=n + 1)
                .map(|m| {
                    let exact = cap_quermass(&cap, n, m)?;
                    let numeric = report.v[m];
                    Ok(CapRow {
                        theta,
                        r,
                        m,
                        numeric,
                        exact,
                        rel_error: ((numeric - exact) / exact).abs(),
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<CapRow> = per_case.into_iter().flatten().collect();

    let mut distinct = cfg.radii.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut slopes = Vec::new();
    let mut top_spread = Vec::new();
    for &theta in &cfg.thetas {
        let of = |m: usize| {
            rows.iter()
                .filter(move |row| row.theta == theta && row.m == m)
        };
        if distinct.len() >= 2 {
            for m in 0..=n + 1 {
                let x: Vec<f64> = of(m).map(|row| row.r.ln()).collect();
                let y: Vec<f64> = of(m).map(|row| row.numeric.ln()).collect();
                slopes.push(Slope {
                    theta,
                    m,
                    slope: slope(&x, &y),
                    expected: (n + 1 - m) as f64,
                });
            }
        }
        let top: Vec<f64> = of(n + 1).map(|row| row.numeric).collect();
        let (lo, hi) = top
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        let mean = top.iter().sum::<f64>() / top.len() as f64;
        top_spread.push((theta, (hi - lo) / mean));
    }
    Ok(CapTable {
        rows,
        slopes,
        top_spread,
    })
}

fn merged_config(ctx: &Context, args: &CapTableArgs) -> Result<CapTableConfig, Failure> {
    let mut cfg = match &ctx.config {
        Some(path) => config::load(path)?,
        None => CapTableConfig::default(),
    };
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(list) = &args.thetas {
        cfg.thetas = list
            .iter()
            .map(|s| {
                parse_angle(s).ok_or_else(|| Failure::usage(format!("unrecognized angle {s:?}")))
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(radii) = &args.radii {
        cfg.radii = radii.clone();
    }
    if let Some(nb) = args.n_beta {
        cfg.n_beta = nb;
    }
    Ok(cfg)
}

pub fn execute(ctx: &Context, args: &CapTableArgs) -> Result<(), Failure> {
    let cfg = merged_config(ctx, args)?;
    validate(&cfg)?;
    let out = ctx.out_dir(None);
    output::create_dir(&out)?;
    let mut report = Report::create(&out, "cap-table", &cfg)?;
    let result = write_table(&cfg, &out, &mut report);
    report.close(result)
}

fn write_table(
    cfg: &CapTableConfig,
    out: &std::path::Path,
    report: &mut Report,
) -> Result<(), Failure> {
    let table = compute(cfg)?;
    let header = [
        "n",
        "theta",
        "r",
        "n_beta",
        "m",
        "numeric",
        "exact",
        "rel_error",
    ]
    .map(String::from);
    let mut csv = CsvWriter::create(&out.join("cap_table.csv"), &header)?;
    for row in &table.rows {
        csv.row(&[
            cfg.n.to_string(),
            num(row.theta),
            num(row.r),
            cfg.n_beta.to_string(),
            row.m.to_string(),
            num(row.numeric),
            num(row.exact),
            num(row.rel_error),
        ])?;
    }
    csv.finish()?;
    let header = ["n", "theta", "m", "slope", "expected", "abs_error"].map(String::from);
    let mut csv = CsvWriter::create(&out.join("cap_slopes.csv"), &header)?;
    for s in &table.slopes {
        csv.row(&[
            cfg.n.to_string(),
            num(s.theta),
            s.m.to_string(),
            num(s.slope),
            num(s.expected),
            num((s.slope - s.expected).abs()),
        ])?;
    }
    csv.finish()?;
    let max_rel = table.rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let max_slope = table
        .slopes
        .iter()
        .map(|s| (s.slope - s.expected).abs())
        .fold(0.0, f64::max);
    report.record(
        "summary",
        json!({
            "exit_code": 0,
            "max_rel_error": max_rel,
            "max_slope_error": if table.slopes.is_empty() { None } else { Some(max_slope) },
            "top_spread": table.top_spread,
        }),
    )
}
