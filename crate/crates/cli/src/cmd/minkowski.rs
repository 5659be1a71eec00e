//! `capflow minkowski-check`: Minkowski identity residuals on a refinement
//! ladder and their observed convergence order.

use capflow::geometry::{evaluate, MAX_DIM};
use capflow::{GridSpec, HalfSphereGrid, QuermassTerms};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{self, InitialSpec, MinkowskiConfig};
use crate::output::{self, num, CsvWriter, Report};
use crate::{fields, Context, Failure, EXIT_VIOLATION};

pub const LADDER_FILE: &str = "minkowski.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub grid: GridSpec,
    /// Relative residual for `k = 1..=n`.
    pub residuals: Vec<f64>,
    /// Order against the previous level per `k`; `None` on the first level
    /// and where both residuals sit below the floor.
    pub orders: Vec<Option<f64>>,
}

pub fn grids(cfg: &MinkowskiConfig) -> Result<Vec<GridSpec>, Failure> {
    if cfg.ladder.len() < 2 {
        return Err(Failure::usage("the ladder needs at least two levels"));
    }
    if !cfg.ladder.windows(2).all(|w| w[0] < w[1]) {
        return Err(Failure::usage("ladder levels must increase"));
    }
    if !(2..=MAX_DIM).contains(&cfg.n) {
        return Err(Failure::usage(format!(
            "n = {} must lie in 2..={MAX_DIM}",
            cfg.n
        )));
    }
    let specs: Vec<GridSpec> = if cfg.n_alpha.is_empty() {
        cfg.ladder
            .iter()
            .map(|&nb| GridSpec::axisym(cfg.n, nb))
            .collect()
    } else {
        if cfg.n != 2 || cfg.n_alpha.len() != cfg.ladder.len() {
            return Err(Failure::usage(
                "n_alpha needs n = 2 and one entry per ladder level",
            ));
        }
        cfg.ladder
            .iter()
            .zip(&cfg.n_alpha)
            .map(|(&nb, &na)| GridSpec::sphere2d(nb, na))
            .collect()
    };
    for s in &specs {
        HalfSphereGrid::new(*s).map_err(|e| Failure::usage(e.to_string()))?;
    }
    Ok(specs)
}

pub fn validate(cfg: &MinkowskiConfig) -> Result<Vec<GridSpec>, Failure> {
    if let InitialSpec::File { .. } = cfg.initial {
        return Err(Failure::usage(
            "a ladder needs analytic initial data, not a file",
        ));
    }
    if !(cfg.min_order > 0.0 && cfg.floor >= 0.0) {
        return Err(Failure::usage(
            "min_order must be positive and floor nonnegative",
        ));
    }
    let specs = grids(cfg)?;
    fields::initial_field(&cfg.initial, specs[0], cfg.theta, cfg.seed, None)?;
    Ok(specs)
}

pub fn ladder(cfg: &MinkowskiConfig) -> Result<Vec<Level>, Failure> {
    let specs = validate(cfg)?;
    let residuals: Vec<Vec<f64>> = specs
        .par_iter()
        .map(|&spec| -> Result<Vec<f64>, Failure> {
            let field = fields::initial_field(&cfg.initial, spec, cfg.theta, cfg.seed, None)?;
            let terms = QuermassTerms::compute(&evaluate(&field, cfg.theta)?, &field, cfg.theta)?;
            (1..=cfg.n)
                .map(|k| terms.minkowski_residual(k).map_err(Failure::from))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let levels = specs
        .iter()
        .enumerate()
        .map(|(i, &grid)| {
            let orders = (0..cfg.n)
                .map(|k| {
                    let (cur, prev) =
                        (residuals[i][k].abs(), residuals[i.checked_sub(1)?][k].abs());
                    if cur < cfg.floor && prev < cfg.floor {
                        return None;
                    }
                    let ratio = grid.n_beta as f64 / specs[i - 1].n_beta as f64;
                    Some((prev / cur).ln() / ratio.ln())
                })
                .collect();
            Level {
                grid,
                residuals: residuals[i].clone(),
                orders,
            }
        })
        .collect();
    Ok(levels)
}

pub fn execute(ctx: &Context) -> Result<(), Failure> {
    let mut cfg: MinkowskiConfig = match &ctx.config {
        Some(path) => config::load(path)?,
        None => MinkowskiConfig::default(),
    };
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    validate(&cfg)?;
    let out = ctx.out_dir(None);
    output::create_dir(&out)?;
    let mut report = Report::create(&out, "minkowski-check", &cfg)?;
    let result = write_ladder(ctx, &cfg, &out, &mut report);
    report.close(result)
}

fn write_ladder(
    ctx: &Context,
    cfg: &MinkowskiConfig,
    out: &std::path::Path,
    report: &mut Report,
) -> Result<(), Failure> {
    let levels = ladder(cfg)?;
    let header = ["n_beta", "n_alpha", "k", "residual", "order"].map(String::from);
    let mut csv = CsvWriter::create(&out.join(LADDER_FILE), &header)?;
    for level in &levels {
        for k in 1..=cfg.n {
            csv.row(&[
                level.grid.n_beta.to_string(),
                level.grid.n_alpha.to_string(),
                k.to_string(),
                num(level.residuals[k - 1]),
                level.orders[k - 1].map(num).unwrap_or_default(),
            ])?;
        }
    }
    csv.finish()?;
    let orders: Vec<f64> = levels
        .iter()
        .flat_map(|l| l.orders.iter().flatten().copied())
        .collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let failed = orders.iter().any(|o| !(*o >= cfg.min_order));
    let code = if failed { EXIT_VIOLATION } else { 0 };
    ctx.progress(format_args!(
        "minimum order {min_order:.3} over {} measurements",
        orders.len()
    ));
    report.record(
        "summary",
        json!({
            "exit_code": code,
            "min_order": if orders.is_empty() { None } else { Some(min_order) },
            "order_test_skipped": orders.is_empty(),
            "finest_residuals": levels.last().map(|l| l.residuals.clone()),
        }),
    )?;
    if failed {
        Err(Failure::new(
            EXIT_VIOLATION,
            format!("observed order {min_order:.3} below {}", cfg.min_order),
        ))
    } else {
        Ok(())
    }
}
