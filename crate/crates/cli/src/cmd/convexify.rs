//! `capflow convexify`: mean curvature flow of weakly convex data for a short
//! time, saved as a checkpoint that `run` and `export-mesh` accept.

use std::path::Path;

use capflow::flow::convexify::WEAK_CONVEXITY_SLACK;
use capflow::flow::{convexify_traced, Flow};
use capflow::geometry::evaluate;
use capflow::RadialField;
use serde_json::json;

use crate::config::{self, ConvexifyConfig, InitialSpec};
use crate::fields::{self, perturbed_cap, weak_convexity_scale};
use crate::output::{self, num, CsvWriter, Report};
use crate::{Context, Failure, EXIT_NUMERIC};

pub const STATE_FILE: &str = "convexified.json";
pub const HISTORY_FILE: &str = "convexify.csv";

/// The initial field and the perturbation scale applied to it.
pub fn prepare(cfg: &ConvexifyConfig, base: Option<&Path>) -> Result<(RadialField, f64), Failure> {
    let usage = |f: Failure| Failure::usage(f.message);
    cfg.flow
        .validate()
        .map_err(|e| Failure::usage(e.to_string()))?;
    if !(cfg.t_stop >= 0.0 && cfg.t_stop.is_finite()) {
        return Err(Failure::usage(format!(
            "t_stop = {} must be finite and nonnegative",
            cfg.t_stop
        )));
    }
    let theta = cfg.flow.theta;
    let (field, scale) = match (&cfg.initial, cfg.weaken) {
        (InitialSpec::PerturbedCap { r, modes }, true) => {
            let grid = capflow::HalfSphereGrid::shared(cfg.flow.grid)?;
            let phases = fields::phases(cfg.seed, modes.len());
            let build = |s| perturbed_cap(grid.clone(), theta, *r, modes, &phases, s);
            let s = weak_convexity_scale(build, theta).map_err(usage)?;
            (build(s).map_err(usage)?, s)
        }
        (_, true) => return Err(Failure::usage("weaken needs perturbed_cap initial data")),
        (spec, false) => (
            fields::initial_field(spec, cfg.flow.grid, theta, cfg.seed, base).map_err(usage)?,
            1.0,
        ),
    };
    let curv = evaluate(&field, theta).map_err(|e| Failure::usage(e.to_string()))?;
    let (lo, hi) = (curv.min_kappa().0, curv.max_kappa().0);
    if lo < -WEAK_CONVEXITY_SLACK * hi.abs().max(1.0) {
        return Err(Failure::usage(format!(
            "initial data is not weakly convex: min κ = {lo:e}"
        )));
    }
    Ok((field, scale))
}

pub fn execute(ctx: &Context) -> Result<(), Failure> {
    let path = ctx.require_config()?;
    let mut cfg: ConvexifyConfig = config::load(path)?;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    let (field, scale) = prepare(&cfg, path.parent())?;
    let out = ctx.out_dir(None);
    output::create_dir(&out)?;
    let mut report = Report::create(&out, "convexify", &cfg)?;
    let result = evolve(ctx, &cfg, field, scale, &out, &mut report);
    report.close(result)
}

fn evolve(
    ctx: &Context,
    cfg: &ConvexifyConfig,
    field: RadialField,
    scale: f64,
    out: &Path,
    report: &mut Report,
) -> Result<(), Failure> {
    let traced = convexify_traced(field, &cfg.flow, cfg.t_stop).map_err(Failure::numeric)?;
    let header = ["step", "t", "min_kappa"].map(String::from);
    let mut csv = CsvWriter::create(&out.join(HISTORY_FILE), &header)?;
    for (step, &(t, k)) in traced.min_kappa.iter().enumerate() {
        csv.row(&[step.to_string(), num(t), num(k)])?;
    }
    csv.finish()?;
    let curv = evaluate(&traced.field, cfg.flow.theta).map_err(Failure::numeric)?;
    let min_kappa = curv.min_kappa().0;
    let min_support = curv.support.iter().copied().fold(f64::INFINITY, f64::min);
    ctx.progress(format_args!(
        "t = {} after {} steps, min κ = {min_kappa:e}",
        traced.t, traced.steps
    ));
    let strict = min_kappa > 0.0;
    if strict {
        // the checkpoint carries a flow baseline, which needs strict convexity
        let flow = Flow::new(traced.field, cfg.flow.clone()).map_err(Failure::numeric)?;
        flow.checkpoint().save(&out.join(STATE_FILE))?;
    }
    let code = if strict { 0 } else { EXIT_NUMERIC };
    report.record(
        "summary",
        json!({
            "exit_code": code,
            "t": traced.t,
            "steps": traced.steps,
            "scale": scale,
            "min_kappa_initial": traced.min_kappa[0].1,
            "min_kappa": min_kappa,
            "min_support": min_support,
        }),
    )?;
    if strict {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_NUMERIC,
            format!(
                "still not strictly convex at t = {}: min κ = {min_kappa:e}",
                traced.t
            ),
        ))
    }
}
