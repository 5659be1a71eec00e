//! `capflow run`: one flow from a config to `series.csv`, `final_state.json`
//! and `report.json`.

use std::path::Path;

use capflow::flow::{Diagnostics, Flow, FlowState, MonitorKind};
use capflow::RunStatus;
use serde_json::json;

use crate::config::{self, RunConfig};
use crate::output::{self, num, CsvWriter, Report};
use crate::{fields, mesh, Context, Failure, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_VIOLATION};

pub const SERIES_FILE: &str = "series.csv";
pub const STATE_FILE: &str = "final_state.json";
pub const MESH_FILE: &str = "final_mesh.obj";

/// Column names of `series.csv`.
pub fn series_header(n: usize, af_pairs: &[(usize, usize)]) -> Vec<String> {
    let mut h: Vec<String> = ["step", "t", "dt"].map(String::from).to_vec();
    h.extend((0..=n + 1).map(|m| format!("V_{m}")));
    h.extend(["min_F", "max_F", "min_kappa", "max_kappa", "min_ubar"].map(String::from));
    h.extend((1..=n).map(|k| format!("minkowski_residual_{k}")));
    h.extend(af_pairs.iter().map(|(k, l)| format!("af_gap_{k}_{l}")));
    h.push("max_rhs".into());
    h.extend(
        MonitorKind::ALL
            .iter()
            .map(|m| format!("violated_{}", m.name())),
    );
    h
}

fn series_row(state: &FlowState, d: &Diagnostics) -> Vec<String> {
    let mut row = vec![d.step.to_string(), num(d.t), num(d.dt)];
    row.extend(d.report.v.iter().map(|&v| num(v)));
    row.extend([d.min_f, d.max_f, d.min_kappa, d.max_kappa, d.min_ubar].map(num));
    row.extend(d.report.minkowski_residual.iter().map(|&r| num(r)));
    row.extend(d.report.af_gaps.iter().map(|g| num(g.gap)));
    row.push(num(d.max_rhs));
    row.extend(
        state
            .monitors
            .entries
            .iter()
            .map(|e| u8::from(e.violated()).to_string()),
    );
    row
}

/// Checks everything that can be checked before any file is written.
pub fn prepare(cfg: &RunConfig, base: Option<&Path>) -> Result<Flow, Failure> {
    let usage = |e: capflow::Error| Failure::usage(e.to_string());
    cfg.flow.validate().map_err(usage)?;
    let n = cfg.flow.grid.n;
    if let Some((k, l)) = cfg.af_pairs.iter().find(|(k, l)| !(l < k && *k <= n)) {
        return Err(Failure::usage(format!(
            "af pair ({k}, {l}) needs 0 <= l < k <= {n}"
        )));
    }
    if cfg.export_mesh && n != 2 {
        return Err(Failure::usage(format!(
            "export_mesh needs n = 2, the grid has n = {n}"
        )));
    }
    let field = fields::initial_field(&cfg.initial, cfg.flow.grid, cfg.flow.theta, cfg.seed, base)
        .map_err(|f| Failure::usage(f.message))?;
    let kappa = fields::min_kappa(&field, cfg.flow.theta).map_err(|f| Failure::usage(f.message))?;
    if !(kappa > 0.0) {
        return Err(Failure::usage(format!(
            "initial data is not strictly convex: min κ = {kappa:e}"
        )));
    }
    Flow::new(field, cfg.flow.clone()).map_err(usage)
}

pub fn execute(ctx: &Context) -> Result<(), Failure> {
    let path = ctx.require_config()?;
    let mut cfg: RunConfig = config::load(path)?;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    let flow = prepare(&cfg, path.parent())?;
    let out = ctx.out_dir(cfg.out.as_ref());
    output::create_dir(&out)?;
    let mut report = Report::create(&out, "run", &cfg)?;
    let result = run_flow(ctx, &cfg, flow, &out, &mut report);
    report.close(result)
}

/// Largest relative drift of `V_k` and smallest relative increment of any
/// `V_ℓ`, `ℓ < k`, over the emitted rows.
#[derive(Debug, Default)]
struct RowStats {
    first: Option<Vec<f64>>,
    prev: Option<Vec<f64>>,
    max_drift: f64,
    min_increment: f64,
}

impl RowStats {
    fn push(&mut self, v: &[f64], k: usize) {
        let first = self.first.get_or_insert_with(|| v.to_vec());
        self.max_drift = self.max_drift.max(((v[k] - first[k]) / first[k]).abs());
        if let Some(prev) = &self.prev {
            for l in 0..k {
                self.min_increment = self.min_increment.min((v[l] - prev[l]) / prev[l].abs());
            }
        }
        self.prev = Some(v.to_vec());
    }
}

fn run_flow(
    ctx: &Context,
    cfg: &RunConfig,
    mut flow: Flow,
    out: &Path,
    report: &mut Report,
) -> Result<(), Failure> {
    let n = cfg.flow.grid.n;
    let k = cfg.flow.k;
    let mut csv = CsvWriter::create(&out.join(SERIES_FILE), &series_header(n, &cfg.af_pairs))?;
    let mut write_error = None;
    let mut stats = RowStats {
        min_increment: f64::INFINITY,
        ..Default::default()
    };
    let outcome = flow.run(&cfg.af_pairs, |state, d| {
        if write_error.is_none() {
            write_error = csv.row(&series_row(state, d)).err();
        }
        stats.push(&d.report.v, k);
        ctx.progress(format_args!(
            "step {:>9}  t {:.6}  max|rhs| {:.3e}",
            d.step, d.t, d.max_rhs
        ));
    });
    csv.finish()?;
    if let Some(f) = write_error {
        return Err(f);
    }
    let checkpoint = flow.checkpoint();
    checkpoint.save(&out.join(STATE_FILE))?;
    let outcome = outcome.map_err(Failure::numeric)?;
    if cfg.export_mesh {
        let m = mesh::triangulate(&outcome.state.field, cfg.flow.theta, mesh::AXISYM_AZIMUTHS)?;
        output::write_file(&out.join(MESH_FILE), m.to_obj().as_bytes())?;
    }
    let (code, status_msg) = match outcome.status {
        RunStatus::Converged => (EXIT_OK, None),
        RunStatus::NotConverged => (
            EXIT_NOT_CONVERGED,
            Some(format!("not converged by t = {}", outcome.state.t)),
        ),
        RunStatus::MonitorAbort => {
            let names: Vec<&str> = outcome
                .monitors
                .violations()
                .map(|e| e.kind.name())
                .collect();
            (
                EXIT_VIOLATION,
                Some(format!(
                    "aborted on monitor violation: {}",
                    names.join(", ")
                )),
            )
        }
    };
    let last = &outcome.last;
    report.record(
        "summary",
        json!({
            "status": outcome.status,
            "exit_code": code,
            "t": outcome.state.t,
            "steps": outcome.state.step,
            "backend": cfg.flow.grid.backend,
            "r_fit": outcome.fit.r_fit,
            "r_predicted": outcome.r_predicted,
            "r_error": (outcome.fit.r_fit - outcome.r_predicted).abs(),
            "sup_error": outcome.fit.sup_error,
            "v_initial": outcome.initial.report.v,
            "v_final": last.report.v,
            "max_conservation_drift": stats.max_drift,
            "min_monotone_increment": stats.min_increment.is_finite().then_some(stats.min_increment),
            "af_gaps": last.report.af_gaps,
            "minkowski_residual": last.report.minkowski_residual,
            "min_kappa": last.min_kappa,
            "max_rhs": last.max_rhs,
            "monitors_passed": outcome.monitors.all_passed(),
            "monitors": outcome.monitors.entries,
        }),
    )?;
    match status_msg {
        Some(msg) => Err(Failure::new(code, msg)),
        None => Ok(()),
    }
}
