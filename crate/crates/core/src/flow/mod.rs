//! Explicit integration of the scalar flow
//!
//! ```text
//! ∂_t φ = (v / e^φ) 𝓕,    𝓕 = (1 + cos θ ⟨ν, e⟩) / F − u,    F = H_k / H_{k−1},
//! ```
//!
//! on the radial-graph representation, with the capillary ghost fill at the
//! equator. Steps are explicit midpoint with a diffusive step bound; a step
//! that leaves `Γ_k^+` or produces non-finite values is retried at half the
//! size.

pub mod checkpoint;
pub mod config;
pub mod convexify;
pub mod monitor;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use checkpoint::Checkpoint;
pub use config::{FlowConfig, MonitorTolerances};
pub use convexify::{convexify, convexify_traced, ConvexifyOutcome};
pub use monitor::{MonitorBaseline, MonitorEntry, MonitorKind, MonitorReport, NodeSample};

use crate::caps::{fit_cap, predicted_limit_radius, CapFit};
use crate::error::{Error, Result};
use crate::functionals::QuermassReport;
use crate::geometry::{
    cap_radial, evaluate, CurvatureData, HalfSphereGrid, PolarFilter, RadialField, MAX_DIM,
};
use crate::numerics::binomial;
use crate::symfun::QuotientFunction;

/// Retries with a halved step before a step is declared a numeric failure.
pub const MAX_HALVINGS: u32 = 20;

/// `F = H_k / H_{k−1}` per node; fails at the first node outside `Γ_k^+`.
pub fn quotient_values(curv: &CurvatureData, k: usize) -> Result<Vec<f64>> {
    (0..curv.node_count())
        .map(|i| {
            let h = curv.h_at(i);
            if h[1..=k].iter().all(|&x| x > 0.0) {
                Ok(h[k] / h[k - 1])
            } else {
                Err(Error::numeric(
                    Some(i),
                    format!("curvature left Γ_{k}^+: κ = {:?}", curv.kappa_at(i)),
                ))
            }
        })
        .collect()
}

/// Normal speed `𝓕 = (1 + cos θ ⟨ν, e⟩)/F − u` with `⟨ν, e⟩ = −tilt`.
pub fn speed(curv: &CurvatureData, k: usize, theta: f64) -> Result<Vec<f64>> {
    let f = quotient_values(curv, k)?;
    let c = theta.cos();
    Ok((0..curv.node_count())
        .map(|i| (1.0 - c * curv.tilt[i]) / f[i] - curv.support[i])
        .collect())
}

/// Everything a step needs from one field.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub curv: CurvatureData,
    pub f: Vec<f64>,
    pub speed: Vec<f64>,
    /// `∂_t φ` as integrated: polar-filtered and projected when configured.
    pub rhs: Vec<f64>,
    /// Constant removed from `∂_t φ` by the dilation projection.
    pub lambda: f64,
    /// Bound on the coefficient of the principal part.
    pub d_max: f64,
    pub max_rhs: f64,
}

impl Evaluation {
    /// Monitor inputs; `unit_cap[ring]` is the unit cap's `ρ` on that ring.
    pub fn samples(&self, unit_cap: &[f64], theta: f64) -> Vec<NodeSample> {
        let c = theta.cos();
        let na = self.curv.grid().n_alpha();
        (0..self.curv.node_count())
            .map(|i| NodeSample {
                kappa_min: self.curv.kappa[i * self.curv.n()],
                f: self.f[i],
                ubar: self.curv.support[i] / (1.0 - c * self.curv.tilt[i]),
                rho: self.curv.exp_phi[i],
                unit_cap: unit_cap[i / na],
            })
            .collect()
    }
}

/// `ρ` of the unit cap on every ring.
pub fn unit_cap_table(grid: &HalfSphereGrid, theta: f64) -> Vec<f64> {
    grid.betas()
        .iter()
        .map(|&b| cap_radial(1.0, theta, b))
        .collect()
}

/// `∂_t φ` and the step-size data for `field`.
///
/// With `project_dilation` the multiple of `1` that changes `V_k` at first
/// order is removed: `λ = ∫ H_k u ∂_tφ dA / ∫ H_k u dA`. Shifting `φ` by a
/// constant is a dilation, which leaves `∂_t φ` unchanged, so the discrete
/// system otherwise has no exact rest state and creeps along the cap family
/// at a rate set by the truncation error. `λ` vanishes identically for the
/// exact flow.
pub fn evaluate_flow(
    field: &RadialField,
    config: &FlowConfig,
    filter: Option<&PolarFilter>,
) -> Result<Evaluation> {
    let curv = evaluate(field, config.theta)?;
    let n = curv.n();
    let k = config.k;
    let q = QuotientFunction::new(k, n)?;
    let c = config.theta.cos();
    let binom: Vec<f64> = (0..=n).map(|j| binomial(n, j)).collect();
    let mut sig = [0.0; MAX_DIM + 1];
    let count = curv.node_count();
    let mut f = Vec::with_capacity(count);
    let mut spd = Vec::with_capacity(count);
    let mut rhs = Vec::with_capacity(count);
    let mut d_max: f64 = 0.0;
    for i in 0..count {
        let h = curv.h_at(i);
        if !h[1..=k].iter().all(|&x| x > 0.0) {
            return Err(Error::numeric(
                Some(i),
                format!("curvature left Γ_{k}^+: κ = {:?}", curv.kappa_at(i)),
            ));
        }
        let fi = if k == 1 { h[1] } else { h[k] / h[k - 1] };
        let inv_f = 1.0 / fi;
        let bracket = 1.0 - c * curv.tilt[i];
        let s = bracket * inv_f - curv.support[i];
        f.push(fi);
        spd.push(s);
        rhs.push(s / curv.support[i]);
        for (j, hj) in h.iter().enumerate() {
            sig[j] = hj * binom[j];
        }
        let trace = q.gradient_trace_from_sigmas(&sig[..=n]);
        let e = curv.exp_phi[i];
        d_max = d_max.max(bracket * trace * inv_f * inv_f / (e * e * curv.v[i]));
    }
    if let Some(pf) = filter {
        pf.apply(&mut rhs);
    }
    let mut lambda = 0.0;
    if config.project_dilation {
        let weight: Vec<f64> = (0..count)
            .map(|i| curv.h_at(i)[k] * curv.support[i])
            .collect();
        let moved: Vec<f64> = weight.iter().zip(&rhs).map(|(w, r)| w * r).collect();
        lambda = curv.integrate_area(&moved) / curv.integrate_area(&weight);
        for r in rhs.iter_mut() {
            *r -= lambda;
        }
    }
    let mut max_rhs: f64 = 0.0;
    for (i, r) in rhs.iter().enumerate() {
        if !r.is_finite() {
            return Err(Error::numeric(Some(i), "non-finite time derivative"));
        }
        max_rhs = max_rhs.max(r.abs());
    }
    if !(d_max > 0.0 && d_max.is_finite()) {
        return Err(Error::numeric(
            None,
            format!("invalid diffusion bound {d_max}"),
        ));
    }
    Ok(Evaluation {
        curv,
        f,
        speed: spd,
        rhs,
        lambda,
        d_max,
        max_rhs,
    })
}

/// `∂_t φ` only.
pub fn rhs(field: &RadialField, config: &FlowConfig) -> Result<Vec<f64>> {
    let filter = filter_for(field.grid(), config);
    Ok(evaluate_flow(field, config, filter.as_ref())?.rhs)
}

fn filter_for(grid: &HalfSphereGrid, config: &FlowConfig) -> Option<PolarFilter> {
    if config.polar_filter {
        PolarFilter::new(grid)
    } else {
        None
    }
}

/// Scalar diagnostics of one field, recomputed on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub step: u64,
    pub dt: f64,
    pub report: QuermassReport,
    pub min_f: f64,
    pub max_f: f64,
    pub min_kappa: f64,
    pub max_kappa: f64,
    pub min_ubar: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub max_rhs: f64,
}

/// Time, field and monitor state; the unit of checkpointing.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub step: u64,
    pub dt_last: f64,
    pub steady_count: usize,
    pub field: RadialField,
    pub baseline: MonitorBaseline,
    pub monitors: MonitorReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    NotConverged,
    MonitorAbort,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub state: FlowState,
    pub initial: Diagnostics,
    pub last: Diagnostics,
    pub monitors: MonitorReport,
    /// Cap fitted to the final field.
    pub fit: CapFit,
    /// Radius predicted from the preserved `V_k` of the initial data.
    pub r_predicted: f64,
}

/// A running flow: state plus the evaluation of its current field.
#[derive(Debug, Clone)]
pub struct Flow {
    config: FlowConfig,
    state: FlowState,
    eval: Evaluation,
    filter: Option<PolarFilter>,
    spacing: f64,
    unit_cap: Vec<f64>,
}

impl Flow {
    pub fn new(initial: RadialField, config: FlowConfig) -> Result<Self> {
        config.validate()?;
        if initial.grid().spec() != HalfSphereGrid::new(config.grid)?.spec() {
            return Err(Error::invalid(
                "initial field grid differs from the configured grid",
            ));
        }
        let filter = filter_for(initial.grid(), &config);
        // modes removed from ∂_t φ would otherwise stay frozen in φ
        let mut initial = initial;
        if let Some(pf) = &filter {
            pf.apply(initial.phi_mut());
        }
        let eval = evaluate_flow(&initial, &config, filter.as_ref())?;
        let unit_cap = unit_cap_table(initial.grid(), config.theta);
        let samples = eval.samples(&unit_cap, config.theta);
        if let Some(i) = (0..eval.curv.node_count()).find(|&i| !(eval.curv.kappa_at(i)[0] > 0.0)) {
            return Err(Error::invalid(format!(
                "initial data must be strictly convex; κ = {:?} at node {i}",
                eval.curv.kappa_at(i)
            )));
        }
        let report = QuermassReport::compute(&eval.curv, &initial, config.theta, 0.0, &[])?;
        let baseline = MonitorBaseline::measure(&samples, config.k, config.theta, &report.v)?;
        let mut monitors = MonitorReport::new(&config.tolerances);
        baseline.check_pointwise(&mut monitors, &samples, 0.0);
        let steady_count = usize::from(eval.max_rhs < config.steady_tol);
        let state = FlowState {
            t: 0.0,
            step: 0,
            dt_last: 0.0,
            steady_count,
            field: initial,
            baseline,
            monitors,
        };
        let spacing = state.field.grid().effective_spacing(config.polar_filter);
        Ok(Self {
            config,
            state,
            eval,
            filter,
            spacing,
            unit_cap,
        })
    }

    /// Continues from a saved state. Stepping is bit-identical to the
    /// uninterrupted run.
    pub fn resume(state: FlowState, config: FlowConfig) -> Result<Self> {
        config.validate()?;
        let filter = filter_for(state.field.grid(), &config);
        let eval = evaluate_flow(&state.field, &config, filter.as_ref())?;
        let spacing = state.field.grid().effective_spacing(config.polar_filter);
        let unit_cap = unit_cap_table(state.field.grid(), config.theta);
        Ok(Self {
            config,
            state,
            eval,
            filter,
            spacing,
            unit_cap,
        })
    }

    pub fn from_checkpoint(cp: Checkpoint) -> Result<Self> {
        let (state, config) = cp.into_state()?;
        Self::resume(state, config)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::from_state(&self.state, &self.config)
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn state(&self) -> &FlowState {
        &self.state
    }

    pub fn into_state(self) -> FlowState {
        self.state
    }

    pub fn evaluation(&self) -> &Evaluation {
        &self.eval
    }

    pub fn is_steady(&self) -> bool {
        self.state.steady_count >= self.config.steady_window
    }

    /// Step size bound at the current field.
    pub fn stable_dt(&self) -> f64 {
        let dt = self.config.cfl_factor * self.spacing * self.spacing / self.eval.d_max;
        if self.state.step < self.config.warmup_steps {
            dt * self.config.warmup_factor
        } else {
            dt
        }
    }

    /// One accepted explicit midpoint step; updates the pointwise monitors.
    pub fn step(&mut self) -> Result<f64> {
        let mut dt = self.stable_dt();
        let phi0 = self.state.field.phi().to_vec();
        let grid = self.state.field.grid().clone();
        let mut last_err = None;
        for _ in 0..=MAX_HALVINGS {
            match self.try_step(&grid, &phi0, dt) {
                Ok((field, eval)) => {
                    self.accept(field, eval, dt);
                    return Ok(dt);
                }
                Err(e) => {
                    last_err = Some(e);
                    dt *= 0.5;
                }
            }
        }
        let (node, reason) = match last_err {
            Some(Error::NumericFailure { node, reason }) => (node, reason),
            Some(other) => (None, other.to_string()),
            None => (None, String::new()),
        };
        Err(Error::numeric(
            node,
            format!(
                "step rejected {} times at t = {}: {reason}",
                MAX_HALVINGS + 1,
                self.state.t
            ),
        ))
    }

    fn try_step(
        &self,
        grid: &Arc<HalfSphereGrid>,
        phi0: &[f64],
        dt: f64,
    ) -> Result<(RadialField, Evaluation)> {
        let k1 = &self.eval.rhs;
        let mid: Vec<f64> = phi0.iter().zip(k1).map(|(p, r)| p + 0.5 * dt * r).collect();
        let mid = RadialField::new(grid.clone(), mid)?;
        let k2 = evaluate_flow(&mid, &self.config, self.filter.as_ref())?;
        let mut next: Vec<f64> = phi0.iter().zip(&k2.rhs).map(|(p, r)| p + dt * r).collect();
        if let Some(pf) = &self.filter {
            pf.apply(&mut next);
        }
        let next = RadialField::new(grid.clone(), next)?;
        let eval = evaluate_flow(&next, &self.config, self.filter.as_ref())?;
        Ok((next, eval))
    }

    fn accept(&mut self, field: RadialField, eval: Evaluation, dt: f64) {
        let s = &mut self.state;
        s.t += dt;
        s.step += 1;
        s.dt_last = dt;
        s.field = field;
        s.steady_count = if eval.max_rhs < self.config.steady_tol {
            s.steady_count + 1
        } else {
            0
        };
        self.eval = eval;
        let samples = self.eval.samples(&self.unit_cap, self.config.theta);
        s.baseline.check_pointwise(&mut s.monitors, &samples, s.t);
    }

    /// Fresh diagnostics of the current field.
    pub fn diagnostics(&self, af_pairs: &[(usize, usize)]) -> Result<Diagnostics> {
        let s = &self.state;
        let curv = &self.eval.curv;
        let report = QuermassReport::compute(curv, &s.field, self.config.theta, s.t, af_pairs)?;
        let samples = self.eval.samples(&self.unit_cap, self.config.theta);
        let fold = |f: &dyn Fn(&NodeSample) -> f64| {
            samples
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                })
        };
        let (min_f, max_f) = fold(&|x| x.f);
        let (min_rho, max_rho) = fold(&|x| x.rho);
        let (min_ubar, _) = fold(&|x| x.ubar);
        Ok(Diagnostics {
            t: s.t,
            step: s.step,
            dt: s.dt_last,
            report,
            min_f,
            max_f,
            min_kappa: curv.min_kappa().0,
            max_kappa: curv.max_kappa().0,
            min_ubar,
            min_rho,
            max_rho,
            max_rhs: self.eval.max_rhs,
        })
    }

    /// Diagnostics for an emitted row, updating the row monitors.
    pub fn emit(&mut self, af_pairs: &[(usize, usize)]) -> Result<Diagnostics> {
        let d = self.diagnostics(af_pairs)?;
        let s = &mut self.state;
        s.baseline.check_row(&mut s.monitors, &d.report.v, s.t);
        Ok(d)
    }

    fn should_abort(&self) -> bool {
        self.config.abort_on_violation && !self.state.monitors.all_passed()
    }

    /// Steps until steady, `t_max`, `max_steps` or an aborting violation.
    /// `on_row` sees every emitted row, including the first and the last.
    pub fn run(
        &mut self,
        af_pairs: &[(usize, usize)],
        mut on_row: impl FnMut(&FlowState, &Diagnostics),
    ) -> Result<RunOutcome> {
        let initial = self.emit(af_pairs)?;
        on_row(&self.state, &initial);
        let mut last = initial.clone();
        let mut last_emitted = self.state.step;
        let status = loop {
            if self.is_steady() {
                break RunStatus::Converged;
            }
            if self.should_abort() {
                break RunStatus::MonitorAbort;
            }
            if self.state.t >= self.config.t_max || self.state.step >= self.config.max_steps {
                break RunStatus::NotConverged;
            }
            self.step()?;
            if self.state.step % self.config.emit_every == 0 {
                last = self.emit(af_pairs)?;
                last_emitted = self.state.step;
                on_row(&self.state, &last);
            }
        };
        if last_emitted != self.state.step {
            last = self.emit(af_pairs)?;
            on_row(&self.state, &last);
        }
        let status = if status == RunStatus::Converged && self.should_abort() {
            RunStatus::MonitorAbort
        } else {
            status
        };
        let fit = fit_cap(&self.state.field, self.config.theta)?;
        let k = self.config.k;
        let r_predicted = predicted_limit_radius(
            self.state.baseline.v_initial[k],
            k,
            self.config.grid.n,
            self.config.theta,
        )?;
        Ok(RunOutcome {
            status,
            state: self.state.clone(),
            initial,
            last,
            monitors: self.state.monitors.clone(),
            fit,
            r_predicted,
        })
    }
}

/// One step from `state`, without the caller holding a [`Flow`].
pub fn step(state: &FlowState, config: &FlowConfig) -> Result<FlowState> {
    let mut flow = Flow::resume(state.clone(), config.clone())?;
    flow.step()?;
    Ok(flow.into_state())
}

/// Runs `initial` to a steady cap, or until `t_max`.
pub fn run_to_steady(initial: RadialField, config: &FlowConfig) -> Result<RunOutcome> {
    Flow::new(initial, config.clone())?.run(&[], |_, _| {})
}

/// Same as [`run_to_steady`] with a row observer.
pub fn run_to_steady_with(
    initial: RadialField,
    config: &FlowConfig,
    af_pairs: &[(usize, usize)],
    on_row: impl FnMut(&FlowState, &Diagnostics),
) -> Result<RunOutcome> {
    Flow::new(initial, config.clone())?.run(af_pairs, on_row)
}
