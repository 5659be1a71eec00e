use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_theta, GridSpec};

/// Slack applied to each runtime monitor, relative to the monitored scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorTolerances {
    /// Monitors (a)–(e): pinching, curvature bounds, support bounds, barriers.
    pub bounds: f64,
    /// Monitor (f): relative drift of the preserved `V_k`.
    pub conservation: f64,
    /// Monitor (g): allowed relative decrease of `V_ℓ`, `ℓ < k`, between rows.
    pub monotonicity: f64,
}

impl Default for MonitorTolerances {
    fn default() -> Self {
        Self {
            bounds: 1e-8,
            conservation: 1e-3,
            monotonicity: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Flow index: the speed uses `F = H_k / H_{k−1}`.
    pub k: usize,
    /// Contact angle in radians.
    pub theta: f64,
    pub grid: GridSpec,
    pub cfl_factor: f64,
    pub t_max: f64,
    /// Hard cap on accepted steps; reaching it counts as not converged.
    pub max_steps: u64,
    /// Threshold on `max |∂_t φ|`.
    pub steady_tol: f64,
    /// Consecutive accepted steps below `steady_tol` required for convergence.
    pub steady_window: usize,
    pub tolerances: MonitorTolerances,
    /// Steps between emitted diagnostics rows.
    pub emit_every: u64,
    /// Azimuthal filter near the pole for `sphere2d`; when off, the time step
    /// uses `min(Δβ, sin β_0 Δα)`.
    pub polar_filter: bool,
    /// Remove the constant component of `∂_t φ` that changes `V_k`; see
    /// [`crate::flow::evaluate_flow`].
    pub project_dilation: bool,
    /// Accept `cfl_factor > 0.5` (instability demonstrations only).
    pub unchecked_cfl: bool,
    pub abort_on_violation: bool,
    /// Number of initial steps taken at a reduced step size.
    pub warmup_steps: u64,
    pub warmup_factor: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            k: 1,
            theta: std::f64::consts::FRAC_PI_2,
            grid: GridSpec::axisym(2, 400),
            cfl_factor: 0.2,
            t_max: 100.0,
            max_steps: 50_000_000,
            steady_tol: 1e-7,
            steady_window: 50,
            tolerances: MonitorTolerances::default(),
            emit_every: 1000,
            polar_filter: true,
            project_dilation: true,
            unchecked_cfl: false,
            abort_on_violation: false,
            warmup_steps: 10,
            warmup_factor: 0.1,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        check_theta(self.theta)?;
        let n = self.grid.n;
        if self.k == 0 || self.k > n {
            return Err(Error::invalid(format!(
                "flow index k = {} must lie in 1..={n}",
                self.k
            )));
        }
        let cfl_ok = self.cfl_factor > 0.0 && (self.cfl_factor <= 0.5 || self.unchecked_cfl);
        if !cfl_ok || !self.cfl_factor.is_finite() {
            return Err(Error::invalid(format!(
                "cfl_factor = {} must lie in (0, 0.5]",
                self.cfl_factor
            )));
        }
        let positive = [
            ("t_max", self.t_max),
            ("steady_tol", self.steady_tol),
            ("tolerances.bounds", self.tolerances.bounds),
            ("tolerances.conservation", self.tolerances.conservation),
            ("tolerances.monotonicity", self.tolerances.monotonicity),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(Error::invalid(format!("{name} = {value} must be positive")));
            }
        }
        if self.steady_window == 0 || self.emit_every == 0 {
            return Err(Error::invalid(
                "steady_window and emit_every must be at least 1",
            ));
        }
        if !(self.warmup_factor > 0.0 && self.warmup_factor <= 1.0) {
            return Err(Error::invalid(format!(
                "warmup_factor = {} must lie in (0, 1]",
                self.warmup_factor
            )));
        }
        Ok(())
    }
}
