//! Mean curvature flow with the same capillary fills, `∂_t φ = −(v/e^φ) n H_1`.
//! A short run turns weakly convex data strictly convex.

use crate::error::{Error, Result};
use crate::flow::config::FlowConfig;
use crate::geometry::{evaluate, CurvatureData, PolarFilter, RadialField};

/// Relative slack on `min κ ≥ 0` for the input.
pub const WEAK_CONVEXITY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ConvexifyOutcome {
    pub field: RadialField,
    pub t: f64,
    pub steps: u64,
    /// `(t, min κ)` after every step, starting at `t = 0`.
    pub min_kappa: Vec<(f64, f64)>,
}

struct McfEval {
    curv: CurvatureData,
    rhs: Vec<f64>,
    d_max: f64,
}

fn mcf_eval(field: &RadialField, theta: f64, filter: Option<&PolarFilter>) -> Result<McfEval> {
    let curv = evaluate(field, theta)?;
    let n = curv.n() as f64;
    let mut rhs = Vec::with_capacity(curv.node_count());
    let mut d_max: f64 = 0.0;
    for i in 0..curv.node_count() {
        if !(curv.support[i] > 0.0) {
            return Err(Error::numeric(
                Some(i),
                format!("graph property lost: u = {}", curv.support[i]),
            ));
        }
        let e = curv.exp_phi[i];
        rhs.push(-curv.v[i] / e * n * curv.h_at(i)[1]);
        d_max = d_max.max(n / (e * e * curv.v[i]));
    }
    if let Some(pf) = filter {
        pf.apply(&mut rhs);
    }
    if let Some(i) = rhs.iter().position(|r| !r.is_finite()) {
        return Err(Error::numeric(
            Some(i),
            "non-finite mean curvature flow derivative",
        ));
    }
    Ok(McfEval { curv, rhs, d_max })
}

/// Runs to `t_stop` and returns the final field.
pub fn convexify(initial: RadialField, config: &FlowConfig, t_stop: f64) -> Result<RadialField> {
    Ok(convexify_traced(initial, config, t_stop)?.field)
}

/// [`convexify`] with the step count and the `min κ` history.
pub fn convexify_traced(
    initial: RadialField,
    config: &FlowConfig,
    t_stop: f64,
) -> Result<ConvexifyOutcome> {
    config.validate()?;
    if !(t_stop >= 0.0 && t_stop.is_finite()) {
        return Err(Error::invalid(format!(
            "t_stop = {t_stop} must be finite and nonnegative"
        )));
    }
    let grid = initial.grid().clone();
    let filter = if config.polar_filter {
        PolarFilter::new(&grid)
    } else {
        None
    };
    let spacing = grid.effective_spacing(config.polar_filter);
    let mut initial = initial;
    if let Some(pf) = &filter {
        pf.apply(initial.phi_mut());
    }
    let mut eval = mcf_eval(&initial, config.theta, filter.as_ref())?;
    let (lo, node) = eval.curv.min_kappa();
    let scale = eval.curv.max_kappa().0.abs().max(1.0);
    if lo < -WEAK_CONVEXITY_SLACK * scale {
        return Err(Error::invalid(format!(
            "input is not weakly convex: min κ = {lo} at node {node}"
        )));
    }
    let mut field = initial;
    let mut t = 0.0;
    let mut steps = 0;
    let mut history = vec![(0.0, lo)];
    while t < t_stop {
        let dt = (config.cfl_factor * spacing * spacing / eval.d_max).min(t_stop - t);
        let phi0 = field.phi();
        let mid: Vec<f64> = phi0
            .iter()
            .zip(&eval.rhs)
            .map(|(p, r)| p + 0.5 * dt * r)
            .collect();
        let mid = mcf_eval(
            &RadialField::new(grid.clone(), mid)?,
            config.theta,
            filter.as_ref(),
        )?;
        let mut next: Vec<f64> = phi0.iter().zip(&mid.rhs).map(|(p, r)| p + dt * r).collect();
        if let Some(pf) = &filter {
            pf.apply(&mut next);
        }
        field = RadialField::new(grid.clone(), next)?;
        eval = mcf_eval(&field, config.theta, filter.as_ref())?;
        t = if t_stop - t <= dt { t_stop } else { t + dt };
        steps += 1;
        history.push((t, eval.curv.min_kappa().0));
    }
    Ok(ConvexifyOutcome {
        field,
        t,
        steps,
        min_kappa: history,
    })
}
