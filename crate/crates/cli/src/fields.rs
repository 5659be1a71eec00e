//! Initial data: caps, seeded perturbations of caps and checkpoints.

use std::f64::consts::TAU;
use std::path::Path;
use std::sync::Arc;

use capflow::flow::Checkpoint;
use capflow::geometry::evaluate;
use capflow::{cap_radial, Backend, GridSpec, HalfSphereGrid, RadialField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{InitialSpec, Mode};
use crate::Failure;

/// Bisection steps when scaling a perturbation to the convexity threshold.
const BISECTION_STEPS: usize = 60;

/// One phase per mode, uniform in `[0, 2π)`.
pub fn phases(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| TAU * rng.random::<f64>()).collect()
}

/// `ln ρ_cap + ln(1 + s Σ a w_j sin^j β cos(2mβ) cos(jα + ψ))` with `w_0 = 1`
/// and `w_j = cos²β` otherwise, so every mode meets the contact line with
/// the cap's boundary slope.
pub fn perturbed_cap(
    grid: Arc<HalfSphereGrid>,
    theta: f64,
    r: f64,
    modes: &[Mode],
    phases: &[f64],
    scale: f64,
) -> Result<RadialField, Failure> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Failure::usage(format!("cap radius {r} must be positive")));
    }
    if grid.backend() == Backend::Axisym {
        if let Some(m) = modes.iter().find(|m| m.j != 0) {
            return Err(Failure::usage(format!(
                "azimuthal mode j = {} needs the sphere2d grid",
                m.j
            )));
        }
    }
    if let Some(m) = modes.iter().find(|m| !m.amplitude.is_finite()) {
        return Err(Failure::usage(format!(
            "mode amplitude {} is not finite",
            m.amplitude
        )));
    }
    let bad = std::cell::Cell::new(None);
    let field = RadialField::from_fn(grid, |b, a| {
        let (s, c) = b.sin_cos();
        let bump: f64 = modes
            .iter()
            .zip(phases)
            .map(|(m, psi)| {
                // cos²β keeps ∂_α φ and ∂_β φ of the cap at the contact line
                let edge = if m.j == 0 { 1.0 } else { c * c };
                m.amplitude
                    * edge
                    * s.powi(m.j as i32)
                    * (2.0 * m.m as f64 * b).cos()
                    * (m.j as f64 * a + psi).cos()
            })
            .sum();
        let factor = 1.0 + scale * bump;
        if !(factor > 0.0) {
            bad.set(Some(b));
        }
        cap_radial(r, theta, b).ln() + factor.ln()
    });
    if let Some(b) = bad.get() {
        return Err(Failure::usage(format!(
            "perturbation makes the radius nonpositive at β = {b}"
        )));
    }
    Ok(field?)
}

pub fn min_kappa(field: &RadialField, theta: f64) -> Result<f64, Failure> {
    Ok(evaluate(field, theta)?.min_kappa().0)
}

/// Largest `s ∈ [0, 1]` with `min κ ≥ 0` for `build(s)`, assuming `build(0)`
/// is strictly convex. Returns 1 when `build(1)` already is.
pub fn weak_convexity_scale(
    build: impl Fn(f64) -> Result<RadialField, Failure>,
    theta: f64,
) -> Result<f64, Failure> {
    if min_kappa(&build(1.0)?, theta)? >= 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        // a failed evaluation counts as non-convex
        let convex = build(mid)
            .and_then(|f| min_kappa(&f, theta))
            .is_ok_and(|k| k >= 0.0);
        if convex {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// The field described by `spec` on `grid`. Perturbation phases come from
/// `seed`; checkpoint paths resolve against `base`.
pub fn initial_field(
    spec: &InitialSpec,
    grid: GridSpec,
    theta: f64,
    seed: u64,
    base: Option<&Path>,
) -> Result<RadialField, Failure> {
    match spec {
        InitialSpec::Cap { r } => Ok(RadialField::cap(HalfSphereGrid::shared(grid)?, *r, theta)?),
        InitialSpec::PerturbedCap { r, modes } => {
            let phases = phases(seed, modes.len());
            perturbed_cap(
                HalfSphereGrid::shared(grid)?,
                theta,
                *r,
                modes,
                &phases,
                1.0,
            )
        }
        InitialSpec::File { path } => {
            let path = match base {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            let (state, config) = Checkpoint::load(&path)?.into_state()?;
            if config.grid != grid {
                return Err(Failure::usage(format!(
                    "{} holds a {:?} field, the config asks for {:?}",
                    path.display(),
                    config.grid,
                    grid
                )));
            }
            Ok(state.field)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn phases_are_seeded() {
        assert_eq!(phases(7, 4), phases(7, 4));
        assert_ne!(phases(7, 4), phases(8, 4));
        assert!(phases(1, 100).iter().all(|p| (0.0..TAU).contains(p)));
    }

    #[test]
    fn zero_scale_is_the_cap() {
        let g = HalfSphereGrid::shared(GridSpec::sphere2d(16, 8)).unwrap();
        let modes = [Mode {
            m: 1,
            j: 2,
            amplitude: 0.3,
        }];
        let p = perturbed_cap(g.clone(), FRAC_PI_3, 1.5, &modes, &[0.4], 0.0).unwrap();
        assert_eq!(p, RadialField::cap(g, 1.5, FRAC_PI_3).unwrap());
    }

    #[test]
    fn rejects_azimuthal_modes_on_axisym_grids() {
        let g = HalfSphereGrid::shared(GridSpec::axisym(2, 16)).unwrap();
        let modes = [Mode {
            m: 1,
            j: 1,
            amplitude: 0.01,
        }];
        assert_eq!(
            perturbed_cap(g, FRAC_PI_3, 1.0, &modes, &[0.0], 1.0)
                .unwrap_err()
                .code,
            2
        );
    }

    #[test]
    fn weak_scale_lands_on_the_threshold() {
        let g = HalfSphereGrid::shared(GridSpec::axisym(2, 100)).unwrap();
        let modes = [Mode {
            m: 2,
            j: 0,
            amplitude: 0.5,
        }];
        let build = |s| perturbed_cap(g.clone(), FRAC_PI_3, 1.0, &modes, &[0.0], s);
        let s = weak_convexity_scale(build, FRAC_PI_3).unwrap();
        assert!(s > 0.0 && s < 1.0);
        let at = min_kappa(&build(s).unwrap(), FRAC_PI_3).unwrap();
        let above = min_kappa(&build(s * (1.0 + 1e-9)).unwrap(), FRAC_PI_3).unwrap();
        assert!(at >= 0.0 && at < 1e-8, "{at}");
        assert!(above < 0.0);
    }
}
