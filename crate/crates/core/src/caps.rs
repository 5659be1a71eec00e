//! Spherical caps `C_{r,θ}`: the radius-`r` sphere centred at `r cos θ · e`,
//! `e = −e_{n+1}`, cut by the half-space. They are the stationary points of
//! the flow and the equality cases of the quermassintegral inequalities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cap_radial, check_theta, RadialField};
use crate::numerics::{adaptive_simpson, ball_volume, pairwise_sum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalCap {
    pub r: f64,
    pub theta: f64,
}

impl SphericalCap {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!(
                "cap radius {r} must be positive and finite"
            )));
        }
        Ok(Self { r, theta })
    }

    pub fn radial(&self, beta: f64) -> f64 {
        cap_radial(self.r, self.theta, beta)
    }

    /// Radius of the contact sphere `∂Σ` in the hyperplane.
    pub fn boundary_radius(&self) -> f64 {
        self.r * self.theta.sin()
    }

    pub fn quermass(&self, n: usize, m: usize) -> Result<f64> {
        cap_quermass(self, n, m)
    }
}

/// `|B_θ^{n+1}|`, the volume of `{x ∈ B^{n+1} : x_{n+1} > cos θ}`.
///
/// Integrates the `n`-ball cross sections of radius `√(1 − z²)` over
/// `z ∈ [cos θ, 1]`; for `n = 2` the closed form `π(1−c)²(2+c)/3` is used.
pub fn ball_cap_volume(n: usize, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if n < 2 {
        return Err(Error::invalid(format!("dimension n = {n} must be >= 2")));
    }
    let c = theta.cos();
    if n == 2 {
        return Ok(PI * (1.0 - c) * (1.0 - c) * (2.0 + c) / 3.0);
    }
    Ok(ball_cap_volume_quadrature(n, theta))
}

/// Quadrature value of [`ball_cap_volume`] for any `n`.
pub fn ball_cap_volume_quadrature(n: usize, theta: f64) -> f64 {
    let slice = ball_volume(n);
    // z = cos s removes the square-root endpoint at z = 1
    let f = |s: f64| slice * s.sin().powi(n as i32 + 1);
    adaptive_simpson(&f, 0.0, theta, 1e-15)
}

/// `V_m(Ĉ_{r,θ}) = |B_θ^{n+1}| r^{n+1−m}`. For `m = n + 1` the value is the
/// `r`-independent `|B_θ^{n+1}|` under the same normalization.
pub fn cap_quermass(cap: &SphericalCap, n: usize, m: usize) -> Result<f64> {
    if m > n + 1 {
        return Err(Error::IndexOutOfRange {
            index: m,
            max: n + 1,
        });
    }
    Ok(ball_cap_volume(n, cap.theta)? * cap.r.powi((n + 1 - m) as i32))
}

/// Radius of the cap with the same `V_k` as the data; the flow preserves
/// `V_k`, so this is where it should land.
pub fn predicted_limit_radius(v_k: f64, k: usize, n: usize, theta: f64) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange { index: k, max: n });
    }
    if !(v_k > 0.0) {
        return Err(Error::invalid(format!("V_{k} = {v_k} must be positive")));
    }
    let b = ball_cap_volume(n, theta)?;
    Ok((v_k / b).powf(1.0 / (n + 1 - k) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapFit {
    pub r_fit: f64,
    /// `max |ρ − ρ_cap(r_fit)|` over the nodes.
    pub sup_error: f64,
}

/// Weighted least-squares cap radius. `ρ_cap` is linear in `r`, so the
/// minimizer is `Σ w ρ g / Σ w g²` with `g = ρ_cap(1, θ, ·)`.
pub fn fit_cap(field: &RadialField, theta: f64) -> Result<CapFit> {
    check_theta(theta)?;
    let grid = field.grid();
    let na = grid.n_alpha();
    let rho = field.rho();
    if rho.iter().all(|&r| !(r > 0.0)) {
        return Err(Error::invalid("degenerate field: no positive radius"));
    }
    let shape: Vec<f64> = (0..grid.node_count())
        .map(|i| cap_radial(1.0, theta, grid.beta(i / na)))
        .collect();
    let num: Vec<f64> = (0..rho.len())
        .map(|i| grid.weight(i) * rho[i] * shape[i])
        .collect();
    let den: Vec<f64> = (0..rho.len())
        .map(|i| grid.weight(i) * shape[i] * shape[i])
        .collect();
    let r_fit = pairwise_sum(&num) / pairwise_sum(&den);
    let sup_error = rho
        .iter()
        .zip(&shape)
        .map(|(p, g)| (p - r_fit * g).abs())
        .fold(0.0, f64::max);
    Ok(CapFit { r_fit, sup_error })
}
