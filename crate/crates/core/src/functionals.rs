//! Capillary quermassintegrals and the integral identities and inequalities
//! between them.
//!
//! With `Σ` the free surface, `∂Σ` its contact sphere and `Σ̂` the wetted
//! region of the hyperplane:
//!
//! ```text
//! V_0     = |Ω̂| = 1/(n+1) ∫ u dA
//! V_1     = (|Σ| − cos θ |Σ̂|) / (n+1)
//! V_{k+1} = 1/(n+1) ∫ H_k dA − cos θ sin^k θ / (n(n+1)) ∫ H^{∂Σ}_{k−1} ds,   1 ≤ k ≤ n
//! ```
//!
//! `H^{∂Σ}_j` is normalized by `C(n−1, j)` as a hypersurface of `R^n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::caps::ball_cap_volume;
use crate::error::{Error, Result};
use crate::geometry::{boundary_trace, check_theta, Backend, CurvatureData, RadialField};
use crate::numerics::{pairwise_sum, sphere_area};

/// Geometry of the contact sphere `∂Σ` and the wetted region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    /// `|∂Σ|`.
    pub length: f64,
    /// `|Σ̂|`.
    pub wetted: f64,
    /// `∫ H^{∂Σ}_{j} ds` for `j = 0..n−1`.
    pub curvature_integrals: Vec<f64>,
    /// Smallest boundary radius.
    pub min_radius: f64,
}

/// Periodic spectral first and second derivatives of equispaced samples.
fn periodic_derivatives(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = values.len();
    let half = m / 2;
    let mut d1 = vec![0.0; m];
    let mut d2 = vec![0.0; m];
    for j in 1..=half {
        let (mut a, mut b) = (0.0, 0.0);
        for (i, &x) in values.iter().enumerate() {
            let ang = 2.0 * PI * (j * i) as f64 / m as f64;
            a += x * ang.cos();
            b += x * ang.sin();
        }
        let nyquist = 2 * j == m;
        let norm = if nyquist { 1.0 } else { 2.0 } / m as f64;
        let (a, b) = (a * norm, b * norm);
        let jf = j as f64;
        for i in 0..m {
            let ang = 2.0 * PI * (j * i) as f64 / m as f64;
            let (s, c) = ang.sin_cos();
            if !nyquist {
                d1[i] += jf * (b * c - a * s);
            }
            d2[i] -= jf * jf * (a * c + b * s);
        }
    }
    (d1, d2)
}

/// Boundary quantities from the third-order trace `R = e^{φ(π/2)}`.
pub fn boundary_data(field: &RadialField, theta: f64) -> Result<BoundaryData> {
    let grid = field.grid();
    let n = grid.n();
    let radii: Vec<f64> = boundary_trace(field, theta)?
        .into_iter()
        .map(f64::exp)
        .collect();
    let min_radius = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_radius > 0.0) || !min_radius.is_finite() {
        return Err(Error::numeric(
            None,
            format!("nonpositive boundary radius {min_radius}"),
        ));
    }
    match grid.backend() {
        Backend::Axisym => {
            let r = radii[0];
            let omega = sphere_area(n - 1);
            Ok(BoundaryData {
                length: omega * r.powi(n as i32 - 1),
                wetted: omega * r.powi(n as i32) / n as f64,
                curvature_integrals: (0..n).map(|j| omega * r.powi((n - 1 - j) as i32)).collect(),
                min_radius,
            })
        }
        Backend::Sphere2d => {
            let da = grid.delta_alpha();
            let (r1, r2) = periodic_derivatives(&radii);
            let mut ds = Vec::with_capacity(radii.len());
            let mut turning = Vec::with_capacity(radii.len());
            let mut planimeter = Vec::with_capacity(radii.len());
            for ((r, a), b) in radii.iter().zip(&r1).zip(&r2) {
                let q = r * r + a * a;
                ds.push(q.sqrt() * da);
                turning.push((r * r + 2.0 * a * a - r * b) / q * da);
                planimeter.push(0.5 * r * r * da);
            }
            let length = pairwise_sum(&ds);
            Ok(BoundaryData {
                length,
                wetted: pairwise_sum(&planimeter),
                curvature_integrals: vec![length, pairwise_sum(&turning)],
                min_radius,
            })
        }
    }
}

/// `V_0 = 1/(n+1) ∫ u dA`; the wetted face contributes nothing since
/// `⟨x, e_{n+1}⟩ = 0` there.
pub fn enclosed_volume(curv: &CurvatureData) -> Result<f64> {
    if let Some((node, &u)) = curv.support.iter().enumerate().find(|(_, u)| !(**u > 0.0)) {
        return Err(Error::NotStarShaped { node, support: u });
    }
    Ok(curv.integrate_area(&curv.support) / (curv.n() + 1) as f64)
}

/// `|Σ̂|`.
pub fn wetted_area(field: &RadialField, theta: f64) -> Result<f64> {
    Ok(boundary_data(field, theta)?.wetted)
}

/// Raw integrals from which every functional is assembled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuermassTerms {
    pub n: usize,
    pub theta: f64,
    /// `∫ u dA`.
    pub support_integral: f64,
    /// `∫ H_j dA` for `j = 0..n`; entry 0 is `|Σ|`.
    pub interior: Vec<f64>,
    /// `∫ H_j (1 + cos θ ⟨ν, e⟩) dA` for `j = 0..n`.
    pub weighted: Vec<f64>,
    /// `∫ H_j u dA` for `j = 0..n`.
    pub support_weighted: Vec<f64>,
    pub boundary: BoundaryData,
}

impl QuermassTerms {
    pub fn compute(curv: &CurvatureData, field: &RadialField, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        let n = curv.n();
        let c = theta.cos();
        let count = curv.node_count();
        let mut interior = Vec::with_capacity(n + 1);
        let mut weighted = Vec::with_capacity(n + 1);
        let mut support_weighted = Vec::with_capacity(n + 1);
        let mut buf = vec![0.0; count];
        for j in 0..=n {
            let hj = curv.h_column(j);
            interior.push(curv.integrate_area(&hj));
            for i in 0..count {
                buf[i] = hj[i] * (1.0 - c * curv.tilt[i]);
            }
            weighted.push(curv.integrate_area(&buf));
            for i in 0..count {
                buf[i] = hj[i] * curv.support[i];
            }
            support_weighted.push(curv.integrate_area(&buf));
        }
        Ok(Self {
            n,
            theta,
            support_integral: curv.integrate_area(&curv.support),
            interior,
            weighted,
            support_weighted,
            boundary: boundary_data(field, theta)?,
        })
    }

    /// `V_0 .. V_{n+1}`.
    pub fn quermass_vector(&self) -> Vec<f64> {
        let n = self.n;
        let np1 = (n + 1) as f64;
        let (s, c) = self.theta.sin_cos();
        let mut v = Vec::with_capacity(n + 2);
        v.push(self.support_integral / np1);
        v.push((self.interior[0] - c * self.boundary.wetted) / np1);
        for k in 1..=n {
            let boundary =
                c * s.powi(k as i32) / (n as f64 * np1) * self.boundary.curvature_integrals[k - 1];
            v.push(self.interior[k] / np1 - boundary);
        }
        v
    }

    /// Relative defect of `∫ H_{k−1}(1 + cos θ ⟨ν,e⟩) dA = ∫ H_k u dA`.
    pub fn minkowski_residual(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.n {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: self.n,
            });
        }
        let den = self.support_weighted[k];
        if den == 0.0 || !den.is_finite() {
            return Err(Error::numeric(None, "vanishing Minkowski denominator"));
        }
        Ok((self.weighted[k - 1] - den) / den)
    }
}

/// One requested Alexandrov–Fenchel pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfGap {
    pub k: usize,
    pub l: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuermassReport {
    pub t: f64,
    pub n: usize,
    pub theta: f64,
    /// `V_0 .. V_{n+1}`.
    pub v: Vec<f64>,
    pub area: f64,
    pub wetted: f64,
    pub boundary_length: f64,
    /// `∫ H^{∂Σ}_{k−1} ds` for `k = 1..n`.
    pub boundary_terms: Vec<f64>,
    /// `∫ H dA` with `H = n H_1`.
    pub total_mean_curvature: f64,
    /// Relative Minkowski residual for `k = 1..n`.
    pub minkowski_residual: Vec<f64>,
    pub af_gaps: Vec<AfGap>,
    /// `|B_θ^{n+1}|`.
    pub ball_cap_volume: f64,
}

impl QuermassReport {
    pub fn from_terms(terms: &QuermassTerms, t: f64, af_pairs: &[(usize, usize)]) -> Result<Self> {
        let n = terms.n;
        let mut report = Self {
            t,
            n,
            theta: terms.theta,
            v: terms.quermass_vector(),
            area: terms.interior[0],
            wetted: terms.boundary.wetted,
            boundary_length: terms.boundary.length,
            boundary_terms: terms.boundary.curvature_integrals.clone(),
            total_mean_curvature: n as f64 * terms.interior[1],
            minkowski_residual: (1..=n)
                .map(|k| terms.minkowski_residual(k))
                .collect::<Result<_>>()?,
            af_gaps: Vec::with_capacity(af_pairs.len()),
            ball_cap_volume: ball_cap_volume(n, terms.theta)?,
        };
        for &(k, l) in af_pairs {
            let gap = af_gap(&report, k, l)?;
            report.af_gaps.push(AfGap { k, l, gap });
        }
        Ok(report)
    }

    pub fn compute(
        curv: &CurvatureData,
        field: &RadialField,
        theta: f64,
        t: f64,
        af_pairs: &[(usize, usize)],
    ) -> Result<Self> {
        Self::from_terms(&QuermassTerms::compute(curv, field, theta)?, t, af_pairs)
    }
}

/// `V_m` for a single index.
pub fn quermass(curv: &CurvatureData, field: &RadialField, theta: f64, m: usize) -> Result<f64> {
    let n = curv.n();
    if m > n + 1 {
        return Err(Error::IndexOutOfRange {
            index: m,
            max: n + 1,
        });
    }
    if m == 0 {
        return enclosed_volume(curv);
    }
    Ok(QuermassTerms::compute(curv, field, theta)?.quermass_vector()[m])
}

/// Relative Minkowski residual for one `k`.
pub fn minkowski_residual(
    curv: &CurvatureData,
    field: &RadialField,
    theta: f64,
    k: usize,
) -> Result<f64> {
    QuermassTerms::compute(curv, field, theta)?.minkowski_residual(k)
}

/// `V_k/|B_θ| − (V_ℓ/|B_θ|)^{(n+1−k)/(n+1−ℓ)}`, nonnegative on convex
/// capillary hypersurfaces and zero on caps.
pub fn af_gap(report: &QuermassReport, k: usize, l: usize) -> Result<f64> {
    let n = report.n;
    if !(l < k && k <= n) {
        return Err(Error::invalid(format!(
            "AF pair requires 0 <= l < k <= n, got (k, l) = ({k}, {l})"
        )));
    }
    let b = report.ball_cap_volume;
    let vl = report.v[l];
    if !(vl > 0.0) {
        return Err(Error::invalid(format!("V_{l} = {vl} must be positive")));
    }
    let exponent = (n + 1 - k) as f64 / (n + 1 - l) as f64;
    Ok(report.v[k] / b - (vl / b).powf(exponent))
}

/// `∫ H dA − n (n+1)^{1/n} |B_θ|^{1/n} (|Σ| − cos θ |Σ̂|)^{(n−1)/n} − cos θ sin θ |∂Σ|`.
pub fn minkowski_inequality_gap(report: &QuermassReport) -> f64 {
    let n = report.n as f64;
    let (s, c) = report.theta.sin_cos();
    let area_term = (report.area - c * report.wetted).max(0.0);
    report.total_mean_curvature
        - n * (n + 1.0).powf(1.0 / n)
            * report.ball_cap_volume.powf(1.0 / n)
            * area_term.powf((n - 1.0) / n)
        - c * s * report.boundary_length
}
