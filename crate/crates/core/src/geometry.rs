//! Radial graphs over the upper half-sphere.
//!
//! A surface is stored as `φ = log r` sampled on a cell-centred grid in the
//! polar angle `β ∈ (0, π/2)` (and the azimuth `α` for the two-dimensional
//! backend). The pole and the equator `β = π/2` are cell faces; one ghost
//! layer beyond each is filled from the interior before differencing. At the
//! equator the ghost encodes the capillary condition
//! `∂_β φ = cos θ · √(1 + |∇φ|²)`.
//!
//! All derivative data is expressed in the orthonormal frame
//! `(e_β, e_α̂ = ∂_α / sin β)` of the round metric.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{binomial, pairwise_sum, sphere_area};
use crate::symfun::sigma_all_into;

/// Largest supported ambient hypersurface dimension.
pub const MAX_DIM: usize = 16;

/// Allowed azimuthal spread for [`restrict_axisym`].
pub const AXISYM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Rotationally symmetric fields, `φ = φ(β)`, any `n ≥ 2`.
    Axisym,
    /// Full `(β, α)` grid, `n = 2` only.
    Sphere2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub backend: Backend,
    pub n_beta: usize,
    #[serde(default)]
    pub n_alpha: usize,
}

impl GridSpec {
    pub fn axisym(n: usize, n_beta: usize) -> Self {
        Self {
            n,
            backend: Backend::Axisym,
            n_beta,
            n_alpha: 0,
        }
    }

    pub fn sphere2d(n_beta: usize, n_alpha: usize) -> Self {
        Self {
            n: 2,
            backend: Backend::Sphere2d,
            n_beta,
            n_alpha,
        }
    }
}

/// Cell-centred grid on the closed upper half-sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSphereGrid {
    spec: GridSpec,
    delta_beta: f64,
    delta_alpha: f64,
    beta: Vec<f64>,
    sin_beta: Vec<f64>,
    cos_beta: Vec<f64>,
    cot_beta: Vec<f64>,
    /// Quadrature weight of each node of ring `i`.
    ring_weight: Vec<f64>,
    node_weight: Vec<f64>,
}

impl HalfSphereGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let GridSpec {
            n,
            backend,
            n_beta,
            n_alpha,
        } = spec;
        if n < 2 || n > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension n = {n} must lie in 2..={MAX_DIM}"
            )));
        }
        if n_beta < 16 {
            return Err(Error::InvalidGrid(format!(
                "n_beta = {n_beta} must be >= 16"
            )));
        }
        let spec = match backend {
            Backend::Axisym => GridSpec { n_alpha: 1, ..spec },
            Backend::Sphere2d => {
                if n != 2 {
                    return Err(Error::InvalidGrid(format!(
                        "sphere2d requires n = 2, got {n}"
                    )));
                }
                if n_alpha < 8 || n_alpha % 2 != 0 {
                    return Err(Error::InvalidGrid(format!(
                        "sphere2d requires an even n_alpha >= 8, got {n_alpha}"
                    )));
                }
                spec
            }
        };
        let delta_beta = FRAC_PI_2 / n_beta as f64;
        let delta_alpha = match backend {
            Backend::Axisym => 2.0 * PI,
            Backend::Sphere2d => 2.0 * PI / n_alpha as f64,
        };
        let beta: Vec<f64> = (0..n_beta).map(|i| (i as f64 + 0.5) * delta_beta).collect();
        let sin_beta: Vec<f64> = beta.iter().map(|b| b.sin()).collect();
        let cos_beta: Vec<f64> = beta.iter().map(|b| b.cos()).collect();
        let cot_beta = cos_beta.iter().zip(&sin_beta).map(|(c, s)| c / s).collect();
        let ring_weight = sin_beta
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let base = match backend {
                    Backend::Axisym => delta_beta * s.powi(n as i32 - 1) * sphere_area(n - 1),
                    Backend::Sphere2d => delta_beta * delta_alpha * s,
                };
                base * end_correction(i, n_beta)
            })
            .collect::<Vec<f64>>();
        let node_weight = ring_weight
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w, spec.n_alpha))
            .collect();
        Ok(Self {
            spec,
            delta_beta,
            delta_alpha,
            beta,
            sin_beta,
            cos_beta,
            cot_beta,
            ring_weight,
            node_weight,
        })
    }

    pub fn shared(spec: GridSpec) -> Result<Arc<Self>> {
        Self::new(spec).map(Arc::new)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn backend(&self) -> Backend {
        self.spec.backend
    }

    pub fn n_beta(&self) -> usize {
        self.spec.n_beta
    }

    /// Nodes per ring; 1 for the axisymmetric backend.
    pub fn n_alpha(&self) -> usize {
        self.spec.n_alpha
    }

    pub fn delta_beta(&self) -> f64 {
        self.delta_beta
    }

    pub fn delta_alpha(&self) -> f64 {
        self.delta_alpha
    }

    pub fn node_count(&self) -> usize {
        self.spec.n_beta * self.spec.n_alpha
    }

    pub fn beta(&self, ring: usize) -> f64 {
        self.beta[ring]
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn sin_beta(&self, ring: usize) -> f64 {
        self.sin_beta[ring]
    }

    pub fn cos_beta(&self, ring: usize) -> f64 {
        self.cos_beta[ring]
    }

    pub fn alpha(&self, j: usize) -> f64 {
        match self.spec.backend {
            Backend::Axisym => 0.0,
            Backend::Sphere2d => j as f64 * self.delta_alpha,
        }
    }

    /// Ring index of a node.
    pub fn ring_of(&self, node: usize) -> usize {
        node / self.spec.n_alpha
    }

    /// Quadrature weight of `node`: end-corrected midpoint rule in `β` with
    /// the exact `sin^{n-1} β` factor (times `|S^{n-1}|` when axisymmetric).
    pub fn weight(&self, node: usize) -> f64 {
        self.node_weight[node]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.node_weight.clone()
    }

    /// `∫ f dσ` over the half-sphere from per-node samples.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.node_count());
        let terms: Vec<f64> = values
            .iter()
            .zip(&self.node_weight)
            .map(|(v, w)| v * w)
            .collect();
        pairwise_sum(&terms)
    }

    /// Effective spacing used in the diffusive time-step bound.
    pub fn effective_spacing(&self, polar_filter: bool) -> f64 {
        match self.spec.backend {
            Backend::Axisym => self.delta_beta,
            Backend::Sphere2d if polar_filter => self.delta_beta.min(self.delta_alpha),
            Backend::Sphere2d => self.delta_beta.min(self.sin_beta[0] * self.delta_alpha),
        }
    }
}

/// Midpoint weights with the Euler–Maclaurin end term `h²/24 [f′]` estimated
/// by one-sided three-point differences; fourth order, all factors positive.
fn end_correction(i: usize, n_beta: usize) -> f64 {
    const ENDS: [f64; 3] = [1.0 + 2.0 / 24.0, 1.0 - 3.0 / 24.0, 1.0 + 1.0 / 24.0];
    let from_end = i.min(n_beta - 1 - i);
    if from_end < 3 {
        ENDS[from_end]
    } else {
        1.0
    }
}

/// Positive root of `|x − r cos θ e| = r` along the ray at polar angle `β`,
/// with `e = −e_{n+1}`.
pub fn cap_radial(r: f64, theta: f64, beta: f64) -> f64 {
    let c = theta.cos();
    let s = beta.sin();
    r * ((1.0 - c * c * s * s).sqrt() - c * beta.cos())
}

/// `d/dβ` of [`cap_radial`].
pub fn cap_radial_derivative(r: f64, theta: f64, beta: f64) -> f64 {
    let c = theta.cos();
    let (s, cb) = beta.sin_cos();
    r * (-c * c * s * cb / (1.0 - c * c * s * s).sqrt() + c * s)
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 && theta <= FRAC_PI_2 + 1e-14 {
        Ok(())
    } else {
        Err(Error::UnsupportedAngle(theta))
    }
}

/// `φ = log r` sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<HalfSphereGrid>,
    phi: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<HalfSphereGrid>, phi: Vec<f64>) -> Result<Self> {
        if phi.len() != grid.node_count() {
            return Err(Error::invalid(format!(
                "field has {} values, grid has {} nodes",
                phi.len(),
                grid.node_count()
            )));
        }
        if let Some(i) = phi.iter().position(|x| !x.is_finite()) {
            return Err(Error::numeric(Some(i), "non-finite radial function"));
        }
        Ok(Self { grid, phi })
    }

    /// Samples `φ(β, α)` at every node.
    pub fn from_fn(grid: Arc<HalfSphereGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let na = grid.n_alpha();
        let phi = (0..grid.node_count())
            .map(|node| f(grid.beta(node / na), grid.alpha(node % na)))
            .collect();
        Self::new(grid, phi)
    }

    /// The spherical cap `C_{r,θ}`.
    pub fn cap(grid: Arc<HalfSphereGrid>, r: f64, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        if !(r > 0.0) {
            return Err(Error::invalid(format!("cap radius {r} must be positive")));
        }
        Self::from_fn(grid, |b, _| cap_radial(r, theta, b).ln())
    }

    pub fn grid(&self) -> &Arc<HalfSphereGrid> {
        &self.grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn phi_mut(&mut self) -> &mut [f64] {
        &mut self.phi
    }

    pub fn into_phi(self) -> Vec<f64> {
        self.phi
    }

    /// `r = e^φ` per node.
    pub fn rho(&self) -> Vec<f64> {
        self.phi.iter().map(|p| p.exp()).collect()
    }

    /// Multiplies the radial function by `λ > 0`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let shift = lambda.ln();
        Self {
            grid: self.grid.clone(),
            phi: self.phi.iter().map(|p| p + shift).collect(),
        }
    }
}

/// Ghost ring at the pole: even reflection (axisymmetric) or the antipodal
/// azimuth `α + π` (two-dimensional).
pub fn apply_pole_bc(field: &RadialField) -> Vec<f64> {
    let na = field.grid.n_alpha();
    let half = na / 2;
    (0..na)
        .map(|j| match field.grid.backend() {
            Backend::Axisym => field.phi[0],
            Backend::Sphere2d => field.phi[(j + half) % na],
        })
        .collect()
}

/// Unique positive root `∂_β φ = cos θ √(1 + s²) / sin θ` of the oblique
/// condition `∂_β φ = cos θ √(1 + (∂_β φ)² + s²)`, where `s` is the
/// tangential slope along the boundary.
pub fn capillary_slope(theta: f64, tangential: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    c * (1.0 + tangential * tangential).sqrt() / s
}

/// Tangential slopes `∂_α̂ φ` extrapolated to the equator face, per column.
fn boundary_tangential_slopes(field: &RadialField) -> Vec<f64> {
    let grid = &field.grid;
    let na = grid.n_alpha();
    if grid.backend() == Backend::Axisym {
        return vec![0.0];
    }
    let nb = grid.n_beta();
    let da = grid.delta_alpha();
    let slope = |ring: usize, j: usize| {
        let row = &field.phi[ring * na..(ring + 1) * na];
        (row[(j + 1) % na] - row[(j + na - 1) % na]) / (2.0 * da) / grid.sin_beta(ring)
    };
    (0..na)
        .map(|j| 1.5 * slope(nb - 1, j) - 0.5 * slope(nb - 2, j))
        .collect()
}

/// Cubic through the last three ring values whose slope at the face is `d`.
/// Returns `(ghost, face value)`; both are fourth-order accurate.
#[inline]
fn equator_cubic(p1: f64, p2: f64, p3: f64, h: f64, d: f64) -> (f64, f64) {
    // p(x) = a + b x + c x² + e x³ with x = (β − π/2)/h, nodes at −½, −3⁄2, −5⁄2
    let b = h * d;
    let e = 4.0 / 23.0 * (b - 2.0 * p1 + 3.0 * p2 - p3);
    let c = 0.5 * (b + 3.25 * e - p1 + p2);
    let a = p1 + 0.5 * b - 0.25 * c + 0.125 * e;
    (p1 + b + 0.25 * e, a)
}

fn equator_reconstruction(field: &RadialField, theta: f64) -> Result<Vec<(f64, f64)>> {
    check_theta(theta)?;
    let grid = &field.grid;
    let na = grid.n_alpha();
    let nb = grid.n_beta();
    let h = grid.delta_beta();
    let at = |ring: usize, j: usize| field.phi[ring * na + j];
    Ok(boundary_tangential_slopes(field)
        .into_iter()
        .enumerate()
        .map(|(j, s)| {
            equator_cubic(
                at(nb - 1, j),
                at(nb - 2, j),
                at(nb - 3, j),
                h,
                capillary_slope(theta, s),
            )
        })
        .collect())
}

/// Ghost ring beyond `β = π/2` from the cubic reconstruction that takes the
/// capillary slope at the face. Constant columns are mirrored exactly.
pub fn apply_capillary_bc(field: &RadialField, theta: f64) -> Result<Vec<f64>> {
    Ok(equator_reconstruction(field, theta)?
        .into_iter()
        .map(|(g, _)| g)
        .collect())
}

/// Field values with one ghost ring on each side, row-major by ring.
#[derive(Debug, Clone)]
pub struct GhostedField {
    n_alpha: usize,
    values: Vec<f64>,
}

impl GhostedField {
    /// Value at ring `ring` (−1 and `n_beta` are ghosts) and azimuth index `j`.
    #[inline]
    pub fn at(&self, ring: isize, j: usize) -> f64 {
        self.values[(ring + 1) as usize * self.n_alpha + j]
    }
}

pub fn fill_ghosts(field: &RadialField, theta: f64) -> Result<GhostedField> {
    let na = field.grid.n_alpha();
    let mut values = Vec::with_capacity(field.phi.len() + 2 * na);
    values.extend(apply_pole_bc(field));
    values.extend_from_slice(&field.phi);
    values.extend(apply_capillary_bc(field, theta)?);
    Ok(GhostedField {
        n_alpha: na,
        values,
    })
}

/// `φ` at the equator face per column.
pub fn boundary_trace(field: &RadialField, theta: f64) -> Result<Vec<f64>> {
    Ok(equator_reconstruction(field, theta)?
        .into_iter()
        .map(|(_, a)| a)
        .collect())
}

/// Derivative data of `φ` at one node, orthonormal frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeJet {
    pub phi: f64,
    pub exp_phi: f64,
    pub d_beta: f64,
    pub d_alpha: f64,
    pub h_bb: f64,
    pub h_ba: f64,
    /// Azimuthal diagonal entry; for the axisymmetric backend this is every
    /// one of the `n − 1` angular directions.
    pub h_aa: f64,
    pub v: f64,
}

#[derive(Debug, Clone)]
pub struct SurfaceJet {
    grid: Arc<HalfSphereGrid>,
    nodes: Vec<NodeJet>,
}

impl SurfaceJet {
    pub fn grid(&self) -> &Arc<HalfSphereGrid> {
        &self.grid
    }

    pub fn nodes(&self) -> &[NodeJet] {
        &self.nodes
    }
}

/// Second-order centred differences with ghosts filled for contact angle `theta`.
pub fn jet(field: &RadialField, theta: f64) -> Result<SurfaceJet> {
    let g = fill_ghosts(field, theta)?;
    let grid = field.grid.clone();
    let na = grid.n_alpha();
    let hb = grid.delta_beta();
    let ha = grid.delta_alpha();
    let mut nodes = Vec::with_capacity(grid.node_count());
    for i in 0..grid.n_beta() {
        let ii = i as isize;
        let sin_b = grid.sin_beta(i);
        let cot_b = grid.cot_beta[i];
        for j in 0..na {
            let phi = g.at(ii, j);
            let up = g.at(ii + 1, j);
            let dn = g.at(ii - 1, j);
            let pb = (up - dn) / (2.0 * hb);
            let pbb = (up - 2.0 * phi + dn) / (hb * hb);
            let node = match grid.backend() {
                Backend::Axisym => NodeJet {
                    phi,
                    exp_phi: phi.exp(),
                    d_beta: pb,
                    d_alpha: 0.0,
                    h_bb: pbb,
                    h_ba: 0.0,
                    h_aa: cot_b * pb,
                    v: (1.0 + pb * pb).sqrt(),
                },
                Backend::Sphere2d => {
                    let jp = (j + 1) % na;
                    let jm = (j + na - 1) % na;
                    let pa = (g.at(ii, jp) - g.at(ii, jm)) / (2.0 * ha);
                    let paa = (g.at(ii, jp) - 2.0 * phi + g.at(ii, jm)) / (ha * ha);
                    let pba = (g.at(ii + 1, jp) - g.at(ii + 1, jm) - g.at(ii - 1, jp)
                        + g.at(ii - 1, jm))
                        / (4.0 * hb * ha);
                    let d_alpha = pa / sin_b;
                    NodeJet {
                        phi,
                        exp_phi: phi.exp(),
                        d_beta: pb,
                        d_alpha,
                        h_bb: pbb,
                        h_ba: (pba - cot_b * pa) / sin_b,
                        h_aa: paa / (sin_b * sin_b) + cot_b * pb,
                        v: (1.0 + pb * pb + d_alpha * d_alpha).sqrt(),
                    }
                }
            };
            nodes.push(node);
        }
    }
    Ok(SurfaceJet { grid, nodes })
}

/// Eigen-decomposition of the pencil `h w = κ g w`.
#[derive(Debug, Clone)]
pub struct PencilSolution {
    /// Ascending.
    pub kappa: Vec<f64>,
    /// Column `i` pairs with `kappa[i]`.
    pub vectors: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

/// Principal curvatures of a radial graph from the gradient `grad` and the
/// covariant Hessian `hess` (orthonormal frame) by the symmetric pencil
/// `h_{ij} = e^φ/v (δ + φ_iφ_j − φ_ij)`, `g_{ij} = e^{2φ}(δ + φ_iφ_j)`.
pub fn pencil_curvatures(phi: f64, grad: &[f64], hess: &DMatrix<f64>) -> Result<PencilSolution> {
    let n = grad.len();
    let p = DMatrix::from_column_slice(n, 1, grad);
    let base = DMatrix::identity(n, n) + &p * p.transpose();
    let v = (1.0 + grad.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let e = phi.exp();
    let g = &base * (e * e);
    let h = (&base - hess) * (e / v);
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numeric(None, "metric is not positive definite"))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::numeric(None, "singular metric factor"))?;
    let c = &l_inv * &h * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let kappa: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if kappa.iter().any(|k| !k.is_finite()) {
        return Err(Error::numeric(None, "non-finite principal curvature"));
    }
    let y = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let vectors = l_inv.transpose() * y;
    Ok(PencilSolution {
        kappa,
        vectors,
        h,
        g,
    })
}

/// Eigenvalues (ascending) of the 2×2 pencil `(A − S) w = λ A w` with
/// `A = I + p pᵀ`, by Cholesky reduction.
#[inline]
fn pencil2(p: [f64; 2], s: [f64; 3]) -> [f64; 2] {
    let a11 = 1.0 + p[0] * p[0];
    let a12 = p[0] * p[1];
    let a22 = 1.0 + p[1] * p[1];
    let l11 = a11.sqrt();
    let i11 = 1.0 / l11;
    let l21 = a12 * i11;
    let i22 = 1.0 / (a22 - l21 * l21).sqrt();
    let b11 = a11 - s[0];
    let b12 = a12 - s[1];
    let b22 = a22 - s[2];
    // C = L⁻¹ B L⁻ᵀ
    let x11 = b11 * i11;
    let x12 = b12 * i11;
    let x21 = (b12 - l21 * x11) * i22;
    let x22 = (b22 - l21 * x12) * i22;
    let c11 = x11 * i11;
    let c12 = (x12 - l21 * c11) * i22;
    let c21 = x21 * i11;
    let c22 = (x22 - l21 * c21) * i22;
    let q = 0.5 * (c12 + c21);
    let m = 0.5 * (c11 + c22);
    let d = (0.25 * (c11 - c22) * (c11 - c22) + q * q).sqrt();
    [m - d, m + d]
}

/// Per-node curvature quantities.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    grid: Arc<HalfSphereGrid>,
    /// `n` ascending principal curvatures per node, flattened.
    pub kappa: Vec<f64>,
    /// `H_0..H_n` per node, flattened.
    pub h: Vec<f64>,
    /// `u = ⟨x, ν⟩ = e^φ / v`.
    pub support: Vec<f64>,
    /// `⟨ν, e_{n+1}⟩ = (cos β + sin β ∂_β φ) / v`.
    pub tilt: Vec<f64>,
    /// Area element `e^{nφ} v` per unit `dσ`.
    pub area_weight: Vec<f64>,
    pub v: Vec<f64>,
    pub exp_phi: Vec<f64>,
    pub d_beta: Vec<f64>,
}

impl CurvatureData {
    pub fn grid(&self) -> &Arc<HalfSphereGrid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn node_count(&self) -> usize {
        self.support.len()
    }

    pub fn kappa_at(&self, node: usize) -> &[f64] {
        let n = self.n();
        &self.kappa[node * n..(node + 1) * n]
    }

    pub fn h_at(&self, node: usize) -> &[f64] {
        let n = self.n() + 1;
        &self.h[node * n..(node + 1) * n]
    }

    /// `H_j` at every node.
    pub fn h_column(&self, j: usize) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.h_at(i)[j]).collect()
    }

    /// Minimum principal curvature and the node where it occurs.
    pub fn min_kappa(&self) -> (f64, usize) {
        (0..self.node_count())
            .map(|i| (self.kappa_at(i)[0], i))
            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
    }

    pub fn max_kappa(&self) -> (f64, usize) {
        let n = self.n();
        (0..self.node_count())
            .map(|i| (self.kappa_at(i)[n - 1], i))
            .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a })
    }

    /// `∫ f dA` for per-node `f`.
    pub fn integrate_area(&self, f: &[f64]) -> f64 {
        let vals: Vec<f64> = f
            .iter()
            .zip(&self.area_weight)
            .map(|(a, w)| a * w)
            .collect();
        self.grid.integrate(&vals)
    }
}

/// Principal curvatures, normalized mean curvatures, support function, tilt
/// and area element at every node.
pub fn curvature(jet: &SurfaceJet) -> Result<CurvatureData> {
    let grid = jet.grid.clone();
    let n = grid.n();
    let count = jet.nodes.len();
    let na = grid.n_alpha();
    let mut kappa = vec![0.0; count * n];
    let mut h = vec![0.0; count * (n + 1)];
    let mut support = vec![0.0; count];
    let mut tilt = vec![0.0; count];
    let mut area_weight = vec![0.0; count];
    let inv_binom: Vec<f64> = (0..=n).map(|j| 1.0 / binomial(n, j)).collect();
    let mut sig = [0.0; MAX_DIM + 1];
    let rows = jet
        .nodes
        .chunks_exact(na)
        .zip(kappa.chunks_exact_mut(na * n))
        .zip(h.chunks_exact_mut(na * (n + 1)));
    for (ring, ((nodes, kap_row), h_row)) in rows.enumerate() {
        let (sb, cb) = (grid.sin_beta[ring], grid.cos_beta[ring]);
        for (j, nj) in nodes.iter().enumerate() {
            let node = ring * na + j;
            let kap = &mut kap_row[j * n..(j + 1) * n];
            let scale = 1.0 / (nj.exp_phi * nj.v);
            // 1/v without a second division
            let inv_v = nj.exp_phi * scale;
            match grid.spec.backend {
                Backend::Axisym => {
                    let kb = (1.0 - nj.h_bb * inv_v * inv_v) * scale;
                    let ka = (1.0 - nj.h_aa) * scale;
                    if kb <= ka {
                        kap[0] = kb;
                        kap[1..].fill(ka);
                    } else {
                        kap[..n - 1].fill(ka);
                        kap[n - 1] = kb;
                    }
                }
                Backend::Sphere2d => {
                    let [l0, l1] = pencil2([nj.d_beta, nj.d_alpha], [nj.h_bb, nj.h_ba, nj.h_aa]);
                    kap[0] = l0 * scale;
                    kap[1] = l1 * scale;
                }
            }
            if kap.iter().any(|k| !k.is_finite()) {
                return Err(Error::numeric(Some(node), "non-finite principal curvature"));
            }
            sigma_all_into(kap, &mut sig);
            for (out, (s, ib)) in h_row[j * (n + 1)..(j + 1) * (n + 1)]
                .iter_mut()
                .zip(sig.iter().zip(&inv_binom))
            {
                *out = s * ib;
            }
            let mut e_n = nj.exp_phi;
            for _ in 1..n {
                e_n *= nj.exp_phi;
            }
            support[node] = nj.exp_phi * inv_v;
            tilt[node] = (cb + sb * nj.d_beta) * inv_v;
            area_weight[node] = e_n * nj.v;
        }
    }
    Ok(CurvatureData {
        grid,
        kappa,
        h,
        support,
        tilt,
        area_weight,
        v: jet.nodes.iter().map(|nj| nj.v).collect(),
        exp_phi: jet.nodes.iter().map(|nj| nj.exp_phi).collect(),
        d_beta: jet.nodes.iter().map(|nj| nj.d_beta).collect(),
    })
}

/// Jet and curvature in one call.
pub fn evaluate(field: &RadialField, theta: f64) -> Result<CurvatureData> {
    curvature(&jet(field, theta)?)
}

/// Azimuthal average of a two-dimensional field onto the axisymmetric grid.
pub fn restrict_axisym(field: &RadialField) -> Result<RadialField> {
    let grid = field.grid();
    if grid.backend() != Backend::Sphere2d {
        return Err(Error::invalid("restrict_axisym expects a sphere2d field"));
    }
    let na = grid.n_alpha();
    let mut spread: f64 = 0.0;
    let phi: Vec<f64> = field
        .phi
        .chunks(na)
        .map(|row| {
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            spread = spread.max(hi - lo);
            // offset keeps constant rings exact
            let offsets: Vec<f64> = row.iter().map(|x| x - row[0]).collect();
            row[0] + pairwise_sum(&offsets) / na as f64
        })
        .collect();
    if spread > AXISYM_TOLERANCE {
        return Err(Error::NotAxisymmetric { spread });
    }
    let axis = HalfSphereGrid::shared(GridSpec::axisym(2, grid.n_beta()))?;
    RadialField::new(axis, phi)
}

/// Sharp azimuthal Fourier filter on rings close to the pole.
///
/// On ring `i` the modes with `sin(jΔα/2) > Δα sin β_i / Δ_eff` are removed,
/// so that no retained mode is stiffer than the `β` direction at spacing
/// `Δ_eff = min(Δβ, Δα)`. The axisymmetric mode is always kept. The flow
/// applies it to both `∂_t φ` and `φ`; filtering only the former would freeze
/// the removed modes of the initial data.
#[derive(Debug, Clone)]
pub struct PolarFilter {
    n_alpha: usize,
    /// `(ring, highest retained mode)` for every ring that is filtered.
    rings: Vec<(usize, usize)>,
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
}

impl PolarFilter {
    pub fn new(grid: &HalfSphereGrid) -> Option<Self> {
        if grid.backend() != Backend::Sphere2d {
            return None;
        }
        let na = grid.n_alpha();
        let da = grid.delta_alpha();
        let eff = grid.effective_spacing(true);
        let nyquist = na / 2;
        let rings: Vec<(usize, usize)> = (0..grid.n_beta())
            .filter_map(|i| {
                let bound = da * grid.sin_beta(i) / eff;
                let keep = (1..=nyquist)
                    .take_while(|&j| (0.5 * j as f64 * da).sin() <= bound)
                    .count();
                (keep < nyquist).then_some((i, keep))
            })
            .collect();
        let cos_table = (0..na)
            .map(|m| (2.0 * PI * m as f64 / na as f64).cos())
            .collect();
        let sin_table = (0..na)
            .map(|m| (2.0 * PI * m as f64 / na as f64).sin())
            .collect();
        Some(Self {
            n_alpha: na,
            rings,
            cos_table,
            sin_table,
        })
    }

    pub fn filtered_rings(&self) -> &[(usize, usize)] {
        &self.rings
    }

    pub fn apply(&self, values: &mut [f64]) {
        let na = self.n_alpha;
        let mut row = vec![0.0; na];
        for &(ring, keep) in &self.rings {
            let slot = &mut values[ring * na..(ring + 1) * na];
            let mean = pairwise_sum(slot) / na as f64;
            row.fill(mean);
            for j in 1..=keep {
                let (mut a, mut b) = (0.0, 0.0);
                for (m, &x) in slot.iter().enumerate() {
                    let idx = (j * m) % na;
                    a += x * self.cos_table[idx];
                    b += x * self.sin_table[idx];
                }
                let norm = if 2 * j == na { 1.0 } else { 2.0 } / na as f64;
                for (m, r) in row.iter_mut().enumerate() {
                    let idx = (j * m) % na;
                    *r += norm * (a * self.cos_table[idx] + b * self.sin_table[idx]);
                }
            }
            slot.copy_from_slice(&row);
        }
    }
}
