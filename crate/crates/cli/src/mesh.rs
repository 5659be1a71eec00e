//! Triangulation of `n = 2` radial graphs as OBJ text.
//!
//! Vertices run pole first, then the grid rings from the pole down
//! (β-major, α-minor), then the contact ring at `β = π/2`. Triangles are
//! counterclockwise seen from outside.

use std::f64::consts::TAU;
use std::fmt::Write;

use capflow::geometry::boundary_trace;
use capflow::{Backend, RadialField};

use crate::Failure;

pub const AXISYM_AZIMUTHS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices.
    pub faces: Vec<[usize; 3]>,
}

fn point(phi: f64, beta: f64, alpha: f64) -> [f64; 3] {
    let r = phi.exp();
    let (sb, cb) = beta.sin_cos();
    let (sa, ca) = alpha.sin_cos();
    [r * sb * ca, r * sb * sa, r * cb]
}

/// `φ` at the pole: the ring means are even in β, so the quadratic in `β²`
/// through the first three rings is evaluated at zero.
fn pole_value(field: &RadialField) -> f64 {
    let grid = field.grid();
    let na = grid.n_alpha();
    let rings = grid.n_beta().min(3);
    let x: Vec<f64> = (0..rings).map(|i| grid.beta(i).powi(2)).collect();
    let mean: Vec<f64> = field
        .phi()
        .chunks(na)
        .take(rings)
        .map(|row| row.iter().sum::<f64>() / na as f64)
        .collect();
    (0..rings)
        .map(|i| {
            let w: f64 = (0..rings)
                .filter(|&j| j != i)
                .map(|j| -x[j] / (x[i] - x[j]))
                .product();
            w * mean[i]
        })
        .sum()
}

/// `azimuths` applies to axisymmetric fields only.
pub fn triangulate(field: &RadialField, theta: f64, azimuths: usize) -> Result<Mesh, Failure> {
    let grid = field.grid();
    if grid.n() != 2 {
        return Err(Failure::usage(format!(
            "meshes need n = 2, the field has n = {}",
            grid.n()
        )));
    }
    let (cols, alphas): (usize, Vec<f64>) = match grid.backend() {
        Backend::Axisym => {
            if azimuths < 3 {
                return Err(Failure::usage(format!(
                    "{azimuths} azimuths is too few for a mesh"
                )));
            }
            (
                azimuths,
                (0..azimuths)
                    .map(|j| TAU * j as f64 / azimuths as f64)
                    .collect(),
            )
        }
        Backend::Sphere2d => (
            grid.n_alpha(),
            (0..grid.n_alpha()).map(|j| grid.alpha(j)).collect(),
        ),
    };
    let na = grid.n_alpha();
    let column = |j: usize| {
        if grid.backend() == Backend::Axisym {
            0
        } else {
            j
        }
    };
    let trace = boundary_trace(field, theta)?;
    let nb = grid.n_beta();

    let mut vertices = Vec::with_capacity(1 + (nb + 1) * cols);
    vertices.push(point(pole_value(field), 0.0, 0.0));
    for i in 0..nb {
        let beta = grid.beta(i);
        for (j, &a) in alphas.iter().enumerate() {
            vertices.push(point(field.phi()[i * na + column(j)], beta, a));
        }
    }
    for (j, &a) in alphas.iter().enumerate() {
        vertices.push(point(trace[column(j)], std::f64::consts::FRAC_PI_2, a));
    }

    let ring = |i: usize, j: usize| 1 + i * cols + j % cols;
    let mut faces = Vec::with_capacity(cols * (2 * nb + 1));
    for j in 0..cols {
        faces.push([0, ring(0, j), ring(0, j + 1)]);
    }
    for i in 0..nb {
        for j in 0..cols {
            let (a0, a1, b0, b1) = (
                ring(i, j),
                ring(i, j + 1),
                ring(i + 1, j),
                ring(i + 1, j + 1),
            );
            faces.push([a0, b0, b1]);
            faces.push([a0, b1, a1]);
        }
    }
    Ok(Mesh { vertices, faces })
}

impl Mesh {
    /// OBJ text with 1-based face indices and shortest round-trip floats.
    pub fn to_obj(&self) -> String {
        let mut s = String::with_capacity(40 * (self.vertices.len() + self.faces.len()));
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }
}
