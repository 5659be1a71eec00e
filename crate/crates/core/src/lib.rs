//! Numerical laboratory for the locally constrained inverse curvature flow of
//! convex capillary hypersurfaces in the half-space.
//!
//! The surface is represented as a radial graph `x = e^φ(z) z` over the upper
//! half-sphere, with the oblique capillary condition imposed through ghost
//! values at the equator. On top of that representation the crate provides
//!
//! - [`symfun`]: elementary symmetric functions and the quotient speeds
//!   `F = H_k / H_{k-1}`,
//! - [`geometry`]: grids, finite-difference jets and principal curvatures,
//! - [`caps`]: the closed-form spherical-cap family,
//! - [`functionals`]: capillary quermassintegrals, the Minkowski identity and
//!   Alexandrov–Fenchel gaps,
//! - [`flow`]: the explicit integrator, monitors, the mean-curvature
//!   convexifier and checkpoints.

pub mod caps;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod geometry;
pub mod numerics;
pub mod symfun;

pub use caps::{
    ball_cap_volume, cap_quermass, fit_cap, predicted_limit_radius, CapFit, SphericalCap,
};
pub use error::{Error, Result};
pub use flow::{
    convexify, run_to_steady, FlowConfig, FlowState, MonitorReport, RunOutcome, RunStatus,
};
pub use functionals::{QuermassReport, QuermassTerms};
pub use geometry::{
    cap_radial, Backend, CurvatureData, GridSpec, HalfSphereGrid, RadialField, SurfaceJet,
};
pub use symfun::{CurvatureVector, QuotientFunction};
