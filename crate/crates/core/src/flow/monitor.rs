//! Runtime checks of the scalar a-priori estimates along the flow.
//!
//! Every monitor reduces to a margin that is nonnegative when the estimate
//! holds; a margin below `−tolerance` is a violation. Margins are relative to
//! the initial scale of the monitored quantity.

use serde::{Deserialize, Serialize};

use crate::caps::SphericalCap;
use crate::error::{Error, Result};
use crate::flow::config::MonitorTolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorKind {
    /// (a) `min κ ≥ ε F` with `ε` measured on the initial data.
    Convexity,
    /// (b) `max F(t) ≤ max F(0)`.
    SpeedUpper,
    /// (c) `min ū F(t) ≥ min ū F(0)`.
    ModifiedSpeedLower,
    /// (d) `min ū(t) ≥ min ū(0)`.
    SupportLower,
    /// (e) `ρ_{r_1,θ} ≤ ρ ≤ ρ_{r_2,θ}`.
    Barrier,
    /// (f) `V_k(t) = V_k(0)`.
    Conservation,
    /// (g) `V_ℓ` non-decreasing between emitted rows, `ℓ < k`.
    Monotonicity,
}

impl MonitorKind {
    pub const ALL: [MonitorKind; 7] = [
        MonitorKind::Convexity,
        MonitorKind::SpeedUpper,
        MonitorKind::ModifiedSpeedLower,
        MonitorKind::SupportLower,
        MonitorKind::Barrier,
        MonitorKind::Conservation,
        MonitorKind::Monotonicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MonitorKind::Convexity => "convexity",
            MonitorKind::SpeedUpper => "speed_upper",
            MonitorKind::ModifiedSpeedLower => "modified_speed_lower",
            MonitorKind::SupportLower => "support_lower",
            MonitorKind::Barrier => "barrier",
            MonitorKind::Conservation => "conservation",
            MonitorKind::Monotonicity => "monotonicity",
        }
    }

    fn tolerance(self, tol: &MonitorTolerances) -> f64 {
        match self {
            MonitorKind::Conservation => tol.conservation,
            MonitorKind::Monotonicity => tol.monotonicity,
            _ => tol.bounds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorEntry {
    pub kind: MonitorKind,
    pub tolerance: f64,
    /// Smallest margin seen so far.
    pub worst_margin: f64,
    pub worst_node: Option<usize>,
    pub worst_time: f64,
    pub first_violation: Option<f64>,
    pub first_violation_node: Option<usize>,
}

impl MonitorEntry {
    fn new(kind: MonitorKind, tolerance: f64) -> Self {
        Self {
            kind,
            tolerance,
            worst_margin: f64::MAX,
            worst_node: None,
            worst_time: 0.0,
            first_violation: None,
            first_violation_node: None,
        }
    }

    fn observe(&mut self, margin: f64, node: Option<usize>, t: f64) {
        // NaN margins count as violations
        let bad = !(margin >= -self.tolerance);
        // finite sentinels keep the report serializable
        let margin = if margin.is_nan() {
            f64::MIN
        } else {
            margin.clamp(f64::MIN, f64::MAX)
        };
        if !(margin >= self.worst_margin) {
            self.worst_margin = margin;
            self.worst_node = node;
            self.worst_time = t;
        }
        if bad && self.first_violation.is_none() {
            self.first_violation = Some(t);
            self.first_violation_node = node;
        }
    }

    pub fn violated(&self) -> bool {
        self.first_violation.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub entries: Vec<MonitorEntry>,
}

impl MonitorReport {
    pub fn new(tol: &MonitorTolerances) -> Self {
        Self {
            entries: MonitorKind::ALL
                .iter()
                .map(|&k| MonitorEntry::new(k, k.tolerance(tol)))
                .collect(),
        }
    }

    pub fn entry(&self, kind: MonitorKind) -> &MonitorEntry {
        self.entries
            .iter()
            .find(|e| e.kind == kind)
            .expect("every monitor kind has an entry")
    }

    fn entry_mut(&mut self, kind: MonitorKind) -> &mut MonitorEntry {
        self.entries
            .iter_mut()
            .find(|e| e.kind == kind)
            .expect("every monitor kind has an entry")
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| !e.violated())
    }

    pub fn violations(&self) -> impl Iterator<Item = &MonitorEntry> {
        self.entries.iter().filter(|e| e.violated())
    }

    pub fn observe(&mut self, kind: MonitorKind, margin: f64, node: Option<usize>, t: f64) {
        self.entry_mut(kind).observe(margin, node, t);
    }
}

/// Per-node quantities the pointwise monitors read.
#[derive(Debug, Clone, Copy)]
pub struct NodeSample {
    pub kappa_min: f64,
    pub f: f64,
    /// `ū = u / (1 + cos θ ⟨ν, e⟩)`.
    pub ubar: f64,
    pub rho: f64,
    /// `ρ` of the unit cap at this node's polar angle.
    pub unit_cap: f64,
}

/// Reference values measured on the initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorBaseline {
    pub k: usize,
    pub theta: f64,
    pub epsilon: f64,
    pub max_f: f64,
    pub min_ubar_f: f64,
    pub min_ubar: f64,
    /// Barrier radii: `r_1 ρ_{1,θ} ≤ ρ ≤ r_2 ρ_{1,θ}` initially, both touching.
    pub r_inner: f64,
    pub r_outer: f64,
    /// `V_0 .. V_{n+1}` at `t = 0`.
    pub v_initial: Vec<f64>,
    /// `V` at the last emitted row.
    pub v_last_row: Vec<f64>,
}

impl MonitorBaseline {
    pub fn measure(samples: &[NodeSample], k: usize, theta: f64, v: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("no nodes to measure"));
        }
        let mut epsilon = f64::INFINITY;
        let mut max_f = f64::NEG_INFINITY;
        let mut min_ubar_f = f64::INFINITY;
        let mut min_ubar = f64::INFINITY;
        for s in samples {
            epsilon = epsilon.min(s.kappa_min / s.f);
            max_f = max_f.max(s.f);
            min_ubar_f = min_ubar_f.min(s.ubar * s.f);
            min_ubar = min_ubar.min(s.ubar);
        }
        let (mut r_inner, mut r_outer) = (f64::INFINITY, 0.0f64);
        for s in samples {
            let ratio = s.rho / s.unit_cap;
            r_inner = r_inner.min(ratio);
            r_outer = r_outer.max(ratio);
        }
        Ok(Self {
            k,
            theta,
            epsilon,
            max_f,
            min_ubar_f,
            min_ubar,
            r_inner,
            r_outer,
            v_initial: v.to_vec(),
            v_last_row: v.to_vec(),
        })
    }

    pub fn barrier_caps(&self) -> (SphericalCap, SphericalCap) {
        (
            SphericalCap {
                r: self.r_inner,
                theta: self.theta,
            },
            SphericalCap {
                r: self.r_outer,
                theta: self.theta,
            },
        )
    }

    /// Monitors (a)–(e) on the current nodes.
    pub fn check_pointwise(&self, report: &mut MonitorReport, samples: &[NodeSample], t: f64) {
        let mut worst = [(f64::INFINITY, None); 5];
        let mut take = |slot: usize, margin: f64, node: usize| {
            if !(margin >= worst[slot].0) {
                worst[slot] = (margin, Some(node));
            }
        };
        for (i, s) in samples.iter().enumerate() {
            take(0, (s.kappa_min - self.epsilon * s.f) / self.max_f, i);
            take(1, (self.max_f - s.f) / self.max_f, i);
            take(2, (s.ubar * s.f - self.min_ubar_f) / self.min_ubar_f, i);
            take(3, (s.ubar - self.min_ubar) / self.min_ubar, i);
            let unit = s.unit_cap;
            let barrier = (s.rho - self.r_inner * unit).min(self.r_outer * unit - s.rho) / s.rho;
            take(4, barrier, i);
        }
        let kinds = [
            MonitorKind::Convexity,
            MonitorKind::SpeedUpper,
            MonitorKind::ModifiedSpeedLower,
            MonitorKind::SupportLower,
            MonitorKind::Barrier,
        ];
        for (kind, (margin, node)) in kinds.into_iter().zip(worst) {
            report.observe(kind, margin, node, t);
        }
    }

    /// Monitors (f) and (g) at an emitted row; advances the row reference.
    pub fn check_row(&mut self, report: &mut MonitorReport, v: &[f64], t: f64) {
        let k = self.k;
        let drift = (v[k] - self.v_initial[k]).abs() / self.v_initial[k].abs();
        report.observe(MonitorKind::Conservation, -drift, None, t);
        let mut worst = f64::INFINITY;
        for l in 0..k {
            let change = (v[l] - self.v_last_row[l]) / self.v_initial[l].abs();
            worst = worst.min(change);
        }
        if k > 0 {
            report.observe(MonitorKind::Monotonicity, worst.min(0.0), None, t);
        }
        self.v_last_row = v.to_vec();
    }
}
