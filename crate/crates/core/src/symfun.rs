//! Elementary symmetric functions of principal curvatures and the quotient
//! curvature functions `F = H_k / H_{k-1}` that drive the flow.
//!
//! Index convention: throughout the crate `k` is the *quotient* index, so the
//! flow speed uses `H_{k-1}/H_k`. Quermassintegral pairs are written `(k, l)`
//! with `l < k`; that `l` plays the role of the lower index in the
//! Alexandrov–Fenchel inequalities, not a second quotient index.

use crate::error::{Error, Result};
use crate::numerics::binomial;

/// Relative step for the finite-difference second derivatives of `f`: entry
/// `j` moves by `HESSIAN_FD_STEP · κ_j`, which keeps the error homogeneous.
pub const HESSIAN_FD_STEP: f64 = 1e-4;

/// Writes `σ_0..σ_n` of `kappa` into `out` (length at least `n + 1`).
///
/// Coefficients of `∏(1 + t κ_i)` are accumulated one factor at a time, so no
/// subset enumeration and no cancellation between large terms.
pub fn sigma_all_into(kappa: &[f64], out: &mut [f64]) {
    let n = kappa.len();
    debug_assert!(out.len() > n);
    out[0] = 1.0;
    // each new entry starts as its top coefficient, so nothing needs zeroing
    for (i, &x) in kappa.iter().enumerate() {
        out[i + 1] = x * out[i];
        for j in (1..=i).rev() {
            out[j] += x * out[j - 1];
        }
    }
}

/// Sorted first, so any permutation of `kappa` gives identical bits.
fn sigma_all(kappa: &[f64]) -> Vec<f64> {
    let mut sorted = kappa.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = vec![0.0; kappa.len() + 1];
    sigma_all_into(&sorted, &mut out);
    out
}

/// `σ_{j}` of `kappa` with entry `skip` removed.
fn sigma_without(kappa: &[f64], skip: usize, j: usize) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let mut buf = vec![0.0; kappa.len()];
    let mut e = 1usize;
    buf[0] = 1.0;
    for (i, &x) in kappa.iter().enumerate() {
        if i == skip {
            continue;
        }
        for m in (1..=e).rev() {
            buf[m] += x * buf[m - 1];
        }
        e += 1;
    }
    if j < buf.len() {
        buf[j]
    } else {
        0.0
    }
}

/// A list of `n` principal curvatures.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureVector {
    kappa: Vec<f64>,
}

impl CurvatureVector {
    pub fn new(kappa: Vec<f64>) -> Result<Self> {
        if kappa.len() < 2 {
            return Err(Error::invalid(format!(
                "curvature vector needs n >= 2 entries, got {}",
                kappa.len()
            )));
        }
        if let Some(i) = kappa.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite curvature at entry {i}")));
        }
        Ok(Self { kappa })
    }

    /// The umbilic vector `(c, …, c)`.
    pub fn umbilic(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn n(&self) -> usize {
        self.kappa.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.kappa
    }

    /// All entries strictly positive.
    pub fn in_positive_cone(&self) -> bool {
        self.kappa.iter().all(|&x| x > 0.0)
    }

    /// `σ_1, …, σ_k` all strictly positive.
    pub fn in_garding_cone(&self, k: usize) -> bool {
        let s = sigma_all(&self.kappa);
        s[1..=k.min(self.n())].iter().all(|&x| x > 0.0)
    }

    /// `σ_j(κ)`.
    pub fn sigma(&self, j: usize) -> Result<f64> {
        check_index(j, self.n())?;
        Ok(sigma_all(&self.kappa)[j])
    }

    /// `H_j = σ_j / C(n, j)`, with `H_0 = 1`.
    pub fn normalized_h(&self, j: usize) -> Result<f64> {
        check_index(j, self.n())?;
        Ok(sigma_all(&self.kappa)[j] / binomial(self.n(), j))
    }

    /// `H_0, …, H_n`.
    pub fn normalized_all(&self) -> Vec<f64> {
        let n = self.n();
        sigma_all(&self.kappa)
            .into_iter()
            .enumerate()
            .map(|(j, s)| s / binomial(n, j))
            .collect()
    }
}

fn check_index(j: usize, n: usize) -> Result<()> {
    if j > n {
        Err(Error::IndexOutOfRange { index: j, max: n })
    } else {
        Ok(())
    }
}

/// The three terms of the sandwich `F² ≤ Σ ḟ^i κ_i² ≤ (n-k+1) F²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyTerms {
    pub lower: f64,
    /// `Σ_i ḟ^i κ_i²` from the analytic gradient.
    pub middle: f64,
    /// `[(n-k+1) H_k² - (n-k) H_{k-1} H_{k+1}] / H_{k-1}²`.
    pub middle_closed: f64,
    pub upper: f64,
}

/// `F = H_k / H_{k-1}` on `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuotientFunction {
    k: usize,
    n: usize,
}

impl QuotientFunction {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("dimension n = {n} must be >= 2")));
        }
        if k == 0 || k > n {
            return Err(Error::invalid(format!(
                "quotient index k = {k} must lie in 1..={n}"
            )));
        }
        Ok(Self { k, n })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_dim(&self, kappa: &CurvatureVector) -> Result<()> {
        if kappa.n() != self.n {
            return Err(Error::invalid(format!(
                "curvature vector has {} entries, expected {}",
                kappa.n(),
                self.n
            )));
        }
        Ok(())
    }

    fn require_garding(&self, kappa: &CurvatureVector) -> Result<()> {
        self.check_dim(kappa)?;
        if !kappa.in_garding_cone(self.k) {
            return Err(Error::ConeViolation {
                kappa: kappa.kappa.clone(),
                k: self.k,
            });
        }
        Ok(())
    }

    fn require_positive(&self, kappa: &CurvatureVector) -> Result<()> {
        self.check_dim(kappa)?;
        if !kappa.in_positive_cone() {
            return Err(Error::ConeViolation {
                kappa: kappa.kappa.clone(),
                k: self.n,
            });
        }
        Ok(())
    }

    /// `F(κ)`; requires `κ ∈ Γ_k^+`.
    pub fn value(&self, kappa: &CurvatureVector) -> Result<f64> {
        self.require_garding(kappa)?;
        let s = sigma_all(&kappa.kappa);
        Ok(self.from_sigmas(&s))
    }

    /// `F` from precomputed `σ_0..σ_n`. No cone check.
    pub fn from_sigmas(&self, s: &[f64]) -> f64 {
        let k = self.k;
        (s[k] / binomial(self.n, k)) / (s[k - 1] / binomial(self.n, k - 1))
    }

    /// `Σ_i ḟ^i` from precomputed `σ_0..σ_n`, using `Σ_i σ̇_j^i = (n-j+1) σ_{j-1}`.
    pub fn gradient_trace_from_sigmas(&self, s: &[f64]) -> f64 {
        let (n, k) = (self.n, self.k);
        let scale = k as f64 / (n - k + 1) as f64;
        let d_top = (n - k + 1) as f64 * s[k - 1];
        let d_bot = if k >= 2 {
            (n - k + 2) as f64 * s[k - 2]
        } else {
            0.0
        };
        scale * (d_top * s[k - 1] - s[k] * d_bot) / (s[k - 1] * s[k - 1])
    }

    /// `ḟ^i = ∂F/∂κ_i` by the quotient rule with `σ̇_j^i = σ_{j-1}(κ | i)`.
    /// Requires `κ ∈ Γ_+`.
    pub fn gradient(&self, kappa: &CurvatureVector) -> Result<Vec<f64>> {
        self.require_positive(kappa)?;
        Ok(self.gradient_unchecked(&kappa.kappa))
    }

    fn gradient_unchecked(&self, kappa: &[f64]) -> Vec<f64> {
        let (n, k) = (self.n, self.k);
        let s = sigma_all(kappa);
        let scale = binomial(n, k - 1) / binomial(n, k);
        let (top, bot) = (s[k], s[k - 1]);
        (0..n)
            .map(|i| {
                let d_top = sigma_without(kappa, i, k - 1);
                let d_bot = if k >= 2 {
                    sigma_without(kappa, i, k - 2)
                } else {
                    0.0
                };
                scale * (d_top * bot - top * d_bot) / (bot * bot)
            })
            .collect()
    }

    /// Second derivatives `f̈^{ij}` by central differences of the analytic
    /// gradient with relative step [`HESSIAN_FD_STEP`], symmetrised.
    pub fn hessian_fd(&self, kappa: &CurvatureVector) -> Result<Vec<Vec<f64>>> {
        self.require_positive(kappa)?;
        let n = self.n;
        let mut hess = vec![vec![0.0; n]; n];
        let mut work = kappa.kappa.clone();
        for j in 0..n {
            let x0 = work[j];
            let h = HESSIAN_FD_STEP * x0;
            work[j] = x0 + h;
            let gp = self.gradient_unchecked(&work);
            work[j] = x0 - h;
            let gm = self.gradient_unchecked(&work);
            work[j] = x0;
            for i in 0..n {
                hess[i][j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (hess[i][j] + hess[j][i]);
                hess[i][j] = m;
                hess[j][i] = m;
            }
        }
        Ok(hess)
    }

    /// `(F², Σ ḟ^i κ_i², (n-k+1) F²)` with the middle term also in closed form.
    pub fn key_inequality_terms(&self, kappa: &CurvatureVector) -> Result<KeyTerms> {
        self.require_positive(kappa)?;
        let f = self.value(kappa)?;
        let grad = self.gradient_unchecked(&kappa.kappa);
        let middle: f64 = grad.iter().zip(&kappa.kappa).map(|(g, x)| g * x * x).sum();
        let h = kappa.normalized_all();
        let (n, k) = (self.n, self.k);
        let h_next = if k < n { h[k + 1] } else { 0.0 };
        let middle_closed = ((n - k + 1) as f64 * h[k] * h[k] - (n - k) as f64 * h[k - 1] * h_next)
            / (h[k - 1] * h[k - 1]);
        Ok(KeyTerms {
            lower: f * f,
            middle,
            middle_closed,
            upper: (n - k + 1) as f64 * f * f,
        })
    }

    /// `Σ f̈^{ab} y_a y_b + 2 Σ (ḟ^a/κ_a) y_a² − 2 F^{-1} (Σ ḟ^a y_a)²`.
    ///
    /// Non-negative for inverse-concave `f`, up to the finite-difference error
    /// of `f̈`, about `1e-8 |y|²/min κ` at the default step.
    pub fn inverse_concavity_residual(&self, kappa: &CurvatureVector, y: &[f64]) -> Result<f64> {
        self.require_positive(kappa)?;
        if y.len() != self.n {
            return Err(Error::invalid(format!(
                "direction has {} entries, expected {}",
                y.len(),
                self.n
            )));
        }
        let f = self.value(kappa)?;
        let grad = self.gradient_unchecked(&kappa.kappa);
        let hess = self.hessian_fd(kappa)?;
        let mut quad = 0.0;
        for a in 0..self.n {
            for b in 0..self.n {
                quad += hess[a][b] * y[a] * y[b];
            }
        }
        let weighted: f64 = (0..self.n)
            .map(|a| grad[a] / kappa.kappa[a] * y[a] * y[a])
            .sum();
        let lin: f64 = grad.iter().zip(y).map(|(g, y)| g * y).sum();
        Ok(quad + 2.0 * weighted - 2.0 * lin * lin / f)
    }
}

/// `H_l H_{k-1} − H_{l-1} H_k` for `1 ≤ l < k ≤ n`, non-negative on `Γ_k^+`.
pub fn newton_maclaurin_gap(kappa: &CurvatureVector, k: usize, l: usize) -> Result<f64> {
    let n = kappa.n();
    if l == 0 || l >= k || k > n {
        return Err(Error::invalid(format!(
            "need 1 <= l < k <= n, got k = {k}, l = {l}, n = {n}"
        )));
    }
    if !kappa.in_garding_cone(k) {
        return Err(Error::ConeViolation {
            kappa: kappa.kappa.clone(),
            k,
        });
    }
    let h = kappa.normalized_all();
    Ok(h[l] * h[k - 1] - h[l - 1] * h[k])
}
