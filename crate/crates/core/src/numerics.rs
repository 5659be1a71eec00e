//! Small numerical kernels shared by the other modules: deterministic
//! summation, the Γ function at half-integers, sphere constants and adaptive
//! Simpson quadrature.

use std::f64::consts::PI;

/// Pairwise (cascade) summation with a fixed split order.
///
/// The result depends only on the order of `values`, never on thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for &x in values {
            acc += x;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Γ(m/2) for a positive integer `m`.
pub fn gamma_half(m: usize) -> f64 {
    assert!(m > 0, "Γ(0) is a pole");
    if m % 2 == 0 {
        // Γ(j) = (j-1)!
        (1..m / 2).fold(1.0, |acc, i| acc * i as f64)
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < m as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Surface area |S^m| of the unit m-sphere in R^{m+1}.
pub fn sphere_area(m: usize) -> f64 {
    2.0 * PI.powf((m + 1) as f64 / 2.0) / gamma_half(m + 1)
}

/// Volume |B^m| of the unit ball in R^m.
pub fn ball_volume(m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    PI.powf(m as f64 / 2.0) / gamma_half(m + 2)
}

/// Binomial coefficient C(n, k) as a float; zero when k > n.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
