//! Real-order Bessel functions, their first zeros, the map λ ↦ μ(λ), the bounded-energy
//! quality function φ(z) and power states.
//!
//! With H_λ = Σ_k k|k⟩⟨k| − λ Σ_k (|k⟩⟨k+1| + |k+1⟩⟨k|), the matrix H_λ + μ is positive
//! definite exactly when 2λ < j_{μ−1,1}. Zeros and μ(λ) are therefore located by bisection on
//! a Sturm (pivot sign) test of a truncation of H_λ + μ, whose depth is raised until the
//! answer stops moving. The power series/Miller evaluation of J_ν is an independent route
//! used to confirm the zeros.

use crate::tau::{BatteryState, StateKind};
use crate::C64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BesselError {
    #[error("argument out of range: {0}")]
    Range(String),
    #[error("root bracketing failed for order {nu}: bracket [{lo}, {hi}]")]
    Bracket { nu: f64, lo: f64, hi: f64 },
    #[error("power-state recurrence diverged before the normalization window (residual {0:.3e})")]
    Divergence(f64),
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma needs a positive argument");
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, p) in LANCZOS.iter().enumerate().skip(1) {
        a += p / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, p) in LANCZOS.iter().enumerate().skip(1) {
        a += p / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// J_ν(x) for ν > −1, x ≥ 0.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64, BesselError> {
    if !(nu > -1.0) || !nu.is_finite() || nu > 1e7 {
        return Err(BesselError::Range(format!("order {nu}")));
    }
    if !(x >= 0.0) || !x.is_finite() || x > 1e7 {
        return Err(BesselError::Range(format!("argument {x}")));
    }
    if x == 0.0 {
        return match nu {
            n if n == 0.0 => Ok(1.0),
            n if n > 0.0 => Ok(0.0),
            _ => Err(BesselError::Range(format!("J_{nu}(0) is infinite"))),
        };
    }
    let q = 0.25 * x * x;
    if x <= 2.0 || q <= nu + 1.0 {
        series(nu, x)
    } else {
        miller(nu, x)
    }
}

fn series(nu: f64, x: f64) -> Result<f64, BesselError> {
    let ln_t0 = nu * (0.5 * x).ln() - ln_gamma(nu + 1.0);
    if ln_t0 < -700.0 {
        return Err(BesselError::Range(format!("J_{nu}({x}) underflows")));
    }
    if ln_t0 > 700.0 {
        return Err(BesselError::Range(format!("J_{nu}({x}) overflows")));
    }
    let q = 0.25 * x * x;
    let mut t = ln_t0.exp();
    let mut sum = t;
    let mut k = 1.0;
    loop {
        t *= -q / (k * (nu + k));
        sum += t;
        if t.abs() <= 1e-17 * sum.abs() && k > q {
            break;
        }
        k += 1.0;
        if k > 10_000.0 {
            break;
        }
    }
    Ok(sum)
}

/// Backward recurrence normalized with (x/2)^{ν₀} = Σ_k (ν₀+2k) Γ(ν₀+k)/k! J_{ν₀+2k}(x).
fn miller(nu: f64, x: f64) -> Result<f64, BesselError> {
    let (nu0, n) = if nu < 0.0 { (nu, 0usize) } else { (nu.fract(), nu.floor() as usize) };
    let top = nu.max(x);
    let mut m = (top + 30.0 + 12.0 * top.cbrt()).ceil() as usize;
    if m % 2 == 1 {
        m += 1;
    }
    // a_k for the normalization sum
    let half = m / 2;
    let mut a = vec![0.0; half + 1];
    a[0] = gamma(nu0 + 1.0);
    let mut g = gamma(nu0 + 1.0); // Γ(ν₀+k)/k! at k = 1
    for (k, ak) in a.iter_mut().enumerate().skip(1) {
        if k > 1 {
            g *= (nu0 + k as f64 - 1.0) / k as f64;
        }
        *ak = (nu0 + 2.0 * k as f64) * g;
    }
    let mut f_next = 0.0;
    let mut f = 1e-280;
    let mut sum = 0.0;
    let mut at_nu = 0.0;
    let mut i = m;
    loop {
        if i % 2 == 0 {
            sum += a[i / 2] * f;
        }
        if i == n {
            at_nu = f;
        }
        if i == 0 {
            break;
        }
        let f_prev = 2.0 * (nu0 + i as f64) / x * f - f_next;
        f_next = f;
        f = f_prev;
        i -= 1;
        if f.abs() > 1e250 {
            f *= 1e-250;
            f_next *= 1e-250;
            sum *= 1e-250;
            at_nu *= 1e-250;
        }
    }
    let scale = (0.5 * x).powf(nu0) / sum;
    if !scale.is_finite() {
        return Err(BesselError::Range(format!("J_{nu}({x}) normalization failed")));
    }
    Ok(at_nu * scale)
}

/// Truncation depth for H_λ + μ: past the classical turning point k = 2λ − μ the ground
/// vector decays superexponentially on the scale λ^{1/3}.
fn depth(lambda: f64, mu: f64, factor: usize) -> usize {
    let turning = (2.0 * lambda - mu).max(0.0);
    factor * ((turning + 40.0 * (lambda.cbrt() + 1.0) + 20.0).ceil() as usize)
}

/// Sturm test: is the n×n truncation of H_λ + μ positive definite?
fn truncated_pd(lambda: f64, mu: f64, n: usize) -> bool {
    let l2 = lambda * lambda;
    let mut d = mu;
    if d <= 0.0 {
        return false;
    }
    for k in 1..n {
        d = (mu + k as f64) - l2 / d;
        if d <= 0.0 {
            return false;
        }
    }
    true
}

fn bisect(mut lo: f64, mut hi: f64, mut pred_lo_side: impl FnMut(f64) -> bool) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred_lo_side(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First positive zero j_{ν,1} for ν > −1.
pub fn first_zero(nu: f64) -> Result<f64, BesselError> {
    if !(nu > -1.0) || !nu.is_finite() {
        return Err(BesselError::Range(format!("order {nu}")));
    }
    let mu = nu + 1.0;
    let mut prev = f64::NAN;
    for factor in [1usize, 2, 4, 8] {
        let below = |x: f64| truncated_pd(0.5 * x, mu, depth(0.5 * x, mu, factor));
        let guess = nu.max(0.0) + 1.8557 * nu.max(0.0).cbrt() + 1.0;
        let mut lo = 0.0;
        let mut hi = guess.max(1.0);
        let mut tries = 0;
        while below(hi) {
            lo = hi;
            hi *= 2.0;
            tries += 1;
            if tries > 60 {
                return Err(BesselError::Bracket { nu, lo, hi });
            }
        }
        let j = bisect(lo, hi, below);
        if (j - prev).abs() <= 4.0 * f64::EPSILON * j {
            return Ok(j);
        }
        prev = j;
    }
    Ok(prev)
}

/// μ(λ): the solution of j_{μ−1,1} = 2λ, equivalently minus the ground energy of H_λ.
pub fn mu_of_lambda(lambda: f64) -> f64 {
    assert!(lambda > 0.0 && lambda.is_finite(), "λ must be positive");
    let mut prev = f64::NAN;
    for factor in [1usize, 2, 4, 8] {
        let pd = |mu: f64| truncated_pd(lambda, mu, depth(lambda, mu, factor));
        // μ ≤ 2λ + 1 by Gershgorin; μ > 0 since the off-diagonal couples |0⟩
        let (mut lo, mut hi) = (0.0, 2.0 * lambda + 1.0);
        if lambda > 10.0 {
            let g = 2.0 * lambda + 1.0 - 2.338 * lambda.cbrt();
            let w = 5.0 + lambda.cbrt();
            if !pd(g - w) {
                lo = g - w;
            }
            if pd((g + w).min(hi)) {
                hi = (g + w).min(hi);
            }
        }
        let mu = bisect(lo, hi, |m| !pd(m));
        if (mu - prev).abs() <= 4.0 * f64::EPSILON * mu.max(1.0) {
            return mu;
        }
        prev = mu;
    }
    prev
}

/// Normalized ground vector of H_λ (amplitudes c_k > 0) at μ = μ(λ), truncated once the
/// remaining population drops below `tail_tol`.
pub fn ground_vector(lambda: f64, mu: f64, tail_tol: f64) -> Vec<f64> {
    let n = depth(lambda, mu, 2);
    // bottom-up pivots p_k = (k + μ) − λ²/p_{k+1}; c_{k+1}/c_k = λ/p_{k+1}
    let l2 = lambda * lambda;
    let mut p = vec![0.0; n + 1];
    p[n] = mu + n as f64;
    for k in (1..n).rev() {
        p[k] = (mu + k as f64) - l2 / p[k + 1];
    }
    let mut c = Vec::with_capacity(n);
    let mut ln_c = 0.0f64;
    let mut logs = vec![0.0];
    for pk in &p[1..n] {
        ln_c += (lambda / pk).ln();
        logs.push(ln_c);
    }
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for l in &logs {
        c.push((l - peak).exp());
    }
    let total: f64 = c.iter().map(|x| x * x).sum();
    for x in c.iter_mut() {
        *x /= total.sqrt();
    }
    // truncate the tail
    let mut tail = 0.0;
    let mut keep = c.len();
    for k in (0..c.len()).rev() {
        if tail + c[k] * c[k] >= tail_tol {
            break;
        }
        tail += c[k] * c[k];
        keep = k;
    }
    c.truncate(keep.max(1));
    let total: f64 = c.iter().map(|x| x * x).sum();
    for x in c.iter_mut() {
        *x /= total.sqrt();
    }
    c
}

/// ⟨H_B⟩/Δ of the ground vector of H_λ, by Hellmann–Feynman.
pub fn energy_hf(lambda: f64) -> f64 {
    let mu = mu_of_lambda(lambda);
    let c = ground_vector(lambda, mu, 1e-30);
    c.iter().enumerate().map(|(k, x)| k as f64 * x * x).sum()
}

/// E(λ) = λ μ′(λ) − μ(λ) with a central difference of step 10⁻⁵λ.
pub fn energy_of_lambda(lambda: f64) -> f64 {
    let h = 1e-5 * lambda;
    let d = (mu_of_lambda(lambda + h) - mu_of_lambda(lambda - h)) / (2.0 * h);
    lambda * d - mu_of_lambda(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiResult {
    pub z: f64,
    pub phi: f64,
    pub lambda_star: f64,
    pub mu_star: f64,
    pub energy_check: f64,
}

fn phi_objective(z: f64, lambda: f64) -> f64 {
    (z + mu_of_lambda(lambda)) / (2.0 * lambda)
}

/// φ(z) = min_λ (z + μ(λ))/(2λ).
pub fn phi(z: f64) -> PhiResult {
    assert!(z > 0.0 && z.is_finite(), "z must be positive");
    let f = |l: f64| phi_objective(z, l);
    // bracket in log λ around the small-z (λ ≈ √z) and large-z (λ ≈ 0.263 z³) regimes
    let g = z.sqrt().max(0.26 * z * z * z);
    let (mut a, mut m, mut b) = (g / 2.0, g, g * 2.0);
    let (mut fa, mut fm, mut fb) = (f(a), f(m), f(b));
    while fa < fm {
        b = m;
        fb = fm;
        m = a;
        fm = fa;
        a /= 2.0;
        fa = f(a);
    }
    while fb < fm {
        a = m;
        fa = fm;
        m = b;
        fm = fb;
        b *= 2.0;
        fb = f(b);
    }
    let _ = (fa, fb);
    // golden section in ln λ
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a.ln(), b.ln());
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1.exp()), f(x2.exp()));
    while hi - lo > 1e-7 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1.exp());
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2.exp());
        }
    }
    // the stationarity condition is E(λ) = z; polish on it
    let mut l = (0.5 * (lo + hi)).exp();
    let (mut blo, mut bhi) = (l * (1.0 - 1e-5), l * (1.0 + 1e-5));
    let mut tries = 0;
    while energy_hf(blo) > z && tries < 60 {
        blo *= 0.9;
        tries += 1;
    }
    while energy_hf(bhi) < z && tries < 120 {
        bhi *= 1.1;
        tries += 1;
    }
    if energy_hf(blo) <= z && energy_hf(bhi) >= z {
        for _ in 0..100 {
            let mid = 0.5 * (blo + bhi);
            if bhi - blo <= 1e-15 * mid {
                break;
            }
            if energy_hf(mid) < z {
                blo = mid;
            } else {
                bhi = mid;
            }
        }
        let cand = 0.5 * (blo + bhi);
        if f(cand) <= f(l) {
            l = cand;
        }
    }
    let mu = mu_of_lambda(l);
    PhiResult { z, phi: (z + mu) / (2.0 * l), lambda_star: l, mu_star: mu, energy_check: energy_of_lambda(l) }
}

/// Largest relative residual of the forward recurrence c_{k+1} = ((k+μ)/λ) c_k − c_{k−1}
/// over the amplitudes that carry weight.
pub fn recurrence_residual(c: &[f64], lambda: f64, mu: f64) -> f64 {
    let cmax = c.iter().cloned().fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for k in 0..c.len().saturating_sub(1) {
        if c[k] < 1e-6 * cmax {
            continue;
        }
        let prev = if k == 0 { 0.0 } else { c[k - 1] };
        let lead = (k as f64 + mu) / lambda * c[k];
        let r = c[k + 1] - lead + prev;
        worst = worst.max(r.abs() / (lead + prev + c[k + 1]));
    }
    worst
}

/// The bounded-energy battery state maximizing τ at mean energy `ebar`.
pub fn power_state(ebar: f64, delta: f64, tail_tol: f64) -> Result<BatteryState, BesselError> {
    if !(ebar > 0.0 && delta > 0.0) {
        return Err(BesselError::Range("ebar and delta must be positive".into()));
    }
    let r = phi(ebar / delta);
    let mut last = 0.0;
    for attempt in 0..3 {
        let tol = tail_tol * 10f64.powi(-2 * attempt);
        let c = ground_vector(r.lambda_star, r.mu_star, tol);
        last = recurrence_residual(&c, r.lambda_star, r.mu_star);
        if last < 1e-8 && c.iter().all(|x| *x > 0.0) {
            let levels = (0..c.len()).map(|k| k as f64 * delta).collect();
            return Ok(BatteryState { levels, kind: StateKind::Pure(c.into_iter().map(|x| C64::new(x, 0.0)).collect()) });
        }
    }
    Err(BesselError::Divergence(last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eig_tridiagonal;

    /// Independent J_ν oracle: plain alternating power series, good for small x.
    fn series_oracle(nu: f64, x: f64) -> f64 {
        let mut t = (0.5 * x).powf(nu) / gamma(nu + 1.0);
        let mut s = t;
        for k in 1..200 {
            t *= -(0.25 * x * x) / (k as f64 * (nu + k as f64));
            s += t;
        }
        s
    }

    #[test]
    fn gamma_values() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        let lf: f64 = (1..100).map(|k| (k as f64).ln()).sum();
        assert!((ln_gamma(100.0) - lf).abs() < 1e-11);
        assert!((gamma(0.25) - 3.625_609_908_221_908).abs() < 1e-13);
    }

    #[test]
    fn j_at_zero_and_half_order() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        for x in [1.0f64, 5.0, 20.0] {
            let exact = (2.0 / (PI * x)).sqrt() * x.sin();
            let v = bessel_j(0.5, x).unwrap();
            assert!(((v - exact) / exact).abs() < 1e-12, "x={x}: {v} vs {exact}");
        }
        let x = 7.3f64;
        let exact = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
        assert!(((bessel_j(1.5, x).unwrap() - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn miller_agrees_with_series_oracle() {
        for &(nu, x) in &[(0.0, 3.0), (0.3, 4.5), (2.7, 6.0), (-0.4, 3.5), (10.0, 8.0)] {
            let a = miller(nu, x).unwrap();
            let b = series_oracle(nu, x);
            assert!((a - b).abs() < 1e-11 * b.abs().max(1e-3), "nu={nu} x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn j0_zero_by_series_bisection() {
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if series_oracle(0.0, m) > 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let j = first_zero(0.0).unwrap();
        assert!((j - lo).abs() < 1e-10);
        assert!(bessel_j(0.0, 2.404826).unwrap().abs() < 1e-6);
    }

    #[test]
    fn half_order_zeros_are_closed_form() {
        assert!((first_zero(0.5).unwrap() - PI).abs() < 1e-10);
        // J_{3/2} vanishes where tan x = x
        assert!((first_zero(1.5).unwrap() - 4.493_409_457_909_064).abs() < 1e-10);
    }

    #[test]
    fn zeros_are_zeros_of_j() {
        for nu in [0.0, 0.3, 2.7, 10.0, 40.0, -0.5] {
            let j = first_zero(nu).unwrap();
            let left = bessel_j(nu, j - 1e-6).unwrap();
            let right = bessel_j(nu, j + 1e-6).unwrap();
            assert!(left > 0.0 && right < 0.0, "nu={nu}");
            assert!(bessel_j(nu, j).unwrap().abs() < 1e-11);
        }
    }

    #[test]
    fn large_order_asymptotics() {
        let nu = 1000.0f64;
        let j = first_zero(nu).unwrap();
        let c = (j - nu) / nu.cbrt();
        assert!((1.8..=1.92).contains(&c), "{c}");
    }

    #[test]
    fn interlacing() {
        let mut prev = 0.0;
        for i in 0..=50 {
            let nu = i as f64;
            let a = first_zero(nu).unwrap();
            let b = first_zero(nu + 1.0).unwrap();
            assert!(a < b && a > prev);
            prev = a;
        }
    }

    #[test]
    fn mu_inverts_first_zero() {
        let l = first_zero(0.0).unwrap() / 2.0;
        assert!((mu_of_lambda(l) - 1.0).abs() < 1e-12);
        for &l in &[0.05, 0.7, 3.3, 41.0, 900.0, 1e4] {
            let mu = mu_of_lambda(l);
            assert!((first_zero(mu - 1.0).unwrap() - 2.0 * l).abs() < 1e-9 * l.max(1.0), "λ={l}");
        }
    }

    #[test]
    fn mu_large_lambda() {
        let l = 500.0f64;
        let approx = 2.0 * l - 2f64.cbrt() * 1.85575 * l.cbrt();
        let mu = mu_of_lambda(l);
        assert!(((mu - approx) / mu).abs() < 0.01);
    }

    #[test]
    fn truncated_eigenproblem_consistency() {
        for &l in &[0.3, 1.0, 3.0] {
            let mut prev = 0.0;
            for d in 3..=12 {
                let diag: Vec<f64> = (0..d).map(|k| k as f64).collect();
                let off = vec![-l; d - 1];
                let e = eig_tridiagonal(&diag, &off).unwrap();
                let mu_d = -e.values[0];
                // continued fraction μ = λ²/(1 + μ − λ²/(2 + μ − ...)) truncated at d levels
                let mut p = mu_d + (d - 1) as f64;
                for k in (1..d - 1).rev() {
                    p = (mu_d + k as f64) - l * l / p;
                }
                assert!((mu_d - l * l / p).abs() < 1e-8, "λ={l} d={d}");
                assert!(mu_d >= prev - 1e-12);
                assert!(mu_d <= mu_of_lambda(l) + 1e-12);
                prev = mu_d;
            }
            assert!((mu_of_lambda(l) - prev).abs() < 1e-3);
        }
    }

    #[test]
    fn energy_routes_agree() {
        for &l in &[0.1, 1.0, 10.0, 100.0] {
            let a = energy_of_lambda(l);
            let b = energy_hf(l);
            assert!((a - b).abs() < 1e-6 * b.max(1.0), "λ={l}: {a} vs {b}");
        }
        assert!(energy_of_lambda(1e-3) < 1e-5);
        let grid: Vec<f64> = (0..30).map(|i| 0.1 * 1000f64.powf(i as f64 / 29.0)).collect();
        let es: Vec<f64> = grid.iter().map(|&l| energy_hf(l)).collect();
        assert!(es.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn phi_invariants() {
        for z in [0.3, 1.0, 4.5, 10.0] {
            let r = phi(z);
            assert!(r.phi > 0.0 && r.phi < 1.0);
            assert!((r.energy_check - z).abs() < 1e-6, "z={z} {r:?}");
            assert!((first_zero(r.mu_star - 1.0).unwrap() - 2.0 * r.lambda_star).abs() < 1e-10 * r.lambda_star.max(1.0));
        }
    }

    #[test]
    fn phi_dominates_finite_optimum() {
        for d in [3usize, 5, 9] {
            let z = (d as f64 - 1.0) / 2.0;
            assert!(phi(z).phi >= crate::tau::tau_finite(d) - 1e-9);
        }
    }

    #[test]
    fn phi_small_z() {
        let v: Vec<f64> = [0.01, 0.1, 1.0].iter().map(|&z| phi(z).phi).collect();
        assert!(v[0] < v[1] && v[1] < v[2]);
        assert!(v[0] < 0.11);
    }

    #[test]
    fn power_state_positive_and_consistent() {
        let s = power_state(10.0, 1.0, 1e-14).unwrap();
        let amps = s.amplitudes().unwrap();
        assert!(amps.iter().all(|a| a.re > 0.0));
        let chains = crate::spectrum::ChainDecomposition::ladder(amps.len(), 1.0);
        let t = crate::tau::tau_of_state(&s, &chains).unwrap().tau;
        assert!((t - phi(10.0).phi).abs() < 1e-6);
        assert!((s.mean_energy() - 10.0).abs() < 1e-5);
        assert!(t > crate::tau::tau_coherent(10.0, 1000).tau);
    }
}
