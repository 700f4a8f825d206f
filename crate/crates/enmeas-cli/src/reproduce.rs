use enmeas::bell;
use enmeas::bessel::phi;
use enmeas::charact::{membership_finite, CharactOptions, Verdict};
use enmeas::distances::{classical_distance, quantum_distance};
use enmeas::linalg::max_eigenvalue;
use enmeas::povm::{degrade, Povm};
use enmeas::tau::{a_matrix, epsilon_from_tau, tau_coherent, tau_finite};
use serde::Serialize;
use std::f64::consts::SQRT_2;

#[derive(Debug, Serialize)]
pub struct Check {
    pub check: String,
    pub expected: f64,
    pub computed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(name: impl Into<String>, expected: f64, computed: f64, tolerance: f64) -> Check {
    Check { check: name.into(), expected, computed, tolerance, pass: (computed - expected).abs() <= tolerance }
}

fn flag(name: impl Into<String>, ok: bool) -> Check {
    let v = if ok { 1.0 } else { 0.0 };
    Check { check: name.into(), expected: 1.0, computed: v, tolerance: 0.0, pass: ok }
}

/// Every reference value, in a fixed order.
pub fn run_all(opts: &CharactOptions) -> Vec<Check> {
    let mut out = Vec::new();
    out.push(check("chsh value of the dephased state", 1.0 + 0.75 * SQRT_2, bell::chsh_value(&bell::dephased_scenario()).unwrap_or(f64::NAN), 1e-12));
    out.push(check("chsh value rounded", 2.0607, 1.0 + 0.75 * SQRT_2, 5e-5));
    out.push(check("chsh mixture bound", 2.2071, bell::chsh_mixture_bound(), 5e-5));
    for d in 2..=10usize {
        out.push(check(format!("tau_finite({d}) = max eigenvalue of A_{d}"), max_eigenvalue(&a_matrix(d)), tau_finite(d), 1e-10));
    }
    out.push(check("epsilon at d = 2", 0.25, epsilon_from_tau(tau_finite(2)), 1e-15));
    for d in [2usize, 3] {
        let t = tau_finite(d);
        let inside = membership_finite(&degrade(&Povm::sigma_x(), t - 1e-4), d, opts).map(|v| v.verdict);
        let outside = membership_finite(&degrade(&Povm::sigma_x(), t + 1e-4), d, opts).map(|v| v.verdict);
        out.push(flag(
            format!("sigma_x boundary at cos(pi/{}) for d = {d}", d + 1),
            matches!(inside, Ok(Verdict::Member)) && matches!(outside, Ok(Verdict::NonMember)),
        ));
    }
    let grid: Vec<f64> = (0..50).map(|i| 0.5 + 199.5 * i as f64 / 49.0).collect();
    let values: Vec<f64> = grid.iter().map(|&z| phi(z).phi).collect();
    out.push(flag("phi increasing on [0.5, 200]", values.windows(2).all(|w| w[1] > w[0])));
    out.push(check("(1 - phi(100)) * 100^2", 0.9468, (1.0 - phi(100.0).phi) * 1e4, 0.01));
    let tc = tau_coherent(100.0, 1_000_000).tau;
    out.push(check("(1 - tau_coherent) * 8|alpha|^2 at |alpha|^2 = 100", 1.0, (1.0 - tc) * 800.0, 0.1));
    let tp = phi(100.0).phi;
    out.push(check("half exponent ratio power vs coherent at 100", 1.0, 0.5 * (1.0 - tp).log10() / (1.0 - tc).log10(), 0.25));
    let z = Povm::computational(2);
    let x = Povm::sigma_x();
    out.push(check("classical distance Z vs X", 1.0 / SQRT_2, classical_distance(&z, &x).map_or(f64::NAN, |r| r.value), 1e-10));
    out.push(check("quantum distance Z vs X", 1.0 / SQRT_2, quantum_distance(&z, &x).map_or(f64::NAN, |r| r.value), 1e-6));
    out
}
