//! Adaptive Simpson quadrature.

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("quadrature did not converge on [{a}, {b}]: error estimate {error:.3e} exceeds {tol:.3e}")]
pub struct QuadError {
    pub a: f64,
    pub b: f64,
    pub error: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

const MAX_DEPTH: u32 = 48;

/// Integrate `f` over `[a, b]`, starting from `panels` equal panels and bisecting each until
/// successive Simpson estimates agree to the local share of `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, panels: usize) -> Result<Quad, QuadError> {
    if b <= a {
        return Ok(Quad { value: 0.0, error: 0.0 });
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    let mut unresolved = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let hi = if p + 1 == panels { b } else { lo + h };
        let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = simpson(lo, hi, fa, fm, fb);
        let mut acc = Acc::default();
        refine(f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 0, &mut acc);
        value += acc.value;
        error += acc.error;
        unresolved += acc.unresolved;
    }
    if unresolved > tol.max(1e-8) {
        return Err(QuadError { a, b, error: unresolved, tol });
    }
    Ok(Quad { value, error })
}

#[derive(Default)]
struct Acc {
    value: f64,
    error: f64,
    unresolved: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    acc: &mut Acc,
) {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if diff.abs() <= 15.0 * tol || depth >= MAX_DEPTH || (b - a) <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
        acc.value += left + right + diff / 15.0;
        acc.error += diff.abs() / 15.0;
        if diff.abs() > 15.0 * tol {
            acc.unresolved += diff.abs() / 15.0;
        }
        return;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, acc);
    refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, acc);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = integrate(&|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12, 1).unwrap();
        assert!((q.value - 0.0).abs() < 1e-13);
    }

    #[test]
    fn sqrt_endpoint() {
        let q = integrate(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-11, 4).unwrap();
        assert!((q.value - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_mass() {
        let s = 0.01f64;
        let g = move |x: f64| (-(x * x) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
        let q = integrate(&g, -1.0, 1.0, 1e-12, 400).unwrap();
        assert!((q.value - 1.0).abs() < 1e-11);
    }
}
