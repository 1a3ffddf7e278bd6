//! Adaptive Simpson quadrature with Richardson correction.
//!
//! Used for the absolute-third-moment integrals, which are smooth except
//! for one |·| kink whose location the caller knows and splits on.

/// Integrate `f` over [a, b] to absolute tolerance `tol` by adaptive
/// Simpson bisection. Each accepted panel applies the Richardson
/// correction (S₂ - S₁)/15, giving sixth-order local behaviour; the
/// tolerance is split in half per bisection so the panel error bounds sum
/// to `tol` overall. Depth is capped to keep pathological integrands from
/// recursing forever — at the cap the best available estimate is used.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
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
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        let half_tol = 0.5 * tol;
        simpson_rec(f, a, m, fa, flm, fm, left, half_tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, half_tol, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        // Simpson with Richardson is exact through degree 5.
        let got = adaptive_simpson(&|x| x * x * x * x * x, 0.0, 2.0, 1e-12);
        assert!((got - 64.0 / 6.0).abs() < 1e-12, "x^5: {got}");
    }

    #[test]
    fn gaussian_moments() {
        // ∫ φ(x) dx over ±10 = 1.
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let got = adaptive_simpson(&phi, -10.0, 10.0, 1e-12);
        assert!((got - 1.0).abs() < 1e-11, "normalization: {got}");
        // E|Z| = √(2/π), splitting on the kink at 0 like real callers do.
        let f = |x: f64| x.abs() * phi(x);
        let got = adaptive_simpson(&f, -10.0, 0.0, 5e-13) + adaptive_simpson(&f, 0.0, 10.0, 5e-13);
        let want = (2.0 / std::f64::consts::PI).sqrt();
        assert!((got - want).abs() < 1e-11, "E|Z|: {got} vs {want}");
    }

    #[test]
    fn oscillatory_integrand() {
        // ∫₀^π sin x dx = 2.
        let got = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((got - 2.0).abs() < 1e-11, "sin: {got}");
    }

    #[test]
    fn respects_requested_tolerance() {
        // A sharp but smooth peak: ∫ 1/(1+x²) over ±50 = 2·atan(50).
        let f = |x: f64| 1.0 / (1.0 + x * x);
        let want = 2.0 * 50.0f64.atan();
        for &tol in &[1e-6, 1e-9, 1e-12] {
            let got = adaptive_simpson(&f, -50.0, 50.0, tol);
            assert!(
                (got - want).abs() < 10.0 * tol,
                "tol {tol:e}: err {:e}",
                (got - want).abs()
            );
        }
    }
}
