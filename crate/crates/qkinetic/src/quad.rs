//! Deterministic quadrature: Gauss-Legendre rules, adaptive Simpson and
//! sphere-surface rules used by the kernel and oscillatory diagnostics.

use crate::vec::Vect;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-based initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrates `f` over `[a, b]` with an `n`-point Gauss-Legendre rule.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (xs, ws) = gauss_legendre(n);
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    xs.iter().zip(&ws).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = (a + b) / 2.0;
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + rec(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 40)
}

/// A quadrature rule over the unit sphere S^{d-1}: points and surface
/// weights summing to `sphere_area(d)`.
///
/// d = 3 uses Gauss-Legendre in the polar cosine crossed with a uniform
/// azimuthal grid; d = 2 is the uniform circle rule; d = 1 is the
/// two-point counting measure.
pub fn sphere_rule(d: usize, resolution: usize) -> Vec<(Vect, f64)> {
    match d {
        1 => vec![
            (Vect::from_slice(&[1.0]), 1.0),
            (Vect::from_slice(&[-1.0]), 1.0),
        ],
        2 => {
            let n = resolution.max(4);
            let w = 2.0 * std::f64::consts::PI / n as f64;
            (0..n)
                .map(|k| {
                    let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
                    (Vect::from_slice(&[th.cos(), th.sin()]), w)
                })
                .collect()
        }
        3 => {
            let n_polar = resolution.max(4);
            let n_azi = 2 * n_polar;
            let (cs, ws) = gauss_legendre(n_polar);
            let wa = 2.0 * std::f64::consts::PI / n_azi as f64;
            let mut out = Vec::with_capacity(n_polar * n_azi);
            for (c, w) in cs.iter().zip(&ws) {
                let s = (1.0 - c * c).max(0.0).sqrt();
                for k in 0..n_azi {
                    let ph = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_azi as f64;
                    out.push((Vect::from_slice(&[s * ph.cos(), s * ph.sin(), *c]), w * wa));
                }
            }
            out
        }
        _ => panic!("unsupported dimension {d}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::sphere_area;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        // 8-point rule is exact through degree 15
        let v = integrate_gl(|x| x.powi(14), -1.0, 1.0, 8);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn gl_gaussian_moment() {
        let v = integrate_gl(|x| (-x * x / 2.0).exp(), -10.0, 10.0, 64);
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn adaptive_simpson_matches_gl() {
        let f = |x: f64| (x.sin() * 3.0).exp();
        let a = adaptive_simpson(&f, 0.0, 2.0, 1e-10);
        let b = integrate_gl(f, 0.0, 2.0, 48);
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn sphere_rules_integrate_constants_and_quadratics() {
        for d in 1..=3 {
            let rule = sphere_rule(d, 24);
            let area: f64 = rule.iter().map(|(_, w)| w).sum();
            assert!((area - sphere_area(d)).abs() < 1e-10, "d={d}");
            // \int (omega . e1)^2 domega = area / d
            let q: f64 = rule.iter().map(|(w, wt)| wt * w.0[0] * w.0[0]).sum();
            assert!((q - sphere_area(d) / d as f64).abs() < 1e-10, "d={d}");
        }
    }
}
