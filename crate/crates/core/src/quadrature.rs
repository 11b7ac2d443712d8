//! Gauss–Legendre rules and the exponential product-integration weights used
//! by the Duhamel operator.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `∫₀ᵇ f` for integrands that are smooth on `(0, b]` but may behave like a
/// non-integer power at 0: geometric panels graded toward the origin, 16
/// Gauss points each.
pub fn integrate_graded(f: impl Fn(f64) -> f64, b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let (x, w) = gauss_legendre(16);
    let mut total = 0.0;
    let mut hi = b;
    for _ in 0..60 {
        let lo = 0.5 * hi;
        let mid = 0.5 * (hi + lo);
        let half = 0.5 * (hi - lo);
        total += x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| wi * f(mid + half * xi))
            .sum::<f64>()
            * half;
        hi = lo;
    }
    total
}

/// Weights `(a, b)` such that
///
/// ```text
/// ∫₀^Δ e^{-iλ(Δ-s)} [w₀ (1 - s/Δ) + w₁ s/Δ] ds = Δ (a w₀ + b w₁),
/// ```
///
/// i.e. exact integration of the exponential against the linear interpolant
/// of the integrand. With `θ = λΔ` and `z = -iθ`:
/// `a = ψ(z) = (e^z (z - 1) + 1)/z²`, `b = φ₁(z) - ψ(z)`, `φ₁(z) = (e^z - 1)/z`.
/// As `θ → 0` they tend to the trapezoidal weights `(½, ½)`.
pub fn exp_linear_weights(theta: f64) -> (Complex64, Complex64) {
    let z = Complex64::new(0.0, -theta);
    if theta.abs() < 0.5 {
        // φ₁ = Σ z^k/(k+1)!,  ψ = Σ z^k/(k!(k+2))
        let mut phi1 = Complex64::new(0.0, 0.0);
        let mut psi = Complex64::new(0.0, 0.0);
        let mut zk = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for k in 0..24 {
            phi1 += zk / (fact * (k as f64 + 1.0));
            psi += zk / (fact * (k as f64 + 2.0));
            zk *= z;
            fact *= k as f64 + 1.0;
        }
        (psi, phi1 - psi)
    } else {
        let ez = z.exp();
        let phi1 = (ez - 1.0) / z;
        let psi = (ez * (z - 1.0) + 1.0) / (z * z);
        (psi, phi1 - psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 14 is exact for 8 points
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn graded_rule_handles_fractional_powers() {
        let v = integrate_graded(|s| s.powf(0.25), 2.0);
        let exact = 2f64.powf(1.25) / 1.25;
        assert!((v - exact).abs() < 1e-13 * exact);
        let v = integrate_graded(|s| s / (1.0 + 0.5 * s), 3.0);
        let exact = 3.0 / 0.5 - (1.0f64 + 1.5).ln() / 0.25;
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn exp_weights_against_brute_force() {
        let (xg, wg) = gauss_legendre(40);
        for &theta in &[0.0, 1e-3, 0.3, 0.49, 0.51, 2.0, 30.0] {
            // brute-force ∫₀¹ e^{-iθ(1-σ)} (1-σ) dσ and ∫ ... σ dσ
            let mut a = Complex64::new(0.0, 0.0);
            let mut b = Complex64::new(0.0, 0.0);
            let panels = 200;
            for p in 0..panels {
                let lo = p as f64 / panels as f64;
                let half = 0.5 / panels as f64;
                for (xi, wi) in xg.iter().zip(&wg) {
                    let s = lo + half * (1.0 + xi);
                    let e = Complex64::new(0.0, -theta * (1.0 - s)).exp();
                    a += e * (1.0 - s) * wi * half;
                    b += e * s * wi * half;
                }
            }
            let (wa, wb) = exp_linear_weights(theta);
            assert!((wa - a).norm() < 1e-13, "theta {theta}");
            assert!((wb - b).norm() < 1e-13, "theta {theta}");
        }
        let (a, b) = exp_linear_weights(0.0);
        assert!((a - 0.5).norm() < 1e-16 && (b - 0.5).norm() < 1e-16);
    }
}
