//! Gagliardo–Nirenberg and Young-split inequalities:
//!
//! ```text
//! ‖u‖_{p+1}^{p+1} ≤ C ‖u_x‖^{a(p+1)} ‖u‖^{(p+1)(1-a)}
//!                 ≤ C ε ‖u_x‖² + C ε^{-(ν-1)/2} ‖u‖^{2ν}
//! ```
//!
//! The constant `C` is empirical: the largest ratio seen on a calibration set
//! times [`SAFETY_FACTOR`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{edge_gradient_sqr, l2_norm, ComplexField};

pub const SAFETY_FACTOR: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GnParameters {
    pub p: f64,
    /// `½ - 1/(p+1)`.
    pub a: f64,
    /// `1 + 2(p-1)/(5-p)`.
    pub nu: f64,
    /// `(5-p)/4`.
    pub k: f64,
}

impl GnParameters {
    /// `|(1-k)·2 - a(p+1)|` and `|2νk - (1-a)(p+1)|`.
    pub fn consistency_defects(&self) -> (f64, f64) {
        let q = self.p + 1.0;
        (
            ((1.0 - self.k) * 2.0 - self.a * q).abs(),
            (2.0 * self.nu * self.k - (1.0 - self.a) * q).abs(),
        )
    }
}

pub fn gn_parameters(p: f64) -> Result<GnParameters> {
    if !(1.0..5.0).contains(&p) {
        return Err(Error::Domain(format!("exponent p must lie in [1, 5), got {p}")));
    }
    Ok(GnParameters {
        p,
        a: 0.5 - 1.0 / (p + 1.0),
        nu: 1.0 + 2.0 * (p - 1.0) / (5.0 - p),
        k: (5.0 - p) / 4.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GnSample {
    /// `‖u‖_{p+1}^{p+1}`.
    pub lhs: f64,
    /// `‖u_x‖^{a(p+1)} ‖u‖^{(p+1)(1-a)}`.
    pub product: f64,
    /// `lhs / product`, zero when both vanish.
    pub ratio: f64,
}

impl GnSample {
    pub fn holds_with(&self, constant: f64) -> bool {
        self.lhs <= constant * self.product
    }
}

/// `∫|u|^{p+1}` by the trapezoidal rule.
pub fn lp_power(u: &ComplexField, exponent: f64) -> f64 {
    let vals: Vec<f64> = u.values().iter().map(|z| z.norm().powf(exponent)).collect();
    u.grid().trapezoid(&vals)
}

pub fn check_gn(u: &ComplexField, p: f64) -> Result<GnSample> {
    let par = gn_parameters(p)?;
    let q = p + 1.0;
    let lhs = lp_power(u, q);
    let grad = edge_gradient_sqr(u).sqrt();
    let product = grad.powf(par.a * q) * l2_norm(u).powf(q * (1.0 - par.a));
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / product };
    Ok(GnSample { lhs, product, ratio })
}

/// `max ratio × SAFETY_FACTOR` over the calibration set.
pub fn calibrate_gn(samples: &[ComplexField], p: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for u in samples {
        best = best.max(check_gn(u, p)?.ratio);
    }
    Ok(best * SAFETY_FACTOR)
}

#[derive(Clone, Debug, Serialize)]
pub struct GnStudy {
    pub p: f64,
    pub constant: f64,
    /// Largest ratio on the test set.
    pub max_ratio: f64,
    pub samples: usize,
    pub violations: usize,
}

/// Calibrates on one set and counts violations on a disjoint one.
pub fn gn_study(calibration: &[ComplexField], test: &[ComplexField], p: f64) -> Result<GnStudy> {
    let constant = calibrate_gn(calibration, p)?;
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for u in test {
        let s = check_gn(u, p)?;
        max_ratio = max_ratio.max(s.ratio);
        if !s.holds_with(constant) {
            violations += 1;
        }
    }
    Ok(GnStudy {
        p,
        constant,
        max_ratio,
        samples: test.len(),
        violations,
    })
}

/// `A^{1-k} B^k ≤ εA + ε^{-(1/k-1)} B` for `A, B ≥ 0`, `k ∈ (0, 1]`, `ε > 0`.
/// Returns both sides.
pub fn young_split(a: f64, b: f64, k: f64, eps: f64) -> (f64, f64) {
    let lhs = a.powf(1.0 - k) * b.powf(k);
    let rhs = eps * a + eps.powf(-(1.0 / k - 1.0)) * b;
    (lhs, rhs)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct YoungSplitReport {
    pub lhs: f64,
    /// `C‖u_x‖^{a(p+1)}‖u‖^{(p+1)(1-a)}`.
    pub gn_bound: f64,
    /// `Cε‖u_x‖² + Cε^{-(ν-1)/2}‖u‖^{2ν}`.
    pub split_bound: f64,
}

impl YoungSplitReport {
    pub fn gn_holds(&self) -> bool {
        self.lhs <= self.gn_bound
    }

    /// The split bound dominates the GN bound up to rounding.
    pub fn split_dominates(&self) -> bool {
        self.gn_bound <= self.split_bound * (1.0 + 1e-12)
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.split_bound * (1.0 + 1e-12)
    }
}

pub fn check_young_split(u: &ComplexField, p: f64, eps: f64, constant: f64) -> Result<YoungSplitReport> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("ε must be positive, got {eps}")));
    }
    let par = gn_parameters(p)?;
    let s = check_gn(u, p)?;
    let grad2 = edge_gradient_sqr(u);
    let mass = l2_norm(u);
    let split = constant * eps * grad2 + constant * eps.powf(-(par.nu - 1.0) / 2.0) * mass.powf(2.0 * par.nu);
    Ok(YoungSplitReport {
        lhs: s.lhs,
        gn_bound: constant * s.product,
        split_bound: split,
    })
}
