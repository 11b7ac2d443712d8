//! The potential `V = V₁ + V₂` (with `V₁ ≥ 0` and `V₂` uniformly locally
//! integrable) and numerical checks of the hypotheses placed on it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::{parse_real, split_call};
use crate::field::{derivative, l2_norm, ComplexField, Grid};
use crate::hamiltonian::Hamiltonian;

/// Regularity near the boundary: `V ∈ W₁,₂((0, δ))`. Required whenever the
/// boundary force is not identically zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryRegularity {
    pub delta: f64,
}

/// `(V')₊ ≤ C V₁ + Q` with `Q` uniformly locally integrable.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeSplit {
    pub c: f64,
    pub q: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PotentialSpec {
    grid: Grid,
    v1: Vec<f64>,
    v2: Vec<f64>,
    sqrt_v1: Vec<f64>,
    regularity: Option<BoundaryRegularity>,
    dv: Option<Vec<f64>>,
    dv_split: Option<DerivativeSplit>,
    notes: Vec<String>,
}

impl PotentialSpec {
    pub fn new(grid: Grid, v1: Vec<f64>, v2: Vec<f64>) -> Result<Self> {
        for v in [&v1, &v2] {
            if v.len() != grid.len() {
                return Err(Error::LengthMismatch {
                    expected: grid.len(),
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("potential samples".into()));
            }
        }
        if let Some(j) = v1.iter().position(|&x| x < 0.0) {
            return Err(Error::Config(format!(
                "V₁ ≥ 0 violated at x = {} (V₁ = {})",
                grid.x(j),
                v1[j]
            )));
        }
        let sqrt_v1 = v1.iter().map(|v| v.sqrt()).collect();
        Ok(Self {
            grid,
            v1,
            v2,
            sqrt_v1,
            regularity: None,
            dv: None,
            dv_split: None,
            notes: Vec::new(),
        })
    }

    pub fn zero(grid: Grid) -> Self {
        Self::new(grid, vec![0.0; grid.len()], vec![0.0; grid.len()])
            .expect("zero potential is valid")
            .with_regularity(grid.length())
            .with_derivative(vec![0.0; grid.len()])
    }

    /// Declares `V ∈ W₁,₂((0, δ))`.
    pub fn with_regularity(mut self, delta: f64) -> Self {
        self.regularity = Some(BoundaryRegularity { delta });
        self
    }

    /// Supplies samples of the (distributional) derivative `V'`.
    pub fn with_derivative(mut self, dv: Vec<f64>) -> Self {
        assert_eq!(dv.len(), self.grid.len());
        self.dv = Some(dv);
        self
    }

    pub fn with_derivative_split(mut self, c: f64, q: Vec<f64>) -> Self {
        assert_eq!(q.len(), self.grid.len());
        self.dv_split = Some(DerivativeSplit { c, q });
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn v1(&self) -> &[f64] {
        &self.v1
    }

    pub fn v2(&self) -> &[f64] {
        &self.v2
    }

    /// `q = √V₁`.
    pub fn sqrt_v1(&self) -> &[f64] {
        &self.sqrt_v1
    }

    pub fn total(&self) -> Vec<f64> {
        self.v1.iter().zip(&self.v2).map(|(a, b)| a + b).collect()
    }

    /// Value used for `V(0)`: the first interior node, which converges to the
    /// trace of `V` (continuous near 0 under the regularity hypothesis).
    pub fn boundary_value(&self) -> f64 {
        self.v1[1] + self.v2[1]
    }

    pub fn regularity(&self) -> Option<BoundaryRegularity> {
        self.regularity
    }

    pub fn derivative(&self) -> Option<&[f64]> {
        self.dv.as_deref()
    }

    /// Analytic `V'` when supplied, centered differences otherwise. The
    /// flag is `false` for the difference fallback, which misses jump parts.
    pub fn derivative_or_differences(&self) -> (Vec<f64>, bool) {
        match &self.dv {
            Some(dv) => (dv.clone(), true),
            None => {
                let v = ComplexField::from_real(self.grid, &self.total()).expect("grid length");
                (derivative(&v).values().iter().map(|z| z.re).collect(), false)
            }
        }
    }

    pub fn derivative_split(&self) -> Option<&DerivativeSplit> {
        self.dv_split.as_ref()
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }
}

/// Named potentials addressable from configuration files.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialPreset {
    Zero,
    /// `V₂ ≡ c`.
    Constant { c: f64 },
    /// `V₁ = ω² x²`.
    Harmonic { omega: f64 },
    /// `V₁ = eˣ`.
    Exp,
    /// `V₂ = -Z / max(x, h)`.
    CoulombLike { z: f64 },
    /// `V₂ = -V₀ 1_{[a,b]}`.
    Well { depth: f64, a: f64, b: f64 },
}

impl PotentialPreset {
    pub const NAMES: [&'static str; 6] = [
        "zero",
        "constant(c)",
        "harmonic(omega)",
        "exp",
        "coulomb_like(Z)",
        "well(depth,a,b)",
    ];

    pub fn parse(text: &str) -> Result<Self> {
        let (name, args) = split_call(text)?;
        let nums = args.iter().map(|a| parse_real(a)).collect::<Result<Vec<f64>>>()?;
        match (name, nums.len()) {
            ("zero", 0) => Ok(Self::Zero),
            ("constant", 1) => Ok(Self::Constant { c: nums[0] }),
            ("harmonic", 1) => Ok(Self::Harmonic { omega: nums[0] }),
            ("exp", 0) => Ok(Self::Exp),
            ("coulomb_like", 1) => Ok(Self::CoulombLike { z: nums[0] }),
            ("well", 3) => Ok(Self::Well {
                depth: nums[0],
                a: nums[1],
                b: nums[2],
            }),
            _ => Err(Error::Parse(format!("unknown or malformed potential preset `{text}`"))),
        }
    }

    pub fn build(&self, grid: Grid) -> Result<PotentialSpec> {
        let n = grid.len();
        let l = grid.length();
        Ok(match *self {
            PotentialPreset::Zero => PotentialSpec::zero(grid),
            PotentialPreset::Constant { c } => PotentialSpec::new(grid, vec![0.0; n], vec![c; n])?
                .with_regularity(l)
                .with_derivative(vec![0.0; n]),
            PotentialPreset::Harmonic { omega } => {
                let w2 = omega * omega;
                PotentialSpec::new(grid, grid.sample(|x| w2 * x * x), vec![0.0; n])?
                    .with_regularity(l)
                    .with_derivative(grid.sample(|x| 2.0 * w2 * x))
                    // 2ω²x ≤ ω²x² + ω²
                    .with_derivative_split(1.0, vec![w2; n])
            }
            PotentialPreset::Exp => PotentialSpec::new(grid, grid.sample(f64::exp), vec![0.0; n])?
                .with_regularity(l)
                .with_derivative(grid.sample(f64::exp))
                .with_derivative_split(1.0, vec![0.0; n]),
            PotentialPreset::CoulombLike { z } => {
                let h = grid.spacing();
                PotentialSpec::new(grid, vec![0.0; n], grid.sample(|x| -z / x.max(h)))?
                    .with_derivative(grid.sample(|x| if x > h { z / (x * x) } else { 0.0 }))
                    .with_note(format!(
                        "singular potential clipped at the first interior node x = {h}"
                    ))
            }
            PotentialPreset::Well { depth, a, b } => {
                if !(a >= 0.0 && b > a) {
                    return Err(Error::Config(format!("well needs 0 ≤ a < b, got [{a}, {b}]")));
                }
                let spec = PotentialSpec::new(
                    grid,
                    vec![0.0; n],
                    grid.sample(|x| if (a..=b).contains(&x) { -depth } else { 0.0 }),
                )?
                .with_note("V' has jump parts; difference derivative does not capture them");
                if a > 0.0 {
                    spec.with_regularity(a)
                } else {
                    spec
                }
            }
        })
    }
}

/// `sup_x ∫ₓ^{x+window} |W|` over grid start points, with the window clamped
/// to `[0, L]`. Partial cells use the linear interpolant of `|W|`.
pub fn local_l1_sup(grid: &Grid, w: &[f64], window: f64) -> Result<f64> {
    if window > grid.length() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "window {window} exceeds domain length {}",
            grid.length()
        )));
    }
    let h = grid.spacing();
    let a: Vec<f64> = w.iter().map(|v| v.abs()).collect();
    let n = a.len();
    // cumulative trapezoid at nodes
    let mut cum = vec![0.0; n];
    for j in 1..n {
        cum[j] = cum[j - 1] + 0.5 * h * (a[j - 1] + a[j]);
    }
    let integral_to = |x: f64| -> f64 {
        if x >= grid.length() {
            return cum[n - 1];
        }
        let j = ((x / h).floor() as usize).min(n - 2);
        let s = x - grid.x(j);
        let slope = (a[j + 1] - a[j]) / h;
        cum[j] + a[j] * s + 0.5 * slope * s * s
    };
    let mut best: f64 = 0.0;
    for j in 0..n {
        let x = grid.x(j);
        let end = (x + window).min(grid.length());
        best = best.max(integral_to(end) - cum[j]);
        if x + window >= grid.length() {
            break;
        }
    }
    Ok(best)
}

/// `K_ε = C(1 + 1/δ)` with `δ = ε/C`, i.e. `C + C²/ε`.
pub fn kato_constant(c: f64, eps: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c + c * c / eps
    }
}

/// Constant for the operator-bound variant `‖V₂φ‖² ≤ ε‖H₀φ‖² + K‖φ‖²` with
/// `C = sup ∫|V₂|²` over unit windows: `K = C + ε + C²/(2ε)`.
pub fn kato_constant_operator(c: f64, eps: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c + eps + c * c / (2.0 * eps)
    }
}

/// Slack tolerated before a sample counts as a violation.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct RelativeBoundReport {
    pub eps: f64,
    /// `sup ∫ₓ^{x+1} |V₂|`.
    pub c: f64,
    pub k_eps: f64,
    pub samples: usize,
    /// Smallest `rhs - lhs` over the samples.
    pub worst_margin: f64,
    /// Smallest `(rhs - lhs) / max(rhs, tiny)`.
    pub worst_relative_margin: f64,
    pub violations: usize,
    pub operator_bound: Option<OperatorBoundReport>,
    pub notes: Vec<String>,
}

impl RelativeBoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.operator_bound.as_ref().is_none_or(|r| r.violations == 0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OperatorBoundReport {
    /// `sup ∫ₓ^{x+1} |V₂|²`.
    pub c: f64,
    pub k_eps: f64,
    pub worst_margin: f64,
    pub violations: usize,
}

/// Checks `∫|V₂||φ|² ≤ ε‖φ'‖² + K_ε‖φ‖²` on every sample. With
/// `operator_bound` set, also checks `‖V₂φ‖² ≤ ε‖H₀φ‖² + K‖φ‖²` on samples
/// that vanish at the boundary.
pub fn verify_relative_bound(
    spec: &PotentialSpec,
    eps: f64,
    samples: &[ComplexField],
    operator_bound: bool,
) -> Result<RelativeBoundReport> {
    let grid = spec.grid;
    let window = 1.0f64.min(grid.length());
    let c = local_l1_sup(&grid, &spec.v2, window)?;
    let k_eps = kato_constant(c, eps);
    let abs_v2: Vec<f64> = spec.v2.iter().map(|v| v.abs()).collect();

    let mut worst_margin = f64::INFINITY;
    let mut worst_relative = f64::INFINITY;
    let mut violations = 0;
    for phi in samples {
        let dens = phi.density();
        let lhs = grid.trapezoid(&dens.iter().zip(&abs_v2).map(|(d, v)| d * v).collect::<Vec<_>>());
        let grad = l2_norm(&derivative(phi));
        let rhs = eps * grad * grad + k_eps * grid.trapezoid(&dens);
        let margin = rhs - lhs;
        worst_margin = worst_margin.min(margin);
        worst_relative = worst_relative.min(margin / rhs.max(f64::MIN_POSITIVE));
        if margin < -QUADRATURE_TOLERANCE * rhs.max(1.0) {
            violations += 1;
        }
    }

    let operator_bound = if operator_bound {
        let sq: Vec<f64> = spec.v2.iter().map(|v| v * v).collect();
        let c2 = local_l1_sup(&grid, &sq, window)?;
        let k2 = kato_constant_operator(c2, eps);
        let free = Hamiltonian::free(grid)?;
        let mut worst = f64::INFINITY;
        let mut viol = 0;
        for phi in samples.iter().filter(|p| p.left().norm() == 0.0) {
            let lhs = l2_norm(&phi.mul_real(&spec.v2)?).powi(2);
            let rhs = eps * l2_norm(&free.apply(phi)).powi(2) + k2 * l2_norm(phi).powi(2);
            worst = worst.min(rhs - lhs);
            if rhs - lhs < -QUADRATURE_TOLERANCE * rhs.max(1.0) {
                viol += 1;
            }
        }
        Some(OperatorBoundReport {
            c: c2,
            k_eps: k2,
            worst_margin: worst,
            violations: viol,
        })
    } else {
        None
    };

    Ok(RelativeBoundReport {
        eps,
        c,
        k_eps,
        samples: samples.len(),
        worst_margin,
        worst_relative_margin: worst_relative,
        violations,
        operator_bound,
        notes: spec.notes.clone(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeSplitReport {
    pub c: f64,
    /// `max((V')₊ - C V₁ - Q)` over nodes; the split holds when ≤ 0.
    pub max_excess: f64,
    pub holds: bool,
    /// `sup ∫|Q|` over unit windows (finite on a bounded grid; reported).
    pub q_local_l1: f64,
    /// `sup ∫(V')₋` over unit windows, the local integrability proxy.
    pub negative_part_local_l1: f64,
    pub analytic_derivative: bool,
}

/// Checks `(V')₊ ≤ C V₁ + Q` at every node.
pub fn verify_derivative_split(spec: &PotentialSpec) -> Result<DerivativeSplitReport> {
    let split = spec.dv_split.as_ref().ok_or_else(|| {
        Error::Config("derivative split (V')₊ ≤ C V₁ + Q not supplied".into())
    })?;
    let dv = spec.dv.as_ref().ok_or_else(|| {
        Error::Config("derivative split needs the derivative V' samples".into())
    })?;
    let scale = 1.0 + spec.v1.iter().chain(&split.q).fold(0.0f64, |m, v| m.max(v.abs()));
    let max_excess = dv
        .iter()
        .zip(&spec.v1)
        .zip(&split.q)
        .map(|((d, v1), q)| d.max(0.0) - split.c * v1 - q)
        .fold(f64::NEG_INFINITY, f64::max);
    let window = 1.0f64.min(spec.grid.length());
    let neg: Vec<f64> = dv.iter().map(|d| (-d).max(0.0)).collect();
    Ok(DerivativeSplitReport {
        c: split.c,
        max_excess,
        holds: max_excess <= 1e-12 * scale,
        q_local_l1: local_l1_sup(&spec.grid, &split.q, window)?,
        negative_part_local_l1: local_l1_sup(&spec.grid, &neg, window)?,
        analytic_derivative: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{random_smooth_field, RandomFieldOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn local_l1_examples() {
        let g = Grid::new(4.0, 399).unwrap();
        assert_eq!(local_l1_sup(&g, &vec![0.0; g.len()], 1.0).unwrap(), 0.0);
        let c = local_l1_sup(&g, &vec![-2.5; g.len()], 1.0).unwrap();
        assert!((c - 2.5).abs() < 1e-12);
        let ind = g.sample(|x| if x <= 1.0 { 1.0 } else { 0.0 });
        let v = local_l1_sup(&g, &ind, 1.0).unwrap();
        assert!((v - 1.0).abs() < 2.0 * g.spacing());
        assert!(local_l1_sup(&g, &ind, 5.0).is_err());
    }

    #[test]
    fn local_l1_window_not_multiple_of_h() {
        let g = Grid::new(3.0, 20).unwrap();
        let c = local_l1_sup(&g, &vec![1.0; g.len()], 1.0).unwrap();
        assert!((c - 1.0).abs() < 1e-13);
    }

    #[test]
    fn local_l1_subadditive() {
        let g = Grid::new(5.0, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a: Vec<f64> = random_smooth_field(g, &mut rng, &RandomFieldOptions::default())
                .values()
                .iter()
                .map(|z| z.re)
                .collect();
            let b: Vec<f64> = random_smooth_field(g, &mut rng, &RandomFieldOptions::default())
                .values()
                .iter()
                .map(|z| z.im)
                .collect();
            let s: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.abs() + y.abs()).collect();
            let lhs = local_l1_sup(&g, &s, 1.0).unwrap();
            let rhs = local_l1_sup(&g, &a, 1.0).unwrap() + local_l1_sup(&g, &b, 1.0).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn kato_constant_examples() {
        assert_eq!(kato_constant(0.0, 0.3), 0.0);
        assert_eq!(kato_constant(1.0, 1.0), 2.0);
        assert_eq!(kato_constant(2.0, 0.5), 10.0);
        // monotone: decreasing in ε, increasing in C
        assert!(kato_constant(1.0, 0.1) > kato_constant(1.0, 0.2));
        assert!(kato_constant(1.5, 0.1) > kato_constant(1.0, 0.1));
    }

    #[test]
    fn v1_must_be_nonnegative() {
        let g = Grid::new(1.0, 10).unwrap();
        let mut v1 = vec![0.0; g.len()];
        v1[3] = -1e-3;
        assert!(matches!(
            PotentialSpec::new(g, v1, vec![0.0; g.len()]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn relative_bound_simple_cases() {
        let g = Grid::new(6.0, 200).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<_> = (0..30)
            .map(|_| random_smooth_field(g, &mut rng, &RandomFieldOptions::default()))
            .collect();
        let zero = PotentialSpec::zero(g);
        let r = verify_relative_bound(&zero, 0.5, &samples, true).unwrap();
        assert!(r.passed() && r.worst_margin >= 0.0);
        let one = PotentialSpec::new(g, vec![0.0; g.len()], vec![1.0; g.len()]).unwrap();
        let r = verify_relative_bound(&one, 0.5, &samples, false).unwrap();
        assert!((r.c - 1.0).abs() < 1e-12 && (r.k_eps - 3.0).abs() < 1e-12);
        assert!(r.passed());
    }

    #[test]
    fn relative_bound_inverse_square_root() {
        let g = Grid::new(6.0, 300).unwrap();
        let h = g.spacing();
        let spec =
            PotentialSpec::new(g, vec![0.0; g.len()], g.sample(|x| x.max(h).powf(-0.5))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples: Vec<_> = (0..100)
            .map(|_| random_smooth_field(g, &mut rng, &RandomFieldOptions::default()))
            .collect();
        for eps in [0.1, 1.0] {
            let r = verify_relative_bound(&spec, eps, &samples, false).unwrap();
            assert!(r.passed() && r.worst_margin > 0.0, "{r:?}");
        }
    }

    #[test]
    fn derivative_split_examples() {
        let g = Grid::new(5.0, 100).unwrap();
        let zero = PotentialSpec::zero(g).with_derivative_split(0.0, vec![0.0; g.len()]);
        assert!(verify_derivative_split(&zero).unwrap().holds);
        let harm = PotentialSpec::new(g, g.sample(|x| x * x), vec![0.0; g.len()])
            .unwrap()
            .with_derivative(g.sample(|x| 2.0 * x))
            .with_derivative_split(1.0, vec![1.0; g.len()]);
        assert!(verify_derivative_split(&harm).unwrap().holds);
        let exp = PotentialPreset::Exp.build(g).unwrap();
        let r = verify_derivative_split(&exp).unwrap();
        assert!(r.holds && r.max_excess <= 0.0);
        let bad = PotentialSpec::new(g, g.sample(|x| x * x), vec![0.0; g.len()])
            .unwrap()
            .with_derivative(g.sample(|x| 2.0 * x))
            .with_derivative_split(0.0, vec![0.5; g.len()]);
        assert!(!verify_derivative_split(&bad).unwrap().holds);
        assert!(matches!(
            verify_derivative_split(&PotentialSpec::new(g, vec![0.0; g.len()], vec![0.0; g.len()]).unwrap()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn presets_build() {
        let g = Grid::new(8.0, 64).unwrap();
        for p in [
            PotentialPreset::Zero,
            PotentialPreset::Constant { c: -1.5 },
            PotentialPreset::Harmonic { omega: 0.5 },
            PotentialPreset::Exp,
            PotentialPreset::CoulombLike { z: 1.0 },
            PotentialPreset::Well { depth: 2.0, a: 1.0, b: 3.0 },
        ] {
            let s = p.build(g).unwrap();
            assert!(s.v1().iter().all(|&v| v >= 0.0));
        }
        let c = PotentialPreset::CoulombLike { z: 2.0 }.build(g).unwrap();
        assert_eq!(c.v2()[0], -2.0 / g.spacing());
        assert!(c.regularity().is_none());
        assert!(!c.notes().is_empty());
    }

    #[test]
    fn preset_parsing() {
        assert_eq!(PotentialPreset::parse("harmonic(0.5)").unwrap(), PotentialPreset::Harmonic { omega: 0.5 });
        assert_eq!(PotentialPreset::parse(" exp ").unwrap(), PotentialPreset::Exp);
        assert_eq!(
            PotentialPreset::parse("well(2, 1, 3)").unwrap(),
            PotentialPreset::Well { depth: 2.0, a: 1.0, b: 3.0 }
        );
        assert!(PotentialPreset::parse("harmonic").is_err());
        assert!(PotentialPreset::parse("square(1)").is_err());
    }
}
