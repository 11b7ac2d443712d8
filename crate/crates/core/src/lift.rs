//! Boundary forces `f(t)`, the cutoff `g`, and the lift
//! `r(x,t) = [f + ½x²A(t)] g(x)` with `A = V(0) f + F(0,t,f) - i f'` that
//! turns the Dirichlet data into a zero-boundary problem for `v = u - r`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid};
use crate::jet::{smooth_step, smooth_step_jet, Jet};
use crate::nonlinearity::{parse_real, split_call, NonlinearitySpec};
use crate::potential::PotentialSpec;

pub type ScalarFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Dirichlet data `u(0, t) = f(t)` with its derivatives.
#[derive(Clone)]
pub struct BoundaryForce {
    name: String,
    f: ScalarFn,
    df: Option<ScalarFn>,
    d2f: Option<ScalarFn>,
    d3f: Option<ScalarFn>,
    zero: bool,
}

impl fmt::Debug for BoundaryForce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryForce").field("name", &self.name).finish()
    }
}

/// Real profile with jets, scaled by a complex amplitude.
fn from_jet(
    name: String,
    amplitude: Complex64,
    profile: impl Fn(Jet) -> Jet + Send + Sync + Clone + 'static,
) -> BoundaryForce {
    let deriv = |k: usize| -> ScalarFn {
        let p = profile.clone();
        Arc::new(move |t| amplitude * p(Jet::variable(t)).derivatives()[k])
    };
    BoundaryForce {
        name,
        f: deriv(0),
        df: Some(deriv(1)),
        d2f: Some(deriv(2)),
        d3f: Some(deriv(3)),
        zero: amplitude == Complex64::new(0.0, 0.0),
    }
}

impl BoundaryForce {
    pub fn zero() -> Self {
        let z: ScalarFn = Arc::new(|_| Complex64::new(0.0, 0.0));
        Self {
            name: "zero".into(),
            f: z.clone(),
            df: Some(z.clone()),
            d2f: Some(z.clone()),
            d3f: Some(z),
            zero: true,
        }
    }

    /// User-supplied callbacks; `d2f` (and `df`) are required for any
    /// nonzero force once the lift is built.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        df: Option<ScalarFn>,
        d2f: Option<ScalarFn>,
        d3f: Option<ScalarFn>,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            df,
            d2f,
            d3f,
            zero: false,
        }
    }

    /// `A sin(ωt)`.
    pub fn sinusoid(amplitude: f64, omega: f64) -> Self {
        from_jet(
            format!("sinusoid({amplitude},{omega})"),
            Complex64::new(amplitude, 0.0),
            move |t: Jet| t.scale(omega).sin_cos().0,
        )
    }

    /// `A S(t / T_r)` with the smooth step `S`.
    pub fn ramp(amplitude: f64, rise: f64) -> Self {
        from_jet(
            format!("ramp({amplitude},{rise})"),
            Complex64::new(amplitude, 0.0),
            move |t: Jet| smooth_step_jet(t.scale(1.0 / rise)),
        )
    }

    /// `A sin(ωt) S(t / T_r)`: flat to all orders at `t = 0`.
    pub fn ramped_sinusoid(amplitude: f64, omega: f64, rise: f64) -> Self {
        from_jet(
            format!("ramped_sinusoid({amplitude},{omega},{rise})"),
            Complex64::new(amplitude, 0.0),
            move |t: Jet| t.scale(omega).sin_cos().0 * smooth_step_jet(t.scale(1.0 / rise)),
        )
    }

    /// `A e^{iωt}`.
    pub fn phase(amplitude: f64, omega: f64) -> Self {
        let name = format!("phase({amplitude},{omega})");
        let d = move |k: i32| -> ScalarFn {
            Arc::new(move |t: f64| {
                amplitude * Complex64::new(0.0, omega).powi(k) * Complex64::from_polar(1.0, omega * t)
            })
        };
        Self {
            name,
            f: d(0),
            df: Some(d(1)),
            d2f: Some(d(2)),
            d3f: Some(d(3)),
            zero: amplitude == 0.0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn has_second_derivative(&self) -> bool {
        self.df.is_some() && self.d2f.is_some()
    }

    pub fn value(&self, t: f64) -> Complex64 {
        (self.f)(t)
    }

    /// `[f, f', f'']`; missing callbacks are an error naming the hypothesis.
    pub fn jet2(&self, t: f64) -> Result<[Complex64; 3]> {
        let df = self.df.as_ref().ok_or_else(missing("df"))?;
        let d2f = self.d2f.as_ref().ok_or_else(missing("d2f"))?;
        Ok([(self.f)(t), df(t), d2f(t)])
    }

    pub fn third_derivative(&self, t: f64) -> Option<Complex64> {
        self.d3f.as_ref().map(|d| d(t))
    }

    /// `self + eps·other`.
    pub fn perturbed(&self, other: &BoundaryForce, eps: f64) -> BoundaryForce {
        let comb = |a: Option<ScalarFn>, b: Option<ScalarFn>| -> Option<ScalarFn> {
            match (a, b) {
                (Some(a), Some(b)) => Some(Arc::new(move |t| a(t) + eps * b(t))),
                _ => None,
            }
        };
        let (fa, fb) = (self.f.clone(), other.f.clone());
        BoundaryForce {
            name: format!("{}+{eps}*{}", self.name, other.name),
            f: Arc::new(move |t| fa(t) + eps * fb(t)),
            df: comb(self.df.clone(), other.df.clone()),
            d2f: comb(self.d2f.clone(), other.d2f.clone()),
            d3f: comb(self.d3f.clone(), other.d3f.clone()),
            zero: self.zero && (other.zero || eps == 0.0),
        }
    }

    /// Spot-check of `df`, `d2f` against central differences of `f`, `df`
    /// at the given times (relative tolerance 1e-6).
    pub fn check_derivatives(&self, times: &[f64]) -> Result<()> {
        let (Some(df), Some(d2f)) = (&self.df, &self.d2f) else {
            return Err(missing("d2f")());
        };
        for &t in times {
            let s = 1e-5 * (1.0 + t.abs());
            let fd1 = ((self.f)(t + s) - (self.f)(t - s)) / (2.0 * s);
            let fd2 = (df(t + s) - df(t - s)) / (2.0 * s);
            let scale = 1.0 + (self.f)(t).norm() + df(t).norm() + d2f(t).norm();
            if (fd1 - df(t)).norm() > 1e-6 * scale || (fd2 - d2f(t)).norm() > 1e-6 * scale {
                return Err(Error::Config(format!(
                    "Assumption B: derivatives of `{}` inconsistent with f at t = {t}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

fn missing(what: &'static str) -> impl Fn() -> Error {
    move || Error::Config(format!("Assumption B: f ∉ C² — {what} missing"))
}

/// `max_t max(|f-g|, |f'-g'|, |f''-g''|)` over `samples + 1` uniform times in
/// `[0, T]`.
pub fn c2_distance(a: &BoundaryForce, b: &BoundaryForce, time: f64, samples: usize) -> Result<f64> {
    let mut d: f64 = 0.0;
    for k in 0..=samples {
        let t = time * k as f64 / samples as f64;
        let (ja, jb) = (a.jet2(t)?, b.jet2(t)?);
        for (x, y) in ja.iter().zip(&jb) {
            d = d.max((x - y).norm());
        }
    }
    Ok(d)
}

/// Named forces for configuration files.
#[derive(Clone, Debug, PartialEq)]
pub enum ForcePreset {
    Zero,
    Sinusoid { amplitude: f64, omega: f64 },
    Ramp { amplitude: f64, rise: f64 },
    RampedSinusoid { amplitude: f64, omega: f64, rise: f64 },
    Phase { amplitude: f64, omega: f64 },
}

impl ForcePreset {
    pub const NAMES: [&'static str; 5] = [
        "zero",
        "sinusoid(A,omega)",
        "ramp(A,T_r)",
        "ramped_sinusoid(A,omega,T_r)",
        "phase(A,omega)",
    ];

    pub fn parse(text: &str) -> Result<Self> {
        let (name, args) = split_call(text)?;
        let nums = args.iter().map(|a| parse_real(a)).collect::<Result<Vec<f64>>>()?;
        let want = |n: usize| -> Result<()> {
            if nums.len() != n {
                return Err(Error::Parse(format!("`{name}` takes {n} arguments: {text}")));
            }
            Ok(())
        };
        match name {
            "zero" => want(0).map(|_| Self::Zero),
            "sinusoid" => want(2).map(|_| Self::Sinusoid { amplitude: nums[0], omega: nums[1] }),
            "ramp" => want(2).map(|_| Self::Ramp { amplitude: nums[0], rise: nums[1] }),
            "ramped_sinusoid" => want(3).map(|_| Self::RampedSinusoid {
                amplitude: nums[0],
                omega: nums[1],
                rise: nums[2],
            }),
            "phase" => want(2).map(|_| Self::Phase { amplitude: nums[0], omega: nums[1] }),
            other => Err(Error::Parse(format!("unknown force preset `{other}`"))),
        }
    }

    pub fn build(&self) -> Result<BoundaryForce> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {v}")))
            }
        };
        Ok(match *self {
            Self::Zero => BoundaryForce::zero(),
            Self::Sinusoid { amplitude, omega } => BoundaryForce::sinusoid(amplitude, omega),
            Self::Ramp { amplitude, rise } => {
                positive(rise, "ramp time")?;
                BoundaryForce::ramp(amplitude, rise)
            }
            Self::RampedSinusoid { amplitude, omega, rise } => {
                positive(rise, "ramp time")?;
                BoundaryForce::ramped_sinusoid(amplitude, omega, rise)
            }
            Self::Phase { amplitude, omega } => BoundaryForce::phase(amplitude, omega),
        })
    }
}

/// `[g, g', g'', g''']` at `x` for the cutoff with support `[0, δ)`, equal to
/// 1 on `[0, δ/2]`.
pub fn cutoff_g(x: f64, delta: f64) -> [f64; 4] {
    let s = Jet::variable(x).scale(-2.0 / delta) + Jet::constant(2.0);
    smooth_step_jet(s).derivatives()
}

/// Which curvature of `r` enters `F₁`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Curvature {
    /// Exact `r_xx` from the formula.
    Analytic,
    /// Three-point Laplacian of the sampled `r`, including `r(0) = f`. With
    /// this choice `v + r` solves exactly the semi-discrete problem for `u`.
    #[default]
    Grid,
}

/// `r`, `r_t`, `r_xx` sampled on all nodes.
#[derive(Clone, Debug)]
pub struct LiftValues {
    pub r: ComplexField,
    pub r_t: ComplexField,
    pub r_xx: ComplexField,
    /// `A(t)`.
    pub a: Complex64,
}

/// Everything needed to evaluate the lift and `F₁` on one grid.
#[derive(Clone, Debug)]
pub struct LiftContext {
    grid: Grid,
    delta: f64,
    g: Vec<[f64; 4]>,
    v_boundary: f64,
    v: Vec<f64>,
    nonlinearity: NonlinearitySpec,
    force: BoundaryForce,
}

impl LiftContext {
    /// Default `δ = min(1, L/4, δ_reg)`.
    pub fn new(
        grid: Grid,
        potential: &PotentialSpec,
        nonlinearity: NonlinearitySpec,
        force: BoundaryForce,
        delta: Option<f64>,
    ) -> Result<Self> {
        if potential.grid() != &grid {
            return Err(Error::GridMismatch);
        }
        let reg = potential.regularity().map(|r| r.delta);
        let delta = delta.unwrap_or_else(|| {
            let d = 1.0f64.min(grid.length() / 4.0);
            reg.map_or(d, |r| d.min(r))
        });
        if !(delta > 0.0 && delta < grid.length()) {
            return Err(Error::Config(format!(
                "lift width δ = {delta} must lie in (0, L = {})",
                grid.length()
            )));
        }
        if !force.is_zero() {
            match reg {
                None => {
                    return Err(Error::Config(
                        "boundary regularity: V ∈ W₁,₂((0, δ)) not asserted but f ≢ 0".into(),
                    ))
                }
                Some(r) if delta > r => {
                    return Err(Error::Config(format!(
                        "boundary regularity: lift width δ = {delta} exceeds the asserted V ∈ W₁,₂((0, {r}))"
                    )))
                }
                _ => {}
            }
            if !force.has_second_derivative() {
                return Err(missing("d2f")());
            }
        }
        Ok(Self {
            grid,
            delta,
            g: grid.nodes().iter().map(|&x| cutoff_g(x, delta)).collect(),
            v_boundary: potential.boundary_value(),
            v: potential.total(),
            nonlinearity,
            force,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn force(&self) -> &BoundaryForce {
        &self.force
    }

    pub fn nonlinearity(&self) -> &NonlinearitySpec {
        &self.nonlinearity
    }

    /// `V` on all nodes.
    pub fn potential(&self) -> &[f64] {
        &self.v
    }

    /// `(A, A_t)` at time `t`.
    fn coefficients(&self, t: f64) -> Result<(Complex64, Complex64, [Complex64; 3])> {
        if self.force.is_zero() {
            let z = Complex64::new(0.0, 0.0);
            return Ok((z, z, [z; 3]));
        }
        let [f, df, d2f] = self.force.jet2(t)?;
        let i = Complex64::i();
        let nl = &self.nonlinearity;
        let a = self.v_boundary * f + nl.eval(0.0, t, f) - i * df;
        let a_t = self.v_boundary * df + nl.d_dt(0.0, t, f) + nl.wirtinger_apply(0.0, t, f, df) - i * d2f;
        Ok((a, a_t, [f, df, d2f]))
    }

    pub fn lift_r(&self, t: f64) -> Result<LiftValues> {
        let (a, a_t, [f, df, _]) = self.coefficients(t)?;
        let n = self.grid.len();
        let mut r = Vec::with_capacity(n);
        let mut r_t = Vec::with_capacity(n);
        let mut r_xx = Vec::with_capacity(n);
        for (j, g) in self.g.iter().enumerate() {
            let x = self.grid.x(j);
            let base = f + 0.5 * x * x * a;
            r.push(base * g[0]);
            r_t.push((df + 0.5 * x * x * a_t) * g[0]);
            r_xx.push(a * g[0] + 2.0 * x * a * g[1] + base * g[2]);
        }
        Ok(LiftValues {
            r: ComplexField::new(self.grid, r)?,
            r_t: ComplexField::new(self.grid, r_t)?,
            r_xx: ComplexField::new(self.grid, r_xx)?,
            a,
        })
    }

    /// `F(x,t,v+r) - i r_t + V r - r_xx` with zero boundary entries. The
    /// cancellation at `x = 0` is checked on the analytic formula.
    pub fn f1_eval(&self, v: &ComplexField, t: f64, curvature: Curvature) -> Result<ComplexField> {
        let lift = self.lift_r(t)?;
        self.f1_with_lift(v, t, &lift, curvature)
    }

    pub fn f1_with_lift(
        &self,
        v: &ComplexField,
        t: f64,
        lift: &LiftValues,
        curvature: Curvature,
    ) -> Result<ComplexField> {
        if v.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let i = Complex64::i();
        let nl = &self.nonlinearity;
        // x = 0 with V(0) as used in A
        if !self.force.is_zero() {
            let f = lift.r.left();
            let at0 = nl.eval(0.0, t, f) - i * lift.r_t.left() + self.v_boundary * f - lift.r_xx.left();
            let scale = 1.0 + lift.a.norm() + f.norm() + lift.r_t.left().norm();
            if at0.norm() > 1e-10 * scale {
                return Err(Error::Consistency(format!(
                    "F₁(0, {t}) = {at0} does not vanish"
                )));
            }
        }
        let h2 = self.grid.spacing().powi(2);
        let (vv, r, rt, rxx) = (v.values(), lift.r.values(), lift.r_t.values(), lift.r_xx.values());
        let n = vv.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for j in 1..n - 1 {
            let curv = match curvature {
                Curvature::Analytic => rxx[j],
                Curvature::Grid => (r[j - 1] - 2.0 * r[j] + r[j + 1]) / h2,
            };
            out[j] = nl.eval(self.grid.x(j), t, vv[j] + r[j]) - i * rt[j] + self.v[j] * r[j] - curv;
        }
        ComplexField::new(self.grid, out)
    }

    /// `v₀ = φ - r(·, 0)` after the compatibility check; both boundary
    /// entries are set to 0.
    pub fn initial_v(&self, phi: &ComplexField) -> Result<ComplexField> {
        compatibility_check(phi, &self.force)?;
        let r0 = self.lift_r(0.0)?.r;
        let mut v = phi.sub(&r0)?;
        let n = v.values().len();
        v.values_mut()[0] = Complex64::new(0.0, 0.0);
        v.values_mut()[n - 1] = Complex64::new(0.0, 0.0);
        Ok(v)
    }

    /// `u = v + r(·, t)` with `u(0) = f(t)` exactly.
    pub fn reconstruct(&self, v: &ComplexField, t: f64) -> Result<ComplexField> {
        let r = self.lift_r(t)?.r;
        let mut u = v.add(&r)?;
        u.values_mut()[0] = self.force.value(t);
        Ok(u)
    }
}

/// `|φ(0) - f(0)| ≤ 1e-10 (1 + |f(0)|)`.
pub fn compatibility_check(phi: &ComplexField, force: &BoundaryForce) -> Result<()> {
    let f0 = force.value(0.0);
    if (phi.left() - f0).norm() <= 1e-10 * (1.0 + f0.norm()) {
        Ok(())
    } else {
        Err(Error::Compatibility {
            phi0: phi.left().to_string(),
            f0: f0.to_string(),
        })
    }
}

/// Initial data presets.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Zero,
    /// `A exp(-(x-x₀)²/(2w²)) e^{ik₀x}`, corrected near 0 by
    /// `(f(0) - φ(0)) g(x)` and set to 0 at `x = L`.
    Gaussian { x0: f64, width: f64, k0: f64, amplitude: f64 },
    /// `k`-th discrete eigenmode (0-based), unit L² norm.
    Eigenmode(usize),
}

impl InitialCondition {
    pub const NAMES: [&'static str; 3] = ["zero", "gaussian(x0,w,k0[,A])", "eigenmode(k)"];

    pub fn parse(text: &str) -> Result<Self> {
        let (name, args) = split_call(text)?;
        let nums = args.iter().map(|a| parse_real(a)).collect::<Result<Vec<f64>>>()?;
        match (name, nums.len()) {
            ("zero", 0) => Ok(Self::Zero),
            ("gaussian", 3 | 4) => Ok(Self::Gaussian {
                x0: nums[0],
                width: nums[1],
                k0: nums[2],
                amplitude: nums.get(3).copied().unwrap_or(1.0),
            }),
            ("eigenmode", 1) if nums[0] >= 1.0 && nums[0].fract() == 0.0 => {
                Ok(Self::Eigenmode(nums[0] as usize - 1))
            }
            _ => Err(Error::Parse(format!("unknown or malformed initial condition `{text}`"))),
        }
    }

    /// Samples the data; `delta` is the lift width used for the boundary
    /// correction.
    pub fn build(
        &self,
        grid: Grid,
        force: &BoundaryForce,
        delta: f64,
        eigenmode: impl FnOnce(usize) -> Result<ComplexField>,
    ) -> Result<ComplexField> {
        match *self {
            Self::Zero => {
                let mut u = ComplexField::zeros(grid);
                u.values_mut()[0] = force.value(0.0);
                Ok(u)
            }
            Self::Gaussian { x0, width, k0, amplitude } => {
                if !(width > 0.0) {
                    return Err(Error::Config(format!("gaussian width must be positive, got {width}")));
                }
                Ok(gaussian(grid, x0, width, k0, amplitude, force.value(0.0), delta))
            }
            Self::Eigenmode(k) => {
                if k >= grid.interior() {
                    return Err(Error::Config(format!("eigenmode {} out of range", k + 1)));
                }
                eigenmode(k)
            }
        }
    }
}

/// Gaussian bump made compatible with `f(0)` through the cutoff.
pub fn gaussian(
    grid: Grid,
    x0: f64,
    width: f64,
    k0: f64,
    amplitude: f64,
    f0: Complex64,
    delta: f64,
) -> ComplexField {
    let bump = move |x: f64| {
        amplitude * (-(x - x0).powi(2) / (2.0 * width * width)).exp() * Complex64::from_polar(1.0, k0 * x)
    };
    let corr = f0 - bump(0.0);
    let mut u = ComplexField::from_fn(grid, |x| bump(x) + corr * smooth_step((delta - x) / (0.5 * delta)));
    let n = u.values().len();
    u.values_mut()[0] = f0;
    u.values_mut()[n - 1] = Complex64::new(0.0, 0.0);
    u
}
