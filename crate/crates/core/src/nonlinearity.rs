//! Nonlinearities `F(x, t, z)`, their real (Wirtinger) derivatives, and the
//! structural checks used by the global theory: `F(x,t,0) = 0`, the sign
//! condition `Im z̄F = 0`, the Hamiltonian structure `F = 2 ∂h/∂z̄` and the
//! growth bounds on the density `h`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::integrate_graded;

pub type ComplexFn = Arc<dyn Fn(f64, f64, Complex64) -> Complex64 + Send + Sync>;
pub type RealFn = Arc<dyn Fn(f64, f64, Complex64) -> f64 + Send + Sync>;

/// Relative step for finite-difference derivatives in `z`.
pub const FD_STEP: f64 = 1e-6;

/// Real density `h` with `F = 2 ∂h/∂z̄`, optionally with its `x` and `t`
/// derivatives.
#[derive(Clone)]
pub struct Density {
    pub h: RealFn,
    pub dh_dx: Option<RealFn>,
    pub dh_dt: Option<RealFn>,
}

#[derive(Clone)]
pub struct NonlinearitySpec {
    name: String,
    f: ComplexFn,
    dfdz: Option<ComplexFn>,
    dfdzbar: Option<ComplexFn>,
    dfdx: Option<ComplexFn>,
    dfdt: Option<ComplexFn>,
    density: Option<Density>,
    /// `F` does not depend on `x` / `t` (lets the derivatives be exact zeros).
    x_independent: bool,
    t_independent: bool,
}

impl fmt::Debug for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearitySpec")
            .field("name", &self.name)
            .field("analytic_wirtinger", &self.dfdz.is_some())
            .field("density", &self.density.is_some())
            .finish()
    }
}

impl NonlinearitySpec {
    /// A nonlinearity given only by `F`; derivatives fall back to finite
    /// differences.
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, f64, Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            dfdz: None,
            dfdzbar: None,
            dfdx: None,
            dfdt: None,
            density: None,
            x_independent: false,
            t_independent: false,
        }
    }

    pub fn with_wirtinger(
        mut self,
        dfdz: impl Fn(f64, f64, Complex64) -> Complex64 + Send + Sync + 'static,
        dfdzbar: impl Fn(f64, f64, Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        self.dfdz = Some(Arc::new(dfdz));
        self.dfdzbar = Some(Arc::new(dfdzbar));
        self
    }

    pub fn with_space_time_derivatives(
        mut self,
        dfdx: impl Fn(f64, f64, Complex64) -> Complex64 + Send + Sync + 'static,
        dfdt: impl Fn(f64, f64, Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        self.dfdx = Some(Arc::new(dfdx));
        self.dfdt = Some(Arc::new(dfdt));
        self
    }

    /// Marks `F` as independent of `x` and `t`.
    pub fn autonomous(mut self) -> Self {
        self.x_independent = true;
        self.t_independent = true;
        self
    }

    pub fn with_density(mut self, density: Density) -> Self {
        self.density = Some(density);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn has_analytic_wirtinger(&self) -> bool {
        self.dfdz.is_some() && self.dfdzbar.is_some()
    }

    pub fn eval(&self, x: f64, t: f64, z: Complex64) -> Complex64 {
        (self.f)(x, t, z)
    }

    /// `(∂F/∂z, ∂F/∂z̄)`, analytic when supplied.
    pub fn wirtinger(&self, x: f64, t: f64, z: Complex64) -> (Complex64, Complex64) {
        match (&self.dfdz, &self.dfdzbar) {
            (Some(a), Some(b)) => (a(x, t, z), b(x, t, z)),
            _ => self.wirtinger_fd(x, t, z),
        }
    }

    /// Central differences in `a = Re z`, `b = Im z`, step `1e-6 (1 + |z|)`.
    pub fn wirtinger_fd(&self, x: f64, t: f64, z: Complex64) -> (Complex64, Complex64) {
        let s = FD_STEP * (1.0 + z.norm());
        let i = Complex64::i();
        let da = (self.eval(x, t, z + s) - self.eval(x, t, z - s)) / (2.0 * s);
        let db = (self.eval(x, t, z + i * s) - self.eval(x, t, z - i * s)) / (2.0 * s);
        (0.5 * (da - i * db), 0.5 * (da + i * db))
    }

    /// `F'(z) v = (∂F/∂z) v + (∂F/∂z̄) v̄`.
    pub fn wirtinger_apply(&self, x: f64, t: f64, z: Complex64, v: Complex64) -> Complex64 {
        let (dz, dzb) = self.wirtinger(x, t, z);
        dz * v + dzb * v.conj()
    }

    pub fn d_dx(&self, x: f64, t: f64, z: Complex64) -> Complex64 {
        if let Some(d) = &self.dfdx {
            return d(x, t, z);
        }
        if self.x_independent {
            return Complex64::new(0.0, 0.0);
        }
        let s = FD_STEP * (1.0 + x.abs());
        let lo = (x - s).max(0.0);
        (self.eval(x + s, t, z) - self.eval(lo, t, z)) / (x + s - lo)
    }

    pub fn d_dt(&self, x: f64, t: f64, z: Complex64) -> Complex64 {
        if let Some(d) = &self.dfdt {
            return d(x, t, z);
        }
        if self.t_independent {
            return Complex64::new(0.0, 0.0);
        }
        let s = FD_STEP * (1.0 + t.abs());
        let lo = (t - s).max(0.0);
        (self.eval(x, t + s, z) - self.eval(x, lo, z)) / (t + s - lo)
    }

    pub fn h(&self, x: f64, t: f64, z: Complex64) -> Option<f64> {
        self.density.as_ref().map(|d| (d.h)(x, t, z))
    }

    /// `∂h/∂x`, exact zero for autonomous specs, otherwise from the callback.
    /// `None` when neither applies.
    pub fn dh_dx(&self, x: f64, t: f64, z: Complex64) -> Option<f64> {
        let d = self.density.as_ref()?;
        match &d.dh_dx {
            Some(f) => Some(f(x, t, z)),
            None if self.x_independent => Some(0.0),
            None => None,
        }
    }

    pub fn dh_dt(&self, x: f64, t: f64, z: Complex64) -> Option<f64> {
        let d = self.density.as_ref()?;
        match &d.dh_dt {
            Some(f) => Some(f(x, t, z)),
            None if self.t_independent => Some(0.0),
            None => None,
        }
    }

    /// Difference estimate of `∂h/∂x`, used to decide whether a missing
    /// callback matters.
    pub fn dh_dx_fd(&self, x: f64, t: f64, z: Complex64) -> Option<f64> {
        let d = self.density.as_ref()?;
        let s = FD_STEP * (1.0 + x.abs());
        let lo = (x - s).max(0.0);
        Some(((d.h)(x + s, t, z) - (d.h)(lo, t, z)) / (x + s - lo))
    }

    pub fn dh_dt_fd(&self, x: f64, t: f64, z: Complex64) -> Option<f64> {
        let d = self.density.as_ref()?;
        let s = FD_STEP * (1.0 + t.abs());
        let lo = (t - s).max(0.0);
        Some(((d.h)(x, t + s, z) - (d.h)(x, lo, z)) / (t + s - lo))
    }

    pub fn zero() -> Self {
        let zero = |_: f64, _: f64, _: Complex64| Complex64::new(0.0, 0.0);
        Self::new("zero", zero)
            .with_wirtinger(zero, zero)
            .with_space_time_derivatives(zero, zero)
            .with_density(Density {
                h: Arc::new(|_, _, _| 0.0),
                dh_dx: Some(Arc::new(|_, _, _| 0.0)),
                dh_dt: Some(Arc::new(|_, _, _| 0.0)),
            })
            .autonomous()
    }

    /// `F = λ |z|^{p-1} z`. A density `h = λ|z|^{p+1}/(p+1)` is attached when
    /// `λ` is real.
    pub fn power(lambda: Complex64, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Config(format!("power nonlinearity needs p > 1, got {p}")));
        }
        let m = 0.5 * (p - 1.0);
        let spec = Self::new(format!("power({lambda},{p})"), move |_, _, z: Complex64| {
            lambda * z.norm_sqr().powf(m) * z
        })
        .with_wirtinger(
            move |_, _, z: Complex64| lambda * (1.0 + m) * z.norm_sqr().powf(m),
            move |_, _, z: Complex64| {
                let rho = z.norm_sqr();
                if rho == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    lambda * m * rho.powf(m - 1.0) * z * z
                }
            },
        )
        .with_space_time_derivatives(|_, _, _| Complex64::new(0.0, 0.0), |_, _, _| {
            Complex64::new(0.0, 0.0)
        })
        .autonomous();
        if lambda.im == 0.0 {
            let l = lambda.re;
            Ok(spec.with_density(Density {
                h: Arc::new(move |_, _, z: Complex64| l * z.norm_sqr().powf(m + 1.0) / (p + 1.0)),
                dh_dx: Some(Arc::new(|_, _, _| 0.0)),
                dh_dt: Some(Arc::new(|_, _, _| 0.0)),
            }))
        } else {
            Ok(spec)
        }
    }

    /// `F = λ |z|^{p-1} z / (1 + s |z|^{p-1})`, with density
    /// `h = (λ/2) ∫₀^{|z|²} σ^m / (1 + s σ^m) dσ`, `m = (p-1)/2`, for real `λ`.
    pub fn saturating(lambda: Complex64, p: f64, s: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Config(format!("saturating nonlinearity needs p > 1, got {p}")));
        }
        if !(s >= 0.0) {
            return Err(Error::Config(format!("saturation parameter must be ≥ 0, got {s}")));
        }
        let m = 0.5 * (p - 1.0);
        let g = move |rho: f64| {
            let r = rho.powf(m);
            r / (1.0 + s * r)
        };
        // ρ G'(ρ) = m ρ^m / (1 + s ρ^m)²
        let rho_gp = move |rho: f64| {
            let r = rho.powf(m);
            m * r / ((1.0 + s * r) * (1.0 + s * r))
        };
        let spec = Self::new(format!("saturating({lambda},{p},{s})"), move |_, _, z: Complex64| {
            lambda * g(z.norm_sqr()) * z
        })
        .with_wirtinger(
            move |_, _, z: Complex64| {
                let rho = z.norm_sqr();
                lambda * (g(rho) + rho_gp(rho))
            },
            move |_, _, z: Complex64| {
                let rho = z.norm_sqr();
                if rho == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    lambda * rho_gp(rho) / rho * z * z
                }
            },
        )
        .with_space_time_derivatives(|_, _, _| Complex64::new(0.0, 0.0), |_, _, _| {
            Complex64::new(0.0, 0.0)
        })
        .autonomous();
        if lambda.im == 0.0 {
            let l = lambda.re;
            Ok(spec.with_density(Density {
                h: Arc::new(move |_, _, z: Complex64| 0.5 * l * integrate_graded(g, z.norm_sqr())),
                dh_dx: Some(Arc::new(|_, _, _| 0.0)),
                dh_dt: Some(Arc::new(|_, _, _| 0.0)),
            }))
        } else {
            Ok(spec)
        }
    }
}

/// Named nonlinearities addressable from configuration files:
/// `zero`, `power(lambda,p)`, `saturating(lambda,p,s)`. `lambda` may be
/// complex, written `a`, `bi`, `a+bi` or `i`.
#[derive(Clone, Debug, PartialEq)]
pub enum NonlinearityPreset {
    Zero,
    Power { lambda: Complex64, p: f64 },
    Saturating { lambda: Complex64, p: f64, s: f64 },
}

impl NonlinearityPreset {
    pub const NAMES: [&'static str; 3] = ["zero", "power(lambda,p)", "saturating(lambda,p,s)"];

    pub fn parse(text: &str) -> Result<Self> {
        let (name, args) = split_call(text)?;
        let want = |n: usize| -> Result<()> {
            if args.len() != n {
                return Err(Error::Parse(format!("`{name}` takes {n} arguments: {text}")));
            }
            Ok(())
        };
        match name {
            "zero" => {
                want(0)?;
                Ok(Self::Zero)
            }
            "power" => {
                want(2)?;
                Ok(Self::Power {
                    lambda: parse_complex(args[0])?,
                    p: parse_real(args[1])?,
                })
            }
            "saturating" => {
                want(3)?;
                Ok(Self::Saturating {
                    lambda: parse_complex(args[0])?,
                    p: parse_real(args[1])?,
                    s: parse_real(args[2])?,
                })
            }
            other => Err(Error::Parse(format!("unknown nonlinearity preset `{other}`"))),
        }
    }

    pub fn build(&self) -> Result<NonlinearitySpec> {
        match *self {
            Self::Zero => Ok(NonlinearitySpec::zero()),
            Self::Power { lambda, p } => NonlinearitySpec::power(lambda, p),
            Self::Saturating { lambda, p, s } => NonlinearitySpec::saturating(lambda, p, s),
        }
    }
}

/// Splits `name(a, b, c)` into `("name", ["a", "b", "c"])`; a bare name has
/// no arguments.
pub(crate) fn split_call(text: &str) -> Result<(&str, Vec<&str>)> {
    let text = text.trim();
    match text.find('(') {
        None => Ok((text, Vec::new())),
        Some(open) => {
            let body = text[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse(format!("missing `)` in `{text}`")))?;
            let args = if body.trim().is_empty() {
                Vec::new()
            } else {
                body.split(',').map(str::trim).collect()
            };
            Ok((text[..open].trim(), args))
        }
    }
}

pub(crate) fn parse_real(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("expected a number, got `{s}`")))
}

pub(crate) fn parse_complex(s: &str) -> Result<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if !s.ends_with('i') {
        return Ok(Complex64::new(parse_real(&s)?, 0.0));
    }
    let body = &s[..s.len() - 1];
    // split at the last sign that is not an exponent sign or the leading one
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (parse_real(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => parse_real(v)?,
    };
    Ok(Complex64::new(re, im))
}

/// Lattice of sample points `(x, t, z)`.
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    pub zs: Vec<Complex64>,
}

impl SampleSet {
    /// `nx × nt` points in `[0, L] × [0, T]` and a polar lattice of `z` with
    /// moduli up to `radius` (including `z = 0`).
    pub fn lattice(length: f64, time: f64, radius: f64) -> Self {
        let xs = (0..7).map(|k| length * k as f64 / 6.0).collect();
        let ts = (0..5).map(|k| time * k as f64 / 4.0).collect();
        let mut zs = vec![Complex64::new(0.0, 0.0)];
        for r in 1..=12 {
            let modulus = radius * r as f64 / 12.0;
            for a in 0..8 {
                let ang = std::f64::consts::TAU * (a as f64 + 0.25) / 8.0;
                zs.push(Complex64::from_polar(modulus, ang));
            }
        }
        Self { xs, ts, zs }
    }

    fn points(&self) -> impl Iterator<Item = (f64, f64, Complex64)> + '_ {
        self.xs.iter().flat_map(move |&x| {
            self.ts
                .iter()
                .flat_map(move |&t| self.zs.iter().map(move |&z| (x, t, z)))
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SignConditionReport {
    /// `max |Im(z̄ F)|` over the samples.
    pub max_violation: f64,
    pub passed: bool,
}

/// `Im z̄F(x,t,z) = 0`, passing iff `|Im z̄F| ≤ 1e-12 (1 + |z||F|)` everywhere.
pub fn check_sign_condition(spec: &NonlinearitySpec, samples: &SampleSet) -> SignConditionReport {
    let mut max_violation: f64 = 0.0;
    let mut passed = true;
    for (x, t, z) in samples.points() {
        let f = spec.eval(x, t, z);
        let v = (z.conj() * f).im.abs();
        max_violation = max_violation.max(v);
        if v > 1e-12 * (1.0 + z.norm() * f.norm()) {
            passed = false;
        }
    }
    SignConditionReport {
        max_violation,
        passed,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    /// Worst `|F - 2∂h/∂z̄| / (|F| + tiny)` with differences in `a`, `b`.
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    pub passed: bool,
}

/// Compares `F` with `2 ∂h/∂z̄ = ∂h/∂a + i ∂h/∂b` by central differences
/// (step `1e-5 (1 + |z|)`); passes at relative error `1e-6`. `None` when no
/// density is attached.
pub fn check_hamiltonian_structure(
    spec: &NonlinearitySpec,
    samples: &SampleSet,
) -> Option<StructureReport> {
    let d = spec.density.as_ref()?;
    let mut max_rel: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut passed = true;
    for (x, t, z) in samples.points() {
        let s = 1e-5 * (1.0 + z.norm());
        let i = Complex64::i();
        let ha = ((d.h)(x, t, z + s) - (d.h)(x, t, z - s)) / (2.0 * s);
        let hb = ((d.h)(x, t, z + i * s) - (d.h)(x, t, z - i * s)) / (2.0 * s);
        let approx = Complex64::new(ha, hb);
        let f = spec.eval(x, t, z);
        let err = (f - approx).norm();
        // scale floor: F is O(|z|) small near 0 while the difference error is
        // O(s²) absolute
        let scale = f.norm().max(1e-6 * (1.0 + z.norm()));
        max_abs = max_abs.max(err);
        max_rel = max_rel.max(err / scale);
        if err > 1e-6 * scale {
            passed = false;
        }
    }
    Some(StructureReport {
        max_relative_error: max_rel,
        max_absolute_error: max_abs,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionAEstimates {
    pub radius: f64,
    /// `sup |∂F/∂z| + |∂F/∂z̄|` over `|z| ≤ R`.
    pub wirtinger_bound: f64,
    /// `sup |∂F/∂x| / |z|`.
    pub x_derivative_bound: f64,
    /// `sup |∂F/∂t (0, t, z)|`.
    pub t_derivative_bound: f64,
    /// `max |F(x, t, 0)|`, zero for admissible `F`.
    pub value_at_zero: f64,
    pub non_finite: bool,
}

impl AssumptionAEstimates {
    pub fn admissible(&self) -> bool {
        !self.non_finite && self.value_at_zero == 0.0
    }
}

/// Empirical constants of Assumption A over the sample lattice restricted to
/// `|z| ≤ R` and `t ∈ [t0, t1]`.
pub fn probe_assumption_a(
    spec: &NonlinearitySpec,
    radius: f64,
    interval: (f64, f64),
    x_samples: &[f64],
    z_samples: &[Complex64],
) -> AssumptionAEstimates {
    let ts: Vec<f64> = (0..5)
        .map(|k| interval.0 + (interval.1 - interval.0) * k as f64 / 4.0)
        .collect();
    let mut est = AssumptionAEstimates {
        radius,
        wirtinger_bound: 0.0,
        x_derivative_bound: 0.0,
        t_derivative_bound: 0.0,
        value_at_zero: 0.0,
        non_finite: false,
    };
    let track = |v: f64, slot: &mut f64| {
        if v.is_finite() {
            *slot = slot.max(v);
        }
    };
    let zero = Complex64::new(0.0, 0.0);
    let mut non_finite = false;
    for &t in &ts {
        for &x in x_samples {
            let f0 = spec.eval(x, t, zero).norm();
            non_finite |= !f0.is_finite();
            est.value_at_zero = est.value_at_zero.max(f0);
            for &z in z_samples.iter().filter(|z| z.norm() <= radius) {
                let (a, b) = spec.wirtinger(x, t, z);
                let w = a.norm() + b.norm();
                non_finite |= !w.is_finite();
                track(w, &mut est.wirtinger_bound);
                if z.norm() > 0.0 {
                    let r = spec.d_dx(x, t, z).norm() / z.norm();
                    non_finite |= !r.is_finite();
                    track(r, &mut est.x_derivative_bound);
                }
            }
        }
        for &z in z_samples.iter().filter(|z| z.norm() <= radius) {
            let v = spec.d_dt(0.0, t, z).norm();
            non_finite |= !v.is_finite();
            track(v, &mut est.t_derivative_bound);
        }
    }
    est.non_finite = non_finite;
    est
}

/// Smallest constant making one growth bound hold over the samples.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthBound {
    pub constant: f64,
    /// The ratio keeps growing with `|z|` (at the largest radius it exceeds
    /// twice the value at half that radius).
    pub unbounded: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub p: f64,
    /// `(∂h/∂x)₊ ≤ C |z|²`.
    pub dx: GrowthBound,
    /// `(∂h/∂t)₊ ≤ C (|z|² + |z|^{p+1})`.
    pub dt: GrowthBound,
    /// `h ≥ -C (|z|² + |z|^{p+1})`.
    pub lower: GrowthBound,
}

impl GrowthReport {
    pub fn all_bounded(&self) -> bool {
        !(self.dx.unbounded || self.dt.unbounded || self.lower.unbounded)
    }
}

/// Growth hypotheses on the density used for global existence. `None` when
/// no density is attached.
pub fn check_growth_hypotheses(
    spec: &NonlinearitySpec,
    p: f64,
    samples: &SampleSet,
) -> Option<GrowthReport> {
    let d = spec.density.as_ref()?;
    let rmax = samples.zs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // ratio sup over all samples, plus sup over the outer shell and over the
    // shell at half radius to detect unbounded growth
    let measure = |ratio: &dyn Fn(f64, f64, Complex64) -> f64| -> GrowthBound {
        let mut sup: f64 = 0.0;
        let mut outer: f64 = 0.0;
        let mut half: f64 = 0.0;
        for (x, t, z) in samples.points() {
            if z.norm() == 0.0 {
                continue;
            }
            let r = ratio(x, t, z).max(0.0);
            sup = sup.max(r);
            if z.norm() >= rmax * (1.0 - 1e-12) {
                outer = outer.max(r);
                let zh = z * 0.5;
                half = half.max(ratio(x, t, zh).max(0.0));
            }
        }
        GrowthBound {
            constant: sup,
            unbounded: outer > 2.0 * half && outer > 1e-12,
        }
    };
    let two = |z: Complex64| z.norm_sqr();
    let mixed = |z: Complex64| z.norm_sqr() + z.norm().powf(p + 1.0);
    let dhdx = |x: f64, t: f64, z: Complex64| {
        d.dh_dx
            .as_ref()
            .map(|f| f(x, t, z))
            .or_else(|| spec.dh_dx(x, t, z))
            .unwrap_or_else(|| spec.dh_dx_fd(x, t, z).unwrap_or(0.0))
    };
    let dhdt = |x: f64, t: f64, z: Complex64| {
        d.dh_dt
            .as_ref()
            .map(|f| f(x, t, z))
            .or_else(|| spec.dh_dt(x, t, z))
            .unwrap_or_else(|| spec.dh_dt_fd(x, t, z).unwrap_or(0.0))
    };
    Some(GrowthReport {
        p,
        dx: measure(&|x, t, z| dhdx(x, t, z).max(0.0) / two(z)),
        dt: measure(&|x, t, z| dhdt(x, t, z).max(0.0) / mixed(z)),
        lower: measure(&|x, t, z| -(d.h)(x, t, z) / mixed(z)),
    })
}
