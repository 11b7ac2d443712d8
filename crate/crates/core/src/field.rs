//! Uniform grid on the truncated half-line, complex fields sampled on it, and
//! the norms of the solution spaces.
//!
//! All integrals use the trapezoidal rule over `[0, L]`. The W₁,₂ norm is the
//! max-form `max(‖f‖, ‖f'‖)` everywhere in the crate.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;

/// Smallest admissible number of interior nodes.
pub const MIN_INTERIOR_NODES: usize = 8;

/// Uniform grid `x_j = j h`, `j = 0..=N+1`, with `h = L / (N + 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    length: f64,
    interior: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(length: f64, interior: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if interior < MIN_INTERIOR_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_INTERIOR_NODES} interior nodes, got {interior}"
            )));
        }
        Ok(Self {
            length,
            interior,
            spacing: length / (interior + 1) as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of interior nodes `N`.
    pub fn interior(&self) -> usize {
        self.interior
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of nodes, `N + 2`.
    pub fn len(&self) -> usize {
        self.interior + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, j: usize) -> f64 {
        if j == self.interior + 1 {
            self.length
        } else {
            j as f64 * self.spacing
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.x(j)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.len()).map(|j| f(self.x(j))).collect()
    }

    /// Trapezoidal rule for samples on all nodes.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let n = values.len();
        let inner: f64 = values[1..n - 1].iter().sum();
        self.spacing * (inner + 0.5 * (values[0] + values[n - 1]))
    }

    pub fn trapezoid_complex(&self, values: &[Complex64]) -> Complex64 {
        debug_assert_eq!(values.len(), self.len());
        let n = values.len();
        let inner: Complex64 = values[1..n - 1].iter().sum();
        (inner + 0.5 * (values[0] + values[n - 1])) * self.spacing
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Complex samples of a function on every node of a [`Grid`], boundary
/// nodes included.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            grid,
            values: (0..grid.len()).map(|j| f(grid.x(j))).collect(),
        }
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self {
            grid,
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        })
    }

    /// Builds a field from interior values, with zero boundary nodes.
    pub fn from_interior(grid: Grid, interior: &[Complex64]) -> Result<Self> {
        if interior.len() != grid.interior() {
            return Err(Error::LengthMismatch {
                expected: grid.interior(),
                got: interior.len(),
            });
        }
        let mut values = Vec::with_capacity(grid.len());
        values.push(Complex64::new(0.0, 0.0));
        values.extend_from_slice(interior);
        values.push(Complex64::new(0.0, 0.0));
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn interior(&self) -> &[Complex64] {
        &self.values[1..self.values.len() - 1]
    }

    pub fn left(&self) -> Complex64 {
        self.values[0]
    }

    pub fn right(&self) -> Complex64 {
        self.values[self.values.len() - 1]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map(|z| z * a)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    /// `a·self + other`.
    pub fn axpy(&self, a: Complex64, other: &Self) -> Result<Self> {
        self.zip(other, |x, y| a * x + y)
    }

    pub fn mul_real(&self, weights: &[f64]) -> Result<Self> {
        self.grid.check_len(weights.len())?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(weights).map(|(z, w)| z * w).collect(),
        })
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `(self, other) = ∫ self · conj(other)`, conjugate-linear in the second slot.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let prod: Vec<Complex64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .collect();
        Ok(self.grid.trapezoid_complex(&prod))
    }

    /// `|f|²` at every node.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Second-order finite-difference derivative: centered at interior nodes,
/// one-sided three-point stencils at both endpoints.
pub fn derivative(f: &ComplexField) -> ComplexField {
    let h = f.grid.spacing();
    let v = &f.values;
    let n = v.len();
    let mut d = Vec::with_capacity(n);
    d.push((-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h));
    for j in 1..n - 1 {
        d.push((v[j + 1] - v[j - 1]) / (2.0 * h));
    }
    d.push((3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h));
    ComplexField {
        grid: f.grid,
        values: d,
    }
}

/// Forward differences `(f_{j+1} - f_j)/h` on the `N + 1` cells.
///
/// `h Σ |D₊f|²` is the kinetic part of the quadratic form whose operator is
/// the three-point Dirichlet Laplacian.
pub fn edge_differences(f: &ComplexField) -> Vec<Complex64> {
    let h = f.grid.spacing();
    f.values.windows(2).map(|w| (w[1] - w[0]) / h).collect()
}

/// `h Σ |D₊f|²`, a second-order approximation of `‖f'‖²`.
pub fn edge_gradient_sqr(f: &ComplexField) -> f64 {
    let h = f.grid.spacing();
    edge_differences(f).iter().map(|d| d.norm_sqr()).sum::<f64>() * h
}

fn l2_sqr(f: &ComplexField) -> f64 {
    f.grid.trapezoid(&f.density())
}

pub fn l2_norm(f: &ComplexField) -> f64 {
    l2_sqr(f).sqrt()
}

/// L² norm of `w·f` for a real weight `w` sampled on all nodes.
pub fn weighted_l2_norm(f: &ComplexField, w: &[f64]) -> f64 {
    debug_assert_eq!(w.len(), f.values.len());
    let dens: Vec<f64> = f
        .values
        .iter()
        .zip(w)
        .map(|(z, w)| (z * w).norm_sqr())
        .collect();
    f.grid.trapezoid(&dens).sqrt()
}

/// W₁,₂ norm in max-form.
pub fn w12_norm(f: &ComplexField) -> f64 {
    l2_norm(f).max(l2_norm(&derivative(f)))
}

/// 𝓗₁ norm `max(‖f‖_{W₁,₂}, ‖q f‖)` with `q = √V₁`.
pub fn h1_norm(f: &ComplexField, q: &[f64]) -> f64 {
    w12_norm(f).max(weighted_l2_norm(f, q))
}

/// `b(f) = max(‖f'‖, ‖q f‖)`.
pub fn b_seminorm(f: &ComplexField, q: &[f64]) -> f64 {
    l2_norm(&derivative(f)).max(weighted_l2_norm(f, q))
}

/// 𝓗₂ norm `max(‖f‖_{𝓗₁}, ‖(-d²/dx² + V) f‖)`.
pub fn h2_norm(f: &ComplexField, ham: &Hamiltonian) -> f64 {
    let q = ham.sqrt_v1();
    h1_norm(f, q).max(l2_norm(&ham.apply(f)))
}

pub fn sup_norm(f: &ComplexField) -> f64 {
    f.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Fraction of `‖f‖²` carried by the rightmost 10% of the domain.
///
/// The truncation at `x = L` is invisible to the half-line problem as long
/// as this stays small.
pub fn tail_mass_fraction(f: &ComplexField) -> f64 {
    let total = l2_sqr(f);
    if total == 0.0 {
        return 0.0;
    }
    let cut = 0.9 * f.grid.length();
    let dens: Vec<f64> = f
        .values
        .iter()
        .enumerate()
        .map(|(j, z)| if f.grid.x(j) >= cut { z.norm_sqr() } else { 0.0 })
        .collect();
    f.grid.trapezoid(&dens) / total
}

/// Warning threshold for [`tail_mass_fraction`].
pub const TAIL_MASS_WARNING: f64 = 1e-6;

/// Options for [`random_smooth_field`].
#[derive(Clone, Copy, Debug)]
pub struct RandomFieldOptions {
    /// Number of Gaussian bumps.
    pub bumps: usize,
    /// Bump widths are drawn from `[min_width, max_width]`.
    pub min_width: f64,
    pub max_width: f64,
    /// Largest bump amplitude.
    pub amplitude: f64,
    /// Largest carrier wavenumber.
    pub max_wavenumber: f64,
    /// Force the value at `x = 0` to zero.
    pub vanish_at_origin: bool,
}

impl Default for RandomFieldOptions {
    fn default() -> Self {
        Self {
            bumps: 3,
            min_width: 0.3,
            max_width: 1.5,
            amplitude: 1.0,
            max_wavenumber: 3.0,
            vanish_at_origin: false,
        }
    }
}

/// A smooth random field: a sum of modulated Gaussian bumps, tapered so that
/// it vanishes at `x = L` (and at `x = 0` when requested).
pub fn random_smooth_field<R: Rng + ?Sized>(
    grid: Grid,
    rng: &mut R,
    opts: &RandomFieldOptions,
) -> ComplexField {
    let l = grid.length();
    let bumps: Vec<(f64, f64, Complex64, f64)> = (0..opts.bumps.max(1))
        .map(|_| {
            let w = rng.gen_range(opts.min_width..=opts.max_width);
            let c = rng.gen_range(0.0..=(0.7 * l));
            let a = Complex64::from_polar(
                rng.gen_range(0.1..=1.0) * opts.amplitude,
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
            let k = rng.gen_range(-opts.max_wavenumber..=opts.max_wavenumber);
            (w, c, a, k)
        })
        .collect();
    let taper_width = 0.1 * l;
    ComplexField::from_fn(grid, |x| {
        let mut s = Complex64::new(0.0, 0.0);
        for &(w, c, a, k) in &bumps {
            let d = (x - c) / w;
            s += a * (-d * d).exp() * Complex64::from_polar(1.0, k * x);
        }
        // C^∞-flat at x = L: exp(-1/s) is zero with all derivatives at s = 0.
        let right = ((l - x) / taper_width).clamp(0.0, 1.0);
        let mut taper = crate::jet::smooth_step(right);
        if opts.vanish_at_origin {
            taper *= crate::jet::smooth_step((x / taper_width).clamp(0.0, 1.0));
        }
        s * taper
    })
}

/// `count` fields from a ChaCha stream; different `stream` values give
/// independent sample sets for the same seed.
pub fn random_smooth_fields(
    grid: Grid,
    count: usize,
    seed: u64,
    stream: u64,
    opts: &RandomFieldOptions,
) -> Vec<ComplexField> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count).map(|_| random_smooth_field(grid, &mut rng, opts)).collect()
}
