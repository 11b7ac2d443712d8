//! The discrete Dirichlet operator `H = -d²/dx² + V` on the interior nodes,
//! its quadratic form, the propagator `e^{-itH}` and the Duhamel operator
//! `G w (t) = ∫₀ᵗ e^{-i(t-τ)H} w(τ) dτ`.
//!
//! Everything runs through one dense symmetric eigendecomposition. Modal
//! coefficients are Euclidean (`c = Qᵀ u_int`), so `‖u‖_{L²} = √h |c|` for a
//! field vanishing at both ends.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid};
use crate::potential::PotentialSpec;
use crate::quadrature::exp_linear_weights;

#[derive(Clone, Debug)]
pub struct Hamiltonian {
    grid: Grid,
    potential: Vec<f64>,
    sqrt_v1: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Column `k` is the `k`-th eigenvector (interior nodes).
    eigenvectors: DMatrix<f64>,
}

impl Hamiltonian {
    pub fn assemble(grid: Grid, potential: &PotentialSpec) -> Result<Self> {
        if potential.grid() != &grid {
            return Err(Error::GridMismatch);
        }
        let v = potential.total();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("potential".into()));
        }
        Self::from_samples(grid, v, potential.sqrt_v1().to_vec())
    }

    /// `V ≡ 0`.
    pub fn free(grid: Grid) -> Result<Self> {
        Self::from_samples(grid, vec![0.0; grid.len()], vec![0.0; grid.len()])
    }

    fn from_samples(grid: Grid, potential: Vec<f64>, sqrt_v1: Vec<f64>) -> Result<Self> {
        let n = grid.interior();
        let h2 = grid.spacing() * grid.spacing();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 2.0 / h2 + potential[i + 1];
            if i + 1 < n {
                m[(i, i + 1)] = -1.0 / h2;
                m[(i + 1, i)] = -1.0 / h2;
            }
        }
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        if eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("eigenvalues".into()));
        }
        let mut q = DMatrix::<f64>::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let col = eig.eigenvectors.column(src);
            // sign convention: largest-magnitude entry positive
            let mut big = 0;
            for i in 0..n {
                if col[i].abs() > col[big].abs() + 1e-12 {
                    big = i;
                }
            }
            let s = if col[big] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..n {
                q[(i, dst)] = s * col[i];
            }
        }
        Ok(Self {
            grid,
            potential,
            sqrt_v1,
            eigenvalues,
            eigenvectors: q,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `V₁ + V₂` on all nodes.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn sqrt_v1(&self) -> &[f64] {
        &self.sqrt_v1
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Main diagonal of the interior matrix.
    pub fn diagonal(&self) -> Vec<f64> {
        let h2 = self.grid.spacing().powi(2);
        (1..=self.grid.interior())
            .map(|j| 2.0 / h2 + self.potential[j])
            .collect()
    }

    pub fn off_diagonal(&self) -> f64 {
        -1.0 / self.grid.spacing().powi(2)
    }

    /// Eigenvector `k` as a field normalised to unit L² norm.
    pub fn eigenmode(&self, k: usize) -> ComplexField {
        let scale = 1.0 / self.grid.spacing().sqrt();
        let col = self.eigenvectors.column(k);
        let interior: Vec<Complex64> = col.iter().map(|&v| Complex64::new(v * scale, 0.0)).collect();
        ComplexField::from_interior(self.grid, &interior).expect("interior length matches")
    }

    /// Three-point stencil plus `V` at interior nodes, using the field's own
    /// boundary values; both boundary entries of the result are 0.
    pub fn apply(&self, f: &ComplexField) -> ComplexField {
        let h2 = self.grid.spacing().powi(2);
        let v = f.values();
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for j in 1..v.len() - 1 {
            out[j] = (2.0 * v[j] - v[j - 1] - v[j + 1]) / h2 + self.potential[j] * v[j];
        }
        ComplexField::new(self.grid, out).expect("same grid")
    }

    /// `(φ', ψ') + (Vφ, ψ)` with edge differences for the kinetic part, so
    /// that it equals `(Hφ, ψ)` exactly on the grid.
    pub fn quadratic_form(&self, phi: &ComplexField, psi: &ComplexField) -> Result<Complex64> {
        for f in [phi, psi] {
            if f.grid() != &self.grid {
                return Err(Error::GridMismatch);
            }
            let scale = f.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
            if f.left().norm() > 1e-14 * scale || f.right().norm() > 1e-14 * scale {
                return Err(Error::Domain(
                    "quadratic form needs fields vanishing at both ends".into(),
                ));
            }
        }
        let h = self.grid.spacing();
        let (a, b) = (phi.values(), psi.values());
        let mut kinetic = Complex64::new(0.0, 0.0);
        for j in 0..a.len() - 1 {
            kinetic += (a[j + 1] - a[j]) * (b[j + 1] - b[j]).conj();
        }
        let mut pot = Complex64::new(0.0, 0.0);
        for j in 1..a.len() - 1 {
            pot += self.potential[j] * a[j] * b[j].conj();
        }
        Ok(kinetic / h + pot * h)
    }

    /// Euclidean coefficients `Qᵀ u_int`; boundary values are ignored.
    pub fn to_modes(&self, f: &ComplexField) -> Vec<Complex64> {
        self.to_modes_slice(f.interior())
    }

    pub fn to_modes_slice(&self, interior: &[Complex64]) -> Vec<Complex64> {
        let (re, im) = split(interior);
        let r = self.eigenvectors.tr_mul(&re);
        let i = self.eigenvectors.tr_mul(&im);
        r.iter().zip(i.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect()
    }

    /// Field with interior `Q c` and zero boundary values.
    pub fn from_modes(&self, c: &[Complex64]) -> ComplexField {
        ComplexField::from_interior(self.grid, &self.from_modes_interior(c))
            .expect("interior length matches")
    }

    pub fn from_modes_interior(&self, c: &[Complex64]) -> Vec<Complex64> {
        let (re, im) = split(c);
        let r = &self.eigenvectors * re;
        let i = &self.eigenvectors * im;
        r.iter().zip(i.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect()
    }

    /// Batched [`Self::to_modes_slice`]: one matrix product per real part.
    pub fn to_modes_batch(&self, interiors: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let (re, im) = split_columns(self.grid.interior(), interiors);
        let r = self.eigenvectors.tr_mul(&re);
        let i = self.eigenvectors.tr_mul(&im);
        join_columns(&r, &i)
    }

    pub fn from_modes_batch(&self, coeffs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let (re, im) = split_columns(self.grid.interior(), coeffs);
        let r = &self.eigenvectors * re;
        let i = &self.eigenvectors * im;
        join_columns(&r, &i)
    }

    /// Multiplies coefficients by `e^{-iλ_k t}`.
    pub fn evolve_modes(&self, c: &mut [Complex64], t: f64) {
        for (ck, &l) in c.iter_mut().zip(&self.eigenvalues) {
            *ck *= Complex64::from_polar(1.0, -l * t);
        }
    }

    /// `e^{-itH} φ` for `φ` vanishing at both ends.
    pub fn propagate(&self, phi: &ComplexField, t: f64) -> ComplexField {
        let mut c = self.to_modes(phi);
        self.evolve_modes(&mut c, t);
        self.from_modes(&c)
    }

    /// Modal Duhamel integrals at every node: returns `I_m ≈ ∫_{τ₀}^{τ_m}
    /// e^{-iλ(τ_m - s)} ŵ(s) ds` for each mode, with `I_0 = 0`. Each step
    /// integrates the exponential exactly against the linear interpolant of
    /// `ŵ`, so the error is `O(Δτ²)` and constant forcing is reproduced
    /// exactly.
    pub fn duhamel_modes(
        &self,
        taus: &[f64],
        coeffs: &[Vec<Complex64>],
    ) -> Result<Vec<Vec<Complex64>>> {
        let m = taus.len();
        if m < 2 {
            return Err(Error::Domain("Duhamel quadrature needs at least 2 nodes".into()));
        }
        if coeffs.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                got: coeffs.len(),
            });
        }
        if taus.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("quadrature nodes must increase".into()));
        }
        let n = self.grid.interior();
        let steps: Vec<f64> = taus.windows(2).map(|w| w[1] - w[0]).collect();
        let uniform = steps.iter().all(|&d| (d - steps[0]).abs() <= 1e-13 * steps[0]);
        // per mode: the running integral over the nodes
        let per_mode: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let lambda = self.eigenvalues[k];
                let mut out = Vec::with_capacity(m);
                let mut acc = Complex64::new(0.0, 0.0);
                out.push(acc);
                let fixed = uniform.then(|| step_weights(lambda, steps[0]));
                for s in 0..m - 1 {
                    let (decay, a, b) = fixed.unwrap_or_else(|| step_weights(lambda, steps[s]));
                    acc = decay * acc + steps[s] * (a * coeffs[s][k] + b * coeffs[s + 1][k]);
                    out.push(acc);
                }
                out
            })
            .collect();
        Ok((0..m)
            .map(|s| per_mode.iter().map(|col| col[s]).collect())
            .collect())
    }

    /// `(G w)(τ_M)` for samples `(τ_m, w(τ_m))`, `τ` increasing from the
    /// window start.
    pub fn duhamel_g(&self, nodes: &[(f64, ComplexField)]) -> Result<ComplexField> {
        if nodes.len() < 2 {
            return Err(Error::Domain("Duhamel quadrature needs at least 2 nodes".into()));
        }
        let taus: Vec<f64> = nodes.iter().map(|(t, _)| *t).collect();
        let interiors: Vec<Vec<Complex64>> = nodes.iter().map(|(_, w)| w.interior().to_vec()).collect();
        let coeffs = self.to_modes_batch(&interiors);
        let integrals = self.duhamel_modes(&taus, &coeffs)?;
        Ok(self.from_modes(integrals.last().expect("at least two nodes")))
    }
}

fn step_weights(lambda: f64, dt: f64) -> (Complex64, Complex64, Complex64) {
    let (a, b) = exp_linear_weights(lambda * dt);
    (Complex64::from_polar(1.0, -lambda * dt), a, b)
}

fn split(v: &[Complex64]) -> (nalgebra::DVector<f64>, nalgebra::DVector<f64>) {
    (
        nalgebra::DVector::from_iterator(v.len(), v.iter().map(|z| z.re)),
        nalgebra::DVector::from_iterator(v.len(), v.iter().map(|z| z.im)),
    )
}

fn split_columns(n: usize, cols: &[Vec<Complex64>]) -> (DMatrix<f64>, DMatrix<f64>) {
    let re = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i].re);
    let im = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i].im);
    (re, im)
}

fn join_columns(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Vec<Vec<Complex64>> {
    (0..re.ncols())
        .map(|j| {
            re.column(j)
                .iter()
                .zip(im.column(j).iter())
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{l2_norm, random_smooth_field, RandomFieldOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(10.0, n).unwrap()
    }

    fn random_fields(g: Grid, count: usize, seed: u64) -> Vec<ComplexField> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opts = RandomFieldOptions {
            vanish_at_origin: true,
            ..Default::default()
        };
        (0..count).map(|_| random_smooth_field(g, &mut rng, &opts)).collect()
    }

    #[test]
    fn free_spectrum_closed_form() {
        for n in [16, 63, 200] {
            let g = grid(n);
            let ham = Hamiltonian::free(g).unwrap();
            let h = g.spacing();
            for (k, &l) in ham.eigenvalues().iter().enumerate() {
                let exact = 2.0 / (h * h) * (1.0 - ((k + 1) as f64 * PI * h / g.length()).cos());
                assert!((l - exact).abs() <= 1e-8 * exact, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn constant_potential_shifts_spectrum() {
        let g = grid(40);
        let free = Hamiltonian::free(g).unwrap();
        let spec = PotentialSpec::new(g, vec![0.0; g.len()], vec![-2.5; g.len()]).unwrap();
        let shifted = Hamiltonian::assemble(g, &spec).unwrap();
        for (a, b) in free.eigenvalues().iter().zip(shifted.eigenvalues()) {
            assert!((b - a + 2.5).abs() < 1e-10 * a.abs().max(1.0));
        }
    }

    /// Shooting method for `-u'' + x² u = E u`, `u(0) = 0`: RK4 to `x = 8`
    /// and bisection on the sign of `u(8)`.
    fn shooting_level(lo: f64, hi: f64) -> f64 {
        let end = |e: f64| {
            let n = 8000;
            let dx = 8.0 / n as f64;
            let rhs = |x: f64, y: [f64; 2]| [y[1], (x * x - e) * y[0]];
            let mut y = [0.0, 1.0];
            for i in 0..n {
                let x = i as f64 * dx;
                let k1 = rhs(x, y);
                let k2 = rhs(x + dx / 2.0, [y[0] + dx / 2.0 * k1[0], y[1] + dx / 2.0 * k1[1]]);
                let k3 = rhs(x + dx / 2.0, [y[0] + dx / 2.0 * k2[0], y[1] + dx / 2.0 * k2[1]]);
                let k4 = rhs(x + dx, [y[0] + dx * k3[0], y[1] + dx * k3[1]]);
                for c in 0..2 {
                    y[c] += dx / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
                }
            }
            y[0]
        };
        let (mut a, mut b) = (lo, hi);
        let fa = end(a);
        assert!(fa * end(b) < 0.0, "bracket [{lo}, {hi}]");
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if end(m) * fa > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn half_line_harmonic_oscillator() {
        let oracle: Vec<f64> = [(2.0, 4.0), (6.0, 8.0), (10.0, 12.0)]
            .iter()
            .map(|&(a, b)| shooting_level(a, b))
            .collect();
        for (o, e) in oracle.iter().zip([3.0, 7.0, 11.0]) {
            assert!((o - e).abs() < 1e-6, "oracle {o}");
        }
        let g = Grid::new(20.0, 256).unwrap();
        let spec = PotentialSpec::new(g, g.sample(|x| x * x), vec![0.0; g.len()]).unwrap();
        let ham = Hamiltonian::assemble(g, &spec).unwrap();
        for (l, o) in ham.eigenvalues().iter().zip(&oracle) {
            assert!((l - o).abs() < 0.01 * o, "{l} vs {o}");
        }
    }

    #[test]
    fn eigenvectors_orthonormal() {
        let g = grid(120);
        let spec = PotentialSpec::new(g, g.sample(|x| x), g.sample(|x| -(-x).exp())).unwrap();
        let ham = Hamiltonian::assemble(g, &spec).unwrap();
        let q = ham.eigenvectors();
        let gram = q.tr_mul(q);
        let n = g.interior();
        let dev = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (gram[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-10, "{dev}");
        let mode = ham.eigenmode(3);
        assert!((l2_norm(&mode) - 1.0).abs() < 1e-12);
        let hm = ham.apply(&mode);
        let err = l2_norm(&mode.axpy(Complex64::new(-ham.eigenvalues()[3], 0.0), &hm).unwrap());
        assert!(err < 1e-9 * ham.eigenvalues()[3].abs().max(1.0), "{err}");
    }

    #[test]
    fn quadratic_form_examples() {
        let g = grid(200);
        let ham = Hamiltonian::free(g).unwrap();
        let z = ComplexField::zeros(g);
        assert_eq!(ham.quadratic_form(&z, &z).unwrap(), Complex64::new(0.0, 0.0));
        let s = ComplexField::from_fn(g, |x| Complex64::new((PI * x / 10.0).sin(), 0.0));
        let q = ham.quadratic_form(&s, &s).unwrap();
        let exact = (PI / 10.0).powi(2) * 5.0;
        let h = g.spacing();
        assert!((q.re - exact).abs() < 0.1 * h * h && q.im.abs() < 1e-12);

        let bad = ComplexField::from_fn(g, |x| Complex64::new(1.0 + x, 0.0));
        assert!(matches!(ham.quadratic_form(&bad, &s), Err(Error::Domain(_))));

        let spec = PotentialSpec::new(g, g.sample(|x| x * x), g.sample(|x| (x).cos())).unwrap();
        let ham = Hamiltonian::assemble(g, &spec).unwrap();
        for pair in random_fields(g, 10, 7).chunks(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let form = ham.quadratic_form(a, b).unwrap();
            let op = ham.apply(a).inner(b).unwrap();
            assert!((form - op).norm() < 1e-10 * form.norm().max(1.0));
        }
    }

    #[test]
    fn propagator_examples() {
        let g = grid(64);
        let spec = PotentialSpec::new(g, g.sample(|x| 0.1 * x * x), vec![0.0; g.len()]).unwrap();
        let ham = Hamiltonian::assemble(g, &spec).unwrap();
        let fields = random_fields(g, 100, 11);
        let f = &fields[0];
        let same = ham.propagate(f, 0.0);
        assert!(l2_norm(&same.sub(f).unwrap()) < 1e-12 * l2_norm(f));

        let psi = ham.eigenmode(5);
        let t = 0.73;
        let expect = psi.scale(Complex64::from_polar(1.0, -ham.eigenvalues()[5] * t));
        assert!(l2_norm(&ham.propagate(&psi, t).sub(&expect).unwrap()) < 1e-12);

        for (i, f) in fields.iter().enumerate() {
            let t = 10.0 * i as f64 / 99.0;
            let out = ham.propagate(f, t);
            assert!((l2_norm(&out) - l2_norm(f)).abs() <= 1e-11 * l2_norm(f));
            let s = 0.37 * t;
            let two = ham.propagate(&ham.propagate(f, s), t);
            let one = ham.propagate(f, s + t);
            assert!(l2_norm(&two.sub(&one).unwrap()) <= 1e-11 * l2_norm(f));
            let e0 = ham.quadratic_form(f, f).unwrap().re;
            let et = ham.quadratic_form(&out, &out).unwrap().re;
            assert!((et - e0).abs() <= 1e-10 * e0.abs());
        }
    }

    #[test]
    fn batched_transforms_match_single() {
        let g = grid(50);
        let ham = Hamiltonian::free(g).unwrap();
        let fields = random_fields(g, 4, 3);
        let interiors: Vec<Vec<Complex64>> = fields.iter().map(|f| f.interior().to_vec()).collect();
        let batch = ham.to_modes_batch(&interiors);
        for (f, c) in fields.iter().zip(&batch) {
            let single = ham.to_modes(f);
            for (a, b) in single.iter().zip(c) {
                assert!((a - b).norm() < 1e-14);
            }
        }
        let back = ham.from_modes_batch(&batch);
        for (f, b) in fields.iter().zip(&back) {
            for (a, b) in f.interior().iter().zip(b) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn duhamel_constant_forcing_closed_form() {
        let g = grid(40);
        let ham = Hamiltonian::free(g).unwrap();
        let k = 2;
        let psi = ham.eigenmode(k);
        let t = 0.9;
        let nodes: Vec<(f64, ComplexField)> =
            (0..9).map(|m| (t * m as f64 / 8.0, psi.clone())).collect();
        let out = ham.duhamel_g(&nodes).unwrap();
        let l = ham.eigenvalues()[k];
        let factor = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -l * t)) / Complex64::new(0.0, l);
        assert!(l2_norm(&out.sub(&psi.scale(factor)).unwrap()) < 1e-12);

        let zero: Vec<(f64, ComplexField)> = (0..3).map(|m| (m as f64, ComplexField::zeros(g))).collect();
        assert_eq!(l2_norm(&ham.duhamel_g(&zero).unwrap()), 0.0);
        assert!(ham.duhamel_g(&nodes[..1]).is_err());

        // λ = 0 reproduces t·ψ
        let spec = PotentialSpec::new(g, vec![0.0; g.len()], vec![-ham.eigenvalues()[0]; g.len()]).unwrap();
        let shifted = Hamiltonian::assemble(g, &spec).unwrap();
        let psi0 = shifted.eigenmode(0);
        let nodes: Vec<(f64, ComplexField)> = (0..5).map(|m| (t * m as f64 / 4.0, psi0.clone())).collect();
        let out = shifted.duhamel_g(&nodes).unwrap();
        assert!(shifted.eigenvalues()[0].abs() < 1e-9);
        assert!(l2_norm(&out.sub(&psi0.scale(Complex64::new(t, 0.0))).unwrap()) < 1e-8);
    }

    #[test]
    fn duhamel_is_linear() {
        let g = grid(30);
        let ham = Hamiltonian::free(g).unwrap();
        let a = random_fields(g, 5, 1);
        let b = random_fields(g, 5, 2);
        let alpha = Complex64::new(0.3, -1.2);
        let mk = |fs: &[ComplexField]| -> Vec<(f64, ComplexField)> {
            fs.iter().enumerate().map(|(m, f)| (0.1 * m as f64, f.clone())).collect()
        };
        let comb: Vec<ComplexField> = a.iter().zip(&b).map(|(x, y)| y.axpy(alpha, x).unwrap()).collect();
        let lhs = ham.duhamel_g(&mk(&comb)).unwrap();
        let rhs = ham
            .duhamel_g(&mk(&b))
            .unwrap()
            .axpy(alpha, &ham.duhamel_g(&mk(&a)).unwrap())
            .unwrap();
        assert!(l2_norm(&lhs.sub(&rhs).unwrap()) < 1e-12 * l2_norm(&lhs));
    }

    /// `i v' = H v + w(t)`, `v(0) = 0`, integrated by Crank–Nicolson with a
    /// dense complex solve. Returns `v(t)`.
    fn crank_nicolson(ham: &Hamiltonian, w: &dyn Fn(f64) -> ComplexField, t: f64, steps: usize) -> ComplexField {
        let n = ham.grid().interior();
        let dt = t / steps as f64;
        let i = Complex64::i();
        let mut hmat = DMatrix::<Complex64>::zeros(n, n);
        let d = ham.diagonal();
        for r in 0..n {
            hmat[(r, r)] = Complex64::new(d[r], 0.0);
            if r + 1 < n {
                hmat[(r, r + 1)] = Complex64::new(ham.off_diagonal(), 0.0);
                hmat[(r + 1, r)] = Complex64::new(ham.off_diagonal(), 0.0);
            }
        }
        let id = DMatrix::<Complex64>::identity(n, n);
        let lhs = (&id + &hmat * (i * dt / 2.0)).lu();
        let rhs = &id - &hmat * (i * dt / 2.0);
        let mut v = nalgebra::DVector::<Complex64>::zeros(n);
        for s in 0..steps {
            let t0 = s as f64 * dt;
            let w0 = w(t0);
            let w1 = w(t0 + dt);
            let src = nalgebra::DVector::from_iterator(
                n,
                w0.interior().iter().zip(w1.interior()).map(|(a, b)| -i * dt * 0.5 * (a + b)),
            );
            v = lhs.solve(&(&rhs * &v + src)).unwrap();
        }
        ComplexField::from_interior(*ham.grid(), v.as_slice()).unwrap()
    }

    #[test]
    fn duhamel_matches_crank_nicolson_at_second_order() {
        let g = grid(24);
        let spec = PotentialSpec::new(g, g.sample(|x| 0.05 * x * x), vec![0.0; g.len()]).unwrap();
        let ham = Hamiltonian::assemble(g, &spec).unwrap();
        let shape = random_fields(g, 1, 5).remove(0);
        let w = |tau: f64| shape.scale(Complex64::new(tau.cos(), (2.0 * tau).sin()));
        let t = 0.5;
        let nodes: Vec<(f64, ComplexField)> = (0..=12800).map(|m| {
            let tau = t * m as f64 / 12800.0;
            (tau, w(tau))
        }).collect();
        let reference = ham.duhamel_g(&nodes).unwrap().scale(-Complex64::i());
        let errs: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&s| l2_norm(&crank_nicolson(&ham, &w, t, s).sub(&reference).unwrap()))
            .collect();
        let o1 = (errs[0] / errs[1]).log2();
        let o2 = (errs[1] / errs[2]).log2();
        assert!(o1 > 1.8 && o2 > 1.8, "{errs:?}");
    }
}
