use num_complex::Complex64;

use super::{Problem, SolverConfig, Status, Trajectory};
use crate::error::{Error, Result};
use crate::field::{h1_norm, h2_norm, ComplexField};
use crate::lift::compatibility_check;

const INNER_TOL: f64 = 1e-12;
const INNER_MAX_ITER: usize = 20;
const MIN_STEP: f64 = 1e-12;

/// LU factors of the constant-coefficient tridiagonal `I + i(dt/2)H`.
struct Thomas {
    /// Modified super-diagonal and inverse pivots.
    c_prime: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
    off: Complex64,
}

impl Thomas {
    fn new(diag: &[f64], off: f64, dt: f64) -> Self {
        let k = Complex64::new(0.0, 0.5 * dt);
        let off = k * off;
        let n = diag.len();
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); n];
        let mut prev = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let b = Complex64::new(1.0, 0.0) + k * diag[j];
            let pivot = if j == 0 { b } else { b - off * prev };
            inv_pivot[j] = 1.0 / pivot;
            c_prime[j] = off * inv_pivot[j];
            prev = c_prime[j];
        }
        Self { c_prime, inv_pivot, off }
    }

    fn solve(&self, rhs: &mut [Complex64]) {
        let n = rhs.len();
        rhs[0] *= self.inv_pivot[0];
        for j in 1..n {
            rhs[j] = (rhs[j] - self.off * rhs[j - 1]) * self.inv_pivot[j];
        }
        for j in (0..n - 1).rev() {
            rhs[j] -= self.c_prime[j] * rhs[j + 1];
        }
    }
}

struct Stepper<'a> {
    problem: &'a Problem,
    diag: Vec<f64>,
    off: f64,
    h: f64,
    cache: Vec<(f64, Thomas)>,
}

impl Stepper<'_> {
    fn factors(&mut self, dt: f64) -> usize {
        if let Some(k) = self.cache.iter().position(|(d, _)| *d == dt) {
            return k;
        }
        self.cache.push((dt, Thomas::new(&self.diag, self.off, dt)));
        self.cache.len() - 1
    }

    /// One step of size `dt` from `t`; `None` when the midpoint iteration
    /// does not settle.
    fn try_step(&mut self, u: &[Complex64], t: f64, dt: f64) -> Result<Option<Vec<Complex64>>> {
        let p = self.problem;
        let n = u.len();
        let k = Complex64::new(0.0, 0.5 * dt);
        let (f0, f1) = (p.force.value(t), p.force.value(t + dt));
        let mut explicit = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let left = if j > 0 { u[j - 1] } else { Complex64::new(0.0, 0.0) };
            let right = if j + 1 < n { u[j + 1] } else { Complex64::new(0.0, 0.0) };
            let hu = self.diag[j] * u[j] + self.off * (left + right);
            explicit[j] = u[j] - k * hu;
        }
        explicit[0] += k * (f0 + f1) / (self.h * self.h);

        let idx = self.factors(dt);
        let tm = t + 0.5 * dt;
        let minus_i_dt = Complex64::new(0.0, -dt);
        let mut next = u.to_vec();
        for _ in 0..INNER_MAX_ITER {
            let mut rhs = explicit.clone();
            for j in 0..n {
                let mid = 0.5 * (u[j] + next[j]);
                rhs[j] += minus_i_dt * p.nonlinearity.eval(p.grid.x(j + 1), tm, mid);
            }
            self.cache[idx].1.solve(&mut rhs);
            let change: f64 = rhs.iter().zip(&next).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
            let size: f64 = rhs.iter().map(|a| a.norm_sqr()).sum::<f64>();
            if rhs.iter().any(|z| !z.is_finite()) {
                return Ok(None);
            }
            next = rhs;
            if (self.h * change).sqrt() <= INNER_TOL * (self.h * size).sqrt().max(1.0) {
                return Ok(Some(next));
            }
        }
        Ok(None)
    }

    /// Advances by `dt`, halving recursively when the inner iteration fails.
    fn step(&mut self, u: Vec<Complex64>, t: f64, dt: f64) -> Result<Vec<Complex64>> {
        if let Some(next) = self.try_step(&u, t, dt)? {
            return Ok(next);
        }
        if dt / 2.0 < MIN_STEP {
            return Err(Error::Consistency(format!(
                "Crank–Nicolson midpoint iteration stalls at t = {t}"
            )));
        }
        let half = self.step(u, t, dt / 2.0)?;
        self.step(half, t + dt / 2.0, dt / 2.0)
    }
}

/// Crank–Nicolson for `u` directly, with the Dirichlet value injected into
/// the first row. `dt` is shrunk so that it divides every output interval.
pub fn oracle_solve(problem: &Problem, dt: f64, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("oracle time step must be positive, got {dt}")));
    }
    compatibility_check(&problem.initial, &problem.force)?;
    let ham = problem.hamiltonian()?;
    let grid = problem.grid;
    let q = ham.sqrt_v1();
    let mut stepper = Stepper {
        problem,
        diag: ham.diagonal(),
        off: ham.off_diagonal(),
        h: grid.spacing(),
        cache: Vec::new(),
    };
    let assemble = |interior: &[Complex64], t: f64| -> Result<ComplexField> {
        let mut u = ComplexField::from_interior(grid, interior)?;
        u.values_mut()[0] = problem.force.value(t);
        Ok(u)
    };

    let outputs = cfg.output_times();
    let mut traj = Trajectory {
        times: vec![0.0],
        fields: vec![problem.initial.clone()],
        h1_norms: vec![h1_norm(&problem.initial, q)],
        h2_norms: vec![h2_norm(&problem.initial, &ham)],
        windows: Vec::new(),
        status: Status::Completed,
        delta: 0.0,
    };
    let mut u = problem.initial.interior().to_vec();
    for w in outputs.windows(2) {
        let (a, b) = (w[0], w[1]);
        let steps = ((b - a) / dt - 1e-9).ceil().max(1.0) as usize;
        let step = (b - a) / steps as f64;
        for s in 0..steps {
            let t = a + s as f64 * step;
            u = match stepper.step(u, t, step) {
                Ok(next) => next,
                Err(_) => {
                    traj.status = Status::ContractionFailure { time: t };
                    return Ok(traj);
                }
            };
        }
        let field = assemble(&u, b)?;
        let h1 = h1_norm(&field, q);
        if !(field.is_finite() && h1 < cfg.blowup_threshold) {
            traj.status = Status::BlowUp { time: b, last_valid: a };
            return Ok(traj);
        }
        traj.times.push(b);
        traj.h1_norms.push(h1);
        traj.h2_norms.push(h2_norm(&field, &ham));
        traj.fields.push(field);
    }
    Ok(traj)
}
