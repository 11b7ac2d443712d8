use num_complex::Complex64;

use super::{InitialIterate, SolverConfig, WindowDiagnostics};
use crate::error::Result;
use crate::field::ComplexField;
use crate::hamiltonian::Hamiltonian;
use crate::lift::{LiftContext, LiftValues};

/// Converged window: modal coefficients of `v` at the quadrature nodes.
#[derive(Clone, Debug)]
pub struct WindowSolution {
    pub taus: Vec<f64>,
    pub coeffs: Vec<Vec<Complex64>>,
    pub diagnostics: WindowDiagnostics,
}

#[derive(Clone, Debug)]
pub enum WindowOutcome {
    Converged(WindowSolution),
    Failed(WindowDiagnostics),
}

/// State shared by all sweeps of one window.
struct Window<'a> {
    ham: &'a Hamiltonian,
    ctx: &'a LiftContext,
    cfg: &'a SolverConfig,
    taus: Vec<f64>,
    lifts: Vec<LiftValues>,
    free: Vec<Vec<Complex64>>,
}

impl Window<'_> {
    /// One application of `P(v) = e^{-i(τ-t₀)H} v₀ - i G F₁(v)`.
    fn sweep(&self, coeffs: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
        let grid = *self.ham.grid();
        let interiors = self.ham.from_modes_batch(coeffs);
        let forcing = interiors
            .iter()
            .zip(&self.taus)
            .zip(&self.lifts)
            .map(|((vi, &tau), lift)| {
                let v = ComplexField::from_interior(grid, vi)?;
                let f1 = self.ctx.f1_with_lift(&v, tau, lift, self.cfg.curvature)?;
                Ok(f1.interior().to_vec())
            })
            .collect::<Result<Vec<_>>>()?;
        let modal = self.ham.to_modes_batch(&forcing);
        let integrals = self.ham.duhamel_modes(&self.taus, &modal)?;
        let minus_i = Complex64::new(0.0, -1.0);
        Ok(self
            .free
            .iter()
            .zip(&integrals)
            .map(|(free, int)| free.iter().zip(int).map(|(a, b)| a + minus_i * b).collect())
            .collect())
    }
}

/// `sup_m ‖a_m - b_m‖_{L²}` for coefficient vectors of zero-boundary fields.
fn sup_distance(h: f64, a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let s: f64 = x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum();
            (h * s).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Picard iteration on `[t_start, t_end]` with `M` uniform nodes, starting
/// from the free flow of `v_start` (or from zero).
pub fn picard_window(
    ham: &Hamiltonian,
    ctx: &LiftContext,
    v_start: &[Complex64],
    t_start: f64,
    t_end: f64,
    cfg: &SolverConfig,
    initial: InitialIterate,
) -> WindowOutcome {
    let m = cfg.quad_nodes;
    let taus: Vec<f64> = (0..m)
        .map(|k| {
            if k == m - 1 {
                t_end
            } else {
                t_start + (t_end - t_start) * k as f64 / (m - 1) as f64
            }
        })
        .collect();
    let mut diag = WindowDiagnostics {
        t_start,
        t_end,
        iterations: 0,
        residuals: Vec::new(),
        contraction_ratio: 0.0,
        converged: false,
    };
    let lifts = match taus.iter().map(|&t| ctx.lift_r(t)).collect::<Result<Vec<_>>>() {
        Ok(l) => l,
        Err(e) => {
            log::error!("lift evaluation failed: {e}");
            return WindowOutcome::Failed(diag);
        }
    };
    let free: Vec<Vec<Complex64>> = taus
        .iter()
        .map(|&tau| {
            let mut c = v_start.to_vec();
            ham.evolve_modes(&mut c, tau - t_start);
            c
        })
        .collect();
    let window = Window {
        ham,
        ctx,
        cfg,
        taus,
        lifts,
        free,
    };
    let mut current = match initial {
        InitialIterate::FreeFlow => window.free.clone(),
        InitialIterate::Zero => vec![vec![Complex64::new(0.0, 0.0); v_start.len()]; m],
    };
    let h = ham.grid().spacing();
    let mut above_guard = 0;
    loop {
        if diag.iterations >= cfg.picard_max_iter {
            return WindowOutcome::Failed(diag);
        }
        let next = match window.sweep(&current) {
            Ok(n) => n,
            Err(e) => {
                log::debug!("Picard sweep failed on [{t_start}, {t_end}]: {e}");
                return WindowOutcome::Failed(diag);
            }
        };
        diag.iterations += 1;
        let res = sup_distance(h, &next, &current);
        if !res.is_finite() {
            return WindowOutcome::Failed(diag);
        }
        if let Some(&prev) = diag.residuals.last() {
            if prev > 0.0 {
                let ratio = res / prev;
                if prev > cfg.picard_tol {
                    diag.contraction_ratio = diag.contraction_ratio.max(ratio);
                }
                if ratio >= cfg.contraction_guard {
                    above_guard += 1;
                } else {
                    above_guard = 0;
                }
            }
        }
        diag.residuals.push(res);
        current = next;
        if res <= cfg.picard_tol {
            diag.converged = true;
            return WindowOutcome::Converged(WindowSolution {
                taus: window.taus,
                coeffs: current,
                diagnostics: diag,
            });
        }
        if above_guard >= 3 {
            return WindowOutcome::Failed(diag);
        }
    }
}

/// `sup_m ‖v - P(v)‖` for a converged window: the fixed-point residual.
pub fn fixed_point_residual(
    ham: &Hamiltonian,
    ctx: &LiftContext,
    v_start: &[Complex64],
    sol: &WindowSolution,
    cfg: &SolverConfig,
) -> Result<f64> {
    let t_start = sol.taus[0];
    let lifts = sol.taus.iter().map(|&t| ctx.lift_r(t)).collect::<Result<Vec<_>>>()?;
    let free = sol
        .taus
        .iter()
        .map(|&tau| {
            let mut c = v_start.to_vec();
            ham.evolve_modes(&mut c, tau - t_start);
            c
        })
        .collect();
    let window = Window {
        ham,
        ctx,
        cfg,
        taus: sol.taus.clone(),
        lifts,
        free,
    };
    let image = window.sweep(&sol.coeffs)?;
    Ok(sup_distance(ham.grid().spacing(), &image, &sol.coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{h1_norm, Grid};
    use crate::lift::{gaussian, BoundaryForce};
    use crate::nonlinearity::NonlinearitySpec;
    use crate::potential::PotentialSpec;

    fn setup(amplitude: f64) -> (Hamiltonian, LiftContext, Vec<Complex64>, f64) {
        let g = Grid::new(10.0, 80).unwrap();
        let pot = PotentialSpec::zero(g);
        let ham = Hamiltonian::assemble(g, &pot).unwrap();
        let ctx = LiftContext::new(
            g,
            &pot,
            NonlinearitySpec::power(Complex64::new(1.0, 0.0), 3.0).unwrap(),
            BoundaryForce::zero(),
            None,
        )
        .unwrap();
        let phi = gaussian(g, 5.0, 1.0, 0.0, 1.0, Complex64::new(0.0, 0.0), 1.0);
        let scale = amplitude / h1_norm(&phi, ham.sqrt_v1());
        let phi = phi.scale(Complex64::new(scale, 0.0));
        let h1 = h1_norm(&phi, ham.sqrt_v1());
        (ham.clone(), ctx, ham.to_modes(&phi), h1)
    }

    #[test]
    fn small_data_contracts_geometrically() {
        let (ham, ctx, c0, h1) = setup(0.1);
        assert!((h1 - 0.1).abs() < 1e-12);
        let cfg = SolverConfig::default();
        let WindowOutcome::Converged(sol) = picard_window(&ham, &ctx, &c0, 0.0, 0.1, &cfg, InitialIterate::FreeFlow)
        else {
            panic!("window failed");
        };
        let d = &sol.diagnostics;
        assert!(d.contraction_ratio < 0.5, "{d:?}");
        assert!(d.residuals.windows(2).all(|w| w[1] < w[0]));
        let fp = fixed_point_residual(&ham, &ctx, &c0, &sol, &cfg).unwrap();
        assert!(fp <= 2.0 * cfg.picard_tol, "{fp}");
    }

    #[test]
    fn distinct_initial_iterates_agree() {
        let (ham, ctx, c0, _) = setup(1.0);
        let cfg = SolverConfig::default();
        let run = |init| match picard_window(&ham, &ctx, &c0, 0.0, 0.05, &cfg, init) {
            WindowOutcome::Converged(s) => s,
            WindowOutcome::Failed(d) => panic!("{d:?}"),
        };
        let a = run(InitialIterate::FreeFlow);
        let b = run(InitialIterate::Zero);
        let d = sup_distance(ham.grid().spacing(), &a.coeffs, &b.coeffs);
        assert!(d <= 2.0 * cfg.picard_tol, "{d}");
    }

    #[test]
    fn linear_problem_converges_in_one_sweep() {
        let g = Grid::new(10.0, 40).unwrap();
        let pot = PotentialSpec::zero(g);
        let ham = Hamiltonian::assemble(g, &pot).unwrap();
        let ctx = LiftContext::new(g, &pot, NonlinearitySpec::zero(), BoundaryForce::zero(), None).unwrap();
        let c0 = ham.to_modes(&ham.eigenmode(2));
        let cfg = SolverConfig::default();
        let WindowOutcome::Converged(sol) = picard_window(&ham, &ctx, &c0, 0.0, 0.3, &cfg, InitialIterate::FreeFlow)
        else {
            panic!()
        };
        assert_eq!(sol.diagnostics.iterations, 1);
        assert_eq!(sol.diagnostics.residuals, vec![0.0]);
    }
}
