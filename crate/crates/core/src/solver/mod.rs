//! Time integration: Picard iteration of the Duhamel equation for `v = u - r`
//! on adaptive windows, an independent Crank–Nicolson oracle, and the
//! continuous-dependence experiment.

mod dependence;
mod oracle;
mod picard;

pub use dependence::{
    continuous_dependence_experiment, epsilon_family, DependenceReport, DependenceRun, Perturbation,
};
pub use oracle::oracle_solve;
pub use picard::{fixed_point_residual, picard_window, WindowOutcome, WindowSolution};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{h1_norm, h2_norm, tail_mass_fraction, ComplexField, Grid, TAIL_MASS_WARNING};
use crate::hamiltonian::Hamiltonian;
use crate::lift::{BoundaryForce, Curvature, LiftContext};
use crate::nonlinearity::{probe_assumption_a, NonlinearitySpec};
use crate::potential::PotentialSpec;

/// Starting iterate of each Picard window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialIterate {
    #[default]
    FreeFlow,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub final_time: f64,
    /// Initial (and maximal) window length.
    pub window: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Uniform quadrature nodes per window, endpoints included.
    pub quad_nodes: usize,
    /// Contraction guard `σ_max`.
    pub contraction_guard: f64,
    pub blowup_threshold: f64,
    pub output_dt: f64,
    pub min_window: f64,
    #[serde(skip)]
    pub initial_iterate: InitialIterate,
    #[serde(skip)]
    pub curvature: Curvature,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            final_time: 1.0,
            window: 0.05,
            picard_tol: 1e-10,
            picard_max_iter: 60,
            quad_nodes: 33,
            contraction_guard: 0.9,
            blowup_threshold: 1e6,
            output_dt: 0.05,
            min_window: 1e-6,
            initial_iterate: InitialIterate::FreeFlow,
            curvature: Curvature::Grid,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("final_time", self.final_time),
            ("window", self.window),
            ("picard_tol", self.picard_tol),
            ("contraction_guard", self.contraction_guard),
            ("blowup_threshold", self.blowup_threshold),
            ("output_dt", self.output_dt),
            ("min_window", self.min_window),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("solver.{name} must be positive, got {v}")));
            }
        }
        if self.window > self.final_time {
            return Err(Error::Config("solver.window exceeds solver.final_time".into()));
        }
        if self.quad_nodes < 2 || self.picard_max_iter == 0 {
            return Err(Error::Config(
                "solver.quad_nodes must be ≥ 2 and solver.picard_max_iter ≥ 1".into(),
            ));
        }
        if self.contraction_guard >= 1.0 {
            return Err(Error::Config("solver.contraction_guard must be < 1".into()));
        }
        Ok(())
    }

    /// Output times `0, dt, 2dt, …`, ending exactly at `T`.
    pub fn output_times(&self) -> Vec<f64> {
        let n = (self.final_time / self.output_dt - 1e-9).ceil().max(1.0) as usize;
        let mut times: Vec<f64> = (0..n).map(|k| k as f64 * self.output_dt).collect();
        times.push(self.final_time);
        times
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Completed,
    /// 𝓗₁ norm crossed the threshold after `last_valid`.
    BlowUp { time: f64, last_valid: f64 },
    /// Window shrank below the minimum at `time`.
    ContractionFailure { time: f64 },
}

impl Status {
    pub fn is_completed(&self) -> bool {
        matches!(self, Status::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::BlowUp { .. } => "blow_up",
            Status::ContractionFailure { .. } => "contraction_failure",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowDiagnostics {
    pub t_start: f64,
    pub t_end: f64,
    pub iterations: usize,
    /// `sup_m ‖v^{(k+1)}(τ_m) - v^{(k)}(τ_m)‖` per sweep.
    pub residuals: Vec<f64>,
    /// Largest ratio of successive residuals while above tolerance.
    pub contraction_ratio: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `u = v + r` at every time.
    pub fields: Vec<ComplexField>,
    pub h1_norms: Vec<f64>,
    pub h2_norms: Vec<f64>,
    pub windows: Vec<WindowDiagnostics>,
    pub status: Status,
    pub delta: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_field(&self) -> Option<&ComplexField> {
        self.fields.last()
    }

    /// Largest measured contraction ratio over converged windows.
    pub fn max_contraction_ratio(&self) -> f64 {
        self.windows
            .iter()
            .filter(|w| w.converged)
            .map(|w| w.contraction_ratio)
            .fold(0.0, f64::max)
    }

    /// `h2_norm` stays below 10 times its running median.
    pub fn regularity_persists(&self) -> bool {
        let mut seen: Vec<f64> = Vec::new();
        for &v in &self.h2_norms {
            if !v.is_finite() {
                return false;
            }
            if !seen.is_empty() {
                let mut s = seen.clone();
                s.sort_by(f64::total_cmp);
                if v > 10.0 * s[s.len() / 2] {
                    return false;
                }
            }
            seen.push(v);
        }
        true
    }
}

/// Data of one forced problem on a fixed grid.
#[derive(Clone, Debug)]
pub struct Problem {
    pub grid: Grid,
    pub potential: PotentialSpec,
    pub nonlinearity: NonlinearitySpec,
    pub force: BoundaryForce,
    pub initial: ComplexField,
    /// Lift width; default `min(1, L/4, δ_reg)`.
    pub delta: Option<f64>,
}

impl Problem {
    pub fn new(
        potential: PotentialSpec,
        nonlinearity: NonlinearitySpec,
        force: BoundaryForce,
        initial: ComplexField,
    ) -> Result<Self> {
        let grid = *potential.grid();
        if initial.grid() != &grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            potential,
            nonlinearity,
            force,
            initial,
            delta: None,
        })
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn hamiltonian(&self) -> Result<Hamiltonian> {
        Hamiltonian::assemble(self.grid, &self.potential)
    }

    pub fn lift(&self) -> Result<LiftContext> {
        LiftContext::new(
            self.grid,
            &self.potential,
            self.nonlinearity.clone(),
            self.force.clone(),
            self.delta,
        )
    }

    /// `F(x,t,0) = 0` and finite derivative probes on `|z| ≤ 2 sup|φ| + 1`.
    fn probe(&self, final_time: f64) -> Result<()> {
        let radius = 2.0 * crate::field::sup_norm(&self.initial) + 1.0;
        let xs: Vec<f64> = (0..=8).map(|k| self.grid.length() * k as f64 / 8.0).collect();
        let zs: Vec<Complex64> = (0..=6)
            .flat_map(|r| {
                (0..6).map(move |a| Complex64::from_polar(radius * r as f64 / 6.0, a as f64 + 0.3))
            })
            .collect();
        let est = probe_assumption_a(&self.nonlinearity, radius, (0.0, final_time), &xs, &zs);
        if est.non_finite {
            return Err(Error::Config(
                "Assumption A: derivatives of F are not finite on the sampled ball".into(),
            ));
        }
        if est.value_at_zero != 0.0 {
            return Err(Error::Config(format!(
                "Assumption A: F(x,t,0) = 0 violated (|F(x,t,0)| up to {})",
                est.value_at_zero
            )));
        }
        Ok(())
    }
}

/// Picard–Duhamel solve. Setup problems are errors; failures during the
/// march are reported through [`Trajectory::status`].
pub fn solve(problem: &Problem, cfg: &SolverConfig) -> Result<Trajectory> {
    let ham = problem.hamiltonian()?;
    solve_with(&ham, problem, cfg)
}

/// [`solve`] with a prebuilt Hamiltonian for the problem's grid and
/// potential.
pub fn solve_with(ham: &Hamiltonian, problem: &Problem, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    problem.initial.ensure_finite("initial data")?;
    if ham.grid() != &problem.grid {
        return Err(Error::GridMismatch);
    }
    problem.probe(cfg.final_time)?;
    let ctx = problem.lift()?;
    let v0 = ctx.initial_v(&problem.initial)?;
    let q = ham.sqrt_v1();

    let outputs = cfg.output_times();
    let mut traj = Trajectory {
        times: vec![0.0],
        fields: vec![problem.initial.clone()],
        h1_norms: vec![h1_norm(&problem.initial, q)],
        h2_norms: vec![h2_norm(&problem.initial, ham)],
        windows: Vec::new(),
        status: Status::Completed,
        delta: ctx.delta(),
    };

    let mut coeffs = ham.to_modes(&v0);
    let mut t = 0.0;
    let mut width = cfg.window;
    let mut next = 1;
    let mut tail_warned = false;
    while next < outputs.len() {
        let target = outputs[next];
        let mut end = (t + width).min(target);
        if target - end < 1e-9 * width {
            end = target;
        }
        match picard_window(ham, &ctx, &coeffs, t, end, cfg, cfg.initial_iterate) {
            WindowOutcome::Converged(sol) => {
                traj.windows.push(sol.diagnostics.clone());
                coeffs = sol.coeffs.last().expect("at least two nodes").clone();
                t = end;
                width = (2.0 * width).min(cfg.window);
                let v = ham.from_modes(&coeffs);
                let u = ctx.reconstruct(&v, t)?;
                let h1 = h1_norm(&u, q);
                if !(u.is_finite() && h1 < cfg.blowup_threshold) {
                    traj.status = Status::BlowUp {
                        time: t,
                        last_valid: *traj.times.last().expect("nonempty"),
                    };
                    break;
                }
                if !tail_warned && tail_mass_fraction(&u) > TAIL_MASS_WARNING {
                    log::warn!(
                        "mass fraction {:.3e} in the outer 10% of [0, L] at t = {t}; truncation may be visible",
                        tail_mass_fraction(&u)
                    );
                    tail_warned = true;
                }
                if end == target {
                    traj.times.push(t);
                    traj.h1_norms.push(h1);
                    traj.h2_norms.push(h2_norm(&u, ham));
                    traj.fields.push(u);
                    next += 1;
                }
            }
            WindowOutcome::Failed(diag) => {
                traj.windows.push(diag);
                width *= 0.5;
                if width < cfg.min_window {
                    traj.status = Status::ContractionFailure { time: t };
                    break;
                }
            }
        }
    }
    Ok(traj)
}

/// Largest `L²` distance between two trajectories over their common times.
pub fn sup_l2_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let mut d: f64 = 0.0;
    for (ta, ua) in a.times.iter().zip(&a.fields) {
        if let Some(k) = b.times.iter().position(|tb| (tb - ta).abs() <= 1e-12 * (1.0 + ta.abs())) {
            d = d.max(crate::field::l2_norm(&ua.sub(&b.fields[k])?));
        }
    }
    Ok(d)
}
