use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{solve_with, Problem, SolverConfig, Status, Trajectory};
use crate::error::{Error, Result};
use crate::field::{h1_norm, ComplexField};
use crate::lift::{c2_distance, BoundaryForce};

/// One perturbed data set `(φ_n, f_n)`.
#[derive(Clone, Debug)]
pub struct Perturbation {
    /// Nominal size, if the perturbation belongs to a scaled family.
    pub epsilon: Option<f64>,
    pub initial: ComplexField,
    pub force: BoundaryForce,
}

#[derive(Clone, Debug, Serialize)]
pub struct DependenceRun {
    pub epsilon: Option<f64>,
    /// `max(‖φ_n - φ‖_{𝓗₁}, ‖f_n - f‖_{C²})`.
    pub input_deviation: f64,
    /// `sup_t ‖u_n(t) - u(t)‖_{𝓗₁}` over the common output times.
    pub output_deviation: f64,
    /// `output / input`, absent for a zero perturbation.
    pub ratio: Option<f64>,
    pub status: Status,
}

#[derive(Clone, Debug, Serialize)]
pub struct DependenceReport {
    pub base_status: Status,
    pub runs: Vec<DependenceRun>,
    /// Output deviations decrease strictly along the run order.
    pub monotone: bool,
    /// `max ratio / min ratio` over runs with a ratio.
    pub ratio_spread: f64,
}

/// `φ + ε δφ`, `f + ε δf` for every `ε`.
pub fn epsilon_family(
    base: &Problem,
    phi_direction: &ComplexField,
    force_direction: &BoundaryForce,
    epsilons: &[f64],
) -> Result<Vec<Perturbation>> {
    epsilons
        .iter()
        .map(|&eps| {
            Ok(Perturbation {
                epsilon: Some(eps),
                initial: phi_direction.axpy(Complex64::new(eps, 0.0), &base.initial)?,
                force: base.force.perturbed(force_direction, eps),
            })
        })
        .collect()
}

fn sup_h1_distance(a: &Trajectory, b: &Trajectory, q: &[f64]) -> Result<f64> {
    let mut d: f64 = 0.0;
    for (ta, ua) in a.times.iter().zip(&a.fields) {
        if let Some(k) = b.times.iter().position(|tb| (tb - ta).abs() <= 1e-12 * (1.0 + ta.abs())) {
            d = d.max(h1_norm(&ua.sub(&b.fields[k])?, q));
        }
    }
    Ok(d)
}

/// Solves the base problem and every perturbation (concurrently) and
/// measures how far the solutions move.
pub fn continuous_dependence_experiment(
    base: &Problem,
    perturbations: &[Perturbation],
    cfg: &SolverConfig,
) -> Result<DependenceReport> {
    let ham = base.hamiltonian()?;
    let q = ham.sqrt_v1();
    let reference = solve_with(&ham, base, cfg)?;
    let runs = perturbations
        .par_iter()
        .map(|p| -> Result<DependenceRun> {
            let mut problem = base.clone();
            if p.initial.grid() != &base.grid {
                return Err(Error::GridMismatch);
            }
            problem.initial = p.initial.clone();
            problem.force = p.force.clone();
            let traj = solve_with(&ham, &problem, cfg)?;
            let input = h1_norm(&p.initial.sub(&base.initial)?, q)
                .max(c2_distance(&p.force, &base.force, cfg.final_time, 400)?);
            let output = sup_h1_distance(&traj, &reference, q)?;
            Ok(DependenceRun {
                epsilon: p.epsilon,
                input_deviation: input,
                output_deviation: output,
                ratio: (input > 0.0).then(|| output / input),
                status: traj.status,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = runs
        .windows(2)
        .all(|w| w[1].output_deviation < w[0].output_deviation);
    let ratios: Vec<f64> = runs.iter().filter_map(|r| r.ratio).collect();
    let ratio_spread = if ratios.is_empty() {
        1.0
    } else {
        ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    Ok(DependenceReport {
        base_status: reference.status,
        runs,
        monotone,
        ratio_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::lift::gaussian;
    use crate::nonlinearity::NonlinearitySpec;
    use crate::potential::PotentialSpec;

    fn base() -> Problem {
        let g = Grid::new(10.0, 48).unwrap();
        let phi = gaussian(g, 5.0, 0.8, 1.0, 0.5, Complex64::new(0.0, 0.0), 1.0);
        Problem::new(
            PotentialSpec::zero(g),
            NonlinearitySpec::power(Complex64::new(1.0, 0.0), 3.0).unwrap(),
            BoundaryForce::ramped_sinusoid(0.1, 1.0, 0.3),
            phi,
        )
        .unwrap()
    }

    fn cfg() -> SolverConfig {
        SolverConfig {
            final_time: 0.4,
            window: 0.1,
            output_dt: 0.1,
            quad_nodes: 17,
            ..Default::default()
        }
    }

    #[test]
    fn zero_perturbation_gives_zero_deviation() {
        let b = base();
        let same = Perturbation {
            epsilon: Some(0.0),
            initial: b.initial.clone(),
            force: b.force.clone(),
        };
        let r = continuous_dependence_experiment(&b, &[same], &cfg()).unwrap();
        assert_eq!(r.runs[0].output_deviation, 0.0);
        assert_eq!(r.runs[0].ratio, None);
    }

    #[test]
    fn force_perturbation_with_fixed_data() {
        let b = base();
        let g = b.grid;
        let dphi = ComplexField::zeros(g);
        let df = BoundaryForce::ramped_sinusoid(1.0, 2.0, 0.3);
        let fam = epsilon_family(&b, &dphi, &df, &[1e-2, 1e-3]).unwrap();
        let r = continuous_dependence_experiment(&b, &fam, &cfg()).unwrap();
        assert!(r.monotone, "{r:?}");
        assert!(r.runs.iter().all(|x| x.status.is_completed()));
        assert!(r.runs[1].output_deviation < 0.2 * r.runs[0].output_deviation);
    }
}
