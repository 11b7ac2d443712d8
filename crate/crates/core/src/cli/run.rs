use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{build_initial, ExperimentKind, RunConfig};
use super::output::{emit_field, emit_plotdata, write_atomic, write_json};
use crate::error::{Error, Result};
use crate::field::{random_smooth_fields, sup_norm, tail_mass_fraction, RandomFieldOptions};
use crate::identities::{identity_residuals, observed_orders, IdentityReport, PotentialTerm, ResidualSummary};
use crate::inequalities::{check_young_split, gn_parameters, gn_study};
use crate::lift::ForcePreset;
use crate::nonlinearity::{
    check_growth_hypotheses, check_hamiltonian_structure, check_sign_condition, probe_assumption_a, SampleSet,
};
use crate::potential::{local_l1_sup, verify_derivative_split, verify_relative_bound};
use crate::solver::{
    continuous_dependence_experiment, epsilon_family, oracle_solve, solve_with, sup_l2_distance, Status,
    Trajectory,
};

/// A run that produced outputs but did not succeed.
#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub kind: String,
    pub message: String,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: Value,
    pub files: Vec<PathBuf>,
    pub failure: Option<Failure>,
}

fn status_failure(status: &Status, expect_blowup: bool) -> Option<Failure> {
    match (status, expect_blowup) {
        (Status::Completed, false) | (Status::BlowUp { .. }, true) => None,
        (Status::Completed, true) => Some(Failure {
            kind: "blow_up_missing".into(),
            message: "blow-up was expected but the run completed".into(),
        }),
        (Status::BlowUp { time, last_valid }, false) => Some(Failure {
            kind: "blow_up".into(),
            message: format!("𝓗₁ norm exceeded the threshold at t = {time} (last valid output t = {last_valid})"),
        }),
        (Status::ContractionFailure { time }, _) => Some(Failure {
            kind: "contraction_failure".into(),
            message: format!("Picard window shrank below the minimum at t = {time}"),
        }),
    }
}

/// Below this a residual is rounding noise and has no order.
const ROUNDOFF_FLOOR: f64 = 1e-11;

fn orders_of(values: &[f64]) -> Vec<Option<f64>> {
    observed_orders(values)
        .into_iter()
        .zip(values.windows(2))
        .map(|(o, w)| (o.is_finite() && w[1] > ROUNDOFF_FLOOR).then_some(o))
        .collect()
}

fn trajectory_summary(traj: &Trajectory) -> Value {
    json!({
        "status": traj.status,
        "outputs": traj.times.len(),
        "delta": traj.delta,
        "windows": traj.windows.len(),
        "picard_iterations": traj.windows.iter().map(|w| w.iterations).sum::<usize>(),
        "max_contraction_ratio": traj.max_contraction_ratio(),
        "max_h1_norm": traj.h1_norms.iter().cloned().fold(0.0, f64::max),
        "final_h1_norm": traj.h1_norms.last(),
        "regularity_persists": traj.regularity_persists(),
        "final_tail_mass_fraction": traj.final_field().map(tail_mass_fraction),
    })
}

pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Solve => run_solve(cfg),
        ExperimentKind::Convergence => run_convergence(cfg),
        ExperimentKind::Dependence => run_dependence(cfg),
        ExperimentKind::Hypotheses => run_hypotheses(cfg),
        ExperimentKind::Inequalities => run_inequalities(cfg),
    }
}

struct Paths {
    dir: PathBuf,
    prefix: String,
}

impl Paths {
    fn new(cfg: &RunConfig) -> Self {
        Self {
            dir: cfg.output_dir(),
            prefix: cfg.output.prefix.clone(),
        }
    }

    fn file(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}_{suffix}", self.prefix))
    }
}

fn solve_level(cfg: &RunConfig, level: u32) -> Result<(Trajectory, IdentityReport)> {
    let problem = cfg.problem_at(level)?;
    let solver = cfg.solver_at(level);
    let ham = problem.hamiltonian()?;
    let traj = solve_with(&ham, &problem, &solver)?;
    let report = identity_residuals(
        &traj,
        &problem.potential,
        &problem.nonlinearity,
        &problem.force,
        PotentialTerm::Direct,
    )?;
    Ok((traj, report))
}

fn run_solve(cfg: &RunConfig) -> Result<RunOutcome> {
    let paths = Paths::new(cfg);
    let (traj, report) = solve_level(cfg, 0)?;
    let mut files = vec![paths.file("identities.csv")];
    emit_plotdata(&report, &files[0])?;
    if let Some(u) = traj.final_field() {
        let p = paths.file("final_field.csv");
        emit_field(u, &p)?;
        files.push(p);
    }
    let summary = json!({
        "experiment": cfg.experiment,
        "trajectory": trajectory_summary(&traj),
        "residuals": report.summary(),
    });
    let p = paths.file("summary.json");
    write_json(&p, &summary)?;
    files.push(p);
    Ok(RunOutcome {
        failure: status_failure(&traj.status, cfg.expect_blowup),
        summary,
        files,
    })
}

#[derive(Serialize)]
struct LevelRow {
    level: u32,
    interior: usize,
    quad_nodes: usize,
    output_dt: f64,
    status: &'static str,
    residuals: ResidualSummary,
    oracle_discrepancy: Option<f64>,
}

fn run_convergence(cfg: &RunConfig) -> Result<RunOutcome> {
    let paths = Paths::new(cfg);
    let levels: Vec<u32> = (0..cfg.convergence.levels as u32).collect();
    let results = levels
        .par_iter()
        .map(|&lvl| -> Result<(LevelRow, IdentityReport)> {
            let (traj, report) = solve_level(cfg, lvl)?;
            let solver = cfg.solver_at(lvl);
            let disc = if cfg.convergence.oracle {
                let problem = cfg.problem_at(lvl)?;
                let dt = solver.window.min(solver.output_dt) / (solver.quad_nodes - 1) as f64;
                let reference = oracle_solve(&problem, dt, &solver)?;
                Some(sup_l2_distance(&traj, &reference)?)
            } else {
                None
            };
            Ok((
                LevelRow {
                    level: lvl,
                    interior: cfg.grid_at(lvl)?.interior(),
                    quad_nodes: solver.quad_nodes,
                    output_dt: solver.output_dt,
                    status: traj.status.label(),
                    residuals: report.summary(),
                    oracle_discrepancy: disc,
                },
                report,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<&LevelRow> = results.iter().map(|(r, _)| r).collect();
    let col = |f: &dyn Fn(&LevelRow) -> Option<f64>| -> Option<Vec<Option<f64>>> {
        let v: Option<Vec<f64>> = rows.iter().map(|r| f(r)).collect();
        v.map(|v| orders_of(&v))
    };
    let orders = json!({
        "residual_mass": col(&|r| Some(r.residuals.max_residual_mass)),
        "residual_energy": col(&|r| r.residuals.max_residual_energy),
        "residual_momentum": col(&|r| r.residuals.max_residual_momentum),
        "integrated_mass": col(&|r| Some(r.residuals.max_integrated_mass_residual)),
        "mass_drift": col(&|r| Some(r.residuals.mass_drift)),
        "energy_drift": col(&|r| r.residuals.energy_drift),
        "oracle_discrepancy": col(&|r| r.oracle_discrepancy),
    });

    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record([
        "level",
        "interior",
        "quad_nodes",
        "output_dt",
        "status",
        "max_residual_mass",
        "max_residual_energy",
        "max_residual_momentum",
        "mass_drift",
        "energy_drift",
        "oracle_discrepancy",
    ])
    .map_err(err)?;
    let num = |x: f64| format!("{x:.16e}");
    let opt = |x: Option<f64>| x.map_or(String::new(), num);
    for r in &rows {
        w.write_record([
            r.level.to_string(),
            r.interior.to_string(),
            r.quad_nodes.to_string(),
            num(r.output_dt),
            r.status.to_string(),
            num(r.residuals.max_residual_mass),
            opt(r.residuals.max_residual_energy),
            opt(r.residuals.max_residual_momentum),
            num(r.residuals.mass_drift),
            opt(r.residuals.energy_drift),
            opt(r.oracle_discrepancy),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let mut files = vec![paths.file("convergence.csv")];
    write_atomic(&files[0], &bytes)?;
    if let Some((_, finest)) = results.last() {
        let p = paths.file("identities_finest.csv");
        emit_plotdata(finest, &p)?;
        files.push(p);
    }
    let summary = json!({
        "experiment": cfg.experiment,
        "levels": rows,
        "orders": orders,
    });
    let p = paths.file("summary.json");
    write_json(&p, &summary)?;
    files.push(p);
    let failure = rows.iter().find(|r| r.status != "completed").map(|r| Failure {
        kind: r.status.into(),
        message: format!("refinement level {} did not complete", r.level),
    });
    Ok(RunOutcome { summary, files, failure })
}

fn run_dependence(cfg: &RunConfig) -> Result<RunOutcome> {
    let paths = Paths::new(cfg);
    let base = cfg.problem_at(0)?;
    let dforce = ForcePreset::parse(&cfg.dependence.force_direction)?.build()?;
    let dphi = build_initial(
        &cfg.dependence.initial_direction,
        base.grid,
        &base.potential,
        &dforce,
        cfg.delta,
    )?;
    let family = epsilon_family(&base, &dphi, &dforce, &cfg.dependence.epsilons)?;
    let report = continuous_dependence_experiment(&base, &family, &cfg.solver)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["epsilon", "input_deviation", "output_deviation", "ratio", "status"])
        .map_err(err)?;
    for r in &report.runs {
        w.write_record([
            r.epsilon.map_or(String::new(), |e| format!("{e:.16e}")),
            format!("{:.16e}", r.input_deviation),
            format!("{:.16e}", r.output_deviation),
            r.ratio.map_or(String::new(), |e| format!("{e:.16e}")),
            r.status.label().to_string(),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let mut files = vec![paths.file("dependence.csv")];
    write_atomic(&files[0], &bytes)?;
    let summary = json!({ "experiment": cfg.experiment, "report": report });
    let p = paths.file("summary.json");
    write_json(&p, &summary)?;
    files.push(p);
    let failure = std::iter::once(&report.base_status)
        .chain(report.runs.iter().map(|r| &r.status))
        .find_map(|s| status_failure(s, false));
    Ok(RunOutcome { summary, files, failure })
}

fn run_hypotheses(cfg: &RunConfig) -> Result<RunOutcome> {
    let paths = Paths::new(cfg);
    let h = &cfg.hypotheses;
    let grid = cfg.grid_at(0)?;
    let potential = cfg.potential_on(grid)?;
    let samples = random_smooth_fields(grid, h.samples, h.seed, 0, &RandomFieldOptions::default());
    let relative = h
        .epsilons
        .iter()
        .map(|&e| verify_relative_bound(&potential, e, &samples, false))
        .collect::<Result<Vec<_>>>()?;
    let split = potential
        .derivative_split()
        .map(|_| verify_derivative_split(&potential))
        .transpose()?;
    let window = grid.length().min(1.0);
    let potential_report = json!({
        "v2_local_l1_sup": local_l1_sup(&grid, potential.v2(), window)?,
        "boundary_regularity": potential.regularity(),
        "relative_bound": relative,
        "derivative_split": split,
        "notes": potential.notes(),
    });

    let nl = crate::nonlinearity::NonlinearityPreset::parse(&cfg.nonlinearity)?.build()?;
    let set = SampleSet::lattice(grid.length(), cfg.solver.final_time, h.radius);
    let assumption_a = probe_assumption_a(&nl, h.radius, (0.0, cfg.solver.final_time), &set.xs, &set.zs);
    let nonlinearity_report = json!({
        "name": nl.name(),
        "sign_condition": check_sign_condition(&nl, &set),
        "hamiltonian_structure": check_hamiltonian_structure(&nl, &set),
        "assumption_a": assumption_a,
        "assumption_a_admissible": assumption_a.admissible(),
        "growth": h.growth_exponent.map(|p| check_growth_hypotheses(&nl, p, &set)),
    });

    let force = cfg.force()?;
    let times = cfg.solver.output_times();
    let force_check = force.check_derivatives(&times);
    let problem = cfg.problem_at(0);
    let force_report = json!({
        "name": force.name(),
        "c2": force_check.as_ref().err().map(|e| e.to_string()),
        "initial_data": problem.as_ref().err().map(|e| e.to_string()),
        "compatibility": problem.as_ref().ok().map(|p| crate::lift::compatibility_check(&p.initial, &p.force).err().map(|e| e.to_string())),
        "initial_sup_norm": problem.as_ref().ok().map(|p| sup_norm(&p.initial)),
    });
    let summary = json!({
        "experiment": cfg.experiment,
        "potential": potential_report,
        "nonlinearity": nonlinearity_report,
        "force": force_report,
    });
    let p = paths.file("summary.json");
    write_json(&p, &summary)?;
    Ok(RunOutcome {
        summary,
        files: vec![p],
        failure: None,
    })
}

#[derive(Serialize)]
struct InequalityRow {
    p: f64,
    a: f64,
    nu: f64,
    k: f64,
    consistency_defects: (f64, f64),
    constant: f64,
    max_test_ratio: f64,
    samples: usize,
    gn_violations: usize,
    young_violations: usize,
    implication_failures: usize,
}

fn run_inequalities(cfg: &RunConfig) -> Result<RunOutcome> {
    let paths = Paths::new(cfg);
    let q = &cfg.inequalities;
    let grid = cfg.grid_at(0)?;
    let opts = RandomFieldOptions::default();
    let calibration = random_smooth_fields(grid, q.samples, q.seed, 0, &opts);
    let test = random_smooth_fields(grid, q.samples, q.seed, 1, &opts);
    let rows = q
        .exponents
        .iter()
        .map(|&p| -> Result<InequalityRow> {
            let par = gn_parameters(p)?;
            let study = gn_study(&calibration, &test, p)?;
            let mut young = 0;
            let mut implication = 0;
            for u in &test {
                for &eps in &q.epsilons {
                    let r = check_young_split(u, p, eps, study.constant)?;
                    if !r.holds() {
                        young += 1;
                    }
                    if r.gn_holds() && !(r.split_dominates() && r.holds()) {
                        implication += 1;
                    }
                }
            }
            Ok(InequalityRow {
                p,
                a: par.a,
                nu: par.nu,
                k: par.k,
                consistency_defects: par.consistency_defects(),
                constant: study.constant,
                max_test_ratio: study.max_ratio,
                samples: study.samples,
                gn_violations: study.violations,
                young_violations: young,
                implication_failures: implication,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = json!({ "experiment": cfg.experiment, "exponents": rows });
    let p = paths.file("summary.json");
    write_json(&p, &summary)?;
    Ok(RunOutcome {
        summary,
        files: vec![p],
        failure: None,
    })
}

/// Machine-readable error object.
pub fn error_object(kind: &str, message: &str) -> Value {
    json!({ "error": { "kind": kind, "message": message } })
}
