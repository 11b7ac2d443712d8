use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::field::Grid;
use crate::hamiltonian::Hamiltonian;
use crate::lift::{BoundaryForce, ForcePreset, InitialCondition, LiftContext};
use crate::nonlinearity::NonlinearityPreset;
use crate::potential::{PotentialPreset, PotentialSpec};
use crate::solver::{Problem, SolverConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Solve,
    Convergence,
    Dependence,
    Hypotheses,
    Inequalities,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    /// Interior node count `N`.
    pub interior: usize,
}

/// Either a preset string or a CSV file with columns `v1,v2[,dv]`, one row
/// per node `x_0 … x_{N+1}`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub preset: Option<String>,
    pub file: Option<PathBuf>,
    /// Length `δ` on which the sampled potential is declared `W₁,₂`.
    pub regularity: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("output"),
            prefix: "run".into(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// Refinement levels; each halves `h`, `Δτ` and the output step.
    pub levels: usize,
    /// Also compare against the Crank–Nicolson oracle at `dt = Δτ`.
    pub oracle: bool,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { levels: 3, oracle: true }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DependenceConfig {
    pub epsilons: Vec<f64>,
    /// Initial-data direction, made compatible with the force direction.
    pub initial_direction: String,
    pub force_direction: String,
}

impl Default for DependenceConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-2, 1e-3, 1e-4],
            initial_direction: "gaussian(3,1,0,1)".into(),
            force_direction: "ramped_sinusoid(1,1,1)".into(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypothesesConfig {
    /// Radius of the `z`-ball sampled by the nonlinearity validators.
    pub radius: f64,
    pub epsilons: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Exponent for the global-existence growth bounds.
    pub growth_exponent: Option<f64>,
}

impl Default for HypothesesConfig {
    fn default() -> Self {
        Self {
            radius: 2.0,
            epsilons: vec![0.1, 1.0],
            samples: 100,
            seed: 0,
            growth_exponent: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalitiesConfig {
    pub exponents: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub epsilons: Vec<f64>,
}

impl Default for InequalitiesConfig {
    fn default() -> Self {
        Self {
            exponents: vec![2.0, 3.0, 4.0],
            samples: 1000,
            seed: 1,
            epsilons: vec![0.1, 1.0, 10.0],
        }
    }
}

fn zero_preset() -> String {
    "zero".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub grid: GridConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default = "zero_preset")]
    pub nonlinearity: String,
    #[serde(default = "zero_preset")]
    pub force: String,
    #[serde(default = "zero_preset")]
    pub initial: String,
    /// Lift width; default `min(1, L/4, δ_reg)`.
    pub delta: Option<f64>,
    #[serde(default)]
    pub expect_blowup: bool,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    #[serde(default)]
    pub dependence: DependenceConfig,
    #[serde(default)]
    pub hypotheses: HypothesesConfig,
    #[serde(default)]
    pub inequalities: InequalitiesConfig,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &dir)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.directory)
    }

    /// Checks every preset and solver setting without building a problem.
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        NonlinearityPreset::parse(&self.nonlinearity)?;
        ForcePreset::parse(&self.force)?;
        InitialCondition::parse(&self.initial)?;
        match (&self.potential.preset, &self.potential.file) {
            (Some(p), None) => {
                PotentialPreset::parse(p)?;
            }
            (None, Some(_)) | (None, None) => {}
            (Some(_), Some(_)) => {
                return Err(Error::Config("potential: give either `preset` or `file`, not both".into()))
            }
        }
        if self.experiment == ExperimentKind::Dependence {
            InitialCondition::parse(&self.dependence.initial_direction)?;
            ForcePreset::parse(&self.dependence.force_direction)?;
            if self.dependence.epsilons.iter().any(|e| !(*e > 0.0)) {
                return Err(Error::Config("dependence.epsilons must be positive".into()));
            }
        }
        if self.experiment == ExperimentKind::Convergence && self.convergence.levels < 2 {
            return Err(Error::Config("convergence.levels must be ≥ 2".into()));
        }
        Ok(())
    }

    pub fn grid_at(&self, level: u32) -> Result<Grid> {
        let n = (self.grid.interior + 1) * (1 << level) - 1;
        Grid::new(self.grid.length, n)
    }

    pub fn potential_on(&self, grid: Grid) -> Result<PotentialSpec> {
        match (&self.potential.preset, &self.potential.file) {
            (Some(p), None) => PotentialPreset::parse(p)?.build(grid),
            (None, Some(f)) => load_potential(&self.resolve(f), grid, self.potential.regularity),
            (None, None) => Ok(PotentialSpec::zero(grid)),
            (Some(_), Some(_)) => Err(Error::Config("potential: give either `preset` or `file`, not both".into())),
        }
    }

    pub fn force(&self) -> Result<BoundaryForce> {
        ForcePreset::parse(&self.force)?.build()
    }

    /// The problem on refinement level `level` (0 is the configured grid).
    pub fn problem_at(&self, level: u32) -> Result<Problem> {
        let grid = self.grid_at(level)?;
        let potential = self.potential_on(grid)?;
        let nonlinearity = NonlinearityPreset::parse(&self.nonlinearity)?.build()?;
        let force = self.force()?;
        let initial = build_initial(&self.initial, grid, &potential, &force, self.delta)?;
        let mut p = Problem::new(potential, nonlinearity, force, initial)?;
        p.delta = self.delta;
        Ok(p)
    }

    /// Solver settings for level `level`: window, output step and hence `Δτ`
    /// divided by `2^level`, same node count per window.
    pub fn solver_at(&self, level: u32) -> SolverConfig {
        let s = (1usize << level) as f64;
        SolverConfig {
            window: self.solver.window / s,
            output_dt: self.solver.output_dt / s,
            min_window: self.solver.min_window / s,
            ..self.solver.clone()
        }
    }
}

/// Samples an initial-condition preset compatible with `force`.
pub fn build_initial(
    text: &str,
    grid: Grid,
    potential: &PotentialSpec,
    force: &BoundaryForce,
    delta: Option<f64>,
) -> Result<crate::field::ComplexField> {
    let ic = InitialCondition::parse(text)?;
    let delta = match delta {
        Some(d) => d,
        None => {
            let nl = crate::nonlinearity::NonlinearitySpec::zero();
            LiftContext::new(grid, potential, nl, force.clone(), None)?.delta()
        }
    };
    ic.build(grid, force, delta, |k| Ok(Hamiltonian::assemble(grid, potential)?.eigenmode(k)))
}

#[derive(Deserialize)]
struct PotentialRow {
    v1: f64,
    v2: f64,
    dv: Option<f64>,
}

fn load_potential(path: &Path, grid: Grid, regularity: Option<f64>) -> Result<PotentialSpec> {
    let mut rd = csv::Reader::from_path(path)
        .map_err(|e| Error::Parse(format!("potential file {}: {e}", path.display())))?;
    let rows = rd
        .deserialize()
        .collect::<std::result::Result<Vec<PotentialRow>, _>>()
        .map_err(|e| Error::Parse(format!("potential file {}: {e}", path.display())))?;
    if rows.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: rows.len(),
        });
    }
    let mut spec = PotentialSpec::new(
        grid,
        rows.iter().map(|r| r.v1).collect(),
        rows.iter().map(|r| r.v2).collect(),
    )?
    .with_note(format!("sampled from {}", path.display()));
    if rows.iter().all(|r| r.dv.is_some()) {
        spec = spec.with_derivative(rows.iter().map(|r| r.dv.unwrap_or(0.0)).collect());
    }
    if let Some(d) = regularity {
        spec = spec.with_regularity(d);
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
experiment = "solve"
[grid]
length = 10.0
interior = 63
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse(MINIMAL, Path::new("/tmp")).unwrap();
        c.validate().unwrap();
        assert_eq!(c.nonlinearity, "zero");
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.output_dir(), PathBuf::from("/tmp/output"));
        let p = c.problem_at(0).unwrap();
        assert_eq!(p.grid.interior(), 63);
        assert_eq!(c.grid_at(2).unwrap().interior(), 255);
        assert_eq!(c.solver_at(1).window, 0.025);
    }

    #[test]
    fn schema_and_unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("schema_version = 1", "schema_version = 7");
        assert!(matches!(RunConfig::parse(&bad, Path::new(".")), Err(Error::Config(_))));
        let extra = format!("{MINIMAL}\n[solver]\nwindw = 0.1\n");
        assert!(matches!(RunConfig::parse(&extra, Path::new(".")), Err(Error::Parse(_))));
    }

    #[test]
    fn bad_presets_fail_validation() {
        let mut c = RunConfig::parse(MINIMAL, Path::new(".")).unwrap();
        c.force = "sinusoid(1)".into();
        assert!(c.validate().is_err());
        c.force = "zero".into();
        c.potential.preset = Some("harmonic(1)".into());
        c.potential.file = Some("v.csv".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn potential_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(1.0, 8).unwrap();
        let mut text = String::from("v1,v2,dv\n");
        for j in 0..g.len() {
            let x = g.x(j);
            text += &format!("{},{},{}\n", x * x, -1.0, 2.0 * x);
        }
        std::fs::write(dir.path().join("v.csv"), text).unwrap();
        let src = MINIMAL.replace("interior = 63", "interior = 8").replace("length = 10.0", "length = 1.0")
            + "[potential]\nfile = \"v.csv\"\nregularity = 0.5\n";
        let c = RunConfig::parse(&src, dir.path()).unwrap();
        let p = c.potential_on(g).unwrap();
        assert_eq!(p.v2()[3], -1.0);
        assert!(p.derivative().is_some());
        assert_eq!(p.regularity().unwrap().delta, 0.5);
        assert!(c.potential_on(Grid::new(1.0, 9).unwrap()).is_err());
    }
}
