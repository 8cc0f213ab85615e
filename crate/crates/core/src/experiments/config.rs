//! Declarative experiment configuration in TOML.
//!
//! ```toml
//! version = 1
//!
//! [problem]
//! example = 1
//!
//! [discretization]
//! coarse = [2, 4, 8, 16]
//! fine = 128
//! tau = 1e-3
//! tau_rule = "fixed"        # or "coarse-squared"
//! layers = ["auto"]         # counts, "sat" or "auto"
//!
//! [solver]
//! tol = 1e-11
//!
//! [output]
//! dir = "out/example1"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coefficient::CoefficientKind;
use crate::conservation::EnergyConvention;
use crate::error::{Error, Result};
use crate::experiments::problems::{configure_example_with, ExampleOptions};
use crate::lod::Layers;
use crate::problem::ProblemSpec;
use crate::time::{steps_for, Nonlinearity, SolverOptions};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub problem: ProblemSection,
    #[serde(default)]
    pub discretization: DiscretizationSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub reference: ReferenceSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub example: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub center_domain: bool,
    /// Overrides the example's final time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_time: Option<f64>,
    /// Overrides the cubic nonlinearity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<Nonlinearity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauRule {
    #[default]
    Fixed,
    /// `τ = H²`.
    CoarseSquared,
}

/// Layer count as written in a config: a number, `sat`, or `auto`
/// (`⌈4 log₂(1/H)⌉` for each coarse size).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LayerToken", into = "LayerToken")]
pub enum LayerSpec {
    Auto,
    Given(Layers),
}

impl LayerSpec {
    pub fn resolve(self, coarse_side: usize) -> Layers {
        match self {
            LayerSpec::Auto => Layers::default_for(coarse_side),
            LayerSpec::Given(l) => l,
        }
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(LayerSpec::Auto),
            other => other.parse().map(LayerSpec::Given),
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Auto => f.write_str("auto"),
            LayerSpec::Given(l) => l.fmt(f),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LayerToken {
    Count(usize),
    Word(String),
}

impl TryFrom<LayerToken> for LayerSpec {
    type Error = Error;

    fn try_from(t: LayerToken) -> Result<Self> {
        match t {
            LayerToken::Count(n) => Ok(LayerSpec::Given(Layers::Fixed(n))),
            LayerToken::Word(w) => w.parse(),
        }
    }
}

impl From<LayerSpec> for LayerToken {
    fn from(l: LayerSpec) -> Self {
        match l {
            LayerSpec::Given(Layers::Fixed(n)) => LayerToken::Count(n),
            other => LayerToken::Word(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceChoice {
    #[default]
    Lod,
    /// Standard P1 elements on the coarse mesh, for comparison.
    CoarseFem,
}

/// Whether errors are divided by the norm of the exact or reference solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMeasure {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSection {
    /// Coarse cells per side, one convergence row each.
    #[serde(default = "default_coarse")]
    pub coarse: Vec<usize>,
    /// Fine cells per side.
    #[serde(default = "default_fine")]
    pub fine: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub tau_rule: TauRule,
    #[serde(default = "default_layers")]
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub space: SpaceChoice,
    /// Defaults to absolute with an exact solution, relative otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_measure: Option<ErrorMeasure>,
    /// Largest number of time levels at which errors are sampled.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        DiscretizationSection {
            coarse: default_coarse(),
            fine: default_fine(),
            tau: default_tau(),
            tau_rule: TauRule::Fixed,
            layers: default_layers(),
            space: SpaceChoice::Lod,
            error_measure: None,
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            tol: default_tol(),
            max_iters: default_max_iters(),
            threads: None,
        }
    }
}

impl SolverSection {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Defaults to `<dir>/cache`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub use_cache: bool,
    /// Write a full-precision snapshot every this many steps; 0 disables.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub energy_convention: EnergyConvention,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            cache_dir: None,
            use_cache: true,
            snapshot_every: 0,
            energy_convention: EnergyConvention::default(),
        }
    }
}

/// Fine-mesh surrogate for examples without a closed-form solution.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    /// Compare against a fine reference even when an exact solution exists.
    #[serde(default)]
    pub force: bool,
    /// Reference time step; defaults to `1e-2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

fn default_version() -> u32 {
    CONFIG_VERSION
}
fn default_seed() -> u64 {
    1
}
fn default_coarse() -> Vec<usize> {
    vec![2, 4, 8, 16]
}
fn default_fine() -> usize {
    64
}
fn default_tau() -> f64 {
    1e-2
}
fn default_layers() -> Vec<LayerSpec> {
    vec![LayerSpec::Auto]
}
fn default_samples() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-11
}
fn default_max_iters() -> usize {
    100
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

/// Fine cells per side used for the reference solution of `example`.
pub fn default_reference_fine(example: u32) -> usize {
    if example == 5 {
        128
    } else {
        64
    }
}

impl ExperimentConfig {
    /// Defaults for `example`: the coarse sizes 2..16, the reference fine
    /// mesh and `τ = 1e-2`.
    pub fn for_example(example: u32) -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            problem: ProblemSection {
                example,
                seed: default_seed(),
                center_domain: false,
                final_time: None,
                nonlinearity: None,
            },
            discretization: DiscretizationSection {
                fine: default_reference_fine(example),
                ..Default::default()
            },
            solver: SolverSection::default(),
            output: OutputSection::default(),
            reference: ReferenceSection::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let opts = ExampleOptions {
            seed: self.problem.seed,
            center_domain: self.problem.center_domain,
        };
        let mut p = configure_example_with(self.problem.example, &opts)?;
        if let Some(t) = self.problem.final_time {
            p.final_time = t;
        }
        if let Some(nl) = self.problem.nonlinearity {
            p.nonlinearity = nl;
        }
        Ok(p)
    }

    pub fn final_time(&self) -> Result<f64> {
        Ok(self.problem()?.final_time)
    }

    /// Time step of the row with `coarse` cells per side.
    pub fn tau_for(&self, coarse: usize) -> f64 {
        match self.discretization.tau_rule {
            TauRule::Fixed => self.discretization.tau,
            TauRule::CoarseSquared => 1.0 / (coarse * coarse) as f64,
        }
    }

    pub fn reference_tau(&self) -> f64 {
        self.reference.tau.unwrap_or(1e-2)
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.output.cache_dir.clone().unwrap_or_else(|| self.output.dir.join("cache"))
    }

    pub fn error_measure(&self, has_exact: bool) -> ErrorMeasure {
        self.discretization.error_measure.unwrap_or(if has_exact {
            ErrorMeasure::Absolute
        } else {
            ErrorMeasure::Relative
        })
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&json))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let d = &self.discretization;
        if d.coarse.is_empty() {
            return Err(Error::Config("discretization.coarse is empty".into()));
        }
        if d.layers.is_empty() {
            return Err(Error::Config("discretization.layers is empty".into()));
        }
        if d.fine == 0 || d.samples == 0 {
            return Err(Error::Config("fine and samples must be positive".into()));
        }
        for &h in &d.coarse {
            if h == 0 || d.fine % h != 0 {
                return Err(Error::Config(format!(
                    "fine size 1/{} is not a refinement of coarse size 1/{h}",
                    d.fine
                )));
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iters == 0 {
            return Err(Error::Config("solver tolerance and iteration cap must be positive".into()));
        }
        if self.solver.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        let p = self.problem()?;
        if !(p.final_time > 0.0) {
            return Err(Error::Config("final time must be positive".into()));
        }
        for &h in &d.coarse {
            steps_for(p.final_time, self.tau_for(h)).map_err(|e| Error::Config(e.to_string()))?;
        }
        if p.exact.is_none() || self.reference.force {
            steps_for(p.final_time, self.reference_tau()).map_err(|e| Error::Config(e.to_string()))?;
        }
        for field in [&p.b, &p.v] {
            check_resolved(field.kind(), field.name(), d.fine)?;
        }
        Ok(())
    }
}

/// Piecewise data must jump on fine mesh lines.
fn check_resolved(kind: &CoefficientKind, name: &str, fine: usize) -> Result<()> {
    let cell = match kind {
        CoefficientKind::PiecewiseOnGrid { cell_size } => *cell_size,
        CoefficientKind::RandomCheckerboard { cell_size, .. } => *cell_size,
        _ => return Ok(()),
    };
    let per_cell = cell * fine as f64;
    if per_cell < 1.0 - 1e-12 || (per_cell - per_cell.round()).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "fine size 1/{fine} does not resolve the cells of {name} (cell size {cell})"
        )));
    }
    Ok(())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
