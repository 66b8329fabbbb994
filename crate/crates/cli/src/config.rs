//! Declarative experiment configuration (TOML). One file drives one
//! experiment; the CLI subcommand selects the experiment kind and `--seed`
//! can override the configured seed.

use std::path::Path;

use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Build,
    SolveNeumann,
    SolveFractional,
    Verify,
    Stability,
    Sphericalize,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Build => "build",
            ExperimentKind::SolveNeumann => "solve-neumann",
            ExperimentKind::SolveFractional => "solve-fractional",
            ExperimentKind::Verify => "verify",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Sphericalize => "sphericalize",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentSection,
    pub space: SpaceSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub sphericalize: SphericalizeSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Seed for every randomized part of the experiment (mandatory).
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    /// Builtin fixture name: `cycle(n)`, `two_point`, `cantor_like(k)`.
    pub fixture: Option<String>,
    /// CSV of coordinate columns with a trailing mass column.
    pub points_file: Option<String>,
    /// n×n distance matrix file (paired with `mass_file`).
    pub matrix_file: Option<String>,
    pub mass_file: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub alpha: f64,
    pub tau: f64,
    pub depth: usize,
    pub p: f64,
    pub theta: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            tau: 1.5,
            depth: 4,
            p: 2.0,
            theta: 0.5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 2000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// `random` (seeded Gaussian, projected compatible) or `values`.
    pub source: String,
    #[serde(default)]
    pub values: Vec<f64>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            source: "random".into(),
            values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub scales: Vec<f64>,
    /// `zero` perturbs from the zero datum, `random` from a seeded base.
    pub base: String,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self {
            scales: vec![1e-3, 1e-2, 1e-1, 1.0, 10.0],
            base: "zero".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphericalizeSection {
    pub y_min: f64,
    pub y_max: f64,
    pub levels: usize,
    pub a: f64,
    pub beta: f64,
    pub neighbor_radius: f64,
    /// Radii for the ball-at-infinity closed-form comparison.
    pub radii: Vec<f64>,
}

impl Default for SphericalizeSection {
    fn default() -> Self {
        Self {
            y_min: 0.5,
            y_max: 1000.0,
            levels: 200,
            a: 0.0,
            beta: 2.0,
            neighbor_radius: 0.5,
            radii: vec![0.25],
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<(Self, String), String> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let config: Config =
            toml::from_str(&raw).map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        Ok((config, raw))
    }
}
