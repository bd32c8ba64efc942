//! Resolved run configuration and the manifest written next to every run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use trussfd::ground::ProblemFile;
use trussfd::{GaConfig, GroundStructure, Material, WsConfig};

/// Where the ground structure comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemSource {
    /// The built-in cantilever: left edge pinned, unit downward load at the
    /// right edge, mid-height.
    Grid { nx: usize, ny: usize, width: f64, height: f64 },
    File { path: PathBuf },
}

impl ProblemSource {
    pub fn build(&self) -> Result<GroundStructure> {
        match self {
            ProblemSource::Grid { nx, ny, width, height } => {
                GroundStructure::cantilever(*nx, *ny, *width, *height).context("building grid problem")
            }
            ProblemSource::File { path } => load_problem(path),
        }
    }
}

pub fn load_problem(path: &Path) -> Result<GroundStructure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let pf = ProblemFile::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    pf.build().with_context(|| format!("building {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Moo,
    Wsum,
    Scaling,
    Compare,
}

/// GA settings as given on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaSettings {
    pub population: usize,
    pub generations: usize,
    pub p_crossover: f64,
    /// `None` means one over the number of members.
    pub p_mutation: Option<f64>,
    pub repetitions: usize,
    /// Aspect ratios whose weighted-sum optima are injected into the
    /// initial population.
    pub seed_ratios: Vec<f64>,
}

impl Default for GaSettings {
    fn default() -> Self {
        GaSettings {
            population: 40,
            generations: 500,
            p_crossover: 0.9,
            p_mutation: None,
            repetitions: 10,
            seed_ratios: vec![1.0, 2.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub method: Method,
    pub r_list: Vec<f64>,
    pub volume: f64,
    pub material: Material,
    pub ga: GaSettings,
    pub ws: WsConfig,
    pub rng_seed: u64,
    pub output_dir: PathBuf,
    pub single_thread: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let needs_ratios = !matches!(self.method, Method::Moo);
        if needs_ratios && self.r_list.is_empty() {
            bail!("the r list is empty; pass at least one aspect ratio with --r");
        }
        if let Some(r) = self.r_list.iter().chain(&self.ga.seed_ratios).find(|r| !(**r > 0.0 && r.is_finite())) {
            bail!("aspect ratios must be positive, got {r}");
        }
        if !(self.volume > 0.0 && self.volume.is_finite()) {
            bail!("volume must be positive, got {}", self.volume);
        }
        if !(self.material.e > 0.0 && self.material.sigma_bar > 0.0) {
            bail!("E and sigma_bar must be positive");
        }
        if matches!(self.method, Method::Moo | Method::Compare) && self.ga.repetitions == 0 {
            bail!("at least one GA repetition is required");
        }
        self.ws.validate()?;
        Ok(())
    }

    pub fn parallel(&self) -> bool {
        !self.single_thread
    }

    pub fn ws_config(&self) -> WsConfig {
        WsConfig {
            rng_seed: self.rng_seed,
            parallel: self.parallel(),
            ..self.ws.clone()
        }
    }

    /// GA configuration without seed individuals, centred on `q0`.
    pub fn ga_config(&self, q0: Vec<f64>) -> GaConfig {
        let mut cfg = GaConfig::standard(q0);
        cfg.population_size = self.ga.population;
        cfg.generations = self.ga.generations;
        cfg.p_crossover = self.ga.p_crossover;
        if let Some(p) = self.ga.p_mutation {
            cfg.p_mutation = p;
        }
        cfg.rng_seed = self.rng_seed;
        cfg.parallel = self.parallel();
        cfg
    }
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub rng_seed: u64,
    /// The problem actually solved, in problem-file form.
    pub problem: ProblemFile,
    /// GA configuration after seeding, when a GA ran.
    pub ga: Option<GaConfig>,
    /// Warnings raised during the run.
    pub flags: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, g: &GroundStructure) -> Self {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            rng_seed: config.rng_seed,
            problem: ProblemFile::from_structure(g),
            ga: None,
            flags: Vec::new(),
        }
    }
}
