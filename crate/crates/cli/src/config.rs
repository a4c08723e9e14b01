//! Experiment configuration: defaults per experiment, optional TOML config
//! file with one section per experiment, command-line flags overriding both,
//! and validation of method/parameter compatibility.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context};
use ddsolve_core::linalg::EIGEN_DEFAULT_SEED;
use ddsolve_core::steppers::CouplingMethod;
use serde::Deserialize;

/// Which experiment driver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SplitDof,
    Heat1d,
    Heat2d,
    Converge,
    Baumgarte,
    Counterexample,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::SplitDof => "split-dof",
            Experiment::Heat1d => "heat1d",
            Experiment::Heat2d => "heat2d",
            Experiment::Converge => "converge",
            Experiment::Baumgarte => "baumgarte",
            Experiment::Counterexample => "counterexample",
        }
    }
}

/// Coupling method selector as spelled on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    DContinuity,
    ModifiedDContinuity,
    VContinuity,
    Baumgarte,
}

impl MethodKind {
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "d-continuity" => MethodKind::DContinuity,
            "modified-d-continuity" => MethodKind::ModifiedDContinuity,
            "v-continuity" => MethodKind::VContinuity,
            "baumgarte" => MethodKind::Baumgarte,
            other => bail!(
                "unknown method '{other}' (expected d-continuity, \
                 modified-d-continuity, v-continuity, or baumgarte)"
            ),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::DContinuity => "d-continuity",
            MethodKind::ModifiedDContinuity => "modified-d-continuity",
            MethodKind::VContinuity => "v-continuity",
            MethodKind::Baumgarte => "baumgarte",
        }
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub method: MethodKind,
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Elements per subdomain (per direction for 2D meshes).
    pub mesh: usize,
    /// Stabilization parameter for the combined-constraint method.
    pub alpha: f64,
    pub conductivity: f64,
    pub capacity: f64,
    // Two-mass problem parameters.
    pub m_a: f64,
    pub m_b: f64,
    pub k_a: f64,
    pub k_b: f64,
    pub u0: f64,
    /// Output times for nodal snapshots (heat experiments).
    pub snapshots: Vec<f64>,
    /// Mesh hierarchy for the convergence study (elements per subdomain).
    pub levels: Vec<usize>,
    /// Spatial dimension for the convergence study (1 or 2).
    pub dim: usize,
    /// Row count for the sequence experiment.
    pub n_terms: usize,
    pub out: Option<PathBuf>,
    /// Seed for the eigenvalue iteration (`DDSOLVE_SEED` overrides).
    pub seed: u64,
}

impl ExperimentConfig {
    /// Documented defaults per experiment.
    pub fn defaults_for(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            experiment,
            method: MethodKind::DContinuity,
            gamma: 0.75,
            dt: 0.01,
            t_end: 0.7,
            mesh: 10,
            alpha: 1.0,
            conductivity: 1.0,
            capacity: 1.0,
            m_a: 1.0,
            m_b: 1.0,
            k_a: 10.0,
            k_b: 1.0,
            u0: 1.0,
            snapshots: Vec::new(),
            levels: vec![10, 20, 40],
            dim: 1,
            n_terms: 5,
            out: None,
            seed: EIGEN_DEFAULT_SEED,
        };
        match experiment {
            Experiment::SplitDof => base,
            Experiment::Heat1d => ExperimentConfig {
                dt: 0.001,
                t_end: 0.5,
                ..base
            },
            Experiment::Heat2d => ExperimentConfig {
                method: MethodKind::ModifiedDContinuity,
                dt: 0.001,
                t_end: 0.5,
                ..base
            },
            Experiment::Converge => ExperimentConfig {
                dt: 1e-5,
                t_end: 0.01,
                ..base
            },
            Experiment::Baumgarte => ExperimentConfig {
                method: MethodKind::Baumgarte,
                gamma: 0.1,
                dt: 0.001,
                t_end: 2.0,
                ..base
            },
            Experiment::Counterexample => ExperimentConfig {
                gamma: 0.5,
                ..base
            },
        }
    }

    /// The coupling method with its parameter attached.
    pub fn coupling_method(&self) -> CouplingMethod {
        match self.method {
            MethodKind::DContinuity => CouplingMethod::DContinuity,
            MethodKind::ModifiedDContinuity => CouplingMethod::ModifiedDContinuity,
            MethodKind::VContinuity => CouplingMethod::VContinuity,
            MethodKind::Baumgarte => CouplingMethod::Baumgarte { alpha: self.alpha },
        }
    }

    /// Number of whole steps to reach `t_end`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Apply one layer of overrides (file section or command-line flags).
    pub fn apply(&mut self, layer: &ConfigLayer) -> anyhow::Result<()> {
        if let Some(m) = &layer.method {
            self.method = MethodKind::parse(m)?;
        }
        if let Some(v) = layer.gamma {
            self.gamma = v;
        }
        if let Some(v) = layer.dt {
            self.dt = v;
        }
        if let Some(v) = layer.t_end {
            self.t_end = v;
        }
        if let Some(v) = layer.mesh {
            self.mesh = v;
        }
        if let Some(v) = layer.alpha {
            self.alpha = v;
        }
        if let Some(v) = layer.conductivity {
            self.conductivity = v;
        }
        if let Some(v) = layer.capacity {
            self.capacity = v;
        }
        if let Some(v) = layer.m_a {
            self.m_a = v;
        }
        if let Some(v) = layer.m_b {
            self.m_b = v;
        }
        if let Some(v) = layer.k_a {
            self.k_a = v;
        }
        if let Some(v) = layer.k_b {
            self.k_b = v;
        }
        if let Some(v) = layer.u0 {
            self.u0 = v;
        }
        if let Some(v) = &layer.snapshots {
            self.snapshots = v.clone();
        }
        if let Some(v) = &layer.levels {
            self.levels = v.clone();
        }
        if let Some(v) = layer.dim {
            self.dim = v;
        }
        if let Some(v) = layer.n_terms {
            self.n_terms = v;
        }
        if let Some(v) = &layer.out {
            self.out = Some(PathBuf::from(v));
        }
        Ok(())
    }

    /// Reject incompatible or out-of-range parameter combinations before any
    /// solver work starts.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.experiment == Experiment::Counterexample {
            if !(self.gamma > 0.0 && self.gamma <= 0.5) {
                bail!(
                    "counterexample requires gamma in (0, 1/2], got {}",
                    self.gamma
                );
            }
            if self.n_terms == 0 {
                bail!("n-terms must be at least 1");
            }
            return Ok(());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            bail!("gamma must lie in [0, 1], got {}", self.gamma);
        }
        if !(self.dt > 0.0) {
            bail!("dt must be positive, got {}", self.dt);
        }
        if self.t_end < 0.0 {
            bail!("t-end must be nonnegative, got {}", self.t_end);
        }
        if self.mesh == 0 {
            bail!("mesh must have at least one element per subdomain");
        }
        if self.gamma == 0.0
            && matches!(
                self.method,
                MethodKind::DContinuity | MethodKind::ModifiedDContinuity
            )
        {
            bail!(
                "{} with gamma = 0 is ill-posed (explicit update cannot \
                 enforce the primary-variable constraint)",
                self.method.name()
            );
        }
        if self.method == MethodKind::Baumgarte && !(self.alpha > 0.0) {
            bail!("baumgarte requires alpha > 0, got {}", self.alpha);
        }
        if self.experiment == Experiment::Baumgarte && self.method != MethodKind::Baumgarte {
            bail!("the baumgarte experiment only runs the baumgarte method");
        }
        if self.conductivity <= 0.0 || self.capacity <= 0.0 {
            bail!("material parameters must be positive");
        }
        if self.m_a <= 0.0 || self.m_b <= 0.0 {
            bail!("masses must be positive");
        }
        match self.experiment {
            Experiment::Converge => {
                if self.levels.len() < 3 {
                    bail!("converge needs at least 3 refinement levels");
                }
                for pair in self.levels.windows(2) {
                    if pair[1] != 2 * pair[0] {
                        bail!(
                            "refinement levels must double ({} -> {})",
                            pair[0],
                            pair[1]
                        );
                    }
                }
                if self.dim != 1 && self.dim != 2 {
                    bail!("dim must be 1 or 2, got {}", self.dim);
                }
            }
            Experiment::Heat1d | Experiment::Heat2d => {
                for &t in &self.snapshots {
                    if t < 0.0 || t > self.t_end + 0.5 * self.dt {
                        bail!("snapshot time {t} outside [0, t-end]");
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// One layer of optional overrides; every field left `None` falls through to
/// the layer below (defaults < config file < flags).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigLayer {
    pub method: Option<String>,
    pub gamma: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub mesh: Option<usize>,
    pub alpha: Option<f64>,
    pub conductivity: Option<f64>,
    pub capacity: Option<f64>,
    pub m_a: Option<f64>,
    pub m_b: Option<f64>,
    pub k_a: Option<f64>,
    pub k_b: Option<f64>,
    pub u0: Option<f64>,
    pub snapshots: Option<Vec<f64>>,
    pub levels: Option<Vec<usize>>,
    pub dim: Option<usize>,
    pub n_terms: Option<usize>,
    pub out: Option<String>,
}

/// Parse a config file: one `[section]` per experiment, `key = value` lines.
pub fn load_config_file(text: &str) -> anyhow::Result<BTreeMap<String, ConfigLayer>> {
    toml::from_str(text).context("failed to parse config file")
}

/// Resolve the final configuration: experiment defaults, then the matching
/// config-file section, then command-line flags.
pub fn resolve(
    experiment: Experiment,
    file_text: Option<&str>,
    flags: &ConfigLayer,
) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults_for(experiment);
    if let Some(text) = file_text {
        let sections = load_config_file(text)?;
        for (name, layer) in &sections {
            if name == experiment.name() {
                cfg.apply(layer)?;
            }
        }
    }
    cfg.apply(flags)?;
    if let Ok(seed_text) = std::env::var("DDSOLVE_SEED") {
        cfg.seed = seed_text
            .trim()
            .parse()
            .context("DDSOLVE_SEED must be an unsigned integer")?;
    }
    cfg.validate()?;
    Ok(cfg)
}
