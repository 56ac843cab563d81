//! Experiment configuration: one TOML file, overridable from the command line.

use std::path::{Path, PathBuf};

use risprop::experiments::{log_grid, Scenario, SisExperiment, SweepAxis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: usize,
    pub out: PathBuf,
    pub threads: Option<usize>,
    /// Also write manifest.json next to the CSV files.
    pub manifest: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            trials: 100_000,
            out: PathBuf::from("out"),
            threads: None,
            manifest: false,
        }
    }
}

/// Quantities a single experiment may sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Transmit power, dBm.
    Power,
    /// Laplace-transform argument s.
    LaplaceS,
    UeDensity,
    BsDensity,
    /// Carrier frequency, Hz.
    Frequency,
    RisElements,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Power => "power",
            Axis::LaplaceS => "laplace_s",
            Axis::UeDensity => "ue_density",
            Axis::BsDensity => "bs_density",
            Axis::Frequency => "frequency",
            Axis::RisElements => "ris_elements",
        }
    }

    pub fn parameter(&self) -> Option<SweepAxis> {
        match self {
            Axis::UeDensity => Some(SweepAxis::UeDensity),
            Axis::BsDensity => Some(SweepAxis::BsDensity),
            Axis::Frequency => Some(SweepAxis::Frequency),
            Axis::RisElements => Some(SweepAxis::RisElements),
            Axis::Power | Axis::LaplaceS => None,
        }
    }

    pub fn default_values(&self) -> Vec<f64> {
        match self {
            Axis::Power => vec![-20.0, -10.0, -5.0, 0.0, 10.0, 20.0, 30.0],
            Axis::LaplaceS => log_grid(1e8, 1e13, 50),
            Axis::UeDensity => vec![1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1],
            Axis::BsDensity => vec![2e-6, 5e-6, 1e-5, 2e-5, 5e-5],
            Axis::Frequency => vec![1e9, 2e9, 3e9, 5e9, 10e9, 20e9, 30e9],
            Axis::RisElements => vec![100.0, 200.0, 300.0, 400.0],
        }
    }
}

impl From<SweepAxis> for Axis {
    fn from(a: SweepAxis) -> Self {
        match a {
            SweepAxis::UeDensity => Axis::UeDensity,
            SweepAxis::BsDensity => Axis::BsDensity,
            SweepAxis::Frequency => Axis::Frequency,
            SweepAxis::RisElements => Axis::RisElements,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: Axis,
    /// Sorted ascending; empty means the axis default grid.
    #[serde(default)]
    pub values: Vec<f64>,
    /// Secondary grouping for R₀ sweeps.
    #[serde(default)]
    pub group_by: Option<SweepAxis>,
    #[serde(default)]
    pub group_values: Vec<f64>,
    /// Operating power for R₀ sweeps, dBm.
    #[serde(default = "default_p_dbm")]
    pub p_dbm: f64,
    /// Pair every R₀ point with a Monte Carlo estimate.
    #[serde(default)]
    pub empirical: bool,
}

fn default_p_dbm() -> f64 {
    -5.0
}

impl Sweep {
    pub fn new(axis: Axis) -> Self {
        Sweep {
            axis,
            values: Vec::new(),
            group_by: None,
            group_values: Vec::new(),
            p_dbm: default_p_dbm(),
            empirical: false,
        }
    }

    pub fn resolved_values(&self) -> Vec<f64> {
        if self.values.is_empty() {
            self.axis.default_values()
        } else {
            self.values.clone()
        }
    }

    pub fn resolved_groups(&self) -> Option<(SweepAxis, Vec<f64>)> {
        self.group_by.map(|g| {
            let values = if self.group_values.is_empty() { Axis::from(g).default_values() } else { self.group_values.clone() };
            (g, values)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerCheck {
    pub grid_points: usize,
    /// Largest acceptable KS distance.
    pub ks_max: f64,
}

impl Default for PowerCheck {
    fn default() -> Self {
        PowerCheck { grid_points: 200, ks_max: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaplaceCheck {
    /// Largest acceptable closed-form vs quadrature relative gap.
    pub rel_tol: f64,
}

impl Default for LaplaceCheck {
    fn default() -> Self {
        LaplaceCheck { rel_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub scenario: Scenario,
    pub sweep: Option<Sweep>,
    pub power: PowerCheck,
    pub laplace: LaplaceCheck,
    pub sis: SisExperiment,
}

fn check_grid(name: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("{name} grid has a non-finite value")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// The configuration without where and how it ran (output directory,
    /// thread count), so identical experiments print identical headers.
    pub fn provenance_toml(&self) -> String {
        let mut value = toml::Value::try_from(self).expect("configuration serializes");
        if let Some(run) = value.get_mut("run").and_then(toml::Value::as_table_mut) {
            run.remove("out");
            run.remove("threads");
        }
        toml::to_string(&value).expect("configuration serializes")
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.provenance_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(sweep) = &self.sweep {
            check_grid(sweep.axis.name(), &sweep.values)?;
            check_grid("group", &sweep.group_values)?;
            if let Some(g) = sweep.group_by {
                if Some(g) == sweep.axis.parameter() {
                    return Err(CliError::Config(format!("cannot group {} by itself", g.name())));
                }
            } else if !sweep.group_values.is_empty() {
                return Err(CliError::Config("group_values given without group_by".into()));
            }
        }
        check_grid("sis.densities", &self.sis.densities)?;
        if self.sis.densities.is_empty() || self.sis.initial_infected.is_empty() {
            return Err(CliError::Config("sis needs at least one density and one initial count".into()));
        }
        if self.run.threads == Some(0) {
            return Err(CliError::Config("threads must be positive".into()));
        }
        Ok(())
    }

    /// The sweep for a command accepting `allowed` axes, defaulting to `fallback`.
    pub fn sweep_for(&self, command: &str, allowed: &[Axis], fallback: Axis) -> Result<Sweep, CliError> {
        match &self.sweep {
            None => Ok(Sweep::new(fallback)),
            Some(s) if allowed.contains(&s.axis) => Ok(s.clone()),
            Some(s) => Err(CliError::Config(format!("{command} cannot sweep {}", s.axis.name()))),
        }
    }

    pub fn require_no_sweep(&self, command: &str) -> Result<(), CliError> {
        match &self.sweep {
            None => Ok(()),
            Some(s) => Err(CliError::Config(format!("{command} takes no sweep, found axis {}", s.axis.name()))),
        }
    }
}
