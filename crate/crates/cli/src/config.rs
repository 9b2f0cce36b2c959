//! Run configuration: experiment defaults, then an optional TOML file, then
//! command-line flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qqft::engine::NoiseGranularity;
use qqft::HaldaneParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Flatband,
    Poincare,
}

/// The `(phi, M)` grid scanned for the Bott phase diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramConfig {
    pub enabled: bool,
    pub phi_min: f64,
    pub phi_max: f64,
    pub m_min: f64,
    pub m_max: f64,
    pub phi_cells: usize,
    pub m_cells: usize,
    /// Noise strength used for the diagram, one realization per cell.
    pub sigma: f64,
}

impl Default for DiagramConfig {
    fn default() -> Self {
        Self { enabled: true, phi_min: -PI, phi_max: PI, m_min: -4.0, m_max: 4.0, phi_cells: 32, m_cells: 32, sigma: 3e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub sigmas: Vec<f64>,
    pub realizations: usize,
    /// Momentum grid per axis (flat band) or ring length (Poincaré).
    pub grid: usize,
    pub noise_on_diagonal: bool,
    pub granularity: NoiseGranularity,
    pub haldane: HaldaneParams,
    pub diagram: DiagramConfig,
    pub gamma: usize,
    /// Output directory. Left out of the serialized form so that the digest
    /// and manifest do not depend on where results are written.
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let (sigmas, grid) = match experiment {
            Experiment::Flatband => (vec![0.0, 1e-3, 2.5e-3, 5e-3, 1e-2], 16),
            Experiment::Poincare => (vec![0.0, 1e-3, 5e-3, 1e-2, 2e-2, 5e-2], 33),
        };
        Self {
            experiment,
            seed: 20_241_019,
            sigmas,
            realizations: 100,
            grid,
            noise_on_diagonal: false,
            granularity: NoiseGranularity::PerStep,
            haldane: HaldaneParams::default(),
            diagram: DiagramConfig::default(),
            gamma: 2,
            out: PathBuf::from(match experiment {
                Experiment::Flatband => "out/flatband",
                Experiment::Poincare => "out/poincare",
            }),
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(e) = o.experiment {
            if e != self.experiment {
                bail!("config is for {:?} but the command runs {:?}", e, self.experiment);
            }
        }
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = &o.$field { self.$field = v.clone(); })* };
        }
        take!(seed, sigmas, realizations, grid, noise_on_diagonal, granularity, gamma, out);
        if let Some(h) = &o.haldane {
            let p = &mut self.haldane;
            macro_rules! take_h {
                ($($field:ident),*) => { $(if let Some(v) = h.$field { p.$field = v; })* };
            }
            take_h!(t1, t2, phi, m, d0, target_norm);
        }
        if let Some(d) = &o.diagram {
            let g = &mut self.diagram;
            macro_rules! take_d {
                ($($field:ident),*) => { $(if let Some(v) = d.$field { g.$field = v; })* };
            }
            take_d!(enabled, phi_min, phi_max, m_min, m_max, phi_cells, m_cells, sigma);
        }
        self.validate()
    }

    fn validate(&self) -> Result<()> {
        if self.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            bail!("sigma values must be finite and non-negative");
        }
        if self.realizations == 0 {
            bail!("realizations must be at least 1");
        }
        if self.grid < 2 {
            bail!("grid must be at least 2");
        }
        if self.gamma < 2 {
            bail!("gamma must be at least 2");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn digest(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaldaneOverrides {
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub phi: Option<f64>,
    pub m: Option<f64>,
    pub d0: Option<f64>,
    pub target_norm: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramOverrides {
    pub enabled: Option<bool>,
    pub phi_min: Option<f64>,
    pub phi_max: Option<f64>,
    pub m_min: Option<f64>,
    pub m_max: Option<f64>,
    pub phi_cells: Option<usize>,
    pub m_cells: Option<usize>,
    pub sigma: Option<f64>,
}

/// A partial configuration, as read from a file or collected from flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub sigmas: Option<Vec<f64>>,
    pub realizations: Option<usize>,
    pub grid: Option<usize>,
    pub noise_on_diagonal: Option<bool>,
    pub granularity: Option<NoiseGranularity>,
    pub gamma: Option<usize>,
    pub out: Option<PathBuf>,
    pub haldane: Option<HaldaneOverrides>,
    pub diagram: Option<DiagramOverrides>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Defaults, then the file at `file`, then `flags`.
pub fn resolve(experiment: Experiment, file: Option<&Path>, flags: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::defaults(experiment);
    if let Some(path) = file {
        cfg.apply(&Overrides::from_file(path)?)?;
    }
    cfg.apply(flags)?;
    Ok(cfg)
}
