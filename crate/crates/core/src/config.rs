//! Experiment description read from a single JSON document. Physical
//! quantities are SI with the unit in the key name.

use crate::error::{Error, Result};
use crate::grid::DomainGrid;
use crate::phantom::PhantomSpec;
use crate::recon::ReconConfig;
use crate::simulate::{Acquisition, SimulationConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Subsampling factors of the regular-decimation protocol.
pub const SUBSAMPLE_FACTORS: [usize; 8] = [1, 2, 4, 8, 16, 32, 64, 128];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: Vec<usize>,
    pub spacing_m: f64,
    pub wavelength_m: f64,
    #[serde(default = "one")]
    pub background_permittivity: f64,
}

fn one() -> f64 {
    1.0
}

impl GridSpec {
    /// Grid centered on the origin.
    pub fn build(&self) -> Result<DomainGrid> {
        DomainGrid::centered(self.dims.clone(), self.spacing_m, self.wavelength_m, self.background_permittivity)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub acquisition: Acquisition,
    pub phantom: PhantomSpec,
    #[serde(default)]
    pub recon: ReconConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    /// Falls back to the environment or the working directory when absent.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        self.acquisition.validate()?;
        if !SUBSAMPLE_FACTORS.contains(&self.acquisition.subsample_factor) {
            return Err(Error::Config(format!(
                "subsampling factor {} is not one of {SUBSAMPLE_FACTORS:?}",
                self.acquisition.subsample_factor
            )));
        }
        self.phantom.validate(&grid)?;
        self.recon.validate()?;
        self.simulation.forward.validate()?;
        let (lo, hi) = grid.bounds();
        let reach = (0..grid.ndim()).map(|d| lo[d].abs().max(hi[d].abs())).fold(0.0f64, f64::hypot);
        if self.acquisition.receiver_radius_m.min(self.acquisition.transmitter_radius_m) <= reach {
            log::warn!("sensor ring intersects the imaging domain");
        }
        Ok(())
    }

    pub fn simulation_config(&self) -> SimulationConfig {
        SimulationConfig { seed: self.seed, ..self.simulation.clone() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Two cylinders of radius `0.6 lambda` on a `64 x 64` grid at `lambda/16`
    /// with 8 transmitters and 60 receivers on a ring of `10 lambda`.
    pub fn two_cylinder_demo(contrast: f64) -> Self {
        let lambda = 0.0749;
        ExperimentConfig {
            grid: GridSpec {
                dims: vec![64, 64],
                spacing_m: lambda / 16.0,
                wavelength_m: lambda,
                background_permittivity: 1.0,
            },
            acquisition: Acquisition {
                transmitter_count: 8,
                transmitter_radius_m: 10.0 * lambda,
                receiver_count: 60,
                receiver_radius_m: 10.0 * lambda,
                ..Acquisition::default()
            },
            phantom: PhantomSpec::two_cylinders(0.6 * lambda, contrast),
            recon: ReconConfig::default(),
            simulation: SimulationConfig::default(),
            output_dir: None,
            seed: 0,
        }
    }
}
