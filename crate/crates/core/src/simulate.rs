//! Synthetic measurements. To avoid the inverse crime, data are generated on
//! a refined grid with a longer forward solve than reconstruction uses.

use crate::error::{Error, Result};
use crate::forward::{forward_solve, ForwardConfig};
use crate::greens::{build_domain_operator, build_sensor_operator};
use crate::grid::{DomainGrid, Point, SensorSet};
use crate::measurement::{point_sources_on_ring, MeasurementSet, SPEED_OF_LIGHT};
use crate::phantom::{downsample, PhantomSpec};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Transmitters and receivers on concentric circles around the grid center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Acquisition {
    pub transmitter_count: usize,
    pub transmitter_radius_m: f64,
    pub receiver_count: usize,
    pub receiver_radius_m: f64,
    /// Receivers within this full angle centered on a transmitter are
    /// inactive for it.
    pub exclusion_arc_deg: f64,
    pub start_angle_deg: f64,
    /// Regular decimation of each transmitter's active receivers.
    pub subsample_factor: usize,
}

impl Default for Acquisition {
    fn default() -> Self {
        Acquisition {
            transmitter_count: 8,
            transmitter_radius_m: 0.75,
            receiver_count: 60,
            receiver_radius_m: 0.75,
            exclusion_arc_deg: 0.0,
            start_angle_deg: 0.0,
            subsample_factor: 1,
        }
    }
}

impl Acquisition {
    pub fn validate(&self) -> Result<()> {
        if self.transmitter_count == 0 || self.receiver_count == 0 {
            return Err(Error::Config("need at least one transmitter and receiver".into()));
        }
        if !(self.transmitter_radius_m > 0.0 && self.receiver_radius_m > 0.0) {
            return Err(Error::Config("ring radii must be positive".into()));
        }
        if !(0.0..360.0).contains(&self.exclusion_arc_deg) {
            return Err(Error::Config("exclusion arc must lie in [0, 360) degrees".into()));
        }
        if self.subsample_factor == 0 {
            return Err(Error::Config("subsampling factor must be at least 1".into()));
        }
        Ok(())
    }

    /// Measurement set with the geometry filled in and `y = 0`.
    pub fn layout(&self, center: Point, wavelength_m: f64, background_permittivity: f64) -> Result<MeasurementSet> {
        self.validate()?;
        let start = self.start_angle_deg.to_radians();
        let transmitters = point_sources_on_ring(center, self.transmitter_radius_m, self.transmitter_count, start);
        let receivers = SensorSet::ring(center, self.receiver_radius_m, self.receiver_count, start)?;
        let half_arc = 0.5 * self.exclusion_arc_deg.to_radians();
        let active: Vec<Vec<usize>> = (0..self.transmitter_count)
            .map(|t| {
                let ta = start + std::f64::consts::TAU * t as f64 / self.transmitter_count as f64;
                (0..self.receiver_count)
                    .filter(|&r| {
                        let ra = start + std::f64::consts::TAU * r as f64 / self.receiver_count as f64;
                        let d = (ra - ta).rem_euclid(std::f64::consts::TAU);
                        d.min(std::f64::consts::TAU - d) > half_arc
                    })
                    .collect()
            })
            .collect();
        let y = active.iter().map(|a| vec![Complex64::new(0.0, 0.0); a.len()]).collect();
        let set = MeasurementSet {
            frequency_hz: SPEED_OF_LIGHT / wavelength_m,
            background_permittivity,
            transmitters,
            receivers,
            active,
            y,
        };
        set.subsample(self.subsample_factor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    /// Refinement of the data-generation grid per axis.
    pub refine: usize,
    /// Forward iterations used for generation, as a multiple of
    /// `forward.max_iters`.
    pub k_factor: usize,
    pub forward: ForwardConfig,
    /// Complex white Gaussian noise at this SNR; `None` for noiseless data.
    pub noise_snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { refine: 2, k_factor: 4, forward: ForwardConfig::default(), noise_snr_db: None, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub measurements: MeasurementSet,
    /// Potential rendered on the reconstruction grid.
    pub f_true: Vec<f64>,
    /// Potential on the generation grid, block-averaged to the
    /// reconstruction grid.
    pub f_generation: Vec<f64>,
    /// Forward iterations actually run per transmitter.
    pub forward_iterations: Vec<usize>,
}

/// Scattered field of `phantom` for every transmitter of `template`.
pub fn simulate(
    grid: &DomainGrid,
    phantom: &PhantomSpec,
    template: &MeasurementSet,
    cfg: &SimulationConfig,
) -> Result<Simulation> {
    if cfg.refine == 0 || cfg.k_factor == 0 {
        return Err(Error::Config("refine and k_factor must be at least 1".into()));
    }
    cfg.forward.validate()?;
    let fine = grid.refined(cfg.refine)?;
    let f_fine = match phantom {
        // File phantoms are given on the reconstruction grid.
        PhantomSpec::FromFile { .. } => {
            if cfg.refine != 1 {
                return Err(Error::Config("file phantoms need refine = 1".into()));
            }
            phantom.render(grid)?
        }
        _ => phantom.render(&fine)?,
    };
    let f_true = phantom.render(grid)?;
    let f_generation = if grid.ndim() == 2 { downsample(&f_fine, &fine, cfg.refine)? } else { f_true.clone() };

    let gen_cfg = ForwardConfig { max_iters: cfg.forward.max_iters * cfg.k_factor, ..cfg.forward.clone() };
    let g = build_domain_operator(&fine)?;
    let h = build_sensor_operator(&fine, &template.receivers)?;
    let solved: Vec<Result<(Vec<Complex64>, usize)>> = crate::par::map_range(template.transmitters.len(), |t| {
        let u_in = template.incident_on_grid(t, &fine)?;
        let trace = forward_solve(&f_fine, &u_in, &g, &h, &template.active[t], &gen_cfg)?;
        Ok((trace.z, trace.k_effective))
    });
    let mut measurements = template.clone();
    let mut forward_iterations = Vec::new();
    for (t, r) in solved.into_iter().enumerate() {
        let (z, k) = r?;
        measurements.y[t] = z;
        forward_iterations.push(k);
    }
    if let Some(snr) = cfg.noise_snr_db {
        add_noise(&mut measurements, snr, cfg.seed);
    }
    measurements.validate()?;
    Ok(Simulation { measurements, f_true, f_generation, forward_iterations })
}

/// Add circular complex Gaussian noise with total power
/// `||y||^2 10^(-snr/10)`, reproducible from `seed`.
pub fn add_noise(meas: &mut MeasurementSet, snr_db: f64, seed: u64) {
    let count = meas.measurement_count();
    if count == 0 {
        return;
    }
    let power = meas.norm_sqr() * 10f64.powf(-snr_db / 10.0);
    let sigma = (power / count as f64 / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in meas.y.iter_mut().flatten() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *v += Complex64::new(re, im) * sigma;
    }
}
