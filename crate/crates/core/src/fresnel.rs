//! Loader for single-frequency ASCII scattering datasets laid out one row
//! per (transmitter, receiver) pair:
//!
//! ```text
//! tx rx freq re(total) im(total) re(incident) im(incident)
//! ```
//!
//! Indices are 1-based angular slots on a common ring. Lines starting with
//! `#` and blank lines are skipped.

use crate::error::{Error, Result};
use crate::greens::green;
use crate::grid::{Point, SensorSet};
use crate::measurement::{MeasurementSet, Transmitter};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FresnelConfig {
    /// Rows at this frequency are kept.
    pub frequency_hz: f64,
    /// Matching tolerance on the frequency column.
    pub frequency_tolerance_hz: f64,
    /// Multiplier taking the frequency column to Hz.
    pub frequency_unit_hz: f64,
    pub ring_radius_m: f64,
    pub receiver_slots: usize,
}

impl Default for FresnelConfig {
    fn default() -> Self {
        FresnelConfig {
            frequency_hz: 3e9,
            frequency_tolerance_hz: 1e6,
            frequency_unit_hz: 1e9,
            ring_radius_m: 1.67,
            receiver_slots: 360,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FresnelData {
    pub measurements: MeasurementSet,
    /// Per transmitter, `||u_rec - alpha g||^2 / ||u_rec||^2` of the fitted
    /// incident model.
    pub calibration_residual: Vec<f64>,
}

struct Row {
    tx: usize,
    rx: usize,
    total: Complex64,
    incident: Complex64,
}

pub fn load_fresnel_ascii(path: &Path, cfg: &FresnelConfig) -> Result<FresnelData> {
    parse_fresnel(std::fs::File::open(path)?, cfg)
}

pub fn parse_fresnel<R: Read>(r: R, cfg: &FresnelConfig) -> Result<FresnelData> {
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Parse { line: n + 1, message };
        let fields: Vec<&str> = text.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        if fields.len() != 7 {
            return Err(bad(format!("expected 7 fields, found {}", fields.len())));
        }
        let num = |i: usize| fields[i].parse::<f64>().map_err(|e| bad(format!("field {}: {e}", i + 1)));
        let idx = |i: usize| -> Result<usize> {
            let v = num(i)?;
            if v < 1.0 || v.fract() != 0.0 {
                return Err(bad(format!("field {} is not a positive integer index", i + 1)));
            }
            Ok(v as usize)
        };
        let (tx, rx) = (idx(0)?, idx(1)?);
        if rx > cfg.receiver_slots {
            return Err(bad(format!("receiver {rx} beyond {} slots", cfg.receiver_slots)));
        }
        let freq = num(2)? * cfg.frequency_unit_hz;
        if (freq - cfg.frequency_hz).abs() > cfg.frequency_tolerance_hz {
            continue;
        }
        rows.push(Row { tx, rx, total: Complex64::new(num(3)?, num(4)?), incident: Complex64::new(num(5)?, num(6)?) });
    }
    if rows.is_empty() {
        return Err(Error::EmptySet(format!("no rows at {} Hz", cfg.frequency_hz)));
    }
    assemble(rows, cfg)
}

fn assemble(rows: Vec<Row>, cfg: &FresnelConfig) -> Result<FresnelData> {
    let slot = |i: usize, count: usize| TAU * (i - 1) as f64 / count as f64;
    let on_ring = |a: f64| -> Point { [cfg.ring_radius_m * a.cos(), cfg.ring_radius_m * a.sin(), 0.0] };
    let receivers = SensorSet::new((1..=cfg.receiver_slots).map(|i| on_ring(slot(i, cfg.receiver_slots))).collect())?;
    let tx_slots = rows.iter().map(|r| r.tx).max().unwrap_or(1);

    let mut by_tx: BTreeMap<usize, BTreeMap<usize, (Complex64, Complex64)>> = BTreeMap::new();
    for r in rows {
        by_tx.entry(r.tx).or_default().insert(r.rx, (r.total, r.incident));
    }
    let k_b = TAU * cfg.frequency_hz / crate::measurement::SPEED_OF_LIGHT;
    let mut transmitters = Vec::new();
    let mut active = Vec::new();
    let mut y = Vec::new();
    let mut residuals = Vec::new();
    for (tx, per_rx) in by_tx {
        let position = on_ring(slot(tx, tx_slots));
        let rx: Vec<usize> = per_rx.keys().map(|r| r - 1).collect();
        let model: Vec<Complex64> = rx
            .iter()
            .map(|&r| {
                let p = receivers.positions[r];
                green(2, &[p[0] - position[0], p[1] - position[1], 0.0], k_b)
            })
            .collect::<Result<_>>()?;
        let recorded: Vec<Complex64> = per_rx.values().map(|v| v.1).collect();
        let (alpha, residual) = fit_amplitude(&model, &recorded);
        transmitters.push(Transmitter::PointSource { position, amplitude: alpha });
        y.push(per_rx.values().map(|(t, i)| t - i).collect());
        active.push(rx);
        residuals.push(residual);
    }
    let measurements = MeasurementSet {
        frequency_hz: cfg.frequency_hz,
        background_permittivity: 1.0,
        transmitters,
        receivers,
        active,
        y,
    };
    measurements.validate()?;
    Ok(FresnelData { measurements, calibration_residual: residuals })
}

/// Least-squares `alpha` minimizing `||recorded - alpha model||`, with the
/// relative residual. A zero recorded field gives `alpha = 0`.
pub fn fit_amplitude(model: &[Complex64], recorded: &[Complex64]) -> (Complex64, f64) {
    let den: f64 = model.iter().map(|g| g.norm_sqr()).sum();
    let num: Complex64 = model.iter().zip(recorded).map(|(g, u)| g.conj() * u).sum();
    let alpha = if den > 0.0 { num / den } else { Complex64::new(0.0, 0.0) };
    let energy: f64 = recorded.iter().map(|u| u.norm_sqr()).sum();
    let err: f64 = model.iter().zip(recorded).map(|(g, u)| (u - alpha * g).norm_sqr()).sum();
    (alpha, if energy > 0.0 { err / energy } else { 0.0 })
}
