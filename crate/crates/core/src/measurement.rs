//! Illumination geometry and measured scattered fields, plus the native
//! on-disk format: one JSON header line followed by `tx,rx,re,im` rows.

use crate::error::{Error, Result};
use crate::greens::green;
use crate::grid::{distance, DomainGrid, Point, SensorSet};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transmitter {
    /// Outgoing wave `amplitude * g(x - position)`.
    PointSource {
        position: Point,
        #[serde(default = "unit")]
        amplitude: Complex64,
    },
    /// `amplitude * exp(j k_b d . x)` for a unit `direction`.
    PlaneWave {
        direction: Point,
        #[serde(default = "unit")]
        amplitude: Complex64,
    },
}

fn unit() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl Transmitter {
    pub fn field_at(&self, x: &Point, dim: usize, k_b: f64) -> Result<Complex64> {
        match self {
            Transmitter::PointSource { position, amplitude } => {
                let r = [x[0] - position[0], x[1] - position[1], x[2] - position[2]];
                Ok(amplitude * green(dim, &r, k_b)?)
            }
            Transmitter::PlaneWave { direction, amplitude } => {
                let phase = k_b * (0..3).map(|i| direction[i] * x[i]).sum::<f64>();
                Ok(amplitude * Complex64::from_polar(1.0, phase))
            }
        }
    }

    pub fn field_on(&self, points: &[Point], dim: usize, k_b: f64) -> Result<Vec<Complex64>> {
        points.iter().map(|p| self.field_at(p, dim, k_b)).collect()
    }

    pub fn with_amplitude(&self, a: Complex64) -> Self {
        match self {
            Transmitter::PointSource { position, .. } => Transmitter::PointSource { position: *position, amplitude: a },
            Transmitter::PlaneWave { direction, .. } => Transmitter::PlaneWave { direction: *direction, amplitude: a },
        }
    }
}

/// Transmitters, the shared receiver positions, which receivers are active
/// for each transmitter, and the scattered field recorded at those.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub frequency_hz: f64,
    pub background_permittivity: f64,
    pub transmitters: Vec<Transmitter>,
    pub receivers: SensorSet,
    pub active: Vec<Vec<usize>>,
    pub y: Vec<Vec<Complex64>>,
}

impl MeasurementSet {
    pub fn validate(&self) -> Result<()> {
        let t = self.transmitters.len();
        if t == 0 {
            return Err(Error::EmptySet("measurement set has no transmitters".into()));
        }
        if self.active.len() != t {
            return Err(Error::Dimension { expected: t, got: self.active.len() });
        }
        if self.y.len() != t {
            return Err(Error::Dimension { expected: t, got: self.y.len() });
        }
        for (rows, y) in self.active.iter().zip(&self.y) {
            if rows.len() != y.len() {
                return Err(Error::Dimension { expected: rows.len(), got: y.len() });
            }
            if let Some(&bad) = rows.iter().find(|&&r| r >= self.receivers.len()) {
                return Err(Error::Dimension { expected: self.receivers.len(), got: bad + 1 });
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("measured field".into()));
            }
        }
        if !(self.frequency_hz > 0.0 && self.background_permittivity > 0.0) {
            return Err(Error::Config("frequency and background permittivity must be positive".into()));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn background_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength() * self.background_permittivity.sqrt()
    }

    /// `sum_t ||y_t||^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.y.iter().flatten().map(|v| v.norm_sqr()).sum()
    }

    pub fn measurement_count(&self) -> usize {
        self.y.iter().map(Vec::len).sum()
    }

    /// Incident field on the grid for transmitter `t`.
    pub fn incident_on_grid(&self, t: usize, grid: &DomainGrid) -> Result<Vec<Complex64>> {
        self.transmitters[t].field_on(&grid.positions(), grid.ndim(), grid.background_wavenumber())
    }

    /// Incident field at the active receivers of transmitter `t`.
    pub fn incident_at_receivers(&self, t: usize, dim: usize) -> Result<Vec<Complex64>> {
        let pts: Vec<Point> = self.active[t].iter().map(|&r| self.receivers.positions[r]).collect();
        self.transmitters[t].field_on(&pts, dim, self.background_wavenumber())
    }

    /// Keep only transmitters whose index is listed.
    pub fn select_transmitters(&self, keep: &[usize]) -> Self {
        MeasurementSet {
            transmitters: keep.iter().map(|&t| self.transmitters[t].clone()).collect(),
            active: keep.iter().map(|&t| self.active[t].clone()).collect(),
            y: keep.iter().map(|&t| self.y[t].clone()).collect(),
            ..self.clone()
        }
    }

    /// Regular decimation of every transmitter's active receivers: keeps
    /// list positions `i` with `i % factor == 1 % factor`. Nested for factors
    /// that divide each other.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Parameter("subsampling factor must be at least 1".into()));
        }
        let mut out = self.clone();
        for (rows, y) in out.active.iter_mut().zip(out.y.iter_mut()) {
            let keep: Vec<usize> = (0..rows.len()).filter(|i| i % factor == 1 % factor).collect();
            *rows = keep.iter().map(|&i| rows[i]).collect();
            *y = keep.iter().map(|&i| y[i]).collect();
        }
        Ok(out)
    }

    /// Smallest receiver-to-point distance; a sanity check for geometry.
    pub fn min_receiver_distance(&self, p: &Point) -> f64 {
        self.receivers.positions.iter().map(|r| distance(r, p)).fold(f64::INFINITY, f64::min)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            frequency_hz: self.frequency_hz,
            background_permittivity: self.background_permittivity,
            transmitters: self.transmitters.clone(),
            receiver_positions_m: self.receivers.positions.clone(),
        };
        writeln!(w, "{}", serde_json::to_string(&header)?)?;
        writeln!(w, "tx,rx,re,im")?;
        for (t, (rows, y)) in self.active.iter().zip(&self.y).enumerate() {
            for (r, v) in rows.iter().zip(y) {
                writeln!(w, "{t},{r},{:.16e},{:.16e}", v.re, v.im)?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let first = lines.next().ok_or_else(|| Error::Parse { line: 1, message: "empty file".into() })??;
        let header: Header =
            serde_json::from_str(&first).map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
        let t = header.transmitters.len();
        let mut active = vec![Vec::new(); t];
        let mut y = vec![Vec::new(); t];
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if lineno == 2 || line.trim().is_empty() {
                continue;
            }
            let parse_err = |m: &str| Error::Parse { line: lineno, message: m.to_string() };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(parse_err("expected 4 columns"));
            }
            let tx: usize = cols[0].parse().map_err(|_| parse_err("bad transmitter index"))?;
            let rx: usize = cols[1].parse().map_err(|_| parse_err("bad receiver index"))?;
            let re: f64 = cols[2].parse().map_err(|_| parse_err("bad real part"))?;
            let im: f64 = cols[3].parse().map_err(|_| parse_err("bad imaginary part"))?;
            if tx >= t {
                return Err(parse_err("transmitter index out of range"));
            }
            active[tx].push(rx);
            y[tx].push(Complex64::new(re, im));
        }
        let set = MeasurementSet {
            frequency_hz: header.frequency_hz,
            background_permittivity: header.background_permittivity,
            transmitters: header.transmitters,
            receivers: SensorSet::new(header.receiver_positions_m)?,
            active,
            y,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    frequency_hz: f64,
    background_permittivity: f64,
    transmitters: Vec<Transmitter>,
    receiver_positions_m: Vec<Point>,
}

/// Transmitters at evenly spaced angles on a circle, as point sources.
pub fn point_sources_on_ring(center: Point, radius: f64, count: usize, start_angle: f64) -> Vec<Transmitter> {
    (0..count)
        .map(|i| {
            let a = start_angle + 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            Transmitter::PointSource {
                position: [center[0] + radius * a.cos(), center[1] + radius * a.sin(), center[2]],
                amplitude: unit(),
            }
        })
        .collect()
}
