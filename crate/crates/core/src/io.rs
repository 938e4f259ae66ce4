//! Result emission: CSV tables with a commented header, and 16-bit PGM
//! images with a sidecar recording the display window.

use crate::error::{Error, Result};
use crate::grid::DomainGrid;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// A numeric table. `comments` are emitted as `# ` lines before the column
/// names and typically carry units and the grid description.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable { comments: Vec::new(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        crate::error::check_len(self.columns.len(), row.len())?;
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let c = self
            .columns
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Config(format!("no column named {name}")))?;
        Ok(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for c in &self.comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn read<R: std::io::Read>(r: R) -> Result<Self> {
        let mut table = CsvTable { comments: Vec::new(), columns: Vec::new(), rows: Vec::new() };
        for (n, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            let line_no = n + 1;
            if let Some(c) = line.strip_prefix('#') {
                table.comments.push(c.trim_start().to_string());
            } else if line.trim().is_empty() {
                continue;
            } else if table.columns.is_empty() {
                table.columns = line.split(',').map(|s| s.trim().to_string()).collect();
            } else {
                let row = line
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
                if row.len() != table.columns.len() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {} fields, found {}", table.columns.len(), row.len()),
                    });
                }
                table.rows.push(row);
            }
        }
        if table.columns.is_empty() {
            return Err(Error::Parse { line: 0, message: "missing column header".into() });
        }
        Ok(table)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn emit_csv(table: &CsvTable, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    table.write(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_csv(path: &Path) -> Result<CsvTable> {
    CsvTable::read(File::open(path)?)
}

/// One-line description of a grid for CSV headers.
pub fn grid_comment(grid: &DomainGrid) -> String {
    format!(
        "grid dims={:?} spacing_m={} origin_m={:?} wavelength_m={} background_permittivity={}",
        grid.dims, grid.spacing, grid.origin, grid.wavelength, grid.background_permittivity
    )
}

/// Image as a table of pixel centers and values.
pub fn image_table(f: &[f64], grid: &DomainGrid, value_name: &str, units: &str) -> Result<CsvTable> {
    crate::error::check_len(grid.len(), f.len())?;
    let axes = ["x_m", "y_m", "z_m"];
    let mut cols: Vec<&str> = axes[..grid.ndim()].to_vec();
    cols.push(value_name);
    let mut t = CsvTable::new(&cols).comment(grid_comment(grid)).comment(format!("{value_name} in {units}"));
    for (i, v) in f.iter().enumerate() {
        let p = grid.position(i);
        let mut row = p[..grid.ndim()].to_vec();
        row.push(*v);
        t.push(row)?;
    }
    Ok(t)
}

/// Display window of an emitted image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub min: f64,
    pub max: f64,
}

/// Map values to 16-bit gray levels over `[min, max]`. A zero-width window
/// maps everything to mid-gray.
pub fn gray_levels(f: &[f64]) -> (Vec<u16>, Window) {
    let min = f.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let levels = f
        .iter()
        .map(|v| {
            if !(range > 0.0) || !range.is_finite() {
                32768
            } else {
                ((v - min) / range * 65535.0).round().clamp(0.0, 65535.0) as u16
            }
        })
        .collect();
    (levels, Window { min, max })
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".window.txt");
    PathBuf::from(s)
}

/// Write a 2D image as a binary 16-bit PGM, x along columns and y upward,
/// plus `<path>.window.txt` holding the window bounds.
pub fn emit_pgm(f: &[f64], grid: &DomainGrid, path: &Path) -> Result<Window> {
    crate::error::check_len(grid.len(), f.len())?;
    if grid.ndim() != 2 {
        return Err(Error::Dimension { expected: 2, got: grid.ndim() });
    }
    let (nx, ny) = (grid.dims[0], grid.dims[1]);
    let (levels, window) = gray_levels(f);
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{nx} {ny}\n65535\n")?;
    for row in 0..ny {
        let j = ny - 1 - row;
        for i in 0..nx {
            w.write_all(&levels[i * ny + j].to_be_bytes())?;
        }
    }
    w.flush()?;
    std::fs::write(
        sidecar_path(path),
        format!("min {}\nmax {}\n", format_float(window.min), format_float(window.max)),
    )?;
    Ok(window)
}

/// Read back a PGM written by `emit_pgm`: `(width, height, levels)` in file
/// order.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let bytes = std::fs::read(path)?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse { line: 0, message: "truncated PGM header".into() });
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    let bad = |m: &str| Error::Parse { line: 0, message: m.into() };
    if fields[0] != "P5" {
        return Err(bad("not a binary PGM"));
    }
    let w: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let h: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let data = &bytes[pos + 1..];
    if data.len() != 2 * w * h {
        return Err(bad("pixel data length mismatch"));
    }
    Ok((w, h, data.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = CsvTable::new(&["a", "b"]).comment("units: a in m");
        let vals = [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, -0.0];
        for w in vals.windows(2) {
            t.push(w.to_vec()).unwrap();
        }
        emit_csv(&t, &path).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(back, t);
        for (r, s) in back.rows.iter().zip(&t.rows) {
            for (x, y) in r.iter().zip(s) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn malformed_csv_reports_line() {
        let text = "# c\na,b\n1,2\n3,x\n";
        match CsvTable::read(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(CsvTable::read("a,b\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn constant_image_is_mid_gray() {
        let (levels, w) = gray_levels(&[2.0; 9]);
        assert!(levels.iter().all(|&v| v == 32768));
        assert_eq!(w, Window { min: 2.0, max: 2.0 });
        let (levels, _) = gray_levels(&[0.0, 0.5, 1.0]);
        assert_eq!(levels, vec![0, 32768, 65535]);
    }

    #[test]
    fn pgm_layout_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let grid = DomainGrid::centered(vec![3, 2], 1.0, 1.0, 1.0).unwrap();
        // f[i * 2 + j] with x index i and y index j.
        let f = [0.0, 5.0, 1.0, 2.0, 3.0, 4.0];
        let path = dir.path().join("img.pgm");
        emit_pgm(&f, &grid, &path).unwrap();
        let (w, h, levels) = read_pgm(&path).unwrap();
        assert_eq!((w, h), (3, 2));
        // Top row is the largest y.
        assert_eq!(levels[0], 65535);
        assert_eq!(levels[3], 0);
        let side = std::fs::read_to_string(sidecar_path(&path)).unwrap();
        assert!(side.starts_with("min 0.0") && side.contains("max 5.0"));
    }

    #[test]
    fn image_table_carries_grid_header() {
        let grid = DomainGrid::centered(vec![2, 2], 0.5, 1.0, 1.0).unwrap();
        let t = image_table(&[1.0, 2.0, 3.0, 4.0], &grid, "f", "1/m^2").unwrap();
        assert_eq!(t.columns, vec!["x_m", "y_m", "f"]);
        assert!(t.comments[0].contains("spacing_m=0.5"));
        assert_eq!(t.column("f").unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }
}
