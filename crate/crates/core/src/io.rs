//! Density files: a `x[,y],weight` CSV text format and the `SBGD1` binary
//! grid format.
//!
//! CSV rows are density samples. Each row snaps to the nearest node (it
//! must lie within half a cell on every axis) and its weight is multiplied
//! by the node's trapezoidal quadrature weight before normalization, so that
//! downstream integrals are plain dot products. [`write_density_csv`] emits
//! `mass / quadrature_weight`, which re-ingests to the same measure.
//!
//! The binary layout is little-endian:
//!
//! ```text
//! b"SBGD1" | dim: u32 | resolution: u32 × dim | lower: f64 × dim | upper: f64 × dim | mass: f64 × nodes
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};
use crate::measure::GridMeasure;

pub const MAGIC: &[u8; 5] = b"SBGD1";

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow {
    pub coords: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub measure: GridMeasure,
    /// Sum of row weights before quadrature folding and normalization.
    pub raw_total: f64,
}

/// Parses density CSV text. `#` starts a comment line; an optional header
/// row whose first field is not numeric is skipped. Every row must carry
/// the same number of fields (at least two).
pub fn parse_density_csv(text: &str) -> Result<Vec<DensityRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut width = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let fields: Vec<&str> = record.iter().collect();
        if rows.is_empty() && width.is_none() && fields[0].parse::<f64>().is_err() {
            // header
            width = Some(fields.len());
            continue;
        }
        let values = fields
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse(format!("record {}: {e}", line + 1)))?;
        if values.len() < 2 {
            return Err(Error::Parse(format!(
                "record {}: expected coordinates and a weight",
                line + 1
            )));
        }
        match width {
            Some(w) if w != values.len() => {
                return Err(Error::Parse(format!(
                    "record {}: {} fields, expected {w}",
                    line + 1,
                    values.len()
                )))
            }
            _ => width = Some(values.len()),
        }
        let weight = values[values.len() - 1];
        rows.push(DensityRow {
            coords: values[..values.len() - 1].to_vec(),
            weight,
        });
    }
    Ok(rows)
}

/// Snaps rows onto `grid`, folds in quadrature weights and normalizes.
pub fn ingest_rows(rows: &[DensityRow], grid: Grid) -> Result<Ingested> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut acc = vec![0.0; grid.len()];
    let mut raw_total = 0.0;
    for (row, r) in rows.iter().enumerate() {
        if r.coords.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} coordinates", grid.dim()),
                got: format!("{} in row {row}", r.coords.len()),
            });
        }
        if !r.weight.is_finite() || r.weight < 0.0 {
            return Err(Error::NegativeMass {
                row,
                weight: r.weight,
            });
        }
        let mut p: Point = [0.0; 2];
        p[..r.coords.len()].copy_from_slice(&r.coords);
        let j = grid.snap(&p).ok_or_else(|| Error::OffGridSample {
            row,
            coords: r.coords.clone(),
        })?;
        acc[j] += r.weight * grid.quadrature_weight(j);
        raw_total += r.weight;
    }
    let measure = GridMeasure::normalized(grid, acc)?;
    Ok(Ingested { measure, raw_total })
}

/// Reads and ingests a density CSV file.
pub fn ingest_density(path: &Path, grid: Grid) -> Result<Ingested> {
    let text = fs::read_to_string(path)?;
    ingest_rows(&parse_density_csv(&text)?, grid)
}

/// Writes one row per node with `mass / quadrature_weight` as the weight.
pub fn write_density_csv(path: &Path, measure: &GridMeasure) -> Result<()> {
    let grid = measure.grid();
    let values: Vec<f64> = measure
        .mass()
        .iter()
        .enumerate()
        .map(|(j, m)| m / grid.quadrature_weight(j))
        .collect();
    write_node_csv(path, grid, &values, "weight")
}

/// Writes raw node values (`x[,y],<column>`), e.g. potentials.
pub fn write_node_csv(path: &Path, grid: &Grid, values: &[f64], column: &str) -> Result<()> {
    let mut out = String::new();
    let axes = if grid.dim() == 1 { "x" } else { "x,y" };
    out.push_str(&format!("{axes},{column}\n"));
    for (j, v) in values.iter().enumerate() {
        let p = grid.point(j);
        if grid.dim() == 1 {
            out.push_str(&format!("{:e},{:e}\n", p[0], v));
        } else {
            out.push_str(&format!("{:e},{:e},{:e}\n", p[0], p[1], v));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn encode_binary(measure: &GridMeasure) -> Vec<u8> {
    let grid = measure.grid();
    let mut buf = Vec::with_capacity(9 + 20 * grid.dim() + 8 * grid.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for &n in grid.resolution() {
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &v in grid.lower().iter().chain(grid.upper()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for &m in measure.mass() {
        buf.extend_from_slice(&m.to_le_bytes());
    }
    buf
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| Error::Parse("truncated binary grid".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Decodes an `SBGD1` buffer into a validated measure.
pub fn decode_binary(data: &[u8]) -> Result<GridMeasure> {
    let mut cur = Cursor { data, pos: 0 };
    if cur.take(MAGIC.len())? != MAGIC {
        return Err(Error::Parse("bad magic, expected SBGD1".into()));
    }
    let dim = cur.u32()? as usize;
    if !(1..=2).contains(&dim) {
        return Err(Error::Parse(format!("unsupported dimension {dim}")));
    }
    let mut resolution = Vec::with_capacity(dim);
    for _ in 0..dim {
        resolution.push(cur.u32()? as usize);
    }
    let mut bounds = Vec::with_capacity(2 * dim);
    for _ in 0..2 * dim {
        bounds.push(cur.f64()?);
    }
    let grid = Grid::new(&bounds[..dim], &bounds[dim..], &resolution)?;
    let remaining = data.len() - cur.pos;
    if remaining != 8 * grid.len() {
        return Err(Error::Parse(format!(
            "expected {} mass bytes, found {remaining}",
            8 * grid.len()
        )));
    }
    let mass = (0..grid.len())
        .map(|_| cur.f64())
        .collect::<Result<Vec<_>>>()?;
    GridMeasure::new(grid, mass)
}

pub fn write_binary(path: &Path, measure: &GridMeasure) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_binary(measure))?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<GridMeasure> {
    decode_binary(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::gaussian_on_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_line(n: usize) -> Grid {
        Grid::line(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn single_row_is_a_dirac() {
        let rows = parse_density_csv("0.5,1.0\n").unwrap();
        let got = ingest_rows(&rows, unit_line(11)).unwrap();
        assert_eq!(got.measure.mass()[5], 1.0);
        assert_eq!(got.raw_total, 1.0);
    }

    #[test]
    fn endpoint_rows_normalize_evenly() {
        let rows = parse_density_csv("# two endpoints\nx,weight\n0.0, 2.0\n1.0, 2.0\n").unwrap();
        let got = ingest_rows(&rows, unit_line(11)).unwrap();
        let m = got.measure.mass();
        assert_eq!(m[0], 0.5);
        assert_eq!(m[10], 0.5);
        assert_eq!(got.raw_total, 4.0);
    }

    #[test]
    fn binned_gaussian_samples_keep_their_mean() {
        let grid = unit_line(101);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<f64> = (0..5000)
            .map(|_| {
                // Box-Muller
                let u: f64 = rng.gen_range(1e-12..1.0);
                let v: f64 = rng.gen();
                0.45 + 0.08 * (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
            })
            .filter(|x| (0.0..=1.0).contains(x))
            .collect();
        let sample_mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let rows: Vec<DensityRow> = samples
            .iter()
            .map(|&x| DensityRow {
                coords: vec![x],
                weight: 1.0,
            })
            .collect();
        let got = ingest_rows(&rows, grid).unwrap();
        assert!((got.measure.mean()[0] - sample_mean).abs() < 3.0 * grid.h());
    }

    #[test]
    fn ingestion_errors() {
        let g = unit_line(11);
        assert!(matches!(ingest_rows(&[], g), Err(Error::EmptyInput)));
        let off = parse_density_csv("1.2,1.0").unwrap();
        assert!(matches!(
            ingest_rows(&off, g),
            Err(Error::OffGridSample { row: 0, .. })
        ));
        let neg = parse_density_csv("0.1,1.0\n0.2,-1.0").unwrap();
        assert!(matches!(
            ingest_rows(&neg, g),
            Err(Error::NegativeMass { row: 1, .. })
        ));
        let zero = parse_density_csv("0.1,0.0").unwrap();
        assert!(matches!(ingest_rows(&zero, g), Err(Error::EmptyInput)));
        assert!(parse_density_csv("0.1,abc").is_err());
        assert!(parse_density_csv("0.1,1.0\n0.1,0.2,0.3").is_err());
    }

    #[test]
    fn two_dimensional_rows() {
        let g = Grid::square(0.0, 1.0, 5).unwrap();
        let rows = parse_density_csv("x,y,weight\n0.5,0.25,3\n").unwrap();
        let got = ingest_rows(&rows, g).unwrap();
        assert_eq!(got.measure.mass()[g.index(2, 1)], 1.0);
        let bad = parse_density_csv("0.5,1\n").unwrap();
        assert!(matches!(
            ingest_rows(&bad, g),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let g = Grid::new(&[0.0, -1.0], &[1.0, 2.0], &[7, 5]).unwrap();
        let mu = gaussian_on_grid(g, &[0.4, 0.3], 0.3).unwrap();
        let back = decode_binary(&encode_binary(&mu)).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn binary_rejects_corruption() {
        let mu = gaussian_on_grid(unit_line(9), &[0.5], 0.2).unwrap();
        let bytes = encode_binary(&mu);
        assert!(decode_binary(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_binary(&bad).is_err());
        let mut huge = bytes.clone();
        huge[9..13].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_binary(&huge).is_err());
        assert!(decode_binary(b"").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let g = Grid::square(-1.0, 1.0, 9).unwrap();
        let mu = gaussian_on_grid(g, &[0.2, -0.1], 0.4).unwrap();
        write_density_csv(&path, &mu).unwrap();
        let back = ingest_density(&path, g).unwrap().measure;
        for (a, b) in back.mass().iter().zip(mu.mass()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
