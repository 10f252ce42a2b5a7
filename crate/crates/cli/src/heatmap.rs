//! Binary PGM heatmaps of 2D node fields. The top image row is the largest
//! y coordinate; gray levels scale linearly from the field minimum (0) to
//! its maximum (255), and a constant field renders as 128.

use std::path::Path;

use sbary::Grid;

use crate::{write_file, CliError};

pub fn gray_levels(values: &[f64]) -> Vec<u8> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|v| {
            if span > 0.0 && span.is_finite() {
                (255.0 * (v - lo) / span).round() as u8
            } else {
                128
            }
        })
        .collect()
}

/// Node values in image order: row 0 holds the largest y.
fn image_rows(grid: &Grid, values: &[f64]) -> Vec<Vec<f64>> {
    let [nx, ny] = grid.shape();
    (0..ny)
        .rev()
        .map(|i1| (0..nx).map(|i0| values[grid.index(i0, i1)]).collect())
        .collect()
}

pub fn render_pgm(grid: &Grid, values: &[f64]) -> Result<Vec<u8>, CliError> {
    if grid.dim() != 2 || values.len() != grid.len() {
        return Err(CliError::Input(
            "heatmaps need one value per node of a 2D grid".into(),
        ));
    }
    let [nx, ny] = grid.shape();
    let flat: Vec<f64> = image_rows(grid, values).into_iter().flatten().collect();
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    out.extend(gray_levels(&flat));
    Ok(out)
}

/// Writes `<stem>.pgm` and `<stem>_grid.csv` (raw values laid out like the
/// image) into `dir`.
pub fn emit_heatmap(grid: &Grid, values: &[f64], dir: &Path, stem: &str) -> Result<(), CliError> {
    write_file(&dir.join(format!("{stem}.pgm")), render_pgm(grid, values)?)?;
    let csv: String = image_rows(grid, values)
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| format!("{v:e}"))
                .collect::<Vec<_>>()
                .join(",")
                + "\n"
        })
        .collect();
    write_file(&dir.join(format!("{stem}_grid.csv")), csv)
}
