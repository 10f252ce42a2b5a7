#![no_main]

use libfuzzer_sys::fuzz_target;
use sbary::io::{ingest_rows, parse_density_csv};
use sbary::Grid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(rows) = parse_density_csv(text) else {
        return;
    };
    let grid = if rows.first().is_some_and(|r| r.coords.len() == 2) {
        Grid::square(0.0, 1.0, 8).unwrap()
    } else {
        Grid::line(0.0, 1.0, 16).unwrap()
    };
    if let Ok(ingested) = ingest_rows(&rows, grid) {
        let m = ingested.measure;
        assert!(m.mass().iter().all(|v| *v >= 0.0 && v.is_finite()));
        assert!((m.total() - 1.0).abs() <= 1e-9);
    }
});
