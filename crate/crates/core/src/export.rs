//! CSV and JSON writers. Every CSV starts with a `# config: {...}` line
//! carrying the resolved configuration; read them back with `#` as the
//! comment character.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{param, Result};
use crate::spectral::ResponseGrid;

/// Extra per-frequency column appended to a grid CSV.
pub struct Column<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

fn open_with_header(path: &Path, config: &serde_json::Value) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# config: {}", serde_json::to_string(config)?)?;
    Ok(file)
}

/// `index,value` rows. Values are written in shortest round-trip form.
pub fn write_coefficients_csv(
    path: &Path,
    values: &[f64],
    config: &serde_json::Value,
) -> Result<()> {
    let file = open_with_header(path, config)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["index", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `freq,re,im,magnitude,magnitude_dB,in_band` plus any extra columns.
pub fn write_grid_csv(
    path: &Path,
    grid: &ResponseGrid,
    extra: &[Column<'_>],
    config: &serde_json::Value,
) -> Result<()> {
    let n = grid.freqs.len();
    if let Some(c) = extra.iter().find(|c| c.values.len() != n) {
        return param(format!(
            "column '{}' has {} values, grid has {n}",
            c.name,
            c.values.len()
        ));
    }
    let file = open_with_header(path, config)?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["freq", "re", "im", "magnitude", "magnitude_dB", "in_band"];
    header.extend(extra.iter().map(|c| c.name));
    w.write_record(&header)?;
    let db = grid.magnitude_db();
    for i in 0..n {
        let mut row = vec![
            grid.freqs[i].to_string(),
            grid.values[i].re.to_string(),
            grid.values[i].im.to_string(),
            grid.magnitude[i].to_string(),
            db[i].to_string(),
            u8::from(grid.in_band[i]).to_string(),
        ];
        row.extend(extra.iter().map(|c| c.values[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Generic table with a config header line.
pub fn write_table_csv(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
    config: &serde_json::Value,
) -> Result<()> {
    let file = open_with_header(path, config)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

/// Reads back an `index,value` CSV written by [`write_coefficients_csv`].
pub fn read_coefficients_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v = rec
            .get(1)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| crate::Error::Parameter(format!("bad row {:?}", rec)))?;
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{GcfSpec, OPTIMAL_Q};
    use crate::spectral::{folding_bands, response_grid};
    use crate::GcfDesign;

    #[test]
    fn coefficients_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let values = [2.998_496_123_456_789, -0.1, 1e-300, 3.0];
        write_coefficients_csv(&path, &values, &serde_json::json!({"d": 16})).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config: {\"d\":16}\nindex,value\n"));
        assert_eq!(read_coefficients_csv(&path).unwrap(), values);
    }

    #[test]
    fn grid_has_extra_columns() {
        let design = GcfDesign::new(GcfSpec::from_rho(16, -1, OPTIMAL_Q, 64.0).unwrap()).unwrap();
        let bands = folding_bands(16, 1.0 / 128.0).unwrap();
        let grid = response_grid(&design, &bands, 9, 32).unwrap();
        let s: Vec<f64> = vec![1.0; grid.freqs.len()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let cols = [Column { name: "s_t", values: &s }];
        write_grid_csv(&path, &grid, &cols, &serde_json::json!({})).unwrap();
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(&path)
            .unwrap();
        let h = r.headers().unwrap().clone();
        assert_eq!(
            h.iter().collect::<Vec<_>>(),
            ["freq", "re", "im", "magnitude", "magnitude_dB", "in_band", "s_t"]
        );
        assert_eq!(r.records().count(), grid.freqs.len());

        let short = [Column { name: "bad", values: &s[..3] }];
        assert!(write_grid_csv(&path, &grid, &short, &serde_json::json!({})).is_err());
    }
}
