//! Tab-separated tables and dense grid files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use acquire_core::sim::{ActionGrid, McAggregate, ScanRecord};
use anyhow::{Context, Result};

pub fn tsv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))
}

/// Writes a grid of per-cell values: a header line
/// `n_rows n_cols ra_min ra_max dec_min dec_max` (radians, cell centers)
/// followed by `n_rows` lines of `n_cols` values, row index increasing in dec.
pub fn write_grid(path: &Path, grid: &ActionGrid, values: &[f64]) -> Result<()> {
    anyhow::ensure!(values.len() == grid.len(), "grid has {} cells, got {} values", grid.len(), values.len());
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    let (ra_min, ra_max, dec_min, dec_max) = grid.extent();
    writeln!(w, "{} {} {ra_min} {ra_max} {dec_min} {dec_max}", grid.n_dec, grid.n_ra)?;
    for row in values.chunks(grid.n_ra) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a grid written by [`write_grid`]: (header fields, values).
pub fn read_grid(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let parse = |l: &str| l.split_whitespace().map(str::parse::<f64>).collect::<std::result::Result<Vec<_>, _>>();
    let header = parse(lines.next().context("empty grid file")?)?;
    let rows = lines.map(parse).collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

pub const SCAN_HEADER: [&str; 15] = [
    "scan",
    "epoch[s]",
    "action[index]",
    "pointing_ra[rad]",
    "pointing_dec[rad]",
    "measurements[count]",
    "target_returns[count]",
    "clutter_returns[count]",
    "dropped[count]",
    "divergence[nat]",
    "expected_cardinality[targets]",
    "map_cardinality[targets]",
    "cardinality_error[targets]",
    "components[count]",
    "false_tracks[count]",
];

pub fn write_scan_records(path: &Path, records: &[ScanRecord]) -> Result<()> {
    let mut w = tsv_writer(path)?;
    w.write_record(SCAN_HEADER)?;
    for r in records {
        w.write_record([
            r.scan.to_string(),
            r.epoch_s.to_string(),
            r.action.to_string(),
            r.pointing_ra.to_string(),
            r.pointing_dec.to_string(),
            r.n_measurements.to_string(),
            r.n_target_returns.to_string(),
            r.n_clutter_returns.to_string(),
            r.n_dropped.to_string(),
            r.divergence.to_string(),
            r.expected_cardinality.to_string(),
            r.map_cardinality.to_string(),
            r.cardinality_error.to_string(),
            r.components.to_string(),
            r.false_tracks.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const AGGREGATE_HEADER: [&str; 8] = [
    "policy",
    "scan",
    "divergence_q25[nat]",
    "divergence_median[nat]",
    "divergence_q75[nat]",
    "cardinality_error_q25[targets]",
    "cardinality_error_median[targets]",
    "cardinality_error_q75[targets]",
];

pub fn write_aggregate(path: &Path, agg: &McAggregate) -> Result<()> {
    let mut w = tsv_writer(path)?;
    w.write_record(AGGREGATE_HEADER)?;
    for p in &agg.policies {
        for (scan, (d, c)) in p.divergence.iter().zip(&p.cardinality_error).enumerate() {
            w.write_record([
                p.policy.label().to_string(),
                scan.to_string(),
                d.q25.to_string(),
                d.median.to_string(),
                d.q75.to_string(),
                c.q25.to_string(),
                c.median.to_string(),
                c.q75.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row of an aggregate table as read back by `report`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub policy: String,
    pub scan: usize,
    pub values: [f64; 6],
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    anyhow::ensure!(header == AGGREGATE_HEADER, "{} is not an aggregate table", path.display());
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let at = || format!("{} row {}", path.display(), line + 1);
        let mut values = [0.0; 6];
        for (k, v) in values.iter_mut().enumerate() {
            *v = rec[k + 2].parse().with_context(at)?;
        }
        rows.push(AggregateRow { policy: rec[0].to_string(), scan: rec[1].parse().with_context(at)?, values });
    }
    Ok(rows)
}
