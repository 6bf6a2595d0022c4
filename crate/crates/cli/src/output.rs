use std::io::Write;
use std::path::Path;

use natmap_core::io::{ensure_finite, SCHEMA_VERSION};
use natmap_core::natural_map::SliceSummary;
use natmap_core::volume::CellRecord;
use natmap_core::Result;
use serde::Serialize;

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "natmap-core")]
    core: &'static str,
    #[serde(rename = "natmap-cli")]
    cli: &'static str,
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, T: Serialize> {
    v: &'static str,
    command: &'a str,
    seed: u64,
    versions: Versions,
    config: &'a C,
    result: &'a T,
}

/// Pretty JSON report; fails if any number came out non-finite.
pub fn report_json<C: Serialize, T: Serialize>(command: &str, seed: u64, config: &C, result: &T) -> Result<String> {
    let env = Envelope {
        v: SCHEMA_VERSION,
        command,
        seed,
        versions: Versions { core: natmap_core::VERSION, cli: env!("CARGO_PKG_VERSION") },
        config,
        result,
    };
    let value = serde_json::to_value(&env)?;
    ensure_finite(&value)?;
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(())
}

fn check_row(values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(natmap_core::Error::NonFinite(format!("csv value {v}")));
    }
    Ok(())
}

fn coord_headers(prefix: &str, len: usize) -> Vec<String> {
    (0..len).map(|i| format!("{prefix}{i}")).collect()
}

/// Flattens `[cell][x]` summaries; failed evaluations are left out.
pub fn scan_records(cells: &[Vec<f64>], rows: &[Vec<Option<SliceSummary>>]) -> Vec<CellRecord> {
    rows.iter()
        .enumerate()
        .flat_map(|(c, per_x)| {
            per_x.iter().enumerate().filter_map(move |(x, s)| {
                s.as_ref().map(|s| CellRecord {
                    cell: c,
                    a: cells[c].clone(),
                    x,
                    jacobian: s.jacobian,
                    sv_min: s.sv_min,
                    sv_max: s.sv_max,
                    residual: s.residual,
                })
            })
        })
        .collect()
}

/// Columns `v, cell, a0.., x, jacobian, sv_min, sv_max, residual`.
pub fn cells_csv(records: &[CellRecord]) -> Result<String> {
    let dim = records.first().map(|r| r.a.len()).unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["v".to_string(), "cell".to_string()];
    header.extend(coord_headers("a", dim));
    header.extend(["x", "jacobian", "sv_min", "sv_max", "residual"].map(String::from));
    w.write_record(&header).map_err(std::io::Error::from)?;
    for r in records {
        let nums: Vec<f64> = r.a.iter().chain([r.jacobian, r.sv_min, r.sv_max, r.residual].iter()).cloned().collect();
        check_row(&nums)?;
        let mut row = vec![SCHEMA_VERSION.to_string(), r.cell.to_string()];
        row.extend(r.a.iter().map(|v| format!("{v:e}")));
        row.push(r.x.to_string());
        row.extend([r.jacobian, r.sv_min, r.sv_max, r.residual].iter().map(|v| format!("{v:e}")));
        w.write_record(&row).map_err(std::io::Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
