//! Tabular output: CSV or whitespace-delimited plot data.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use effortdyn_core::{RegionGrid, Trajectory};

use crate::error::{CliError, Result};
use crate::scenario::TableFormat;

/// Scientific notation with 17 significant digits; parses back bit-exactly.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// A header plus rows of preformatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn trajectory(traj: &Trajectory) -> Self {
        let rows = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(t, s)| [*t, s.x, s.y, s.effort].iter().map(|v| format_number(*v)).collect())
            .collect();
        Self {
            header: ["t", "x", "y", "E"].map(String::from).to_vec(),
            rows,
        }
    }

    pub fn region_grid(grid: &RegionGrid) -> Self {
        let rows = grid
            .cells()
            .map(|(c, d, region)| vec![format_number(c), format_number(d), region.to_string()])
            .collect();
        Self {
            header: ["c", "d", "region"].map(String::from).to_vec(),
            rows,
        }
    }
}

pub fn write_table<W: Write>(table: &Table, out: W, format: TableFormat) -> Result<()> {
    match format {
        TableFormat::Csv => {
            let mut writer = csv::Writer::from_writer(out);
            writer.write_record(&table.header)?;
            for row in &table.rows {
                writer.write_record(row)?;
            }
            writer.flush().map_err(csv::Error::from)?;
        }
        TableFormat::PlotData => {
            let mut out = out;
            let io = |e| CliError::io("<plot data>", e);
            writeln!(out, "# {}", table.header.join(" ")).map_err(io)?;
            for row in &table.rows {
                writeln!(out, "{}", row.join(" ")).map_err(io)?;
            }
            out.flush().map_err(io)?;
        }
    }
    Ok(())
}

pub fn emit_tabular(table: &Table, path: &Path, format: TableFormat) -> Result<()> {
    if table.rows.is_empty() {
        return Err(CliError::invalid(path.display().to_string(), "refusing to write an empty table"));
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_table(table, BufWriter::new(file), format).map_err(|e| match e {
        CliError::Io { source, .. } => CliError::io(path, source),
        other => other,
    })
}
