//! CSV tables with fixed column schemas.
//!
//! | analysis         | columns                                |
//! |------------------|----------------------------------------|
//! | decay            | `t, norm, log_t, log_norm`             |
//! | resolvent        | `s, norm` (empty norm on the spectrum) |
//! | datko            | `id, value, error, tail`               |
//! | weak-datko       | `id, value, error, tail`               |
//! | lyapunov         | `beta, weighted_norm, residual_weighted` |
//! | observability    | `link, pass, value, bound`             |
//! | thm42            | `link, pass, value, bound`             |

use std::path::Path;

use crate::CliError;

pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row<const N: usize>(&mut self, values: [f64; N]) {
        self.raw(values.iter().map(f64::to_string).collect());
    }

    pub fn row_opt(&mut self, x: f64, y: Option<f64>) {
        self.raw(vec![x.to_string(), y.map(|v| v.to_string()).unwrap_or_default()]);
    }

    pub fn row_id<const N: usize>(&mut self, id: &str, values: [f64; N]) {
        let mut row = vec![id.to_string()];
        row.extend(values.iter().map(f64::to_string));
        self.raw(row);
    }

    pub fn raw(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn write_csv(path: &Path, table: &Csv) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Internal(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}
