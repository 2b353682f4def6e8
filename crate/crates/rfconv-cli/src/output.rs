use std::fs::File;
use std::path::Path;

use crate::error::CliError;

/// Round-trip exact rendering with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// One CSV cell.
pub enum Cell {
    F(f64),
    I(u64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::I(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Self::I(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::S(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Self::S(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::S(if v { "true" } else { "false" }.into())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::F(v) => fmt_f64(*v),
            Self::I(v) => v.to_string(),
            Self::S(s) => s.clone(),
        }
    }
}

/// Header plus rows, written in one go.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let shown = path.display().to_string();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
        let file = File::create(path).map_err(|source| CliError::Io {
            path: shown.clone(),
            source,
        })?;
        let csv_err = |source| CliError::Csv {
            path: shown.clone(),
            source,
        };
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))
                .map_err(csv_err)?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: shown.clone(),
            source,
        })?;
        Ok(())
    }
}

/// Read a CSV into its header and string records.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let shown = path.display().to_string();
    let csv_err = |source| CliError::Csv {
        path: shown.clone(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(csv_err)?.iter().map(str::to_owned).collect());
    }
    Ok((header, rows))
}
