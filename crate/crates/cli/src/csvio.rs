//! Seed/target fixture files: plain CSV with the fixed header
//! `id,x,y[,z][,w][,m][,attr]`. Optional columns may be omitted but the
//! order is fixed; anything else is rejected.

use std::collections::HashSet;
use std::path::Path;

use crate::CliError;

#[derive(Debug)]
pub struct CsvTable {
    pub ids: Vec<u64>,
    /// Row-major coordinates, `dim` per row.
    pub positions: Vec<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub masses: Option<Vec<f64>>,
    pub attrs: Option<Vec<String>>,
    pub dim: usize,
}

impl CsvTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Positions as fixed-size arrays; the file's dimension must match the
    /// domain's.
    pub fn positions_as<const D: usize>(&self) -> Result<Vec<[f64; D]>, CliError> {
        if self.dim != D {
            return Err(CliError::Config(format!(
                "file has {}-dimensional rows but the domain is {D}-dimensional",
                self.dim
            )));
        }
        Ok(self
            .positions
            .iter()
            .map(|p| {
                let mut a = [0.0; D];
                a.copy_from_slice(p);
                a
            })
            .collect())
    }
}

pub fn read_table(path: &Path) -> Result<CsvTable, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| bad(path, e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let layout = Layout::from_headers(&headers).map_err(|msg| bad(path, msg))?;

    let mut table = CsvTable {
        ids: Vec::new(),
        positions: Vec::new(),
        weights: layout.has_w.then(Vec::new),
        masses: layout.has_m.then(Vec::new),
        attrs: layout.has_attr.then(Vec::new),
        dim: layout.dim,
    };
    let mut seen = HashSet::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(path, e.to_string()))?;
        if record.len() != layout.columns() {
            return Err(bad(
                path,
                format!("row {}: expected {} fields", row + 2, layout.columns()),
            ));
        }
        let mut fields = record.iter();
        let id: u64 = parse(path, row, "id", fields.next().unwrap())?;
        if !seen.insert(id) {
            return Err(bad(path, format!("duplicate id {id}")));
        }
        table.ids.push(id);
        let mut p = Vec::with_capacity(layout.dim);
        for axis in ["x", "y", "z"].iter().take(layout.dim) {
            p.push(parse_finite(path, row, axis, fields.next().unwrap())?);
        }
        table.positions.push(p);
        if let Some(w) = &mut table.weights {
            w.push(parse_finite(path, row, "w", fields.next().unwrap())?);
        }
        if let Some(m) = &mut table.masses {
            m.push(parse_finite(path, row, "m", fields.next().unwrap())?);
        }
        if let Some(a) = &mut table.attrs {
            a.push(fields.next().unwrap().to_string());
        }
    }
    if table.is_empty() {
        return Err(bad(path, "no data rows".to_string()));
    }
    Ok(table)
}

struct Layout {
    dim: usize,
    has_w: bool,
    has_m: bool,
    has_attr: bool,
}

impl Layout {
    fn columns(&self) -> usize {
        1 + self.dim + usize::from(self.has_w) + usize::from(self.has_m) + usize::from(self.has_attr)
    }

    fn from_headers(headers: &[String]) -> Result<Self, String> {
        let mut rest = headers.iter().map(String::as_str).peekable();
        for expected in ["id", "x", "y"] {
            if rest.next() != Some(expected) {
                return Err(format!(
                    "header must start with id,x,y (got {})",
                    headers.join(",")
                ));
            }
        }
        let dim = if rest.peek() == Some(&"z") {
            rest.next();
            3
        } else {
            2
        };
        let has_w = rest.peek() == Some(&"w");
        if has_w {
            rest.next();
        }
        let has_m = rest.peek() == Some(&"m");
        if has_m {
            rest.next();
        }
        let has_attr = rest.peek() == Some(&"attr");
        if has_attr {
            rest.next();
        }
        if let Some(extra) = rest.next() {
            return Err(format!(
                "unexpected column {extra:?}; header is id,x,y[,z][,w][,m][,attr]"
            ));
        }
        Ok(Layout {
            dim,
            has_w,
            has_m,
            has_attr,
        })
    }
}

fn parse<T: std::str::FromStr>(
    path: &Path,
    row: usize,
    field: &str,
    text: &str,
) -> Result<T, CliError> {
    text.parse().map_err(|_| {
        bad(
            path,
            format!("row {}: bad value {text:?} for {field}", row + 2),
        )
    })
}

fn parse_finite(path: &Path, row: usize, field: &str, text: &str) -> Result<f64, CliError> {
    let value: f64 = parse(path, row, field, text)?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad(
            path,
            format!("row {}: {field} must be finite", row + 2),
        ))
    }
}

// Malformed fixture content is a config problem, not an OS-level failure.
fn bad(path: &Path, msg: String) -> CliError {
    CliError::Config(format!("{}: {msg}", path.display()))
}
