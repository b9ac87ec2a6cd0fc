//! Statistics artifact over a diagram export: complementary cumulative
//! distributions and quantiles of the per-cell volume errors, plus the
//! centroid relative error when reference centroids are supplied.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use laguerre::diagram::Domain;
use laguerre::stats::{ccdf, centroid_relative_errors, quantile};

use crate::atomic::write_atomic;
use crate::csvio::CsvTable;
use crate::export::DiagramExport;
use crate::{CliError, TOOL_VERSION};

pub const SCHEMA: &str = "laguerre-report/1";

#[derive(Debug, Serialize)]
pub struct ReportArtifact {
    pub schema: String,
    pub tool_version: String,
    pub n: usize,
    /// `100 |v_i - m_i| / m_i` over cells that carry a target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume_percent_error: Option<ErrorStats>,
    /// `|x_i - c_i| / r_i` against the reference centroids, with `r_i` the
    /// radius of the volume-equivalent ball.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centroid_relative_error: Option<ErrorStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fraction_centroid_error_below_one: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ErrorStats {
    pub count: usize,
    pub ccdf_x: Vec<f64>,
    pub ccdf_fraction: Vec<f64>,
    pub median: f64,
    pub q90: f64,
    pub q99: f64,
    pub max: f64,
}

impl ErrorStats {
    fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let curve = ccdf(values);
        Some(ErrorStats {
            count: values.len(),
            ccdf_x: curve.xs,
            ccdf_fraction: curve.fractions,
            median: quantile(values, 0.5),
            q90: quantile(values, 0.9),
            q99: quantile(values, 0.99),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

pub fn build_report(
    export: &DiagramExport,
    reference: Option<&CsvTable>,
) -> Result<ReportArtifact, CliError> {
    let volume_errors: Vec<f64> = export
        .cells
        .iter()
        .filter_map(|c| c.target.map(|m| 100.0 * (c.volume - m).abs() / m))
        .collect();

    let centroid_errors = match reference {
        Some(table) => Some(centroid_errors(export, table)?),
        None => None,
    };
    let fraction_below_one = centroid_errors.as_ref().map(|errors| {
        errors.iter().filter(|e| **e < 1.0).count() as f64 / errors.len() as f64
    });

    Ok(ReportArtifact {
        schema: SCHEMA.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        n: export.n,
        volume_percent_error: ErrorStats::from_values(&volume_errors),
        centroid_relative_error: centroid_errors
            .as_deref()
            .and_then(ErrorStats::from_values),
        fraction_centroid_error_below_one: fraction_below_one,
    })
}

impl ReportArtifact {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, |w| {
            let mut bytes =
                serde_json::to_vec_pretty(self).expect("report is always serialisable");
            bytes.push(b'\n');
            w.write_all(&bytes).map_err(CliError::from)
        })
    }
}

/// Reference rows are matched to cells by id; any id on one side only is an
/// error. Empty cells have no centroid and are skipped.
fn centroid_errors(export: &DiagramExport, table: &CsvTable) -> Result<Vec<f64>, CliError> {
    if table.dim != export.d {
        return Err(CliError::Config(format!(
            "reference is {}-dimensional but the export is {}-dimensional",
            table.dim, export.d
        )));
    }
    let by_id: HashMap<u64, usize> = table.ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    for id in &table.ids {
        if !export.cells.iter().any(|c| c.id == *id) {
            return Err(id_mismatch(&format!("reference id {id} has no cell")));
        }
    }
    match export.d {
        2 => centroid_errors_dim::<2>(export, table, &by_id),
        3 => centroid_errors_dim::<3>(export, table, &by_id),
        d => Err(CliError::Config(format!("unsupported dimension {d}"))),
    }
}

fn centroid_errors_dim<const D: usize>(
    export: &DiagramExport,
    table: &CsvTable,
    by_id: &HashMap<u64, usize>,
) -> Result<Vec<f64>, CliError> {
    let domain = Domain::<D>::new(
        to_array::<D>(&export.lower),
        to_array::<D>(&export.upper),
        export.periodic,
    )
    .map_err(|e| CliError::Config(format!("export domain: {e}")))?;
    let reference = table.positions_as::<D>()?;
    let mut refs = Vec::new();
    let mut centroids = Vec::new();
    let mut volumes = Vec::new();
    for cell in &export.cells {
        let Some(&row) = by_id.get(&cell.id) else {
            return Err(id_mismatch(&format!("cell id {} has no reference row", cell.id)));
        };
        let Some(centroid) = &cell.centroid else {
            continue; // empty cell
        };
        refs.push(reference[row]);
        centroids.push(to_array::<D>(centroid));
        // Radius from the target when present (the grain's nominal size),
        // else from the realised volume.
        volumes.push(cell.target.unwrap_or(cell.volume));
    }
    Ok(centroid_relative_errors(&domain, &refs, &centroids, &volumes))
}

fn id_mismatch(detail: &str) -> CliError {
    CliError::Config(format!("reference/export id mismatch: {detail}"))
}

fn to_array<const D: usize>(v: &[f64]) -> [f64; D] {
    let mut a = [0.0; D];
    a.copy_from_slice(v);
    a
}
