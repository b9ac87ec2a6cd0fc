//! The primary geometry artifact: a JSON export of a Laguerre diagram with
//! a shared vertex pool and per-cell face lists. The schema is the
//! contract; serialisation uses shortest round-trip floats and a fixed
//! field order, so export -> import -> export is byte-identical.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use laguerre::diagram::LaguerreDiagram;
use laguerre::geometry::FaceTag;

use crate::atomic::write_atomic;
use crate::{CliError, TOOL_VERSION};

pub const SCHEMA: &str = "laguerre-diagram/1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramExport {
    pub schema: String,
    pub tool_version: String,
    pub n: usize,
    pub d: usize,
    pub periodic: bool,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub box_volume: f64,
    /// Shared vertex pool; faces index into it. Cells are stored unwrapped,
    /// so periodic vertices may lie outside the box.
    pub vertices: Vec<Vec<f64>>,
    pub cells: Vec<CellRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRecord {
    pub id: u64,
    pub seed: Vec<f64>,
    pub weight: f64,
    pub volume: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<f64>,
    /// Signed `(volume - target) / target`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rel_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub centroid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sphericity: Option<f64>,
    pub empty: bool,
    pub faces: Vec<FaceRecord>,
    /// Opaque per-cell label passed through from the input fixture.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub attr: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceRecord {
    /// Indices into the shared pool; a 2D face is an edge (two indices),
    /// a 3D face is cyclically ordered.
    pub vertices: Vec<u32>,
    /// Exported id of the neighbouring cell; absent for box walls.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub neighbor: Option<u64>,
    /// Wall id `2 * axis + side` for box faces; absent for neighbours.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall: Option<u32>,
    /// Periodic image shift of the neighbour; absent for the direct image.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub image: Option<Vec<f64>>,
    /// Face area (edge length in 2D).
    pub area: f64,
}

/// Interns vertices by exact bit pattern: adjacent cells recompute shared
/// corners through different clip sequences, so only true duplicates merge.
struct VertexPool<const D: usize> {
    verts: Vec<Vec<f64>>,
    index: HashMap<[u64; 3], u32>,
}

impl<const D: usize> VertexPool<D> {
    fn new() -> Self {
        Self {
            verts: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, v: [f64; D]) -> u32 {
        let mut key = [0u64; 3];
        for k in 0..D {
            key[k] = v[k].to_bits();
        }
        *self.index.entry(key).or_insert_with(|| {
            self.verts.push(v.to_vec());
            (self.verts.len() - 1) as u32
        })
    }
}

/// Builds the export from a diagram. `ids` come from the input fixture
/// (or are 0..n for generated runs); `targets` and `attrs` are optional
/// parallel arrays.
pub fn build<const D: usize>(
    diagram: &LaguerreDiagram<D>,
    ids: &[u64],
    targets: Option<&[f64]>,
    attrs: Option<&[String]>,
) -> DiagramExport {
    let domain = diagram.domain();
    let images = diagram.images();
    let zero_shift = |s: &[f64; D]| s.iter().all(|&c| c == 0.0);
    let mut pool = VertexPool::<D>::new();
    let mut cells = Vec::with_capacity(diagram.len());

    for i in 0..diagram.len() {
        let cell = diagram.cell(i);
        let polytope = cell.polytope();
        let measures = cell.measures();
        let empty = cell.is_empty();
        let local: Vec<u32> = polytope.vertices().iter().map(|&v| pool.intern(v)).collect();
        let faces = polytope
            .faces()
            .iter()
            .zip(&measures.face_areas)
            .map(|(face, &(tag, area))| {
                let vertices = face.verts.iter().map(|&v| local[v as usize]).collect();
                match tag {
                    FaceTag::Wall(id) => FaceRecord {
                        vertices,
                        neighbor: None,
                        wall: Some(id),
                        image: None,
                        area,
                    },
                    FaceTag::Neighbor { seed, image } => FaceRecord {
                        vertices,
                        neighbor: Some(ids[seed as usize]),
                        wall: None,
                        image: (!zero_shift(&images[image as usize]))
                            .then(|| images[image as usize].to_vec()),
                        area,
                    },
                }
            })
            .collect();
        let target = targets.map(|t| t[i]);
        cells.push(CellRecord {
            id: ids[i],
            seed: diagram.generators()[i].position.to_vec(),
            weight: diagram.generators()[i].weight,
            volume: measures.volume,
            target,
            rel_error: target.map(|m| (measures.volume - m) / m),
            centroid: (!empty).then(|| measures.centroid.to_vec()),
            sphericity: (!empty).then(|| measures.sphericity()),
            empty,
            faces,
            attr: attrs.map(|a| a[i].clone()),
        });
    }

    DiagramExport {
        schema: SCHEMA.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        n: diagram.len(),
        d: D,
        periodic: domain.periodic(),
        lower: domain.lower().to_vec(),
        upper: domain.upper().to_vec(),
        box_volume: domain.volume(),
        vertices: pool.verts,
        cells,
    }
}

impl DiagramExport {
    /// Canonical byte serialisation (pretty JSON, trailing newline).
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("export is always serialisable");
        bytes.push(b'\n');
        bytes
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, |w| {
            w.write_all(&self.to_json_bytes()).map_err(CliError::from)
        })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let export: DiagramExport = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if export.schema != SCHEMA {
            return Err(CliError::Config(format!(
                "{}: unsupported schema {:?}, expected {SCHEMA:?}",
                path.display(),
                export.schema
            )));
        }
        Ok(export)
    }
}
