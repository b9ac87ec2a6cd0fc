//! Optional legacy VTK polydata writer for visualisation. The JSON export
//! is the contract; this is convenience output for standard viewers.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use laguerre::diagram::LaguerreDiagram;
use laguerre::geometry::ConvexPolytope;

use crate::atomic::write_atomic;
use crate::CliError;

/// Writes one polygon per cell (2D) or one per face (3D), tagged with the
/// owning cell id and volume. With `wrap`, periodic cells are cut into
/// their in-box fragments first.
pub fn write_vtk<const D: usize>(
    path: &Path,
    diagram: &LaguerreDiagram<D>,
    wrap: bool,
) -> Result<(), CliError> {
    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut index: HashMap<[u64; 3], u32> = HashMap::new();
    let mut polygons: Vec<Vec<u32>> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();

    let mut intern = |v: [f64; D]| -> u32 {
        let mut p = [0.0f64; 3];
        p[..D].copy_from_slice(&v);
        let key = [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()];
        *index.entry(key).or_insert_with(|| {
            points.push(p);
            (points.len() - 1) as u32
        })
    };

    let mut emit = |polytope: &ConvexPolytope<D>, cell: usize| {
        if polytope.is_empty() {
            return;
        }
        let local: Vec<u32> = polytope.vertices().iter().map(|&v| intern(v)).collect();
        if D == 2 {
            polygons.push(ring_2d(polytope).into_iter().map(|v| local[v]).collect());
            owner.push(cell);
        } else {
            for face in polytope.faces() {
                polygons.push(face.verts.iter().map(|&v| local[v as usize]).collect());
                owner.push(cell);
            }
        }
    };

    for i in 0..diagram.len() {
        if wrap && diagram.domain().periodic() {
            for f in &diagram.wrap_cell_into_domain(i) {
                emit(f, i);
            }
        } else {
            emit(diagram.cell(i).polytope(), i);
        }
    }

    write_atomic(path, |w| {
        let mut out = std::io::BufWriter::new(w);
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "laguerre diagram")?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET POLYDATA")?;
        writeln!(out, "POINTS {} double", points.len())?;
        for p in &points {
            writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
        }
        let size: usize = polygons.iter().map(|p| p.len() + 1).sum();
        writeln!(out, "POLYGONS {} {size}", polygons.len())?;
        for poly in &polygons {
            write!(out, "{}", poly.len())?;
            for v in poly {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        writeln!(out, "CELL_DATA {}", polygons.len())?;
        writeln!(out, "SCALARS cell_id int 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for &c in &owner {
            writeln!(out, "{c}")?;
        }
        writeln!(out, "SCALARS volume double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for &c in &owner {
            writeln!(out, "{}", diagram.cell(c).measures().volume)?;
        }
        out.flush()?;
        Ok(())
    })
}

/// 2D faces are consistently oriented edges; chaining them recovers the
/// polygon ring without any floating-point work.
fn ring_2d<const D: usize>(polytope: &ConvexPolytope<D>) -> Vec<usize> {
    let faces = polytope.faces();
    let mut next = vec![usize::MAX; polytope.vertices().len()];
    for f in faces {
        next[f.verts[0] as usize] = f.verts[1] as usize;
    }
    let start = faces[0].verts[0] as usize;
    let mut ring = Vec::with_capacity(faces.len());
    let mut v = start;
    loop {
        ring.push(v);
        v = next[v];
        if v == start {
            break;
        }
    }
    ring
}
