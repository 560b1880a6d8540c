//! Legacy ASCII VTK and plain CSV export of meshes and nodal fields.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

const VTK_TRIANGLE: u8 = 5;

/// Writes an UNSTRUCTURED_GRID with triangle cells and one
/// `SCALARS <name> double` block per entry of `scalars`.
pub fn write_vtk<W: Write>(
    mut w: W,
    mesh: &TriangleMesh,
    title: &str,
    scalars: &[(&str, &[f64])],
) -> Result<()> {
    let nv = mesh.n_vertices();
    for (name, values) in scalars {
        if values.len() != nv {
            return Err(Error::DimensionMismatch {
                expected: nv,
                got: values.len(),
            });
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidParameter(format!(
                "invalid VTK scalar name {name:?}"
            )));
        }
    }
    let title = title.lines().next().unwrap_or("");
    write_body(&mut w, mesh, title, scalars).map_err(|e| Error::io("<vtk stream>", e))
}

fn write_body<W: Write>(
    w: &mut W,
    mesh: &TriangleMesh,
    title: &str,
    scalars: &[(&str, &[f64])],
) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for v in mesh.vertices() {
        writeln!(w, "{:e} {:e} {:e}", v[0], v[1], v[2])?;
    }
    let nt = mesh.n_triangles();
    writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "{VTK_TRIANGLE}")?;
    }
    if !scalars.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.n_vertices())?;
        for (name, values) in scalars {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in values.iter() {
                writeln!(w, "{v:e}")?;
            }
        }
    }
    w.flush()
}

pub fn write_vtk_file(
    path: &Path,
    mesh: &TriangleMesh,
    title: &str,
    scalars: &[(&str, &[f64])],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_vtk(BufWriter::new(file), mesh, title, scalars).map_err(|e| relocate(e, path))
}

/// Writes `vertex,x,y,z,value` rows.
pub fn write_field_csv<W: Write>(mut w: W, mesh: &TriangleMesh, values: &[f64]) -> Result<()> {
    if values.len() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_vertices(),
            got: values.len(),
        });
    }
    let body = (|| -> std::io::Result<()> {
        writeln!(w, "vertex,x,y,z,value")?;
        for (i, (p, v)) in mesh.vertices().iter().zip(values).enumerate() {
            writeln!(w, "{i},{:e},{:e},{:e},{v:e}", p[0], p[1], p[2])?;
        }
        w.flush()
    })();
    body.map_err(|e| Error::io("<csv stream>", e))
}

pub fn write_field_csv_file(path: &Path, mesh: &TriangleMesh, values: &[f64]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_field_csv(BufWriter::new(file), mesh, values).map_err(|e| relocate(e, path))
}

fn relocate(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}
