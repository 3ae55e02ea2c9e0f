use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{DesignField, Dimension, VoxelMesh};

const VTK_HEXAHEDRON: u8 = 12;
const VTK_QUAD: u8 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldLocation {
    /// One value (or vector) per element, in element order.
    Cell,
    /// One value (or vector) per node, in node order.
    Point,
}

/// A named field to attach to the exported grid. `components` is 1 for
/// scalars or the mesh dimension for vectors (2D vectors are padded with z = 0).
#[derive(Debug, Clone, Copy)]
pub struct VtkField<'a> {
    pub name: &'a str,
    pub location: FieldLocation,
    pub components: usize,
    pub data: &'a [f64],
}

impl<'a> VtkField<'a> {
    pub fn cell(name: &'a str, data: &'a [f64]) -> Self {
        VtkField {
            name,
            location: FieldLocation::Cell,
            components: 1,
            data,
        }
    }

    pub fn point_vector(name: &'a str, ndim: usize, data: &'a [f64]) -> Self {
        VtkField {
            name,
            location: FieldLocation::Point,
            components: ndim,
            data,
        }
    }
}

/// Names of the stress components in storage order.
pub fn stress_component_names(dim: Dimension) -> &'static [&'static str] {
    match dim {
        Dimension::Two => &["stress_xx", "stress_yy", "stress_xy"],
        Dimension::Three => &[
            "stress_xx",
            "stress_yy",
            "stress_zz",
            "stress_xy",
            "stress_xz",
            "stress_yz",
        ],
    }
}

/// Split an element-major stress array into one scalar array per component.
pub fn split_components(data: &[f64], components: usize) -> Vec<Vec<f64>> {
    (0..components)
        .map(|c| data.iter().skip(c).step_by(components).copied().collect())
        .collect()
}

fn check(mesh: &VoxelMesh, design: &DesignField, fields: &[VtkField]) -> Result<()> {
    if design.len() != mesh.n_elements() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_elements(),
            got: design.len(),
        });
    }
    for f in fields {
        if f.components != 1 && f.components != mesh.ndim() {
            return Err(Error::InvalidInput(format!(
                "field `{}` has {} components; expected 1 or {}",
                f.name,
                f.components,
                mesh.ndim()
            )));
        }
        let count = match f.location {
            FieldLocation::Cell => mesh.n_elements(),
            FieldLocation::Point => mesh.n_nodes(),
        };
        if f.data.len() != count * f.components {
            return Err(Error::DimensionMismatch {
                expected: count * f.components,
                got: f.data.len(),
            });
        }
        if f.name.is_empty() || f.name.contains(char::is_whitespace) {
            return Err(Error::InvalidInput(format!(
                "field name `{}` must be non-empty without whitespace",
                f.name
            )));
        }
    }
    Ok(())
}

fn write_values<W: Write>(
    w: &mut W,
    f: &VtkField,
    items: impl Iterator<Item = usize>,
) -> std::io::Result<()> {
    if f.components == 1 {
        writeln!(w, "SCALARS {} double 1", f.name)?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for i in items {
            writeln!(w, "{}", f.data[i])?;
        }
    } else {
        writeln!(w, "VECTORS {} double", f.name)?;
        let c = f.components;
        for i in items {
            let v = &f.data[i * c..(i + 1) * c];
            let z = if c == 3 { v[2] } else { 0.0 };
            writeln!(w, "{} {} {}", v[0], v[1], z)?;
        }
    }
    Ok(())
}

fn render<W: Write>(
    w: &mut W,
    mesh: &VoxelMesh,
    design: &DesignField,
    fields: &[VtkField],
) -> std::io::Result<()> {
    let cells: Vec<usize> = (0..mesh.n_elements()).filter(|&e| design.presence[e]).collect();
    if cells.is_empty() {
        log::warn!("exporting a topology with no present elements");
    }
    let (npe, ctype) = match mesh.dimension() {
        Dimension::Two => (4, VTK_QUAD),
        Dimension::Three => (8, VTK_HEXAHEDRON),
    };
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "thermobuck topology")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_nodes())?;
    for n in 0..mesh.n_nodes() {
        let x = mesh.node_coords(n);
        writeln!(w, "{} {} {}", x[0], x[1], x[2])?;
    }
    writeln!(w, "CELLS {} {}", cells.len(), cells.len() * (npe + 1))?;
    for &e in &cells {
        let nodes = mesh.element_nodes(e);
        write!(w, "{npe}")?;
        for n in &nodes[..npe] {
            write!(w, " {n}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", cells.len())?;
    for _ in &cells {
        writeln!(w, "{ctype}")?;
    }
    if !cells.is_empty() {
        writeln!(w, "CELL_DATA {}", cells.len())?;
        let presence = design.occupancy();
        write_values(w, &VtkField::cell("presence", &presence), cells.iter().copied())?;
        for f in fields.iter().filter(|f| f.location == FieldLocation::Cell) {
            write_values(w, f, cells.iter().copied())?;
        }
    }
    let points: Vec<&VtkField> = fields
        .iter()
        .filter(|f| f.location == FieldLocation::Point)
        .collect();
    if !points.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.n_nodes())?;
        for f in points {
            write_values(w, f, 0..mesh.n_nodes())?;
        }
    }
    w.flush()
}

/// Write a legacy ASCII unstructured grid of the present elements with the
/// given cell and point data. Output is byte-identical for identical input.
pub fn write_vtk<W: Write>(
    w: &mut W,
    mesh: &VoxelMesh,
    design: &DesignField,
    fields: &[VtkField],
) -> Result<()> {
    check(mesh, design, fields)?;
    render(w, mesh, design, fields).map_err(|e| Error::io("<stream>", e))
}

/// [`write_vtk`] to a file.
pub fn export_vtk(
    mesh: &VoxelMesh,
    design: &DesignField,
    fields: &[VtkField],
    path: &Path,
) -> Result<()> {
    check(mesh, design, fields)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    render(&mut BufWriter::new(file), mesh, design, fields).map_err(|e| Error::io(path, e))
}
