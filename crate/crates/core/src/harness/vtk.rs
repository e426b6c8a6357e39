use std::fmt::Write as _;

use crate::error::{check_len, Error, Result};
use crate::spaces::FeFunction;

/// Legacy ASCII VTK unstructured grid of the mesh with vertex values of a
/// velocity (`VECTORS velocity`) and a pressure (`SCALARS pressure`).
///
/// Vertex degrees of freedom come first in every space and are nodal
/// values, so no evaluation is needed.
pub fn vtk_string(u: &FeFunction, p: &FeFunction) -> Result<String> {
    if u.components() != 2 || p.components() != 1 {
        return Err(Error::invalid("expected a velocity and a pressure field"));
    }
    let mesh = u.space().mesh();
    check_len(mesh.n_vertices(), p.space().mesh().n_vertices())?;
    let nv = mesh.n_vertices();
    let n = u.space().n_dofs();
    let (uc, pc) = (u.coefficients(), p.coefficients());

    let mut s = String::new();
    s.push_str(
        "# vtk DataFile Version 3.0\nStokes eigenfunction\nASCII\nDATASET UNSTRUCTURED_GRID\n",
    );
    let _ = writeln!(s, "POINTS {nv} double");
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:.17e} {:.17e} 0", v[0], v[1]);
    }
    let nc = mesh.n_cells();
    let _ = writeln!(s, "CELLS {nc} {}", 4 * nc);
    for c in mesh.cells() {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {nv}");
    s.push_str("VECTORS velocity double\n");
    for i in 0..nv {
        let _ = writeln!(s, "{:.17e} {:.17e} 0", uc[i], uc[n + i]);
    }
    s.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for v in &pc[..nv] {
        let _ = writeln!(s, "{v:.17e}");
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::spaces::{build_space, interpolate_nodal, interpolate_scalar, ElementKind};
    use std::sync::Arc;

    #[test]
    fn counts_are_consistent() {
        let space = build_space(
            Arc::new(Mesh::unit_square(3).unwrap()),
            ElementKind::P2Bubble,
        );
        let u = interpolate_nodal(&space, 2, |x| [x[0], -x[1]]);
        let p = interpolate_scalar(&space, |x| x[0] + x[1]);
        let text = vtk_string(&u, &p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert!(text.contains("POINTS 16 double"));
        assert!(text.contains("CELLS 18 72"));
        assert!(text.contains("CELL_TYPES 18"));
        assert!(text.contains("POINT_DATA 16"));
        let pressure_at = lines
            .iter()
            .position(|l| *l == "LOOKUP_TABLE default")
            .unwrap();
        assert_eq!(lines.len(), pressure_at + 1 + 16);
        let last: f64 = lines.last().unwrap().parse().unwrap();
        assert!((last - 2.0).abs() < 1e-15);
        assert!(vtk_string(&p, &u).is_err());
    }
}
