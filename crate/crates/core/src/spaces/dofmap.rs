use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::mesh::{Bary, Mesh, Point};
use crate::spaces::element::{eval_basis, ElementKind};

/// Global numbering of a scalar continuous finite element space.
///
/// Degrees of freedom are numbered vertices first, then edges (in
/// [`Mesh::edges`] order), then the cell-local bubble functions
/// (`3 * cell + i`).
#[derive(Debug, Clone)]
pub struct DofMap {
    mesh: Arc<Mesh>,
    element: ElementKind,
    n_dofs: usize,
    cell_dofs: Vec<usize>,
    is_boundary: Vec<bool>,
    boundary_dofs: Vec<usize>,
    node_points: Vec<Point>,
}

impl DofMap {
    pub fn new(mesh: Arc<Mesh>, element: ElementKind) -> DofMap {
        let nv = mesh.n_vertices();
        let nc = mesh.n_cells();
        let stride = element.n_local();
        let mut cell_dofs = Vec::with_capacity(stride * nc);
        let mut node_points: Vec<Point> = mesh.vertices().to_vec();
        let mut is_boundary = mesh.boundary_vertex().to_vec();

        match element {
            ElementKind::P1 => {
                for cell in mesh.cells() {
                    cell_dofs.extend_from_slice(cell);
                }
            }
            ElementKind::P2Bubble => {
                let (edges, cell_edges) = mesh.edges();
                let ne = edges.len();
                for [a, b] in &edges {
                    let (pa, pb) = (mesh.vertices()[*a], mesh.vertices()[*b]);
                    let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                    // Both endpoints on the boundary is not enough: a
                    // diagonal may join two boundary vertices.
                    is_boundary
                        .push(mid[0] == 0.0 || mid[0] == 1.0 || mid[1] == 0.0 || mid[1] == 1.0);
                    node_points.push(mid);
                }
                for (c, cell) in mesh.cells().iter().enumerate() {
                    cell_dofs.extend_from_slice(cell);
                    cell_dofs.extend(cell_edges[c].iter().map(|e| nv + e));
                    cell_dofs.extend((0..3).map(|i| nv + ne + 3 * c + i));
                    let center = mesh.geometry(c).map([1.0 / 3.0; 3]);
                    node_points.extend([center; 3]);
                    is_boundary.extend([false; 3]);
                }
            }
        }
        let n_dofs = node_points.len();
        let boundary_dofs = (0..n_dofs).filter(|&i| is_boundary[i]).collect();
        DofMap {
            mesh,
            element,
            n_dofs,
            cell_dofs,
            is_boundary,
            boundary_dofs,
            node_points,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn element(&self) -> ElementKind {
        self.element
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.element.n_local()
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        let s = self.element.n_local();
        &self.cell_dofs[s * cell..s * (cell + 1)]
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        self.is_boundary[dof]
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    /// Location of the nodal point of each degree of freedom.
    pub fn node_points(&self) -> &[Point] {
        &self.node_points
    }
}

/// Builds the global numbering of `kind` on `mesh`.
pub fn build_space(mesh: Arc<Mesh>, kind: ElementKind) -> Arc<DofMap> {
    Arc::new(DofMap::new(mesh, kind))
}

/// Coefficients of a scalar (`components == 1`) or vector
/// (`components == 2`) field. Vector fields store component `c` of
/// degree of freedom `i` at `c * n_dofs + i`.
#[derive(Debug, Clone)]
pub struct FeFunction {
    space: Arc<DofMap>,
    components: usize,
    coefficients: Vec<f64>,
}

impl FeFunction {
    pub fn zeros(space: Arc<DofMap>, components: usize) -> FeFunction {
        let n = space.n_dofs() * components;
        FeFunction {
            space,
            components,
            coefficients: vec![0.0; n],
        }
    }

    pub fn from_coefficients(
        space: Arc<DofMap>,
        components: usize,
        coefficients: Vec<f64>,
    ) -> Result<FeFunction> {
        if components == 0 || components > 2 {
            return Err(Error::invalid("fields have one or two components"));
        }
        check_len(space.n_dofs() * components, coefficients.len())?;
        Ok(FeFunction {
            space,
            components,
            coefficients,
        })
    }

    pub fn space(&self) -> &Arc<DofMap> {
        &self.space
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    pub fn scaled(&self, factor: f64) -> FeFunction {
        let mut out = self.clone();
        out.coefficients.iter_mut().for_each(|c| *c *= factor);
        out
    }

    /// Sets every boundary coefficient to zero.
    pub fn zero_boundary(&mut self) {
        let n = self.space.n_dofs();
        for c in 0..self.components {
            for &d in self.space.boundary_dofs() {
                self.coefficients[c * n + d] = 0.0;
            }
        }
    }

    /// Values and physical gradients of each component at a point of a
    /// given cell.
    pub fn eval_in_cell(&self, cell: usize, bary: Bary) -> ([f64; 2], [[f64; 2]; 2]) {
        let dofs = self.space.cell_dofs(cell);
        let geom = self.space.mesh().geometry(cell);
        let basis = eval_basis(self.space.element(), bary);
        let n = self.space.n_dofs();
        let mut val = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for c in 0..self.components {
            let mut rg = [0.0; 2];
            for (k, &d) in dofs.iter().enumerate() {
                let coef = self.coefficients[c * n + d];
                val[c] += coef * basis.values[k];
                rg[0] += coef * basis.ref_grads[k][0];
                rg[1] += coef * basis.ref_grads[k][1];
            }
            grad[c] = geom.physical_gradient(rg);
        }
        (val, grad)
    }

    /// Point evaluation; returns one value per component.
    pub fn evaluate_at(&self, x: Point) -> Result<Vec<f64>> {
        let (cell, bary) = self.space.mesh().locate_point(x, None)?;
        let (val, _) = self.eval_in_cell(cell, bary);
        Ok(val[..self.components].to_vec())
    }
}

/// Nodal interpolation. Vertex and edge coefficients are nodal values; the
/// three bubble coefficients of a cell are equal and chosen so that the
/// interpolant matches `f` at the barycenter.
pub fn interpolate_nodal(
    space: &Arc<DofMap>,
    components: usize,
    f: impl Fn(Point) -> [f64; 2],
) -> FeFunction {
    let n = space.n_dofs();
    let mut coefficients = vec![0.0; n * components];
    let bubble_start = match space.element() {
        ElementKind::P1 => n,
        ElementKind::P2Bubble => n - 3 * space.mesh().n_cells(),
    };
    for (d, &p) in space.node_points()[..bubble_start].iter().enumerate() {
        let v = f(p);
        for c in 0..components {
            coefficients[c * n + d] = v[c];
        }
    }
    if space.element() == ElementKind::P2Bubble {
        let center = [1.0 / 3.0; 3];
        let basis = eval_basis(ElementKind::P2Bubble, center);
        for cell in 0..space.mesh().n_cells() {
            let dofs = space.cell_dofs(cell);
            let target = f(space.node_points()[dofs[6]]);
            for c in 0..components {
                let p2: f64 = (0..6)
                    .map(|k| coefficients[c * n + dofs[k]] * basis.values[k])
                    .sum();
                let share = (target[c] - p2) / 3.0;
                for &d in &dofs[6..] {
                    coefficients[c * n + d] = share;
                }
            }
        }
    }
    FeFunction {
        space: space.clone(),
        components,
        coefficients,
    }
}

/// Scalar convenience wrapper around [`interpolate_nodal`].
pub fn interpolate_scalar(space: &Arc<DofMap>, f: impl Fn(Point) -> f64) -> FeFunction {
    interpolate_nodal(space, 1, |p| [f(p), 0.0])
}
