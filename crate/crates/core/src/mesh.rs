//! Nested conforming triangulations of the unit square.
//!
//! A [`Mesh`] is built once by [`Mesh::unit_square`] and then refined with
//! [`Mesh::refine_uniform`]. Red refinement numbers the four children of
//! coarse cell `c` as `4c..4c+4`, so the ancestor of a fine cell `d` levels
//! up is simply `cell >> (2 * d)`. [`Mesh::ancestor`] and
//! [`Mesh::descendants`] rely on that numbering.

use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];

/// Barycentric coordinates with respect to a triangle's three vertices.
pub type Bary = [f64; 3];

/// Tolerance used for barycentric containment tests.
pub const LOCATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    parent_cell: Option<Vec<usize>>,
    level: usize,
}

/// Affine map from the reference triangle `{(s, t): s, t >= 0, s + t <= 1}`
/// onto a mesh cell, `x = v0 + s (v1 - v0) + t (v2 - v0)`.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub vertices: [Point; 3],
    /// Columns are `v1 - v0` and `v2 - v0`.
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
    /// Inverse transpose of the Jacobian; maps reference gradients to
    /// physical gradients.
    pub inv_t: [[f64; 2]; 2],
}

impl CellGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [v0, v1, v2] = vertices;
        let j = [
            [v1[0] - v0[0], v2[0] - v0[0]],
            [v1[1] - v0[1], v2[1] - v0[1]],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // (J^-1)^T
        let inv_t = [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ];
        CellGeometry {
            vertices,
            jacobian: j,
            det,
            inv_t,
        }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    /// Longest edge length.
    pub fn diameter(&self) -> f64 {
        let [a, b, c] = self.vertices;
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn map(&self, bary: Bary) -> Point {
        let [v0, v1, v2] = self.vertices;
        [
            bary[0] * v0[0] + bary[1] * v1[0] + bary[2] * v2[0],
            bary[0] * v0[1] + bary[1] * v1[1] + bary[2] * v2[1],
        ]
    }

    pub fn barycentric(&self, x: Point) -> Bary {
        let v0 = self.vertices[0];
        let dx = [x[0] - v0[0], x[1] - v0[1]];
        let j = &self.jacobian;
        let s = (j[1][1] * dx[0] - j[0][1] * dx[1]) / self.det;
        let t = (-j[1][0] * dx[0] + j[0][0] * dx[1]) / self.det;
        [1.0 - s - t, s, t]
    }

    /// Maps a gradient with respect to reference coordinates `(s, t)` to
    /// the physical gradient.
    #[inline]
    pub fn physical_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn on_unit_square_boundary(p: Point) -> bool {
    p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0
}

impl Mesh {
    /// Structured triangulation of `(0,1)^2` with `n` squares per side, each
    /// square cut by its lower-left to upper-right diagonal.
    pub fn unit_square(n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::invalid("unit_square needs at least one subdivision"));
        }
        let np = n + 1;
        let mut vertices = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                // Pin the far edge to exactly 1.0 so the boundary flag is exact.
                let x = if i == n { 1.0 } else { i as f64 / n as f64 };
                let y = if j == n { 1.0 } else { j as f64 / n as f64 };
                vertices.push([x, y]);
            }
        }
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * np + i;
                let v10 = v00 + 1;
                let v01 = v00 + np;
                let v11 = v01 + 1;
                cells.push([v00, v10, v11]);
                cells.push([v00, v11, v01]);
            }
        }
        let boundary_vertex = vertices
            .iter()
            .map(|&p| on_unit_square_boundary(p))
            .collect();
        Ok(Mesh {
            vertices,
            cells,
            boundary_vertex,
            parent_cell: None,
            level: 0,
        })
    }

    /// Red refinement: every triangle is split into four through its edge
    /// midpoints. Children of cell `c` are `4c + k` with `k = 0, 1, 2` the
    /// corner triangles at local vertices 0, 1, 2 and `k = 3` the center.
    pub fn refine_uniform(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = if a < b { (a, b) } else { (b, a) };
            *midpoint.entry(key).or_insert_with(|| {
                let (pa, pb) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                vertices.len() - 1
            })
        };
        let mut cells = Vec::with_capacity(4 * self.cells.len());
        let mut parent = Vec::with_capacity(4 * self.cells.len());
        for (c, &[a, b, d]) in self.cells.iter().enumerate() {
            let mab = mid(a, b, &mut vertices);
            let mbd = mid(b, d, &mut vertices);
            let mda = mid(d, a, &mut vertices);
            cells.push([a, mab, mda]);
            cells.push([mab, b, mbd]);
            cells.push([mda, mbd, d]);
            cells.push([mbd, mda, mab]);
            parent.extend([c; 4]);
        }
        let boundary_vertex = vertices
            .iter()
            .map(|&p| on_unit_square_boundary(p))
            .collect();
        Mesh {
            vertices,
            cells,
            boundary_vertex,
            parent_cell: Some(parent),
            level: self.level + 1,
        }
    }

    /// Applies [`Mesh::refine_uniform`] `times` times.
    pub fn refined(&self, times: usize) -> Mesh {
        let mut m = self.clone();
        for _ in 0..times {
            m = m.refine_uniform();
        }
        m
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn boundary_vertex(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn parent_cell(&self) -> Option<&[usize]> {
        self.parent_cell.as_deref()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn geometry(&self, cell: usize) -> CellGeometry {
        let [a, b, c] = self.cells[cell];
        CellGeometry::new([self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    /// Global mesh size: the largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| self.geometry(c).diameter())
            .fold(0.0, f64::max)
    }

    /// Index of the cell `depth` refinement levels up that contains `cell`.
    pub fn ancestor(&self, cell: usize, depth: usize) -> usize {
        cell >> (2 * depth)
    }

    /// Cells of this mesh that descend from `coarse_cell` of the mesh
    /// `depth` levels coarser.
    pub fn descendants(&self, coarse_cell: usize, depth: usize) -> Range<usize> {
        let k = 1usize << (2 * depth);
        (coarse_cell * k).min(self.n_cells())..((coarse_cell + 1) * k).min(self.n_cells())
    }

    /// Checks that `self` was produced from `coarse` by uniform refinement,
    /// returning the depth. Every fine vertex must lie inside its ancestor.
    pub fn nesting_depth(&self, coarse: &Mesh) -> Result<usize> {
        if self.level < coarse.level {
            return Err(Error::invalid(format!(
                "fine mesh level {} is below coarse level {}",
                self.level, coarse.level
            )));
        }
        let depth = self.level - coarse.level;
        if self.n_cells() != coarse.n_cells() << (2 * depth) {
            return Err(Error::invalid(format!(
                "{} fine cells cannot descend from {} coarse cells in {depth} refinements",
                self.n_cells(),
                coarse.n_cells()
            )));
        }
        for c in 0..self.n_cells() {
            let parent = coarse.geometry(self.ancestor(c, depth));
            for &v in &self.cells[c] {
                let b = parent.barycentric(self.vertices[v]);
                if b.iter()
                    .any(|&l| !(-LOCATE_TOL..=1.0 + LOCATE_TOL).contains(&l))
                {
                    return Err(Error::invalid(format!(
                        "fine cell {c} is not contained in coarse cell {}",
                        self.ancestor(c, depth)
                    )));
                }
            }
        }
        Ok(depth)
    }

    /// Finds a cell containing `x`. Without a hint every cell is searched;
    /// with `hint = Some(c)` only the children of cell `c` of the parent
    /// mesh are tried. Points on shared edges go to the lowest cell index.
    pub fn locate_point(&self, x: Point, hint: Option<usize>) -> Result<(usize, Bary)> {
        let inside = |v: f64| (-LOCATE_TOL..=1.0 + LOCATE_TOL).contains(&v);
        if !(inside(x[0]) && inside(x[1])) || !x.iter().all(|v| v.is_finite()) {
            return Err(Error::OutOfDomain { x: x[0], y: x[1] });
        }
        let candidates = match hint {
            Some(c) => {
                if self.parent_cell.is_none() {
                    return Err(Error::invalid(
                        "locate hint given for a mesh without parent",
                    ));
                }
                self.descendants(c, 1)
            }
            None => 0..self.n_cells(),
        };
        candidates
            .map(|c| (c, self.geometry(c).barycentric(x)))
            .find(|(_, b)| b.iter().all(|&l| l >= -LOCATE_TOL))
            .ok_or(Error::OutOfDomain { x: x[0], y: x[1] })
    }

    /// Sorted, deduplicated edge list with a per-cell map: `cell_edges[c][k]`
    /// is the edge opposite local vertex `k`. Edges are numbered in order of
    /// first appearance over ascending cells.
    pub fn edges(&self) -> (Vec<[usize; 2]>, Vec<[usize; 3]>) {
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut cell_edges = Vec::with_capacity(self.n_cells());
        for cell in &self.cells {
            let mut local = [0; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let a = cell[(k + 1) % 3];
                let b = cell[(k + 2) % 3];
                let key = (a.min(b), a.max(b));
                *slot = *index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
            }
            cell_edges.push(local);
        }
        (edges, cell_edges)
    }
}
