//! Assembly of the stabilized Stokes blocks and evaluation of the discrete
//! bilinear forms.
//!
//! Velocities use the same scalar space for both components and the
//! homogeneous Dirichlet condition is imposed by deleting boundary rows and
//! columns. The reduced velocity vector stores all free x-components first,
//! then all free y-components.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::linsolve::BorderedFactorization;
use crate::mesh::{Mesh, Point};
use crate::quadrature::QuadratureRule;
use crate::spaces::{
    build_space, eval_basis, interpolate_scalar, BasisValues, DofMap, ElementKind, FeFunction,
    LocalProjector, ProjectionKind,
};
use crate::sparse::CsrMatrix;

/// Default stabilization coefficient.
pub const DEFAULT_ALPHA0: f64 = 0.1;

/// How the cell parameter `alpha_K` is derived from `alpha0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaScaling {
    /// `alpha_K = alpha0 * h_K^2`.
    #[default]
    HSquared,
    /// `alpha_K = alpha0`.
    Constant,
}

impl fmt::Display for AlphaScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphaScaling::HSquared => "h2",
            AlphaScaling::Constant => "constant",
        })
    }
}

impl FromStr for AlphaScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h2" | "h^2" | "h2-scaled" | "hsquared" => Ok(AlphaScaling::HSquared),
            "constant" | "const" => Ok(AlphaScaling::Constant),
            other => Err(Error::invalid(format!("unknown alpha scaling `{other}`"))),
        }
    }
}

/// Stabilization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stabilization {
    pub alpha0: f64,
    pub scaling: AlphaScaling,
}

impl Default for Stabilization {
    fn default() -> Self {
        Stabilization {
            alpha0: DEFAULT_ALPHA0,
            scaling: AlphaScaling::HSquared,
        }
    }
}

impl Stabilization {
    pub fn new(alpha0: f64, scaling: AlphaScaling) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha0 must be positive, got {alpha0}"
            )));
        }
        Ok(Stabilization { alpha0, scaling })
    }

    pub fn alpha_k(&self, h_k: f64) -> f64 {
        match self.scaling {
            AlphaScaling::HSquared => self.alpha0 * h_k * h_k,
            AlphaScaling::Constant => self.alpha0,
        }
    }
}

/// The bilinear forms that can be evaluated on a [`BlockSystem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `a(u, v) = (grad u, grad v)`, velocity by velocity.
    A,
    /// `b(v, q) = (div v, q)`, velocity by pressure.
    B,
    /// `r(u, v) = (u, v)`, velocity by velocity.
    R,
    /// Stabilization `S_h(p, q)`, pressure by pressure.
    S,
}

/// Assembled blocks of one discretization.
///
/// Reduced blocks (`a`, `b`, `m`) act on free velocity unknowns; the full
/// scalar matrices are kept as well so forms can be evaluated on fields that
/// do not satisfy the boundary condition.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    space: Arc<DofMap>,
    projection: ProjectionKind,
    stabilization: Stabilization,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
    /// Vector Laplacian on free velocity unknowns.
    pub a: CsrMatrix,
    /// Divergence coupling, `n_p x n_u`.
    pub b: CsrMatrix,
    /// Stabilization, `n_p x n_p`.
    pub s: CsrMatrix,
    /// Velocity mass on free unknowns.
    pub m: CsrMatrix,
    /// Pressure mean functional, `c_i = integral of psi_i`.
    pub c: Vec<f64>,
    /// Scalar stiffness before boundary elimination.
    pub stiffness_full: CsrMatrix,
    /// Scalar mass before boundary elimination (also the pressure mass).
    pub mass_full: CsrMatrix,
    /// `(d/dx phi_j, psi_i)` and `(d/dy phi_j, psi_i)` before elimination.
    pub bx_full: CsrMatrix,
    pub by_full: CsrMatrix,
}

/// Reference basis data at every point of a rule.
pub(crate) fn tabulate(kind: ElementKind, rule: &QuadratureRule) -> Vec<BasisValues> {
    rule.points.iter().map(|&p| eval_basis(kind, p)).collect()
}

impl BlockSystem {
    /// Assembles all blocks with the degree-8 rule. Velocity and pressure
    /// must use the same element.
    pub fn assemble(
        mesh: Arc<Mesh>,
        vel: ElementKind,
        pres: ElementKind,
        projection: ProjectionKind,
        stabilization: Stabilization,
    ) -> Result<BlockSystem> {
        if vel != pres {
            return Err(Error::invalid(
                "velocity and pressure must use the same element",
            ));
        }
        Stabilization::new(stabilization.alpha0, stabilization.scaling)?;
        let space = build_space(mesh, vel);
        Self::assemble_on(space, projection, stabilization)
    }

    pub fn assemble_on(
        space: Arc<DofMap>,
        projection: ProjectionKind,
        stabilization: Stabilization,
    ) -> Result<BlockSystem> {
        let rule = QuadratureRule::assembly();
        let projector = LocalProjector::new(projection, &rule)?;
        let table = tabulate(space.element(), &rule);
        let mesh = space.mesh().clone();
        let n = space.n_dofs();
        let nl = space.n_local();
        let nq = rule.len();

        let cap = mesh.n_cells() * nl * nl;
        let mut k_t = Vec::with_capacity(cap);
        let mut m_t = Vec::with_capacity(cap);
        let mut bx_t = Vec::with_capacity(cap);
        let mut by_t = Vec::with_capacity(cap);
        let mut s_t = Vec::with_capacity(cap);
        let mut c = vec![0.0; n];

        let mut grads = vec![[[0.0; 2]; crate::spaces::MAX_LOCAL]; nq];
        let mut fluct = vec![vec![[0.0; 2]; nq]; nl];

        for cell in 0..mesh.n_cells() {
            let geom = mesh.geometry(cell);
            let dofs = space.cell_dofs(cell);
            let alpha = stabilization.alpha_k(geom.diameter());
            for q in 0..nq {
                for i in 0..nl {
                    grads[q][i] = geom.physical_gradient(table[q].ref_grads[i]);
                }
            }
            for i in 0..nl {
                for q in 0..nq {
                    fluct[i][q] = grads[q][i];
                }
                projector.fluctuate(&mut fluct[i]);
            }
            for i in 0..nl {
                for j in 0..nl {
                    let (mut kij, mut mij, mut bxij, mut byij, mut sij) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for q in 0..nq {
                        let w = rule.weights[q] * geom.det;
                        let (gi, gj) = (grads[q][i], grads[q][j]);
                        let (vi, vj) = (table[q].values[i], table[q].values[j]);
                        kij += w * (gi[0] * gj[0] + gi[1] * gj[1]);
                        mij += w * vi * vj;
                        // Row i is the pressure test function, column j the
                        // velocity trial function.
                        bxij += w * vi * gj[0];
                        byij += w * vi * gj[1];
                        let (fi, fj) = (fluct[i][q], fluct[j][q]);
                        sij += w * (fi[0] * fj[0] + fi[1] * fj[1]);
                    }
                    let (r, col) = (dofs[i], dofs[j]);
                    k_t.push((r, col, kij));
                    m_t.push((r, col, mij));
                    bx_t.push((r, col, bxij));
                    by_t.push((r, col, byij));
                    s_t.push((r, col, alpha * sij));
                }
                c[dofs[i]] += (0..nq)
                    .map(|q| rule.weights[q] * geom.det * table[q].values[i])
                    .sum::<f64>();
            }
        }

        let stiffness_full = CsrMatrix::from_triplets(n, n, &k_t);
        let mass_full = CsrMatrix::from_triplets(n, n, &m_t);
        let bx_full = CsrMatrix::from_triplets(n, n, &bx_t);
        let by_full = CsrMatrix::from_triplets(n, n, &by_t);
        let s = CsrMatrix::from_triplets(n, n, &s_t);

        let mut free_index = vec![None; n];
        let mut free_dofs = Vec::new();
        for d in 0..n {
            if !space.is_boundary(d) {
                free_index[d] = Some(free_dofs.len());
                free_dofs.push(d);
            }
        }
        let nf = free_dofs.len();

        let vector_block = |full: &CsrMatrix| {
            let mut t = Vec::new();
            for (r, col, v) in full.triplets() {
                if let (Some(fr), Some(fc)) = (free_index[r], free_index[col]) {
                    t.push((fr, fc, v));
                    t.push((nf + fr, nf + fc, v));
                }
            }
            CsrMatrix::from_triplets(2 * nf, 2 * nf, &t)
        };
        let a = vector_block(&stiffness_full);
        let m = vector_block(&mass_full);
        let mut b_t = Vec::new();
        for (comp, full) in [&bx_full, &by_full].into_iter().enumerate() {
            for (r, col, v) in full.triplets() {
                if let Some(fc) = free_index[col] {
                    b_t.push((r, comp * nf + fc, v));
                }
            }
        }
        let b = CsrMatrix::from_triplets(n, 2 * nf, &b_t);

        Ok(BlockSystem {
            space,
            projection,
            stabilization,
            free_index,
            free_dofs,
            a,
            b,
            s,
            m,
            c,
            stiffness_full,
            mass_full,
            bx_full,
            by_full,
        })
    }

    pub fn space(&self) -> &Arc<DofMap> {
        &self.space
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.space.mesh()
    }

    pub fn element(&self) -> ElementKind {
        self.space.element()
    }

    pub fn projection(&self) -> ProjectionKind {
        self.projection
    }

    pub fn stabilization(&self) -> Stabilization {
        self.stabilization
    }

    /// Number of free velocity unknowns (both components).
    pub fn n_velocity(&self) -> usize {
        2 * self.free_dofs.len()
    }

    /// Number of pressure unknowns.
    pub fn n_pressure(&self) -> usize {
        self.space.n_dofs()
    }

    /// Size of the bordered saddle-point system.
    pub fn n_augmented(&self) -> usize {
        self.n_velocity() + self.n_pressure() + 1
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Restricts a full velocity field to the free unknowns.
    pub fn velocity_to_reduced(&self, u: &FeFunction) -> Result<Vec<f64>> {
        self.check_velocity(u)?;
        let n = self.space.n_dofs();
        let nf = self.free_dofs.len();
        let mut out = vec![0.0; 2 * nf];
        for comp in 0..2 {
            for (k, &d) in self.free_dofs.iter().enumerate() {
                out[comp * nf + k] = u.coefficients()[comp * n + d];
            }
        }
        Ok(out)
    }

    /// Expands free velocity unknowns to a field with zero boundary values.
    pub fn velocity_from_reduced(&self, x: &[f64]) -> Result<FeFunction> {
        check_len(self.n_velocity(), x.len())?;
        let n = self.space.n_dofs();
        let nf = self.free_dofs.len();
        let mut coef = vec![0.0; 2 * n];
        for comp in 0..2 {
            for (k, &d) in self.free_dofs.iter().enumerate() {
                coef[comp * n + d] = x[comp * nf + k];
            }
        }
        FeFunction::from_coefficients(self.space.clone(), 2, coef)
    }

    pub fn pressure_from_vec(&self, p: Vec<f64>) -> Result<FeFunction> {
        FeFunction::from_coefficients(self.space.clone(), 1, p)
    }

    /// Reduced index of a free scalar dof, if any.
    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    fn check_velocity(&self, u: &FeFunction) -> Result<()> {
        if !Arc::ptr_eq(u.space(), &self.space) && u.space().n_dofs() != self.space.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: self.space.n_dofs(),
                found: u.space().n_dofs(),
            });
        }
        if u.components() != 2 {
            return Err(Error::invalid("expected a velocity field"));
        }
        Ok(())
    }

    fn check_pressure(&self, p: &FeFunction) -> Result<()> {
        check_len(self.space.n_dofs(), p.coefficients().len())?;
        if p.components() != 1 {
            return Err(Error::invalid("expected a pressure field"));
        }
        Ok(())
    }

    /// `x^T (block) y`. For `Form::B`, `x` is the velocity and `y` the
    /// pressure.
    pub fn form_eval(&self, form: Form, x: &FeFunction, y: &FeFunction) -> Result<f64> {
        let n = self.space.n_dofs();
        match form {
            Form::A | Form::R => {
                self.check_velocity(x)?;
                self.check_velocity(y)?;
                let mat = if form == Form::A {
                    &self.stiffness_full
                } else {
                    &self.mass_full
                };
                let (xc, yc) = (x.coefficients(), y.coefficients());
                Ok(mat.bilinear(&xc[..n], &yc[..n])? + mat.bilinear(&xc[n..], &yc[n..])?)
            }
            Form::B => {
                self.check_velocity(x)?;
                self.check_pressure(y)?;
                let xc = x.coefficients();
                Ok(self.bx_full.bilinear(y.coefficients(), &xc[..n])?
                    + self.by_full.bilinear(y.coefficients(), &xc[n..])?)
            }
            Form::S => {
                self.check_pressure(x)?;
                self.check_pressure(y)?;
                self.s.bilinear(x.coefficients(), y.coefficients())
            }
        }
    }

    /// `(|v|_1^2 + ||q||_0^2 + S_h(q, q))^{1/2}`.
    pub fn triple_norm(&self, v: &FeFunction, q: &FeFunction) -> Result<f64> {
        let a = self.form_eval(Form::A, v, v)?;
        self.check_pressure(q)?;
        let l2 = self
            .mass_full
            .bilinear(q.coefficients(), q.coefficients())?;
        let s = self.form_eval(Form::S, q, q)?;
        Ok((a + l2 + s).max(0.0).sqrt())
    }

    /// Saddle-point matrix `[[A, -B^T], [B, S]]` without the mean
    /// constraint; singular, with the constant pressure as kernel.
    pub fn saddle_matrix(&self) -> CsrMatrix {
        let nu = self.n_velocity();
        let n = nu + self.n_pressure();
        CsrMatrix::from_triplets(n, n, &self.saddle_triplets())
    }

    fn saddle_triplets(&self) -> Vec<(usize, usize, f64)> {
        let nu = self.n_velocity();
        let mut t = Vec::with_capacity(self.a.nnz() + 2 * self.b.nnz() + self.s.nnz());
        t.extend(self.a.triplets());
        for (r, col, v) in self.b.triplets() {
            t.push((nu + r, col, v));
            t.push((col, nu + r, -v));
        }
        t.extend(self.s.triplets().map(|(r, col, v)| (nu + r, nu + col, v)));
        t
    }

    /// Mean-constrained saddle-point matrix
    /// `[[A, -B^T, 0], [B, S, c], [0, c^T, 0]]`.
    pub fn augmented_matrix(&self) -> CsrMatrix {
        let nu = self.n_velocity();
        let np = self.n_pressure();
        let mut t = self.saddle_triplets();
        for (i, &ci) in self.c.iter().enumerate() {
            t.push((nu + i, nu + np, ci));
            t.push((nu + np, nu + i, ci));
        }
        let n = nu + np + 1;
        CsrMatrix::from_triplets(n, n, &t)
    }

    /// Coefficients of the constant pressure 1 (zero on bubbles).
    pub fn constant_pressure(&self) -> Vec<f64> {
        interpolate_scalar(&self.space, |_| 1.0).into_coefficients()
    }

    /// Factorization of [`augmented_matrix`](Self::augmented_matrix).
    pub fn factorize_augmented(&self) -> Result<BorderedFactorization> {
        BorderedFactorization::new(
            &self.saddle_matrix(),
            self.n_velocity(),
            &self.c,
            &self.constant_pressure(),
        )
    }

    /// Velocity load vector `(f, v_i)` for an analytic forcing.
    pub fn assemble_load(&self, f: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
        let rule = QuadratureRule::assembly();
        let table = tabulate(self.element(), &rule);
        let nf = self.free_dofs.len();
        let mut rhs = vec![0.0; 2 * nf];
        let mesh = self.mesh();
        for cell in 0..mesh.n_cells() {
            let geom = mesh.geometry(cell);
            let dofs = self.space.cell_dofs(cell);
            for (q, p) in rule.points.iter().enumerate() {
                let w = rule.weights[q] * geom.det;
                let fx = f(geom.map(*p));
                for (i, &d) in dofs.iter().enumerate() {
                    if let Some(k) = self.free_index[d] {
                        rhs[k] += w * fx[0] * table[q].values[i];
                        rhs[nf + k] += w * fx[1] * table[q].values[i];
                    }
                }
            }
        }
        rhs
    }

    /// Right-hand side `lambda * (u_h, v_i)` of the auxiliary source
    /// problem, where `coarse_u` lives on a mesh this system's mesh was
    /// refined from (or on the same mesh). Coarse values are evaluated at
    /// the fine quadrature points through the refinement hierarchy.
    pub fn assemble_source_rhs(&self, coarse_u: &FeFunction, lambda: f64) -> Result<Vec<f64>> {
        if coarse_u.components() != 2 {
            return Err(Error::invalid("source term needs a velocity field"));
        }
        let fine = self.mesh();
        let coarse = coarse_u.space().mesh();
        let depth = if Arc::ptr_eq(fine, coarse) {
            0
        } else {
            fine.nesting_depth(coarse)?
        };
        let rule = QuadratureRule::assembly();
        let table = tabulate(self.element(), &rule);
        let nf = self.free_dofs.len();
        let mut rhs = vec![0.0; 2 * nf];
        for cell in 0..fine.n_cells() {
            let geom = fine.geometry(cell);
            let parent = fine.ancestor(cell, depth);
            let parent_geom = coarse.geometry(parent);
            let dofs = self.space.cell_dofs(cell);
            for (q, p) in rule.points.iter().enumerate() {
                let w = lambda * rule.weights[q] * geom.det;
                let bary = if depth == 0 {
                    *p
                } else {
                    parent_geom.barycentric(geom.map(*p))
                };
                let (u, _) = coarse_u.eval_in_cell(parent, bary);
                for (i, &d) in dofs.iter().enumerate() {
                    if let Some(k) = self.free_index[d] {
                        rhs[k] += w * u[0] * table[q].values[i];
                        rhs[nf + k] += w * u[1] * table[q].values[i];
                    }
                }
            }
        }
        Ok(rhs)
    }
}

/// Assembles the stabilized blocks on `mesh`.
pub fn assemble_blocks(
    mesh: Arc<Mesh>,
    vel: ElementKind,
    pres: ElementKind,
    proj: ProjectionKind,
    alpha0: f64,
) -> Result<BlockSystem> {
    let stab = Stabilization::new(alpha0, AlphaScaling::HSquared)?;
    BlockSystem::assemble(mesh, vel, pres, proj, stab)
}
