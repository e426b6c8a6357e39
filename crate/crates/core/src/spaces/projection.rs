//! Cellwise L2 projection onto discontinuous polynomials and the associated
//! fluctuation operator `kappa = id - pi`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::CellGeometry;
use crate::quadrature::QuadratureRule;
use crate::spaces::dofmap::FeFunction;
use crate::spaces::element::{eval_basis, ElementKind};

/// Local projection space `D_h(K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionKind {
    /// `D_h(K) = {0}`: the fluctuation is the identity.
    Zero,
    /// Polynomials of total degree `s` on each cell.
    PDisc(usize),
}

impl ProjectionKind {
    pub fn dim(self) -> usize {
        match self {
            ProjectionKind::Zero => 0,
            ProjectionKind::PDisc(s) => (s + 1) * (s + 2) / 2,
        }
    }

    pub fn degree(self) -> Option<usize> {
        match self {
            ProjectionKind::Zero => None,
            ProjectionKind::PDisc(s) => Some(s),
        }
    }
}

impl fmt::Display for ProjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionKind::Zero => f.write_str("Zero"),
            ProjectionKind::PDisc(s) => write!(f, "PDisc{s}"),
        }
    }
}

impl FromStr for ProjectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "zero" || lower == "p-1" {
            return Ok(ProjectionKind::Zero);
        }
        lower
            .strip_prefix("pdisc")
            .and_then(|d| d.parse().ok())
            .map(ProjectionKind::PDisc)
            .ok_or_else(|| Error::invalid(format!("unknown projection kind `{s}`")))
    }
}

/// Monomials `s^a t^b`, `a + b <= degree`, in reference coordinates.
fn monomials(degree: usize, s: f64, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity((degree + 1) * (degree + 2) / 2);
    for total in 0..=degree {
        for b in 0..=total {
            out.push(s.powi((total - b) as i32) * t.powi(b as i32));
        }
    }
    out
}

/// Projection matrix acting on samples at the points of one quadrature
/// rule: `(pi g)(x_q) = sum_r P[q, r] g(x_r)`.
///
/// The matrix does not depend on the cell: for an affine map both the Gram
/// matrix and the moments scale with the same Jacobian determinant.
#[derive(Debug, Clone)]
pub struct LocalProjector {
    kind: ProjectionKind,
    matrix: Option<DMatrix<f64>>,
}

impl LocalProjector {
    pub fn new(kind: ProjectionKind, rule: &QuadratureRule) -> Result<LocalProjector> {
        let matrix = match kind {
            ProjectionKind::Zero => None,
            ProjectionKind::PDisc(s) => {
                if 2 * s > rule.exact_degree {
                    return Err(Error::invalid(format!(
                        "a degree-{} rule cannot build the PDisc({s}) Gram matrix",
                        rule.exact_degree
                    )));
                }
                let nq = rule.len();
                let nd = kind.dim();
                let mut d = DMatrix::zeros(nq, nd);
                for (q, p) in rule.points.iter().enumerate() {
                    for (a, v) in monomials(s, p[1], p[2]).into_iter().enumerate() {
                        d[(q, a)] = v;
                    }
                }
                let w = DMatrix::from_diagonal(&DVector::from_column_slice(&rule.weights));
                let dtw = d.transpose() * &w;
                let gram = &dtw * &d;
                let chol = gram.cholesky().expect("projection Gram matrix is SPD");
                Some(&d * chol.solve(&dtw))
            }
        };
        Ok(LocalProjector { kind, matrix })
    }

    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    /// Replaces scalar samples by their projection.
    pub fn project(&self, samples: &[f64]) -> Vec<f64> {
        match &self.matrix {
            None => vec![0.0; samples.len()],
            Some(p) => (p * DVector::from_column_slice(samples))
                .as_slice()
                .to_vec(),
        }
    }

    /// Applies `kappa = id - pi` componentwise to vector samples in place.
    pub fn fluctuate(&self, samples: &mut [[f64; 2]]) {
        let Some(p) = &self.matrix else {
            return;
        };
        let n = samples.len();
        let mut proj = vec![[0.0; 2]; n];
        for q in 0..n {
            for r in 0..n {
                let m = p[(q, r)];
                proj[q][0] += m * samples[r][0];
                proj[q][1] += m * samples[r][1];
            }
        }
        for (s, pr) in samples.iter_mut().zip(proj) {
            s[0] -= pr[0];
            s[1] -= pr[1];
        }
    }
}

/// Samples of `kappa_h grad q` at the points of `rule` on `cell`.
pub fn fluctuation_apply(
    q: &FeFunction,
    proj: ProjectionKind,
    cell: usize,
    rule: &QuadratureRule,
) -> Result<Vec<[f64; 2]>> {
    if q.components() != 1 {
        return Err(Error::invalid("fluctuation acts on scalar fields"));
    }
    let grad_degree = q.space().element().degree().saturating_sub(1);
    let need = 2 * grad_degree.max(proj.degree().unwrap_or(0));
    if rule.exact_degree < need {
        return Err(Error::invalid(format!(
            "fluctuation needs a rule exact to degree {need}, got {}",
            rule.exact_degree
        )));
    }
    let mut samples: Vec<[f64; 2]> = rule
        .points
        .iter()
        .map(|&p| q.eval_in_cell(cell, p).1[0])
        .collect();
    LocalProjector::new(proj, rule)?.fluctuate(&mut samples);
    Ok(samples)
}

/// Outcome of the local inf-sup diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalInfSup {
    /// `D_h(K) = {0}`, so there is nothing to check.
    Vacuous,
    Beta(f64),
}

/// Smallest singular value of the L2-normalized coupling between the
/// functions of `vel` supported inside one cell and `D_h(K)`.
pub fn local_infsup_check(
    geom: &CellGeometry,
    vel: ElementKind,
    proj: ProjectionKind,
) -> Result<LocalInfSup> {
    let ProjectionKind::PDisc(s) = proj else {
        return Ok(LocalInfSup::Vacuous);
    };
    let interior: Vec<usize> = match vel {
        ElementKind::P1 => Vec::new(),
        ElementKind::P2Bubble => vec![6, 7, 8],
    };
    let nd = proj.dim();
    if interior.len() < nd {
        return Ok(LocalInfSup::Beta(0.0));
    }
    let rule = QuadratureRule::for_degree(vel.degree() + s)?;
    let gram_rule = QuadratureRule::for_degree(2 * vel.degree().max(s))?;
    let nv = interior.len();
    // Projection-space basis in physical monomials centered at the
    // barycenter, so the check sees the actual cell.
    let center = geom.map([1.0 / 3.0; 3]);
    let dbasis = |l: [f64; 3]| {
        let x = geom.map(l);
        monomials(s, x[0] - center[0], x[1] - center[1])
    };
    let accumulate = |rule: &QuadratureRule,
                      f: &dyn Fn([f64; 3]) -> (Vec<f64>, Vec<f64>)|
     -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let mut gv = DMatrix::zeros(nv, nv);
        let mut gd = DMatrix::zeros(nd, nd);
        let mut c = DMatrix::zeros(nv, nd);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let w = w * geom.det;
            let (v, d) = f(*p);
            for i in 0..nv {
                for j in 0..nv {
                    gv[(i, j)] += w * v[i] * v[j];
                }
                for j in 0..nd {
                    c[(i, j)] += w * v[i] * d[j];
                }
            }
            for i in 0..nd {
                for j in 0..nd {
                    gd[(i, j)] += w * d[i] * d[j];
                }
            }
        }
        (gv, gd, c)
    };
    let eval = |l: [f64; 3]| {
        let b = eval_basis(vel, l);
        (interior.iter().map(|&i| b.values[i]).collect(), dbasis(l))
    };
    let (gv, gd, _) = accumulate(&gram_rule, &eval);
    let (_, _, c) = accumulate(&rule, &eval);
    let lv = gv.cholesky().ok_or(Error::Singular {
        detail: Some("interior Gram".into()),
    })?;
    let ld = gd.cholesky().ok_or(Error::Singular {
        detail: Some("projection Gram".into()),
    })?;
    let lv_inv = lv
        .l()
        .try_inverse()
        .expect("triangular factor is invertible");
    let ld_inv = ld
        .l()
        .try_inverse()
        .expect("triangular factor is invertible");
    let normalized: DMatrix<f64> = lv_inv * c * ld_inv.transpose();
    let sv = normalized.singular_values();
    Ok(LocalInfSup::Beta(sv.min()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::spaces::dofmap::{build_space, interpolate_scalar};
    use std::sync::Arc;

    fn p2_space(n: usize) -> Arc<crate::spaces::DofMap> {
        build_space(
            Arc::new(Mesh::unit_square(n).unwrap()),
            ElementKind::P2Bubble,
        )
    }

    #[test]
    fn zero_projection_is_identity_fluctuation() {
        let s = p2_space(2);
        let q = interpolate_scalar(&s, |p| (p[0] * 3.0).sin() + p[1] * p[1]);
        let rule = QuadratureRule::assembly();
        let out = fluctuation_apply(&q, ProjectionKind::Zero, 3, &rule).unwrap();
        for (o, p) in out.iter().zip(&rule.points) {
            assert_eq!(*o, q.eval_in_cell(3, *p).1[0]);
        }
    }

    #[test]
    fn linear_pressure_has_no_fluctuation() {
        let s = p2_space(2);
        let q = interpolate_scalar(&s, |p| 1.5 * p[0] - 0.25 * p[1] + 2.0);
        let rule = QuadratureRule::assembly();
        for cell in 0..s.mesh().n_cells() {
            for g in fluctuation_apply(&q, ProjectionKind::PDisc(1), cell, &rule).unwrap() {
                assert!(g[0].abs() < 1e-13 && g[1].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn projection_matches_dense_least_squares() {
        // Oracle: normal equations for the best P1 fit in physical
        // coordinates, assembled independently of LocalProjector.
        let s = p2_space(2);
        let q = interpolate_scalar(&s, |p| p[0].powi(3));
        let rule = QuadratureRule::assembly();
        let cell = 5;
        let geom = s.mesh().geometry(cell);
        let kappa = fluctuation_apply(&q, ProjectionKind::PDisc(1), cell, &rule).unwrap();

        let mut oracle_norm = 0.0;
        let mut ours_norm = 0.0;
        for comp in 0..2 {
            let mut a = DMatrix::<f64>::zeros(3, 3);
            let mut rhs = DVector::<f64>::zeros(3);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let x = geom.map(*p);
                let phi = [1.0, x[0], x[1]];
                let g = q.eval_in_cell(cell, *p).1[0][comp];
                for i in 0..3 {
                    rhs[i] += w * geom.det * phi[i] * g;
                    for j in 0..3 {
                        a[(i, j)] += w * geom.det * phi[i] * phi[j];
                    }
                }
            }
            let coef = a.lu().solve(&rhs).unwrap();
            for ((p, w), k) in rule.points.iter().zip(&rule.weights).zip(&kappa) {
                let x = geom.map(*p);
                let g = q.eval_in_cell(cell, *p).1[0][comp];
                let fit = coef[0] + coef[1] * x[0] + coef[2] * x[1];
                oracle_norm += w * geom.det * (g - fit).powi(2);
                ours_norm += w * geom.det * k[comp].powi(2);
                assert!((g - fit - k[comp]).abs() < 1e-12);
            }
        }
        assert!((oracle_norm.sqrt() - ours_norm.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn projection_idempotent_and_orthogonal() {
        let rule = QuadratureRule::assembly();
        let p = LocalProjector::new(ProjectionKind::PDisc(1), &rule).unwrap();
        let samples: Vec<f64> = rule
            .points
            .iter()
            .map(|l| (5.0 * l[1]).exp() * l[2])
            .collect();
        let once = p.project(&samples);
        let twice = p.project(&once);
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-13);
        }
        // Residual orthogonal to 1, s, t in the quadrature inner product.
        for basis in [|_: &[f64; 3]| 1.0, |l: &[f64; 3]| l[1], |l: &[f64; 3]| l[2]] {
            let ip: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .zip(samples.iter().zip(&once))
                .map(|((l, w), (s, o))| w * (s - o) * basis(l))
                .sum();
            assert!(ip.abs() < 1e-12);
        }
    }

    #[test]
    fn fluctuation_decays_under_refinement() {
        let f = |p: [f64; 2]| (2.0 * p[0]).sin() * (3.0 * p[1]).cos();
        let rule = QuadratureRule::assembly();
        let norms: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&n| {
                let s = p2_space(n);
                let q = interpolate_scalar(&s, f);
                let mut total = 0.0;
                for cell in 0..s.mesh().n_cells() {
                    let det = s.mesh().geometry(cell).det;
                    let k = fluctuation_apply(&q, ProjectionKind::PDisc(1), cell, &rule).unwrap();
                    for (g, w) in k.iter().zip(&rule.weights) {
                        total += w * det * (g[0] * g[0] + g[1] * g[1]);
                    }
                }
                total.sqrt()
            })
            .collect();
        for w in norms.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 0.9, "observed order {order}");
        }
    }

    #[test]
    fn local_infsup_values() {
        let reference = CellGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let LocalInfSup::Beta(beta) =
            local_infsup_check(&reference, ElementKind::P2Bubble, ProjectionKind::PDisc(1))
                .unwrap()
        else {
            panic!("expected a value");
        };
        assert!(beta > 0.1, "beta {beta}");

        let shifted = CellGeometry::new([[3.0, -2.0], [4.0, -2.0], [3.0, -1.0]]);
        let LocalInfSup::Beta(b2) =
            local_infsup_check(&shifted, ElementKind::P2Bubble, ProjectionKind::PDisc(1)).unwrap()
        else {
            panic!("expected a value");
        };
        assert!((beta - b2).abs() < 1e-13);

        assert_eq!(
            local_infsup_check(&reference, ElementKind::P2Bubble, ProjectionKind::Zero).unwrap(),
            LocalInfSup::Vacuous
        );
        assert_eq!(
            local_infsup_check(&reference, ElementKind::P1, ProjectionKind::PDisc(1)).unwrap(),
            LocalInfSup::Beta(0.0)
        );
    }

    #[test]
    fn parse_kinds() {
        assert_eq!(
            "PDisc1".parse::<ProjectionKind>().unwrap(),
            ProjectionKind::PDisc(1)
        );
        assert_eq!(
            "zero".parse::<ProjectionKind>().unwrap(),
            ProjectionKind::Zero
        );
        assert!("pdisc".parse::<ProjectionKind>().is_err());
    }
}
