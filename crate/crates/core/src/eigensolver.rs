//! Smallest eigenpairs of the stabilized discrete Stokes pencil.
//!
//! The bordered matrix `K` is factorized once and the velocity part of
//! `K^{-1} [M v; 0; 0]` is iterated as a block (shift-invert at zero). That
//! operator is self-adjoint and positive semidefinite in the `M` inner
//! product, so Rayleigh-Ritz on an `M`-orthonormal block gives real Ritz
//! values `theta = 1 / lambda`. The rank-deficient mass block only produces
//! infinite eigenvalues, which map to `theta = 0` and never surface.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{BlockSystem, Form};
use crate::error::{check_len, Error, Result};
use crate::linsolve::BorderedFactorization;
use crate::spaces::FeFunction;
use crate::sparse::CsrMatrix;

/// Seed of the start block, fixed so iteration counts are reproducible.
pub const START_SEED: u64 = 20_240_917;

/// Largest system accepted by the dense [`infsup_global`] estimate.
pub const MAX_DENSE_INFSUP: usize = 4000;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    /// Velocity, normalized so that `r(u, u) = 1`.
    pub u: FeFunction,
    /// Pressure with zero mean.
    pub p: FeFunction,
    /// Relative residual of the bordered system, see [`eig_residual`].
    pub residual: f64,
    /// Position in the ascending spectrum, starting at 0.
    pub index: usize,
}

/// Block size used for `m` requested pairs out of `n_u` finite ones.
pub fn block_size(m: usize, n_u: usize) -> usize {
    n_u.min((2 * m).max(m + 8))
}

/// The `m` smallest finite eigenpairs, ascending.
///
/// ```
/// use std::sync::Arc;
/// use stokes_lps::assembly::assemble_blocks;
/// use stokes_lps::eigensolver::solve_smallest;
/// use stokes_lps::mesh::Mesh;
/// use stokes_lps::spaces::{ElementKind, ProjectionKind};
///
/// let mesh = Arc::new(Mesh::unit_square(8).unwrap());
/// let sys = assemble_blocks(mesh, ElementKind::P1, ElementKind::P1, ProjectionKind::Zero, 0.1)
///     .unwrap();
/// let pairs = solve_smallest(&sys, 2, 1e-10, 200).unwrap();
/// assert!(pairs[0].lambda < pairs[1].lambda);
/// assert!(pairs.iter().all(|p| p.residual <= 1e-10));
/// ```
pub fn solve_smallest(
    sys: &BlockSystem,
    m: usize,
    tol: f64,
    max_iterations: usize,
) -> Result<Vec<EigenPair>> {
    let nu = sys.n_velocity();
    if m == 0 {
        return Err(Error::invalid("at least one eigenpair must be requested"));
    }
    if m > nu {
        return Err(Error::invalid(format!(
            "requested {m} eigenpairs but the pencil has only {nu} finite eigenvalues"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let lu = sys.factorize_augmented()?;

    let b = block_size(m, nu);
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let start = DMatrix::from_fn(nu, b, |_, _| rng.random_range(-1.0..1.0));
    let mut v = m_orthonormalize(&sys.m, &start, m)?;
    let mut best = f64::INFINITY;

    for _ in 0..max_iterations {
        let mv = mul_block(&sys.m, &v);
        let w = apply_inverse(&lu, &mv)?;
        let wu = w.rows(0, nu).into_owned();

        // H = V^T M (T V), symmetric up to solve error.
        let h = mv.transpose() * &wu;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let z = DMatrix::from_fn(order.len(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        let wz = &w * &z;

        let mut pairs = Vec::with_capacity(m);
        let mut worst: f64 = 0.0;
        for (i, &col) in order.iter().take(m).enumerate() {
            let theta = eig.eigenvalues[col];
            if theta.is_nan() || theta <= 0.0 {
                worst = f64::INFINITY;
                break;
            }
            let pair = make_pair(sys, 1.0 / theta, wz.column(i).as_slice(), i)?;
            worst = worst.max(pair.residual);
            pairs.push(pair);
        }
        best = best.min(worst);
        if worst <= tol {
            return Ok(pairs);
        }
        v = m_orthonormalize(&sys.m, &wz.rows(0, nu).into_owned(), m)?;
    }
    Err(Error::ConvergenceFailure {
        iterations: max_iterations,
        best_residual: best,
    })
}

/// Normalizes an augmented vector into an [`EigenPair`] and measures its
/// residual.
fn make_pair(sys: &BlockSystem, lambda: f64, x: &[f64], index: usize) -> Result<EigenPair> {
    let nu = sys.n_velocity();
    let np = sys.n_pressure();
    let norm = sys.m.bilinear(&x[..nu], &x[..nu])?.sqrt();
    let pivot = x[..nu]
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, v)| {
            if v.abs() > bv.abs() {
                (i, *v)
            } else {
                (bi, bv)
            }
        })
        .0;
    let scale = x[pivot].signum() / norm;
    let u: Vec<f64> = x[..nu].iter().map(|v| v * scale).collect();
    let p: Vec<f64> = x[nu..nu + np].iter().map(|v| v * scale).collect();
    let mut pair = EigenPair {
        lambda,
        u: sys.velocity_from_reduced(&u)?,
        p: sys.pressure_from_vec(p)?,
        residual: 0.0,
        index,
    };
    pair.residual = eig_residual(sys, &pair)?;
    Ok(pair)
}

fn mul_block(a: &CsrMatrix, v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), v.ncols());
    for j in 0..v.ncols() {
        let y = a
            .mul_vec(v.column(j).as_slice())
            .expect("block height matches");
        out.column_mut(j).copy_from_slice(&y);
    }
    out
}

/// `K^{-1} [rhs; 0; 0]` column by column.
fn apply_inverse(lu: &BorderedFactorization, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = lu.dim();
    let cols: Vec<Vec<f64>> = (0..rhs.ncols())
        .map(|j| {
            let mut b = vec![0.0; n];
            b[..rhs.nrows()].copy_from_slice(rhs.column(j).as_slice());
            b
        })
        .collect();
    let x = lu.solve_many(&cols)?;
    Ok(DMatrix::from_fn(n, x.len(), |i, j| x[j][i]))
}

/// `M`-orthonormal basis of the column span, via two passes of an
/// eigen-decomposed Gram matrix (directions with negligible weight are
/// dropped).
fn m_orthonormalize(m: &CsrMatrix, y: &DMatrix<f64>, min_cols: usize) -> Result<DMatrix<f64>> {
    let mut y = y.clone();
    for _ in 0..2 {
        let my = mul_block(m, &y);
        let g = y.transpose() * my;
        let g = (&g + g.transpose()) * 0.5;
        let eig = SymmetricEigen::new(g);
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > 1e-14 * top)
            .collect();
        if keep.len() < min_cols {
            return Err(Error::Singular {
                detail: Some("iteration block lost rank".into()),
            });
        }
        let basis = DMatrix::from_fn(y.ncols(), keep.len(), |r, c| {
            eig.eigenvectors[(r, keep[c])] / eig.eigenvalues[keep[c]].sqrt()
        });
        y = &y * basis;
    }
    Ok(y)
}

/// `||K x - lambda diag(M, 0, 0) x|| / ||diag(M, 0, 0) x||` with the mean
/// multiplier set to zero (its exact value for any eigenpair).
pub fn eig_residual(sys: &BlockSystem, pair: &EigenPair) -> Result<f64> {
    let u = sys.velocity_to_reduced(&pair.u)?;
    check_len(sys.n_pressure(), pair.p.coefficients().len())?;
    let mu = sys.m.mul_vec(&u)?;
    let mass_norm = norm2(&mu);
    if mass_norm == 0.0 {
        return Err(Error::invalid("zero eigenvector"));
    }
    let mut x = u;
    x.extend_from_slice(pair.p.coefficients());
    x.push(0.0);
    let mut r = sys.augmented_matrix().mul_vec(&x)?;
    for (ri, mi) in r.iter_mut().zip(&mu) {
        *ri -= pair.lambda * mi;
    }
    Ok(norm2(&r) / mass_norm)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `a(u, u) / r(u, u)`.
pub fn rayleigh_quotient(sys: &BlockSystem, u: &FeFunction) -> Result<f64> {
    let r = sys.form_eval(Form::R, u, u)?;
    if r == 0.0 {
        return Err(Error::invalid("Rayleigh quotient of the zero field"));
    }
    Ok(sys.form_eval(Form::A, u, u)? / r)
}

/// Dense estimate of the inf-sup constant of the stabilized form in the
/// triple norm.
///
/// With `N = diag(A, M_p + S) = L L^T`, the constant is the smallest
/// singular value of `L^{-1} K L^{-T}` on mean-free pressures. The symmetric
/// variant `diag(I, -I) K` has the same singular values, so a symmetric
/// eigensolve suffices; the single zero eigenvalue belongs to the constant
/// pressure and is discarded.
pub fn infsup_global(sys: &BlockSystem) -> Result<f64> {
    let nu = sys.n_velocity();
    let np = sys.n_pressure();
    if nu + np > MAX_DENSE_INFSUP {
        return Err(Error::invalid(format!(
            "dense inf-sup estimate limited to {MAX_DENSE_INFSUP} unknowns, system has {}",
            nu + np
        )));
    }
    let a = sys.a.to_dense();
    let b = sys.b.to_dense();
    let s = sys.s.to_dense();
    let np_norm = sys.mass_full.to_dense() + &s;
    let singular = |what: &str| Error::Singular {
        detail: Some(format!("{what} block is not positive definite")),
    };
    let la = a.clone().cholesky().ok_or_else(|| singular("velocity"))?;
    let lp = np_norm.cholesky().ok_or_else(|| singular("pressure"))?;
    let (la, lp) = (la.l(), lp.l());

    let n = nu + np;
    let mut ks = DMatrix::zeros(n, n);
    ks.view_mut((0, 0), (nu, nu)).copy_from(&a);
    ks.view_mut((0, nu), (nu, np)).copy_from(&(-b.transpose()));
    ks.view_mut((nu, 0), (np, nu)).copy_from(&(-&b));
    ks.view_mut((nu, nu), (np, np)).copy_from(&(-&s));

    let mut linv = DMatrix::zeros(n, n);
    linv.view_mut((0, 0), (nu, nu)).copy_from(&la);
    linv.view_mut((nu, nu), (np, np)).copy_from(&lp);
    // H = L^{-1} K_s L^{-T}
    let left = linv
        .solve_lower_triangular(&ks)
        .ok_or_else(|| singular("norm"))?;
    let h = linv
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| singular("norm"))?;
    let h = (&h + h.transpose()) * 0.5;
    let mut values: Vec<f64> = h.symmetric_eigenvalues().iter().map(|v| v.abs()).collect();
    values.sort_by(f64::total_cmp);
    Ok(values[1])
}
