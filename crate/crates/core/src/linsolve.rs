//! Sparse direct solves for the bordered saddle-point matrices.
//!
//! Factorization is a fill-reducing, partially pivoted sparse LU provided
//! by `faer`. The LU does not report tiny pivots, so after factorizing we
//! solve against a manufactured right-hand side and reject the factor if
//! the known solution is not recovered.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{check_len, Error, Result};
use crate::sparse::CsrMatrix;

/// Relative error on the manufactured probe above which the matrix is
/// declared singular.
const PROBE_TOL: f64 = 1e-6;

pub struct Factorization {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    dim: usize,
    nnz: usize,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("dim", &self.dim)
            .field("nnz", &self.nnz)
            .finish()
    }
}

impl Factorization {
    pub fn new(a: &CsrMatrix) -> Result<Factorization> {
        factorize(a)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored entries of the factorized matrix.
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, b.len())?;
        Ok(self.solve_unchecked(b))
    }

    /// Solves for several right-hand sides at once.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        for b in rhs {
            check_len(self.dim, b.len())?;
        }
        if rhs.is_empty() {
            return Ok(Vec::new());
        }
        let b = Mat::from_fn(self.dim, rhs.len(), |i, j| rhs[j][i]);
        let x = self.lu.solve(&b);
        Ok((0..rhs.len())
            .map(|j| (0..self.dim).map(|i| x[(i, j)]).collect())
            .collect())
    }

    fn solve_unchecked(&self, b: &[f64]) -> Vec<f64> {
        let b = Mat::from_fn(self.dim, 1, |i, _| b[i]);
        let x = self.lu.solve(&b);
        (0..self.dim).map(|i| x[(i, 0)]).collect()
    }
}

/// Factorizes a square sparse matrix.
pub fn factorize(a: &CsrMatrix) -> Result<Factorization> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let n = a.nrows();
    if n == 0 {
        return Err(Error::invalid("cannot factorize an empty matrix"));
    }
    let scale = a.max_abs();
    if scale == 0.0 {
        return Err(Error::Singular {
            detail: Some("zero matrix".into()),
        });
    }
    let triplets: Vec<_> = a
        .triplets()
        .map(|(r, c, v)| Triplet::new(r, c, v))
        .collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::invalid(format!("bad sparse structure: {e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| Error::Singular {
        detail: Some(format!("{e:?}")),
    })?;
    let f = Factorization {
        lu,
        dim: n,
        nnz: a.nnz(),
    };

    // Probe: x* = (1, 1, ..., 1) scaled to unit size, b = A x*.
    let ones = vec![1.0; n];
    let b = a.mul_vec(&ones)?;
    let x = f.solve_unchecked(&b);
    // `f64::max` drops NaN, so finiteness is checked separately.
    let err = x.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    if x.iter().any(|v| !v.is_finite()) || err > PROBE_TOL {
        return Err(Error::Singular {
            detail: Some(format!("probe solve error {err:.3e}")),
        });
    }
    Ok(f)
}

/// Solver for a matrix bordered by one constraint row and column,
///
/// ```text
/// [ K0   c ] [x]   [g]
/// [ c^T  0 ] [mu] = [gamma]
/// ```
///
/// where `K0` has the one-dimensional kernel spanned by `z` (and the same
/// left kernel), with `c` and `z` supported on the index block starting at
/// `offset` and `c^T z != 0`. Factorizing the bordered matrix directly puts
/// a dense row and column in front of the fill-reducing ordering, so the
/// border is eliminated instead: `mu = z^T g / z^T c`, then `K0 x = g - c mu`
/// is solved with the entry of largest `|z|` pinned to zero, and finally a
/// multiple of `z` restores `c^T x = gamma`.
pub struct BorderedFactorization {
    inner: Factorization,
    offset: usize,
    c: Vec<f64>,
    z: Vec<f64>,
    pinned: usize,
}

impl std::fmt::Debug for BorderedFactorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BorderedFactorization")
            .field("inner", &self.inner)
            .field("offset", &self.offset)
            .field("pinned", &self.pinned)
            .finish()
    }
}

impl BorderedFactorization {
    pub fn new(k0: &CsrMatrix, offset: usize, c: &[f64], z: &[f64]) -> Result<Self> {
        check_len(c.len(), z.len())?;
        if offset + c.len() > k0.nrows() {
            return Err(Error::invalid("constraint block exceeds the matrix"));
        }
        let cz: f64 = c.iter().zip(z).map(|(a, b)| a * b).sum();
        if c.is_empty() || cz.abs() <= f64::EPSILON * norm(c) * norm(z) {
            return Err(Error::Singular {
                detail: Some("constraint does not fix the kernel direction".into()),
            });
        }
        let pin = z
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, v)| {
                if v.abs() > best.1 {
                    (i, v.abs())
                } else {
                    best
                }
            })
            .0;
        let pinned = offset + pin;
        let t: Vec<_> = k0
            .triplets()
            .filter(|&(r, col, _)| r != pinned && col != pinned)
            .chain(std::iter::once((pinned, pinned, 1.0)))
            .collect();
        let inner = factorize(&CsrMatrix::from_triplets(k0.nrows(), k0.ncols(), &t))?;
        Ok(BorderedFactorization {
            inner,
            offset,
            c: c.to_vec(),
            z: z.to_vec(),
            pinned,
        })
    }

    /// Dimension of the bordered system, one more than `K0`.
    pub fn dim(&self) -> usize {
        self.inner.dim() + 1
    }

    /// Solves the bordered system; `rhs` and the result have length
    /// [`dim`](Self::dim), the multiplier last.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_many(&[rhs.to_vec()])?.remove(0))
    }

    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let n = self.inner.dim();
        let range = self.offset..self.offset + self.c.len();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let cz = dot(&self.c, &self.z);
        let mut reduced = Vec::with_capacity(rhs.len());
        let mut mus = Vec::with_capacity(rhs.len());
        for b in rhs {
            check_len(n + 1, b.len())?;
            let mu = dot(&self.z, &b[range.clone()]) / cz;
            let mut g = b[..n].to_vec();
            for (gi, ci) in g[range.clone()].iter_mut().zip(&self.c) {
                *gi -= ci * mu;
            }
            g[self.pinned] = 0.0;
            reduced.push(g);
            mus.push(mu);
        }
        let xs = self.inner.solve_many(&reduced)?;
        Ok(xs
            .into_iter()
            .zip(rhs.iter().zip(mus))
            .map(|(mut x, (b, mu))| {
                let shift = (b[n] - dot(&self.c, &x[range.clone()])) / cz;
                for (xi, zi) in x[range.clone()].iter_mut().zip(&self.z) {
                    *xi += shift * zi;
                }
                x.push(mu);
                x
            })
            .collect())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||A x - b|| / ||b||` (or `||A x||` when `b = 0`).
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    let ax = a.mul_vec(x)?;
    check_len(b.len(), ax.len())?;
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(if nb > 0.0 { r / nb } else { r })
}
