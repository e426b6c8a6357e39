//! Reference shape functions written in barycentric coordinates.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::mesh::Bary;

/// Maximum number of local shape functions of any supported element.
pub const MAX_LOCAL: usize = 9;

/// Scalar continuous element used for each velocity component and for the
/// pressure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    /// Piecewise linears.
    P1,
    /// Piecewise quadratics enriched with `phi_K * P1`, where
    /// `phi_K = l0 l1 l2` is the cubic bubble. Local functions are ordered
    /// as three vertex, three edge and three bubble functions.
    P2Bubble,
}

impl ElementKind {
    pub fn n_local(self) -> usize {
        match self {
            ElementKind::P1 => 3,
            ElementKind::P2Bubble => 9,
        }
    }

    /// Polynomial degree of the richest local function.
    pub fn degree(self) -> usize {
        match self {
            ElementKind::P1 => 1,
            ElementKind::P2Bubble => 4,
        }
    }

    /// Barycentric coordinates of the nodal point attached to each local
    /// function. All three bubble functions share the barycenter.
    pub fn nodal_points(self) -> &'static [Bary] {
        const T: f64 = 1.0 / 3.0;
        match self {
            ElementKind::P1 => &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            ElementKind::P2Bubble => &[
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [0.0, 0.5, 0.5],
                [0.5, 0.0, 0.5],
                [0.5, 0.5, 0.0],
                [T, T, T],
                [T, T, T],
                [T, T, T],
            ],
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::P1 => "P1",
            ElementKind::P2Bubble => "P2Bubble",
        })
    }
}

impl FromStr for ElementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(ElementKind::P1),
            "p2bubble" | "p2+" | "p2b" => Ok(ElementKind::P2Bubble),
            other => Err(Error::invalid(format!("unknown element kind `{other}`"))),
        }
    }
}

/// Values and reference gradients (with respect to `s = l1`, `t = l2`) of
/// all local shape functions at one point.
#[derive(Debug, Clone, Copy)]
pub struct BasisValues {
    pub n: usize,
    pub values: [f64; MAX_LOCAL],
    pub ref_grads: [[f64; 2]; MAX_LOCAL],
}

impl BasisValues {
    pub fn values(&self) -> &[f64] {
        &self.values[..self.n]
    }

    pub fn ref_grads(&self) -> &[[f64; 2]] {
        &self.ref_grads[..self.n]
    }
}

/// Evaluates the shape functions of `kind` at `bary`.
pub fn eval_basis(kind: ElementKind, bary: Bary) -> BasisValues {
    // Partial derivatives with respect to (l0, l1, l2) are collected first
    // and then chained to (s, t) via l0 = 1 - s - t.
    let mut values = [0.0; MAX_LOCAL];
    let mut dl = [[0.0; 3]; MAX_LOCAL];
    let l = bary;
    match kind {
        ElementKind::P1 => {
            for i in 0..3 {
                values[i] = l[i];
                dl[i][i] = 1.0;
            }
        }
        ElementKind::P2Bubble => {
            for i in 0..3 {
                values[i] = l[i] * (2.0 * l[i] - 1.0);
                dl[i][i] = 4.0 * l[i] - 1.0;
            }
            for k in 0..3 {
                let (j, m) = ((k + 1) % 3, (k + 2) % 3);
                values[3 + k] = 4.0 * l[j] * l[m];
                dl[3 + k][j] = 4.0 * l[m];
                dl[3 + k][m] = 4.0 * l[j];
            }
            // 81 l0 l1 l2 l_i equals one at the barycenter.
            let phi = l[0] * l[1] * l[2];
            let dphi = [l[1] * l[2], l[0] * l[2], l[0] * l[1]];
            for i in 0..3 {
                values[6 + i] = 81.0 * phi * l[i];
                for m in 0..3 {
                    dl[6 + i][m] = 81.0 * dphi[m] * l[i];
                }
                dl[6 + i][i] += 81.0 * phi;
            }
        }
    }
    let n = kind.n_local();
    let mut ref_grads = [[0.0; 2]; MAX_LOCAL];
    for i in 0..n {
        ref_grads[i] = [dl[i][1] - dl[i][0], dl[i][2] - dl[i][0]];
    }
    BasisValues {
        n,
        values,
        ref_grads,
    }
}
