//! Symmetric Gauss rules on the reference triangle.
//!
//! Points are stored as barycentric triples and weights are scaled to the
//! reference triangle's area of 1/2. The orbit coefficients were refined to
//! well beyond double precision before being written out, so every rule is
//! exact to its degree up to rounding.

// Coefficients are written out at their full computed length.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use crate::mesh::Bary;

/// Highest degree for which a rule is available.
pub const MAX_DEGREE: usize = 8;

/// Degree used for all assembly.
pub const ASSEMBLY_DEGREE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Bary>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

#[derive(Clone, Copy)]
enum Orbit {
    Centroid(f64),
    /// Point `(a, a, 1 - 2a)` and its permutations.
    S21(f64, f64),
    /// Point `(a, b, 1 - a - b)` and its permutations.
    S111(f64, f64, f64),
}

use Orbit::*;

const ONE_THIRD: f64 = 0.333_333_333_333_333_333_333_3;

// (exact degree, orbits); weights already include the factor 1/2.
const RULES: &[(usize, &[Orbit])] = &[
    (1, &[Centroid(0.5)]),
    (2, &[S21(0.5, 0.166_666_666_666_666_666_666_7)]),
    (
        4,
        &[
            S21(
                0.445_948_490_915_964_886_318_3,
                0.111_690_794_839_005_732_847_5,
            ),
            S21(
                0.091_576_213_509_770_743_459_57,
                0.054_975_871_827_660_933_819_16,
            ),
        ],
    ),
    (
        5,
        &[
            Centroid(0.1125),
            S21(
                0.101_286_507_323_456_338_801,
                0.062_969_590_272_413_576_297_84,
            ),
            S21(
                0.470_142_064_105_115_089_770_4,
                0.066_197_076_394_253_090_368_82,
            ),
        ],
    ),
    (
        6,
        &[
            S21(
                0.249_286_745_170_910_421_291_6,
                0.058_393_137_863_189_683_012_64,
            ),
            S21(
                0.063_089_014_491_502_228_340_33,
                0.025_422_453_185_103_408_460_47,
            ),
            S111(
                0.053_145_049_844_816_947_353_25,
                0.310_352_451_033_784_405_416_6,
                0.041_425_537_809_186_787_596_78,
            ),
        ],
    ),
    (
        8,
        &[
            Centroid(0.072_157_803_838_893_584_125_55),
            S21(
                0.459_292_588_292_723_156_028_8,
                0.047_545_817_133_642_312_396_95,
            ),
            S21(
                0.170_569_307_751_760_206_622_3,
                0.051_608_685_267_359_125_140_9,
            ),
            S21(
                0.050_547_228_317_030_975_458_42,
                0.016_229_248_811_599_040_155_46,
            ),
            S111(
                0.008_394_777_409_957_605_337_214,
                0.263_112_829_634_638_113_421_8,
                0.013_615_157_087_217_497_132_42,
            ),
        ],
    ),
];

impl QuadratureRule {
    /// The smallest stored rule that integrates every polynomial of total
    /// degree `degree` exactly.
    pub fn for_degree(degree: usize) -> Result<QuadratureRule> {
        let &(exact_degree, orbits) =
            RULES
                .iter()
                .find(|(d, _)| *d >= degree)
                .ok_or(Error::UnsupportedDegree {
                    requested: degree,
                    max: MAX_DEGREE,
                })?;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &orbit in orbits {
            match orbit {
                Centroid(w) => {
                    points.push([ONE_THIRD; 3]);
                    weights.push(w);
                }
                S21(a, w) => {
                    let b = 1.0 - 2.0 * a;
                    for p in [[a, a, b], [a, b, a], [b, a, a]] {
                        points.push(p);
                        weights.push(w);
                    }
                }
                S111(a, b, w) => {
                    let c = 1.0 - a - b;
                    for p in [
                        [a, b, c],
                        [a, c, b],
                        [b, a, c],
                        [b, c, a],
                        [c, a, b],
                        [c, b, a],
                    ] {
                        points.push(p);
                        weights.push(w);
                    }
                }
            }
        }
        Ok(QuadratureRule {
            points,
            weights,
            exact_degree,
        })
    }

    /// The degree-8 rule used throughout assembly.
    pub fn assembly() -> QuadratureRule {
        Self::for_degree(ASSEMBLY_DEGREE).expect("assembly degree is supported")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integral over the reference triangle of `f(s, t)`.
    pub fn integrate_reference(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[1], p[2]))
            .sum()
    }
}
