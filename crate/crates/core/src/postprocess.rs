//! Eigenvalue postprocessing by one auxiliary source solve.
//!
//! Given a discrete pair `(lambda_h, u_h)`, the Stokes source problem with
//! right-hand side `lambda_h u_h` is solved in a richer space, either the
//! same element on a much finer nested mesh (two-grid) or the bubble
//! enriched quadratic pair on the same mesh (two-space). The improved
//! eigenvalue is the Rayleigh quotient of the new velocity.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::assembly::{BlockSystem, Form};
use crate::eigensolver::{rayleigh_quotient, EigenPair};
use crate::error::{check_len, Error, Result};
use crate::linsolve::relative_residual;
use crate::spaces::{ElementKind, FeFunction, ProjectionKind};

/// Upper bound on the refinement depth chosen by [`PostprocessMode::TwoGridAuto`].
pub const MAX_AUTO_LEVELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostprocessMode {
    /// Same element on the coarse mesh refined this many times.
    TwoGrid(usize),
    /// Two-grid with the smallest depth whose mesh size reaches `h^2`.
    TwoGridAuto,
    /// `P2Bubble` / `PDisc(1)` on the coarse mesh.
    TwoSpace,
}

impl fmt::Display for PostprocessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PostprocessMode::TwoGrid(l) => write!(f, "two-grid:{l}"),
            PostprocessMode::TwoGridAuto => f.write_str("two-grid:auto"),
            PostprocessMode::TwoSpace => f.write_str("two-space"),
        }
    }
}

impl FromStr for PostprocessMode {
    type Err = Error;

    /// Accepts `two-space`, `two-grid:auto` (or bare `two-grid`) and
    /// `two-grid:<levels>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "two-space" | "twospace" => Ok(PostprocessMode::TwoSpace),
            "two-grid" | "twogrid" | "two-grid:auto" | "twogrid:auto" => {
                Ok(PostprocessMode::TwoGridAuto)
            }
            other => other
                .strip_prefix("two-grid:")
                .or_else(|| other.strip_prefix("twogrid:"))
                .and_then(|l| l.parse().ok())
                .map(PostprocessMode::TwoGrid)
                .ok_or_else(|| Error::invalid(format!("unknown postprocess mode '{s}'"))),
        }
    }
}

/// Smallest depth `l` with `h 2^{-l} <= h^2`, capped at `max_levels`.
pub fn auto_levels(h: f64, max_levels: usize) -> usize {
    let mut l = 1;
    while l < max_levels && h * 0.5f64.powi(l as i32) > h * h {
        l += 1;
    }
    l
}

#[derive(Debug, Clone)]
pub struct PostprocessedPair {
    pub lambda_tilde: f64,
    pub u_tilde: FeFunction,
    pub p_tilde: FeFunction,
    pub mode: PostprocessMode,
    /// Relative residual of the enriched linear solve.
    pub source_residual: f64,
    /// The enriched discretization `u_tilde` and `p_tilde` live on.
    pub system: Arc<BlockSystem>,
}

/// Solution of a mean-constrained Stokes source problem.
#[derive(Debug, Clone)]
pub struct SourceSolution {
    pub u: FeFunction,
    pub p: FeFunction,
    pub residual: f64,
}

/// Solves `[[A, -B^T, 0], [B, S, c], [0, c^T, 0]] x = [f; 0; 0]` for a
/// reduced velocity load `f`.
pub fn solve_source(sys: &BlockSystem, load: &[f64]) -> Result<SourceSolution> {
    let nu = sys.n_velocity();
    let np = sys.n_pressure();
    check_len(nu, load.len())?;
    let k = sys.augmented_matrix();
    let mut rhs = vec![0.0; k.nrows()];
    rhs[..nu].copy_from_slice(load);
    let x = sys.factorize_augmented()?.solve(&rhs)?;
    let residual = relative_residual(&k, &x, &rhs)?;
    Ok(SourceSolution {
        u: sys.velocity_from_reduced(&x[..nu])?,
        p: sys.pressure_from_vec(x[nu..nu + np].to_vec())?,
        residual,
    })
}

/// Auxiliary source problem with right-hand side `lambda_h (u_h, v)`,
/// posed on `enriched`. The pair may live on the same mesh or on one that
/// `enriched`'s mesh was refined from.
pub fn solve_source_enriched(enriched: &BlockSystem, pair: &EigenPair) -> Result<SourceSolution> {
    let load = enriched.assemble_source_rhs(&pair.u, pair.lambda)?;
    solve_source(enriched, &load)
}

/// Builds the enriched discretization for `mode` from the coarse one.
pub fn enriched_system(coarse: &BlockSystem, mode: PostprocessMode) -> Result<BlockSystem> {
    let stab = coarse.stabilization();
    match mode {
        PostprocessMode::TwoGrid(0) => Err(Error::invalid(
            "two-grid postprocessing needs at least one refinement",
        )),
        PostprocessMode::TwoGrid(levels) => BlockSystem::assemble(
            Arc::new(coarse.mesh().refined(levels)),
            coarse.element(),
            coarse.element(),
            coarse.projection(),
            stab,
        ),
        PostprocessMode::TwoGridAuto => enriched_system(
            coarse,
            PostprocessMode::TwoGrid(auto_levels(coarse.mesh().mesh_size(), MAX_AUTO_LEVELS)),
        ),
        PostprocessMode::TwoSpace => {
            if coarse.element() != ElementKind::P1 || coarse.projection() != ProjectionKind::Zero {
                return Err(Error::invalid(
                    "two-space postprocessing starts from P1 with the Zero projection",
                ));
            }
            BlockSystem::assemble(
                coarse.mesh().clone(),
                ElementKind::P2Bubble,
                ElementKind::P2Bubble,
                ProjectionKind::PDisc(1),
                stab,
            )
        }
    }
}

/// Improves `pair`, computed on `coarse`, by one enriched source solve.
pub fn postprocess(
    coarse: &BlockSystem,
    pair: &EigenPair,
    mode: PostprocessMode,
) -> Result<PostprocessedPair> {
    let enriched = Arc::new(enriched_system(coarse, mode)?);
    let sol = solve_source_enriched(&enriched, pair)?;
    Ok(PostprocessedPair {
        lambda_tilde: rayleigh_quotient(&enriched, &sol.u)?,
        u_tilde: sol.u,
        p_tilde: sol.p,
        mode,
        source_residual: sol.residual,
        system: enriched,
    })
}

/// Both sides of the discrete Rayleigh-quotient expansion around a
/// discrete eigenpair `(u, p, lambda)`:
///
/// `a(w,w)/r(w,w) - lambda = [a(e,e) - lambda r(e,e) + 2 b(e,eta)
///   - S(eta,eta) - S(psi,psi) + 2 (b(w,psi) + S(psi,psi))] / r(w,w)`
///
/// with `e = w - u` and `eta = p - psi`. The last term vanishes when `psi`
/// satisfies the discrete divergence equation for `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionCheck {
    /// `a(w,w)/r(w,w)`.
    pub lambda_hat: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
}

pub fn expansion_check(
    sys: &BlockSystem,
    pair: &EigenPair,
    w: &FeFunction,
    psi: &FeFunction,
) -> Result<ExpansionCheck> {
    let rww = sys.form_eval(Form::R, w, w)?;
    if rww == 0.0 {
        return Err(Error::invalid("expansion needs a nonzero w"));
    }
    let lambda = pair.lambda;
    let lambda_hat = sys.form_eval(Form::A, w, w)? / rww;
    let e = difference(w, &pair.u)?;
    let eta = difference(&pair.p, psi)?;
    let orth_defect = sys.form_eval(Form::B, w, psi)? + sys.form_eval(Form::S, psi, psi)?;
    let numerator = sys.form_eval(Form::A, &e, &e)? - lambda * sys.form_eval(Form::R, &e, &e)?
        + 2.0 * sys.form_eval(Form::B, &e, &eta)?
        - sys.form_eval(Form::S, &eta, &eta)?
        - sys.form_eval(Form::S, psi, psi)?
        + 2.0 * orth_defect;
    let lhs = lambda_hat - lambda;
    let rhs = numerator / rww;
    Ok(ExpansionCheck {
        lambda_hat,
        lhs,
        rhs,
        defect: (lhs - rhs).abs(),
    })
}

fn difference(x: &FeFunction, y: &FeFunction) -> Result<FeFunction> {
    check_len(x.coefficients().len(), y.coefficients().len())?;
    let c = x
        .coefficients()
        .iter()
        .zip(y.coefficients())
        .map(|(a, b)| a - b)
        .collect();
    FeFunction::from_coefficients(x.space().clone(), x.components(), c)
}
