use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::assembly::{BlockSystem, Form};
use crate::eigensolver::{solve_smallest, EigenPair};
use crate::error::{Error, Result};
use crate::harness::config::{Reference, StudyConfig, UNIT_SQUARE_LAMBDA1};
use crate::mesh::Mesh;
use crate::postprocess::postprocess;

/// Errors at or below this size carry no usable rate information.
pub const ORDER_FLOOR: f64 = 1e-13;

/// One mesh level of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub h: f64,
    pub velocity_dofs: usize,
    pub pressure_dofs: usize,
    pub lambda_h: f64,
    pub lambda_h_error: f64,
    /// `NaN` when no postprocessing was requested.
    pub lambda_tilde: f64,
    pub lambda_tilde_error: f64,
    /// `S_h(p_h, p_h)` of the first eigenpair.
    pub stabilization_pp: f64,
    pub eig_residual: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub reference: f64,
    pub rows: Vec<StudyRow>,
    /// All requested eigenpairs on the finest completed level.
    pub finest: Option<Vec<EigenPair>>,
}

/// Observed orders between consecutive rows, for the `lambda_h` and
/// `lambda_tilde` error columns. `None` marks an undefined order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderRow {
    pub lambda_h: Option<f64>,
    pub lambda_tilde: Option<f64>,
}

/// A study that stopped at a failing level; `partial` holds the levels
/// that completed before it.
#[derive(Debug)]
pub struct StudyFailure {
    pub partial: ConvergenceTable,
    pub level: usize,
    pub error: Error,
}

impl fmt::Display for StudyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "level n = {}: {}", self.level, self.error)
    }
}

impl std::error::Error for StudyFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// `ln(e_i / e_{i+1}) / ln(h_i / h_{i+1})`, undefined when either error
/// is below [`ORDER_FLOOR`] or not finite.
pub fn rates(h: &[f64], e: &[f64]) -> Vec<Option<f64>> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(h, e)| {
            let usable = |v: f64| v.is_finite() && v > ORDER_FLOOR;
            (usable(e[0]) && usable(e[1])).then(|| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        })
        .collect()
}

/// Orders between consecutive rows of a table.
pub fn observed_orders(table: &ConvergenceTable) -> Result<Vec<OrderRow>> {
    if table.rows.len() < 2 {
        return Err(Error::invalid("observed orders need at least two rows"));
    }
    let h: Vec<f64> = table.rows.iter().map(|r| r.h).collect();
    let e: Vec<f64> = table.rows.iter().map(|r| r.lambda_h_error).collect();
    let et: Vec<f64> = table.rows.iter().map(|r| r.lambda_tilde_error).collect();
    Ok(rates(&h, &e)
        .into_iter()
        .zip(rates(&h, &et))
        .map(|(lambda_h, lambda_tilde)| OrderRow {
            lambda_h,
            lambda_tilde,
        })
        .collect())
}

/// Second-order extrapolation `l_f + (l_f - l_c) / (r^2 - 1)` with
/// `r = h_c / h_f`.
pub fn richardson(lambda_coarse: f64, h_coarse: f64, lambda_fine: f64, h_fine: f64) -> f64 {
    let r2 = (h_coarse / h_fine).powi(2);
    lambda_fine + (lambda_fine - lambda_coarse) / (r2 - 1.0)
}

/// Assembles the level-`n` system of a configuration.
pub fn level_system(cfg: &StudyConfig, n: usize) -> Result<BlockSystem> {
    let mesh = Arc::new(Mesh::unit_square(n)?);
    let element = cfg.pair.element();
    BlockSystem::assemble(
        mesh,
        element,
        element,
        cfg.pair.projection(),
        cfg.stabilization(),
    )
}

/// Runs every level of the study in order.
pub fn run_study(cfg: &StudyConfig) -> std::result::Result<ConvergenceTable, StudyFailure> {
    let mut table = ConvergenceTable {
        reference: f64::NAN,
        rows: Vec::new(),
        finest: None,
    };
    if let Err(error) = cfg.validate() {
        return Err(StudyFailure {
            partial: table,
            level: 0,
            error,
        });
    }
    for &n in &cfg.levels {
        if let Err(error) = run_level(cfg, n, &mut table) {
            finish(cfg, &mut table);
            return Err(StudyFailure {
                partial: table,
                level: n,
                error,
            });
        }
    }
    finish(cfg, &mut table);
    Ok(table)
}

fn run_level(cfg: &StudyConfig, n: usize, table: &mut ConvergenceTable) -> Result<()> {
    let start = Instant::now();
    let sys = level_system(cfg, n)?;
    if cfg.matrix_market {
        std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
        sys.augmented_matrix()
            .write_matrix_market(cfg.output_dir.join(format!("augmented_n{n}.mtx")))?;
        sys.m
            .write_matrix_market(cfg.output_dir.join(format!("mass_n{n}.mtx")))?;
    }
    let pairs = solve_smallest(&sys, cfg.eigen_count, cfg.tol, cfg.max_iterations)?;
    let first = &pairs[0];
    let lambda_tilde = match cfg.postprocess {
        Some(mode) => postprocess(&sys, first, mode)?.lambda_tilde,
        None => f64::NAN,
    };
    table.rows.push(StudyRow {
        n,
        h: sys.mesh().mesh_size(),
        velocity_dofs: sys.n_velocity(),
        pressure_dofs: sys.n_pressure(),
        lambda_h: first.lambda,
        lambda_h_error: f64::NAN,
        lambda_tilde,
        lambda_tilde_error: f64::NAN,
        stabilization_pp: sys.form_eval(Form::S, &first.p, &first.p)?,
        eig_residual: first.residual,
        wall_time_s: start.elapsed().as_secs_f64(),
    });
    table.finest = Some(pairs);
    Ok(())
}

/// Fixes the reference value and fills in the error columns.
fn finish(cfg: &StudyConfig, table: &mut ConvergenceTable) {
    let rows = &table.rows;
    table.reference = match cfg.reference {
        Reference::UnitSquare => UNIT_SQUARE_LAMBDA1,
        Reference::Value(v) => v,
        Reference::Richardson if rows.len() >= 2 => {
            let (c, f) = (&rows[rows.len() - 2], &rows[rows.len() - 1]);
            richardson(c.lambda_h, c.h, f.lambda_h, f.h)
        }
        Reference::Richardson => f64::NAN,
    };
    let reference = table.reference;
    for row in &mut table.rows {
        row.lambda_h_error = (row.lambda_h - reference).abs();
        row.lambda_tilde_error = (row.lambda_tilde - reference).abs();
    }
}
