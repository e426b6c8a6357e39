use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::config::StudyConfig;
use crate::harness::study::{rates, ConvergenceTable};
use crate::harness::vtk::vtk_string;

/// Column names of `study.csv`, in order.
pub const CSV_HEADER: &[&str] = &[
    "n",
    "h",
    "velocity_dofs",
    "pressure_dofs",
    "lambda_h",
    "lambda_h_error",
    "lambda_h_order",
    "lambda_tilde",
    "lambda_tilde_error",
    "lambda_tilde_order",
    "stabilization_pp",
    "eig_residual",
    "wall_time_s",
];

/// 17 significant digits in scientific notation; `NaN` marks an undefined
/// cell.
fn real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

pub fn csv_string(table: &ConvergenceTable) -> String {
    let h: Vec<f64> = table.rows.iter().map(|r| r.h).collect();
    let order_column =
        |e: Vec<f64>| -> Vec<Option<f64>> { std::iter::once(None).chain(rates(&h, &e)).collect() };
    let oh = order_column(table.rows.iter().map(|r| r.lambda_h_error).collect());
    let ot = order_column(table.rows.iter().map(|r| r.lambda_tilde_error).collect());
    let mut s = CSV_HEADER.join(",");
    s.push('\n');
    for (i, r) in table.rows.iter().enumerate() {
        let cells = [
            r.n.to_string(),
            real(r.h),
            r.velocity_dofs.to_string(),
            r.pressure_dofs.to_string(),
            real(r.lambda_h),
            real(r.lambda_h_error),
            real(oh[i].unwrap_or(f64::NAN)),
            real(r.lambda_tilde),
            real(r.lambda_tilde_error),
            real(ot[i].unwrap_or(f64::NAN)),
            real(r.stabilization_pp),
            real(r.eig_residual),
            real(r.wall_time_s),
        ];
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 70.0;

/// Log-log plot of the error columns against `h`, one polyline per column
/// with data, plus dashed slope-2 and slope-4 guides through the first
/// `lambda_h` point.
pub fn svg_string(table: &ConvergenceTable) -> String {
    let h: Vec<f64> = table.rows.iter().map(|r| r.h).collect();
    let columns: Vec<(&str, &str, Vec<f64>)> = [
        (
            "lambda_h error",
            "#1f77b4",
            table
                .rows
                .iter()
                .map(|r| r.lambda_h_error)
                .collect::<Vec<_>>(),
        ),
        (
            "lambda_tilde error",
            "#d62728",
            table.rows.iter().map(|r| r.lambda_tilde_error).collect(),
        ),
    ]
    .into_iter()
    .filter(|(_, _, e)| e.iter().any(|v| v.is_finite() && *v > 0.0))
    .collect();

    let positive = |v: &&f64| v.is_finite() && **v > 0.0;
    let ys: Vec<f64> = columns
        .iter()
        .flat_map(|c| c.2.iter().filter(positive).copied())
        .collect();
    let (xmin, xmax) = decade_bounds(h.iter().filter(positive).copied());
    let (ymin, ymax) = decade_bounds(ys.iter().copied());
    let px = |x: f64| MARGIN + (x.log10() - xmin) / (xmax - xmin) * (WIDTH - 2.0 * MARGIN);
    let py =
        |y: f64| HEIGHT - MARGIN - (y.log10() - ymin) / (ymax - ymin) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for d in (xmin as i32)..=(xmax as i32) {
        let x = px(10f64.powi(d));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" font-size="12" text-anchor="middle">1e{d}</text>"#,
            HEIGHT - MARGIN,
            HEIGHT - MARGIN + 6.0,
            HEIGHT - MARGIN + 20.0
        );
    }
    for d in (ymin as i32)..=(ymax as i32) {
        let y = py(10f64.powi(d));
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{MARGIN}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" font-size="12" text-anchor="end">1e{d}</text>"#,
            MARGIN - 6.0,
            MARGIN - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">h</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0
    );

    // Guides through the first lambda_h point.
    if let (Some(&h0), Some(e0)) = (h.first(), columns.first().and_then(|c| c.2.first())) {
        if h0 > 0.0 && e0.is_finite() && *e0 > 0.0 {
            let hl = *h.last().unwrap_or(&h0);
            for (slope, dash) in [(2, "6,4"), (4, "2,3")] {
                let e1 = e0 * (hl / h0).powi(slope);
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="{dash}"/><text x="{:.2}" y="{:.2}" font-size="11" fill="gray">slope {slope}</text>"#,
                    px(h0),
                    py(*e0),
                    px(hl),
                    py(e1.max(10f64.powf(ymin))),
                    px(hl) + 4.0,
                    py(e1.max(10f64.powf(ymin)))
                );
            }
        }
    }

    for (k, (name, color, e)) in columns.iter().enumerate() {
        let pts: Vec<String> = h
            .iter()
            .zip(e)
            .filter(|(x, y)| positive(x) && positive(y))
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN + 18.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly:.2}" font-size="12" fill="{color}">{name}</text>"#,
            WIDTH - MARGIN - 130.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Smallest and largest decade enclosing the values, at least one decade
/// apart.
fn decade_bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v.log10()), hi.max(v.log10()))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `study.csv`, `errors.svg` and, when enabled and available,
/// `solution.vtk` (first eigenpair on the finest level) into the output
/// directory. Returns the written paths.
pub fn export_outputs(table: &ConvergenceTable, cfg: &StudyConfig) -> Result<Vec<PathBuf>> {
    export_to(table, cfg.vtk, &cfg.output_dir)
}

pub fn export_to(table: &ConvergenceTable, vtk: bool, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![
        write(dir.join("study.csv"), &csv_string(table))?,
        write(dir.join("errors.svg"), &svg_string(table))?,
    ];
    if vtk {
        if let Some(pair) = table.finest.as_ref().and_then(|p| p.first()) {
            written.push(write(
                dir.join("solution.vtk"),
                &vtk_string(&pair.u, &pair.p)?,
            )?);
        }
    }
    Ok(written)
}
