//! Configuration-driven convergence studies and their file outputs.

mod config;
mod output;
mod study;
mod vtk;

pub use config::{ElementPair, Reference, StudyConfig, CONFIG_KEYS, UNIT_SQUARE_LAMBDA1};
pub use output::{csv_string, export_outputs, export_to, svg_string, CSV_HEADER};
pub use study::{
    level_system, observed_orders, rates, richardson, run_study, ConvergenceTable, OrderRow,
    StudyFailure, StudyRow, ORDER_FLOOR,
};
pub use vtk::vtk_string;
