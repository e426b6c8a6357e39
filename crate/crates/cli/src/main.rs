//! `stokes-lps`: eigenvalue studies for the stabilized Stokes problem.
//!
//! Failures print one line `error[<category>]: <message>` on stderr and
//! exit with status 1 (2 for command-line usage errors).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stokes_lps::eigensolver::{infsup_global, solve_smallest};
use stokes_lps::harness::{
    export_outputs, level_system, observed_orders, run_study, ConvergenceTable, StudyConfig,
};
use stokes_lps::postprocess::{postprocess, PostprocessMode};
use stokes_lps::{Error, Result};

#[derive(Parser)]
#[command(
    name = "stokes-lps",
    version,
    about = "Stokes eigenvalues with local projection stabilization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence study over the configured levels; writes CSV, SVG and VTK.
    Study(Common),
    /// Smallest eigenpairs on one level.
    Eig {
        #[command(flatten)]
        common: Common,
        /// Mesh level; defaults to the finest configured level.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Eigenpair on one level followed by one postprocessing step.
    Postprocess {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        /// two-space, two-grid, two-grid:N or two-grid:auto.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Discrete inf-sup estimate on each level (small meshes only).
    Infsup(Common),
}

/// Options shared by every subcommand. Flags override the config file.
#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, allow_hyphen_values = true)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    element: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha_scaling: Option<String>,
    /// Comma-separated mesh levels, e.g. 8,16,32.
    #[arg(long, allow_hyphen_values = true)]
    levels: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eigen_count: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    max_iterations: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    postprocess: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    reference: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    output_dir: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    vtk: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    matrix_market: Option<String>,
    /// Any config key, as KEY=VALUE. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self, mut cfg: StudyConfig) -> Result<StudyConfig> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            cfg.apply_text(&text)?;
        }
        let flags = [
            ("element", &self.element),
            ("alpha0", &self.alpha0),
            ("alpha_scaling", &self.alpha_scaling),
            ("levels", &self.levels),
            ("eigen_count", &self.eigen_count),
            ("tol", &self.tol),
            ("max_iterations", &self.max_iterations),
            ("postprocess", &self.postprocess),
            ("reference", &self.reference),
            ("output_dir", &self.output_dir),
            ("vtk", &self.vtk),
            ("matrix_market", &self.matrix_market),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("--set expects KEY=VALUE, got '{kv}'"))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), one_line(&e.to_string()));
            ExitCode::from(1)
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Study(common) => study(&common.resolve(StudyConfig::default())?),
        Command::Eig { common, n } => {
            let cfg = common.resolve(StudyConfig::default())?;
            let n = n.unwrap_or(*cfg.levels.last().expect("validated"));
            let sys = level_system(&cfg, n)?;
            let pairs = solve_smallest(&sys, cfg.eigen_count, cfg.tol, cfg.max_iterations)?;
            println!(
                "# {} n={n} velocity_dofs={} pressure_dofs={}",
                cfg.pair,
                sys.n_velocity(),
                sys.n_pressure()
            );
            println!("index,lambda,residual");
            for p in &pairs {
                println!("{},{:.16e},{:.3e}", p.index, p.lambda, p.residual);
            }
            Ok(())
        }
        Command::Postprocess { common, n, mode } => {
            let cfg = common.resolve(StudyConfig::default())?;
            let mode: PostprocessMode = match mode {
                Some(m) => m.parse()?,
                None => cfg.postprocess.unwrap_or(PostprocessMode::TwoGridAuto),
            };
            let n = n.unwrap_or(cfg.levels[0]);
            let sys = level_system(&cfg, n)?;
            let pairs = solve_smallest(&sys, 1, cfg.tol, cfg.max_iterations)?;
            let post = postprocess(&sys, &pairs[0], mode)?;
            println!("mode,{mode}");
            println!("n,{n}");
            println!("lambda_h,{:.16e}", pairs[0].lambda);
            println!("lambda_tilde,{:.16e}", post.lambda_tilde);
            println!("enriched_velocity_dofs,{}", post.system.n_velocity());
            println!("source_residual,{:.3e}", post.source_residual);
            Ok(())
        }
        Command::Infsup(common) => {
            let base = StudyConfig {
                levels: vec![4, 8, 16],
                ..StudyConfig::default()
            };
            let cfg = common.resolve(base)?;
            println!("n,h,beta");
            for &n in &cfg.levels {
                let sys = level_system(&cfg, n)?;
                let beta = infsup_global(&sys)?;
                println!("{n},{:.16e},{:.16e}", sys.mesh().mesh_size(), beta);
            }
            Ok(())
        }
    }
}

fn study(cfg: &StudyConfig) -> Result<()> {
    match run_study(cfg) {
        Ok(table) => {
            print_table(&table);
            for path in export_outputs(&table, cfg)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Err(failure) => {
            // Keep whatever finished.
            if !failure.partial.rows.is_empty() {
                print_table(&failure.partial);
                for path in export_outputs(&failure.partial, cfg)? {
                    println!("wrote {} (partial)", path.display());
                }
            }
            println!("# failed at level n = {}", failure.level);
            Err(failure.error)
        }
    }
}

fn print_table(table: &ConvergenceTable) {
    let orders = observed_orders(table).ok();
    println!("reference = {:.10}", table.reference);
    println!(
        "{:>5} {:>10} {:>20} {:>12} {:>6} {:>20} {:>12} {:>6}",
        "n", "h", "lambda_h", "error", "order", "lambda_tilde", "error", "order"
    );
    for (i, r) in table.rows.iter().enumerate() {
        let order = |pick: fn(&stokes_lps::harness::OrderRow) -> Option<f64>| {
            i.checked_sub(1)
                .and_then(|j| orders.as_ref().and_then(|o| pick(&o[j])))
                .map_or("-".to_string(), |v| format!("{v:.2}"))
        };
        println!(
            "{:>5} {:>10.4e} {:>20.12} {:>12.4e} {:>6} {:>20.12} {:>12.4e} {:>6}",
            r.n,
            r.h,
            r.lambda_h,
            r.lambda_h_error,
            order(|o| o.lambda_h),
            r.lambda_tilde,
            r.lambda_tilde_error,
            order(|o| o.lambda_tilde)
        );
    }
}
