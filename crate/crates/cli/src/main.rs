//! `ddsolve`: run coupling-method experiments and emit CSV records.
//!
//! Every completed run exits 0, including runs that diverge; divergence is
//! reported in-band through the `diverged` CSV column and the summary line.
//! Nonzero exit is reserved for configuration and solver-setup errors.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ddsolve_cli::config::{self, ConfigLayer, Experiment};
use ddsolve_cli::csv::CsvTable;
use ddsolve_cli::experiments;

#[derive(Parser)]
#[command(
    name = "ddsolve",
    version,
    about = "Coupled transient solvers on decomposed meshes: benchmark experiments with CSV output"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two scalar subdomains sharing one constrained unknown
    SplitDof(RunArgs),
    /// Insulated bar on [0, 2] split into two subdomains
    Heat1d(RunArgs),
    /// Insulated square on [0, 2]^2 split into four subdomains
    Heat2d(RunArgs),
    /// Mesh-refinement convergence study (1D or 2D)
    Converge(RunArgs),
    /// Stabilized-constraint sweep on a bar with one held end
    Baumgarte(RunArgs),
    /// Scalar sequence with bounded weighted levels and growing integer levels
    Counterexample(RunArgs),
}

impl Command {
    fn split(&self) -> (Experiment, &RunArgs) {
        match self {
            Command::SplitDof(a) => (Experiment::SplitDof, a),
            Command::Heat1d(a) => (Experiment::Heat1d, a),
            Command::Heat2d(a) => (Experiment::Heat2d, a),
            Command::Converge(a) => (Experiment::Converge, a),
            Command::Baumgarte(a) => (Experiment::Baumgarte, a),
            Command::Counterexample(a) => (Experiment::Counterexample, a),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Coupling method: d-continuity, modified-d-continuity, v-continuity, baumgarte
    #[arg(long)]
    method: Option<String>,
    /// Integrator weight in [0, 1]
    #[arg(long)]
    gamma: Option<f64>,
    /// Time-step size
    #[arg(long)]
    dt: Option<f64>,
    /// Final time
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Elements per subdomain (per direction in 2D)
    #[arg(long)]
    mesh: Option<usize>,
    /// Stabilization parameter for the baumgarte method
    #[arg(long)]
    alpha: Option<f64>,
    /// Thermal conductivity
    #[arg(long)]
    conductivity: Option<f64>,
    /// Volumetric heat capacity
    #[arg(long)]
    capacity: Option<f64>,
    /// First mass (split-dof)
    #[arg(long = "m-a")]
    m_a: Option<f64>,
    /// Second mass (split-dof)
    #[arg(long = "m-b")]
    m_b: Option<f64>,
    /// First stiffness (split-dof)
    #[arg(long = "k-a")]
    k_a: Option<f64>,
    /// Second stiffness (split-dof)
    #[arg(long = "k-b")]
    k_b: Option<f64>,
    /// Shared initial value (split-dof)
    #[arg(long)]
    u0: Option<f64>,
    /// Snapshot times, comma separated (heat experiments)
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
    /// Refinement levels, comma separated, each double the previous (converge)
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Spatial dimension for converge: 1 or 2
    #[arg(long)]
    dim: Option<usize>,
    /// Number of sequence terms (counterexample)
    #[arg(long = "n-terms")]
    n_terms: Option<usize>,
    /// Write the main CSV table here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML config file; the section named after the experiment applies
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print a one-line machine-readable summary to stdout
    #[arg(long)]
    summary: bool,
}

impl RunArgs {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            method: self.method.clone(),
            gamma: self.gamma,
            dt: self.dt,
            t_end: self.t_end,
            mesh: self.mesh,
            alpha: self.alpha,
            conductivity: self.conductivity,
            capacity: self.capacity,
            m_a: self.m_a,
            m_b: self.m_b,
            k_a: self.k_a,
            k_b: self.k_b,
            u0: self.u0,
            snapshots: self.snapshots.clone(),
            levels: self.levels.clone(),
            dim: self.dim,
            n_terms: self.n_terms,
            out: self
                .out
                .as_ref()
                .map(|p| p.to_string_lossy().into_owned()),
        }
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let (experiment, args) = cli.command.split();

    let file_text = match &args.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?,
        ),
        None => None,
    };
    let cfg = config::resolve(experiment, file_text.as_deref(), &args.layer())?;

    let (table, aux_table, summary): (CsvTable, Option<CsvTable>, String) = match experiment {
        Experiment::SplitDof => {
            let out = experiments::run_split_dof(&cfg)?;
            (out.table, None, out.summary)
        }
        Experiment::Heat1d | Experiment::Heat2d => {
            let out = experiments::run_heat(&cfg)?;
            (out.table, Some(out.steps_table), out.summary)
        }
        Experiment::Converge => {
            let out = experiments::run_convergence(&cfg)?;
            (out.table, None, out.summary)
        }
        Experiment::Baumgarte => {
            let out = experiments::run_baumgarte(&cfg)?;
            (out.table, None, out.summary)
        }
        Experiment::Counterexample => {
            let out = experiments::run_counterexample(&cfg)?;
            (out.table, None, out.summary)
        }
    };

    match &cfg.out {
        Some(path) => {
            table
                .write_to(path)
                .with_context(|| format!("writing {}", path.display()))?;
            if let Some(steps) = aux_table {
                let steps_path = path.with_extension("steps.csv");
                steps
                    .write_to(&steps_path)
                    .with_context(|| format!("writing {}", steps_path.display()))?;
            }
        }
        None => {
            // Without --out, the table goes to stdout unless the caller asked
            // for the summary line only.
            if !args.summary {
                print!("{}", table.to_csv_string());
            }
        }
    }
    if args.summary {
        println!("{summary}");
    }
    Ok(())
}
