//! Command line front end: generate fields, split them, run the coupled
//! solver with full artifacts, and run the consistency studies.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wnslab::config::RunConfig;
use wnslab::diagnostics::{self, trajectory_rows, DiagRow};
use wnslab::error::Result;
use wnslab::estimates::energy_budget;
use wnslab::pipeline::{self, convergence_study, initial_field, run_pipeline};
use wnslab::rescale::rescale_consistency;
use wnslab::snapshot::write_snapshot;
use wnslab::solver::{solve_coupled, solve_mollified, CoupledConfig};
use wnslab::spectral::divergence_rel;
use wnslab::split::split_divergence_free;
use wnslab::weights::weighted_lp_norm;

#[derive(Parser)]
#[command(
    name = "wnslab",
    version,
    about = "Pseudo-spectral laboratory for mollified incompressible flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to a `key = value` config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => RunConfig::from_file(path),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print a config file with every key at its default.
    Template,
    /// Generate the configured initial field and store it as a snapshot.
    GenField {
        #[command(flatten)]
        config: ConfigArg,
        /// Snapshot path to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Split the configured field into tail and remainder parts.
    Split {
        #[command(flatten)]
        config: ConfigArg,
        /// Directory for `tail0.field` and `remainder0.field` (must exist).
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the full pipeline: split, coupled solve, bounds, artifacts.
    Solve {
        #[command(flatten)]
        config: ConfigArg,
        /// Directory for run artifacts and the manifest (must exist).
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Plain mollified solve of the configured field; norm history as CSV.
    Diagnose {
        #[command(flatten)]
        config: ConfigArg,
        /// CSV path to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Coupled solve plus the weighted energy account of the remainder.
    Budget {
        #[command(flatten)]
        config: ConfigArg,
        /// CSV path to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check that zooming commutes with solving (scaling square).
    RescaleCheck {
        #[command(flatten)]
        config: ConfigArg,
        /// Zoom depth `j` (scale factor `2^-j`).
        #[arg(long, default_value_t = 1)]
        level: u32,
    },
    /// Solve under sharper smoothing/cutoff pairs and compare trajectories.
    Converge {
        #[command(flatten)]
        config: ConfigArg,
        /// Number of refinement levels.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Template => {
            print!("{}", RunConfig::default().to_file_string());
            Ok(())
        }
        Command::GenField { config, out } => {
            let cfg = config.load()?;
            let u0 = initial_field(&cfg)?;
            write_snapshot(&out, &u0, 0.0)?;
            println!("wrote {}", out.display());
            println!("peak_amplitude   {:.6e}", u0.max_abs());
            println!("relative_div     {:.6e}", divergence_rel(&u0));
            let input = weighted_lp_norm(&u0, cfg.p, cfg.gamma)?;
            println!("input_norm       {:.6e}  (p = {}, gamma = {})", input.value, cfg.p, cfg.gamma);
            Ok(())
        }
        Command::Split { config, out_dir } => {
            let cfg = config.load()?;
            let u0 = initial_field(&cfg)?;
            let split = split_divergence_free(&u0, &cfg.split_config()?, pipeline::DIV_TOL)?;
            write_snapshot(out_dir.join("tail0.field"), &split.b0, 0.0)?;
            write_snapshot(out_dir.join("remainder0.field"), &split.v0, 0.0)?;
            println!("threshold        {:.6e}", split.threshold);
            println!("tail_norm        {:.6e}  (target window [{:.6e}, {:.6e}])",
                split.achieved, 0.5 * cfg.eta, 0.9 * cfg.eta);
            println!("raw_tail_norm    {:.6e}  (bound {:.6e})", split.raw_b_norm, split.bound_b);
            println!("raw_rem_norm     {:.6e}  (bound {:.6e})", split.raw_v_norm, split.bound_v);
            println!("input_norm       {:.6e}", split.input_norm);
            println!("thresholds_tried {}", split.trace.len());
            Ok(())
        }
        Command::Solve { config, out_dir } => {
            let cfg = config.load()?;
            let summary = run_pipeline(&cfg, &out_dir)?;
            print!("{}", summary.render_text());
            println!("artifacts in     {}", out_dir.display());
            Ok(())
        }
        Command::Diagnose { config, out } => {
            let cfg = config.load()?;
            let u0 = initial_field(&cfg)?;
            let traj = solve_mollified(&u0, &cfg.solver_config()?)?;
            let rows = trajectory_rows(
                &traj,
                &[(2.0, 2.0), (cfg.p, cfg.gamma), (cfg.r, 0.0)],
                &[(1.0, 2.0)],
            )?;
            diagnostics::write_csv(&out, &rows)?;
            println!("wrote {} ({} rows)", out.display(), rows.len());
            if let Some(track) = &traj.residual {
                println!("residual_ratio   {:.6e}", track.ratio());
            }
            if let Some(b) = &traj.blowup {
                println!("blowup           step {} time {:.6e}", b.step, b.time);
            }
            Ok(())
        }
        Command::Budget { config, out } => {
            let cfg = config.load()?;
            let u0 = initial_field(&cfg)?;
            let split = split_divergence_free(&u0, &cfg.split_config()?, pipeline::DIV_TOL)?;
            let mut base = cfg.solver_config()?;
            base.residual_gamma = 2.0;
            let ccfg = CoupledConfig {
                base,
                tail_exponent: cfg.r,
            };
            let traj = solve_coupled(&split.b0, &split.v0, &ccfg)?;
            let rows = energy_budget(&traj, &cfg.mollifier()?, cfg.dt, true)?;
            let mut csv: Vec<DiagRow> = Vec::new();
            for row in &rows {
                csv.push(DiagRow::new(row.time, "lhs_rate", 0.0, 2.0, row.lhs_rate));
                csv.push(DiagRow::new(row.time, "dissipation", 0.0, 2.0, row.dissipation));
                for (k, term) in row.terms.iter().enumerate() {
                    csv.push(DiagRow::new(
                        row.time,
                        &format!("term{}", k + 1),
                        0.0,
                        2.0,
                        *term,
                    ));
                }
                csv.push(DiagRow::new(row.time, "defect_rel", 0.0, 2.0, row.defect_rel));
            }
            diagnostics::write_csv(&out, &csv)?;
            let worst = rows.iter().map(|r| r.defect_rel).fold(0.0, f64::max);
            println!("wrote {} ({} interior times)", out.display(), rows.len());
            println!("max_defect_rel   {:.6e}", worst);
            Ok(())
        }
        Command::RescaleCheck { config, level } => {
            let cfg = config.load()?;
            let u0 = initial_field(&cfg)?;
            let report = rescale_consistency(&u0, &cfg.mollifier()?, cfg.dt, cfg.steps, level)?;
            println!("lambda           {:.6e}", report.lambda);
            println!("mismatch         {:.6e}", report.mismatch);
            println!("dropped_energy   {:.6e}", report.dropped_energy);
            Ok(())
        }
        Command::Converge { config, levels } => {
            let cfg = config.load()?;
            let report = convergence_study(&cfg, levels)?;
            println!("level  epsilon      alpha        defect");
            for n in 0..report.epsilons.len() {
                println!(
                    "{n:<6} {:<12.6e} {:<12.6e} {:.6e}",
                    report.epsilons[n], report.alphas[n], report.residuals[n]
                );
            }
            println!("pairwise distances (L^2 in time of weighted L^2):");
            for m in 0..report.distances.len() {
                let row: Vec<String> = report.distances[m]
                    .iter()
                    .map(|d| format!("{d:.6e}"))
                    .collect();
                println!("  {}", row.join("  "));
            }
            let adj = report.adjacent_distances();
            println!(
                "adjacent distances: {}",
                adj.iter()
                    .map(|d| format!("{d:.6e}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            );
            Ok(())
        }
    }
}
