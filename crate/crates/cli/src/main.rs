//! Command line for the prosumage scenario engine.
//!
//! Subcommands mirror the pipeline stages: `households` runs the investment
//! loop, `residual` builds the hourly residual demand, `sector` solves one
//! dispatch-and-investment scenario, `analyze` writes the delta reports,
//! `matrix` sweeps the whole FiT x RES (x sensitivity) grid and `verify`
//! runs the bundled property suite.
//!
//! Exit codes: 0 success, 1 validation failure, 2 solve failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use prosumage_core::fleet::FleetSpec;
use prosumage_core::runner::{
    self, household_stage, load_inputs, plan_matrix, reference_residual, residual_stage,
    run_matrix, sector_stage, OutputLayout, ResShareChoice, RunConfig, RunnerError,
};
use prosumage_core::sector::build_lp;
use prosumage_core::solver::BackendChoice;

#[derive(Parser)]
#[command(
    name = "prosumage",
    about = "Household PV-battery adoption coupled to least-cost power-sector planning",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// LP backend: auto, simplex or clarabel.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Expect fetched public datasets and report against published values.
    #[arg(long, global = true, default_value_t = false)]
    reproduction_mode: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the household investment stage for each configured FiT value.
    Households {
        #[command(flatten)]
        common: CommonArgs,
        /// Restrict to one FiT fraction (e.g. 0.25).
        #[arg(long)]
        fit: Option<f64>,
    },
    /// Build the hourly residual network demand per FiT value.
    Residual {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        fit: Option<f64>,
    },
    /// Solve one sector scenario (a FiT cell or the reference).
    Sector {
        #[command(flatten)]
        common: CommonArgs,
        /// FiT fraction of the prosumage cell; omit for the reference.
        #[arg(long)]
        fit: Option<f64>,
        /// Renewable share: a fraction or `endogenous`.
        #[arg(long)]
        res: String,
        /// Also write the LP in text interchange format.
        #[arg(long)]
        export_lp: Option<PathBuf>,
    },
    /// Solve one scenario plus its reference and write the delta reports.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        fit: f64,
        #[arg(long)]
        res: String,
    },
    /// Run the full scenario matrix with sensitivity sweeps.
    Matrix {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the bundled property and oracle suite.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            // solve failures exit 2, everything else is a validation failure
            let solve_failure = e.chain().any(|cause| {
                matches!(
                    cause.downcast_ref::<RunnerError>(),
                    Some(RunnerError::Sector(_))
                )
            }) || e.chain().any(|cause| {
                cause
                    .downcast_ref::<prosumage_core::sector::SectorError>()
                    .is_some()
            });
            if solve_failure {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn configure(common: &CommonArgs) -> Result<RunConfig> {
    let path = common
        .config
        .clone()
        .ok_or_else(|| anyhow::anyhow!("--config is required for this subcommand"))?;
    let mut cfg = RunConfig::from_file(&path)
        .with_context(|| format!("loading config {}", path.display()))?;
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(backend) = &common.backend {
        cfg.backend = BackendChoice::parse(backend).ok_or_else(|| {
            anyhow::anyhow!("unknown backend {backend:?} (auto|simplex|clarabel)")
        })?;
    }
    cfg.jobs = common.jobs;
    cfg.reproduction_mode |= common.reproduction_mode;
    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build_global()
            .ok();
    }
    Ok(cfg)
}

fn parse_res(text: &str) -> Result<ResShareChoice> {
    if text == "endogenous" {
        return Ok(ResShareChoice::Endogenous);
    }
    let share: f64 = text
        .parse()
        .with_context(|| format!("unparseable renewable share {text:?}"))?;
    if !(share > 0.0 && share <= 1.0) {
        bail!("renewable share {share} outside (0, 1]");
    }
    Ok(ResShareChoice::Fixed(share))
}

fn fits_to_run(cfg: &RunConfig, only: Option<f64>) -> Result<Vec<f64>> {
    match only {
        None => Ok(cfg.fit_fractions.clone()),
        Some(fit) => {
            if !cfg.fit_fractions.iter().any(|f| (f - fit).abs() < 1e-9) {
                bail!(
                    "FiT {fit} is not in the configured set {:?}",
                    cfg.fit_fractions
                );
            }
            Ok(vec![fit])
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Households { common, fit } => {
            let cfg = configure(&common)?;
            let inputs = load_inputs(&cfg)?;
            report_rejections(&inputs);
            let layout = OutputLayout::new(&cfg.out_dir);
            for fit in fits_to_run(&cfg, fit)? {
                let stage = household_stage(&cfg, &inputs, fit, 1.0, 1.0)?;
                let dir = layout.household_dir(&stage.label);
                runner::write_household_outputs(&dir, &stage)?;
                println!(
                    "{}: {} households, mean {:.2} kWp / {:.2} kWh installed by {}",
                    stage.label,
                    stage.runs.len(),
                    stage.mean_final_pv_kwp,
                    stage.mean_final_battery_kwh,
                    cfg.end_year
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Residual { common, fit } => {
            let cfg = configure(&common)?;
            let inputs = load_inputs(&cfg)?;
            report_rejections(&inputs);
            let layout = OutputLayout::new(&cfg.out_dir);
            let fleet = FleetSpec {
                n_households: cfg.fleet_sizes[0],
            };
            for fit in fits_to_run(&cfg, fit)? {
                let stage = household_stage(&cfg, &inputs, fit, 1.0, 1.0)?;
                let residual = residual_stage(&stage, &inputs, fleet)?;
                let dir = layout.root.join("residual").join(RunConfig::fit_label(fit));
                runner::write_residual_outputs(&dir, &residual)?;
                println!(
                    "{}: annual residual {:.2} TWh (network {:.2} TWh)",
                    RunConfig::fit_label(fit),
                    residual.residual.annual_sum() / 1e6,
                    inputs.network_demand.annual_sum() / 1e6
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sector {
            common,
            fit,
            res,
            export_lp,
        } => {
            let cfg = configure(&common)?;
            let inputs = load_inputs(&cfg)?;
            let res = parse_res(&res)?;
            let fleet = FleetSpec {
                n_households: cfg.fleet_sizes[0],
            };
            let residual = match fit {
                None => reference_residual(&inputs, fleet)?,
                Some(fit) => {
                    let fit = fits_to_run(&cfg, Some(fit))?[0];
                    let stage = household_stage(&cfg, &inputs, fit, 1.0, 1.0)?;
                    residual_stage(&stage, &inputs, fleet)?
                }
            };
            let sector = sector_stage(&cfg, &inputs, &residual, res, 1.0, 1.0)?;
            if let Some(path) = export_lp {
                let mut buffer = Vec::new();
                build_lp(&sector.scenario)?.write_lp_format(&mut buffer)?;
                runner::write_atomic(&path, &buffer)?;
                println!("LP written to {}", path.display());
            }
            let label = match fit {
                None => format!("ref_{}", res.label()),
                Some(f) => format!("{}_{}", RunConfig::fit_label(f), res.label()),
            };
            let dir = OutputLayout::new(&cfg.out_dir).cell_dir(&label);
            runner::write_sector_outputs(&dir, &sector)?;
            if !sector.validation_clean {
                bail!(
                    "solution validation failed (worst relative violation {:.3e})",
                    sector.max_violation
                );
            }
            println!(
                "{label}: objective {:.3e} AUD/yr, realized share {:.4}",
                sector.solution.objective, sector.solution.realized_res_share
            );
            for t in &sector.solution.technologies {
                match t.energy_capacity_mwh {
                    Some(e) => println!("  {:<10} {:9.1} MW {:10.1} MWh", t.name, t.capacity_mw, e),
                    None => println!("  {:<10} {:9.1} MW", t.name, t.capacity_mw),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze { common, fit, res } => {
            let mut cfg = configure(&common)?;
            let res = parse_res(&res)?;
            let fit = fits_to_run(&cfg, Some(fit))?[0];
            cfg.fit_fractions = vec![fit];
            cfg.res_shares = vec![res];
            cfg.pv_cost_multipliers = vec![1.0];
            cfg.battery_cost_multipliers = vec![1.0];
            cfg.fleet_sizes = vec![cfg.fleet_sizes[0]];
            let report = run_matrix(&cfg)?;
            print_matrix_report(&cfg, &report)?;
            if report.all_ok() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
        Command::Matrix { common } => {
            let cfg = configure(&common)?;
            let plan = plan_matrix(&cfg);
            println!(
                "matrix: {} sector solves over {} household stages",
                plan.sector_solves(),
                plan.household_stages.len()
            );
            let report = run_matrix(&cfg)?;
            print_matrix_report(&cfg, &report)?;
            if report.all_ok() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
        Command::Verify { common } => {
            if common.jobs > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(common.jobs)
                    .build_global()
                    .ok();
            }
            let report = runner::verify();
            for check in &report.checks {
                println!(
                    "{} {:<38} {}",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.detail
                );
            }
            if report.all_passed() {
                println!("verify: all {} checks passed", report.checks.len());
                Ok(ExitCode::SUCCESS)
            } else {
                let failed = report.checks.iter().filter(|c| !c.passed).count();
                println!("verify: {failed} of {} checks FAILED", report.checks.len());
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn report_rejections(inputs: &runner::RunInputs) {
    for rejected in &inputs.rejected {
        eprintln!(
            "note: household {} excluded ({} missing steps, first gap at line {})",
            rejected.household_id, rejected.missing_steps, rejected.first_gap_line
        );
    }
}

fn print_matrix_report(cfg: &RunConfig, report: &runner::MatrixReport) -> Result<()> {
    for outcome in &report.outcomes {
        match &outcome.result {
            Ok(()) => println!(
                "cell {:<40} {}",
                outcome.name,
                if outcome.skipped {
                    "skipped (complete)"
                } else {
                    "ok"
                }
            ),
            Err(e) => println!("cell {:<40} FAILED: {e}", outcome.name),
        }
    }
    println!(
        "outputs under {} (manifest, summary.csv, cells/, households/)",
        cfg.out_dir.display()
    );
    Ok(())
}
