//! `loewner-greedy`: greedy surrogate construction from Matrix Market systems.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use loewner_greedy::greedy::build_test_grid;
use loewner_greedy::report::{self, timestamp_line};
use loewner_greedy::verify::{check_error_identity, check_residual_scaling, random_check_points};
use loewner_greedy::{
    run_greedy, BarycentricSurrogate, DescriptorSystem, EstimatorAnchor, GreedyTrace, RunConfig,
    StopReason,
};

/// Below this, rho*|Q| is rounding error and ratios of it mean nothing.
const EXACT_LEVEL: f64 = 1e-10;

#[derive(Parser)]
#[command(version, about = "Greedy rational surrogates of frequency responses")]
struct Cli {
    /// Log level (error, warn, info, debug, trace); RUST_LOG overrides it.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the greedy loop and write samples.csv, ledger.csv and surrogate.json.
    Run {
        config: PathBuf,
        /// Also write validation.csv from a dense sweep of the exact system.
        #[arg(long)]
        validate: bool,
    },
    /// Dense sweep of the exact system against a saved surrogate (expensive:
    /// one full solve per grid point).
    Validate {
        config: PathBuf,
        surrogate: PathBuf,
        /// Output file; defaults to validation.csv in the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the residual proportionality and output-error identity on random
    /// points; runs the greedy loop unless a surrogate is given.
    Verify {
        config: PathBuf,
        #[arg(long)]
        surrogate: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log)
        .parse_default_env()
        .init();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, validate } => run(&config, validate),
        Command::Validate {
            config,
            surrogate,
            out,
        } => validate(&config, &surrogate, out),
        Command::Verify { config, surrogate } => verify(&config, surrogate.as_deref()),
    }
}

fn load(config: &Path) -> Result<(RunConfig, DescriptorSystem)> {
    let cfg =
        RunConfig::load(config).with_context(|| format!("reading config {}", config.display()))?;
    let sys = DescriptorSystem::load_prefix(&cfg.system)
        .with_context(|| format!("loading system {}", cfg.system.display()))?;
    Ok((cfg, sys))
}

/// The estimate computed with the final surrogate, if the rule made one.
fn final_anchor(trace: &GreedyTrace) -> Option<EstimatorAnchor> {
    let last = trace.records.last()?;
    let (anchor, estimate) = (last.anchor?, last.estimate?);
    trace
        .surrogate
        .support_index(anchor)
        .is_none()
        .then(|| EstimatorAnchor::new(anchor, estimate))
}

fn run(config: &Path, with_validation: bool) -> Result<ExitCode> {
    let (cfg, sys) = load(config)?;
    let g = &cfg.greedy;
    let trace = run_greedy(&sys, g)?;
    let out = &cfg.output;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let stamp = timestamp_line();
    report::write(
        &out.join("samples.csv"),
        &report::samples_csv(&trace, &stamp),
    )?;
    report::write(&out.join("ledger.csv"), &report::ledger_csv(&trace, &stamp))?;
    let anchor = final_anchor(&trace);
    trace
        .surrogate
        .save_json(&out.join("surrogate.json"), anchor)?;

    println!(
        "{}: stopped ({}) after {} iterations with {} samples; {} oracle calls, {} resonant",
        g.termination.name(),
        trace.reason.name(),
        trace.iterations(),
        trace.samples.len(),
        trace.oracle_calls(),
        trace.failed_calls()
    );
    if let Some(a) = anchor {
        println!("last estimate {:e} at f = {:e}", a.value, a.z().im);
    }
    if with_validation {
        let max = write_validation(
            &sys,
            &trace.surrogate,
            anchor,
            &cfg,
            &out.join("validation.csv"),
        )?;
        println!("validation: max eps = {max:e} over {} points", g.grid_size);
    }
    Ok(match trace.reason {
        StopReason::SafetyCap => {
            eprintln!(
                "warning: safety cap of {} samples reached before the criterion",
                g.max_samples
            );
            ExitCode::from(2)
        }
        _ => ExitCode::SUCCESS,
    })
}

fn write_validation(
    sys: &DescriptorSystem,
    sur: &BarycentricSurrogate,
    anchor: Option<EstimatorAnchor>,
    cfg: &RunConfig,
    path: &Path,
) -> Result<f64> {
    let grid = build_test_grid(&cfg.greedy);
    let rows = report::validation_sweep(sys, sur, anchor, &grid, cfg.greedy.delta);
    let resonant = rows.iter().filter(|r| r.resonant()).count();
    if resonant > 0 {
        log::warn!(
            "{resonant} grid points resonate; flagged in {}",
            path.display()
        );
    }
    report::write(
        path,
        &report::validation_csv(&rows, sur.shape(), &timestamp_line()),
    )?;
    Ok(report::max_error(&rows))
}

fn validate(config: &Path, surrogate: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let (cfg, sys) = load(config)?;
    let (sur, anchor) = BarycentricSurrogate::load_json(surrogate)
        .with_context(|| format!("reading {}", surrogate.display()))?;
    if sur.shape() != (sys.outputs(), sys.inputs()) {
        anyhow::bail!(
            "surrogate is {:?} but the system transfer function is {}x{}",
            sur.shape(),
            sys.outputs(),
            sys.inputs()
        );
    }
    let path = out.unwrap_or_else(|| cfg.output.join("validation.csv"));
    let max = write_validation(&sys, &sur, anchor, &cfg, &path)?;
    println!(
        "max eps = {max:e} over {} points, written to {}",
        cfg.greedy.grid_size,
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn verify(config: &Path, surrogate: Option<&Path>) -> Result<ExitCode> {
    let (cfg, sys) = load(config)?;
    let sur = match surrogate {
        Some(p) => {
            BarycentricSurrogate::load_json(p)
                .with_context(|| format!("reading {}", p.display()))?
                .0
        }
        None => run_greedy(&sys, &cfg.greedy)?.surrogate,
    };
    let g = &cfg.greedy;
    let zs = random_check_points(&sur, g.f_min, g.f_max, cfg.verify_points, g.seed);
    let p1 = check_residual_scaling(&sys, &sur, &zs)?;
    let p2 = check_error_identity(&sys, &sur, &zs, g.delta)?;
    let path = cfg.output.join("verify.csv");
    report::write(&path, &report::verify_csv(&p1, &p2, &timestamp_line()))?;
    println!("{} support points, {} check points", sur.len(), zs.len());
    println!(
        "rho*|Q|: mean {:e}, relative spread {:e}; gamma from numerator {:e}; identity residual {:e}",
        p1.gamma_estimate, p1.max_relative_spread, p1.gamma_formula, p1.identity_error
    );
    println!(
        "eps*|Q| vs Delta: max relative violation {:e}; Delta in [{:e}, {:e}]",
        p2.max_violation, p2.delta_min, p2.delta_max
    );
    if p1.gamma_estimate <= EXACT_LEVEL {
        println!(
            "note: surrogate matches the system to roundoff; relative spreads above are noise"
        );
    }
    println!("written to {}", path.display());
    Ok(ExitCode::SUCCESS)
}
