//! Command-line front end: each subcommand runs a slice of the
//! certified reduced-order pipeline on a TOML config and writes the
//! run report plus CSV artifacts into the output directory.
//!
//! Exit codes: 0 when every requested certification flag is true, 2
//! when the pipeline ran but at least one flag is false, 1 on
//! execution errors (unreadable config, schema violations, missing
//! sections, stage failures).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use certrom::report::{emit, orchestrate, parse_config, ReportError, RunConfig, StageSet};

#[derive(Parser)]
#[command(
    name = "certrom",
    version,
    about = "Certified reduced-order runs for planar incompressible flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for every randomized piece of the run.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Full-order solve on the torus grid.
    FomRun(RunArgs),
    /// Full-order solve plus reduced-basis extraction.
    Pod(RunArgs),
    /// Pipeline through the certified reduced run.
    RomCertify(RunArgs),
    /// Pipeline through the error certificate.
    Estimate(RunArgs),
    /// Transition indicators on the configured base flow.
    Transition(RunArgs),
    /// Coupling margins from declared or measured constants.
    FsiMargin(RunArgs),
    /// Coupling margins plus the partitioned testbed run.
    FsiRun(RunArgs),
    /// Every stage the config carries a section for.
    Report(RunArgs),
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::FomRun(args)
            | Command::Pod(args)
            | Command::RomCertify(args)
            | Command::Estimate(args)
            | Command::Transition(args)
            | Command::FsiMargin(args)
            | Command::FsiRun(args)
            | Command::Report(args) => args,
        }
    }

    fn stages(&self, config: &RunConfig) -> StageSet {
        match self {
            Command::FomRun(_) => StageSet::fom_only(),
            Command::Pod(_) => StageSet::through_pod(),
            Command::RomCertify(_) => StageSet::through_certify(),
            Command::Estimate(_) => StageSet::through_estimate(),
            Command::Transition(_) => StageSet::transition_only(),
            Command::FsiMargin(_) => StageSet::fsi_margin_only(),
            Command::FsiRun(_) => StageSet::fsi_with_run(),
            Command::Report(_) => StageSet::requested_by(config),
        }
    }
}

fn run(command: &Command) -> Result<ExitCode, ReportError> {
    let args = command.args();
    let mut config = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output_dir = Some(out.clone());
    }
    let stages = command.stages(&config);
    let report = orchestrate(&config, stages)?;
    let dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}-out", config.scenario)));
    emit(&report, &dir)?;
    println!(
        "scenario {} ({}): report written to {}",
        report.scenario,
        report.stages.join(", "),
        dir.display()
    );
    for (name, flag) in [
        ("skew-ok", report.flags.skew_ok),
        ("diss-ok", report.flags.diss_ok),
        ("margin-ok", report.flags.margin_ok),
        ("residual-computed", report.flags.residual_computed),
        ("regime-ok", report.flags.regime_ok),
    ] {
        let text = match flag {
            Some(true) => "true",
            Some(false) => "false",
            None => "n/a",
        };
        println!("  {name}: {text}");
    }
    Ok(if report.all_flags_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
