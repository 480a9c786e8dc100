//! `sks`: command-line front end for the stochastic Kuramoto–Sivashinsky solver
//! and its experiment suite.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver divergence,
//! 4 internal invariant violation, 1 anything else (I/O).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sks_core::assembly::{assemble_bending, assemble_gradient, assemble_mass};
use sks_core::{io, Error, ExperimentKind, RunConfig, SplineSpace};

#[derive(Parser)]
#[command(
    name = "sks",
    version,
    about = "Stochastic Kuramoto-Sivashinsky solver and experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write it as CSV.
    Simulate(Common),
    /// Strong error rate in time against a fine reference on coupled paths.
    ConvergenceTime(Common),
    /// Strong error rate in space against a refined reference mesh.
    ConvergenceSpace(Common),
    /// Polynomial moments and dissipation sums at M and 2M steps.
    Stability(Common),
    /// Hölder quotients over dyadic time gaps.
    Holder(Common),
    /// Exponential moment estimate.
    ExpMoment(Common),
    /// Errors restricted to the localization set.
    Localized(Common),
    /// Random instances of the discrete stochastic Gronwall inequality.
    GronwallCheck(Common),
    /// Print an assembled operator as `i j value` triplets.
    DumpMatrix(DumpArgs),
}

#[derive(Args)]
struct Common {
    /// Config file (`key = value` with `[section]` headers); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long = "L")]
    length: Option<String>,
    #[arg(long = "T")]
    horizon: Option<String>,
    #[arg(long = "N")]
    elements: Option<String>,
    #[arg(long = "M")]
    steps: Option<String>,
    #[arg(long = "r")]
    order: Option<String>,
    /// zero, sin, cos, rational, linear(<lambda>)
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    mc: Option<String>,
    /// Comma-separated moment exponents.
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    ce: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    /// Any other config key, e.g. `--set M_list=64,128,256`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    Mass,
    Bending,
    Gradient,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(value_enum)]
    operator: Operator,
    #[arg(long = "L", default_value_t = 2.0 * std::f64::consts::PI)]
    length: f64,
    #[arg(long = "N", default_value_t = 8)]
    elements: usize,
    #[arg(long = "r", default_value_t = 4)]
    order: usize,
}

impl Common {
    fn overrides(&self) -> Result<Vec<(String, String)>, Error> {
        let flags = [
            ("seed", &self.seed),
            ("out", &self.out),
            ("workers", &self.workers),
            ("nu", &self.nu),
            ("L", &self.length),
            ("T", &self.horizon),
            ("N", &self.elements),
            ("M", &self.steps),
            ("r", &self.order),
            ("model", &self.model),
            ("mc", &self.mc),
            ("q", &self.q),
            ("beta", &self.beta),
            ("ce", &self.ce),
            ("kappa", &self.kappa),
        ];
        let mut out: Vec<(String, String)> = flags
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        for s in &self.set {
            let (k, v) = s.split_once('=').ok_or_else(|| Error::Config {
                line: None,
                message: format!("--set expects KEY=VALUE, got '{s}'"),
            })?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    fn config(&self, kind: ExperimentKind) -> Result<RunConfig, Error> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config {
                line: None,
                message: format!("cannot read config file {}: {e}", p.display()),
            })?,
            None => String::new(),
        };
        RunConfig::parse(Some(kind), &text, &self.overrides()?)
    }
}

fn dump(args: &DumpArgs) -> Result<(), Error> {
    let space = SplineSpace::new(args.length, args.elements, args.order)?;
    let m = match args.operator {
        Operator::Mass => assemble_mass(&space),
        Operator::Bending => assemble_bending(&space),
        Operator::Gradient => assemble_gradient(&space),
    };
    print!("{}", m.to_triplets());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match &cli.command {
        Command::Simulate(c) => (ExperimentKind::Simulate, c),
        Command::ConvergenceTime(c) => (ExperimentKind::ConvergenceTime, c),
        Command::ConvergenceSpace(c) => (ExperimentKind::ConvergenceSpace, c),
        Command::Stability(c) => (ExperimentKind::Stability, c),
        Command::Holder(c) => (ExperimentKind::Holder, c),
        Command::ExpMoment(c) => (ExperimentKind::ExpMoment, c),
        Command::Localized(c) => (ExperimentKind::Localized, c),
        Command::GronwallCheck(c) => (ExperimentKind::GronwallCheck, c),
        Command::DumpMatrix(args) => {
            return match dump(args) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e, None, None),
            };
        }
    };
    let cfg = match common.config(kind) {
        Ok(c) => c,
        Err(e) => return fail(&e, Some(kind), None),
    };
    match sks_core::run(&cfg) {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary.summary).unwrap_or_default();
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, Some(kind), cfg.out.as_deref()),
    }
}

fn fail(err: &Error, kind: Option<ExperimentKind>, out: Option<&std::path::Path>) -> ExitCode {
    let json = io::error_json(err, kind.map(|k| k.name()));
    eprintln!(
        "{}",
        serde_json::to_string_pretty(&json).unwrap_or_default()
    );
    if let Some(dir) = out {
        if let Err(e) = io::write_json(dir, io::ERROR_JSON, &json) {
            eprintln!("could not write {}: {e}", io::ERROR_JSON);
        }
    }
    ExitCode::from(err.exit_code() as u8)
}
