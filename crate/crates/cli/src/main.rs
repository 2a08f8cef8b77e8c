mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use maxpot_core::Params;

use crate::config::{parse_mode, parse_path, PartialConfig, RunConfig};
use crate::error::CliError;

/// Maximal potentials, singular integrals and spherical maximal operators on
/// regular grids.
#[derive(Parser, Debug)]
#[command(name = "maxpot", version)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a catalog function and write it as a field file.
    Gen(GenArgs),
    /// Apply one operator to a field.
    Apply(ApplyArgs),
    /// Run verification checks; exit 0 iff all pass.
    Verify(VerifyArgs),
    /// Probe the L^p → Ẇ^{1,p} ratio over a function family.
    Probe(ProbeArgs),
    /// Grid-refinement study against an analytic value.
    Study(StudyArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML run config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Cells per axis; the grid has res+1 nodes per axis.
    #[arg(long)]
    res: Option<usize>,
    /// Box half-width L.
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Ladder ratio ρ.
    #[arg(long)]
    ratio: Option<f64>,
    /// overlap_weighted or center_indicator.
    #[arg(long, value_parser = parse_mode)]
    truncation: Option<maxpot_core::operators::TruncationMode>,
    #[arg(long)]
    subsamples: Option<usize>,
    /// fft or direct.
    #[arg(long, value_parser = parse_path)]
    conv_path: Option<maxpot_core::operators::ConvolutionPath>,
    #[arg(long)]
    quad_order: Option<usize>,
    /// Symbol catalog id: one, identity, coordinate, quadratic, exp_shift.
    #[arg(long)]
    symbol: Option<String>,
    /// Symbol parameters as k=v,k=v.
    #[arg(long, value_parser = parse_params)]
    symbol_params: Option<Params>,
    /// Function catalog id.
    #[arg(long = "f", visible_alias = "function")]
    function: Option<String>,
    /// Function parameters as k=v,k=v.
    #[arg(long, value_parser = parse_params)]
    params: Option<Params>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ApplyArgs {
    #[command(flatten)]
    common: Common,
    /// Operator name.
    #[arg(long)]
    op: Option<String>,
    /// Field file; without it the function given by --f is sampled.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Truncation or sphere radius for single-radius operators.
    #[arg(long)]
    t: Option<f64>,
    /// spherical_maximal of the mean of f instead of the mean of |f|.
    #[arg(long)]
    signed: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Checks to run, or `all`.
    checks: Vec<String>,
    /// Radii for the representation check, comma separated.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// ε-ladder of the distributional check in units of h, comma separated.
    #[arg(long, value_delimiter = ',')]
    eps_steps: Option<Vec<f64>>,
    /// Also run the gradient bound at this resolution.
    #[arg(long)]
    refine_res: Option<usize>,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    p: Option<f64>,
    /// default, dilates or exploratory.
    #[arg(long)]
    family: Option<String>,
    /// maximal_potential or riesz.
    #[arg(long)]
    op: Option<String>,
    /// Family members per FFT sweep.
    #[arg(long)]
    batch: Option<usize>,
    /// Repeat the probe at this resolution and record the changes.
    #[arg(long)]
    refine_res: Option<usize>,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    op: Option<String>,
    /// Resolutions, comma separated.
    #[arg(long, value_delimiter = ',')]
    resolutions: Option<Vec<usize>>,
}

fn parse_params(s: &str) -> Result<Params, String> {
    Params::parse(s).map_err(|e| e.to_string())
}

impl Common {
    fn partial(&self) -> Result<PartialConfig, CliError> {
        let base = match &self.config {
            Some(p) => PartialConfig::load(p)?,
            None => PartialConfig::default(),
        };
        let mut c = PartialConfig::default();
        c.seed = self.seed;
        c.grid.n = self.n;
        c.grid.res = self.res;
        c.grid.half_width = self.half_width;
        c.ladder.t_min = self.t_min;
        c.ladder.t_max = self.t_max;
        c.ladder.ratio = self.ratio;
        c.truncation.mode = self.truncation;
        c.truncation.subsamples = self.subsamples;
        c.truncation.path = self.conv_path;
        c.quadrature.order = self.quad_order;
        c.symbol.id = self.symbol.clone();
        c.symbol.params = self.symbol_params.clone();
        c.function.id = self.function.clone();
        c.function.params = self.params.clone();
        c.output.dir = self.out.clone();
        Ok(base.overlay(c))
    }
}

fn threads_from_env() -> Result<(), CliError> {
    let Ok(v) = std::env::var("MAXPOT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Usage(format!("MAXPOT_THREADS: `{v}` is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("MAXPOT_THREADS: {e}")))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    threads_from_env()?;
    let (name, mut partial) = match &cli.command {
        Command::Gen(a) => ("gen", a.common.partial()?),
        Command::Apply(a) => ("apply", a.common.partial()?),
        Command::Verify(a) => ("verify", a.common.partial()?),
        Command::Probe(a) => ("probe", a.common.partial()?),
        Command::Study(a) => ("study", a.common.partial()?),
    };
    let mut top = PartialConfig::default();
    match &cli.command {
        Command::Apply(a) => {
            top.apply.op = a.op.clone();
            top.apply.input = a.input.clone();
            top.apply.t = a.t;
            top.apply.signed = a.signed.then_some(true);
        }
        Command::Verify(a) => {
            top.verify.checks = (!a.checks.is_empty()).then(|| a.checks.clone());
            top.verify.radii = a.radii.clone();
            top.verify.eps_steps = a.eps_steps.clone();
            top.verify.refine_res = a.refine_res;
        }
        Command::Probe(a) => {
            top.probe.p = a.p;
            top.probe.family = a.family.clone();
            top.probe.op = a.op.clone();
            top.probe.batch = a.batch;
            top.probe.refine_res = a.refine_res;
        }
        Command::Study(a) => {
            top.study.op = a.op.clone();
            top.study.resolutions = a.resolutions.clone();
        }
        Command::Gen(_) => {}
    }
    partial = partial.overlay(top);
    let cfg = RunConfig::resolve(name, partial)?;
    commands::dispatch(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("maxpot: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
