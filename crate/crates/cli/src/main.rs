use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use renormlab::experiments::Window;
use renormlab::{Error, Exec, FamilySpec};

mod commands;
mod config;

use config::{CommandName, Format, RunConfig};

const CSV_HELP: &str = "\
CSV outputs start with a `# config: {json}` line holding the effective run
configuration; `--config` accepts that JSON back. Further `#` lines carry
summaries and warnings. Columns:

  renorm        level,height,eta_len,xi_len,ratio,c0_distance
                height is `inf` for a pair with an interior fixed point;
                c0_distance is to the previous level
  universality  level,family,ratio,certified,discrepancy,c0_distance
                ratio s_m = |I_(m+1)|/|I_m|; discrepancy is the relative spread
                across families on the commonly certified levels; c0_distance
                is between the level-m pairs of the first and this family
  convergence   level,height,distance,uncertainty,resolved
                distance between the level-m renormalizations of the two
                families; uncertainty is its spread over the tuning brackets
  delta         m,theta,q,p,residual,d,relative_change
                d_m = (theta_m - theta_(m-1)) / (theta_(m+1) - theta_m)

Exit status: 0 success, 1 truncated before the requested depth or a failed
check, 2 invalid input.";

#[derive(Parser)]
#[command(name = "renormlab", version, about = "Renormalization experiments on critical circle maps", after_long_help = CSV_HELP)]
struct Cli {
    /// Worker threads [default: available cores]
    #[arg(long, global = true, env = "RENORMLAB_THREADS")]
    threads: Option<usize>,
    /// JSON run configuration; flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the Blaschke model B_n and check its invariants
    Model(ModelArgs),
    /// Tune the phase of B_n to a target rotation number
    Tune(TuneArgs),
    /// Renormalization orbit of one family, as CSV
    Renorm(RenormArgs),
    /// Compare scaling ratios across families tuned to one target
    Universality(MultiArgs),
    /// Distances between the renormalization orbits of two families
    Convergence(MultiArgs),
    /// Periodic phases theta_m and their difference ratios
    Delta(DeltaArgs),
    /// Basin raster of B_n as a P6 image with a JSON sidecar
    Julia(JuliaArgs),
}

#[derive(Args, Default)]
struct TargetArgs {
    /// golden | silver | periodic:a,b,... | a,b,... (add `,...` for a prefix)
    #[arg(long)]
    target: Option<String>,
    /// Terms generated for golden, silver and periodic targets
    #[arg(long)]
    target_len: Option<usize>,
}

#[derive(Args, Default)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write here instead of standard output
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    /// Odd degree
    #[arg(long)]
    n: Option<u32>,
    /// Random circle points checked for |B| = 1
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    n: Option<u32>,
    #[command(flatten)]
    target: TargetArgs,
    /// Width of the final phase bracket
    #[arg(long)]
    tol: Option<f64>,
    /// Target levels the tuned map must reproduce
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    max_orbit: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RenormArgs {
    /// Family spec, e.g. rigid:rho=0.618 or blaschke:n=3 (phase tuned to the target)
    #[arg(long, value_parser = parse_family)]
    family: Option<FamilySpec>,
    #[command(flatten)]
    target: TargetArgs,
    /// Renormalizations to apply
    #[arg(long)]
    depth: Option<usize>,
    /// Phase bracket width when tuning (0 bisects to machine precision)
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_orbit: Option<u64>,
    /// Grid for C0 distances
    #[arg(long)]
    samples: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct MultiArgs {
    /// Family spec, repeated once per family
    #[arg(long = "family", value_parser = parse_family)]
    families: Vec<FamilySpec>,
    #[command(flatten)]
    target: TargetArgs,
    /// Deepest level examined
    #[arg(long)]
    depth: Option<usize>,
    /// Phase bracket width when tuning (0 bisects to machine precision)
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_orbit: Option<u64>,
    /// Grid for C0 distances
    #[arg(long)]
    samples: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct DeltaArgs {
    #[arg(long)]
    n: Option<u32>,
    #[command(flatten)]
    target: TargetArgs,
    /// Number of periodic phases
    #[arg(long)]
    depth: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct JuliaArgs {
    #[arg(long)]
    n: Option<u32>,
    /// Phase; tuned to the target when absent
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long)]
    tol: Option<f64>,
    /// re_min,re_max,im_min,im_max
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<Window>,
    /// WIDTHxHEIGHT
    #[arg(long, value_parser = parse_res)]
    res: Option<(usize, usize)>,
    #[arg(long)]
    max_iter: Option<u32>,
    #[arg(long)]
    r_in: Option<f64>,
    #[arg(long)]
    r_out: Option<f64>,
    /// Image path; the sidecar goes next to it with a .json extension
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<FamilySpec, String> {
    FamilySpec::parse(s).map_err(|e| e.to_string())
}

fn parse_window(s: &str) -> Result<Window, String> {
    Window::parse(s).map_err(|e| e.to_string())
}

fn parse_res(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or_else(|| format!("resolution `{s}` is not WIDTHxHEIGHT"))?;
    match (w.parse(), h.parse()) {
        (Ok(w), Ok(h)) if w > 0 && h > 0 => Ok((w, h)),
        _ => Err(format!("resolution `{s}` is not WIDTHxHEIGHT")),
    }
}

impl TargetArgs {
    fn layer(self, c: RunConfig) -> RunConfig {
        RunConfig { target: self.target, target_len: self.target_len, ..c }
    }
}

impl OutputArgs {
    fn layer(self, c: RunConfig) -> RunConfig {
        RunConfig { format: self.format, output: self.output, ..c }
    }
}

impl Command {
    /// The command name and the configuration given by its flags.
    fn into_config(self) -> (CommandName, RunConfig) {
        let d = RunConfig::default();
        match self {
            Command::Model(a) => (
                CommandName::Model,
                RunConfig { n: a.n, samples: a.samples, seed: a.seed, output: a.output, ..d },
            ),
            Command::Tune(a) => (
                CommandName::Tune,
                a.target.layer(RunConfig {
                    n: a.n,
                    tol: a.tol,
                    depth: a.depth,
                    max_orbit: a.max_orbit,
                    output: a.output,
                    ..d
                }),
            ),
            Command::Renorm(a) => (
                CommandName::Renorm,
                a.out.layer(a.target.layer(RunConfig {
                    families: a.family.map(|f| vec![f]),
                    depth: a.depth,
                    tol: a.tol,
                    max_orbit: a.max_orbit,
                    samples: a.samples,
                    ..d
                })),
            ),
            Command::Universality(a) => (CommandName::Universality, a.into_config()),
            Command::Convergence(a) => (CommandName::Convergence, a.into_config()),
            Command::Delta(a) => (
                CommandName::Delta,
                a.out.layer(a.target.layer(RunConfig { n: a.n, depth: a.depth, ..d })),
            ),
            Command::Julia(a) => (
                CommandName::Julia,
                a.target.layer(RunConfig {
                    n: a.n,
                    theta: a.theta,
                    tol: a.tol,
                    window: a.window,
                    width: a.res.map(|r| r.0),
                    height: a.res.map(|r| r.1),
                    max_iter: a.max_iter,
                    r_in: a.r_in,
                    r_out: a.r_out,
                    output: a.output,
                    ..d
                }),
            ),
        }
    }
}

impl MultiArgs {
    fn into_config(self) -> RunConfig {
        let families = (!self.families.is_empty()).then_some(self.families);
        self.out.layer(self.target.layer(RunConfig {
            families,
            depth: self.depth,
            tol: self.tol,
            max_orbit: self.max_orbit,
            samples: self.samples,
            ..RunConfig::default()
        }))
    }
}

/// A failure with the process exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidTerm { .. }
            | Error::InsufficientTerms { .. }
            | Error::EmptyExpansion
            | Error::Domain(_)
            | Error::NotBracketed { .. }
            | Error::Io(_) => 2,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    let (name, flags) = cli.command.into_config();
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cfg = flags.over(file).resolve(name)?;
    let exec = Exec::Parallel;
    let work = || -> Result<commands::Outcome, CliError> {
        let outcome = match name {
            CommandName::Model => commands::model(&cfg),
            CommandName::Tune => commands::tune(&cfg),
            CommandName::Renorm => commands::renorm(&cfg, exec),
            CommandName::Universality => commands::universality(&cfg, exec),
            CommandName::Convergence => commands::convergence(&cfg, exec),
            CommandName::Delta => commands::delta(&cfg, exec),
            CommandName::Julia => return commands::julia(&cfg, exec),
        }?;
        if let Some(path) = &cfg.output {
            commands::write_file(path, &outcome.body)?;
            return Ok(commands::Outcome { body: Vec::new(), ..outcome });
        }
        Ok(outcome)
    };
    with_threads(cli.threads, work)
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T>(_threads: Option<usize>, f: impl FnOnce() -> T) -> T {
    f()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(&outcome.body).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::from(u8::from(outcome.truncated))
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
