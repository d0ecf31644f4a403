//! Run configuration: command-line flags layered over an optional JSON file
//! layered over per-command defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use renormlab::experiments::Window;
use renormlab::{ContinuedFraction, FamilySpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Model,
    Tune,
    Renorm,
    Universality,
    Convergence,
    Delta,
    Julia,
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        write!(f, "{}", s.as_str().unwrap_or_default())
    }
}

/// Every parameter of a run. Unset fields fall through to the next layer;
/// after [`RunConfig::resolve`] exactly the fields the command reads are set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<FamilySpec>>,
    /// `golden`, `silver`, `periodic:a,b,...`, or explicit terms `a,b,...`
    /// (append `,...` for a prefix of a longer expansion).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_orbit: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_out: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

macro_rules! layer {
    ($top:expr, $bottom:expr, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($bottom.$f),)* }
    };
}

pub const DEFAULT_TARGET: &str = "golden";
pub const DEFAULT_TARGET_LEN: usize = 64;
pub const DEFAULT_MAX_ORBIT: u64 = 2_000_000;
pub const DEFAULT_SAMPLES: usize = 1024;

fn default_families() -> Vec<FamilySpec> {
    vec![
        FamilySpec::Blaschke { n: 3, theta: None },
        FamilySpec::BlaschkePrecomposed { n: 3, theta: None, a: 0.3 },
    ]
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("invalid config {}: {e}", path.display())))
    }

    /// Fields set in `self` win over those in `below`.
    pub fn over(self, below: RunConfig) -> RunConfig {
        layer!(
            self, below, command, n, theta, families, target, target_len, depth, tol, max_orbit, samples,
            window, width, height, max_iter, r_in, r_out, format, output, seed
        )
    }

    /// Keeps the fields `cmd` reads and fills the missing ones with defaults.
    pub fn resolve(self, cmd: CommandName) -> Result<RunConfig, CliError> {
        if let Some(c) = self.command.filter(|&c| c != cmd) {
            return Err(CliError::input(format!("config is for `{c}`, not `{cmd}`")));
        }
        let c = self;
        let target = |c: &RunConfig| (c.target.clone().or(Some(DEFAULT_TARGET.into())), c.target_len.or(Some(DEFAULT_TARGET_LEN)));
        let mut out = RunConfig { command: Some(cmd), output: c.output.clone(), ..RunConfig::default() };
        match cmd {
            CommandName::Model => {
                out.n = c.n.or(Some(3));
                out.samples = c.samples.or(Some(256));
                out.seed = c.seed.or(Some(0));
            }
            CommandName::Tune => {
                out.n = c.n.or(Some(3));
                (out.target, out.target_len) = target(&c);
                out.tol = c.tol.or(Some(1e-10));
                out.depth = c.depth.or(Some(12));
                out.max_orbit = c.max_orbit.or(Some(DEFAULT_MAX_ORBIT));
            }
            CommandName::Renorm | CommandName::Universality | CommandName::Convergence => {
                let families = match cmd {
                    CommandName::Renorm => vec![FamilySpec::Blaschke { n: 3, theta: None }],
                    _ => default_families(),
                };
                out.families = c.families.clone().or(Some(families));
                (out.target, out.target_len) = target(&c);
                out.depth = c.depth.or(Some(if cmd == CommandName::Renorm { 8 } else { 12 }));
                out.tol = c.tol.or(Some(0.0));
                out.max_orbit = c.max_orbit.or(Some(DEFAULT_MAX_ORBIT));
                out.samples = c.samples.or(Some(DEFAULT_SAMPLES));
                out.format = c.format.or(Some(Format::Csv));
            }
            CommandName::Delta => {
                out.n = c.n.or(Some(3));
                (out.target, out.target_len) = target(&c);
                out.depth = c.depth.or(Some(12));
                out.format = c.format.or(Some(Format::Csv));
            }
            CommandName::Julia => {
                out.n = c.n.or(Some(3));
                out.theta = c.theta;
                if c.theta.is_none() {
                    (out.target, out.target_len) = target(&c);
                    out.tol = c.tol.or(Some(0.0));
                }
                out.window = c.window.or(Some(Window { re_min: -2.0, re_max: 2.0, im_min: -2.0, im_max: 2.0 }));
                out.width = c.width.or(Some(800));
                out.height = c.height.or(Some(800));
                out.max_iter = c.max_iter.or(Some(renormlab::experiments::raster::DEFAULT_MAX_ITER));
                out.r_in = c.r_in.or(Some(renormlab::experiments::raster::DEFAULT_R_IN));
                out.r_out = c.r_out.or(Some(renormlab::experiments::raster::DEFAULT_R_OUT));
                if out.output.is_none() {
                    return Err(CliError::input("julia needs --output for the image"));
                }
            }
        }
        Ok(out)
    }

    /// Target expansion named by `target` with `target_len` terms.
    pub fn target_cf(&self) -> Result<ContinuedFraction, CliError> {
        parse_target(self.target.as_deref().unwrap_or(DEFAULT_TARGET), self.target_len.unwrap_or(DEFAULT_TARGET_LEN))
    }

    /// One-line JSON form, as echoed in outputs.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Parses a target description; see [`RunConfig::target`].
pub fn parse_target(s: &str, len: usize) -> Result<ContinuedFraction, CliError> {
    let s = s.trim();
    let terms = |list: &str| -> Result<Vec<i64>, CliError> {
        list.split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|_| CliError::input(format!("bad term `{t}` in target `{s}`"))))
            .collect()
    };
    match s {
        "golden" => Ok(ContinuedFraction::golden(len)),
        "silver" => Ok(ContinuedFraction::silver(len)),
        _ => {
            if let Some(period) = s.strip_prefix("periodic:") {
                let p = terms(period)?;
                if p.is_empty() || p.iter().any(|&t| t < 1) {
                    return Err(CliError::input(format!("period of `{s}` must be positive integers")));
                }
                let p: Vec<u64> = p.into_iter().map(|t| t as u64).collect();
                return Ok(ContinuedFraction::periodic(&p, len));
            }
            let cf = match s.strip_suffix(",...") {
                Some(prefix) => ContinuedFraction::truncated(&terms(prefix)?),
                None => ContinuedFraction::from_terms(&terms(s)?),
            };
            cf.map_err(|e| CliError::input(format!("target `{s}`: {e}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering() {
        let file = RunConfig { n: Some(5), depth: Some(4), ..Default::default() };
        let flags = RunConfig { depth: Some(7), ..Default::default() };
        let c = flags.over(file).resolve(CommandName::Delta).unwrap();
        assert_eq!((c.n, c.depth, c.target.as_deref()), (Some(5), Some(7), Some("golden")));
        assert_eq!(c.window, None);
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig { theta: Some(0.1 + 0.2), window: Some(Window::parse("-1,1,-0.5,0.5").unwrap()), ..Default::default() };
        let c = c.over(RunConfig { output: Some("x.ppm".into()), ..Default::default() });
        let c = c.resolve(CommandName::Julia).unwrap();
        let back: RunConfig = serde_json::from_str(&c.to_json_line()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn command_mismatch() {
        let c = RunConfig { command: Some(CommandName::Tune), ..Default::default() };
        assert!(c.resolve(CommandName::Delta).is_err());
    }

    #[test]
    fn targets() {
        assert_eq!(parse_target("golden", 5).unwrap().terms(), &[1; 5]);
        assert_eq!(parse_target("periodic:1,2", 5).unwrap().terms(), &[1, 2, 1, 2, 1]);
        assert!(parse_target("1,2,3", 64).unwrap().is_rational());
        assert!(!parse_target("1,2,3,...", 64).unwrap().is_exhausted());
        assert!(parse_target("1,0", 64).is_err());
        assert!(parse_target("periodic:", 64).is_err());
    }
}
