//! One function per subcommand. Each returns the bytes to emit and whether
//! the run was cut short.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renormlab::blaschke::{tune_phase, InvariantReport, ModelJson, TuneOptions, TuneResult};
use renormlab::circlemap::{FamilyRegistry, ResolvedFamily};
use renormlab::experiments::delta::DeltaReport;
use renormlab::experiments::raster::{ClassCounts, RasterParams};
use renormlab::experiments::{
    delta_estimate, julia_raster, renorm_convergence, universality_compare, ConvergenceOptions, ConvergenceReport,
    UniversalityOptions, UniversalityReport,
};
use renormlab::pairs::renorm_orbit;
use renormlab::{BlaschkeFraction, CommutingPair, ContinuedFraction, Exec, RenormRecord, SCHEMA_VERSION};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::CliError;

pub struct Outcome {
    pub body: Vec<u8>,
    /// Some requested level or check was not reached.
    pub truncated: bool,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    config: &'a RunConfig,
    report: T,
}

fn json<T: Serialize>(cfg: &RunConfig, report: T) -> Vec<u8> {
    let env = Envelope { schema_version: SCHEMA_VERSION, config: cfg, report };
    let mut s = serde_json::to_string_pretty(&env).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn csv_preamble(cfg: &RunConfig, header: &str) -> String {
    format!("# config: {}\n{header}\n", cfg.to_json_line())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn tune_options(cfg: &RunConfig) -> TuneOptions {
    TuneOptions {
        tol_theta: cfg.tol.unwrap_or(0.0),
        max_orbit: cfg.max_orbit.unwrap_or(crate::config::DEFAULT_MAX_ORBIT),
        ..TuneOptions::default()
    }
}

fn resolve_families(cfg: &RunConfig, target: &ContinuedFraction, exec: Exec) -> Result<Vec<ResolvedFamily>, CliError> {
    let registry = FamilyRegistry::new();
    let opts = tune_options(cfg);
    let specs = cfg.families.clone().unwrap_or_default();
    exec.map(specs, |s| registry.resolve(&s, Some(target), &opts))
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(CliError::from)
}

#[derive(Serialize)]
struct ModelReport {
    model: ModelJson,
    invariants: InvariantReport,
    /// `max | |B(z)| - 1 |` over seeded random points of the unit circle.
    random_circle_residual: f64,
}

pub fn model(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = BlaschkeFraction::build(cfg.n.unwrap_or(3))?;
    let invariants = model.check_invariants();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    let random_circle_residual = (0..cfg.samples.unwrap_or(256))
        .map(|_| {
            let z = Complex64::from_polar(1.0, std::f64::consts::TAU * rng.gen::<f64>());
            model.eval(z).map_or(f64::INFINITY, |w| (w.norm() - 1.0).abs())
        })
        .fold(0.0, f64::max);
    let passed = invariants.all_passed && random_circle_residual < 1e-12;
    let report = ModelReport { model: model.to_json(), invariants, random_circle_residual };
    Ok(Outcome { body: json(cfg, report), truncated: !passed })
}

#[derive(Serialize)]
struct TuneReport {
    target: ContinuedFraction,
    target_value: f64,
    /// `|achieved rho - target value|`.
    error: f64,
    tuning: TuneResult,
}

pub fn tune(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let target = cfg.target_cf()?;
    let lift = BlaschkeFraction::build(cfg.n.unwrap_or(3))?.circle_lift()?;
    let depth = cfg.depth.unwrap_or(12);
    let opts = TuneOptions { min_depth: depth, ..tune_options(cfg) };
    let tuning = tune_phase(&lift, &target, &opts)?;
    let target_value = target.approx_value();
    let error = (tuning.achieved.rho - target_value).abs();
    let truncated = tuning.certified_levels < depth;
    Ok(Outcome { body: json(cfg, TuneReport { target, target_value, error, tuning }), truncated })
}

pub fn renorm(cfg: &RunConfig, exec: Exec) -> Result<Outcome, CliError> {
    let target = cfg.target_cf()?;
    let family = resolve_families(cfg, &target, exec)?
        .into_iter()
        .next()
        .ok_or_else(|| CliError::input("renorm needs one family"))?;
    let max_orbit = cfg.max_orbit.unwrap_or(crate::config::DEFAULT_MAX_ORBIT);
    let depth = cfg.depth.unwrap_or(8);
    let pair = CommutingPair::from_circle_map(family.map.clone(), 0, max_orbit)?.with_iterate_budget(max_orbit);
    let orbit = renorm_orbit(&pair, depth, 0, Some((cfg.samples.unwrap_or(1024), exec)));
    let stopped = orbit.stopped.as_ref().map(|e| e.to_string());
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                family: String,
                records: &'a [RenormRecord],
                stopped: Option<String>,
            }
            json(cfg, Report { family: family.label(), records: &orbit.records, stopped })
        }
        Format::Csv => {
            let mut s = csv_preamble(cfg, RenormRecord::CSV_HEADER);
            for r in &orbit.records {
                let _ = writeln!(s, "{}", r.csv_row());
            }
            if let Some(e) = stopped {
                let _ = writeln!(s, "# warning: truncated after level {}: {e}", orbit.records.len().saturating_sub(1));
            }
            s.into_bytes()
        }
    };
    // a truncated orbit is still a complete answer up to the floor
    Ok(Outcome { body, truncated: false })
}

pub const UNIVERSALITY_HEADER: &str = "level,family,ratio,certified,discrepancy,c0_distance";

pub fn universality(cfg: &RunConfig, exec: Exec) -> Result<Outcome, CliError> {
    let target = cfg.target_cf()?;
    let families = resolve_families(cfg, &target, exec)?;
    let depth = cfg.depth.unwrap_or(12);
    let opts = UniversalityOptions {
        depth,
        max_orbit: cfg.max_orbit.unwrap_or(crate::config::DEFAULT_MAX_ORBIT),
        samples: cfg.samples.unwrap_or(1024),
    };
    let report = universality_compare(&families, &target, &opts, exec)?;
    let truncated = report.certified_depth < depth;
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => json(cfg, &report),
        Format::Csv => universality_csv(cfg, &report).into_bytes(),
    };
    Ok(Outcome { body, truncated })
}

fn universality_csv(cfg: &RunConfig, report: &UniversalityReport) -> String {
    let mut s = csv_preamble(cfg, UNIVERSALITY_HEADER);
    for (j, f) in report.families.iter().enumerate() {
        for (i, ratio) in f.ratios.iter().enumerate() {
            let level = i + 1;
            let dist = j.checked_sub(1).and_then(|k| report.pair_distances.get(k)).and_then(|d| d.get(level));
            let _ = writeln!(
                s,
                "{level},\"{}\",{ratio:e},{},{},{}",
                f.label.replace('"', "\"\""),
                i < f.certified,
                opt(report.discrepancy.get(i).map(|d| format!("{d:e}"))),
                opt(dist.map(|d| format!("{d:e}"))),
            );
        }
    }
    let _ = writeln!(s, "# certified_depth: {}", report.certified_depth);
    s
}

pub const CONVERGENCE_HEADER: &str = "level,height,distance,uncertainty,resolved";

pub fn convergence(cfg: &RunConfig, exec: Exec) -> Result<Outcome, CliError> {
    let target = cfg.target_cf()?;
    let families = resolve_families(cfg, &target, exec)?;
    let [a, b] = &families[..] else {
        return Err(CliError::input(format!("convergence needs exactly two families, got {}", families.len())));
    };
    let depth = cfg.depth.unwrap_or(12);
    let opts = ConvergenceOptions {
        depth,
        samples: cfg.samples.unwrap_or(1024),
        max_orbit: cfg.max_orbit.unwrap_or(crate::config::DEFAULT_MAX_ORBIT),
        stop_when_unresolved: false,
    };
    let report = renorm_convergence(a, b, &opts, exec)?;
    let truncated = report.certified_depth.map_or(true, |d| d < depth);
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => json(cfg, &report),
        Format::Csv => convergence_csv(cfg, &report).into_bytes(),
    };
    Ok(Outcome { body, truncated })
}

fn convergence_csv(cfg: &RunConfig, report: &ConvergenceReport) -> String {
    let mut s = csv_preamble(cfg, CONVERGENCE_HEADER);
    for l in &report.levels {
        let _ = writeln!(s, "{},{},{:e},{:e},{}", l.level, l.height, l.distance, l.uncertainty, l.resolved);
    }
    let _ = writeln!(s, "# certified_depth: {}", opt(report.certified_depth));
    if let Some(e) = &report.stopped {
        let _ = writeln!(s, "# warning: {e}");
    }
    s
}

pub const DELTA_HEADER: &str = "m,theta,q,p,residual,d,relative_change";

pub fn delta(cfg: &RunConfig, exec: Exec) -> Result<Outcome, CliError> {
    let target = cfg.target_cf()?;
    let depth = cfg.depth.unwrap_or(12);
    let report = delta_estimate(cfg.n.unwrap_or(3), &target, depth, exec)?;
    let truncated = report.roots.len() < depth;
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => json(cfg, &report),
        Format::Csv => delta_csv(cfg, &report).into_bytes(),
    };
    Ok(Outcome { body, truncated })
}

fn delta_csv(cfg: &RunConfig, report: &DeltaReport) -> String {
    let mut s = csv_preamble(cfg, DELTA_HEADER);
    for (i, r) in report.roots.iter().enumerate() {
        let m = i + 1;
        let d = report.ratios.iter().find(|d| d.m == m);
        let _ = writeln!(
            s,
            "{m},{:e},{},{},{:e},{},{}",
            r.theta,
            r.q,
            r.p,
            r.residual,
            opt(d.map(|d| format!("{:e}", d.d))),
            opt(d.and_then(|d| d.relative_change).map(|c| format!("{c:e}"))),
        );
    }
    let _ = writeln!(
        s,
        "# theta_star: {:e}, stabilized_at: {}, alternates: {}, approaches: {}",
        report.theta_star,
        opt(report.stabilized_at),
        report.alternates,
        report.approaches
    );
    if let Some(e) = &report.stopped {
        let _ = writeln!(s, "# warning: {e}");
    }
    s
}

#[derive(Serialize)]
struct JuliaSidecar<'a> {
    schema_version: u32,
    config: &'a RunConfig,
    n: u32,
    theta: f64,
    tuning: Option<TuneResult>,
    params: RasterParams,
    counts: ClassCounts,
    classified_fraction: f64,
}

pub fn julia(cfg: &RunConfig, exec: Exec) -> Result<Outcome, CliError> {
    let base = BlaschkeFraction::build(cfg.n.unwrap_or(3))?;
    let (theta, tuning) = match cfg.theta {
        Some(t) => (t, None),
        None => {
            let target = cfg.target_cf()?;
            let res = tune_phase(&base.circle_lift()?, &target, &tune_options(cfg))?;
            (res.theta, Some(res))
        }
    };
    let model = base.with_theta(theta);
    let window = cfg.window.ok_or_else(|| CliError::input("julia needs --window"))?;
    let mut params = RasterParams::new(window, cfg.width.unwrap_or(800), cfg.height.unwrap_or(800));
    params.max_iter = cfg.max_iter.unwrap_or(params.max_iter);
    params.r_in = cfg.r_in.unwrap_or(params.r_in);
    params.r_out = cfg.r_out.unwrap_or(params.r_out);
    let img = julia_raster(&model, &params, exec)?;

    let out = cfg.output.as_deref().ok_or_else(|| CliError::input("julia needs --output"))?;
    let mut ppm = Vec::new();
    img.write_ppm(&mut ppm)?;
    write_file(out, &ppm)?;
    let sidecar = JuliaSidecar {
        schema_version: SCHEMA_VERSION,
        config: cfg,
        n: img.n,
        theta: img.theta,
        tuning,
        params: img.params,
        counts: img.counts(),
        classified_fraction: img.classified_fraction(),
    };
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    text.push('\n');
    write_file(&out.with_extension("json"), text.as_bytes())?;
    Ok(Outcome { body: text.into_bytes(), truncated: false })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}
