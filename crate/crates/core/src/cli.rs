//! Experiment harness behind the `mopuc` binary.
//!
//! Every subcommand reads a JSON config (`"schema": 1`) and writes one
//! output file. Exit codes: 0 success, 2 config or validation error,
//! 3 numerical failure or a failed consistency check.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::kernels::{circle_identity_residual, default_cd_pairs, ratio_unitarity, verify_cd, Residual};
use crate::matkernel::CMat;
use crate::measure::MatMeasure;
use crate::opuc::{build_system, leading_ladder_check, Normalization, OPUCSystem};
use crate::quadrature::circle_grid;
use crate::rakhmanov::{hn_bound_check, ratio_deviation, scan};
use crate::recurrence::{bernstein_szego_measure, favard_synthesize, ReflectionSequence};

pub const SCHEMA_VERSION: u32 = 1;
pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Tolerances applied by `verify`.
pub const CD_TOL: f64 = 1e-9;
pub const CIRCLE_TOL: f64 = 1e-10;
pub const UNITARITY_TOL: f64 = 1e-10;
pub const LADDER_TOL: f64 = 1e-9;
pub const RATIO_DEV_SLACK: f64 = 1e-10;
const VERIFY_GRID: usize = 256;

#[derive(Parser, Debug)]
#[command(name = "mopuc", version, about = "Orthogonal matrix polynomials on the unit circle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Io {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Moment table mu_{-M}..mu_M of the configured measure.
    Moments(Io),
    /// Orthonormal system and reflection coefficients up to degree N.
    Opuc(Io),
    /// System synthesized from reflection coefficients, with round-trip check.
    Favard(Io),
    /// Decay report: CSV at --out, JSON next to it.
    Scan(Io),
    /// Identity and bound checks on a stored, built or synthesized system.
    Verify(Io),
}

#[derive(Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RandomReflections {
    pub p: usize,
    pub n: usize,
    #[serde(default = "default_max_norm")]
    pub max_norm: f64,
}

fn default_max_norm() -> f64 {
    0.9
}

#[derive(Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default)]
    pub measure: Option<MatMeasure>,
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    #[serde(rename = "Lmax", default = "default_lmax")]
    pub lmax: usize,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub seed: u64,
    /// Moment order for `moments`; defaults to `N`.
    #[serde(rename = "M", default)]
    pub moment_order: Option<usize>,
    #[serde(default)]
    pub reflections: Option<ReflectionSequence>,
    /// Seeded random coefficients, used when `reflections` is absent.
    #[serde(default)]
    pub random: Option<RandomReflections>,
    /// Initial value for synthesis; identity when absent.
    #[serde(default)]
    pub phi0: Option<CMat>,
    /// Stored system for `verify`, relative to the config file.
    #[serde(default)]
    pub system: Option<PathBuf>,
}

fn default_lmax() -> usize {
    8
}

fn default_resolution() -> usize {
    2048
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_validation() { EXIT_INVALID } else { EXIT_NUMERICAL };
        CliError { code, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        if let Some(sys) = &cfg.system {
            if sys.is_relative() {
                cfg.system = Some(path.parent().unwrap_or(Path::new(".")).join(sys));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid(format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema)));
        }
        if self.n == Some(0) {
            return Err(invalid("N must be >= 1"));
        }
        if self.lmax == 0 {
            return Err(invalid("Lmax must be >= 1"));
        }
        if self.resolution == 0 || !self.resolution.is_multiple_of(2) {
            return Err(invalid(format!("resolution must be a positive multiple of 2, got {}", self.resolution)));
        }
        Ok(())
    }

    fn measure(&self) -> CliResult<&MatMeasure> {
        self.measure.as_ref().ok_or_else(|| invalid("config has no measure"))
    }

    fn degree(&self) -> CliResult<usize> {
        self.n.ok_or_else(|| invalid("config has no N"))
    }

    /// Explicit coefficients, else seeded random ones.
    pub fn reflection_sequence(&self) -> CliResult<ReflectionSequence> {
        if let Some(seq) = &self.reflections {
            return Ok(seq.clone());
        }
        let r = self.random.as_ref().ok_or_else(|| invalid("config has neither reflections nor random"))?;
        Ok(ReflectionSequence::random(self.seed, r.p, r.n, r.max_norm)?)
    }
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

pub fn cmd_moments(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let order = match cfg.moment_order {
        Some(m) => m,
        None => cfg.degree()?,
    };
    let table = cfg.measure()?.moment_table(order)?;
    write(out, &to_json(&table))
}

pub fn cmd_opuc(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let sys = build_system(cfg.measure()?, cfg.degree()?)?;
    write(out, &to_json(&sys))
}

#[derive(Serialize)]
struct FavardOutput {
    input_singular_values: Vec<Vec<f64>>,
    recovered_singular_values: Vec<Vec<f64>>,
    roundtrip_discrepancy: f64,
    system: OPUCSystem,
}

pub fn cmd_favard(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let seq = cfg.reflection_sequence()?;
    let phi0 = cfg.phi0.clone().unwrap_or_else(|| CMat::identity(seq.p()));
    let sys = favard_synthesize(&seq, &phi0)?;
    let n = seq.len();
    let rebuilt = build_system(&bernstein_szego_measure(&sys, n)?, n)?;
    let svs = |hs: &[CMat]| hs.iter().map(CMat::singular_values).collect::<crate::Result<Vec<_>>>();
    let input = svs(seq.as_slice())?;
    let recovered = svs(rebuilt.reflections())?;
    let discrepancy = input
        .iter()
        .flatten()
        .zip(recovered.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    write(
        out,
        &to_json(&FavardOutput {
            input_singular_values: input,
            recovered_singular_values: recovered,
            roundtrip_discrepancy: discrepancy,
            system: sys,
        }),
    )
}

/// JSON companion of a scan CSV: `report.csv` -> `report.json`.
pub fn json_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn cmd_scan(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let report = scan(cfg.measure()?, cfg.degree()?, cfg.lmax, cfg.resolution)?;
    let json = json_path(out);
    if json == out {
        return Err(invalid("--out must not end in .json for scan"));
    }
    write(out, &report.to_csv())?;
    let mut text = report.to_json();
    text.push('\n');
    write(&json, &text)
}

/// Worst case of one family of checks.
#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct CheckSummary {
    pub name: String,
    pub tolerance: f64,
    pub worst_value: f64,
    pub worst_degree: usize,
    /// Rounding floor at the worst point, already added to the tolerance.
    pub floor: f64,
    pub pass: bool,
}

impl CheckSummary {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            tolerance,
            worst_value: 0.0,
            worst_degree: 0,
            floor: 0.0,
            pass: true,
        }
    }

    fn record(&mut self, n: usize, value: f64, floor: f64, pass: bool) {
        if value > self.worst_value || (!pass && self.pass) {
            self.worst_value = value;
            self.worst_degree = n;
            self.floor = floor;
        }
        self.pass &= pass;
    }

    fn record_residual(&mut self, n: usize, r: &Residual, pass: bool) {
        self.record(n, r.value(), r.floor(), pass);
    }
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub p: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub checks: Vec<CheckSummary>,
    pub pass: bool,
}

/// Christoffel-Darboux, circle identity, ratio unitarity, leading ladder,
/// `||H_{n+1}||` against the averaged defect and the ratio deviation bound.
/// The ladder and the ratio deviation are skipped for HPD-normalized systems.
pub fn verify_system(sys: &OPUCSystem, lmax: usize, resolution: usize) -> crate::Result<VerifyReport> {
    let n_max = sys.degree();
    let pairs = default_cd_pairs();
    let grid = circle_grid(VERIFY_GRID);
    let mut cd = CheckSummary::new("christoffel_darboux", CD_TOL);
    let mut circle = CheckSummary::new("circle_identity", CIRCLE_TOL);
    let mut unitary = CheckSummary::new("ratio_unitarity", UNITARITY_TOL);
    let mut ladder = CheckSummary::new("leading_ladder", LADDER_TOL);
    let mut bound = CheckSummary::new("hn_bound", crate::rakhmanov::HN_BOUND_SLACK);
    let mut ratio = CheckSummary::new("ratio_deviation", RATIO_DEV_SLACK);
    let recurrence = sys.normalization() == Normalization::RecurrenceNormalized;
    for n in 0..=n_max {
        let r = verify_cd(sys, n, &pairs)?;
        cd.record_residual(n, &r, r.passes(CD_TOL));
        let r = circle_identity_residual(sys, n, &grid)?;
        circle.record_residual(n, &r, r.passes(CIRCLE_TOL));
        let u = ratio_unitarity(sys, n, &grid)?;
        let merged = u.deviation.clone().merge(u.consistency.clone());
        unitary.record_residual(n, &merged, u.passes(UNITARITY_TOL));
        if recurrence && n >= 1 {
            let h = sys.h(n).spectral_norm()?;
            let r = ratio_deviation(sys, n, &grid)?;
            ratio.record_residual(n, &r, r.below(h + RATIO_DEV_SLACK));
        }
        if n >= 1 && n < n_max {
            let ok = hn_bound_check(sys, n, lmax.min(n_max - n), resolution)?;
            bound.record(n, if ok { 0.0 } else { 1.0 }, 0.0, ok);
        }
    }
    let mut checks = vec![cd, circle, unitary, bound];
    if recurrence {
        let l = leading_ladder_check(sys);
        ladder.record(n_max, l, 0.0, l <= LADDER_TOL);
        checks.extend([ladder, ratio]);
    }
    Ok(VerifyReport {
        p: sys.p(),
        n: n_max,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

fn load_system(path: &Path) -> CliResult<OPUCSystem> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// System named by the config: a stored file, else a measure built to `N`,
/// else a synthesis from reflection coefficients.
fn config_system(cfg: &ExperimentConfig) -> CliResult<OPUCSystem> {
    if let Some(path) = &cfg.system {
        return load_system(path);
    }
    if cfg.measure.is_some() {
        return Ok(build_system(cfg.measure()?, cfg.degree()?)?);
    }
    let seq = cfg.reflection_sequence()?;
    let phi0 = cfg.phi0.clone().unwrap_or_else(|| CMat::identity(seq.p()));
    Ok(favard_synthesize(&seq, &phi0)?)
}

pub fn cmd_verify(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let sys = config_system(cfg)?;
    let report = verify_system(&sys, cfg.lmax, cfg.resolution)?;
    write(out, &to_json(&report))?;
    if report.pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        Err(CliError {
            code: EXIT_NUMERICAL,
            message: format!("consistency check failed: {}", failed.join(", ")),
        })
    }
}

fn thread_count() -> CliResult<usize> {
    match std::env::var("MOPUC_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| invalid(format!("MOPUC_THREADS must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

pub fn dispatch(command: &Command) -> CliResult<()> {
    let (io, f): (&Io, fn(&ExperimentConfig, &Path) -> CliResult<()>) = match command {
        Command::Moments(io) => (io, cmd_moments),
        Command::Opuc(io) => (io, cmd_opuc),
        Command::Favard(io) => (io, cmd_favard),
        Command::Scan(io) => (io, cmd_scan),
        Command::Verify(io) => (io, cmd_verify),
    };
    let cfg = ExperimentConfig::load(&io.config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError {
            code: EXIT_NUMERICAL,
            message: e.to_string(),
        })?;
    pool.install(|| f(&cfg, &io.out))
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
