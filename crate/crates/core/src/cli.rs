//! Batch front end: configuration, scenario runners and report output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::Error;
use crate::measures::{self, MeasureRegistry};
use crate::quantum::KrausChannel;
use crate::scenarios::{self, Example2Config};
use crate::symmetry;
use crate::universality::{self, ChannelSource, TheoremConfig, TheoremStats};

/// Significant digits kept in every numeric report field.
pub const REPORT_DIGITS: usize = 12;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;

const DEFAULT_TOLERANCE: f64 = universality::DEFAULT_FREEZE_TOL;
const DEFAULT_CONSEQUENCE_TOLERANCE: f64 = 1e-8;
const CLOSED_FORM_DISTANCE: f64 = 1e-10;
const TRACE_FLOOR: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    ConfigParse(String),
    #[error("cannot write {path}: {source}")]
    FileWrite {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigParse(_) | CliError::FileWrite { .. } => EXIT_CONFIG,
            CliError::Run(_) => EXIT_INVARIANT,
        }
    }
}

fn config_err(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::ConfigParse(format!("key `{key}`: {msg}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Example1,
    Example2,
    Theorem,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Example1 => "example1",
            Scenario::Example2 => "example2",
            Scenario::Theorem => "theorem",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SourceArg {
    Random,
    CovariantUnitary,
    Identity,
    Mixed,
}

impl From<SourceArg> for ChannelSource {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Random => ChannelSource::Random,
            SourceArg::CovariantUnitary => ChannelSource::CovariantUnitary,
            SourceArg::Identity => ChannelSource::Identity,
            SourceArg::Mixed => ChannelSource::Mixed,
        }
    }
}

/// An amplitude written as a number, a `[re, im]` pair or a string like `"0.6+0.8i"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AmplitudeSpec {
    Real(f64),
    Pair([f64; 2]),
    Text(String),
}

impl AmplitudeSpec {
    fn to_complex(&self) -> Result<Complex64, CliError> {
        match self {
            AmplitudeSpec::Real(x) => Ok(Complex64::new(*x, 0.0)),
            AmplitudeSpec::Pair([re, im]) => Ok(Complex64::new(*re, *im)),
            AmplitudeSpec::Text(s) => Complex64::from_str(s.trim())
                .map_err(|_| config_err("lambda", format!("cannot parse `{s}`"))),
        }
    }
}

/// Flat key set shared by the config file and the command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: Option<Scenario>,
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub p_grid: Option<Vec<f64>>,
    pub lambda: Option<Vec<AmplitudeSpec>>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub t_max: Option<usize>,
    pub fock_dim: Option<usize>,
    pub trials: Option<usize>,
    pub dim: Option<usize>,
    pub group_order: Option<usize>,
    pub charges: Option<Vec<i64>>,
    pub tolerance: Option<f64>,
    pub consequence_tolerance: Option<f64>,
    pub channel_source: Option<SourceArg>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        RawConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl RawConfig {
    /// Values in `top` win over values in `self`.
    pub fn overlay(self, top: RawConfig) -> RawConfig {
        let base = self;
        overlay!(base, top; scenario, seed, format, out, p_grid, lambda, n, m, t_max, fock_dim,
            trials, dim, group_order, charges, tolerance, consequence_tolerance, channel_source)
    }

    fn scenario_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut mark = |set: bool, key| {
            if set {
                keys.push(key)
            }
        };
        mark(self.p_grid.is_some(), "p_grid");
        mark(self.lambda.is_some(), "lambda");
        mark(self.n.is_some(), "N");
        mark(self.m.is_some(), "M");
        mark(self.t_max.is_some(), "t_max");
        mark(self.fock_dim.is_some(), "fock_dim");
        mark(self.trials.is_some(), "trials");
        mark(self.dim.is_some(), "dim");
        mark(self.group_order.is_some(), "group_order");
        mark(self.charges.is_some(), "charges");
        mark(self.channel_source.is_some(), "channel_source");
        keys
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioParams {
    Example1 {
        p_grid: Vec<f64>,
        amplitudes: [Complex64; 2],
    },
    Example2(Example2Config),
    Theorem {
        config: TheoremConfig,
        group_order: usize,
        dim: usize,
        charges: Vec<i64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ScenarioParams,
    pub seed: Option<u64>,
    pub tolerance: f64,
    pub consequence_tolerance: f64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn scenario(&self) -> Scenario {
        match self.params {
            ScenarioParams::Example1 { .. } => Scenario::Example1,
            ScenarioParams::Example2(_) => Scenario::Example2,
            ScenarioParams::Theorem { .. } => Scenario::Theorem,
        }
    }
}

/// `0, 0.1, …, 1`.
pub fn default_p_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn positive_tol(key: &str, v: Option<f64>, default: f64) -> Result<f64, CliError> {
    match v {
        None => Ok(default),
        Some(t) if t.is_finite() && t > 0.0 => Ok(t),
        Some(t) => Err(config_err(
            key,
            format!("must be positive and finite, got {t}"),
        )),
    }
}

fn amplitudes(raw: &RawConfig) -> Result<Option<Vec<Complex64>>, CliError> {
    raw.lambda
        .as_ref()
        .map(|l| l.iter().map(AmplitudeSpec::to_complex).collect())
        .transpose()
}

fn lib_to_config(key: &str, e: Error) -> CliError {
    config_err(key, e)
}

/// Validates a merged key set and fills defaults.
pub fn validate(raw: RawConfig) -> Result<RunConfig, CliError> {
    let scenario = raw
        .scenario
        .ok_or_else(|| config_err("scenario", "required"))?;
    let allowed: &[&str] = match scenario {
        Scenario::Example1 => &["p_grid", "lambda"],
        Scenario::Example2 => &["lambda", "N", "M", "t_max", "fock_dim"],
        Scenario::Theorem => &["trials", "dim", "group_order", "charges", "channel_source"],
    };
    if let Some(k) = raw
        .scenario_keys()
        .into_iter()
        .find(|k| !allowed.contains(k))
    {
        return Err(config_err(
            k,
            format!("not used by scenario {}", scenario.name()),
        ));
    }
    let tolerance = positive_tol("tolerance", raw.tolerance, DEFAULT_TOLERANCE)?;
    let consequence_tolerance = positive_tol(
        "consequence_tolerance",
        raw.consequence_tolerance,
        DEFAULT_CONSEQUENCE_TOLERANCE,
    )?;
    let lambda = amplitudes(&raw)?;

    let params = match scenario {
        Scenario::Example1 => {
            let p_grid = raw.p_grid.clone().unwrap_or_else(default_p_grid);
            if let Some(p) = p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(config_err("p_grid", format!("{p} not in [0, 1]")));
            }
            let amps = match lambda {
                None => [Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2],
                Some(v) => <[Complex64; 2]>::try_from(v).map_err(|v| {
                    config_err("lambda", format!("needs 2 amplitudes, got {}", v.len()))
                })?,
            };
            scenarios::Example1Config::new(0.0, amps).map_err(|e| lib_to_config("lambda", e))?;
            ScenarioParams::Example1 {
                p_grid,
                amplitudes: amps,
            }
        }
        Scenario::Example2 => {
            let spacing = raw.n.unwrap_or(3);
            let t_max = raw.t_max.unwrap_or(2);
            let amps = match (lambda, raw.m) {
                (Some(v), Some(m)) if v.len() != m + 1 => {
                    return Err(config_err(
                        "M",
                        format!("M = {m} but lambda has {} entries", v.len()),
                    ))
                }
                (Some(v), _) => v,
                (None, m) => {
                    let m = m.unwrap_or(1);
                    vec![Complex64::new(1.0 / ((m + 1) as f64).sqrt(), 0.0); m + 1]
                }
            };
            let m = amps.len().saturating_sub(1);
            let fock_dim = raw
                .fock_dim
                .unwrap_or_else(|| scenarios::default_fock_dim(spacing, m, t_max));
            let cfg =
                Example2Config::with_fock_dim(spacing, amps, t_max, fock_dim).map_err(|e| {
                    let key = match e {
                        Error::GuardBandViolation { .. } => "fock_dim",
                        Error::NotNormalized { .. } => "lambda",
                        _ => "N",
                    };
                    lib_to_config(key, e)
                })?;
            ScenarioParams::Example2(cfg)
        }
        Scenario::Theorem => {
            let seed = raw
                .seed
                .ok_or_else(|| config_err("seed", "required for theorem runs"))?;
            let trials = raw.trials.unwrap_or(100);
            let group_order = raw.group_order.unwrap_or(6);
            let dim = raw.dim.unwrap_or(6);
            if trials == 0 {
                return Err(config_err("trials", "must be positive"));
            }
            if group_order == 0 {
                return Err(config_err("group_order", "must be positive"));
            }
            if dim == 0 {
                return Err(config_err("dim", "must be positive"));
            }
            let charges = raw
                .charges
                .clone()
                .unwrap_or_else(|| (0..dim as i64).map(|c| c % group_order as i64).collect());
            if charges.len() != dim {
                return Err(config_err(
                    "charges",
                    format!("expected {dim} entries, got {}", charges.len()),
                ));
            }
            let source = raw
                .channel_source
                .map(ChannelSource::from)
                .unwrap_or_default();
            ScenarioParams::Theorem {
                config: TheoremConfig::new(trials, seed).with_source(source),
                group_order,
                dim,
                charges,
            }
        }
    };
    let format = raw.format.unwrap_or(match scenario {
        Scenario::Theorem => OutputFormat::Json,
        _ => OutputFormat::Csv,
    });
    Ok(RunConfig {
        params,
        seed: raw.seed,
        tolerance,
        consequence_tolerance,
        format,
        out: raw.out,
    })
}

pub fn parse_raw(text: &str) -> Result<RawConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))
}

/// Parses and validates a JSON config object.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    validate(parse_raw(text)?)
}

#[derive(Debug, Parser)]
#[command(
    name = "asymfreeze",
    version,
    about = "Asymmetry freezing under covariant channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its report.
    Run(RunArgs),
}

/// Flags override keys from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scenario: Option<Scenario>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Comma-separated values of p.
    #[arg(long = "p-grid", value_delimiter = ',')]
    pub p_grid: Option<Vec<f64>>,
    /// Comma-separated amplitudes such as `0.6,0.8i`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long = "t-max")]
    pub t_max: Option<usize>,
    #[arg(long = "fock-dim")]
    pub fock_dim: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long = "group-order")]
    pub group_order: Option<usize>,
    /// Comma-separated integer charges.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub charges: Option<Vec<i64>>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long = "consequence-tolerance")]
    pub consequence_tolerance: Option<f64>,
    #[arg(long = "channel-source", value_enum)]
    pub channel_source: Option<SourceArg>,
}

impl RunArgs {
    fn overrides(&self) -> RawConfig {
        RawConfig {
            scenario: self.scenario,
            seed: self.seed,
            format: self.format,
            out: self.out.clone(),
            p_grid: self.p_grid.clone(),
            lambda: self.lambda.as_ref().map(|s| {
                s.split(',')
                    .map(|t| AmplitudeSpec::Text(t.trim().to_string()))
                    .collect()
            }),
            n: self.n,
            m: self.m,
            t_max: self.t_max,
            fock_dim: self.fock_dim,
            trials: self.trials,
            dim: self.dim,
            group_order: self.group_order,
            charges: self.charges.clone(),
            tolerance: self.tolerance,
            consequence_tolerance: self.consequence_tolerance,
            channel_source: self.channel_source,
        }
    }

    /// Reads `--config` if given and applies the flag overrides.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::ConfigParse(format!("cannot read {}: {e}", path.display()))
                })?;
                parse_raw(&text)?
            }
            None => RawConfig::default(),
        };
        validate(base.overlay(self.overrides()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(round_sig(*x))
                .map(Value::Number)
                .unwrap_or(Value::Null),
            Cell::Int(n) => Value::from(*n),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Missing => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: Scenario,
    /// Header lines, written as `#` comments in CSV.
    pub notes: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Invariant failures; empty on success.
    pub failures: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_PASS
        } else {
            EXIT_INVARIANT
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }
}

/// Rounds to [`REPORT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{:.*e}", REPORT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest representation that round-trips the rounded value.
pub fn format_number(x: f64) -> String {
    let r = round_sig(x);
    if r.is_nan() {
        "NaN".into()
    } else if r.is_infinite() {
        if r > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{r:?}")
    }
}

pub fn render_csv(report: &Report) -> String {
    let mut s = String::new();
    for note in &report.notes {
        let _ = writeln!(s, "# {note}");
    }
    let _ = writeln!(s, "{}", report.columns.join(","));
    for row in &report.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

pub fn render_json(report: &Report) -> String {
    let mut obj = Map::new();
    obj.insert("scenario".into(), Value::from(report.scenario.name()));
    obj.insert("passed".into(), Value::Bool(report.passed()));
    obj.insert("failures".into(), Value::from(report.failures.clone()));
    obj.insert("notes".into(), Value::from(report.notes.clone()));
    let as_object = |row: &Vec<Cell>| {
        let mut m = Map::new();
        for (c, v) in report.columns.iter().zip(row) {
            m.insert((*c).into(), v.json());
        }
        m
    };
    if report.scenario == Scenario::Theorem && report.rows.len() == 1 {
        obj.extend(as_object(&report.rows[0]));
    } else {
        obj.insert(
            "rows".into(),
            Value::Array(
                report
                    .rows
                    .iter()
                    .map(|r| Value::Object(as_object(r)))
                    .collect(),
            ),
        );
    }
    let mut text =
        serde_json::to_string_pretty(&Value::Object(obj)).expect("JSON values serialize");
    text.push('\n');
    text
}

pub fn render(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(report),
        OutputFormat::Json => render_json(report),
    }
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(
    report: &Report,
    format: OutputFormat,
    path: Option<&Path>,
) -> Result<(), CliError> {
    let text = render(report, format);
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::FileWrite {
            path: p.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::FileWrite {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn run_example1(p_grid: &[f64], amps: [Complex64; 2], cfg: &RunConfig) -> Result<Report, CliError> {
    let rep = symmetry::two_qubit_u1();
    let registry = measures::measure_registry(&rep);
    let initial = scenarios::example1_state(amps[0], amps[1])?;
    let mut channels = vec![KrausChannel::identity(4)];
    let mut trajectory = vec![initial.clone()];
    for &p in p_grid {
        let ch = scenarios::example1_channel(p)?;
        trajectory.push(ch.apply(&initial)?);
        channels.push(ch);
    }
    let fr = universality::freezing_report(
        &rep,
        &trajectory,
        &registry,
        cfg.tolerance,
        Some(&channels),
    )?;
    let ar0 = fr.steps[0]
        .value(measures::RELATIVE_ENTROPY_OF_ASYMMETRY)
        .unwrap_or(f64::NAN);
    let skew0 = fr.steps[0]
        .value(measures::SKEW_INFORMATION)
        .unwrap_or(f64::NAN);

    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for (&p, step) in p_grid.iter().zip(&fr.steps[1..]) {
        let ar = step
            .value(measures::RELATIVE_ENTROPY_OF_ASYMMETRY)
            .unwrap_or(f64::NAN);
        let skew = step.value(measures::SKEW_INFORMATION).unwrap_or(f64::NAN);
        let residual = step.recovery_residual.unwrap_or(f64::NAN);
        let frozen = (ar - ar0).abs() <= cfg.tolerance;
        if !frozen {
            failures.push(format!("p = {p}: A_r moved by {:e}", ar - ar0));
        }
        if !((skew - skew0).abs() <= cfg.consequence_tolerance) {
            failures.push(format!(
                "p = {p}: skew information moved by {:e}",
                skew - skew0
            ));
        }
        if !(residual <= cfg.consequence_tolerance) {
            failures.push(format!("p = {p}: recovery residual {residual:e}"));
        }
        rows.push(vec![
            Cell::Num(p),
            Cell::Num(ar),
            Cell::Num(skew),
            Cell::Num(residual),
            Cell::Bool(frozen),
        ]);
    }
    Ok(Report {
        scenario: Scenario::Example1,
        notes: vec![
            format!(
                "lambda = ({}, {})",
                format_complex(amps[0]),
                format_complex(amps[1])
            ),
            "entropies in bits".into(),
        ],
        columns: vec!["p", "ar_bits", "skew", "recovery_residual", "frozen"],
        rows,
        failures,
    })
}

fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format_number(z.re)
    } else {
        format!("{}{:+}i", format_number(z.re), round_sig(z.im))
    }
}

fn run_example2(cfg2: &Example2Config, cfg: &RunConfig) -> Result<Report, CliError> {
    let d = cfg2.fock_dim;
    let rep = symmetry::fock_u1(d)?;
    let registry = measures::measure_registry(&rep);
    let trajectory = scenarios::example2_trajectory(cfg2)?;
    let fr = universality::freezing_report(&rep, &trajectory, &registry, cfg.tolerance, None)?;
    let ar0 = fr.steps[0]
        .value(measures::RELATIVE_ENTROPY_OF_ASYMMETRY)
        .unwrap_or(f64::NAN);
    let skew0 = fr.steps[0]
        .value(measures::SKEW_INFORMATION)
        .unwrap_or(f64::NAN);

    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for (t, (rho, step)) in trajectory.iter().zip(&fr.steps).enumerate() {
        let ar = step
            .value(measures::RELATIVE_ENTROPY_OF_ASYMMETRY)
            .unwrap_or(f64::NAN);
        let frozen = (ar - ar0).abs() <= cfg.tolerance;
        let trace = rho.trace();
        if t < cfg2.spacing {
            if !frozen {
                failures.push(format!("t = {t}: A_r moved by {:e}", ar - ar0));
            }
            let skew = step.value(measures::SKEW_INFORMATION).unwrap_or(f64::NAN);
            if !((skew - skew0).abs() <= cfg.consequence_tolerance) {
                failures.push(format!(
                    "t = {t}: skew information moved by {:e}",
                    skew - skew0
                ));
            }
            let dist = rho.trace_distance(&scenarios::example2_closed_form(cfg2, t)?)?;
            if !(dist <= CLOSED_FORM_DISTANCE) {
                failures.push(format!("t = {t}: closed form off by {dist:e}"));
            }
        }
        if !(trace >= 1.0 - TRACE_FLOOR) {
            failures.push(format!("t = {t}: trace {trace}"));
        }
        rows.push(vec![
            Cell::Int(t),
            Cell::Num(ar),
            Cell::Num(trace),
            Cell::Bool(frozen),
        ]);
    }
    let n = cfg2.spacing;
    let m = cfg2.m();
    let auto = scenarios::default_fock_dim(n, m, cfg2.t_max);
    Ok(Report {
        scenario: Scenario::Example2,
        notes: vec![
            format!("N = {n}, M = {m}, t_max = {}", cfg2.t_max),
            format!(
                "fock_dim = {d}; default rule (2M+1)N + t_max + 2 = ({}){n} + {} + 2 = {auto}",
                2 * m + 1,
                cfg2.t_max
            ),
            format!("rows with t >= N = {n} are reported but not asserted"),
            "entropies in bits".into(),
        ],
        columns: vec!["t", "ar_bits", "trace", "frozen"],
        rows,
        failures,
    })
}

fn stats_row(stats: &TheoremStats) -> (Vec<&'static str>, Vec<Cell>) {
    (
        vec![
            "trials",
            "frozen_count",
            "max_ar_drop",
            "max_measure_deviation",
            "max_recovery_residual",
            "monotonicity_violations",
            "sandwich_violations",
            "forward_violations",
            "near_frozen_count",
        ],
        vec![
            Cell::Int(stats.trials),
            Cell::Int(stats.frozen_count),
            Cell::Num(stats.max_ar_drop),
            Cell::Num(stats.max_measure_deviation),
            Cell::Num(stats.max_recovery_residual),
            Cell::Int(stats.monotonicity_violations),
            Cell::Int(stats.sandwich_violations),
            Cell::Int(stats.forward_violations),
            Cell::Int(stats.near_frozen_count),
        ],
    )
}

fn source_name(s: ChannelSource) -> &'static str {
    match s {
        ChannelSource::Random => "random",
        ChannelSource::CovariantUnitary => "covariant_unitary",
        ChannelSource::Identity => "identity",
        ChannelSource::Mixed => "mixed",
    }
}

fn run_theorem(
    tc: &TheoremConfig,
    group_order: usize,
    dim: usize,
    charges: &[i64],
) -> Result<Report, CliError> {
    let rep = symmetry::cyclic(group_order, dim, charges)?;
    let registry = MeasureRegistry::extended(&rep);
    let stats = universality::theorem_check(&rep, &registry, tc)?;
    let mut failures = Vec::new();
    if stats.monotonicity_violations > 0 {
        failures.push(format!(
            "{} monotonicity violations",
            stats.monotonicity_violations
        ));
    }
    if stats.sandwich_violations > 0 {
        failures.push(format!("{} sandwich violations", stats.sandwich_violations));
    }
    if stats.forward_violations > 0 {
        failures.push(format!(
            "{} frozen trials with moved measures or failed recovery",
            stats.forward_violations
        ));
    }
    let (columns, row) = stats_row(&stats);
    let charge_list: Vec<String> = charges.iter().map(i64::to_string).collect();
    Ok(Report {
        scenario: Scenario::Theorem,
        notes: vec![
            format!("seed = {}", tc.seed),
            format!(
                "group = Z_{group_order}, dim = {dim}, charges = [{}]",
                charge_list.join(", ")
            ),
            format!("channel_source = {}", source_name(tc.source)),
        ],
        columns,
        rows: vec![row],
        failures,
    })
}

/// Runs the configured scenario.
pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    match &cfg.params {
        ScenarioParams::Example1 { p_grid, amplitudes } => run_example1(p_grid, *amplitudes, cfg),
        ScenarioParams::Example2(c2) => run_example2(c2, cfg),
        ScenarioParams::Theorem {
            config,
            group_order,
            dim,
            charges,
        } => run_theorem(config, *group_order, *dim, charges),
    }
}

/// Resolves, runs and emits; returns the process exit code.
pub fn execute(args: &RunArgs) -> i32 {
    let outcome = args.resolve().and_then(|cfg| {
        let report = run(&cfg)?;
        emit_report(&report, cfg.format, cfg.out.as_deref())?;
        Ok(report)
    });
    match outcome {
        Ok(report) => {
            for f in &report.failures {
                eprintln!("invariant failed: {f}");
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main_with(cli: Cli) -> i32 {
    match cli.command {
        Command::Run(args) => execute(&args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_definition() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from([
            "asymfreeze",
            "run",
            "--scenario",
            "theorem",
            "--seed",
            "5",
            "--charges",
            "0,-1,2",
            "--p-grid",
            "0.1,0.2",
            "--N",
            "4",
            "--lambda",
            "0.6,0.8i",
        ])
        .unwrap();
        let Command::Run(args) = cli.command;
        assert_eq!(args.charges, Some(vec![0, -1, 2]));
        assert_eq!(args.p_grid, Some(vec![0.1, 0.2]));
        assert_eq!(args.n, Some(4));
        let raw = args.overrides();
        assert_eq!(raw.lambda.unwrap().len(), 2);
    }

    #[test]
    fn example1_defaults() {
        let cfg = parse_config(r#"{"scenario":"example1"}"#).unwrap();
        match &cfg.params {
            ScenarioParams::Example1 { p_grid, amplitudes } => {
                assert_eq!(p_grid.len(), 11);
                assert_eq!(p_grid[3], 0.3);
                assert_eq!(
                    amplitudes[0],
                    Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
                );
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.format, OutputFormat::Csv);
        assert_eq!(cfg.tolerance, 1e-9);
    }

    #[test]
    fn example2_auto_fock_dim() {
        let cfg = parse_config(r#"{"scenario":"example2","N":3,"M":1,"t_max":2}"#).unwrap();
        match cfg.params {
            ScenarioParams::Example2(c) => assert_eq!(c.fock_dim, 13),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_errors() {
        let err = |s: &str| match parse_config(s) {
            Err(CliError::ConfigParse(msg)) => msg,
            other => panic!("{s}: {other:?}"),
        };
        assert!(err(r#"{"scenario":"theorem"}"#).contains("seed"));
        assert!(err(r#"{"scenario":"example1","bogus":1}"#).contains("bogus"));
        assert!(err("{\n \"scenario\": \"example1\",\n \"p_grid\": [0.1, \n").contains("line"));
        assert!(err(r#"{"scenario":"example1","p_grid":[1.5]}"#).contains("p_grid"));
        assert!(err(r#"{"scenario":"example1","lambda":[1, 1]}"#).contains("lambda"));
        assert!(err(r#"{"scenario":"example1","trials":3}"#).contains("trials"));
        assert!(err(r#"{"scenario":"example2","fock_dim":12}"#).contains("fock_dim"));
        assert!(err(r#"{"scenario":"example2","M":2,"lambda":[1]}"#).contains("M"));
        assert!(err(r#"{"scenario":"theorem","seed":1,"charges":[0,1]}"#).contains("charges"));
        assert!(err(r#"{"scenario":"example1","tolerance":-1}"#).contains("tolerance"));
        assert!(err(r#"{}"#).contains("scenario"));
    }

    #[test]
    fn amplitude_forms() {
        let cfg = parse_config(r#"{"scenario":"example1","lambda":[[0.6,0],"0.8i"]}"#).unwrap();
        match cfg.params {
            ScenarioParams::Example1 { amplitudes, .. } => {
                assert_eq!(
                    amplitudes,
                    [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]
                )
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flags_override_file() {
        let base = parse_raw(r#"{"scenario":"theorem","seed":1,"trials":5}"#).unwrap();
        let top = RawConfig {
            seed: Some(9),
            ..Default::default()
        };
        let merged = base.overlay(top);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.trials, Some(5));
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(1.0), "1.0");
        assert_eq!(format_number(1.0000000000000002), "1.0");
        assert_eq!(format_number(0.1 + 0.2), "0.3");
        assert_eq!(format_number(-0.0), "0.0");
        assert_eq!(format_number(1.23456789012345e-20), "1.23456789012e-20");
        assert_eq!(format_number(0.8812908992306927), "0.881290899231");
        assert_eq!(format_number(f64::NAN), "NaN");
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let cfg = parse_config(r#"{"scenario":"example1","p_grid":[]}"#).unwrap();
        let report = run(&cfg).unwrap();
        assert!(report.passed());
        let csv = render_csv(&report);
        let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, vec!["p,ar_bits,skew,recovery_residual,frozen"]);
    }

    #[test]
    fn example1_report() {
        let report = run(&parse_config(r#"{"scenario":"example1"}"#).unwrap()).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        assert_eq!(report.rows.len(), 11);
        for cell in report.column("ar_bits").unwrap() {
            assert_eq!(cell.csv(), "1.0");
        }
    }

    #[test]
    fn example2_report() {
        let report =
            run(&parse_config(r#"{"scenario":"example2","N":3,"M":1,"t_max":2}"#).unwrap())
                .unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        assert_eq!(report.rows.len(), 3);
        assert!(report
            .column("frozen")
            .unwrap()
            .iter()
            .all(|c| **c == Cell::Bool(true)));
        assert!(render_csv(&report).contains("(2M+1)N + t_max + 2"));
    }

    #[test]
    fn theorem_report_json() {
        let cfg = parse_config(r#"{"scenario":"theorem","seed":42,"trials":10}"#).unwrap();
        let report = run(&cfg).unwrap();
        assert!(report.passed(), "{:?}", report.failures);
        let v: Value = serde_json::from_str(&render_json(&report)).unwrap();
        for key in [
            "trials",
            "frozen_count",
            "max_ar_drop",
            "max_measure_deviation",
            "max_recovery_residual",
            "monotonicity_violations",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["trials"], 10);
        assert_eq!(v["monotonicity_violations"], 0);
    }
}
