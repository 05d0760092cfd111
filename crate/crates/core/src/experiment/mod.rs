//! Parameter sweeps over chains and reliabilities, written as CSV.
//!
//! An [`ExperimentConfig`] names the schemes, a base chain and reliability
//! regime, one sweep axis and the evaluation methods. Every
//! (point, scheme, method, metric) cell is evaluated independently, in
//! parallel, and rows are written in canonical order, so the same config
//! and seed always give the same bytes.

mod demo;
pub mod presets;

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic;
use crate::model::{
    validate_hybrid_layout, ChainSpec, ChainSpecConfig, ComponentReliability, HybridLayoutConfig, ModelError,
    Overhead, ReliabilityParams, Scheme, Side, Target,
};
use crate::montecarlo::{self, McConfig, McError};
use crate::oracle::{Oracle, OracleError, DEFAULT_COMPONENT_BOUND};

pub use demo::{codec_demo, CodecDemoReport, GenerationOutcome, LossPattern};

pub const CSV_HEADER: [&str; 11] = [
    "series",
    "sweep_param",
    "sweep_value",
    "scheme",
    "method",
    "metric",
    "value",
    "ci_low",
    "ci_high",
    "trials",
    "seed",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    MonteCarlo(#[from] McError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Oracle,
    Mc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Oracle => "oracle",
            Method::Mc => "mc",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(Method::Analytic),
            "oracle" => Ok(Method::Oracle),
            "mc" => Ok(Method::Mc),
            other => Err(format!("unknown method {other:?} (analytic, oracle, mc)")),
        }
    }
}

/// Scheme as named in configs; hybrid variants take the experiment layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeName {
    #[serde(rename = "unprotected")]
    Unprotected,
    #[serde(rename = "backup-vnf")]
    BackupVnfOnly,
    #[serde(rename = "backup")]
    Backup,
    #[serde(rename = "coding")]
    Coding,
    #[serde(rename = "hybrid")]
    Hybrid,
    #[serde(rename = "layout-backup")]
    LayoutBackup,
}

impl SchemeName {
    pub const ALL: [SchemeName; 6] = [
        SchemeName::Unprotected,
        SchemeName::BackupVnfOnly,
        SchemeName::Backup,
        SchemeName::Coding,
        SchemeName::Hybrid,
        SchemeName::LayoutBackup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeName::Unprotected => "unprotected",
            SchemeName::BackupVnfOnly => "backup-vnf",
            SchemeName::Backup => "backup",
            SchemeName::Coding => "coding",
            SchemeName::Hybrid => "hybrid",
            SchemeName::LayoutBackup => "layout-backup",
        }
    }

    fn needs_layout(self) -> bool {
        matches!(self, SchemeName::Hybrid | SchemeName::LayoutBackup)
    }

    /// Overhead reported next to the success metric, if any.
    pub fn overhead(self) -> Option<Overhead> {
        match self {
            SchemeName::Backup => Some(Overhead::Redirection),
            SchemeName::Coding => Some(Overhead::Decoding),
            _ => None,
        }
    }

    /// Resolves the scheme for one chain, validating the layout against it.
    pub fn resolve(self, spec: &ChainSpec, layout: Option<&HybridLayoutConfig>) -> Result<Scheme, ExperimentError> {
        let layout = || -> Result<_, ExperimentError> {
            let config = layout.ok_or_else(|| ExperimentError::config(format!("scheme {} needs a layout", self.name())))?;
            Ok(validate_hybrid_layout(config, spec)?)
        };
        Ok(match self {
            SchemeName::Unprotected => Scheme::Unprotected,
            SchemeName::BackupVnfOnly => Scheme::BackupVnfOnly,
            SchemeName::Backup => Scheme::Backup,
            SchemeName::Coding => Scheme::Coding,
            SchemeName::Hybrid => Scheme::Hybrid(layout()?),
            SchemeName::LayoutBackup => Scheme::LayoutBackup(layout()?),
        })
    }
}

impl std::str::FromStr for SchemeName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeName::ALL
            .into_iter()
            .find(|n| n.name() == s)
            .ok_or_else(|| format!("unknown scheme {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "success")]
    Success,
    #[serde(rename = "P_R")]
    Redirection,
    #[serde(rename = "P_dec")]
    Decoding,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Success => "success",
            Metric::Redirection => "P_R",
            Metric::Decoding => "P_dec",
        }
    }

    fn overhead(self) -> Option<Overhead> {
        match self {
            Metric::Success => None,
            Metric::Redirection => Some(Overhead::Redirection),
            Metric::Decoding => Some(Overhead::Decoding),
        }
    }
}

/// Hybrid layout as either the full part list or the compact `H3,P1,H1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayoutSpec {
    Compact(String),
    Full(HybridLayoutConfig),
}

impl LayoutSpec {
    pub fn to_config(&self) -> Result<HybridLayoutConfig, ExperimentError> {
        match self {
            LayoutSpec::Compact(text) => HybridLayoutConfig::parse_compact(text).map_err(ExperimentError::Config),
            LayoutSpec::Full(config) => Ok(config.clone()),
        }
    }
}

/// Axis a sweep moves along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    K,
    R,
    /// Total VNF count, spread evenly over the chain's servers.
    Psi,
    /// One component class, on one side or on both.
    Reliability { class: Class, side: Option<Side> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    Conn,
    Server,
    Vnf,
}

impl Class {
    fn name(self) -> &'static str {
        match self {
            Class::Conn => "conn",
            Class::Server => "server",
            Class::Vnf => "vnf",
        }
    }

    fn set(self, c: &mut ComponentReliability, value: f64) {
        match self {
            Class::Conn => c.conn = value,
            Class::Server => c.server = value,
            Class::Vnf => c.vnf = value,
        }
    }
}

impl SweepParam {
    pub fn is_integral(self) -> bool {
        matches!(self, SweepParam::K | SweepParam::R | SweepParam::Psi)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepParam::K => f.write_str("k"),
            SweepParam::R => f.write_str("r"),
            SweepParam::Psi => f.write_str("Psi"),
            SweepParam::Reliability { class, side: None } => f.write_str(class.name()),
            SweepParam::Reliability {
                class,
                side: Some(Side::Main),
            } => write!(f, "main.{}", class.name()),
            SweepParam::Reliability {
                class,
                side: Some(Side::Redundant),
            } => write!(f, "redundant.{}", class.name()),
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (side, class) = match s.split_once('.') {
            Some(("main", c)) => (Some(Side::Main), c),
            Some(("redundant", c)) => (Some(Side::Redundant), c),
            Some(_) => return Err(format!("unknown sweep parameter {s:?}")),
            None => (None, s),
        };
        let class = match class {
            "k" if side.is_none() => return Ok(SweepParam::K),
            "r" if side.is_none() => return Ok(SweepParam::R),
            "Psi" if side.is_none() => return Ok(SweepParam::Psi),
            "conn" => Class::Conn,
            "server" => Class::Server,
            "vnf" => Class::Vnf,
            _ => return Err(format!("unknown sweep parameter {s:?}")),
        };
        Ok(SweepParam::Reliability { class, side })
    }
}

impl Serialize for SweepParam {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SweepParam {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    #[serde(default = "one")]
    pub step: f64,
}

fn one() -> f64 {
    1.0
}

impl Sweep {
    /// The points `from, from + step, …` up to `to` inclusive.
    pub fn values(&self) -> Result<Vec<f64>, ExperimentError> {
        if self.step.is_nan() || self.step <= 0.0 || self.step.is_infinite() {
            return Err(ExperimentError::config(format!("sweep.step must be positive, got {}", self.step)));
        }
        if self.from.is_nan() || self.to.is_nan() || self.from > self.to {
            return Err(ExperimentError::config(format!(
                "sweep range is empty: from {} > to {}",
                self.from, self.to
            )));
        }
        let count = ((self.to - self.from) / self.step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(ExperimentError::config("sweep has more than 100000 points"));
        }
        let values: Vec<f64> = (0..count)
            .map(|i| round_to(self.from + i as f64 * self.step, 12))
            .collect();
        if self.param.is_integral() && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(ExperimentError::config(format!("sweep over {} needs whole numbers", self.param)));
        }
        Ok(values)
    }
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (v * scale).round() / scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label for this config's rows in the `series` column.
    #[serde(default)]
    pub series: String,
    pub schemes: Vec<SchemeName>,
    pub chain: ChainSpecConfig,
    pub reliability: ReliabilityParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutSpec>,
    pub sweep: Sweep,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Restricts the metrics emitted; defaults to every applicable one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<Metric>>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Monte-Carlo worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_bound")]
    pub oracle_bound: usize,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Analytic]
}

fn default_trials() -> u64 {
    1_000_000
}

fn default_seed() -> u64 {
    1
}

fn default_bound() -> usize {
    DEFAULT_COMPONENT_BOUND
}

/// A config file holds one experiment or a list of them.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    Many(Vec<ExperimentConfig>),
    One(Box<ExperimentConfig>),
}

pub fn parse_configs(json: &str) -> Result<Vec<ExperimentConfig>, ExperimentError> {
    // untagged enums hide the real error, so retry as a single object for it
    match serde_json::from_str::<ConfigFile>(json) {
        Ok(ConfigFile::Many(v)) => Ok(v),
        Ok(ConfigFile::One(c)) => Ok(vec![*c]),
        Err(_) => {
            let single = if json.trim_start().starts_with('[') {
                serde_json::from_str::<Vec<ExperimentConfig>>(json).map(|_| unreachable!())
            } else {
                serde_json::from_str::<ExperimentConfig>(json).map(|_| unreachable!())
            };
            Err(ExperimentError::config(single.unwrap_err().to_string()))
        }
    }
}

/// One sweep point, fully resolved.
#[derive(Debug, Clone)]
pub struct Point {
    pub value: f64,
    pub spec: ChainSpec,
    pub reliability: ReliabilityParams,
    pub layout: Option<HybridLayoutConfig>,
}

impl ExperimentConfig {
    /// Checks everything that does not depend on the sweep point and
    /// resolves every point.
    pub fn points(&self) -> Result<Vec<Point>, ExperimentError> {
        if self.schemes.is_empty() {
            return Err(ExperimentError::config("schemes is empty"));
        }
        if self.methods.is_empty() {
            return Err(ExperimentError::config("methods is empty"));
        }
        if self.methods.contains(&Method::Mc) && self.trials == 0 {
            return Err(ExperimentError::config("trials must be positive for method mc"));
        }
        if let Some(metrics) = &self.metrics {
            if metrics.is_empty() {
                return Err(ExperimentError::config("metrics is empty"));
            }
        }
        let layout = self.layout.as_ref().map(LayoutSpec::to_config).transpose()?;
        if layout.is_none() {
            if let Some(s) = self.schemes.iter().find(|s| s.needs_layout()) {
                return Err(ExperimentError::config(format!("scheme {} needs a layout", s.name())));
            }
        }
        let base = ChainSpec::try_from(self.chain.clone())?;
        self.reliability.validate()?;
        self.sweep
            .values()?
            .into_iter()
            .map(|value| {
                let mut spec = base.clone();
                let mut reliability = self.reliability;
                match self.sweep.param {
                    SweepParam::K => spec = base.with_k(value as usize)?,
                    SweepParam::R => spec = base.with_r(value as usize)?,
                    SweepParam::Psi => spec = ChainSpec::even(base.k(), base.r(), base.n(), value as usize)?,
                    SweepParam::Reliability { class, side } => {
                        if !(0.0..=1.0).contains(&value) {
                            return Err(ModelError::NotAProbability {
                                name: class.name(),
                                value,
                            }
                            .into());
                        }
                        match side {
                            Some(Side::Main) => class.set(&mut reliability.main, value),
                            Some(Side::Redundant) => class.set(&mut reliability.redundant, value),
                            None => {
                                class.set(&mut reliability.main, value);
                                class.set(&mut reliability.redundant, value);
                            }
                        }
                    }
                }
                for scheme in &self.schemes {
                    scheme.resolve(&spec, layout.as_ref())?;
                }
                Ok(Point {
                    value,
                    spec,
                    reliability,
                    layout: layout.clone(),
                })
            })
            .collect()
    }

    fn metrics_for(&self, scheme: SchemeName) -> Vec<Metric> {
        let mut all = vec![Metric::Success];
        all.extend(scheme.overhead().map(|o| match o {
            Overhead::Redirection => Metric::Redirection,
            Overhead::Decoding => Metric::Decoding,
        }));
        match &self.metrics {
            Some(wanted) => all.into_iter().filter(|m| wanted.contains(m)).collect(),
            None => all,
        }
    }
}

/// A probability from one method; interval and trials only for Monte-Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Settings shared by every evaluation of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalSettings {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub oracle_bound: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            seed: default_seed(),
            workers: 0,
            oracle_bound: DEFAULT_COMPONENT_BOUND,
        }
    }
}

/// Evaluates `target` with one method.
pub fn evaluate(
    target: &Target,
    spec: &ChainSpec,
    rel: &ReliabilityParams,
    method: Method,
    settings: &EvalSettings,
) -> Result<Evaluation, ExperimentError> {
    let exact = |value| Evaluation {
        value,
        ci: None,
        trials: None,
        seed: None,
    };
    match method {
        Method::Analytic => Ok(exact(match target {
            Target::Success(scheme) => analytic::success(scheme, spec, rel),
            Target::Overhead(Overhead::Redirection) => analytic::prob_redirection(spec, rel),
            Target::Overhead(Overhead::Decoding) => analytic::prob_decoding(spec, rel),
        })),
        Method::Oracle => {
            let oracle = Oracle::with_bound(settings.oracle_bound);
            Ok(exact(match target {
                Target::Success(scheme) => oracle.exact_success(scheme, spec, rel)?,
                Target::Overhead(o) => oracle.exact_overhead(*o, spec, rel)?,
            }))
        }
        Method::Mc => {
            let config = McConfig::new(settings.trials, settings.seed).with_workers(settings.workers);
            let est = montecarlo::estimate(target, spec, rel, &config)?;
            Ok(Evaluation {
                value: est.mean,
                ci: Some((est.ci_low, est.ci_high)),
                trials: Some(est.trials),
                seed: Some(est.seed),
            })
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub series: String,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub scheme: String,
    pub method: String,
    pub metric: String,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

impl Row {
    pub fn record(&self) -> [String; 11] {
        let opt = |v: Option<f64>| v.map(format_value).unwrap_or_default();
        [
            self.series.clone(),
            self.sweep_param.clone(),
            format_value(self.sweep_value),
            self.scheme.clone(),
            self.method.clone(),
            self.metric.clone(),
            format_value(self.value),
            opt(self.ci_low),
            opt(self.ci_high),
            self.trials.map(|t| t.to_string()).unwrap_or_default(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        ]
    }
}

/// Shortest decimal form of `v` rounded to 12 significant digits.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Seed of the Monte-Carlo cell `(point, scheme, metric)` of a run.
fn cell_seed(master: u64, point: usize, scheme: usize, metric: Metric) -> u64 {
    let mut s = montecarlo::mix64(master);
    for part in [point as u64, scheme as u64, metric as u64] {
        s = montecarlo::mix64(s ^ montecarlo::mix64(part.wrapping_add(0x51_7cc1_b727_220a)));
    }
    s
}

/// Evaluates every cell of `config`; rows come back ordered by sweep
/// point, then scheme (config order), then method, then metric.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<Row>, ExperimentError> {
    let points = config.points()?;
    let mut cells = Vec::new();
    for (p, point) in points.iter().enumerate() {
        for (s, &scheme) in config.schemes.iter().enumerate() {
            for &method in &config.methods {
                for metric in config.metrics_for(scheme) {
                    cells.push((p, point, s, scheme, method, metric));
                }
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(p, point, s, scheme, method, metric)| {
            let target = match metric.overhead() {
                Some(o) => Target::Overhead(o),
                None => Target::Success(scheme.resolve(&point.spec, point.layout.as_ref())?),
            };
            let settings = EvalSettings {
                trials: config.trials,
                seed: cell_seed(config.seed, p, s, metric),
                workers: config.workers,
                oracle_bound: config.oracle_bound,
            };
            let eval = evaluate(&target, &point.spec, &point.reliability, method, &settings)?;
            Ok(Row {
                series: config.series.clone(),
                sweep_param: config.sweep.param.to_string(),
                sweep_value: point.value,
                scheme: scheme.name().into(),
                method: method.name().into(),
                metric: metric.name().into(),
                value: eval.value,
                ci_low: eval.ci.map(|c| c.0),
                ci_high: eval.ci.map(|c| c.1),
                trials: eval.trials,
                seed: eval.seed,
            })
        })
        .collect()
}

/// Runs every config in order and concatenates their rows.
pub fn run_all(configs: &[ExperimentConfig]) -> Result<Vec<Row>, ExperimentError> {
    let mut rows = Vec::new();
    for config in configs {
        rows.extend(run_experiment(config)?);
    }
    Ok(rows)
}

/// Writes `rows` as CSV, preceded by `# `-prefixed comment lines.
pub fn write_csv<W: Write>(mut out: W, comments: &[String], rows: &[Row]) -> Result<(), ExperimentError> {
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.record())?;
    }
    writer.flush()?;
    Ok(())
}
