use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sfc_reliability::analytic;
use sfc_reliability::experiment::{
    self, codec_demo, presets, EvalSettings, ExperimentError, LossPattern, Method, Metric,
    SchemeName,
};
use sfc_reliability::model::{
    ChainSpec, ComponentReliability, HybridLayoutConfig, Overhead, ReliabilityParams, Side, Target,
};
use sfc_reliability::oracle::DEFAULT_COMPONENT_BOUND;

/// Reliability of parallelized service function chains.
#[derive(Parser)]
#[command(name = "sfcrel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for Monte-Carlo runs [default: 1].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo trials [default: 1000000].
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    /// Monte-Carlo worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form probability.
    Analytic(ModelArgs),
    /// Exact probability by exhaustive state enumeration.
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        /// Largest component block enumerated exhaustively.
        #[arg(long, default_value_t = DEFAULT_COMPONENT_BOUND)]
        bound: usize,
    },
    /// Monte-Carlo estimate with a 95% Wilson interval.
    Mc(ModelArgs),
    /// Run a parameter sweep and write CSV.
    Sweep {
        /// Built-in sweep (see `presets`).
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<String>,
        /// JSON experiment config (one object or an array).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the evaluation methods, e.g. `analytic,mc`.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
    },
    /// Encode, drop and decode a synthetic flow.
    CodecDemo {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 30)]
        packets: usize,
        /// Comma-separated sub-flow indices to drop, `none`, or `random`.
        #[arg(long, default_value = "0")]
        loss: LossPattern,
    },
    /// List built-in sweeps.
    Presets,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "backup")]
    scheme: SchemeName,
    /// success, P_R or P_dec; overheads ignore --scheme.
    #[arg(long, default_value = "success", value_parser = parse_metric)]
    metric: Metric,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    r: usize,
    /// VNFs per server, e.g. `2,2`.
    #[arg(long, value_delimiter = ',', required = true)]
    psi: Vec<usize>,
    #[arg(long, default_value_t = presets::DEFAULT_REGIME.conn)]
    conn: f64,
    #[arg(long, default_value_t = presets::DEFAULT_REGIME.server)]
    server: f64,
    #[arg(long, default_value_t = presets::DEFAULT_REGIME.vnf)]
    vnf: f64,
    /// Redundant-side values; each defaults to its main-side value.
    #[arg(long)]
    red_conn: Option<f64>,
    #[arg(long)]
    red_server: Option<f64>,
    #[arg(long)]
    red_vnf: Option<f64>,
    /// Hybrid layout such as `H3,P1,H1`.
    #[arg(long)]
    layout: Option<String>,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown metric {s:?} (success, P_R, P_dec)"))
}

impl ModelArgs {
    fn resolve(&self) -> Result<(Target, ChainSpec, ReliabilityParams), ExperimentError> {
        let spec = ChainSpec::new(self.k, self.r, self.psi.clone())?;
        let main = ComponentReliability {
            conn: self.conn,
            server: self.server,
            vnf: self.vnf,
        };
        let redundant = ComponentReliability {
            conn: self.red_conn.unwrap_or(main.conn),
            server: self.red_server.unwrap_or(main.server),
            vnf: self.red_vnf.unwrap_or(main.vnf),
        };
        let rel = ReliabilityParams::new(main, redundant)?;
        let target = match self.metric {
            Metric::Success => {
                let layout = self
                    .layout
                    .as_deref()
                    .map(HybridLayoutConfig::parse_compact)
                    .transpose()
                    .map_err(ExperimentError::Config)?;
                Target::Success(self.scheme.resolve(&spec, layout.as_ref())?)
            }
            Metric::Redirection => Target::Overhead(Overhead::Redirection),
            Metric::Decoding => Target::Overhead(Overhead::Decoding),
        };
        Ok((target, spec, rel))
    }
}

#[derive(Serialize)]
struct EvalReport {
    method: &'static str,
    scheme: Option<&'static str>,
    metric: &'static str,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ci_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ci_high: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Per-sub-flow chain success (main, redundant).
    subflow_success: (f64, f64),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &ExperimentError) -> u8 {
    match e {
        ExperimentError::Config(_) | ExperimentError::Model(_) => 2,
        ExperimentError::Oracle(sfc_reliability::oracle::OracleError::StateSpaceTooLarge { .. }) => 3,
        ExperimentError::Oracle(_) | ExperimentError::MonteCarlo(_) => 2,
        ExperimentError::Io(_) | ExperimentError::Csv(_) => 1,
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, ExperimentError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    let common = cli.common;
    let settings = EvalSettings {
        trials: common.trials.unwrap_or(1_000_000),
        seed: common.seed.unwrap_or(1),
        workers: common.workers,
        oracle_bound: DEFAULT_COMPONENT_BOUND,
    };
    match cli.command {
        Command::Analytic(model) => evaluate(&model, Method::Analytic, &settings, &common),
        Command::Oracle { model, bound } => evaluate(
            &model,
            Method::Oracle,
            &EvalSettings {
                oracle_bound: bound,
                ..settings
            },
            &common,
        ),
        Command::Mc(model) => evaluate(&model, Method::Mc, &settings, &common),
        Command::Sweep {
            preset,
            config,
            methods,
        } => {
            let (mut configs, notes) = match (preset, config) {
                (Some(name), _) => {
                    let p = presets::preset(&name, settings.trials, settings.seed).ok_or_else(|| {
                        let known: Vec<_> = presets::list_presets().into_iter().map(|(n, _)| n).collect();
                        ExperimentError::Config(format!("unknown preset {name:?}; known: {}", known.join(", ")))
                    })?;
                    let notes = p.notes();
                    (p.configs, notes)
                }
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
                    let mut configs = experiment::parse_configs(&text)?;
                    for c in &mut configs {
                        if let Some(t) = common.trials {
                            c.trials = t;
                        }
                        if let Some(s) = common.seed {
                            c.seed = s;
                        }
                    }
                    (configs, Vec::new())
                }
                (None, None) => unreachable!("clap requires --preset or --config"),
            };
            for c in &mut configs {
                if let Some(m) = &methods {
                    c.methods = m.clone();
                }
                if common.workers != 0 {
                    c.workers = common.workers;
                }
            }
            let rows = experiment::run_all(&configs)?;
            let mut out = output(&common.out)?;
            if common.json {
                writeln!(out, "{}", to_json(&rows))?;
            } else {
                experiment::write_csv(&mut out, &notes, &rows)?;
            }
            out.flush()?;
            Ok(())
        }
        Command::CodecDemo { k, r, packets, loss } => {
            let report = codec_demo(k, r, packets, &loss, settings.seed)
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
            let mut out = output(&common.out)?;
            if common.json {
                writeln!(out, "{}", to_json(&report))?;
            } else {
                write!(out, "{report}")?;
            }
            out.flush()?;
            Ok(())
        }
        Command::Presets => {
            let mut out = output(&common.out)?;
            let list = presets::list_presets();
            if common.json {
                let entries: Vec<_> = list
                    .iter()
                    .map(|(name, description)| serde_json::json!({"name": name, "description": description}))
                    .collect();
                writeln!(out, "{}", to_json(&entries))?;
            } else {
                for (name, description) in list {
                    writeln!(out, "{name:<14} {description}")?;
                }
            }
            out.flush()?;
            Ok(())
        }
    }
}

fn evaluate(model: &ModelArgs, method: Method, settings: &EvalSettings, common: &Common) -> Result<(), ExperimentError> {
    let (target, spec, rel) = model.resolve()?;
    let eval = experiment::evaluate(&target, &spec, &rel, method, settings)?;
    let report = EvalReport {
        method: method.name(),
        scheme: matches!(target, Target::Success(_)).then(|| model.scheme.name()),
        metric: target.metric(),
        value: eval.value,
        ci_low: eval.ci.map(|c| c.0),
        ci_high: eval.ci.map(|c| c.1),
        trials: eval.trials,
        seed: eval.seed,
        subflow_success: (
            analytic::subflow_success(&spec, &rel, Side::Main),
            analytic::subflow_success(&spec, &rel, Side::Redundant),
        ),
    };
    let mut out = output(&common.out)?;
    if common.json {
        writeln!(out, "{}", to_json(&report))?;
    } else {
        let label = report.scheme.unwrap_or("-");
        write!(out, "{} {} {} = {}", method.name(), label, report.metric, experiment::format_value(report.value))?;
        if let (Some(lo), Some(hi), Some(t), Some(s)) = (report.ci_low, report.ci_high, report.trials, report.seed) {
            write!(
                out,
                "  95% CI [{}, {}]  trials={t} seed={s}",
                experiment::format_value(lo),
                experiment::format_value(hi)
            )?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
