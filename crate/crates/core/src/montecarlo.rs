//! Seeded Monte-Carlo estimation of success and overhead probabilities.
//!
//! Trial `t` draws its components from its own generator, seeded by a
//! counter-based derivation from `(master_seed, t)`; see [`trial_seed`].
//! Workers only ever sum integer success counts, so an estimate is a pure
//! function of `(target, chain, reliabilities, trials, master_seed)`
//! whatever the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{ChainSpec, HybridLayout, Overhead, PartKind, ReliabilityParams, Scheme, Target};
use crate::oracle::{BackupState, CodingState, SystemState};

/// Two-sided 95% standard-normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Trials handed to a worker at a time.
const TRIAL_CHUNK: u64 = 1 << 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum McError {
    #[error("at least one trial is required")]
    NoTrials,
    #[error("could not start worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub trials: u64,
    pub master_seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl McConfig {
    pub fn new(trials: u64, master_seed: u64) -> Self {
        Self {
            trials,
            master_seed,
            workers: 0,
        }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self { workers, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialEstimate {
    pub mean: f64,
    pub successes: u64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed of trial `t`: `mix64(master + (t + 1) * γ)` with γ the 64-bit
/// golden-ratio increment, i.e. element `t` of the SplitMix64 sequence
/// started at `master`.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    mix64(master_seed.wrapping_add(trial.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed of an independent component stream within one trial. Stream 0
/// feeds the backup layout, stream 1 the coding layout, stream `2 + p`
/// part `p` of a hybrid layout.
pub fn stream_seed(trial_seed: u64, stream: u64) -> u64 {
    mix64(trial_seed ^ mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

fn stream_rng(trial_seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(trial_seed, stream))
}

fn draw<'a>(rng: &'a mut ChaCha8Rng, probs: &'a [f64]) -> impl Iterator<Item = bool> + 'a {
    probs.iter().map(move |&p| rng.random::<f64>() < p)
}

/// One trial's full component assignment, every component independently up
/// with its class probability.
pub fn sample_state(spec: &ChainSpec, rel: &ReliabilityParams, trial_seed: u64) -> SystemState {
    let mut state = SystemState::uniform(spec, true);
    let backup = BackupState::probabilities(spec, rel);
    state.backup.load(&mut draw(&mut stream_rng(trial_seed, 0), &backup));
    let coding = CodingState::probabilities(spec, rel);
    state.coding.load(&mut draw(&mut stream_rng(trial_seed, 1), &coding));
    state
}

/// What a single trial has to sample and check.
#[derive(Clone)]
enum Check {
    Backup { probs: Vec<f64>, k: usize },
    Redirection { probs: Vec<f64> },
    Coding { probs: Vec<f64>, k: usize, r: usize, rule: CodingRule },
    Parts(Vec<Check>),
}

#[derive(Clone, Copy)]
enum CodingRule {
    AllMains,
    AtMostR,
    DecodingNeeded,
}

impl Check {
    fn for_target(target: &Target, spec: &ChainSpec, rel: &ReliabilityParams) -> Self {
        let coding = |rule| Check::Coding {
            probs: CodingState::probabilities(spec, rel),
            k: spec.k(),
            r: spec.r(),
            rule,
        };
        match target {
            Target::Success(Scheme::Unprotected) => coding(CodingRule::AllMains),
            Target::Success(Scheme::Coding) => coding(CodingRule::AtMostR),
            Target::Overhead(Overhead::Decoding) => coding(CodingRule::DecodingNeeded),
            Target::Success(Scheme::Backup) => Check::Backup {
                probs: BackupState::probabilities(spec, rel),
                k: spec.k(),
            },
            Target::Success(Scheme::BackupVnfOnly) => {
                let vnf = rel.main.vnf;
                let side = crate::model::ComponentReliability {
                    conn: 1.0,
                    server: 1.0,
                    vnf,
                };
                let only = ReliabilityParams {
                    main: side,
                    redundant: side,
                };
                Check::Backup {
                    probs: BackupState::probabilities(spec, &only),
                    k: spec.k(),
                }
            }
            Target::Overhead(Overhead::Redirection) => Check::Redirection {
                probs: BackupState::probabilities(spec, rel),
            },
            Target::Success(Scheme::Hybrid(layout)) => Self::parts(layout, rel, |kind| match kind {
                PartKind::Header => Scheme::Coding,
                PartKind::Payload => Scheme::Backup,
            }),
            Target::Success(Scheme::LayoutBackup(layout)) => {
                Self::parts(layout, rel, |_| Scheme::Backup)
            }
        }
    }

    fn parts(layout: &HybridLayout, rel: &ReliabilityParams, scheme: impl Fn(PartKind) -> Scheme) -> Self {
        Check::Parts(
            layout
                .parts()
                .iter()
                .map(|part| Self::for_target(&Target::Success(scheme(part.kind)), &part.spec, rel))
                .collect(),
        )
    }

    fn stream(&self) -> u64 {
        match self {
            Check::Backup { .. } | Check::Redirection { .. } => 0,
            Check::Coding { .. } => 1,
            Check::Parts(_) => unreachable!("parts use their own streams"),
        }
    }
}

/// Reusable component buffers for one worker.
struct Scratch {
    state: SystemState,
    parts: Vec<SystemState>,
}

fn run_trial(check: &Check, spec: &ChainSpec, parts: Option<&HybridLayout>, scratch: &mut Scratch, seed: u64) -> bool {
    match check {
        Check::Parts(checks) => {
            let layout = parts.expect("part checks need a layout");
            checks.iter().zip(layout.parts()).enumerate().all(|(p, (check, part))| {
                let state = &mut scratch.parts[p];
                let mut rng = stream_rng(seed, 2 + p as u64);
                evaluate(check, &part.spec, state, &mut rng)
            })
        }
        single => {
            let mut rng = stream_rng(seed, single.stream());
            evaluate(single, spec, &mut scratch.state, &mut rng)
        }
    }
}

fn evaluate(check: &Check, _spec: &ChainSpec, state: &mut SystemState, rng: &mut ChaCha8Rng) -> bool {
    match check {
        Check::Backup { probs, k } => {
            state.backup.load(&mut draw(rng, probs));
            state.backup.serves(*k)
        }
        Check::Redirection { probs } => {
            state.backup.load(&mut draw(rng, probs));
            state.backup.needs_redirection()
        }
        Check::Coding { probs, k, r, rule } => {
            state.coding.load(&mut draw(rng, probs));
            let (lost_main, lost) = state.coding.losses(*k);
            match rule {
                CodingRule::AllMains => lost_main == 0,
                CodingRule::AtMostR => lost <= *r,
                CodingRule::DecodingNeeded => lost_main >= 1 && lost <= *r,
            }
        }
        Check::Parts(_) => unreachable!("nested part layouts"),
    }
}

/// Estimates the probability of `target` from `config.trials` independent
/// trials, with a 95% Wilson score interval.
pub fn estimate(
    target: &Target,
    spec: &ChainSpec,
    rel: &ReliabilityParams,
    config: &McConfig,
) -> Result<TrialEstimate, McError> {
    if config.trials == 0 {
        return Err(McError::NoTrials);
    }
    let check = Check::for_target(target, spec, rel);
    let layout = match target {
        Target::Success(Scheme::Hybrid(layout) | Scheme::LayoutBackup(layout)) => Some(layout),
        _ => None,
    };
    let scratch = || Scratch {
        state: SystemState::uniform(spec, true),
        parts: layout
            .map(|l| l.parts().iter().map(|p| SystemState::uniform(&p.spec, true)).collect())
            .unwrap_or_default(),
    };
    let chunks = config.trials.div_ceil(TRIAL_CHUNK);
    let count = || -> u64 {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut buffers = scratch();
                let end = ((c + 1) * TRIAL_CHUNK).min(config.trials);
                (c * TRIAL_CHUNK..end)
                    .filter(|&t| run_trial(&check, spec, layout, &mut buffers, trial_seed(config.master_seed, t)))
                    .count() as u64
            })
            .sum()
    };
    let successes = if config.workers == 0 {
        count()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| McError::WorkerPool(e.to_string()))?
            .install(count)
    };
    let (ci_low, ci_high) = wilson_interval(successes, config.trials);
    let mean = successes as f64 / config.trials as f64;
    Ok(TrialEstimate {
        mean,
        successes,
        trials: config.trials,
        ci_low: ci_low.min(mean),
        ci_high: ci_high.max(mean),
        seed: config.master_seed,
    })
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).clamp(0.0, 1.0), (centre + half).clamp(0.0, 1.0))
}
