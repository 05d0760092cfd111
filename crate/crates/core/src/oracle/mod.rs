//! Exact probabilities by exhaustive enumeration of component states.
//!
//! Components that share no predicate are enumerated as separate blocks and
//! the block probabilities multiplied: the destination segments, each server
//! stage and each sub-flow chain are independent, and the coding predicates
//! only see chains through their intact/broken indicator, which is itself
//! enumerated as a block of `k + r` Bernoulli variables. The component bound
//! applies to the largest block. [`joint_success`] and [`joint_overhead`]
//! enumerate a whole layout at once instead; they exist to cross-check the
//! blockwise route on small chains.

mod state;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{
    ChainSpec, ComponentReliability, HybridLayout, Overhead, PartKind, ReliabilityParams, Scheme,
    Side,
};

pub use state::{
    backup_predicate, coding_predicate, decoding_predicate, redirection_predicate,
    unprotected_predicate, BackupState, ChainState, CodingState, StageFailureCounts, StageState,
    SystemState,
};

/// Default largest number of components enumerated jointly (2^24 states).
pub const DEFAULT_COMPONENT_BOUND: usize = 24;

/// States per parallel work unit. Fixed so that the floating-point sum does
/// not depend on the number of workers.
const CHUNK_BITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("state does not match the chain geometry ({0})")]
    DimensionMismatch(&'static str),
    #[error("{components} components exceed the enumeration bound of {bound}; use Monte-Carlo")]
    StateSpaceTooLarge { components: usize, bound: usize },
}

/// Exhaustive evaluator with a configurable component bound.
#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    bound: usize,
}

impl Default for Oracle {
    fn default() -> Self {
        Self {
            bound: DEFAULT_COMPONENT_BOUND,
        }
    }
}

impl Oracle {
    pub fn with_bound(bound: usize) -> Self {
        // masks are u64 and chunked by CHUNK_BITS
        Self { bound: bound.min(40) }
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn exact_success(
        &self,
        scheme: &Scheme,
        spec: &ChainSpec,
        rel: &ReliabilityParams,
    ) -> Result<f64, OracleError> {
        match scheme {
            Scheme::Unprotected => {
                let main = self.chain_intact(spec, rel.side(Side::Main))?;
                self.indicators(&vec![main; spec.k()], |up| up.iter().all(|&b| b))
            }
            Scheme::BackupVnfOnly => self.backup(spec, &vnf_only(rel)),
            Scheme::Backup => self.backup(spec, rel),
            Scheme::Coding => {
                let r = spec.r();
                self.chain_indicators(spec, rel, move |up| up.iter().filter(|&&b| !b).count() <= r)
            }
            Scheme::Hybrid(layout) => self.per_part(layout, rel, |part| match part {
                PartKind::Header => Scheme::Coding,
                PartKind::Payload => Scheme::Backup,
            }),
            Scheme::LayoutBackup(layout) => self.per_part(layout, rel, |_| Scheme::Backup),
        }
    }

    pub fn exact_overhead(
        &self,
        kind: Overhead,
        spec: &ChainSpec,
        rel: &ReliabilityParams,
    ) -> Result<f64, OracleError> {
        match kind {
            Overhead::Redirection => {
                let (k, r) = (spec.k(), spec.r());
                let mut no_redirect = 1.0;
                for &psi in spec.psi() {
                    // backup components cannot matter; enumerate only the active ones
                    let probs: Vec<f64> = StageState::probabilities(k, r, psi, rel)
                        .into_iter()
                        .enumerate()
                        .filter(|&(i, _)| is_active_component(i, k, r, psi))
                        .map(|(_, p)| p)
                        .collect();
                    no_redirect *= self.block(&probs, || (), |_, mask| mask == full_mask(probs.len()))?;
                }
                Ok(1.0 - no_redirect)
            }
            Overhead::Decoding => {
                let (k, r) = (spec.k(), spec.r());
                self.chain_indicators(spec, rel, move |up| {
                    let lost_main = up[..k].iter().filter(|&&b| !b).count();
                    let lost = up.iter().filter(|&&b| !b).count();
                    lost_main >= 1 && lost <= r
                })
            }
        }
    }

    fn backup(&self, spec: &ChainSpec, rel: &ReliabilityParams) -> Result<f64, OracleError> {
        let (k, r) = (spec.k(), spec.r());
        let dest = vec![rel.main.conn; k];
        let mut total = self.block(&dest, || (), |_, mask| mask == full_mask(k))?;
        for &psi in spec.psi() {
            let probs = StageState::probabilities(k, r, psi, rel);
            total *= self.block(
                &probs,
                || StageState::uniform(k, r, psi, true),
                |stage, mask| {
                    stage.load(&mut mask_bits(mask, probs.len()));
                    stage.serves(k)
                },
            )?;
        }
        Ok(total)
    }

    /// Probability that one chain on `side` is intact, by enumeration.
    fn chain_intact(&self, spec: &ChainSpec, side: &ComponentReliability) -> Result<f64, OracleError> {
        let probs = ChainState::probabilities(spec, side);
        self.block(
            &probs,
            || ChainState::uniform(spec, true),
            |chain, mask| {
                chain.load(&mut mask_bits(mask, probs.len()));
                chain.intact()
            },
        )
    }

    /// Enumerates chain states per side, then the `k + r` intact indicators.
    fn chain_indicators(
        &self,
        spec: &ChainSpec,
        rel: &ReliabilityParams,
        accept: impl Fn(&[bool]) -> bool + Sync,
    ) -> Result<f64, OracleError> {
        let main = self.chain_intact(spec, rel.side(Side::Main))?;
        let red = self.chain_intact(spec, rel.side(Side::Redundant))?;
        let mut probs = vec![main; spec.k()];
        probs.extend(std::iter::repeat_n(red, spec.r()));
        self.indicators(&probs, accept)
    }

    fn indicators(
        &self,
        probs: &[f64],
        accept: impl Fn(&[bool]) -> bool + Sync,
    ) -> Result<f64, OracleError> {
        let n = probs.len();
        self.block(
            probs,
            || vec![true; n],
            |up, mask| {
                for (slot, bit) in up.iter_mut().zip(mask_bits(mask, n)) {
                    *slot = bit;
                }
                accept(up)
            },
        )
    }

    fn per_part(
        &self,
        layout: &HybridLayout,
        rel: &ReliabilityParams,
        scheme_for: impl Fn(PartKind) -> Scheme,
    ) -> Result<f64, OracleError> {
        layout
            .parts()
            .iter()
            .map(|part| self.exact_success(&scheme_for(part.kind), &part.spec, rel))
            .product()
    }

    /// Σ over all `2^n` assignments of the block of Pr(assignment) ×
    /// predicate(assignment). `probs[b]` is the up-probability of bit `b`.
    fn block<S>(
        &self,
        probs: &[f64],
        init: impl Fn() -> S + Sync,
        predicate: impl Fn(&mut S, u64) -> bool + Sync,
    ) -> Result<f64, OracleError> {
        if probs.len() > self.bound {
            return Err(OracleError::StateSpaceTooLarge {
                components: probs.len(),
                bound: self.bound,
            });
        }
        Ok(enumerate(probs, init, predicate))
    }
}

fn enumerate<S>(
    probs: &[f64],
    init: impl Fn() -> S + Sync,
    predicate: impl Fn(&mut S, u64) -> bool + Sync,
) -> f64 {
    let n = probs.len();
    let states = 1u64 << n;
    let chunk = 1u64 << CHUNK_BITS.min(n);
    let partial: Vec<f64> = (0..states / chunk)
        .into_par_iter()
        .map(|c| {
            let mut scratch = init();
            let mut sum = 0.0;
            for mask in c * chunk..(c + 1) * chunk {
                if predicate(&mut scratch, mask) {
                    sum += state_probability(probs, mask);
                }
            }
            sum
        })
        .collect();
    partial.iter().sum()
}

fn state_probability(probs: &[f64], mask: u64) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(b, &p)| if mask >> b & 1 == 1 { p } else { 1.0 - p })
        .product()
}

fn mask_bits(mask: u64, n: usize) -> impl Iterator<Item = bool> {
    (0..n).map(move |b| mask >> b & 1 == 1)
}

fn full_mask(n: usize) -> u64 {
    (1u64 << n) - 1
}

/// Whether canonical stage component `i` belongs to the active side.
fn is_active_component(i: usize, k: usize, r: usize, psi: usize) -> bool {
    let segs_servers = 2 * (k + r);
    if i < segs_servers {
        let within = i % (k + r);
        within < k
    } else {
        i - segs_servers < k * psi
    }
}

/// Reliabilities for the VNF-only backup case: segments and servers
/// perfect, every VNF (main and backup) with the main VNF reliability.
fn vnf_only(rel: &ReliabilityParams) -> ReliabilityParams {
    let side = ComponentReliability {
        conn: 1.0,
        server: 1.0,
        vnf: rel.main.vnf,
    };
    ReliabilityParams {
        main: side,
        redundant: side,
    }
}

/// Exact success with the default bound.
pub fn exact_success(
    scheme: &Scheme,
    spec: &ChainSpec,
    rel: &ReliabilityParams,
) -> Result<f64, OracleError> {
    Oracle::default().exact_success(scheme, spec, rel)
}

/// Exact overhead probability with the default bound.
pub fn exact_overhead(
    kind: Overhead,
    spec: &ChainSpec,
    rel: &ReliabilityParams,
) -> Result<f64, OracleError> {
    Oracle::default().exact_overhead(kind, spec, rel)
}

/// Which full layout a target is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Backup,
    Coding,
}

/// Enumerates every state of one layout in canonical index order and sums
/// Pr(state) over the states accepted by `predicate`.
pub fn joint_probability(
    layout: Layout,
    spec: &ChainSpec,
    rel: &ReliabilityParams,
    bound: usize,
    predicate: impl Fn(&SystemState) -> bool + Sync,
) -> Result<f64, OracleError> {
    let probs = match layout {
        Layout::Backup => BackupState::probabilities(spec, rel),
        Layout::Coding => CodingState::probabilities(spec, rel),
    };
    Oracle::with_bound(bound).block(
        &probs,
        || SystemState::uniform(spec, true),
        |state, mask| {
            let mut bits = mask_bits(mask, probs.len());
            match layout {
                Layout::Backup => state.backup.load(&mut bits),
                Layout::Coding => state.coding.load(&mut bits),
            }
            predicate(state)
        },
    )
}

/// Joint-enumeration counterpart of [`Oracle::exact_success`].
pub fn joint_success(
    scheme: &Scheme,
    spec: &ChainSpec,
    rel: &ReliabilityParams,
    bound: usize,
) -> Result<f64, OracleError> {
    let k = spec.k();
    let ok = |r: Result<bool, OracleError>| r.unwrap_or(false);
    match scheme {
        Scheme::Unprotected => joint_probability(Layout::Coding, spec, rel, bound, |s| {
            ok(unprotected_predicate(s, spec))
        }),
        Scheme::BackupVnfOnly => joint_probability(Layout::Backup, spec, &vnf_only(rel), bound, |s| {
            s.backup.serves(k)
        }),
        Scheme::Backup => joint_probability(Layout::Backup, spec, rel, bound, |s| {
            ok(backup_predicate(s, spec))
        }),
        Scheme::Coding => joint_probability(Layout::Coding, spec, rel, bound, |s| {
            ok(coding_predicate(s, spec))
        }),
        Scheme::Hybrid(layout) => layout
            .parts()
            .iter()
            .map(|part| {
                let scheme = match part.kind {
                    PartKind::Header => Scheme::Coding,
                    PartKind::Payload => Scheme::Backup,
                };
                joint_success(&scheme, &part.spec, rel, bound)
            })
            .product(),
        Scheme::LayoutBackup(layout) => layout
            .parts()
            .iter()
            .map(|part| joint_success(&Scheme::Backup, &part.spec, rel, bound))
            .product(),
    }
}

/// Joint-enumeration counterpart of [`Oracle::exact_overhead`].
pub fn joint_overhead(
    kind: Overhead,
    spec: &ChainSpec,
    rel: &ReliabilityParams,
    bound: usize,
) -> Result<f64, OracleError> {
    let ok = |r: Result<bool, OracleError>| r.unwrap_or(false);
    match kind {
        Overhead::Redirection => joint_probability(Layout::Backup, spec, rel, bound, |s| {
            ok(redirection_predicate(s, spec))
        }),
        Overhead::Decoding => joint_probability(Layout::Coding, spec, rel, bound, |s| {
            ok(decoding_predicate(s, spec))
        }),
    }
}

/// The backup-layout state with canonical index `index`.
pub fn backup_state_at(spec: &ChainSpec, index: u64) -> BackupState {
    let mut state = BackupState::uniform(spec, true);
    state.load(&mut mask_bits(index, BackupState::component_count(spec)));
    state
}

/// The coding-layout state with canonical index `index`.
pub fn coding_state_at(spec: &ChainSpec, index: u64) -> CodingState {
    let mut state = CodingState::uniform(spec, true);
    state.load(&mut mask_bits(index, CodingState::component_count(spec)));
    state
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: usize, r: usize, psi: &[usize]) -> ChainSpec {
        ChainSpec::new(k, r, psi.to_vec()).unwrap()
    }

    fn all(p: f64) -> ReliabilityParams {
        ReliabilityParams::uniform(p).unwrap()
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} != {b}");
    }

    #[test]
    fn enumerated_examples() {
        close(exact_success(&Scheme::Unprotected, &spec(1, 0, &[1]), &all(0.9)).unwrap(), 0.6561);
        close(exact_success(&Scheme::Backup, &spec(1, 1, &[1]), &all(0.9)).unwrap(), 0.8339031);
        close(exact_success(&Scheme::Coding, &spec(1, 1, &[1]), &all(0.9)).unwrap(), 0.88173279);
        close(exact_success(&Scheme::BackupVnfOnly, &spec(1, 1, &[1]), &all(0.9)).unwrap(), 0.99);
        close(exact_overhead(Overhead::Redirection, &spec(1, 0, &[1]), &all(0.9)).unwrap(), 0.271);
        close(exact_overhead(Overhead::Decoding, &spec(1, 1, &[1]), &all(0.9)).unwrap(), 0.22563279);
    }

    #[test]
    fn joint_examples() {
        let b = DEFAULT_COMPONENT_BOUND;
        close(joint_success(&Scheme::Unprotected, &spec(1, 0, &[1]), &all(0.9), b).unwrap(), 0.6561);
        close(joint_success(&Scheme::Backup, &spec(1, 1, &[1]), &all(0.9), b).unwrap(), 0.8339031);
        close(joint_overhead(Overhead::Redirection, &spec(1, 0, &[1]), &all(0.9), b).unwrap(), 0.271);
        close(joint_overhead(Overhead::Decoding, &spec(1, 1, &[1]), &all(0.9), b).unwrap(), 0.22563279);
    }

    #[test]
    fn zero_reliability_gives_zero_success() {
        let s = spec(2, 1, &[1, 2]);
        for scheme in [Scheme::Unprotected, Scheme::Backup, Scheme::Coding, Scheme::BackupVnfOnly] {
            assert_eq!(exact_success(&scheme, &s, &all(0.0)).unwrap(), 0.0, "{scheme:?}");
        }
    }

    #[test]
    fn perfect_components_give_no_overhead() {
        let s = spec(2, 2, &[2, 1]);
        assert_eq!(exact_overhead(Overhead::Redirection, &s, &all(1.0)).unwrap(), 0.0);
        assert_eq!(exact_overhead(Overhead::Decoding, &s, &all(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn bound_is_enforced() {
        let big = spec(8, 6, &[2, 2]);
        assert_eq!(
            exact_success(&Scheme::Backup, &big, &all(0.9)),
            Err(OracleError::StateSpaceTooLarge { components: 56, bound: 24 })
        );
        assert!(exact_success(&Scheme::Coding, &big, &all(0.9)).is_ok());
        assert!(Oracle::with_bound(4).exact_success(&Scheme::Coding, &big, &all(0.9)).is_err());
        assert!(joint_success(&Scheme::Coding, &spec(2, 1, &[1]), &all(0.9), 8).is_err());
    }

    #[test]
    fn active_component_mask() {
        // k=2, r=1, psi=2: segs [A A B] servers [A A B] vnfs [A A A A B B]
        let active: Vec<bool> = (0..12).map(|i| is_active_component(i, 2, 1, 2)).collect();
        assert_eq!(
            active,
            [true, true, false, true, true, false, true, true, true, true, false, false]
        );
    }

    #[test]
    fn state_index_lookup() {
        let s = spec(1, 1, &[1]);
        let all_up = backup_state_at(&s, (1 << 7) - 1);
        assert!(all_up.serves(1));
        // bit 1 = active segment of stage 0 down
        let state = backup_state_at(&s, ((1 << 7) - 1) & !0b10);
        assert!(!state.stages[0].active_segments[0]);
        assert!(state.serves(1));
        let coding = coding_state_at(&s, 0b1111);
        assert!(coding.chains[0].intact());
        assert!(!coding.chains[1].intact());
    }
}
