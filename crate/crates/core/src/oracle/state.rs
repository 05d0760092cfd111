//! Up/down assignments for every path segment, server and VNF instance,
//! and the success predicates evaluated on them.
//!
//! Components are always visited in one canonical order so that a state can
//! be identified by an integer index (bit `b` set = component `b` up):
//!
//! * backup layout: the `k` destination segments, then per server stage the
//!   active segments (`k`), backup segments (`r`), active servers (`k`),
//!   backup servers (`r`), active VNFs (`k × ψ_s`, instance-major) and
//!   backup VNFs (`r × ψ_s`);
//! * coding layout: sub-flow chains `0..k+r` (mains first), each with its
//!   `N + 1` segments, `N` servers and `Ψ` VNFs.

use crate::model::{ChainSpec, ComponentReliability, ReliabilityParams, Side};

use super::OracleError;

/// Failure counts of one stage as seen by one VNF type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageFailureCounts {
    /// Failed active segments.
    pub xi: usize,
    /// Failed backup segments.
    pub gamma: usize,
    /// Failed active servers behind an up segment.
    pub f: usize,
    /// Failed backup servers behind an up segment.
    pub l: usize,
    /// Failed active VNFs of this type on reachable, up servers.
    pub i: usize,
    /// Failed backup VNFs of this type on reachable, up servers.
    pub j: usize,
}

impl StageFailureCounts {
    pub fn total(&self) -> usize {
        self.xi + self.gamma + self.f + self.l + self.i + self.j
    }
}

/// One server stage of the backup layout: `k` active and `r` backup
/// servers, each behind its own segment and hosting `ψ_s` VNFs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageState {
    pub active_segments: Vec<bool>,
    pub backup_segments: Vec<bool>,
    pub active_servers: Vec<bool>,
    pub backup_servers: Vec<bool>,
    /// `k` rows of `ψ_s` VNF types.
    pub active_vnfs: Vec<Vec<bool>>,
    /// `r` rows of `ψ_s` VNF types.
    pub backup_vnfs: Vec<Vec<bool>>,
}

impl StageState {
    pub fn uniform(k: usize, r: usize, psi: usize, up: bool) -> Self {
        Self {
            active_segments: vec![up; k],
            backup_segments: vec![up; r],
            active_servers: vec![up; k],
            backup_servers: vec![up; r],
            active_vnfs: vec![vec![up; psi]; k],
            backup_vnfs: vec![vec![up; psi]; r],
        }
    }

    pub fn component_count(k: usize, r: usize, psi: usize) -> usize {
        (k + r) * (2 + psi)
    }

    /// Up-probabilities in canonical order.
    pub fn probabilities(k: usize, r: usize, psi: usize, rel: &ReliabilityParams) -> Vec<f64> {
        let (m, b) = (&rel.main, &rel.redundant);
        let mut probs = Vec::with_capacity(Self::component_count(k, r, psi));
        probs.extend(std::iter::repeat_n(m.conn, k));
        probs.extend(std::iter::repeat_n(b.conn, r));
        probs.extend(std::iter::repeat_n(m.server, k));
        probs.extend(std::iter::repeat_n(b.server, r));
        probs.extend(std::iter::repeat_n(m.vnf, k * psi));
        probs.extend(std::iter::repeat_n(b.vnf, r * psi));
        probs
    }

    /// Overwrites every component from `bits` in canonical order.
    pub fn load(&mut self, bits: &mut impl Iterator<Item = bool>) {
        let mut next = || bits.next().expect("too few component bits");
        for slot in self
            .active_segments
            .iter_mut()
            .chain(self.backup_segments.iter_mut())
            .chain(self.active_servers.iter_mut())
            .chain(self.backup_servers.iter_mut())
        {
            *slot = next();
        }
        for slot in self
            .active_vnfs
            .iter_mut()
            .chain(self.backup_vnfs.iter_mut())
            .flatten()
        {
            *slot = next();
        }
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        self.active_segments
            .iter()
            .chain(&self.backup_segments)
            .chain(&self.active_servers)
            .chain(&self.backup_servers)
            .chain(self.active_vnfs.iter().flatten())
            .chain(self.backup_vnfs.iter().flatten())
            .copied()
    }

    fn vnf_types(&self) -> usize {
        self.active_vnfs
            .first()
            .or(self.backup_vnfs.first())
            .map_or(0, Vec::len)
    }

    /// Instances of VNF type `t` that are up, on an up server, behind an up
    /// segment; active and backup sides together.
    pub fn available_instances(&self, t: usize) -> usize {
        let side = |segs: &[bool], servers: &[bool], vnfs: &[Vec<bool>]| {
            (0..segs.len())
                .filter(|&x| segs[x] && servers[x] && vnfs[x][t])
                .count()
        };
        side(&self.active_segments, &self.active_servers, &self.active_vnfs)
            + side(&self.backup_segments, &self.backup_servers, &self.backup_vnfs)
    }

    /// Every VNF type has at least `k` available instances.
    pub fn serves(&self, k: usize) -> bool {
        (0..self.vnf_types()).all(|t| self.available_instances(t) >= k)
    }

    pub fn active_all_up(&self) -> bool {
        self.active_segments.iter().all(|&b| b)
            && self.active_servers.iter().all(|&b| b)
            && self.active_vnfs.iter().flatten().all(|&b| b)
    }

    pub fn failure_counts(&self, t: usize) -> StageFailureCounts {
        let down = |v: &[bool]| v.iter().filter(|&&b| !b).count();
        let side = |segs: &[bool], servers: &[bool], vnfs: &[Vec<bool>]| {
            let failed_servers = (0..segs.len()).filter(|&x| segs[x] && !servers[x]).count();
            let failed_vnfs = (0..segs.len())
                .filter(|&x| segs[x] && servers[x] && !vnfs[x][t])
                .count();
            (failed_servers, failed_vnfs)
        };
        let (f, i) = side(&self.active_segments, &self.active_servers, &self.active_vnfs);
        let (l, j) = side(&self.backup_segments, &self.backup_servers, &self.backup_vnfs);
        StageFailureCounts {
            xi: down(&self.active_segments),
            gamma: down(&self.backup_segments),
            f,
            l,
            i,
            j,
        }
    }

    fn matches(&self, k: usize, r: usize, psi: usize) -> bool {
        self.active_segments.len() == k
            && self.active_servers.len() == k
            && self.backup_segments.len() == r
            && self.backup_servers.len() == r
            && self.active_vnfs.len() == k
            && self.backup_vnfs.len() == r
            && self
                .active_vnfs
                .iter()
                .chain(&self.backup_vnfs)
                .all(|row| row.len() == psi)
    }
}

/// Components of the backup layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackupState {
    /// Segments from the last server stage to the destination.
    pub dest_segments: Vec<bool>,
    pub stages: Vec<StageState>,
}

impl BackupState {
    pub fn uniform(spec: &ChainSpec, up: bool) -> Self {
        Self {
            dest_segments: vec![up; spec.k()],
            stages: spec
                .psi()
                .iter()
                .map(|&psi| StageState::uniform(spec.k(), spec.r(), psi, up))
                .collect(),
        }
    }

    pub fn component_count(spec: &ChainSpec) -> usize {
        spec.k()
            + spec
                .psi()
                .iter()
                .map(|&psi| StageState::component_count(spec.k(), spec.r(), psi))
                .sum::<usize>()
    }

    pub fn probabilities(spec: &ChainSpec, rel: &ReliabilityParams) -> Vec<f64> {
        let mut probs = vec![rel.main.conn; spec.k()];
        for &psi in spec.psi() {
            probs.extend(StageState::probabilities(spec.k(), spec.r(), psi, rel));
        }
        probs
    }

    pub fn load(&mut self, bits: &mut impl Iterator<Item = bool>) {
        for slot in &mut self.dest_segments {
            *slot = bits.next().expect("too few component bits");
        }
        for stage in &mut self.stages {
            stage.load(bits);
        }
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        self.dest_segments
            .iter()
            .copied()
            .chain(self.stages.iter().flat_map(StageState::bits))
    }

    pub fn serves(&self, k: usize) -> bool {
        self.dest_segments.iter().all(|&b| b) && self.stages.iter().all(|s| s.serves(k))
    }

    pub fn needs_redirection(&self) -> bool {
        !self.stages.iter().all(StageState::active_all_up)
    }

    pub fn check(&self, spec: &ChainSpec) -> Result<(), OracleError> {
        let ok = self.dest_segments.len() == spec.k()
            && self.stages.len() == spec.n()
            && self
                .stages
                .iter()
                .zip(spec.psi())
                .all(|(stage, &psi)| stage.matches(spec.k(), spec.r(), psi));
        if ok {
            Ok(())
        } else {
            Err(OracleError::DimensionMismatch("backup layout"))
        }
    }
}

/// The private chain one coded sub-flow traverses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    /// `N + 1` segments; the last one reaches the decoder.
    pub segments: Vec<bool>,
    pub servers: Vec<bool>,
    /// All `Ψ` VNFs in chain order.
    pub vnfs: Vec<bool>,
}

impl ChainState {
    pub fn uniform(spec: &ChainSpec, up: bool) -> Self {
        Self {
            segments: vec![up; spec.n() + 1],
            servers: vec![up; spec.n()],
            vnfs: vec![up; spec.total_vnfs()],
        }
    }

    pub fn component_count(spec: &ChainSpec) -> usize {
        2 * spec.n() + 1 + spec.total_vnfs()
    }

    pub fn probabilities(spec: &ChainSpec, side: &ComponentReliability) -> Vec<f64> {
        let mut probs = vec![side.conn; spec.n() + 1];
        probs.extend(std::iter::repeat_n(side.server, spec.n()));
        probs.extend(std::iter::repeat_n(side.vnf, spec.total_vnfs()));
        probs
    }

    pub fn load(&mut self, bits: &mut impl Iterator<Item = bool>) {
        for slot in self
            .segments
            .iter_mut()
            .chain(self.servers.iter_mut())
            .chain(self.vnfs.iter_mut())
        {
            *slot = bits.next().expect("too few component bits");
        }
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        self.segments
            .iter()
            .chain(&self.servers)
            .chain(&self.vnfs)
            .copied()
    }

    pub fn intact(&self) -> bool {
        self.bits().all(|b| b)
    }
}

/// Components of the coding layout: one chain per coded sub-flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingState {
    /// `k` main chains followed by `r` redundant chains.
    pub chains: Vec<ChainState>,
}

impl CodingState {
    pub fn uniform(spec: &ChainSpec, up: bool) -> Self {
        Self {
            chains: vec![ChainState::uniform(spec, up); spec.k() + spec.r()],
        }
    }

    pub fn component_count(spec: &ChainSpec) -> usize {
        (spec.k() + spec.r()) * ChainState::component_count(spec)
    }

    pub fn probabilities(spec: &ChainSpec, rel: &ReliabilityParams) -> Vec<f64> {
        let main = ChainState::probabilities(spec, rel.side(Side::Main));
        let red = ChainState::probabilities(spec, rel.side(Side::Redundant));
        let mut probs = Vec::with_capacity(Self::component_count(spec));
        for _ in 0..spec.k() {
            probs.extend_from_slice(&main);
        }
        for _ in 0..spec.r() {
            probs.extend_from_slice(&red);
        }
        probs
    }

    pub fn load(&mut self, bits: &mut impl Iterator<Item = bool>) {
        for chain in &mut self.chains {
            chain.load(bits);
        }
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        self.chains.iter().flat_map(ChainState::bits)
    }

    /// `(lost mains, lost total)`.
    pub fn losses(&self, k: usize) -> (usize, usize) {
        let lost_main = self.chains[..k].iter().filter(|c| !c.intact()).count();
        let lost_red = self.chains[k..].iter().filter(|c| !c.intact()).count();
        (lost_main, lost_main + lost_red)
    }

    pub fn check(&self, spec: &ChainSpec) -> Result<(), OracleError> {
        let ok = self.chains.len() == spec.k() + spec.r()
            && self.chains.iter().all(|c| {
                c.segments.len() == spec.n() + 1
                    && c.servers.len() == spec.n()
                    && c.vnfs.len() == spec.total_vnfs()
            });
        if ok {
            Ok(())
        } else {
            Err(OracleError::DimensionMismatch("coding layout"))
        }
    }
}

/// A complete assignment of both layouts for one chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemState {
    pub backup: BackupState,
    pub coding: CodingState,
}

impl SystemState {
    pub fn uniform(spec: &ChainSpec, up: bool) -> Self {
        Self {
            backup: BackupState::uniform(spec, up),
            coding: CodingState::uniform(spec, up),
        }
    }
}

/// Backup success: every destination segment up, and at every stage each
/// VNF type has at least `k` available instances.
pub fn backup_predicate(state: &SystemState, spec: &ChainSpec) -> Result<bool, OracleError> {
    state.backup.check(spec)?;
    Ok(state.backup.serves(spec.k()))
}

/// Coding success: at least `k` of the `k + r` chains are intact.
pub fn coding_predicate(state: &SystemState, spec: &ChainSpec) -> Result<bool, OracleError> {
    state.coding.check(spec)?;
    let (_, lost) = state.coding.losses(spec.k());
    Ok(lost <= spec.r())
}

/// No protection: all `k` main chains intact.
pub fn unprotected_predicate(state: &SystemState, spec: &ChainSpec) -> Result<bool, OracleError> {
    state.coding.check(spec)?;
    Ok(state.coding.losses(spec.k()).0 == 0)
}

/// Some active segment, server or VNF is down.
pub fn redirection_predicate(state: &SystemState, spec: &ChainSpec) -> Result<bool, OracleError> {
    state.backup.check(spec)?;
    Ok(state.backup.needs_redirection())
}

/// At least one main chain broken and at most `r` chains broken overall.
pub fn decoding_predicate(state: &SystemState, spec: &ChainSpec) -> Result<bool, OracleError> {
    state.coding.check(spec)?;
    let (lost_main, lost) = state.coding.losses(spec.k());
    Ok(lost_main >= 1 && lost <= spec.r())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k1r1() -> ChainSpec {
        ChainSpec::new(1, 1, vec![1]).unwrap()
    }

    #[test]
    fn all_up_satisfies_everything() {
        let spec = ChainSpec::new(3, 2, vec![2, 1]).unwrap();
        let state = SystemState::uniform(&spec, true);
        assert!(backup_predicate(&state, &spec).unwrap());
        assert!(coding_predicate(&state, &spec).unwrap());
        assert!(unprotected_predicate(&state, &spec).unwrap());
        assert!(!redirection_predicate(&state, &spec).unwrap());
        assert!(!decoding_predicate(&state, &spec).unwrap());
    }

    #[test]
    fn backup_replaces_failed_active_vnf() {
        let spec = k1r1();
        let mut state = SystemState::uniform(&spec, true);
        state.backup.stages[0].active_vnfs[0][0] = false;
        assert!(backup_predicate(&state, &spec).unwrap());
        assert!(redirection_predicate(&state, &spec).unwrap());
    }

    #[test]
    fn backup_fails_without_any_instance() {
        let spec = k1r1();
        let mut state = SystemState::uniform(&spec, true);
        state.backup.stages[0].active_segments[0] = false;
        state.backup.stages[0].backup_servers[0] = false;
        assert!(!backup_predicate(&state, &spec).unwrap());
        let counts = state.backup.stages[0].failure_counts(0);
        assert_eq!(counts, StageFailureCounts { xi: 1, gamma: 0, f: 0, l: 1, i: 0, j: 0 });
        assert!(counts.total() > spec.r());
    }

    #[test]
    fn destination_segment_is_mandatory_for_backup() {
        let spec = k1r1();
        let mut state = SystemState::uniform(&spec, true);
        state.backup.dest_segments[0] = false;
        assert!(!backup_predicate(&state, &spec).unwrap());
        assert!(!redirection_predicate(&state, &spec).unwrap());
    }

    #[test]
    fn coding_tolerates_loss_of_one_main() {
        let spec = ChainSpec::new(3, 1, vec![2, 2]).unwrap();
        let mut state = SystemState::uniform(&spec, true);
        // VNF2 of main sub-flow f1
        state.coding.chains[0].vnfs[1] = false;
        assert!(coding_predicate(&state, &spec).unwrap());
        assert!(decoding_predicate(&state, &spec).unwrap());
        assert!(!unprotected_predicate(&state, &spec).unwrap());
        state.coding.chains[0].vnfs[1] = true;
        state.coding.chains[3].servers[0] = false;
        assert!(coding_predicate(&state, &spec).unwrap());
        assert!(!decoding_predicate(&state, &spec).unwrap());
    }

    #[test]
    fn coding_fails_when_every_chain_is_cut() {
        let spec = k1r1();
        let mut state = SystemState::uniform(&spec, true);
        state.coding.chains[0].segments[1] = false;
        state.coding.chains[1].vnfs[0] = false;
        assert!(!coding_predicate(&state, &spec).unwrap());
        assert!(!decoding_predicate(&state, &spec).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = k1r1();
        let other = ChainSpec::new(2, 1, vec![1]).unwrap();
        let state = SystemState::uniform(&other, true);
        assert!(matches!(
            backup_predicate(&state, &spec),
            Err(OracleError::DimensionMismatch(_))
        ));
        assert!(matches!(
            coding_predicate(&state, &spec),
            Err(OracleError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn canonical_order_round_trips() {
        let spec = ChainSpec::new(2, 1, vec![2, 1]).unwrap();
        let pattern: Vec<bool> = (0..BackupState::component_count(&spec))
            .map(|i| i % 3 != 0)
            .collect();
        let mut state = BackupState::uniform(&spec, true);
        state.load(&mut pattern.iter().copied());
        assert_eq!(state.bits().collect::<Vec<_>>(), pattern);
        // bit 2 is the first active segment of stage 0
        assert!(state.stages[0].active_segments[0]);
        assert!(!state.dest_segments[0]);

        let pattern: Vec<bool> = (0..CodingState::component_count(&spec))
            .map(|i| i % 4 == 1)
            .collect();
        let mut coding = CodingState::uniform(&spec, true);
        coding.load(&mut pattern.iter().copied());
        assert_eq!(coding.bits().collect::<Vec<_>>(), pattern);
    }
}
