//! Domain vocabulary: chain geometry, component reliabilities and hybrid
//! header/payload layouts.
//!
//! Every type here is validated on construction (including when it is
//! deserialized from JSON) and immutable afterwards.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rejections raised while validating model values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("k must be at least 1")]
    NoMainSubflows,
    #[error("r = {r} exceeds k = {k}")]
    RedundancyExceedsMain { k: usize, r: usize },
    #[error("psi is empty")]
    EmptyPsi,
    #[error("psi has {len} entries but N = {n}")]
    PsiLengthMismatch { n: usize, len: usize },
    #[error("server stage {stage} hosts no VNF (psi[{stage}] = 0)")]
    EmptyServer { stage: usize },
    #[error("{name} = {value} is not a probability in [0, 1]")]
    NotAProbability { name: &'static str, value: f64 },
    #[error("hybrid layout has no parts")]
    EmptyLayout,
    #[error("hybrid part {part} has no VNF")]
    EmptyPart { part: usize },
    #[error("hybrid part VNF counts sum to {sum}, chain has Psi = {psi}")]
    LayoutSumMismatch { sum: usize, psi: usize },
    #[error("hybrid part {part}: {reason}")]
    InvalidPart { part: usize, reason: String },
}

/// Raw, unvalidated chain geometry as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpecConfig {
    pub k: usize,
    pub r: usize,
    /// Servers per sub-SFC. Optional in JSON; defaults to `psi.len()`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub psi: Vec<usize>,
}

/// Parallelization geometry of a chain: `k` main sub-SFCs, `r` redundant
/// ones, each spread over `N = psi.len()` servers with `psi[s]` VNFs on
/// server stage `s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ChainSpecConfig", into = "ChainSpecConfig")]
pub struct ChainSpec {
    k: usize,
    r: usize,
    psi: Vec<usize>,
}

impl ChainSpec {
    pub fn new(k: usize, r: usize, psi: Vec<usize>) -> Result<Self, ModelError> {
        let n = psi.len();
        validate_chain_spec(ChainSpecConfig { k, r, n: Some(n), psi })
    }

    /// `psi_total` VNFs spread as evenly as possible over `n` servers,
    /// larger shares first.
    pub fn even(k: usize, r: usize, n: usize, psi_total: usize) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::EmptyPsi);
        }
        Self::new(k, r, even_split(psi_total, n))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of server stages `N`.
    pub fn n(&self) -> usize {
        self.psi.len()
    }

    pub fn psi(&self) -> &[usize] {
        &self.psi
    }

    /// Total VNFs per sub-SFC, `Ψ = Σ ψ_s`.
    pub fn total_vnfs(&self) -> usize {
        self.psi.iter().sum()
    }

    pub fn with_r(&self, r: usize) -> Result<Self, ModelError> {
        Self::new(self.k, r, self.psi.clone())
    }

    pub fn with_k(&self, k: usize) -> Result<Self, ModelError> {
        Self::new(k, self.r, self.psi.clone())
    }

    pub fn with_psi(&self, psi: Vec<usize>) -> Result<Self, ModelError> {
        Self::new(self.k, self.r, psi)
    }

    pub fn to_config(&self) -> ChainSpecConfig {
        self.clone().into()
    }
}

impl From<ChainSpec> for ChainSpecConfig {
    fn from(spec: ChainSpec) -> Self {
        ChainSpecConfig {
            k: spec.k,
            r: spec.r,
            n: Some(spec.psi.len()),
            psi: spec.psi,
        }
    }
}

impl TryFrom<ChainSpecConfig> for ChainSpec {
    type Error = ModelError;

    fn try_from(config: ChainSpecConfig) -> Result<Self, Self::Error> {
        validate_chain_spec(config)
    }
}

/// Checks every geometry constraint and returns the validated spec.
pub fn validate_chain_spec(config: ChainSpecConfig) -> Result<ChainSpec, ModelError> {
    let ChainSpecConfig { k, r, n, psi } = config;
    if k == 0 {
        return Err(ModelError::NoMainSubflows);
    }
    if r > k {
        return Err(ModelError::RedundancyExceedsMain { k, r });
    }
    if psi.is_empty() {
        return Err(ModelError::EmptyPsi);
    }
    if let Some(n) = n {
        if n != psi.len() {
            return Err(ModelError::PsiLengthMismatch { n, len: psi.len() });
        }
    }
    if let Some(stage) = psi.iter().position(|&v| v == 0) {
        return Err(ModelError::EmptyServer { stage });
    }
    Ok(ChainSpec { k, r, psi })
}

pub(crate) fn even_split(total: usize, parts: usize) -> Vec<usize> {
    let base = total / parts;
    let extra = total % parts;
    (0..parts).map(|i| base + usize::from(i < extra)).collect()
}

/// Which side of the chain a component belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Main,
    Redundant,
}

/// Reliabilities of the three component classes on one side of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentReliability {
    /// Path-segment connectivity (φ).
    pub conn: f64,
    /// Server reliability (varphi).
    pub server: f64,
    /// VM/VNF reliability (υ).
    pub vnf: f64,
}

impl ComponentReliability {
    pub const PERFECT: Self = Self::uniform(1.0);

    pub const fn uniform(p: f64) -> Self {
        Self {
            conn: p,
            server: p,
            vnf: p,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_probability("conn", self.conn)?;
        check_probability("server", self.server)?;
        check_probability("vnf", self.vnf)
    }

    /// Scales every unreliability `1 - p` by `factor`, clamped to [0, 1].
    pub fn scale_unreliability(&self, factor: f64) -> Self {
        let scale = |p: f64| (1.0 - (1.0 - p) * factor).clamp(0.0, 1.0);
        Self {
            conn: scale(self.conn),
            server: scale(self.server),
            vnf: scale(self.vnf),
        }
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::NotAProbability { name, value })
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct ReliabilityConfig {
    main: ComponentReliability,
    #[serde(default)]
    redundant: Option<ComponentReliability>,
}

/// The six component reliabilities (φ, φ_r, varphi, varphi_r, υ, υ_r).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReliabilityConfig")]
pub struct ReliabilityParams {
    pub main: ComponentReliability,
    pub redundant: ComponentReliability,
}

impl TryFrom<ReliabilityConfig> for ReliabilityParams {
    type Error = ModelError;

    fn try_from(config: ReliabilityConfig) -> Result<Self, Self::Error> {
        Self::new(config.main, config.redundant.unwrap_or(config.main))
    }
}

impl ReliabilityParams {
    pub fn new(
        main: ComponentReliability,
        redundant: ComponentReliability,
    ) -> Result<Self, ModelError> {
        let params = Self { main, redundant };
        params.validate()?;
        Ok(params)
    }

    /// Main and redundant components equally reliable.
    pub fn symmetric(side: ComponentReliability) -> Result<Self, ModelError> {
        Self::new(side, side)
    }

    /// Every one of the six reliabilities set to `p`.
    pub fn uniform(p: f64) -> Result<Self, ModelError> {
        Self::symmetric(ComponentReliability::uniform(p))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.main.validate()?;
        self.redundant.validate()
    }

    pub fn side(&self, side: Side) -> &ComponentReliability {
        match side {
            Side::Main => &self.main,
            Side::Redundant => &self.redundant,
        }
    }
}

/// Header parts may carry coded packets; payload parts need decoded traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartKind {
    Header,
    Payload,
}

/// One chain part as written in configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainPartConfig {
    pub kind: PartKind,
    pub vnfs: usize,
    /// Servers for this part; defaults to a proportional share of N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub servers: Option<usize>,
    /// Explicit per-server split; defaults to an even split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<usize>>,
}

impl ChainPartConfig {
    pub fn header(vnfs: usize) -> Self {
        Self {
            kind: PartKind::Header,
            vnfs,
            servers: None,
            psi: None,
        }
    }

    pub fn payload(vnfs: usize) -> Self {
        Self {
            kind: PartKind::Payload,
            ..Self::header(vnfs)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridLayoutConfig {
    pub parts: Vec<ChainPartConfig>,
}

impl HybridLayoutConfig {
    /// Parses the compact form used on the command line, e.g. `H3,P1,H1`.
    pub fn parse_compact(text: &str) -> Result<Self, String> {
        let parts = text
            .split(',')
            .map(|token| {
                let token = token.trim();
                let (kind, count) = token.split_at(token.len().min(1));
                let vnfs: usize = count
                    .trim_start_matches(':')
                    .parse()
                    .map_err(|_| format!("bad part `{token}`"))?;
                match kind {
                    "H" | "h" => Ok(ChainPartConfig::header(vnfs)),
                    "P" | "p" => Ok(ChainPartConfig::payload(vnfs)),
                    _ => Err(format!("bad part `{token}`, expected H<n> or P<n>")),
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { parts })
    }
}

/// A validated chain part with its own geometry (same k and r as the
/// enclosing chain).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChainPart {
    pub kind: PartKind,
    pub spec: ChainSpec,
}

/// Ordered header/payload parts of a chain, validated against the chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HybridLayout {
    parts: Vec<ChainPart>,
}

impl HybridLayout {
    pub fn parts(&self) -> &[ChainPart] {
        &self.parts
    }

    /// `M_h`, number of header parts.
    pub fn header_parts(&self) -> usize {
        self.count(PartKind::Header)
    }

    /// `M_p`, number of payload parts.
    pub fn payload_parts(&self) -> usize {
        self.count(PartKind::Payload)
    }

    fn count(&self, kind: PartKind) -> usize {
        self.parts.iter().filter(|p| p.kind == kind).count()
    }

    /// Same layout with every part re-derived for a different redundancy.
    pub fn with_r(&self, r: usize) -> Result<Self, ModelError> {
        let parts = self
            .parts
            .iter()
            .map(|p| {
                Ok(ChainPart {
                    kind: p.kind,
                    spec: p.spec.with_r(r)?,
                })
            })
            .collect::<Result<_, ModelError>>()?;
        Ok(Self { parts })
    }

    pub fn to_config(&self) -> HybridLayoutConfig {
        HybridLayoutConfig {
            parts: self
                .parts
                .iter()
                .map(|p| ChainPartConfig {
                    kind: p.kind,
                    vnfs: p.spec.total_vnfs(),
                    servers: Some(p.spec.n()),
                    psi: Some(p.spec.psi().to_vec()),
                })
                .collect(),
        }
    }
}

/// Checks the layout against `spec` and resolves per-part geometry.
///
/// Unless overridden, a part gets `max(1, round(N * Ψ_part / Ψ))` servers
/// (never more than it has VNFs) and its VNFs are split evenly over them.
pub fn validate_hybrid_layout(
    layout: &HybridLayoutConfig,
    spec: &ChainSpec,
) -> Result<HybridLayout, ModelError> {
    if layout.parts.is_empty() {
        return Err(ModelError::EmptyLayout);
    }
    if let Some(part) = layout.parts.iter().position(|p| p.vnfs == 0) {
        return Err(ModelError::EmptyPart { part });
    }
    let sum: usize = layout.parts.iter().map(|p| p.vnfs).sum();
    let total = spec.total_vnfs();
    if sum != total {
        return Err(ModelError::LayoutSumMismatch { sum, psi: total });
    }

    let mut parts = Vec::with_capacity(layout.parts.len());
    for (index, part) in layout.parts.iter().enumerate() {
        let invalid = |reason: String| ModelError::InvalidPart {
            part: index,
            reason,
        };
        let psi = match (&part.psi, part.servers) {
            (Some(psi), servers) => {
                if psi.iter().sum::<usize>() != part.vnfs {
                    return Err(invalid(format!(
                        "psi {psi:?} does not sum to {} VNFs",
                        part.vnfs
                    )));
                }
                if servers.is_some_and(|n| n != psi.len()) {
                    return Err(invalid("servers disagrees with psi length".into()));
                }
                psi.clone()
            }
            (None, Some(0)) => return Err(invalid("zero servers".into())),
            (None, Some(n)) if n > part.vnfs => {
                return Err(invalid(format!("{n} servers for {} VNFs", part.vnfs)))
            }
            (None, Some(n)) => even_split(part.vnfs, n),
            (None, None) => {
                let share = (spec.n() * part.vnfs) as f64 / total as f64;
                let n = (share.round() as usize).clamp(1, part.vnfs);
                even_split(part.vnfs, n)
            }
        };
        let part_spec = ChainSpec::new(spec.k(), spec.r(), psi).map_err(|e| invalid(e.to_string()))?;
        parts.push(ChainPart {
            kind: part.kind,
            spec: part_spec,
        });
    }
    Ok(HybridLayout { parts })
}

/// Protection scheme whose service success is evaluated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// No redundancy at all; `r` is ignored.
    Unprotected,
    /// Backup protection where only VNFs fail (servers and segments perfect,
    /// every VNF with the main-side VNF reliability).
    BackupVnfOnly,
    Backup,
    Coding,
    /// Coding on header parts, backup on payload parts.
    Hybrid(HybridLayout),
    /// Every part of the layout backup-protected; the baseline the hybrid
    /// scheme is compared against.
    LayoutBackup(HybridLayout),
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Unprotected => "unprotected",
            Scheme::BackupVnfOnly => "backup-vnf",
            Scheme::Backup => "backup",
            Scheme::Coding => "coding",
            Scheme::Hybrid(_) => "hybrid",
            Scheme::LayoutBackup(_) => "layout-backup",
        }
    }
}

/// Overhead events: traffic redirection (backup) or decoding need (coding).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Overhead {
    #[serde(rename = "P_R")]
    Redirection,
    #[serde(rename = "P_dec")]
    Decoding,
}

impl Overhead {
    pub fn name(self) -> &'static str {
        match self {
            Overhead::Redirection => "P_R",
            Overhead::Decoding => "P_dec",
        }
    }
}

/// Anything a probability can be computed for.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Target {
    Success(Scheme),
    Overhead(Overhead),
}

impl Target {
    pub fn metric(&self) -> &'static str {
        match self {
            Target::Success(_) => "success",
            Target::Overhead(o) => o.name(),
        }
    }
}

/// One evaluated probability, optionally with the per-sub-flow success
/// values `(R_h, R'_h)` it was built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessReport {
    pub scheme: String,
    pub metric: String,
    pub probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subflow_success: Option<(f64, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(k: usize, r: usize, n: usize, psi: &[usize]) -> ChainSpecConfig {
        ChainSpecConfig {
            k,
            r,
            n: Some(n),
            psi: psi.to_vec(),
        }
    }

    #[test]
    fn accepts_typical_geometries() {
        let spec = validate_chain_spec(raw(3, 1, 2, &[3, 2])).unwrap();
        assert_eq!(spec.total_vnfs(), 5);
        assert_eq!(spec.n(), 2);
        let spec = validate_chain_spec(raw(8, 6, 2, &[2, 2])).unwrap();
        assert_eq!((spec.k(), spec.r(), spec.total_vnfs()), (8, 6, 4));
    }

    #[test]
    fn rejects_each_violation() {
        assert_eq!(
            validate_chain_spec(raw(2, 3, 1, &[1])),
            Err(ModelError::RedundancyExceedsMain { k: 2, r: 3 })
        );
        assert_eq!(
            validate_chain_spec(raw(0, 0, 1, &[1])),
            Err(ModelError::NoMainSubflows)
        );
        assert_eq!(
            validate_chain_spec(raw(1, 0, 0, &[])),
            Err(ModelError::EmptyPsi)
        );
        assert_eq!(
            validate_chain_spec(raw(1, 0, 2, &[1])),
            Err(ModelError::PsiLengthMismatch { n: 2, len: 1 })
        );
        assert_eq!(
            validate_chain_spec(raw(1, 0, 2, &[1, 0])),
            Err(ModelError::EmptyServer { stage: 1 })
        );
    }

    #[test]
    fn validation_is_idempotent() {
        let spec = ChainSpec::new(4, 2, vec![3, 1, 2]).unwrap();
        assert_eq!(validate_chain_spec(spec.to_config()).unwrap(), spec);
    }

    #[test]
    fn json_round_trip_validates() {
        let spec: ChainSpec = serde_json::from_str(r#"{"k":3,"r":1,"psi":[3,2]}"#).unwrap();
        assert_eq!(spec.n(), 2);
        let err = serde_json::from_str::<ChainSpec>(r#"{"k":2,"r":3,"psi":[1]}"#);
        assert!(err.unwrap_err().to_string().contains("exceeds"));
        let back: ChainSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn reliability_bounds() {
        assert!(ReliabilityParams::uniform(1.0).is_ok());
        assert!(ReliabilityParams::uniform(0.0).is_ok());
        assert_eq!(
            ReliabilityParams::uniform(1.5),
            Err(ModelError::NotAProbability {
                name: "conn",
                value: 1.5
            })
        );
        let parsed: ReliabilityParams =
            serde_json::from_str(r#"{"main":{"conn":0.9,"server":0.8,"vnf":0.7}}"#).unwrap();
        assert_eq!(parsed.redundant, parsed.main);
        assert!(serde_json::from_str::<ReliabilityParams>(
            r#"{"main":{"conn":0.9,"server":0.8,"vnf":-0.1}}"#
        )
        .is_err());
    }

    #[test]
    fn unreliability_scaling() {
        let side = ComponentReliability {
            conn: 0.9,
            server: 0.8,
            vnf: 1.0,
        };
        let scaled = side.scale_unreliability(0.5);
        assert!((scaled.conn - 0.95).abs() < 1e-15);
        assert!((scaled.server - 0.9).abs() < 1e-15);
        assert_eq!(scaled.vnf, 1.0);
    }

    #[test]
    fn three_part_layout() {
        let spec = ChainSpec::new(4, 1, vec![3, 2]).unwrap();
        let config = HybridLayoutConfig::parse_compact("H3,P1,H1").unwrap();
        let layout = validate_hybrid_layout(&config, &spec).unwrap();
        assert_eq!(layout.header_parts(), 2);
        assert_eq!(layout.payload_parts(), 1);
        assert_eq!(layout.header_parts() + layout.payload_parts(), layout.parts().len());
        for part in layout.parts() {
            assert_eq!((part.spec.k(), part.spec.r(), part.spec.n()), (4, 1, 1));
        }
        assert_eq!(layout.parts()[0].spec.psi(), &[3]);
    }

    #[test]
    fn pure_header_layout() {
        let spec = ChainSpec::new(2, 1, vec![2, 2]).unwrap();
        let layout = validate_hybrid_layout(&HybridLayoutConfig::parse_compact("H4").unwrap(), &spec)
            .unwrap();
        assert_eq!((layout.header_parts(), layout.payload_parts()), (1, 0));
        assert_eq!(layout.parts()[0].spec, spec);
    }

    #[test]
    fn layout_rejections() {
        let spec = ChainSpec::new(2, 1, vec![2, 2]).unwrap();
        let short = HybridLayoutConfig::parse_compact("H2,P1").unwrap();
        assert_eq!(
            validate_hybrid_layout(&short, &spec),
            Err(ModelError::LayoutSumMismatch { sum: 3, psi: 4 })
        );
        let empty = HybridLayoutConfig { parts: vec![] };
        assert_eq!(validate_hybrid_layout(&empty, &spec), Err(ModelError::EmptyLayout));
        let zero = HybridLayoutConfig::parse_compact("H4,P0").unwrap();
        assert_eq!(
            validate_hybrid_layout(&zero, &spec),
            Err(ModelError::EmptyPart { part: 1 })
        );
        let mut overridden = HybridLayoutConfig::parse_compact("H3,P1").unwrap();
        overridden.parts[0].servers = Some(4);
        assert!(matches!(
            validate_hybrid_layout(&overridden, &spec),
            Err(ModelError::InvalidPart { part: 0, .. })
        ));
        assert!(HybridLayoutConfig::parse_compact("X3").is_err());
    }

    #[test]
    fn part_overrides() {
        let spec = ChainSpec::new(2, 1, vec![2, 2]).unwrap();
        let mut config = HybridLayoutConfig::parse_compact("H3,P1").unwrap();
        config.parts[0].psi = Some(vec![1, 2]);
        let layout = validate_hybrid_layout(&config, &spec).unwrap();
        assert_eq!(layout.parts()[0].spec.psi(), &[1, 2]);
        let back = validate_hybrid_layout(&layout.to_config(), &spec).unwrap();
        assert_eq!(back, layout);
    }
}
