//! Built-in sweeps comparing the protection schemes.
//!
//! All presets evaluate under [`DEFAULT_REGIME`] unless they vary the
//! regime themselves, and every preset carries the regime in its notes so
//! CSV output records what it was computed under.

use crate::model::{ChainSpecConfig, ComponentReliability, ReliabilityParams};

use super::{Class, ExperimentConfig, LayoutSpec, Method, SchemeName, Sweep, SweepParam};
use crate::oracle::DEFAULT_COMPONENT_BOUND;

/// Default component reliabilities: VNFs fail more often than servers or
/// path segments.
pub const DEFAULT_REGIME: ComponentReliability = ComponentReliability {
    conn: 0.96,
    server: 0.98,
    vnf: 0.95,
};

/// Unreliability multiplier applied to the raised side of a regime.
pub const RAISED_FACTOR: f64 = 0.5;

/// Main-versus-redundant reliability regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Equal,
    RedundantRaised,
    MainRaised,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Equal, Regime::RedundantRaised, Regime::MainRaised];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Equal => "equal",
            Regime::RedundantRaised => "redundant-raised",
            Regime::MainRaised => "main-raised",
        }
    }

    /// `(main, redundant)` unreliability multipliers.
    pub fn multipliers(self) -> (f64, f64) {
        match self {
            Regime::Equal => (1.0, 1.0),
            Regime::RedundantRaised => (1.0, RAISED_FACTOR),
            Regime::MainRaised => (RAISED_FACTOR, 1.0),
        }
    }

    pub fn apply(self, base: ComponentReliability) -> ReliabilityParams {
        let (m, r) = self.multipliers();
        ReliabilityParams {
            main: base.scale_unreliability(m),
            redundant: base.scale_unreliability(r),
        }
    }
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub configs: Vec<ExperimentConfig>,
}

impl Preset {
    /// Comment lines describing the preset and its regime.
    pub fn notes(&self) -> Vec<String> {
        let d = DEFAULT_REGIME;
        vec![
            format!("preset {}: {}", self.name, self.description),
            format!(
                "default regime: conn={} server={} vnf={} (both sides); raised side scales unreliability by {}",
                d.conn, d.server, d.vnf, RAISED_FACTOR
            ),
        ]
    }
}

const DESCRIPTIONS: [(&str, &str); 5] = [
    ("fig-kr", "backup vs coding success and overheads, N=2, Psi=4, k in {4,8}, r swept 0..k"),
    ("fig-component", "k=8, r=6, N=2, Psi=4; conn, server and vnf each swept over [0.5,1]"),
    ("fig-rr", "k=8, N=2, Psi=4, r swept 0..8 under equal, redundant-raised and main-raised regimes"),
    ("fig-vnfnum", "Psi swept 2..8 with N=2 for (k,r) in {(4,3),(8,4)}, main-raised regime"),
    ("fig-hybrid", "layout H3,P1,H1 (N=2, Psi=5) hybrid vs all-backup parts and whole-chain backup, k in {4,8}, r swept 0..k"),
];

/// Names and one-line descriptions of every preset.
pub fn list_presets() -> Vec<(&'static str, &'static str)> {
    DESCRIPTIONS.to_vec()
}

fn chain(k: usize, psi: &[usize]) -> ChainSpecConfig {
    ChainSpecConfig {
        k,
        r: 0,
        n: None,
        psi: psi.to_vec(),
    }
}

fn base(series: String, schemes: &[SchemeName], chain: ChainSpecConfig, rel: ReliabilityParams, sweep: Sweep, trials: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        series,
        schemes: schemes.to_vec(),
        chain,
        reliability: rel,
        layout: None,
        sweep,
        methods: vec![Method::Analytic, Method::Mc],
        metrics: None,
        trials,
        seed,
        workers: 0,
        oracle_bound: DEFAULT_COMPONENT_BOUND,
    }
}

fn r_sweep(k: usize) -> Sweep {
    Sweep {
        param: SweepParam::R,
        from: 0.0,
        to: k as f64,
        step: 1.0,
    }
}

const BACKUP_CODING: [SchemeName; 2] = [SchemeName::Backup, SchemeName::Coding];

/// Builds the named preset with the given Monte-Carlo settings.
pub fn preset(name: &str, trials: u64, seed: u64) -> Option<Preset> {
    let default = ReliabilityParams::symmetric(DEFAULT_REGIME).expect("default regime is valid");
    let configs = match name {
        "fig-kr" => [4, 8]
            .into_iter()
            .map(|k| base(format!("k={k}"), &BACKUP_CODING, chain(k, &[2, 2]), default, r_sweep(k), trials, seed))
            .collect(),
        "fig-component" => [Class::Conn, Class::Server, Class::Vnf]
            .into_iter()
            .map(|class| {
                let sweep = Sweep {
                    param: SweepParam::Reliability { class, side: None },
                    from: 0.5,
                    to: 1.0,
                    step: 0.05,
                };
                let mut c = chain(8, &[2, 2]);
                c.r = 6;
                base(format!("vary={}", sweep.param), &BACKUP_CODING, c, default, sweep, trials, seed)
            })
            .collect(),
        "fig-rr" => Regime::ALL
            .into_iter()
            .map(|regime| {
                let rel = regime.apply(DEFAULT_REGIME);
                base(regime.name().into(), &BACKUP_CODING, chain(8, &[2, 2]), rel, r_sweep(8), trials, seed)
            })
            .collect(),
        "fig-vnfnum" => [(4, 3), (8, 4)]
            .into_iter()
            .map(|(k, r)| {
                let sweep = Sweep {
                    param: SweepParam::Psi,
                    from: 2.0,
                    to: 8.0,
                    step: 1.0,
                };
                let mut c = chain(k, &[1, 1]);
                c.r = r;
                let rel = Regime::MainRaised.apply(DEFAULT_REGIME);
                base(format!("k={k},r={r}"), &BACKUP_CODING, c, rel, sweep, trials, seed)
            })
            .collect(),
        "fig-hybrid" => [4, 8]
            .into_iter()
            .map(|k| {
                let schemes = [SchemeName::Hybrid, SchemeName::LayoutBackup, SchemeName::Backup];
                let mut c = base(format!("k={k}"), &schemes, chain(k, &[3, 2]), default, r_sweep(k), trials, seed);
                c.layout = Some(LayoutSpec::Compact("H3,P1,H1".into()));
                c
            })
            .collect(),
        _ => return None,
    };
    let &(name, description) = DESCRIPTIONS.iter().find(|(n, _)| *n == name)?;
    Some(Preset {
        name,
        description,
        configs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;
    use crate::model::ChainSpec;

    #[test]
    fn listing_is_stable_and_complete() {
        let names: Vec<_> = list_presets().into_iter().map(|(n, _)| n).collect();
        for wanted in ["fig-kr", "fig-component", "fig-rr", "fig-vnfnum", "fig-hybrid"] {
            assert!(names.contains(&wanted));
        }
        assert_eq!(list_presets(), list_presets());
    }

    #[test]
    fn every_preset_validates() {
        for (name, _) in list_presets() {
            let p = preset(name, 100, 1).unwrap();
            assert!(!p.configs.is_empty());
            for c in &p.configs {
                c.points().unwrap_or_else(|e| panic!("{name}/{}: {e}", c.series));
            }
        }
        assert!(preset("fig-nope", 1, 1).is_none());
    }

    #[test]
    fn regimes_order_sides() {
        let main_raised = Regime::MainRaised.apply(DEFAULT_REGIME);
        assert!(main_raised.main.vnf > main_raised.redundant.vnf);
        assert!((main_raised.main.vnf - 0.975).abs() < 1e-12);
        let red_raised = Regime::RedundantRaised.apply(DEFAULT_REGIME);
        assert!(red_raised.redundant.conn > red_raised.main.conn);
        assert_eq!(Regime::Equal.apply(DEFAULT_REGIME).main, DEFAULT_REGIME);
    }

    #[test]
    fn default_regime_favours_connectivity_and_servers() {
        const { assert!(DEFAULT_REGIME.vnf < DEFAULT_REGIME.server) };
        const { assert!(DEFAULT_REGIME.vnf < DEFAULT_REGIME.conn) };
        let rel = ReliabilityParams::symmetric(DEFAULT_REGIME).unwrap();
        let spec = ChainSpec::new(8, 8, vec![2, 2]).unwrap();
        assert!(analytic::success_coding(&spec, &rel) > analytic::success_backup(&spec, &rel));
    }
}
