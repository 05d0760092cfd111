//! Closed-form service-success and overhead probabilities.
//!
//! All sums run outermost-to-innermost in the order the failure budget is
//! spent (active segments, backup segments, active servers, backup servers,
//! active VNFs, backup VNFs). A sum whose lower bound exceeds its upper
//! bound contributes nothing; with the budget bounded by `r` this falls out
//! of the `0..=remaining` ranges directly.

use crate::model::{ChainSpec, ComponentReliability, HybridLayout, PartKind, ReliabilityParams, Scheme, Side};

/// `n choose k`, computed exactly in integers before conversion.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// Probability that exactly `failed` of `total` independent components,
/// each up with probability `p`, are down.
fn exactly_failed(total: usize, failed: usize, p: f64) -> f64 {
    if failed > total {
        return 0.0;
    }
    binomial(total, failed) * powu(p, total - failed) * powu(1.0 - p, failed)
}

fn powu(base: f64, exp: usize) -> f64 {
    base.powi(exp as i32)
}

/// Success probability of a chain without any protection:
/// every segment, server and VNF of all `k` sub-SFCs must be up.
pub fn success_unprotected(spec: &ChainSpec, rel: &ReliabilityParams) -> f64 {
    powu(chain_success(spec, &rel.main), spec.k())
}

/// Backup success when only VNFs can fail: for every VNF type at most `r`
/// of the `k + r` instances may be down.
pub fn success_backup_vnf_only(spec: &ChainSpec, vnf_rel: f64) -> f64 {
    let (k, r) = (spec.k(), spec.r());
    let per_type: f64 = (0..=r).map(|i| exactly_failed(r + k, i, vnf_rel)).sum();
    powu(per_type, spec.total_vnfs())
}

/// Backup-protection success.
///
/// Per server stage the failure budget `r` is shared by failed active
/// segments (ξ), failed backup segments (γ), failed reachable active
/// servers (f), failed reachable backup servers (l) and, per VNF type,
/// failed active (i) and backup (j) VNFs on up servers. The VNF bracket is
/// raised to ψ_s since the types fail independently once the server level
/// is fixed. The `k` destination segments must all be up.
pub fn success_backup(spec: &ChainSpec, rel: &ReliabilityParams) -> f64 {
    let (k, r) = (spec.k(), spec.r());
    let (m, b) = (&rel.main, &rel.redundant);
    let mut total = powu(m.conn, k);
    for &psi in spec.psi() {
        let mut stage = 0.0;
        for xi in 0..=r {
            let p_xi = exactly_failed(k, xi, m.conn);
            for gamma in 0..=r - xi {
                let p_gamma = exactly_failed(r, gamma, b.conn);
                for f in 0..=r - xi - gamma {
                    let p_f = exactly_failed(k - xi, f, m.server);
                    for l in 0..=r - xi - gamma - f {
                        let p_l = exactly_failed(r - gamma, l, b.server);
                        let budget = r - xi - gamma - f - l;
                        let active_up = (k - xi).saturating_sub(f);
                        let backup_up = r - gamma - l;
                        let mut bracket = 0.0;
                        for i in 0..=budget {
                            let p_i = exactly_failed(active_up, i, m.vnf);
                            for j in 0..=budget - i {
                                bracket += p_i * exactly_failed(backup_up, j, b.vnf);
                            }
                        }
                        stage += p_xi * p_gamma * p_f * p_l * powu(bracket, psi);
                    }
                }
            }
        }
        total *= stage;
    }
    total
}

/// Probability that one sub-flow's private chain (N+1 segments, N servers,
/// Ψ VNFs) is entirely up: `R_h` for main, `R'_h` for redundant.
pub fn subflow_success(spec: &ChainSpec, rel: &ReliabilityParams, side: Side) -> f64 {
    chain_success(spec, rel.side(side))
}

fn chain_success(spec: &ChainSpec, c: &ComponentReliability) -> f64 {
    let n = spec.n();
    powu(c.server, n) * powu(c.vnf, spec.total_vnfs()) * powu(c.conn, n + 1)
}

/// Coding success: at most `r` of the `k + r` independent coded sub-flows
/// are lost.
pub fn success_coding(spec: &ChainSpec, rel: &ReliabilityParams) -> f64 {
    let (k, r) = (spec.k(), spec.r());
    let rh = subflow_success(spec, rel, Side::Main);
    let rh_red = subflow_success(spec, rel, Side::Redundant);
    (0..=r)
        .map(|i| {
            let mains = exactly_failed(k, i, rh);
            let redundant: f64 = (0..=r - i).map(|j| exactly_failed(r, j, rh_red)).sum();
            mains * redundant
        })
        .sum()
}

/// Hybrid success: coding on every header part, backup on every payload
/// part, parts independent. With identical parts this is `R_b^M_p * R_c^M_h`.
pub fn success_hybrid(layout: &HybridLayout, rel: &ReliabilityParams) -> f64 {
    layout
        .parts()
        .iter()
        .map(|part| match part.kind {
            PartKind::Header => success_coding(&part.spec, rel),
            PartKind::Payload => success_backup(&part.spec, rel),
        })
        .product()
}

/// Success of the same per-part deployment with every part backup-protected.
pub fn success_layout_backup(layout: &HybridLayout, rel: &ReliabilityParams) -> f64 {
    layout
        .parts()
        .iter()
        .map(|part| success_backup(&part.spec, rel))
        .product()
}

/// Probability that traffic must be redirected: some active segment,
/// server or VNF is down. Destination segments are not part of the event.
pub fn prob_redirection(spec: &ChainSpec, rel: &ReliabilityParams) -> f64 {
    let m = &rel.main;
    let all_active_up: f64 = spec
        .psi()
        .iter()
        .map(|&psi| powu(m.conn * m.server * powu(m.vnf, psi), spec.k()))
        .product();
    1.0 - all_active_up
}

/// Probability that decoding is needed: at least one main sub-flow is lost
/// while the total loss stays recoverable (at most `r`).
pub fn prob_decoding(spec: &ChainSpec, rel: &ReliabilityParams) -> f64 {
    let (k, r) = (spec.k(), spec.r());
    let rh = subflow_success(spec, rel, Side::Main);
    let rh_red = subflow_success(spec, rel, Side::Redundant);
    let mut total = 0.0;
    for f in 1..=r {
        let mains = exactly_failed(k, f, rh);
        for i in 0..=r - f {
            total += mains * exactly_failed(r, i, rh_red);
        }
    }
    total
}

/// Dispatches to the closed form for `scheme`.
pub fn success(scheme: &Scheme, spec: &ChainSpec, rel: &ReliabilityParams) -> f64 {
    match scheme {
        Scheme::Unprotected => success_unprotected(spec, rel),
        Scheme::BackupVnfOnly => success_backup_vnf_only(spec, rel.main.vnf),
        Scheme::Backup => success_backup(spec, rel),
        Scheme::Coding => success_coding(spec, rel),
        Scheme::Hybrid(layout) => success_hybrid(layout, rel),
        Scheme::LayoutBackup(layout) => success_layout_backup(layout, rel),
    }
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
    fn binomials_are_exact() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(16, 8), 12870.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(0, 0), 1.0);
        assert_eq!(binomial(60, 30), 118264581564861424.0);
    }

    #[test]
    fn unprotected_examples() {
        close(success_unprotected(&spec(3, 1, &[3, 2]), &all(1.0)), 1.0);
        close(success_unprotected(&spec(1, 0, &[1]), &all(0.9)), 0.6561);
        close(success_unprotected(&spec(2, 0, &[1]), &all(0.9)), 0.43046721);
    }

    #[test]
    fn vnf_only_examples() {
        close(success_backup_vnf_only(&spec(3, 2, &[2, 2]), 1.0), 1.0);
        close(success_backup_vnf_only(&spec(1, 1, &[1]), 0.9), 0.99);
        close(success_backup_vnf_only(&spec(1, 1, &[2]), 0.9), 0.9801);
        close(success_backup_vnf_only(&spec(1, 1, &[1, 1]), 0.9), 0.9801);
    }

    #[test]
    fn backup_examples() {
        close(success_backup(&spec(3, 2, &[2, 1]), &all(1.0)), 1.0);
        close(success_backup(&spec(1, 0, &[1]), &all(0.9)), 0.6561);
        close(success_backup(&spec(1, 1, &[1]), &all(0.9)), 0.8339031);
    }

    #[test]
    fn subflow_examples() {
        let rel = ReliabilityParams::symmetric(ComponentReliability {
            conn: 0.999,
            server: 0.99,
            vnf: 0.95,
        })
        .unwrap();
        let expected = 0.99f64.powi(2) * 0.95f64.powi(4) * 0.999f64.powi(3);
        close(subflow_success(&spec(2, 0, &[2, 2]), &rel, Side::Main), expected);
        close(subflow_success(&spec(2, 0, &[2, 2]), &all(1.0), Side::Main), 1.0);
        let mut cut = all(0.9);
        cut.redundant.conn = 0.0;
        assert_eq!(subflow_success(&spec(2, 1, &[1]), &cut, Side::Redundant), 0.0);
    }

    #[test]
    fn coding_examples() {
        let s = spec(3, 0, &[2, 1]);
        close(success_coding(&s, &all(0.9)), success_unprotected(&s, &all(0.9)));
        close(success_coding(&spec(1, 1, &[1]), &all(0.9)), 0.88173279);
        close(success_coding(&spec(3, 3, &[2, 1]), &all(1.0)), 1.0);
    }

    #[test]
    fn overhead_examples() {
        close(prob_redirection(&spec(2, 1, &[2, 2]), &all(1.0)), 0.0);
        close(prob_redirection(&spec(1, 0, &[1]), &all(0.9)), 0.271);
        close(prob_redirection(&spec(2, 0, &[1]), &all(0.9)), 0.468559);
        assert_eq!(prob_decoding(&spec(3, 0, &[1]), &all(0.9)), 0.0);
        close(prob_decoding(&spec(1, 1, &[1]), &all(0.9)), 0.22563279);
        close(prob_decoding(&spec(3, 2, &[2]), &all(1.0)), 0.0);
    }

    #[test]
    fn zero_reliability() {
        let s = spec(2, 1, &[1, 1]);
        assert_eq!(success_backup(&s, &all(0.0)), 0.0);
        assert_eq!(success_coding(&s, &all(0.0)), 0.0);
        assert_eq!(success_unprotected(&s, &all(0.0)), 0.0);
        assert_eq!(prob_redirection(&s, &all(0.0)), 1.0);
    }
}
