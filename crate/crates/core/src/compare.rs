//! Cross-policy comparison of finished runs on the same scenario.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::metrics::RunReport;
use crate::output::{fmt_opt_real, fmt_real};
use crate::scheduler::Policy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyStats {
    pub policy: Policy,
    pub throughput_bps: f64,
    pub jfi: Option<f64>,
    pub qoe_fi: Option<f64>,
}

/// Candidate against baseline for one seed, or for the mean over seeds when
/// `seed` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub seed: Option<u64>,
    pub policies: Vec<PolicyStats>,
    /// Candidate throughput over baseline throughput.
    pub throughput_ratio: f64,
    pub candidate_higher_throughput: bool,
    pub candidate_lower_qoe_fi: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub fingerprint: String,
    pub candidate: Policy,
    pub baseline: Policy,
    pub per_seed: Vec<Row>,
    pub mean: Row,
    pub seeds_higher_throughput: usize,
    pub seeds_lower_qoe_fi: usize,
}

fn stats(r: &RunReport) -> PolicyStats {
    PolicyStats {
        policy: r.policy,
        throughput_bps: r.total_throughput_bps,
        jfi: r.jfi,
        qoe_fi: r.qoe_fi,
    }
}

fn row(seed: Option<u64>, policies: Vec<PolicyStats>, candidate: Policy, baseline: Policy) -> Row {
    let find = |p: Policy| policies.iter().find(|s| s.policy == p).expect("policy present");
    let (c, b) = (find(candidate), find(baseline));
    let lower_fi = matches!((c.qoe_fi, b.qoe_fi), (Some(x), Some(y)) if x < y);
    Row {
        seed,
        throughput_ratio: c.throughput_bps / b.throughput_bps,
        candidate_higher_throughput: c.throughput_bps > b.throughput_bps,
        candidate_lower_qoe_fi: lower_fi,
        policies: policies.clone(),
    }
}

fn mean_opt(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = xs.collect();
    v.filter(|v| !v.is_empty())
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// Compares BCQQ (or the first policy seen) against M-LWDF (or the first
/// other policy) seed by seed and on the means over seeds.
pub fn compare(runs: &[RunReport]) -> Result<Comparison> {
    let Some(first) = runs.first() else {
        return Err(SimError::invalid("runs", "nothing to compare"));
    };
    if let Some(bad) = runs
        .iter()
        .find(|r| r.scenario_fingerprint != first.scenario_fingerprint)
    {
        return Err(SimError::invalid(
            "scenario",
            format!(
                "runs come from different scenarios ({} vs {})",
                first.scenario_fingerprint, bad.scenario_fingerprint
            ),
        ));
    }
    let mut policies: Vec<Policy> = Vec::new();
    for r in runs {
        if !policies.contains(&r.policy) {
            policies.push(r.policy);
        }
    }
    if policies.len() < 2 {
        return Err(SimError::invalid("policy", "comparison needs at least two policies"));
    }
    let candidate = if policies.contains(&Policy::Bcqq) {
        Policy::Bcqq
    } else {
        policies[0]
    };
    let baseline = if candidate != Policy::Mlwdf && policies.contains(&Policy::Mlwdf) {
        Policy::Mlwdf
    } else {
        *policies.iter().find(|&&p| p != candidate).expect("two policies")
    };

    let mut by_seed: BTreeMap<u64, Vec<PolicyStats>> = BTreeMap::new();
    for r in runs {
        let entry = by_seed.entry(r.seed).or_default();
        if entry.iter().any(|s| s.policy == r.policy) {
            return Err(SimError::invalid(
                "runs",
                format!("duplicate run {} seed {}", r.policy, r.seed),
            ));
        }
        entry.push(stats(r));
    }
    let mut per_seed = Vec::new();
    for (seed, mut stats) in by_seed {
        for p in [candidate, baseline] {
            if !stats.iter().any(|s| s.policy == p) {
                return Err(SimError::invalid("runs", format!("seed {seed} has no {p} run")));
            }
        }
        stats.sort_by_key(|s| policies.iter().position(|&p| p == s.policy));
        per_seed.push(row(Some(seed), stats, candidate, baseline));
    }

    let means: Vec<PolicyStats> = policies
        .iter()
        .filter_map(|&p| {
            let rows: Vec<&PolicyStats> = per_seed
                .iter()
                .filter_map(|r| r.policies.iter().find(|s| s.policy == p))
                .collect();
            (!rows.is_empty()).then(|| PolicyStats {
                policy: p,
                throughput_bps: rows.iter().map(|s| s.throughput_bps).sum::<f64>() / rows.len() as f64,
                jfi: mean_opt(rows.iter().map(|s| s.jfi)),
                qoe_fi: mean_opt(rows.iter().map(|s| s.qoe_fi)),
            })
        })
        .collect();
    let mean = row(None, means, candidate, baseline);
    Ok(Comparison {
        fingerprint: first.scenario_fingerprint.clone(),
        candidate,
        baseline,
        seeds_higher_throughput: per_seed.iter().filter(|r| r.candidate_higher_throughput).count(),
        seeds_lower_qoe_fi: per_seed.iter().filter(|r| r.candidate_lower_qoe_fi).count(),
        per_seed,
        mean,
    })
}

impl Comparison {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serializes")
    }

    /// Plain-text table, one line per (seed, policy).
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "candidate {} vs baseline {}", self.candidate, self.baseline);
        let _ = writeln!(
            out,
            "{:>6}  {:<6} {:>16} {:>16} {:>16}",
            "seed", "policy", "throughput_bps", "jfi", "qoe_fi"
        );
        for r in self.per_seed.iter().chain(std::iter::once(&self.mean)) {
            let seed = r.seed.map_or("mean".to_string(), |s| s.to_string());
            for s in &r.policies {
                let _ = writeln!(
                    out,
                    "{:>6}  {:<6} {:>16} {:>16} {:>16}",
                    seed,
                    s.policy.name(),
                    fmt_real(s.throughput_bps),
                    fmt_opt_real(s.jfi),
                    fmt_opt_real(s.qoe_fi)
                );
            }
            let _ = writeln!(
                out,
                "{:>6}  ratio {}  higher_throughput={}  lower_qoe_fi={}",
                seed,
                fmt_real(r.throughput_ratio),
                r.candidate_higher_throughput,
                r.candidate_lower_qoe_fi
            );
        }
        let _ = writeln!(
            out,
            "seeds with higher throughput: {}/{}  seeds with lower qoe_fi: {}/{}",
            self.seeds_higher_throughput,
            self.per_seed.len(),
            self.seeds_lower_qoe_fi,
            self.per_seed.len()
        );
        out
    }
}
