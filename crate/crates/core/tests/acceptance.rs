//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::fs;
use std::time::{Duration, Instant};

use macsim_core::engine::{Engine, RunOutput, TraceRow};
use macsim_core::metrics::{jfi, qoe_fi};
use macsim_core::output::emit;
use macsim_core::scheduler::{bcqq_priority, select, Policy, UeSnapshot};
use macsim_core::traffic::FlowSpec;
use macsim_core::{run, run_sweep, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)*) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)*));
        }
    };
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!("{what} took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64()))
    }
}

fn ac1_jfi() -> Outcome {
    let t0 = Instant::now();
    let v = jfi(&[1.0, 2.0, 3.0]).unwrap();
    check!((v - 6.0 / 7.0).abs() <= 1e-12, "jfi([1,2,3]) = {v}");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let c: f64 = rng.random_range(1e-6..1e9);
        let n = rng.random_range(1..50);
        let v = jfi(&vec![c; n]).unwrap();
        check!((v - 1.0).abs() <= 1e-12, "constant vector gave {v}");
    }
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..40);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1e9)).collect();
        let c: f64 = rng.random_range(1e-6..1e6);
        let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
        let (a, b) = (jfi(&xs).unwrap(), jfi(&scaled).unwrap());
        worst = worst.max((a - b).abs() / a);
    }
    check!(worst <= 1e-12, "scale invariance error {worst:e}");
    within(t0.elapsed(), 1.0, "AC1")?;
    Ok(format!("jfi([1,2,3])={v:.15}, max scale error {worst:.1e}"))
}

fn ac2_qoe_fi() -> Outcome {
    let t0 = Instant::now();
    let a = qoe_fi(&[(0.5, 1.0), (1.0, 1.0)]).unwrap();
    check!(a == 1.0, "{{0.5, 1.0}} gave {a}");
    let b = qoe_fi(&[(1.0, 1.0), (0.5, 1.0), (0.25, 1.0)]).unwrap();
    check!(b == 3.0, "{{1.0, 0.5, 0.25}} gave {b}");
    let c = qoe_fi(&[(3.0, 6.0), (1.0, 2.0), (0.5, 1.0), (2.0, 4.0)]).unwrap();
    check!(c == 0.0, "equal ratios gave {c}");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..12);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0.0..1e9), rng.random_range(1.0..1e9)))
            .collect();
        let ratios: Vec<f64> = pairs.iter().map(|(y, big)| y / big).collect();
        let mut unordered = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                unordered += (ratios[i] - ratios[j]).abs();
            }
        }
        let literal = qoe_fi(&pairs).unwrap();
        worst = worst.max((literal - 2.0 * unordered).abs() / (2.0 * unordered).max(1e-300));
    }
    check!(worst <= 1e-12, "double loop vs pair sum error {worst:e}");
    within(t0.elapsed(), 1.0, "AC2")?;
    Ok(format!("exact values 1.0 / 3.0 / 0.0, max pair-sum error {worst:.1e}"))
}

fn random_snapshot(rng: &mut ChaCha8Rng, ue_id: u32) -> UeSnapshot {
    UeSnapshot {
        ue_id,
        buffer_bits: rng.random_range(1..40_000_000),
        buffersize_bits: 40_000_000,
        alpha: rng.random_range(1e-9..0.5),
        beta_s: rng.random_range(0.001..1.0),
        q: rng.random_range(1.0..100.0),
        rate_bps: rng.random_range(1e6..6e9),
        hol_delay_s: rng.random_range(0.0..0.3),
        avg_rate_bps: rng.random_range(1.0..6e9),
        last_served_tti: if rng.random_bool(0.2) {
            None
        } else {
            Some(rng.random_range(0..1000))
        },
    }
}

fn ac3_bcqq_oracle() -> Outcome {
    let u = UeSnapshot {
        ue_id: 0,
        buffer_bits: 20_000_000,
        buffersize_bits: 40_000_000,
        alpha: 1e-6,
        beta_s: 0.3,
        q: 1.0,
        rate_bps: 1e8,
        hol_delay_s: 0.0,
        avg_rate_bps: 1.0,
        last_served_tti: None,
    };
    let l = bcqq_priority(&u);
    let rel = (l - 2.302585e9).abs() / 2.302585e9;
    check!(rel <= 1e-6, "L = {l}, relative error {rel:e}");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..10_000 {
        let u = random_snapshot(&mut rng, 0);
        let base = bcqq_priority(&u);
        let k: f64 = rng.random_range(1.001..2.0);
        let mut v = u.clone();
        match i % 5 {
            0 => v.buffer_bits = ((u.buffer_bits as f64 * k).ceil() as u64).min(40_000_000),
            1 => v.q *= k,
            2 => v.rate_bps *= k,
            3 => v.alpha /= k,
            _ => v.beta_s /= k,
        }
        if v.buffer_bits == u.buffer_bits && i % 5 == 0 {
            continue;
        }
        let after = bcqq_priority(&v);
        check!(
            after > base,
            "perturbation {i} kind {} did not raise priority: {base} -> {after}",
            i % 5
        );
    }
    Ok(format!("L={l:.6e} (rel err {rel:.1e}), 10^4 monotone perturbations"))
}

fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let n = rng.random_range(3..7);
    let mut s = Scenario::table1(1.2);
    s.name = "random".into();
    s.duration_tti = 100_000;
    s.window_tti = Some(1_000);
    s.buffersize_bits = rng.random_range(5_000_000..60_000_000);
    s.channel.walk_prob = rng.random_range(0.0..0.5);
    s.channel.initial_cqi = (0..n).map(|_| rng.random_range(1..=15)).collect();
    s.flows = (0..n)
        .map(|i| {
            let beta = rng.random_range(20..400);
            let alpha = 10f64.powf(rng.random_range(-8.0..-1.0));
            let load = rng.random_range(1e7..2e9);
            if rng.random_bool(0.5) {
                FlowSpec::ftp(i as u32 + 1, alpha, beta, rng.random_range(10_000..2_000_000), load)
            } else {
                FlowSpec::video(
                    i as u32 + 1,
                    alpha,
                    beta,
                    rng.random_range(100_000..4_000_000),
                    rng.random_range(1..20),
                    load,
                )
            }
        })
        .collect();
    s
}

fn ac4_conservation() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = random_scenario(&mut rng);
    s.validate().map_err(|e| e.to_string())?;
    let mut closes = 0;
    for policy in Policy::ALL {
        let mut e = Engine::new(&s, policy, 404).map_err(|e| e.to_string())?;
        let mut seen = 0;
        while !e.is_done() {
            e.step();
            if e.windows().len() > seen {
                seen = e.windows().len();
                closes += 1;
                for (i, c) in e.counters().iter().enumerate() {
                    check!(c.conserved(), "{policy} ue index {i} at tti {}: {c:?}", e.tti());
                }
                let w = e.windows().last().unwrap();
                check!(
                    w.cumulative.conserved(),
                    "{policy} window {} totals {:?}",
                    w.index,
                    w.cumulative
                );
                check!(w.cumulative == e.totals(), "window snapshot differs from buffers");
            }
        }
    }
    within(t0.elapsed(), 30.0, "AC4")?;
    Ok(format!(
        "{} UEs, 4 policies, {closes} window closes, exact",
        s.flows.len()
    ))
}

fn table1() -> Scenario {
    Scenario::table1(1.2)
}

fn ac5_determinism() -> Outcome {
    let s = table1();
    let write = |dir: &std::path::Path| -> Result<Vec<Vec<u8>>, String> {
        let out = run_sweep(&s, &[Policy::Bcqq], &[s.seed], true).map_err(|e| e.to_string())?;
        emit(&s, &out, dir).map_err(|e| e.to_string())?;
        ["summary.json", "metrics.csv", "trace.csv"]
            .iter()
            .map(|f| fs::read(dir.join(f)).map_err(|e| e.to_string()))
            .collect()
    };
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (fa, fb) = (write(a.path())?, write(b.path())?);
    for (name, (x, y)) in ["summary.json", "metrics.csv", "trace.csv"]
        .iter()
        .zip(fa.iter().zip(&fb))
    {
        check!(x == y, "{name} differs between runs");
    }
    Ok(format!("3 files byte-identical ({} trace bytes)", fa[2].len()))
}

struct PolicySweep {
    bcqq: Vec<RunOutput>,
    mlwdf: Vec<RunOutput>,
    elapsed: Duration,
}

fn sweep() -> Result<PolicySweep, String> {
    let t0 = Instant::now();
    let s = table1();
    let seeds: Vec<u64> = (1..=10).collect();
    let mut runs = run_sweep(&s, &[Policy::Bcqq, Policy::Mlwdf], &seeds, false).map_err(|e| e.to_string())?;
    let mlwdf = runs.split_off(seeds.len());
    Ok(PolicySweep {
        bcqq: runs,
        mlwdf,
        elapsed: t0.elapsed(),
    })
}

fn ac6_throughput(sw: &PolicySweep) -> Outcome {
    within(sw.elapsed, 60.0, "AC6/AC7 sweep")?;
    let mean = |r: &[RunOutput]| r.iter().map(|o| o.report.total_throughput_bps).sum::<f64>() / r.len() as f64;
    let (b, m) = (mean(&sw.bcqq), mean(&sw.mlwdf));
    let gain = b / m - 1.0;
    check!(
        gain >= 0.10,
        "BCQQ {b:.4e} vs MLWDF {m:.4e}: gain {:.1}% < 10%",
        gain * 100.0
    );
    Ok(format!(
        "BCQQ {:.0} Mbps vs MLWDF {:.0} Mbps, gain {:.1}% (>= 10%), sweep {:.1}s",
        b / 1e6,
        m / 1e6,
        gain * 100.0,
        sw.elapsed.as_secs_f64()
    ))
}

fn ac7_fairness(sw: &PolicySweep) -> Outcome {
    let mut lower_fi = 0;
    let mut close_jfi = 0;
    let mut worst_gap = 0.0f64;
    for (b, m) in sw.bcqq.iter().zip(&sw.mlwdf) {
        check!(b.report.seed == m.report.seed, "seed mismatch");
        let (bf, mf) = (
            b.report.qoe_fi.ok_or("missing qoe_fi")?,
            m.report.qoe_fi.ok_or("missing qoe_fi")?,
        );
        if bf < mf {
            lower_fi += 1;
        }
        let gap = (b.report.jfi.ok_or("missing jfi")? - m.report.jfi.ok_or("missing jfi")?).abs();
        worst_gap = worst_gap.max(gap);
        if gap <= 0.15 {
            close_jfi += 1;
        }
    }
    check!(
        lower_fi >= 8,
        "QoE_FI(BCQQ) < QoE_FI(MLWDF) in only {lower_fi}/10 seeds"
    );
    check!(close_jfi >= 8, "|JFI gap| <= 0.15 in only {close_jfi}/10 seeds");
    let mean = |r: &[RunOutput], f: fn(&RunOutput) -> f64| r.iter().map(f).sum::<f64>() / r.len() as f64;
    Ok(format!(
        "QoE_FI lower in {lower_fi}/10 (mean {:.3} vs {:.3}), JFI gap <= 0.15 in {close_jfi}/10 (worst {worst_gap:.3})",
        mean(&sw.bcqq, |o| o.report.qoe_fi.unwrap()),
        mean(&sw.mlwdf, |o| o.report.qoe_fi.unwrap()),
    ))
}

fn ac8_mlwdf_pf() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..1000 {
        let n = rng.random_range(2..10);
        let alpha = rng.random_range(1e-9..0.5);
        let beta = rng.random_range(0.001..1.0);
        let hol = rng.random_range(0.001..0.3);
        let mut cell: Vec<UeSnapshot> = (0..n).map(|i| random_snapshot(&mut rng, i)).collect();
        for u in cell.iter_mut() {
            u.alpha = alpha;
            u.beta_s = beta;
            u.hol_delay_s = hol;
            if rng.random_bool(0.2) {
                u.buffer_bits = 0;
            }
        }
        let (m, p) = (select(&cell, Policy::Mlwdf), select(&cell, Policy::Pf));
        check!(
            m.selected_ue == p.selected_ue,
            "instance {k}: MLWDF {:?} vs PF {:?}",
            m.selected_ue,
            p.selected_ue
        );
    }
    Ok("1000/1000 instances agree".into())
}

fn ac9_q_scaling() -> Outcome {
    let mut s = table1();
    s.duration_tti = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c: f64 = rng.random_range(1e-3..1e3);
    let mut e = Engine::new(&s, Policy::Bcqq, 9).map_err(|e| e.to_string())?;
    let mut checked = 0;
    while !e.is_done() {
        let out = e.step();
        let mut scaled = out.inputs.clone();
        for u in scaled.iter_mut() {
            u.q *= c;
        }
        let again = select(&scaled, Policy::Bcqq);
        check!(
            again.selected_ue == out.decision.selected_ue,
            "tti {}: {:?} became {:?} with q x {c}",
            out.tti,
            out.decision.selected_ue,
            again.selected_ue
        );
        checked += 1;
    }
    Ok(format!("{checked} slots unchanged with q scaled by {c:.4}"))
}

/// Replays one request against the trace: above threshold at the end of its
/// slot, and not selected in any of the preceding `starvation` slots.
fn replay_event(
    trace: &[TraceRow],
    ue_count: usize,
    ue_index: usize,
    tti: u64,
    starvation: u64,
    cap: u64,
    threshold: f64,
) -> bool {
    let row = &trace[tti as usize * ue_count + ue_index];
    if row.tti != tti || row.buffer_bits as f64 / cap as f64 <= threshold || tti + 1 < starvation {
        return false;
    }
    ((tti + 1 - starvation)..=tti).all(|t| trace[t as usize * ue_count + ue_index].selected != Some(row.ue))
}

fn ac10_adjustment() -> Outcome {
    let mut s = table1();
    for f in s.flows.iter_mut() {
        f.adaptive = true;
    }
    s.adjustment.occupancy_threshold = 0.8;
    s.adjustment.factor = 0.75;
    let off = run(&s, Policy::Bcqq, 1, false).map_err(|e| e.to_string())?;
    s.adjustment.enabled = true;
    let on = run(&s, Policy::Bcqq, 1, true).map_err(|e| e.to_string())?;
    let overflow = |o: &RunOutput| o.report.ues.iter().map(|u| u.dropped_overflow_bits).sum::<u64>();
    let (a, b) = (overflow(&on), overflow(&off));
    check!(!on.adjustments.is_empty(), "no adjustment was emitted");
    check!(a < b, "overflow with adjustment {a} not below {b}");
    let trace = on.trace.as_ref().unwrap();
    let n = s.flows.len();
    let starvation = s.adjustment.starvation_tti;
    for ev in &on.adjustments {
        let idx = s.flows.iter().position(|f| f.ue_id == ev.ue_id).ok_or("unknown ue")?;
        check!(
            replay_event(trace, n, idx, ev.tti, starvation, s.buffersize_bits, 0.8),
            "event {ev:?} fails the trigger rule on replay"
        );
    }
    for f in &s.flows {
        let ttis: Vec<u64> = on
            .adjustments
            .iter()
            .filter(|e| e.ue_id == f.ue_id)
            .map(|e| e.tti)
            .collect();
        check!(
            ttis.windows(2).all(|w| w[1] - w[0] >= starvation),
            "UE {} adjusted twice within {starvation} slots",
            f.ue_id
        );
    }
    Ok(format!(
        "{} requests replayed OK, overflow {:.3e} -> {:.3e} bits",
        on.adjustments.len(),
        b as f64,
        a as f64
    ))
}

fn main() {
    let t0 = Instant::now();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("AC1 Jain's fairness index oracle", ac1_jfi()),
        ("AC2 QoE fairness index oracle", ac2_qoe_fi()),
        ("AC3 BCQQ priority oracle and monotonicity", ac3_bcqq_oracle()),
        ("AC4 bit conservation, 1e5 slots x 4 policies", ac4_conservation()),
        ("AC5 byte-identical outputs", ac5_determinism()),
    ];
    match sweep() {
        Ok(sw) => {
            results.push(("AC6 BCQQ throughput gain over M-LWDF", ac6_throughput(&sw)));
            results.push(("AC7 QoE_FI ordering and JFI closeness", ac7_fairness(&sw)));
        }
        Err(e) => {
            results.push(("AC6 BCQQ throughput gain over M-LWDF", Err(e.clone())));
            results.push(("AC7 QoE_FI ordering and JFI closeness", Err(e)));
        }
    }
    results.push(("AC8 M-LWDF equals PF with shared QoS and HOL", ac8_mlwdf_pf()));
    results.push(("AC9 BCQQ argmax invariant to q scaling", ac9_q_scaling()));
    results.push(("AC10 service adjustment loop", ac10_adjustment()));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        results.len() - failed,
        results.len(),
        t0.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
