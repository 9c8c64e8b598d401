use macsim_core::scheduler::{bcqq_priority, select, Policy, UeSnapshot};
use proptest::prelude::*;

fn snapshot() -> impl Strategy<Value = UeSnapshot> {
    (
        1u64..40_000_000,
        1e-9f64..0.5,
        0.001f64..1.0,
        1.0f64..100.0,
        1e6f64..6e9,
        0.0f64..0.3,
        1.0f64..6e9,
        proptest::option::of(0u64..1000),
    )
        .prop_map(|(buf, alpha, beta, q, rate, hol, avg, last)| UeSnapshot {
            ue_id: 0,
            buffer_bits: buf,
            buffersize_bits: 40_000_000,
            alpha,
            beta_s: beta,
            q,
            rate_bps: rate,
            hol_delay_s: hol,
            avg_rate_bps: avg,
            last_served_tti: last,
        })
}

fn cell() -> impl Strategy<Value = Vec<UeSnapshot>> {
    proptest::collection::vec(snapshot(), 1..8).prop_map(|mut v| {
        for (i, u) in v.iter_mut().enumerate() {
            u.ue_id = i as u32;
        }
        v
    })
}

proptest! {
    #[test]
    fn bcqq_strictly_increasing_in_each_input(u in snapshot(), k in 1.0001f64..3.0) {
        let base = bcqq_priority(&u);
        let mut v = u.clone();
        v.q *= k;
        prop_assert!(bcqq_priority(&v) > base);
        let mut v = u.clone();
        v.rate_bps *= k;
        prop_assert!(bcqq_priority(&v) > base);
        let mut v = u.clone();
        v.buffer_bits = ((u.buffer_bits as f64 * k).ceil() as u64).min(40_000_000);
        if v.buffer_bits > u.buffer_bits {
            prop_assert!(bcqq_priority(&v) > base);
        }
    }

    #[test]
    fn bcqq_rises_as_targets_tighten(u in snapshot(), k in 0.1f64..0.999) {
        let base = bcqq_priority(&u);
        let mut v = u.clone();
        v.beta_s *= k;
        prop_assert!(bcqq_priority(&v) > base);
        let mut v = u.clone();
        v.alpha *= k;
        prop_assert!(bcqq_priority(&v) > base);
    }

    #[test]
    fn selection_never_picks_empty_buffer(mut cell in cell(), empties in proptest::collection::vec(any::<bool>(), 8)) {
        for (u, e) in cell.iter_mut().zip(empties) {
            if e {
                u.buffer_bits = 0;
            }
        }
        for p in Policy::ALL {
            let d = select(&cell, p);
            match d.selected_ue {
                None => prop_assert!(cell.iter().all(|u| u.buffer_bits == 0)),
                Some(id) => prop_assert!(cell[id as usize].buffer_bits > 0),
            }
        }
    }

    #[test]
    fn bcqq_argmax_ignores_common_q_scale(cell in cell(), c in 1e-3f64..1e3) {
        let mut scaled = cell.clone();
        for u in scaled.iter_mut() {
            u.q *= c;
        }
        prop_assert_eq!(select(&cell, Policy::Bcqq).selected_ue, select(&scaled, Policy::Bcqq).selected_ue);
    }

    #[test]
    fn mlwdf_matches_pf_with_shared_qos_and_hol(mut cell in cell(), alpha in 1e-9f64..0.5, beta in 0.001f64..1.0, hol in 0.001f64..0.3) {
        for u in cell.iter_mut() {
            u.alpha = alpha;
            u.beta_s = beta;
            u.hol_delay_s = hol;
        }
        prop_assert_eq!(select(&cell, Policy::Mlwdf).selected_ue, select(&cell, Policy::Pf).selected_ue);
    }

    #[test]
    fn log_base_is_irrelevant_to_the_argmax(cell in cell()) {
        // log10 weights differ from ln weights by the common factor 1/ln(10)
        let scale = 1.0 / std::f64::consts::LN_10;
        let mut scaled = cell.clone();
        for u in scaled.iter_mut() {
            u.q *= scale;
        }
        prop_assert_eq!(select(&cell, Policy::Bcqq).selected_ue, select(&scaled, Policy::Bcqq).selected_ue);
    }
}
