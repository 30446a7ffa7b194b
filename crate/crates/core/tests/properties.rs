use proptest::prelude::*;

use qtrack::harness::wilson_ci;
use qtrack::info::{capacity, moments, mutual_info, CapacityOptions};
use qtrack::limits::excess_prob_approx_log;
use qtrack::limits::LogCoefficient;
use qtrack::scheme::max_unwrapped_error;
use qtrack::{gaussian_icdf, locate_scalar, norm_cdf, ChannelSpec, ChannelStats, HypothesisGrid, TargetState};

fn channel() -> impl Strategy<Value = ChannelSpec> {
    (0.01f64..1.0, 0.0f64..3.0, 0.0f64..2.0)
        .prop_filter_map("crossover must stay <= 1", |(z, a, b)| {
            ChannelSpec::from_params(z, a, b).ok()
        })
}

proptest! {
    #[test]
    fn location_stays_on_torus(s in 0.0f64..=1.0, v in -2.0f64..2.0, t in 0.0f64..50.0) {
        let l = locate_scalar(s, v, t);
        prop_assert!(l > 0.0 && l <= 1.0);
        // one full reflection period later the location repeats
        if v != 0.0 {
            let period = 2.0 / v.abs();
            prop_assert!((locate_scalar(s, v, t + period) - l).abs() < 1e-9 || !(1e-9..=1.0 - 1e-9).contains(&l));
        }
    }

    #[test]
    fn transition_rows_are_stochastic(ch in channel(), measure in 0.0f64..=1.0) {
        let w = ch.transition_for_measure(measure).unwrap();
        prop_assert!(w.stochasticity_defect() <= 1e-12);
        for row in w.rows() {
            prop_assert!(row.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn information_moments_are_sane(ch in channel(), p in 0.001f64..0.999) {
        let m = moments(&ch, p).unwrap();
        prop_assert!(m.variance >= -1e-15);
        prop_assert!(m.third_abs >= 0.0);
        prop_assert!(m.mean <= std::f64::consts::LN_2 + 1e-12);
    }

    #[test]
    fn capacity_dominates_every_input(ch in channel(), p in 0.0f64..=1.0) {
        let (c, pca) = capacity(&ch, CapacityOptions { grid_step: 1e-3, refine_tol: 1e-9 }).unwrap();
        prop_assert!(!pca.is_empty());
        prop_assert!(mutual_info(&ch, p).unwrap() <= c + 1e-9);
        prop_assert!(c <= std::f64::consts::LN_2 + 1e-12);
    }

    #[test]
    fn every_state_has_a_close_hypothesis(
        delta in 0.01f64..0.45,
        n in 1usize..300,
        v_frac in 0.0f64..1.0,
        s in 0.0f64..=1.0,
        v_unit in -1.0f64..=1.0,
    ) {
        let v_max = v_frac / n as f64;
        let grid = HypothesisGrid::plan(delta, n, 1, v_max, u64::MAX).unwrap();
        prop_assert!(grid.guaranteed_error() <= delta * (1.0 + 1e-9));
        let truth = TargetState::new(vec![s], vec![v_unit * v_max], v_max).unwrap();
        let k = ((s * grid.m_s() as f64).ceil() as usize).clamp(1, grid.m_s()) - 1;
        let m = if grid.delta_v() == 0.0 {
            0
        } else {
            (((v_unit * v_max + v_max) / grid.delta_v()).floor() as usize).min(grid.m_v() - 1)
        };
        let rep = grid.representative(grid.compose(&[(k, m)]));
        prop_assert!(max_unwrapped_error(&rep, &truth, n) <= delta * (1.0 + 1e-9));
    }

    #[test]
    fn approximation_is_monotone_in_resolution(
        n in 10usize..5000,
        d in 1usize..4,
        a in -200.0f64..-1e-3,
        b in -200.0f64..-1e-3,
    ) {
        let stats = ChannelStats::from_parts(0.15, vec![0.23], vec![0.26], vec![0.24]);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let e_lo = excess_prob_approx_log(n, d, lo, &stats, LogCoefficient::TwoD).unwrap();
        let e_hi = excess_prob_approx_log(n, d, hi, &stats, LogCoefficient::TwoD).unwrap();
        // finer resolution, larger excess probability
        prop_assert!(e_lo >= e_hi);
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(trials in 1u64..100_000, frac in 0.0f64..=1.0, level in 0.5f64..0.999) {
        let k = (frac * trials as f64).round() as u64;
        let (lo, hi) = wilson_ci(k, trials, level).unwrap();
        let p = k as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn inverse_normal_round_trip(x in -8.0f64..8.0) {
        let p = norm_cdf(x);
        // above this 1 - p is not resolved in f64
        prop_assume!(p > 1e-300 && p < 1.0 - 1e-8);
        let back = gaussian_icdf(p).unwrap();
        prop_assert!((back - x).abs() <= 1e-8 * (1.0 + x.abs()));
    }
}
