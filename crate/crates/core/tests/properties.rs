mod common;

use proptest::prelude::*;

use common::{max_abs_diff, rel_err};
use surveycal::calibrate::{
    greg_weights, lr_weights, q_substitution, CalibrationSpec, ConstraintMode,
};
use surveycal::design::{
    binomial, enumerate_srswor, enumeration_count, ht_total, make_srswor_sample, Combinations,
    DesignSample, FinitePopulation, SrsworDesign,
};
use surveycal::experiment::{ExperimentReport, RelativeEfficiency, Scenario};
use surveycal::io::{parse_report, write_report};
use surveycal::par::Execution;
use surveycal::stratified::{
    combined_lr_mean, combined_lr_variance, combined_slope, StratifiedSample, Stratum,
};
use surveycal::variance::{syg_true_variance, syg_variance_estimate, PairValues, ResidualSet};

/// Population of `big_n` units with distinct positive x, plus a sample of `n` of them.
fn instance() -> impl Strategy<Value = (FinitePopulation, SrsworDesign, DesignSample)> {
    (4usize..30)
        .prop_flat_map(|big_n| (Just(big_n), 3usize..=big_n.min(10)))
        .prop_flat_map(|(big_n, n)| {
            (
                prop::collection::vec(1.0f64..100.0, big_n),
                prop::collection::vec(-50.0f64..150.0, big_n),
                prop::sample::subsequence((0..big_n).collect::<Vec<_>>(), n),
            )
        })
        .prop_filter("x spread", |(x, _, idx)| {
            let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|v| (v - m).powi(2)).sum::<f64>() > 1.0
        })
        .prop_map(|(x, y, idx)| {
            let pop = FinitePopulation::new(y, x).unwrap();
            let design = SrsworDesign::new(pop.len(), idx.len()).unwrap();
            let sample = make_srswor_sample(&pop, &design, &idx).unwrap();
            (pop, design, sample)
        })
}

fn q_for(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.25f64..4.0, n)
}

fn scaled_max(w: &[f64]) -> f64 {
    w.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(128) })]

    #[test]
    fn calibration_constraints_hold((pop, _d, s) in instance(), seed in 0u64..1000) {
        let q: Vec<f64> = (0..s.len()).map(|i| 0.5 + ((seed + i as u64) % 7) as f64 / 4.0).collect();
        let big_x = pop.total_x();
        let g = greg_weights(&s, &CalibrationSpec::aux_only(q.clone(), big_x).unwrap()).unwrap();
        prop_assert!(rel_err(g.weighted_total(s.x()), big_x) < 1e-10);
        let l = lr_weights(&s, &CalibrationSpec::aux_and_weight_sum(q, big_x).unwrap()).unwrap();
        prop_assert!(rel_err(l.weighted_total(s.x()), big_x) < 1e-10);
        prop_assert!(rel_err(l.w.iter().sum(), s.d().iter().sum()) < 1e-10);
    }

    #[test]
    fn q_scale_invariance((pop, _d, s) in instance(), c in 0.01f64..100.0) {
        let big_x = pop.total_x();
        for mode in [ConstraintMode::AuxOnly, ConstraintMode::AuxAndWeightSum] {
            let base = CalibrationSpec::uniform(s.len(), big_x, mode);
            let scaled = CalibrationSpec::new(vec![c; s.len()], big_x, mode).unwrap();
            let (a, b) = match mode {
                ConstraintMode::AuxOnly => (greg_weights(&s, &base).unwrap(), greg_weights(&s, &scaled).unwrap()),
                ConstraintMode::AuxAndWeightSum => (lr_weights(&s, &base).unwrap(), lr_weights(&s, &scaled).unwrap()),
            };
            // Rounding scale: the magnitude of the two terms summed into each weight.
            let scale = a.w.iter().zip(s.d()).map(|(w, d)| d.abs() + (w - d).abs()).fold(0.0, f64::max);
            let err = max_abs_diff(&a.w, &b.w) / scale;
            // Sums of n terms round at about n ulps.
            prop_assert!(err < 1e-14 * s.len() as f64, "err {err:e}");
        }
    }

    #[test]
    fn bridge_identity((pop, _d, s) in instance(), q_star in q_for(10)) {
        let q_star = q_star[..s.len()].to_vec();
        let q = q_substitution(&s, &q_star).unwrap();
        let big_x = pop.total_x();
        let g = greg_weights(&s, &CalibrationSpec::signed(q, big_x, ConstraintMode::AuxOnly).unwrap()).unwrap();
        let l = lr_weights(&s, &CalibrationSpec::aux_and_weight_sum(q_star, big_x).unwrap()).unwrap();
        prop_assert!(max_abs_diff(&g.w, &l.w) / scaled_max(&l.w) < 1e-10);
    }

    #[test]
    fn intercept_residuals_are_orthogonal((_p, _d, s) in instance(), q_star in q_for(10)) {
        let q_star = &q_star[..s.len()];
        let e = ResidualSet::with_intercept(&s, q_star).unwrap();
        let dq: Vec<f64> = s.d().iter().zip(q_star).map(|(a, b)| a * b).collect();
        let scale: f64 = dq.iter().zip(s.y()).map(|(a, y)| (a * y).abs()).sum::<f64>()
            * s.x().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let s0: f64 = dq.iter().zip(&e.e).map(|(a, e)| a * e).sum();
        let s1: f64 = dq.iter().zip(&e.e).zip(s.x()).map(|((a, e), x)| a * e * x).sum();
        prop_assert!(s0.abs() < 1e-10 * scale && s1.abs() < 1e-10 * scale);
    }

    #[test]
    fn ordered_pair_sum_is_twice_unordered(v in prop::collection::vec(-10.0f64..10.0, 2..12)) {
        let n = v.len();
        let f = |a: usize, b: usize| (v[a] - v[b]).powi(2) * (1.0 + v[a] * v[b]).abs();
        let mut ordered = 0.0;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    ordered += f(a, b);
                }
            }
        }
        let unordered = PairValues::pair_sum(n, f);
        prop_assert!((0.5 * ordered - unordered).abs() <= 1e-12 * unordered.abs().max(1.0));
    }

    #[test]
    fn pascal_rule_and_counts(n in 1u64..60, k in 1u64..30) {
        prop_assume!(k <= n);
        let lhs = binomial(n, k).unwrap();
        let rhs = binomial(n - 1, k - 1).unwrap() + binomial(n - 1, k).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn unranking_matches_iteration(big_n in 2usize..12, k in 2usize..6, rank_frac in 0.0f64..1.0) {
        prop_assume!(k <= big_n);
        let total = enumeration_count(big_n, k, u64::MAX).unwrap();
        prop_assert_eq!(total as u128, binomial(big_n as u64, k as u64).unwrap());
        let rank = ((total - 1) as f64 * rank_frac) as u64;
        let mut it = Combinations::new(big_n, k);
        for _ in 0..rank {
            it.advance();
        }
        let jumped = Combinations::from_rank(big_n, k, rank);
        prop_assert_eq!(it.current(), jumped.current());
    }

    #[test]
    fn parallel_map_matches_sequential(len in 0usize..5000, threads in 2usize..6) {
        let f = |i: usize| ((i as f64).sqrt() * 1e3).sin();
        let seq = Execution::Sequential.map_indices(len, f);
        let par = Execution::with_threads(threads).map_indices(len, f);
        prop_assert_eq!(seq, par);
    }

    #[test]
    fn report_round_trip(
        mse in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3),
        n in 2usize..500,
        skipped in 0u64..100,
    ) {
        let reports = vec![ExperimentReport {
            scenario: Scenario::MonteCarlo { rho: 0.3 },
            n,
            mse_lr: mse[0],
            mse_ds: mse[1],
            re: RelativeEfficiency::Finite(mse[2]),
            sample_count: 15_000,
            skipped,
            rho_xy: Some(mse[2]),
        }];
        for delim in [',', ';', '\t'] {
            let text = write_report(&reports, delim);
            prop_assert_eq!(&parse_report(&text, delim as u8).unwrap(), &reports);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn unbiasedness_by_exhaustion(
        y in prop::collection::vec(-50.0f64..50.0, 5..9),
        x in prop::collection::vec(1.0f64..20.0, 9),
        n in 2usize..5,
    ) {
        let big_n = y.len();
        prop_assume!(n < big_n);
        let pop = FinitePopulation::new(y, x[..big_n].to_vec()).unwrap();
        let design = SrsworDesign::new(big_n, n).unwrap();
        let (mut sum_ht, mut sum_v, mut count) = (0.0, 0.0, 0.0);
        enumerate_srswor(&pop, n, |idx| {
            let s = make_srswor_sample(&pop, &design, idx).unwrap();
            sum_ht += ht_total(&s);
            sum_v += syg_variance_estimate(&s, s.y()).unwrap();
            count += 1.0;
        })
        .unwrap();
        let scale = pop.y().iter().map(|v| v.abs()).sum::<f64>();
        prop_assert!((sum_ht / count - pop.total_y()).abs() < 1e-12 * scale * big_n as f64);
        let v = syg_true_variance(&pop, &design, pop.y()).unwrap();
        prop_assert!((sum_v / count - v).abs() < 1e-10 * v.max(1.0));
    }

    #[test]
    fn stratum_order_is_irrelevant(
        sizes in prop::collection::vec(10usize..40, 2..6),
        seed in 0u64..1000,
        rotate in 1usize..5,
    ) {
        let strata: Vec<Stratum> = sizes
            .iter()
            .enumerate()
            .map(|(h, &size)| {
                let n = 3 + (seed as usize + h) % 4;
                let x: Vec<f64> = (0..n).map(|i| 5.0 + h as f64 * 3.0 + ((seed as usize * 7 + i * 13 + h) % 17) as f64).collect();
                let y = x.iter().enumerate().map(|(i, v)| 2.0 + 1.5 * v + ((i * 5 + h) % 3) as f64).collect();
                Stratum { label: format!("h{h}"), population_size: size, y, x }
            })
            .collect();
        let mut moved = strata.clone();
        moved.rotate_left(rotate % strata.len());
        let a = StratifiedSample::new(strata).unwrap();
        let b = StratifiedSample::new(moved).unwrap();
        let xbar = a.mean_x() + 1.0;
        let qa = vec![1.0; a.len()];
        let ca = combined_lr_mean(&a, &qa, xbar).unwrap();
        let cb = combined_lr_mean(&b, &qa, xbar).unwrap();
        prop_assert!(rel_err(cb.mean, ca.mean) < 1e-12);
        let va = combined_lr_variance(&a, &ca, combined_slope(&a).unwrap()).unwrap();
        let vb = combined_lr_variance(&b, &cb, combined_slope(&b).unwrap()).unwrap();
        prop_assert!(rel_err(vb, va) < 1e-10);
    }
}
