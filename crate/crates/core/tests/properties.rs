use erasure_robust::erasure::{
    brute_force_extremes, erased_budget, erased_ratio, extreme_erasures, extreme_ratios, sort_sample,
};
use erasure_robust::lambert::{lambert_w0, lambert_wm1};
use erasure_robust::montecarlo::{clopper_pearson, estimate_membership};
use erasure_robust::{DistortionBand, ErasureSpec, Normalization, TrialPlan};
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = Normalization> {
    prop_oneof![Just(Normalization::PerSurvivor), Just(Normalization::Uniform)]
}

fn sample(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..=max_len)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #[test]
    fn sorting_matches_enumeration(y in sample(10), frac in 0.0f64..1.0, mode in mode()) {
        let m = y.len();
        let k = ((frac * m as f64) as usize).min(m - 1);
        let spec = ErasureSpec::with_budget(k, m, mode).unwrap();
        let fast = extreme_ratios(&sort_sample(&y).unwrap(), &spec).unwrap();
        let slow = brute_force_extremes(&y, &spec).unwrap();
        prop_assert!(close(fast.min_ratio, slow.min_ratio));
        prop_assert!(close(fast.max_ratio, slow.max_ratio));
    }

    #[test]
    fn extremes_bracket_the_full_ratio(y in sample(40), frac in 0.0f64..1.0, mode in mode()) {
        let m = y.len();
        let k = ((frac * m as f64) as usize).min(m - 1);
        let spec = ErasureSpec::with_budget(k, m, mode).unwrap();
        let ex = extreme_ratios(&sort_sample(&y).unwrap(), &spec).unwrap();
        let full = y.iter().map(|v| v * v).sum::<f64>() / m as f64;
        let slack = 1e-12 * full.max(1e-300);
        prop_assert!(ex.min_ratio <= full + slack);
        prop_assert!(full <= ex.max_ratio + slack);
    }

    #[test]
    fn larger_budgets_widen_the_range(y in sample(40), mode in mode()) {
        let m = y.len();
        let s = sort_sample(&y).unwrap();
        let mut prev = extreme_ratios(&s, &ErasureSpec::with_budget(0, m, mode).unwrap()).unwrap();
        for k in 1..m {
            let cur = extreme_ratios(&s, &ErasureSpec::with_budget(k, m, mode).unwrap()).unwrap();
            let slack = 1e-12 * prev.max_ratio.max(1e-300);
            prop_assert!(cur.min_ratio <= prev.min_ratio + slack);
            prop_assert!(cur.max_ratio >= prev.max_ratio - slack);
            prev = cur;
        }
    }

    #[test]
    fn witnesses_attain_the_extremes(y in sample(30), frac in 0.0f64..1.0, mode in mode()) {
        let m = y.len();
        let k = ((frac * m as f64) as usize).min(m - 1);
        let spec = ErasureSpec::with_budget(k, m, mode).unwrap();
        let ex = extreme_ratios(&sort_sample(&y).unwrap(), &spec).unwrap();
        let (lo, hi) = extreme_erasures(&y, &spec).unwrap();
        prop_assert!(lo.erased.len() <= k && hi.erased.len() <= k);
        prop_assert!(close(erased_ratio(&y, &lo.erased, mode).unwrap(), ex.min_ratio));
        prop_assert!(close(erased_ratio(&y, &hi.erased, mode).unwrap(), ex.max_ratio));
    }

    #[test]
    fn extremes_scale_quadratically(y in sample(20), c in 0.125f64..8.0, mode in mode()) {
        let m = y.len();
        let spec = ErasureSpec::with_budget(m / 2, m, mode).unwrap();
        let a = extreme_ratios(&sort_sample(&y).unwrap(), &spec).unwrap();
        let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
        let b = extreme_ratios(&sort_sample(&scaled).unwrap(), &spec).unwrap();
        prop_assert!((b.min_ratio - c * c * a.min_ratio).abs() <= 1e-10 * b.max_ratio.max(1e-300));
        prop_assert!((b.max_ratio - c * c * a.max_ratio).abs() <= 1e-10 * b.max_ratio.max(1e-300));
    }

    #[test]
    fn budget_is_the_floor(beta in 0.0f64..1.0, m in 1usize..100_000) {
        let k = erased_budget(beta, m).unwrap();
        prop_assert!(k < m);
        prop_assert!(k as f64 <= beta * m as f64);
        prop_assert!((k + 1) as f64 > beta * m as f64 || k == m - 1);
    }

    #[test]
    fn lambert_branches_invert(x in -0.3678794411714423f64..50.0) {
        let w = lambert_w0(x).unwrap();
        prop_assert!(w >= -1.0);
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1.0));
        if x < 0.0 {
            let v = lambert_wm1(x).unwrap();
            prop_assert!(v <= -1.0);
            prop_assert!((v * v.exp() - x).abs() <= 1e-12 * x.abs().max(1e-2));
        }
    }

    #[test]
    fn interval_contains_point(trials in 1u64..5000, frac in 0.0f64..=1.0) {
        let s = (frac * trials as f64).round() as u64;
        let (lo, hi) = clopper_pearson(s, trials, 0.05);
        let p = s as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn estimates_ignore_worker_count(seed in any::<u64>(), workers in 2usize..6) {
        let band = DistortionBand::symmetric(0.3).unwrap();
        let one = TrialPlan::new(40, 1500, seed, 1).unwrap();
        let many = TrialPlan::new(40, 1500, seed, workers).unwrap();
        let a = estimate_membership(band, 0.1, Normalization::PerSurvivor, &one).unwrap();
        let b = estimate_membership(band, 0.1, Normalization::PerSurvivor, &many).unwrap();
        prop_assert_eq!(a, b);
    }
}
