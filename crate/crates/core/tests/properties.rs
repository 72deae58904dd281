use proptest::prelude::*;

use sirsched::analysis::{
    ccdf_factors, coverage_area_unscheduled, dcas_outage_bounds, dias_outage_bounds, dicas_outage_bounds, dominant_coverage_measure,
    ic_outage_bounds, outage_bounds_at, transmission_capacity,
};
use sirsched::experiments::{read_results_csv, results_csv, ResultRow};
use sirsched::montecarlo::{estimate_outage, McEstimate, McSettings};
use sirsched::solvers::{solve_active_density, thinning_map};
use sirsched::{NetworkConfig, SchedulerKind, ThresholdPolicy};

fn scheme() -> impl Strategy<Value = SchedulerKind> {
    let policy = |lo: f64, hi: f64| (1e-3f64..10.0, lo..hi).prop_map(|(rho, exponent)| ThresholdPolicy { rho, exponent });
    prop_oneof![
        Just(SchedulerKind::None),
        policy(0.0, 2.5).prop_map(|channel| SchedulerKind::Dcas { channel }),
        policy(-0.5, 1.0).prop_map(|interferer| SchedulerKind::Dias { interferer }),
        (policy(0.0, 2.5), policy(-0.5, 1.0)).prop_map(|(channel, interferer)| SchedulerKind::Dicas { channel, interferer }),
    ]
}

fn density() -> impl Strategy<Value = f64> {
    (-7.0f64..-2.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounds_are_ordered_probabilities(s in scheme(), l in density(), alpha in 2.5f64..6.0, beta in 0.1f64..10.0) {
        let c = NetworkConfig { alpha, beta, ..NetworkConfig::baseline(0.0) };
        let (b, p) = outage_bounds_at(l, &s, &c).unwrap();
        prop_assert!(0.0 <= b.lower && b.lower <= b.upper && b.upper <= 1.0, "{b:?}");
        prop_assert!((0.0..=1.0).contains(&p.p_c) && (0.0..=1.0).contains(&p.p_i));
    }

    #[test]
    fn ccdf_factors_are_monotone(a in 0.0f64..10.0, da in 0.0f64..1.0, alpha in 2.1f64..8.0) {
        let (x, y) = (ccdf_factors(a, alpha), ccdf_factors(a + da, alpha));
        prop_assert!(x.lower <= y.lower && x.upper <= y.upper + 1e-15);
        prop_assert!(x.lower <= x.upper);
    }

    #[test]
    fn dias_upper_is_two_coverage_lower(l in density(), p in 0.0f64..=1.0) {
        let c = NetworkConfig::baseline(0.0);
        let b = dias_outage_bounds(l, &c, p).unwrap();
        prop_assert!((b.upper - (1.0 - (1.0 - b.lower).powi(2))).abs() < 1e-14);
    }

    #[test]
    fn dicas_reduces_to_dcas(l in density(), rho in 1e-3f64..10.0, gamma in 0.0f64..2.5) {
        let c = NetworkConfig::baseline(0.0);
        let p = ThresholdPolicy { rho, exponent: gamma };
        prop_assert_eq!(dicas_outage_bounds(l, &c, &p, 1.0).unwrap(), dcas_outage_bounds(l, &c, &p).unwrap());
    }

    #[test]
    fn dicas_bounds_fall_with_p_i(l in density(), p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
        let c = NetworkConfig::baseline(0.0);
        let ch = ThresholdPolicy { rho: 1.0, exponent: 1.0 };
        let (lo, hi) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
        let (a, b) = (dicas_outage_bounds(l, &c, &ch, lo).unwrap(), dicas_outage_bounds(l, &c, &ch, hi).unwrap());
        prop_assert!(a.lower <= b.lower && a.upper <= b.upper);
    }

    #[test]
    fn fixed_point_is_a_thinning(s in scheme(), lt in density()) {
        let c = NetworkConfig::baseline(lt);
        let r = solve_active_density(&s, &c).unwrap();
        prop_assert!(r.lambda >= 0.0 && r.lambda <= lt * (1.0 + 1e-12));
        prop_assert!((thinning_map(r.lambda, &s, &c).unwrap() - r.lambda).abs() < 1e-10 * lt);
    }

    #[test]
    fn coverage_shrinks_with_threshold(t in 0.0f64..1.0, dt in 1e-6f64..1.0) {
        let c = NetworkConfig::baseline(0.0);
        let a = dominant_coverage_measure(t, &c).unwrap();
        let b = dominant_coverage_measure(t + dt, &c).unwrap();
        prop_assert!(b < a && a <= coverage_area_unscheduled(&c) * (1.0 + 1e-12));
    }

    #[test]
    fn capacity_is_linear(l in density(), eps in 0.001f64..0.999, b in 0.1f64..10.0) {
        prop_assert!((transmission_capacity(l, eps, b) - b * l * (1.0 - eps)).abs() <= 1e-15 * b * l);
    }

    #[test]
    fn binomial_interval_contains_mean(n in 1u64..100_000, k in 0u64..100_000) {
        let k = k % (n + 1);
        let e = McEstimate::from_counts(k, n);
        prop_assert!(0.0 <= e.lower && e.lower <= e.mean && e.mean <= e.upper && e.upper <= 1.0);
        prop_assert!(e.half_width_99 >= 0.0);
    }

    #[test]
    fn csv_keeps_twelve_digits(v in -1e3f64..1e3, q in 0.0f64..1.0, n in 100u64..1_000_000) {
        let mut r = ResultRow::new(0, v, "s");
        r.outage_lower = Some(q);
        r.mc_outage = Some(q / 2.0);
        r.mc_trials = n;
        r.status = "ok".into();
        let back = read_results_csv(&results_csv(&[r.clone()]).unwrap()).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-11 * a.abs().max(1e-300);
        prop_assert!(rel(back[0].sweep_value, v));
        prop_assert!(rel(back[0].outage_lower.unwrap(), q));
        prop_assert_eq!(back[0].mc_trials, n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cancellation_never_raises_bounds(s in scheme(), l in density()) {
        let c = NetworkConfig::baseline(0.0);
        let (b, p) = outage_bounds_at(l, &s, &c).unwrap();
        prop_assume!(p.product() > 0.0);
        let ic = ic_outage_bounds(l, &s, &c).unwrap();
        prop_assert!(ic.lower <= b.lower && ic.upper <= b.upper, "{ic:?} {b:?}");
    }

    #[test]
    fn outage_estimate_ignores_thread_count(seed in 0u64..1000, lt in 1e-5f64..1e-3) {
        let c = NetworkConfig::baseline(lt);
        let s = SchedulerKind::Dcas { channel: ThresholdPolicy { rho: 1.0, exponent: 1.0 } };
        let st = McSettings::new(200, 240.0, seed);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| estimate_outage(&c, &s, &st)).unwrap();
        let b = three.install(|| estimate_outage(&c, &s, &st)).unwrap();
        prop_assert_eq!(a, b);
    }
}
