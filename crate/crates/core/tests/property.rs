//! Property tests for the algebraic invariants: log-sign arithmetic,
//! transition-probability validity, partition bookkeeping, distance axioms,
//! and the rescaling map.

use proptest::prelude::*;

use ggpop::convergence::{empirical_distance, Metric};
use ggpop::moran::{kchain_transition_probs, rescale_path, KChainMode};
use ggpop::partition::{urn_sample_with, WeightSource};
use ggpop::rng::stream;
use ggpop::special::{signed_sum, SignedLog};
use ggpop::weights::{py_weights, GGParams, PYParams};

proptest! {
    #[test]
    fn signed_log_add_then_sub_recovers(
        la in -300.0..300.0f64,
        lb in -300.0..300.0f64,
        sa in prop::bool::ANY,
        sb in prop::bool::ANY,
    ) {
        let a = SignedLog::new(if sa { 1 } else { -1 }, la);
        let b = SignedLog::new(if sb { 1 } else { -1 }, lb);
        let sum = signed_sum([a, b]);
        let back = signed_sum([sum.value, b.neg()]);
        // a cancellation by delta amplifies the stored-log rounding
        // (one ulp of |ln|) by 1/delta; that is the attainable accuracy
        let delta = sum.cancellation.min(back.cancellation);
        let ulp = 2.3e-16 * (1.0 + la.abs().max(lb.abs()));
        if !sum.flagged() && !back.flagged() {
            let budget = (8.0 * ulp / delta).max(1e-12);
            prop_assert!(
                back.value.rel_diff(a) < budget,
                "rel {} vs budget {budget} at delta {delta}",
                back.value.rel_diff(a)
            );
        }
        // mild cancellation at moderate magnitudes: full double precision
        if delta > 0.05 && la.abs().max(lb.abs()) < 50.0 {
            prop_assert!(back.value.rel_diff(a) < 1e-12);
        }
    }

    #[test]
    fn signed_log_products_commute_with_f64(
        x in -1e6..1e6f64,
        y in -1e6..1e6f64,
    ) {
        prop_assume!(x != 0.0 && y != 0.0);
        let prod = SignedLog::from_f64(x).mul(SignedLog::from_f64(y)).to_f64();
        prop_assert!((prod - x * y).abs() <= 1e-12 * (x * y).abs());
    }

    #[test]
    fn approx_transition_probs_form_probability_vector(
        n in 2usize..400,
        k_frac in 0.0..1.0f64,
        alpha in 0.05..0.95f64,
        beta in 0.01..10.0f64,
    ) {
        let k = ((k_frac * n as f64).floor() as usize).clamp(1, n);
        let params = GGParams::new(alpha, beta).unwrap();
        let (u, d, s) = kchain_transition_probs(n, k, &params, KChainMode::Approx).unwrap();
        prop_assert!(u >= 0.0 && d >= 0.0 && s >= 0.0);
        prop_assert!((u + d + s - 1.0).abs() < 1e-12);
        if k == 1 {
            prop_assert_eq!(d, 0.0);
        }
        if k == n {
            prop_assert_eq!(u, 0.0);
        }
    }

    #[test]
    fn pitman_yor_normalisation_is_algebraic(
        n in 1usize..100,
        k_frac in 0.0..1.0f64,
        alpha in 0.0..0.99f64,
        theta_shift in 0.001..20.0f64,
    ) {
        let k = ((k_frac * n as f64).floor() as usize).clamp(1, n);
        let theta = -alpha + theta_shift;
        let p = PYParams::new(alpha, theta).unwrap();
        let w = py_weights(n, k, &p).unwrap();
        let defect = w.g0 + (n as f64 - alpha * k as f64) * w.g1 - 1.0;
        prop_assert!(defect.abs() < 1e-12);
    }

    #[test]
    fn urn_partition_bookkeeping(
        seed in 0u64..5_000,
        n in 1usize..60,
        alpha in 0.1..0.9f64,
        beta in 0.1..5.0f64,
    ) {
        let params = GGParams::new(alpha, beta).unwrap();
        let mut rng = stream(seed, &[1]);
        let p = urn_sample_with(n, alpha, &WeightSource::Approx(params), &mut rng);
        prop_assert_eq!(p.n(), n);
        prop_assert_eq!(p.block_sizes().len(), p.k());
        prop_assert_eq!(p.block_sizes().iter().map(|&s| s as usize).sum::<usize>(), n);
        prop_assert_eq!(p.block_sizes().iter().filter(|&&s| s == 1).count(), p.m1());
        prop_assert!(p.k() >= 1 && p.k() <= n);
    }

    #[test]
    fn distance_metric_axioms(
        a in prop::collection::vec(-50.0..50.0f64, 1..60),
        b in prop::collection::vec(-50.0..50.0f64, 1..60),
    ) {
        for metric in [Metric::Ks, Metric::W1] {
            let dab = empirical_distance(&a, &b, metric).unwrap();
            let dba = empirical_distance(&b, &a, metric).unwrap();
            prop_assert!(dab >= 0.0);
            prop_assert!((dab - dba).abs() < 1e-12);
            prop_assert_eq!(empirical_distance(&a, &a, metric).unwrap(), 0.0);
        }
    }

    #[test]
    fn rescale_indices_match_floor_arithmetic(
        n in 2usize..200,
        alpha in 0.1..0.9f64,
        t in 0.0..0.9f64,
    ) {
        let needed = ((n as f64).powf(1.0 + alpha) * t).floor() as usize;
        let raw: Vec<u32> = (0..=needed as u32 + 1).map(|i| i % 11 + 1).collect();
        let r = rescale_path(&raw, n, alpha, &[t]).unwrap();
        prop_assert_eq!(r.values[0], raw[needed] as f64 / (n as f64).powf(alpha));
    }
}
