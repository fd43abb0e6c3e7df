//! Large-sample behaviour of the approximate weights against the exact ones
//! (through the cancellation-free integral route, which is valid at any n).

use ggpop::weights::{gg_weights_approx, gg_weights_quadrature, GGParams};

#[test]
fn approximation_error_vanishes_along_the_bulk() {
    // k = floor(n^alpha): n|g1_exact - g1_raw| -> 0 and n|g0_exact - g0_raw|
    // stays bounded, both monotonically over the probe points
    let params = GGParams::new(0.5, 1.0).unwrap();
    let mut g0_scaled = Vec::new();
    let mut g1_scaled = Vec::new();
    for &n in &[100usize, 1_000, 10_000] {
        let k = (n as f64).powf(params.alpha()).floor() as usize;
        let exact = gg_weights_quadrature(n, k, &params).unwrap();
        let approx = gg_weights_approx(n, k, &params);
        g0_scaled.push(n as f64 * (exact.g0 - approx.raw.g0).abs());
        g1_scaled.push(n as f64 * (exact.g1 - approx.raw.g1).abs());
    }
    assert!(
        g1_scaled[0] > g1_scaled[1] && g1_scaled[1] > g1_scaled[2],
        "n |g1 error| should decrease: {g1_scaled:?}"
    );
    assert!(
        g0_scaled[2] <= g0_scaled[0] * 1.05,
        "n |g0 error| should stay bounded: {g0_scaled:?}"
    );
}

#[test]
fn quadrature_route_satisfies_normalisation_at_large_n() {
    for &(alpha, beta) in &[(0.5, 1.0), (0.75, 2.0)] {
        let params = GGParams::new(alpha, beta).unwrap();
        for &(n, k) in &[(500usize, 20usize), (5_000, 60), (10_000, 100)] {
            let w = gg_weights_quadrature(n, k, &params).unwrap();
            let defect = w.g0 + (n as f64 - alpha * k as f64) * w.g1 - 1.0;
            assert!(
                defect.abs() < 1e-9,
                "defect {defect:.2e} at (n={n}, k={k}, alpha={alpha})"
            );
        }
    }
}
