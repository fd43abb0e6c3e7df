//! Built-in property battery: quick, deterministic reruns of the library's
//! central identities and contracts, one PASS/FAIL line each.

use ggpop::diffusion::{
    boundary_divergence_report, simulate_flow, verify_invariant_normalisation, BoundaryClass,
    BoundaryQuantity, DiffusionSpec,
};
use ggpop::moran::KChainSampler;
use ggpop::partition::{k_pmf_row, stable_density};
use ggpop::weights::{GGParams, GgWeightCalculator, PYParams};

struct Battery {
    failures: Vec<String>,
}

impl Battery {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        if pass {
            println!("PASS  {name}");
        } else {
            println!("FAIL  {name}: {detail}");
            self.failures.push(name.to_string());
        }
    }
}

pub fn run(quick: bool) -> Result<(), String> {
    let mut b = Battery { failures: Vec::new() };
    let n_max = if quick { 20 } else { 40 };

    // predictive-weight normalisation identity
    let mut worst: f64 = 0.0;
    for &(alpha, beta) in &[(0.25, 0.5), (0.5, 1.0), (0.75, 5.0)] {
        let params = GGParams::new(alpha, beta).unwrap();
        let mut calc = GgWeightCalculator::new(params);
        for n in 1..=n_max {
            for k in 1..=n {
                match calc.exact(n, k) {
                    Ok(w) => {
                        let defect = (w.g0 + (n as f64 - alpha * k as f64) * w.g1 - 1.0).abs();
                        worst = worst.max(defect);
                    }
                    Err(e) => return Err(format!("weight evaluation failed at ({n},{k}): {e}")),
                }
            }
        }
    }
    b.check(
        "weight normalisation identity (grid)",
        worst < 1e-10,
        format!("worst defect {worst:.3e}"),
    );

    // Pitman-Yor identity is algebraic
    let py = PYParams::new(0.5, 1.0).unwrap();
    let w = ggpop::weights::py_weights(3, 2, &py).unwrap();
    b.check(
        "Pitman-Yor point value",
        (w.g0 - 0.5).abs() < 1e-15 && (w.g1 - 0.25).abs() < 1e-15,
        format!("got ({}, {})", w.g0, w.g1),
    );

    // count-distribution mass
    let params = GGParams::new(0.5, 1.0).unwrap();
    let mut worst_mass: f64 = 0.0;
    for n in [5usize, 15, n_max] {
        let row = k_pmf_row(n, &params).unwrap();
        worst_mass = worst_mass.max((row.iter().sum::<f64>() - 1.0).abs());
    }
    b.check(
        "count pmf sums to one",
        worst_mass < 1e-8,
        format!("worst |mass - 1| = {worst_mass:.3e}"),
    );

    // stable density against the closed form at alpha = 1/2
    let levy = |t: f64| t.powf(-1.5) * (-0.25 / t).exp() / (2.0 * std::f64::consts::PI.sqrt());
    let mut worst_rel: f64 = 0.0;
    for &t in &[0.1, 0.5, 1.0, 5.0] {
        let got = stable_density(0.5, t).map_err(|e| e.to_string())?;
        worst_rel = worst_rel.max(((got - levy(t)) / levy(t)).abs());
    }
    b.check(
        "stable density closed form",
        worst_rel < 1e-8,
        format!("worst rel err {worst_rel:.3e}"),
    );

    // zero-noise integrator against the deterministic flow
    let spec = DiffusionSpec::new(params, 0.0, 1e-3, 1.0, 1.0).unwrap();
    let flow = simulate_flow(&spec).map_err(|e| e.to_string())?;
    let got = *flow.states.last().unwrap();
    let want = 4f64.powf(1.0 / 3.0);
    b.check(
        "drift-only flow closed form",
        (got - want).abs() < 10.0 * spec.dt,
        format!("got {got}, want {want}"),
    );

    // stationary-density normalisation
    let mass = verify_invariant_normalisation(&params, 0.5, 1e-6)
        .map_err(|e| e.to_string())?;
    b.check("stationary density mass", (mass - 1.0).abs() < 1e-6, format!("mass {mass}"));

    // boundary classification pattern
    let report = boundary_divergence_report(&params, 0.5).map_err(|e| e.to_string())?;
    let ok = report.class(BoundaryQuantity::M0) == BoundaryClass::Convergent
        && report.class(BoundaryQuantity::MInf) == BoundaryClass::Convergent
        && report.class(BoundaryQuantity::Z0) == BoundaryClass::Divergent
        && report.class(BoundaryQuantity::NInf) == BoundaryClass::Divergent;
    b.check("boundary divergence pattern", ok, format!("{:?}", report.entries));

    // transition probabilities form probability vectors
    let sampler = KChainSampler::new_approx(500, &params).map_err(|e| e.to_string())?;
    let mut ok = true;
    for k in 1..=500 {
        let (u, d, s) = sampler.probs(k).map_err(|e| e.to_string())?;
        ok &= u >= 0.0 && d >= 0.0 && s >= 0.0 && (u + d + s - 1.0).abs() < 1e-12;
    }
    b.check("transition probabilities valid", ok, String::new());

    if b.failures.is_empty() {
        println!("selftest: all checks passed");
        Ok(())
    } else {
        Err(format!("selftest failures: {}", b.failures.join(", ")))
    }
}
