//! Predictive urn weights `g0` (new type) and `g1` (copy an existing type):
//! the exact generalised gamma ratios of alternating incomplete-gamma sums,
//! their second-order approximation, and the Pitman-Yor reference family.
//!
//! Every exact weight pair satisfies `g0 + (n - alpha k) g1 = 1`; the exact
//! evaluator enforces this to 1e-10 by escalating to extended precision
//! whenever the fast path's cancellation diagnostics cannot certify it.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::integrate_log_peaked;
use crate::special::extended::AltSums;
use crate::special::{
    gamma_upper_small_a, ln_gamma, signed_sum, SignedLog, SpecialError, SumOutcome, EXACT_N_LIMIT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("invalid parameters: {0}")]
    Domain(String),
    #[error(transparent)]
    Numeric(#[from] SpecialError),
}

/// Parameters of the normalised generalised gamma prior, `alpha` in (0,1)
/// and `beta > 0` (equivalently `beta = tau^alpha / alpha`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GGParams {
    alpha: f64,
    beta: f64,
}

impl GGParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, WeightError> {
        if !(alpha > 0.0 && alpha < 1.0) || !alpha.is_finite() {
            return Err(WeightError::Domain(format!("alpha must lie in (0,1), got {alpha}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(WeightError::Domain(format!("beta must be positive, got {beta}")));
        }
        Ok(GGParams { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The underlying tilting parameter `tau = (alpha beta)^{1/alpha}`.
    pub fn tau(&self) -> f64 {
        (self.alpha * self.beta).powf(1.0 / self.alpha)
    }
}

impl fmt::Display for GGParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GG(alpha={}, beta={})", self.alpha, self.beta)
    }
}

/// Pitman-Yor parameter pair: either `alpha in [0,1), theta > -alpha`, or
/// `alpha < 0` with `theta = |alpha| m` for a positive integer `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PYParams {
    alpha: f64,
    theta: f64,
}

impl PYParams {
    pub fn new(alpha: f64, theta: f64) -> Result<Self, WeightError> {
        if !alpha.is_finite() || !theta.is_finite() {
            return Err(WeightError::Domain("non-finite Pitman-Yor parameters".into()));
        }
        let ok = if alpha < 0.0 {
            let m = theta / -alpha;
            m >= 1.0 - 1e-12 && (m - m.round()).abs() < 1e-9
        } else {
            alpha < 1.0 && theta > -alpha
        };
        if !ok {
            return Err(WeightError::Domain(format!(
                "need alpha in [0,1) with theta > -alpha, or alpha < 0 with theta = |alpha| m; got alpha={alpha} theta={theta}"
            )));
        }
        Ok(PYParams { alpha, theta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// A `(g0, g1)` pair; exact modes satisfy `g0 + (n - alpha k) g1 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPair {
    pub g0: f64,
    pub g1: f64,
}

/// Second-order approximate weights: the raw formula values and a view
/// clamped to `[0, 1]`. Consumers apply the clamps where their transition
/// rules call for them; the raw values keep the formula auditable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxWeights {
    pub raw: WeightPair,
    pub clamped: WeightPair,
}

/// Pitman-Yor predictive weights `g0 = (theta + alpha k)/(theta + n)`,
/// `g1 = 1/(theta + n)`.
pub fn py_weights(n: usize, k: usize, params: &PYParams) -> Result<WeightPair, WeightError> {
    check_nk(n, k)?;
    let denom = params.theta + n as f64;
    Ok(WeightPair {
        g0: (params.theta + params.alpha * k as f64) / denom,
        g1: 1.0 / denom,
    })
}

/// Second-order approximation of the generalised gamma weights:
/// `g0 = alpha k / n + beta / k^{1/alpha}`, `g1 = 1/n - beta/(n k^{1/alpha})`
/// (asymptotic remainders dropped).
pub fn gg_weights_approx(n: usize, k: usize, params: &GGParams) -> ApproxWeights {
    debug_assert!(k >= 1 && k <= n);
    let (alpha, beta) = (params.alpha, params.beta);
    let nf = n as f64;
    let kf = k as f64;
    let k_pow = kf.powf(1.0 / alpha);
    let g0 = alpha * kf / nf + beta / k_pow;
    let g1 = 1.0 / nf - beta / (nf * k_pow);
    ApproxWeights {
        raw: WeightPair { g0, g1 },
        clamped: WeightPair { g0: g0.clamp(0.0, 1.0), g1: g1.clamp(0.0, 1.0) },
    }
}

/// Exact generalised gamma weights from the alternating incomplete-gamma
/// sums. Valid for `n` up to [`EXACT_N_LIMIT`].
///
/// One-shot convenience; batch callers should reuse a [`GgWeightCalculator`],
/// which caches the gamma ladders across the `(n, k)` grid.
pub fn gg_weights_exact(n: usize, k: usize, params: &GGParams) -> Result<WeightPair, WeightError> {
    GgWeightCalculator::new(*params).exact(n, k)
}

/// Exact weights through the cancellation-free integral form of the same
/// sums, valid for any `n`:
/// `sum_i C(m,i) (-1)^i beta^{i/alpha} Gamma(c - i/alpha; beta)
///   = \int_beta^infty t^{c-1} e^{-t} (1 - (beta/t)^{1/alpha})^m dt`.
///
/// This route exists for the large-`n` regime where the alternating sums are
/// out of reach; within [`EXACT_N_LIMIT`] the two routes agree to 1e-10.
pub fn gg_weights_quadrature(
    n: usize,
    k: usize,
    params: &GGParams,
) -> Result<WeightPair, WeightError> {
    check_nk(n, k)?;
    let s1 = ln_weight_integral(params, k as f64, n as f64);
    let s2 = ln_weight_integral(params, k as f64 - 1.0, n as f64 - 1.0);
    let s3 = ln_weight_integral(params, k as f64 - 1.0, n as f64);
    let nf = n as f64;
    Ok(WeightPair {
        g0: params.alpha / nf * (s1 - s2).exp(),
        g1: (s3 - s2).exp() / nf,
    })
}

/// `ln \int_beta^infty t^{p} e^{-t} (1 - (beta/t)^{1/alpha})^{m} dt`.
fn ln_weight_integral(params: &GGParams, p: f64, m: f64) -> f64 {
    let beta = params.beta;
    let inv_alpha = 1.0 / params.alpha;
    let ln_beta = beta.ln();
    let ln_f = move |t: f64| {
        let u = (inv_alpha * (ln_beta - t.ln())).exp();
        p * t.ln() - t + m * (-u).ln_1p()
    };
    integrate_log_peaked(&ln_f, beta, f64::INFINITY, 1e-13)
}

fn check_nk(n: usize, k: usize) -> Result<(), WeightError> {
    if n == 0 || k == 0 || k > n {
        return Err(WeightError::Domain(format!("need 1 <= k <= n, got n={n} k={k}")));
    }
    Ok(())
}

/// Cancellation ratio under which the f64 sums are handed to the
/// arbitrary-precision backend.
const F64_MIN_CANCELLATION: f64 = 2e-2;
/// Largest tolerated defect of `g0 + (n - alpha k) g1 - 1` on the fast path.
const IDENTITY_DEFECT_LIMIT: f64 = 5e-11;

/// Reusable exact-weight evaluator for one parameter pair. Caches the
/// incomplete-gamma ladders of both the f64 and the extended path, so grid
/// sweeps and table builds pay the transcendental costs once.
pub struct GgWeightCalculator {
    params: GGParams,
    fast: F64Sums,
    extended: AltSums,
}

impl GgWeightCalculator {
    pub fn new(params: GGParams) -> Self {
        GgWeightCalculator {
            params,
            fast: F64Sums::new(params.alpha, params.beta),
            extended: AltSums::new(params.alpha, params.beta),
        }
    }

    pub fn params(&self) -> &GGParams {
        &self.params
    }

    /// Exact `(g0, g1)` at `(n, k)`, `n <= EXACT_N_LIMIT`.
    pub fn exact(&mut self, n: usize, k: usize) -> Result<WeightPair, WeightError> {
        check_nk(n, k)?;
        if n > EXACT_N_LIMIT {
            return Err(WeightError::Domain(format!(
                "exact weights are certified only for n <= {EXACT_N_LIMIT}; use the quadrature route or approximation for n = {n}"
            )));
        }
        let alpha = self.params.alpha;
        let nf = n as f64;
        let kf = k as f64;

        if let Some((s1, s2, s3, worst)) = self.fast.sums(n, k, true) {
            if worst >= F64_MIN_CANCELLATION {
                let g0 = alpha / nf * (s1.div(s2)).to_f64();
                let g1 = (s3.div(s2)).to_f64() / nf;
                let defect = (g0 + (nf - alpha * kf) * g1 - 1.0).abs();
                if defect <= IDENTITY_DEFECT_LIMIT && g0.is_finite() && g1.is_finite() {
                    return Ok(WeightPair { g0, g1 });
                }
            }
        }
        let hint = self.fast.lost_bits_hint(n, k);
        let [s1, s2, s3] = self.extended.weight_sums(n, k, hint)?;
        let g0 = alpha / nf * (s1.div(s2)).to_f64();
        let g1 = (s3.div(s2)).to_f64() / nf;
        Ok(WeightPair { g0, g1 })
    }

    /// The alternating sum of the cluster-count distribution
    /// (`s2` at `(n, k)`), in log-sign form.
    pub(crate) fn pmf_sum(&mut self, n: usize, k: usize) -> Result<SignedLog, WeightError> {
        check_nk(n, k)?;
        if let Some((_, s2, _, worst)) = self.fast.sums(n, k, false) {
            if worst >= F64_MIN_CANCELLATION && s2.sign == 1 {
                return Ok(s2);
            }
        }
        let hint = self.fast.lost_bits_hint(n, k);
        Ok(self.extended.pmf_sum(n, k, hint)?)
    }
}

/// Precomputed exact weights `(g0, g1)` for all `(m, k)`, `1 <= k <= m <= max_m`,
/// with the empty-sample convention `weights(0, 0) = (1, 0)`.
///
/// This is the lookup table the urn sampler and the population chains consult
/// on their hot paths.
#[derive(Debug, Clone)]
pub struct ExactWeightTable {
    max_m: usize,
    g0: Vec<f64>,
    g1: Vec<f64>,
}

impl ExactWeightTable {
    pub fn build(params: &GGParams, max_m: usize) -> Result<Self, WeightError> {
        let mut calc = GgWeightCalculator::new(*params);
        let mut g0 = Vec::with_capacity(max_m * (max_m + 1) / 2);
        let mut g1 = Vec::with_capacity(max_m * (max_m + 1) / 2);
        for m in 1..=max_m {
            for k in 1..=m {
                let w = calc.exact(m, k)?;
                g0.push(w.g0);
                g1.push(w.g1);
            }
        }
        Ok(ExactWeightTable { max_m, g0, g1 })
    }

    pub fn max_m(&self) -> usize {
        self.max_m
    }

    /// `(g0, g1)` for a conditioning sample of size `m` with `k` types.
    pub fn weights(&self, m: usize, k: usize) -> (f64, f64) {
        if m == 0 {
            // empty conditioning sample: the next draw is always new
            return (1.0, 0.0);
        }
        debug_assert!(k >= 1 && k <= m && m <= self.max_m);
        let idx = m * (m - 1) / 2 + (k - 1);
        (self.g0[idx], self.g1[idx])
    }
}

/// f64 evaluation of the three alternating sums with per-index ladder
/// caching. Mirrors the extended engine's layout: the gamma arguments of
/// summand `i` are `anchor_i + integer`, with `anchor_i` the compensated
/// residue of `-i/alpha`, so the arguments carry no `i`-dependent rounding.
struct F64Sums {
    alpha: f64,
    beta: f64,
    ln_beta: f64,
    classes: Vec<F64Class>,
}

struct F64Class {
    shift: i64,
    anchor: f64,
    /// rung r stores (Gamma(anchor + r, beta), relative error bound)
    base: (SignedLog, f64),
    ups: Vec<(SignedLog, f64)>,
    downs: Vec<(SignedLog, f64)>,
}

impl F64Class {
    fn new(i: usize, alpha: f64, beta: f64) -> Option<Self> {
        // anchor = -i/alpha - shift, with the division residue folded back in
        // so the rounding of i/alpha does not contaminate the argument
        // (-r - shift is exact by Sterbenz; corr is the tiny fma residue).
        let r = i as f64 / alpha;
        let resid = (-r).mul_add(alpha, i as f64);
        let corr = resid / alpha;
        let shift = (-r - 0.5).ceil() as i64;
        let anchor = (-r - shift as f64) - corr;
        let base = gamma_upper_small_a(anchor, beta).ok()?;
        Some(F64Class { shift, anchor, base: (base, 1e-15), ups: Vec::new(), downs: Vec::new() })
    }

    fn get(&mut self, r: i64, beta: f64, ln_beta: f64) -> (SignedLog, f64) {
        if r == 0 {
            return self.base;
        }
        if r > 0 {
            while (self.ups.len() as i64) < r {
                let j = self.ups.len();
                let c = self.anchor + j as f64;
                let prev = if j == 0 { self.base } else { self.ups[j - 1] };
                let u = SignedLog::from_ln(c * ln_beta - beta);
                let sum = signed_sum([prev.0.mul(SignedLog::from_f64(c)), u]);
                let err = (prev.1 + 2e-16) / sum.cancellation.max(1e-300);
                self.ups.push((sum.value, err));
            }
            self.ups[(r - 1) as usize]
        } else {
            let depth = (-r) as usize;
            while self.downs.len() < depth {
                let j = self.downs.len();
                let c = self.anchor - (j + 1) as f64;
                let prev = if j == 0 { self.base } else { self.downs[j - 1] };
                let u = SignedLog::from_ln(c * ln_beta - beta);
                let num = signed_sum([prev.0, u.neg()]);
                let err = (prev.1 + 2e-16) / num.cancellation.max(1e-300);
                self.downs.push((num.value.div(SignedLog::from_f64(c)), err));
            }
            self.downs[depth - 1]
        }
    }
}

impl F64Sums {
    fn new(alpha: f64, beta: f64) -> Self {
        F64Sums { alpha, beta, ln_beta: beta.ln(), classes: Vec::new() }
    }

    fn ensure(&mut self, i: usize) -> bool {
        while self.classes.len() <= i {
            match F64Class::new(self.classes.len(), self.alpha, self.beta) {
                Some(c) => self.classes.push(c),
                None => return false,
            }
        }
        true
    }

    /// The three sums plus the worst certification figure (the minimum over
    /// sums of cancellation, discounted by rung error). `None` when a rung
    /// itself failed to evaluate.
    fn sums(
        &mut self,
        n: usize,
        k: usize,
        with_s1_s3: bool,
    ) -> Option<(SignedLog, SignedLog, SignedLog, f64)> {
        if !self.ensure(n) {
            return None;
        }
        let inv_alpha = 1.0 / self.alpha;
        let ln_cn = |row: usize, i: usize| {
            ln_gamma(row as f64 + 1.0) - ln_gamma(i as f64 + 1.0) - ln_gamma((row - i) as f64 + 1.0)
        };
        let mut t1 = Vec::with_capacity(n + 1);
        let mut t2 = Vec::with_capacity(n);
        let mut t3 = Vec::with_capacity(n + 1);
        let mut worst_rung_err: f64 = 1e-15;
        for i in 0..=n {
            let (beta, ln_beta) = (self.beta, self.ln_beta);
            let class = &mut self.classes[i];
            let r = k as i64 + class.shift;
            let (g_lo, e_lo) = class.get(r, beta, ln_beta);
            worst_rung_err = worst_rung_err.max(e_lo);
            let sign = if i % 2 == 1 { -1.0 } else { 1.0 };
            let ln_w = i as f64 * inv_alpha * ln_beta;
            if i < n {
                let t = g_lo
                    .mul(SignedLog::from_f64(sign))
                    .scale_ln(ln_cn(n - 1, i) + ln_w);
                t2.push(t);
            }
            if with_s1_s3 {
                let (g_hi, e_hi) = class.get(r + 1, beta, ln_beta);
                worst_rung_err = worst_rung_err.max(e_hi);
                let ln_c = ln_cn(n, i) + ln_w;
                t3.push(g_lo.mul(SignedLog::from_f64(sign)).scale_ln(ln_c));
                t1.push(g_hi.mul(SignedLog::from_f64(sign)).scale_ln(ln_c));
            }
        }
        let o2 = signed_sum(t2.iter().copied());
        let (o1, o3) = if with_s1_s3 {
            (signed_sum(t1.iter().copied()), signed_sum(t3.iter().copied()))
        } else {
            (SumOutcome { value: SignedLog::ONE, max_term_ln: 0.0, cancellation: 1.0 }, {
                SumOutcome { value: SignedLog::ONE, max_term_ln: 0.0, cancellation: 1.0 }
            })
        };
        // rung error eats into the usable cancellation budget
        let quality = o1
            .cancellation
            .min(o2.cancellation)
            .min(o3.cancellation)
            * (1e-15 / worst_rung_err.max(1e-15)).min(1.0);
        Some((o1.value, o2.value, o3.value, quality))
    }

    /// Bits the extended backend should expect to lose, from the f64 pass.
    fn lost_bits_hint(&mut self, n: usize, k: usize) -> u32 {
        match self.sums(n, k, true) {
            Some((_, _, _, q)) if q > 0.0 => (-(q.log2())).max(0.0) as u32 + 53,
            _ => 160,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gg(alpha: f64, beta: f64) -> GGParams {
        GGParams::new(alpha, beta).unwrap()
    }

    #[test]
    fn param_validation() {
        assert!(GGParams::new(0.0, 1.0).is_err());
        assert!(GGParams::new(1.0, 1.0).is_err());
        assert!(GGParams::new(0.5, 0.0).is_err());
        assert!(GGParams::new(0.5, -1.0).is_err());
        let p = gg(0.5, 2.0);
        // beta = tau^alpha / alpha
        assert!((p.tau().powf(p.alpha()) / p.alpha() - p.beta()).abs() < 1e-12);

        assert!(PYParams::new(0.5, -0.5).is_err());
        assert!(PYParams::new(0.5, -0.4).is_ok());
        assert!(PYParams::new(-0.5, 1.5).is_ok()); // m = 3
        assert!(PYParams::new(-0.5, 1.3).is_err());
        assert!(PYParams::new(1.0, 1.0).is_err());
    }

    #[test]
    fn py_weight_examples() {
        let p = PYParams::new(0.5, 1.0).unwrap();
        let w = py_weights(3, 2, &p).unwrap();
        assert!((w.g0 - 0.5).abs() < 1e-15);
        assert!((w.g1 - 0.25).abs() < 1e-15);
        // Dirichlet special case alpha = 0
        let dp = PYParams::new(0.0, 1.0).unwrap();
        let w = py_weights(3, 2, &dp).unwrap();
        assert!((w.g0 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn py_normalisation_exact() {
        for &(alpha, theta) in &[(0.5, 1.0), (0.0, 2.0), (0.25, -0.1), (-0.5, 2.0)] {
            let p = PYParams::new(alpha, theta).unwrap();
            for n in 1..=20usize {
                for k in 1..=n {
                    let w = py_weights(n, k, &p).unwrap();
                    let defect = w.g0 + (n as f64 - alpha * k as f64) * w.g1 - 1.0;
                    assert!(defect.abs() < 1e-12, "PY defect {defect} at ({n},{k})");
                }
            }
        }
    }

    #[test]
    fn approx_formula_arithmetic() {
        let p = gg(0.5, 1.0);
        let w = gg_weights_approx(100, 10, &p);
        assert!((w.raw.g0 - 0.06).abs() < 1e-15);
        assert!((w.raw.g1 - 0.0099).abs() < 1e-15);
        // clamped view at tiny k where the raw g0 exceeds 1
        let w = gg_weights_approx(1, 1, &gg(0.5, 2.0));
        assert!(w.raw.g0 > 1.0);
        assert!((w.clamped.g0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_normalisation_small_grid() {
        for &(alpha, beta) in &[(0.25, 1.0), (0.5, 1.0), (0.75, 5.0), (0.5, 0.5)] {
            let params = gg(alpha, beta);
            let mut calc = GgWeightCalculator::new(params);
            for n in 1..=25usize {
                for k in 1..=n {
                    let w = calc.exact(n, k).unwrap();
                    let defect = w.g0 + (n as f64 - alpha * k as f64) * w.g1 - 1.0;
                    assert!(
                        defect.abs() < 1e-10,
                        "GG defect {defect:.3e} at ({n},{k}) alpha={alpha} beta={beta}"
                    );
                    assert!(w.g0 >= 0.0 && w.g0 <= 1.0 + 1e-12, "g0 = {}", w.g0);
                    assert!(w.g1 >= 0.0, "g1 = {}", w.g1);
                }
            }
        }
    }

    #[test]
    fn exact_matches_quadrature_route() {
        for &(alpha, beta) in &[(0.5, 1.0), (0.75, 2.0), (0.25, 0.5)] {
            let params = gg(alpha, beta);
            let mut calc = GgWeightCalculator::new(params);
            for &(n, k) in &[(5usize, 3usize), (20, 6), (50, 10), (60, 35)] {
                let ws = calc.exact(n, k).unwrap();
                let wq = gg_weights_quadrature(n, k, &params).unwrap();
                assert!(
                    (ws.g0 - wq.g0).abs() < 1e-10 && (ws.g1 - wq.g1).abs() < 1e-10 * wq.g1.max(1e-3),
                    "routes disagree at ({n},{k},{alpha},{beta}): sums ({}, {}) quad ({}, {})",
                    ws.g0, ws.g1, wq.g0, wq.g1
                );
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        let p = gg(0.5, 1.0);
        assert!(gg_weights_exact(0, 0, &p).is_err());
        assert!(gg_weights_exact(5, 6, &p).is_err());
        assert!(gg_weights_exact(EXACT_N_LIMIT + 1, 3, &p).is_err());
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let p = gg(0.5, 1.0);
        let table = ExactWeightTable::build(&p, 12).unwrap();
        let mut calc = GgWeightCalculator::new(p);
        for m in 1..=12usize {
            for k in 1..=m {
                let (g0, g1) = table.weights(m, k);
                let w = calc.exact(m, k).unwrap();
                assert_eq!(g0, w.g0);
                assert_eq!(g1, w.g1);
            }
        }
        assert_eq!(table.weights(0, 0), (1.0, 0.0));
    }

    #[test]
    fn py_distinct_from_gg() {
        // sanity: PY with theta = beta is a different family
        let ggw = gg_weights_exact(10, 4, &gg(0.5, 1.0)).unwrap();
        let pyw = py_weights(10, 4, &PYParams::new(0.5, 1.0).unwrap()).unwrap();
        assert!((ggw.g0 - pyw.g0).abs() > 1e-3);
    }
}
