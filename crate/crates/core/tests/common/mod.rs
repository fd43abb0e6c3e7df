//! Shared oracle helpers for the integration tests.
//!
//! Everything in this module is deliberately independent of the library's
//! implementation paths: plain adaptive Simpson quadrature, direct
//! term-by-term high-precision sums, and closed forms.

#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};

/// Recursive adaptive Simpson quadrature on a finite interval.
///
/// `tol` is treated as an absolute tolerance with a relative floor, so the
/// recursion terminates once subdivision hits rounding noise.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        let noise_floor = 4e-16 * (left.abs() + right.abs());
        if depth == 0 || delta.abs() <= (15.0 * tol).max(noise_floor) {
            left + right + delta / 15.0
        } else {
            let half = (tol / 2.0).max(1e-18 * (left.abs() + right.abs()));
            recurse(f, a, fa, m, fm, left, lm, flm, half, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, half, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 24)
}

/// Quadrature oracle for the upper incomplete gamma integral
/// `\int_x^\infty t^{a-1} e^{-t} dt` (finite truncation with a negligible tail).
pub fn gamma_upper_quadrature(a: f64, x: f64) -> f64 {
    assert!(x > 0.0);
    let upper = (x + 120.0).max(40.0 * a.abs().max(1.0));
    let f = |t: f64| (a - 1.0) * t.ln() - t;
    // integrate exp(f) in pieces that keep the integrand scaled near 1
    let mut total = 0.0;
    let mut lo = x;
    while lo < upper {
        let hi = (lo * 2.0).min(upper).max(lo + 1.0);
        let scale = f(lo).max(f(hi));
        let g = |t: f64| (f(t) - scale).exp();
        let rough = (hi - lo) * 0.5 * (g(lo) + g(hi));
        total += adaptive_simpson(&g, lo, hi, 1e-13 * rough.max(1e-30)) * scale.exp();
        lo = hi;
    }
    total
}

const RM: RoundingMode = RoundingMode::ToEven;
const ORACLE_BITS: usize = 384;

/// Explicit-sum oracle for the generalised factorial coefficient:
/// `G(n,k,a) = (1/k!) sum_{j=0}^k (-1)^j C(k,j) (-j a)_n`, computed
/// term by term in 384-bit arithmetic. Returns the value as `f64`.
pub fn gfc_explicit_sum(n: usize, k: usize, alpha: f64) -> f64 {
    let p = ORACLE_BITS;
    let num = |v: f64| BigFloat::from_f64(v, p);
    let mut sum = num(0.0);
    for j in 0..=k {
        // rising factorial (-j*alpha)_n, factors formed in high precision so
        // the alternating sum's cancellation is not polluted by f64 rounding
        let japrod = num(-(j as f64)).mul(&num(alpha), p, RM);
        let mut rf = num(1.0);
        for m in 0..n {
            rf = rf.mul(&japrod.add(&num(m as f64), p, RM), p, RM);
        }
        let mut c = num(1.0); // C(k, j)
        for t in 0..j {
            c = c.mul(&num((k - t) as f64), p, RM).div(&num((t + 1) as f64), p, RM);
        }
        let term = c.mul(&rf, p, RM);
        sum = if j % 2 == 0 { sum.add(&term, p, RM) } else { sum.sub(&term, p, RM) };
    }
    for t in 1..=k {
        sum = sum.div(&num(t as f64), p, RM);
    }
    big_to_f64(&sum)
}

pub fn big_to_f64(v: &BigFloat) -> f64 {
    format!("{}", v).parse().unwrap()
}

/// Term-by-term 384-bit oracle for the three alternating weight sums, with
/// each incomplete gamma evaluated by high-precision quadrature of its
/// defining integral. Slow; meant for a handful of desk-scale points.
pub fn weight_sums_oracle(n: usize, k: usize, alpha: f64, beta: f64) -> (f64, f64, f64) {
    let p = ORACLE_BITS;
    let num = |v: f64| BigFloat::from_f64(v, p);
    let mut cc = Consts::new().unwrap();

    let gamma_big = |a: f64, cc: &mut Consts| gamma_upper_quadrature_big(a, beta, p, cc);

    let mut s1 = num(0.0);
    let mut s2 = num(0.0);
    let mut s3 = num(0.0);
    let ln_beta = num(beta).ln(p, RM, &mut cc);
    for i in 0..=n {
        let a_lo = k as f64 - i as f64 / alpha;
        let g_lo = gamma_big(a_lo, &mut cc);
        let g_hi = gamma_big(a_lo + 1.0, &mut cc);
        let mut c_n = num(1.0);
        for t in 0..i {
            c_n = c_n.mul(&num((n - t) as f64), p, RM).div(&num((t + 1) as f64), p, RM);
        }
        let w = ln_beta
            .mul(&num(i as f64 / alpha), p, RM)
            .exp(p, RM, &mut cc);
        let base = c_n.mul(&w, p, RM);
        let sgn = |v: BigFloat| if i % 2 == 1 { v.neg() } else { v };
        s1 = s1.add(&sgn(base.mul(&g_hi, p, RM)), p, RM);
        s3 = s3.add(&sgn(base.mul(&g_lo, p, RM)), p, RM);
        if i < n {
            let mut c_n1 = num(1.0);
            for t in 0..i {
                c_n1 = c_n1
                    .mul(&num((n - 1 - t) as f64), p, RM)
                    .div(&num((t + 1) as f64), p, RM);
            }
            s2 = s2.add(&sgn(c_n1.mul(&w, p, RM).mul(&g_lo, p, RM)), p, RM);
        }
    }
    (big_to_f64(&s1), big_to_f64(&s2), big_to_f64(&s3))
}

/// High-precision quadrature of `\int_x^\infty t^{a-1} e^{-t} dt` by
/// composite Simpson with fixed fine panels (oracle-grade, not fast).
pub fn gamma_upper_quadrature_big(a: f64, x: f64, p: usize, cc: &mut Consts) -> BigFloat {
    let num = |v: f64| BigFloat::from_f64(v, p);
    let upper = (x + 220.0).max(30.0 * a.abs().max(1.0));
    let integrand = |t: f64, cc: &mut Consts| -> BigFloat {
        let tb = num(t);
        let ln_t = tb.ln(p, RM, cc);
        ln_t.mul(&num(a - 1.0), p, RM).sub(&tb, p, RM).exp(p, RM, cc)
    };
    // geometric panels, each with composite Simpson at 256 subintervals
    let mut total = num(0.0);
    let mut lo = x;
    while lo < upper {
        let hi = (lo * 1.5).min(upper).max(lo + 0.5);
        let m = 256usize;
        let h = (hi - lo) / m as f64;
        let mut acc = integrand(lo, cc).add(&integrand(hi, cc), p, RM);
        for j in 1..m {
            let w = if j % 2 == 1 { 4.0 } else { 2.0 };
            let ft = integrand(lo + j as f64 * h, cc).mul(&num(w), p, RM);
            acc = acc.add(&ft, p, RM);
        }
        total = total.add(&acc.mul(&num(h / 3.0), p, RM), p, RM);
        lo = hi;
    }
    total
}

/// Levy closed form for the one-sided 1/2-stable density.
pub fn levy_density(t: f64) -> f64 {
    1.0 / (2.0 * std::f64::consts::PI.sqrt()) * t.powf(-1.5) * (-1.0 / (4.0 * t)).exp()
}

/// Exact law of the sorted block-size multiset at small `n`, enumerating
/// every new/join decision path of the urn with exact weights.
pub fn urn_tree_law(
    n: usize,
    params: &ggpop::weights::GGParams,
) -> std::collections::HashMap<Vec<u32>, f64> {
    let table = ggpop::weights::ExactWeightTable::build(params, n - 1).unwrap();
    let alpha = params.alpha();
    let mut law = std::collections::HashMap::new();
    let mut stack: Vec<(Vec<u32>, f64)> = vec![(vec![], 1.0)];
    while let Some((sizes, prob)) = stack.pop() {
        let m: u32 = sizes.iter().sum();
        if m as usize == n {
            let mut key = sizes.clone();
            key.sort_unstable_by(|a, b| b.cmp(a));
            *law.entry(key).or_insert(0.0) += prob;
            continue;
        }
        let k = sizes.len();
        let (g0, g1) = table.weights(m as usize, k);
        let mut next = sizes.clone();
        next.push(1);
        stack.push((next, prob * g0));
        for j in 0..k {
            let p_join = g1 * (sizes[j] as f64 - alpha);
            let mut next = sizes.clone();
            next[j] += 1;
            stack.push((next, prob * p_join));
        }
    }
    law
}

/// Deterministic flow `s(t) = (s0^3 + 3 t)^{1/3}` solved from
/// `ds/dt = s^{-2}` (drift-only dynamics at alpha = 1/2, beta = 1).
pub fn zero_noise_flow(s0: f64, t: f64) -> f64 {
    (s0.powi(3) + 3.0 * t).cbrt()
}
