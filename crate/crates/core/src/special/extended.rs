//! Arbitrary-precision backend for the alternating incomplete-gamma sums.
//!
//! The `f64` fast paths escalate here when their cancellation diagnostics
//! fire. Everything is built from astro-float primitives: a Legendre
//! continued fraction anchored where it converges fast, a bridging series for
//! small arguments, and unit-step ladders in the first gamma argument.
//!
//! The sums need `Gamma(k - i/alpha; beta)` at arguments carried to the full
//! working precision -- rounding them to `f64` perturbs each term by ~1e-16
//! relative, which the cancellation then amplifies beyond any precision the
//! backend could add. Arguments are therefore represented as
//! `anchor(i) + integer`, where the per-index anchor is an exact
//! high-precision residue of `-i/alpha`; one ladder per index serves every
//! `(n, k)` pair, which also makes grid evaluation cheap.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use super::signed_log::SignedLog;
use super::SpecialError;

const RM: RoundingMode = RoundingMode::ToEven;
/// Bits that must survive cancellation for a result to be accepted.
const SURVIVING_BITS: i64 = 110;
/// Hard ceiling for precision escalation.
pub(crate) const MAX_BITS: usize = 16_384;
/// Continued fractions are evaluated at `max(x, CF_PIVOT)` and bridged down.
const CF_PIVOT: f64 = 30.0;

pub(crate) struct BigCtx {
    pub p: usize,
    cc: Consts,
}

impl BigCtx {
    pub fn new(p: usize) -> Self {
        BigCtx { p, cc: Consts::new().expect("constants cache") }
    }

    pub fn num(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, self.p)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }

    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.p, RM, &mut self.cc)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.p, RM, &mut self.cc)
    }

    /// Collapse to log-sign form. The logarithm itself is a small number, so
    /// a 96-bit evaluation parsed into `f64` loses nothing that matters.
    pub fn to_signed_log(&mut self, v: &BigFloat) -> SignedLog {
        if v.is_zero() {
            return SignedLog::ZERO;
        }
        let sign = match v.sign() {
            Some(Sign::Neg) => -1,
            _ => 1,
        };
        let ln = v.abs().ln(96, RM, &mut self.cc);
        let parsed: f64 = format!("{}", ln).parse().unwrap_or(f64::NAN);
        SignedLog::new(sign, parsed)
    }
}

/// Base-2 exponent used for magnitude comparisons (`i64::MIN` for zero).
fn exp2_of(v: &BigFloat) -> i64 {
    if v.is_zero() {
        i64::MIN
    } else {
        v.exponent().map(|e| e as i64).unwrap_or(i64::MIN)
    }
}

/// Integer offset that brings `a` into the anchor window `(-0.5, 0.5]`.
fn anchor_offset(a: f64) -> i64 {
    (a - 0.5).ceil() as i64
}

/// `Gamma(a; x)` at arbitrary precision with internal escalation; `a` is an
/// exact `f64` input here, so its anchor residue is exact by construction.
pub(crate) fn upper_incomplete_gamma_big(
    a: f64,
    x: f64,
    start_bits: usize,
) -> Result<SignedLog, SpecialError> {
    let mut bits = start_bits.max(256);
    while bits <= MAX_BITS {
        let mut ctx = BigCtx::new(bits);
        let r = anchor_offset(a);
        let anchor = ctx.num(a - r as f64);
        let mut ladder = GammaLadder::new(&mut ctx, anchor, x)?;
        let (v, lost) = ladder.get(&mut ctx, r);
        if bits as i64 - lost >= SURVIVING_BITS && !v.is_negative() && !v.is_zero() {
            return Ok(ctx.to_signed_log(&v));
        }
        bits *= 2;
    }
    Err(SpecialError::NumericInstability { max_bits: MAX_BITS })
}

/// Values `Gamma(anchor + r, x)` for integer rungs `r`, grown lazily in both
/// directions from a high-precision anchor in (roughly) `(-0.5, 0.5]`.
///
/// Upward steps (`Gamma(c+1,x) = c Gamma(c,x) + x^c e^{-x}`) add positive
/// terms and are stable; downward steps subtract, and the bits they destroy
/// are tracked so callers can certify the working precision.
struct GammaLadder {
    x_big: BigFloat,
    anchor: BigFloat,
    base: BigFloat,
    /// ups[j] = Gamma(anchor + j + 1, x); downs[j] = Gamma(anchor - j - 1, x)
    ups: Vec<BigFloat>,
    downs: Vec<BigFloat>,
    /// `x^c e^{-x}` at the frontier of each direction.
    u_up: BigFloat,
    u_down: BigFloat,
    /// Cumulative bits destroyed by downward subtractions, by depth.
    down_loss: Vec<i64>,
}

impl GammaLadder {
    fn new(ctx: &mut BigCtx, anchor: BigFloat, x: f64) -> Result<Self, SpecialError> {
        if x <= 0.0 {
            return Err(SpecialError::Domain(format!("ladder requires x > 0, got {x}")));
        }
        let x_big = ctx.num(x);
        let base = gamma_anchor_big(ctx, &anchor, x)?;
        // u = x^anchor e^{-x}
        let ln_x = ctx.ln(&x_big);
        let e = ctx.sub(&ctx.mul(&anchor, &ln_x), &x_big);
        let u = ctx.exp(&e);
        Ok(GammaLadder {
            x_big,
            anchor,
            base,
            ups: Vec::new(),
            downs: Vec::new(),
            u_up: u.clone(),
            u_down: u,
            down_loss: Vec::new(),
        })
    }

    /// `Gamma(anchor + r, x)` and the cancellation loss (bits) on its path.
    fn get(&mut self, ctx: &mut BigCtx, r: i64) -> (BigFloat, i64) {
        if r == 0 {
            return (self.base.clone(), 0);
        }
        if r > 0 {
            while (self.ups.len() as i64) < r {
                let j = self.ups.len();
                let c = ctx.add(&self.anchor, &ctx.num(j as f64));
                let prev = if j == 0 { &self.base } else { &self.ups[j - 1] };
                let next = ctx.add(&ctx.mul(&c, prev), &self.u_up);
                self.u_up = ctx.mul(&self.u_up, &self.x_big);
                self.ups.push(next);
            }
            (self.ups[(r - 1) as usize].clone(), 0)
        } else {
            let depth = (-r) as usize;
            while self.downs.len() < depth {
                let j = self.downs.len();
                let c = ctx.sub(&self.anchor, &ctx.num((j + 1) as f64));
                self.u_down = ctx.div(&self.u_down, &self.x_big);
                let prev = if j == 0 { &self.base } else { &self.downs[j - 1] };
                let num = ctx.sub(prev, &self.u_down);
                let step_loss =
                    (exp2_of(prev).max(exp2_of(&self.u_down)) - exp2_of(&num)).max(0);
                let prior = self.down_loss.last().copied().unwrap_or(0);
                self.down_loss.push(prior + step_loss);
                self.downs.push(ctx.div(&num, &c));
            }
            (self.downs[depth - 1].clone(), self.down_loss[depth - 1])
        }
    }
}

/// `Gamma(anchor, x)` for an anchor near the origin: continued fraction at
/// `max(x, CF_PIVOT)` plus a bridging series over `[x, pivot]` when needed.
fn gamma_anchor_big(
    ctx: &mut BigCtx,
    anchor: &BigFloat,
    x: f64,
) -> Result<BigFloat, SpecialError> {
    let pivot = x.max(CF_PIVOT);
    let cf = legendre_cf_big(ctx, anchor, pivot)?;
    // Gamma(anchor, pivot) = exp(anchor ln pivot - pivot) * cf
    let pv = ctx.num(pivot);
    let ln_pivot = ctx.ln(&pv);
    let pref = ctx.exp(&ctx.sub(&ctx.mul(anchor, &ln_pivot), &pv));
    let at_pivot = ctx.mul(&pref, &cf);
    if x >= pivot {
        return Ok(at_pivot);
    }
    let bridge = bridge_series_big(ctx, anchor, x, pivot)?;
    Ok(ctx.add(&at_pivot, &bridge))
}

/// `\int_x^y t^{anchor-1} e^{-t} dt` by term-wise integration of the
/// exponential series:
/// `sum_k (-1)^k/k! (y^{anchor+k} - x^{anchor+k})/(anchor+k)`,
/// where an exactly-zero `anchor + k` contributes `ln(y/x)` instead.
fn bridge_series_big(
    ctx: &mut BigCtx,
    anchor: &BigFloat,
    x: f64,
    y: f64,
) -> Result<BigFloat, SpecialError> {
    let xb = ctx.num(x);
    let yb = ctx.num(y);
    let ln_x = ctx.ln(&xb);
    let ln_y = ctx.ln(&yb);
    let mut xp = ctx.exp(&ctx.mul(anchor, &ln_x));
    let mut yp = ctx.exp(&ctx.mul(anchor, &ln_y));
    let mut inv_fact = ctx.num(1.0);
    let mut sum = ctx.num(0.0);
    let mut max_exp = i64::MIN;
    let cutoff = 48 + ctx.p as i64;
    for k in 0..200_000usize {
        let denom = ctx.add(anchor, &ctx.num(k as f64));
        let term = if denom.is_zero() {
            ctx.sub(&ln_y, &ln_x)
        } else {
            ctx.div(&ctx.sub(&yp, &xp), &denom)
        };
        let signed = if k % 2 == 0 { term } else { term.neg() };
        let contrib = ctx.mul(&signed, &inv_fact);
        sum = ctx.add(&sum, &contrib);
        max_exp = max_exp.max(exp2_of(&contrib));
        xp = ctx.mul(&xp, &xb);
        yp = ctx.mul(&yp, &yb);
        inv_fact = ctx.div(&inv_fact, &ctx.num((k + 1) as f64));
        if k as f64 > 2.0 * y && exp2_of(&contrib) < max_exp - cutoff {
            return Ok(sum);
        }
    }
    Err(SpecialError::ConvergenceFailure)
}

/// Modified-Lentz Legendre continued fraction in arbitrary precision:
/// `Gamma(a,x) = e^{-x} x^a * CF(a, x)`.
fn legendre_cf_big(ctx: &mut BigCtx, a: &BigFloat, x: f64) -> Result<BigFloat, SpecialError> {
    let tiny = ctx.num(1e-300);
    let one = ctx.num(1.0);
    let mut b = ctx.sub(&ctx.num(x + 1.0), a);
    let mut c = ctx.div(&one, &tiny);
    let mut d = ctx.div(&one, &b);
    let mut h = d.clone();
    let two = ctx.num(2.0);
    let threshold = -(ctx.p as i64) - 16;
    for i in 1..400_000usize {
        // a_i = -i (i - a) = i (a - i)
        let ib = ctx.num(i as f64);
        let an = ctx.mul(&ib, &ctx.sub(a, &ib));
        b = ctx.add(&b, &two);
        d = ctx.add(&ctx.mul(&an, &d), &b);
        if d.is_zero() {
            d = tiny.clone();
        }
        c = ctx.add(&b, &ctx.div(&an, &c));
        if c.is_zero() {
            c = tiny.clone();
        }
        d = ctx.div(&one, &d);
        let delta = ctx.mul(&d, &c);
        h = ctx.mul(&h, &delta);
        let dev = ctx.sub(&delta, &one);
        if exp2_of(&dev) < threshold {
            return Ok(h);
        }
    }
    Err(SpecialError::ConvergenceFailure)
}

/// Per-index ladder: the gamma arguments of summand `i` are
/// `anchor_i + integer`, with `anchor_i` the high-precision residue of
/// `-i/alpha` in the anchor window.
struct ClassEntry {
    /// `-i/alpha = anchor + shift` with `shift` an integer.
    shift: i64,
    ladder: GammaLadder,
}

/// Evaluates the three alternating weight sums at one fixed precision,
/// reusing per-index ladders across `(n, k)` calls:
///
/// * `s1 = sum_{i=0}^{n}   C(n,i)   (-1)^i b^{i/a} Gamma(k+1-i/a; b)`
/// * `s2 = sum_{i=0}^{n-1} C(n-1,i) (-1)^i b^{i/a} Gamma(k-i/a; b)`
/// * `s3 = sum_{i=0}^{n}   C(n,i)   (-1)^i b^{i/a} Gamma(k-i/a; b)`
pub(crate) struct SumEngine {
    alpha: f64,
    beta: f64,
    ctx: BigCtx,
    /// `beta^{1/alpha}`
    w: BigFloat,
    classes: Vec<ClassEntry>,
}

pub(crate) struct SumsOut {
    pub s1: SignedLog,
    pub s2: SignedLog,
    pub s3: SignedLog,
    pub lost_bits: i64,
}

impl SumEngine {
    pub fn new(alpha: f64, beta: f64, prec: usize) -> Result<Self, SpecialError> {
        let mut ctx = BigCtx::new(prec);
        let beta_big = ctx.num(beta);
        let ln_beta = ctx.ln(&beta_big);
        let alpha_big = ctx.num(alpha);
        let w = {
            let e = ctx.div(&ln_beta, &alpha_big);
            ctx.exp(&e)
        };
        Ok(SumEngine { alpha, beta, ctx, w, classes: Vec::new() })
    }

    pub fn prec(&self) -> usize {
        self.ctx.p
    }

    fn ensure_class(&mut self, i: usize) -> Result<(), SpecialError> {
        while self.classes.len() <= i {
            let j = self.classes.len();
            // b_j = -j/alpha at working precision; shift moves it into the
            // anchor window based on its f64 approximation.
            let b = self
                .ctx
                .div(&self.ctx.num(-(j as f64)), &self.ctx.num(self.alpha));
            let shift = anchor_offset(-(j as f64) / self.alpha);
            let anchor = self.ctx.sub(&b, &self.ctx.num(shift as f64));
            let ladder = GammaLadder::new(&mut self.ctx, anchor, self.beta)?;
            self.classes.push(ClassEntry { shift, ladder });
        }
        Ok(())
    }

    /// One pass at this engine's precision. `with_s1_s3` skips the two extra
    /// sums when only `s2` is needed (the cluster-count pmf).
    pub fn sums(
        &mut self,
        n: usize,
        k: usize,
        with_s1_s3: bool,
    ) -> Result<SumsOut, SpecialError> {
        self.ensure_class(n)?;
        let ctx = &mut self.ctx;

        let mut s1 = ctx.num(0.0);
        let mut s2 = ctx.num(0.0);
        let mut s3 = ctx.num(0.0);
        let (mut max1, mut max2, mut max3) = (i64::MIN, i64::MIN, i64::MIN);
        let mut ladder_loss: i64 = 0;

        let mut binom_n = ctx.num(1.0); // C(n, i)
        let mut binom_n1 = ctx.num(1.0); // C(n-1, i)
        let mut w_pow = ctx.num(1.0); // beta^{i/alpha}

        for i in 0..=n {
            let entry = &mut self.classes[i];
            // rung of Gamma(k - i/alpha) within class i
            let r = k as i64 + entry.shift;
            let (g_lo, loss_lo) = entry.ladder.get(ctx, r);
            ladder_loss = ladder_loss.max(loss_lo);

            let flip = i % 2 == 1;
            if i < n {
                let t2 = apply_sign(ctx.mul(&ctx.mul(&binom_n1, &w_pow), &g_lo), flip);
                max2 = max2.max(exp2_of(&t2));
                s2 = ctx.add(&s2, &t2);
            }
            if with_s1_s3 {
                let (g_hi, loss_hi) = entry.ladder.get(ctx, r + 1);
                ladder_loss = ladder_loss.max(loss_hi);
                let base = ctx.mul(&binom_n, &w_pow);
                let t3 = apply_sign(ctx.mul(&base, &g_lo), flip);
                let t1 = apply_sign(ctx.mul(&base, &g_hi), flip);
                max3 = max3.max(exp2_of(&t3));
                max1 = max1.max(exp2_of(&t1));
                s3 = ctx.add(&s3, &t3);
                s1 = ctx.add(&s1, &t1);
            }

            let den = ctx.num((i + 1) as f64);
            binom_n = ctx.div(&ctx.mul(&binom_n, &ctx.num((n - i) as f64)), &den);
            if i + 1 < n {
                binom_n1 =
                    ctx.div(&ctx.mul(&binom_n1, &ctx.num((n - 1 - i) as f64)), &den);
            }
            w_pow = ctx.mul(&w_pow, &self.w);
        }

        let mut lost = (max2 - exp2_of(&s2)).max(0) + ladder_loss;
        if with_s1_s3 {
            lost = lost
                .max((max1 - exp2_of(&s1)).max(0) + ladder_loss)
                .max((max3 - exp2_of(&s3)).max(0) + ladder_loss);
        }
        Ok(SumsOut {
            s1: ctx.to_signed_log(&s1),
            s2: ctx.to_signed_log(&s2),
            s3: ctx.to_signed_log(&s3),
            lost_bits: lost,
        })
    }

    /// Whether a result with this loss is trustworthy at this precision.
    pub fn certified(&self, lost_bits: i64) -> bool {
        (self.ctx.p as i64) - lost_bits >= SURVIVING_BITS
    }
}

fn apply_sign(v: BigFloat, flip: bool) -> BigFloat {
    if flip {
        v.neg()
    } else {
        v
    }
}

/// Escalating-precision frontend over [`SumEngine`]s, one per `(alpha, beta)`.
pub(crate) struct AltSums {
    alpha: f64,
    beta: f64,
    engines: Vec<SumEngine>,
}

impl AltSums {
    pub fn new(alpha: f64, beta: f64) -> Self {
        AltSums { alpha, beta, engines: Vec::new() }
    }

    fn engine_at(&mut self, bits: usize) -> Result<&mut SumEngine, SpecialError> {
        if let Some(pos) = self.engines.iter().position(|e| e.prec() == bits) {
            return Ok(&mut self.engines[pos]);
        }
        let engine = SumEngine::new(self.alpha, self.beta, bits)?;
        self.engines.push(engine);
        let last = self.engines.len() - 1;
        Ok(&mut self.engines[last])
    }

    /// The three weight sums, certified; `hint_lost_bits` sizes the first
    /// attempt (pass the f64 diagnostic's estimate to skip doomed levels).
    pub fn weight_sums(
        &mut self,
        n: usize,
        k: usize,
        hint_lost_bits: u32,
    ) -> Result<[SignedLog; 3], SpecialError> {
        let mut bits = starting_bits(hint_lost_bits);
        while bits <= MAX_BITS {
            let engine = self.engine_at(bits)?;
            let out = engine.sums(n, k, true)?;
            if engine.certified(out.lost_bits) {
                return Ok([out.s1, out.s2, out.s3]);
            }
            bits *= 2;
        }
        Err(SpecialError::NumericInstability { max_bits: MAX_BITS })
    }

    /// Just `s2` (the alternating sum of the cluster-count distribution).
    pub fn pmf_sum(
        &mut self,
        n: usize,
        k: usize,
        hint_lost_bits: u32,
    ) -> Result<SignedLog, SpecialError> {
        let mut bits = starting_bits(hint_lost_bits);
        while bits <= MAX_BITS {
            let engine = self.engine_at(bits)?;
            let out = engine.sums(n, k, false)?;
            if engine.certified(out.lost_bits) {
                return Ok(out.s2);
            }
            bits *= 2;
        }
        Err(SpecialError::NumericInstability { max_bits: MAX_BITS })
    }
}

fn starting_bits(hint_lost_bits: u32) -> usize {
    let want = hint_lost_bits as usize + SURVIVING_BITS as usize + 48;
    let mut bits = 256;
    while bits < want && bits < MAX_BITS {
        bits *= 2;
    }
    bits.min(MAX_BITS)
}
