//! Adaptive quadrature helpers.
//!
//! The integrands in this crate are smooth, positive, and usually sharply
//! peaked, with dynamic ranges far beyond `f64`. [`integrate_log_peaked`]
//! locates the interior maximum of a log-integrand, rescales by it, and
//! integrates the scaled integrand adaptively, returning the log of the
//! integral.

/// Recursive adaptive Simpson on a finite interval with an absolute target.
pub fn adaptive_simpson_abs<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
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
        let noise = 4e-16 * (left.abs() + right.abs());
        if depth == 0 || delta.abs() <= (15.0 * tol).max(noise) {
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
    recurse(f, a, fa, b, fb, whole, m, fm, abs_tol.max(1e-300), 22)
}

/// Adaptive Simpson with a tolerance relative to the first whole-interval
/// estimate. Suitable for integrands without extreme peaks; peaked
/// integrands should go through [`integrate_log_peaked`].
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let rough = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson_abs(f, a, b, rel_tol * rough.abs().max(1e-300))
}

/// Golden-section maximisation of a unimodal function on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// How far below the peak (in nats) the integrand is treated as zero.
const TAIL_CUT: f64 = 60.0;

/// `ln \int_lo^hi exp(ln_f(t)) dt` for a log-integrand with a single interior
/// peak. `hi = f64::INFINITY` expands the right end geometrically until the
/// integrand has fallen `TAIL_CUT` nats below the peak.
pub fn integrate_log_peaked<F: Fn(f64) -> f64>(ln_f: &F, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    // Bracket the peak by walking right from lo.
    let start = if lo == 0.0 { 1e-12 } else { lo * (1.0 + 1e-12) };
    let finite_hi = hi.is_finite();
    let mut t_prev = start;
    let mut f_prev = ln_f(t_prev);
    let mut step = if finite_hi { (hi - lo) / 64.0 } else { lo.abs().max(1e-3) * 0.25 };
    let mut t_best = t_prev;
    let mut f_best = f_prev;
    let bracket_hi;
    loop {
        let t = if finite_hi { (t_prev + step).min(hi) } else { t_prev + step };
        let ft = ln_f(t);
        if ft > f_best {
            t_best = t;
            f_best = ft;
        }
        if ft < f_best - TAIL_CUT {
            bracket_hi = Some(t);
            break;
        }
        if finite_hi && t >= hi {
            bracket_hi = Some(hi);
            break;
        }
        t_prev = t;
        f_prev = ft;
        step *= 1.35;
    }
    let _ = f_prev;
    let right = bracket_hi.unwrap();
    // Refine the peak location.
    let (t_peak, f_peak) = golden_max(ln_f, start, right, 80);
    let (t_peak, f_peak) = if f_best > f_peak { (t_best, f_best) } else { (t_peak, f_peak) };

    // Cut points where the integrand falls TAIL_CUT nats under the peak.
    let cut = f_peak - TAIL_CUT;
    let left_cut = if ln_f(start) >= cut {
        start
    } else {
        bisect_cross(ln_f, start, t_peak, cut)
    };
    let right_end = if finite_hi && ln_f(hi) >= cut { hi } else { bisect_cross(ln_f, right, t_peak, cut) };

    // Scaled integrand is <= 1, so an absolute tolerance of rel_tol * width
    // bounds the relative error against the true integral up to the peak's
    // width fraction. Splitting at the peak keeps both halves monotone-ish.
    let g = |t: f64| (ln_f(t) - f_peak).exp();
    let width = right_end - left_cut;
    let integral = if t_peak > left_cut && t_peak < right_end {
        adaptive_simpson_abs(&g, left_cut, t_peak, 0.5 * rel_tol * width)
            + adaptive_simpson_abs(&g, t_peak, right_end, 0.5 * rel_tol * width)
    } else {
        adaptive_simpson_abs(&g, left_cut, right_end, rel_tol * width)
    };
    f_peak + integral.max(f64::MIN_POSITIVE).ln()
}

/// Bisection for `ln_f(t) = level` between an outside point and the peak.
fn bisect_cross<F: Fn(f64) -> f64>(ln_f: &F, mut outside: f64, mut inside: f64, level: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (outside + inside);
        if mid == outside || mid == inside {
            break;
        }
        if ln_f(mid) < level {
            outside = mid;
        } else {
            inside = mid;
        }
    }
    outside
}
