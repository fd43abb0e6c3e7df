//! Experiment harness for the limit claims: rescaled cluster-count chains
//! against the limiting diffusion, the continuous-time chain against its
//! stationary diffusion, the stationary family against the limit as its
//! exponent vanishes, stationarity of the particle chain, and power-law tail
//! estimation.
//!
//! Everything is replicate-parallel with per-replicate generator streams and
//! deterministic aggregation, so results are bitwise reproducible for a given
//! seed regardless of worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffusion::{simulate_path, DiffusionError, DiffusionSpec};
use crate::moran::{
    ctmc_step, moran_step, KChainSampler, KChainState, MoranError, PopulationState,
};
use crate::partition::{
    alpha_diversity_sample, tv_distance, PartitionError, WeightSource,
};
use crate::rng::{role, stream};
use crate::weights::{ExactWeightTable, GGParams, WeightError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvergenceError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("empty sample")]
    EmptySample,
    #[error("sample of size {got} is below the required {need}")]
    InsufficientSample { got: usize, need: usize },
    #[error("degenerate sample: tail log-spacings are all zero")]
    DegenerateSample,
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Moran(#[from] MoranError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Distance between empirical laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    /// Kolmogorov-Smirnov: sup-norm of the ECDF difference.
    Ks,
    /// 1-Wasserstein: area between the ECDFs.
    W1,
}

/// Two-sample empirical distance. For equal sizes the W1 form reduces to the
/// mean absolute difference of sorted matched quantiles.
pub fn empirical_distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64, ConvergenceError> {
    if a.is_empty() || b.is_empty() {
        return Err(ConvergenceError::EmptySample);
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_unstable_by(|p, q| p.partial_cmp(q).expect("finite samples"));
    xb.sort_unstable_by(|p, q| p.partial_cmp(q).expect("finite samples"));
    Ok(match metric {
        Metric::Ks => ks_sorted(&xa, &xb),
        Metric::W1 => w1_sorted(&xa, &xb),
    })
}

fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup: f64 = 0.0;
    // sweep the merged support, consuming ties from both sides before
    // measuring; once one sample is exhausted the gap only shrinks
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

fn w1_sorted(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == b.len() {
        return a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
    }
    // area between ECDFs over the merged support
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut prev = f64::NAN;
    let mut area = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        if prev.is_finite() && x > prev {
            area += (x - prev) * (i as f64 / na - j as f64 / nb).abs();
        }
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        prev = x;
    }
    area
}

/// Distances between marginals, indexed by an axis (population sizes or
/// exponents) and a time grid, with split-half noise floors per time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceTable {
    pub axis_label: String,
    pub axis: Vec<f64>,
    pub times: Vec<f64>,
    /// `distances[axis_index][time_index]`
    pub distances: Vec<Vec<f64>>,
    /// split-half distance of the reference ensemble per time point
    pub noise_floors: Vec<f64>,
    pub metric: Metric,
    pub replicates: usize,
    pub seed: u64,
}

impl DistanceTable {
    /// Largest-axis distances do not exceed the smallest-axis ones beyond
    /// one noise floor, at every time point.
    pub fn trend_holds(&self) -> bool {
        self.times.iter().enumerate().all(|(t, _)| {
            let first = self.distances.first().map(|row| row[t]).unwrap_or(0.0);
            let last = self.distances.last().map(|row| row[t]).unwrap_or(0.0);
            last <= first + self.noise_floors[t]
        })
    }
}

fn split_half_distance(sample: &[f64], metric: Metric) -> Result<f64, ConvergenceError> {
    let a: Vec<f64> = sample.iter().copied().step_by(2).collect();
    let b: Vec<f64> = sample.iter().copied().skip(1).step_by(2).collect();
    empirical_distance(&a, &b, metric)
}

/// Shared scaffolding: coupled initial diversity draws and a diffusion
/// reference ensemble evaluated at the requested times.
fn coupled_initials(params: &GGParams, replicates: usize, seed: u64) -> Vec<f64> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, &[role::INITIAL, r]);
            alpha_diversity_sample(params, &mut rng)
        })
        .collect()
}

/// Diffusion ensemble marginals at `times` (row per time), with the
/// replicate's noise stream tagged independently of its initial draw.
#[allow(clippy::too_many_arguments)]
fn diffusion_marginals(
    params: &GGParams,
    gamma: f64,
    dt: f64,
    times: &[f64],
    s0: &[f64],
    seed: u64,
    noise_tag: u64,
) -> Result<Vec<Vec<f64>>, ConvergenceError> {
    let t_end = times.iter().cloned().fold(0.0_f64, f64::max).max(dt);
    let rows: Vec<Vec<f64>> = (0..s0.len() as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>, ConvergenceError> {
            let spec = DiffusionSpec::new(*params, gamma, dt, t_end, s0[r as usize])?;
            let mut rng = stream(seed, &[role::DIFFUSION, noise_tag, r]);
            let path = simulate_path(&spec, &mut rng)?;
            Ok(times
                .iter()
                .map(|&t| {
                    let idx = ((t / dt).round() as usize).min(path.states.len() - 1);
                    path.states[idx]
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;
    // transpose to time-major
    Ok(transpose(&rows, times.len()))
}

fn transpose(rows: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(rows.len()); width];
    for row in rows {
        for (t, &v) in row.iter().enumerate() {
            out[t].push(v);
        }
    }
    out
}

/// Configuration of [`scaling_experiment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub n_list: Vec<usize>,
    pub times: Vec<f64>,
    pub params: GGParams,
    pub replicates: usize,
    pub metric: Metric,
    /// Resolution of the diffusion reference ensemble.
    pub ref_dt: f64,
    pub seed: u64,
}

/// Rescaled cluster-count chains against the limiting diffusion.
///
/// Each replicate draws one initial diversity value `s0`; every chain starts
/// from `round(s0 n^alpha)` and the coupled diffusion from `s0` itself, so
/// the initial laws match by construction. Distances between the rescaled
/// chain marginal and the diffusion marginal are reported per `(n, t)`.
pub fn scaling_experiment(cfg: &ScalingConfig) -> Result<DistanceTable, ConvergenceError> {
    validate_times(&cfg.times)?;
    if cfg.n_list.is_empty() || cfg.replicates == 0 {
        return Err(ConvergenceError::Domain("need at least one n and one replicate".into()));
    }
    let s0 = coupled_initials(&cfg.params, cfg.replicates, cfg.seed);
    let reference =
        diffusion_marginals(&cfg.params, 0.0, cfg.ref_dt, &cfg.times, &s0, cfg.seed, 0)?;
    let noise_floors = reference
        .iter()
        .map(|m| split_half_distance(m, cfg.metric))
        .collect::<Result<Vec<_>, _>>()?;

    let mut distances = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let chain = chain_marginals(cfg, n, &s0)?;
        let row = chain
            .iter()
            .zip(&reference)
            .map(|(c, d)| empirical_distance(c, d, cfg.metric))
            .collect::<Result<Vec<_>, _>>()?;
        distances.push(row);
    }
    Ok(DistanceTable {
        axis_label: "n".into(),
        axis: cfg.n_list.iter().map(|&n| n as f64).collect(),
        times: cfg.times.clone(),
        distances,
        noise_floors,
        metric: cfg.metric,
        replicates: cfg.replicates,
        seed: cfg.seed,
    })
}

/// Rescaled-chain marginals (time-major) for one population size.
fn chain_marginals(
    cfg: &ScalingConfig,
    n: usize,
    s0: &[f64],
) -> Result<Vec<Vec<f64>>, ConvergenceError> {
    let alpha = cfg.params.alpha();
    let sampler = KChainSampler::new_approx(n, &cfg.params)?;
    let space = (n as f64).powf(alpha);
    let time_scale = (n as f64).powf(1.0 + alpha);
    let step_marks: Vec<u64> = cfg.times.iter().map(|&t| (time_scale * t).floor() as u64).collect();
    let max_step = step_marks.iter().copied().max().unwrap_or(0);

    let rows: Vec<Vec<f64>> = (0..s0.len() as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>, ConvergenceError> {
            let mut rng = stream(cfg.seed, &[role::CHAIN, n as u64, r]);
            let k0 = ((s0[r as usize] * space).round() as i64).clamp(1, n as i64) as usize;
            let mut state = KChainState::new(n, k0)?;
            let mut out = vec![0.0; cfg.times.len()];
            for (i, &mark) in step_marks.iter().enumerate() {
                if mark == 0 {
                    out[i] = state.k as f64 / space;
                }
            }
            for step in 1..=max_step {
                sampler.step(&mut state, &mut rng)?;
                for (i, &mark) in step_marks.iter().enumerate() {
                    if mark == step {
                        out[i] = state.k as f64 / space;
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    Ok(transpose(&rows, cfg.times.len()))
}

/// Configuration of [`gamma_limit_experiment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaLimitConfig {
    /// Exponents ordered toward zero.
    pub gamma_list: Vec<f64>,
    pub times: Vec<f64>,
    pub params: GGParams,
    pub replicates: usize,
    pub metric: Metric,
    pub dt: f64,
    pub seed: u64,
}

/// Stationary-family marginals against the limit diffusion as the tail
/// exponent decreases; coupled initials and shared noise streams.
pub fn gamma_limit_experiment(cfg: &GammaLimitConfig) -> Result<DistanceTable, ConvergenceError> {
    validate_times(&cfg.times)?;
    if cfg.gamma_list.is_empty() || cfg.replicates == 0 {
        return Err(ConvergenceError::Domain("need at least one gamma and one replicate".into()));
    }
    let s0 = coupled_initials(&cfg.params, cfg.replicates, cfg.seed);
    let reference = diffusion_marginals(&cfg.params, 0.0, cfg.dt, &cfg.times, &s0, cfg.seed, 0)?;
    let noise_floors = reference
        .iter()
        .map(|m| split_half_distance(m, cfg.metric))
        .collect::<Result<Vec<_>, _>>()?;
    let mut distances = Vec::with_capacity(cfg.gamma_list.len());
    for &gamma in &cfg.gamma_list {
        if gamma < 0.0 {
            return Err(ConvergenceError::Domain(format!("gamma must be >= 0, got {gamma}")));
        }
        // shared noise tag 0: the same driving streams as the reference
        let marg = diffusion_marginals(&cfg.params, gamma, cfg.dt, &cfg.times, &s0, cfg.seed, 0)?;
        let row = marg
            .iter()
            .zip(&reference)
            .map(|(a, b)| empirical_distance(a, b, cfg.metric))
            .collect::<Result<Vec<_>, _>>()?;
        distances.push(row);
    }
    Ok(DistanceTable {
        axis_label: "gamma".into(),
        axis: cfg.gamma_list.clone(),
        times: cfg.times.clone(),
        distances,
        noise_floors,
        metric: cfg.metric,
        replicates: cfg.replicates,
        seed: cfg.seed,
    })
}

/// Configuration of [`ctmc_limit_experiment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CtmcLimitConfig {
    pub n_list: Vec<usize>,
    pub gamma: f64,
    pub times: Vec<f64>,
    pub params: GGParams,
    pub replicates: usize,
    pub metric: Metric,
    pub ref_dt: f64,
    pub seed: u64,
}

/// Continuous-time count chains, rescaled, against the stationary diffusion
/// with the same exponent.
pub fn ctmc_limit_experiment(cfg: &CtmcLimitConfig) -> Result<DistanceTable, ConvergenceError> {
    validate_times(&cfg.times)?;
    if cfg.n_list.is_empty() || cfg.replicates == 0 {
        return Err(ConvergenceError::Domain("need at least one n and one replicate".into()));
    }
    if cfg.gamma <= 0.0 {
        return Err(ConvergenceError::Domain("the continuous-time family needs gamma > 0".into()));
    }
    let s0 = coupled_initials(&cfg.params, cfg.replicates, cfg.seed);
    let reference =
        diffusion_marginals(&cfg.params, cfg.gamma, cfg.ref_dt, &cfg.times, &s0, cfg.seed, 0)?;
    let noise_floors = reference
        .iter()
        .map(|m| split_half_distance(m, cfg.metric))
        .collect::<Result<Vec<_>, _>>()?;

    let mut distances = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let alpha = cfg.params.alpha();
        let space = (n as f64).powf(alpha);
        let time_scale = (n as f64).powf(1.0 + alpha);
        let rows: Vec<Vec<f64>> = (0..cfg.replicates as u64)
            .into_par_iter()
            .map(|r| -> Result<Vec<f64>, ConvergenceError> {
                let mut rng = stream(cfg.seed, &[role::CHAIN, n as u64, r]);
                let k0 = ((s0[r as usize] * space).round() as i64).max(1) as usize;
                // the count lives on the natural numbers; n only scales rates
                let mut state = KChainState { n, k: k0, step: 0 };
                let mut clock = 0.0_f64;
                let mut out = vec![0.0; cfg.times.len()];
                let raw_times: Vec<f64> = cfg.times.iter().map(|&t| t * time_scale).collect();
                let mut pending = 0usize;
                while pending < raw_times.len() && raw_times[pending] <= clock {
                    out[pending] = state.k as f64 / space;
                    pending += 1;
                }
                while pending < raw_times.len() {
                    let held = state.k;
                    let holding = ctmc_step(&mut state, &cfg.params, cfg.gamma, &mut rng)?;
                    let next_clock = clock + holding;
                    // the pre-jump value holds on [clock, next_clock)
                    while pending < raw_times.len() && raw_times[pending] < next_clock {
                        out[pending] = held as f64 / space;
                        pending += 1;
                    }
                    clock = next_clock;
                }
                Ok(out)
            })
            .collect::<Result<_, _>>()?;
        let marg = transpose(&rows, cfg.times.len());
        let row = marg
            .iter()
            .zip(&reference)
            .map(|(a, b)| empirical_distance(a, b, cfg.metric))
            .collect::<Result<Vec<_>, _>>()?;
        distances.push(row);
    }
    Ok(DistanceTable {
        axis_label: "n".into(),
        axis: cfg.n_list.iter().map(|&n| n as f64).collect(),
        times: cfg.times.clone(),
        distances,
        noise_floors,
        metric: cfg.metric,
        replicates: cfg.replicates,
        seed: cfg.seed,
    })
}

/// Initial condition of [`stationarity_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StationarityInitial {
    /// Urn sample (exact weights): the stationary law.
    Stationary,
    /// All types distinct: deliberately far from stationarity.
    AllDistinct,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationarityConfig {
    pub n: usize,
    pub steps: u64,
    /// Chain steps at which the count histogram is compared to step 0.
    pub checkpoints: Vec<u64>,
    pub params: GGParams,
    pub replicates: usize,
    pub initial: StationarityInitial,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationarityReport {
    pub n: usize,
    pub checkpoints: Vec<u64>,
    /// Total-variation distance of the count histogram to the step-0 one.
    pub tv: Vec<f64>,
    /// Split-half TV of the step-0 sample.
    pub noise_floor: f64,
    pub replicates: usize,
    pub seed: u64,
}

/// Runs replicate Moran chains and compares the count histogram at each
/// checkpoint with the initial one.
pub fn stationarity_experiment(
    cfg: &StationarityConfig,
) -> Result<StationarityReport, ConvergenceError> {
    if cfg.n == 0 || cfg.replicates == 0 {
        return Err(ConvergenceError::Domain("need n >= 1 and replicates >= 1".into()));
    }
    let mut checkpoints = cfg.checkpoints.clone();
    checkpoints.retain(|&c| c <= cfg.steps);
    checkpoints.sort_unstable();
    checkpoints.dedup();
    if checkpoints.is_empty() {
        checkpoints.push(cfg.steps);
    }
    let table = ExactWeightTable::build(&cfg.params, cfg.n.saturating_sub(1))?;
    let alpha = cfg.params.alpha();

    // per-replicate counts at step 0 and at each checkpoint
    let rows: Vec<Vec<usize>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, &[role::CHAIN, r]);
            let src = WeightSource::Exact(&table);
            let mut state = match cfg.initial {
                StationarityInitial::Stationary => {
                    PopulationState::sample(cfg.n, alpha, &src, &mut rng)
                }
                StationarityInitial::AllDistinct => PopulationState::all_distinct(cfg.n),
            };
            let mut ks = Vec::with_capacity(checkpoints.len() + 1);
            ks.push(state.k());
            let mut next = 0usize;
            while next < checkpoints.len() && checkpoints[next] == 0 {
                ks.push(state.k());
                next += 1;
            }
            for step in 1..=cfg.steps {
                moran_step(&mut state, alpha, &src, &mut rng);
                while next < checkpoints.len() && step == checkpoints[next] {
                    ks.push(state.k());
                    next += 1;
                }
            }
            ks
        })
        .collect();

    let hist = |idx: usize, filter: Option<usize>| -> Vec<u64> {
        let mut h = vec![0u64; cfg.n + 1];
        for (r, row) in rows.iter().enumerate() {
            if let Some(m) = filter {
                if r % 2 != m {
                    continue;
                }
            }
            h[row[idx]] += 1;
        }
        h
    };
    let base = hist(0, None);
    let floor = tv_distance(&hist(0, Some(0)), &hist(0, Some(1)));
    let tv = (1..=checkpoints.len())
        .map(|i| tv_distance(&base, &hist(i, None)))
        .collect();
    Ok(StationarityReport {
        n: cfg.n,
        checkpoints,
        tv,
        noise_floor: floor,
        replicates: cfg.replicates,
        seed: cfg.seed,
    })
}

/// Power-law exponent of a sample's density right tail.
///
/// Hill estimator on the top `tail_fraction` of the sample, shifted by one:
/// a sample with survival function `x^{-a}` (density tail `x^{-1-a}`)
/// yields `1 + a`, so stationary-family samples target `1 + gamma`.
pub fn tail_exponent_estimate(
    sample: &[f64],
    tail_fraction: f64,
) -> Result<f64, ConvergenceError> {
    const MIN_SAMPLE: usize = 10_000;
    if sample.len() < MIN_SAMPLE {
        return Err(ConvergenceError::InsufficientSample {
            got: sample.len(),
            need: MIN_SAMPLE,
        });
    }
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(ConvergenceError::Domain(format!(
            "tail fraction must lie in (0,1), got {tail_fraction}"
        )));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite sample"));
    let k = ((tail_fraction * sorted.len() as f64).ceil() as usize).max(2);
    let pivot = sorted[k];
    if !(pivot > 0.0) {
        return Err(ConvergenceError::Domain("tail estimation needs positive values".into()));
    }
    let mean_spacing: f64 =
        sorted[..k].iter().map(|&x| (x / pivot).ln()).sum::<f64>() / k as f64;
    if mean_spacing <= 0.0 {
        return Err(ConvergenceError::DegenerateSample);
    }
    Ok(1.0 + 1.0 / mean_spacing)
}

fn validate_times(times: &[f64]) -> Result<(), ConvergenceError> {
    if times.is_empty() {
        return Err(ConvergenceError::Domain("empty time grid".into()));
    }
    if times.iter().any(|&t| t < 0.0) || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConvergenceError::Domain(
            "times must be nonnegative and strictly increasing".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn distance_examples() {
        // identical samples
        for metric in [Metric::Ks, Metric::W1] {
            let d = empirical_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], metric).unwrap();
            assert_eq!(d, 0.0);
        }
        // disjoint point masses
        assert_eq!(empirical_distance(&[0.0, 0.0], &[1.0, 1.0], Metric::Ks).unwrap(), 1.0);
        assert_eq!(empirical_distance(&[0.0, 0.0], &[1.0, 1.0], Metric::W1).unwrap(), 1.0);
        // sorted-quantile matching
        assert_eq!(empirical_distance(&[0.0, 1.0], &[0.0, 2.0], Metric::W1).unwrap(), 0.5);
        assert!(empirical_distance(&[], &[1.0], Metric::Ks).is_err());
    }

    #[test]
    fn metric_axioms_on_random_samples() {
        let mut rng = stream(12, &[]);
        for _ in 0..50 {
            let a: Vec<f64> = (0..40).map(|_| rng.gen::<f64>() * 3.0).collect();
            let b: Vec<f64> = (0..25).map(|_| rng.gen::<f64>() * 3.0 + 0.5).collect();
            for metric in [Metric::Ks, Metric::W1] {
                let dab = empirical_distance(&a, &b, metric).unwrap();
                let dba = empirical_distance(&b, &a, metric).unwrap();
                assert!((dab - dba).abs() < 1e-12, "symmetry");
                assert!(dab >= 0.0);
                assert_eq!(empirical_distance(&a, &a, metric).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn w1_unequal_sizes_matches_quantile_form() {
        // duplicated sample must give the same distance as the original
        let a = [0.3, 0.9, 1.7];
        let a2 = [0.3, 0.3, 0.9, 0.9, 1.7, 1.7];
        let b = [0.5, 1.0, 2.0];
        let d1 = empirical_distance(&a, &b, Metric::W1).unwrap();
        let d2 = empirical_distance(&a2, &b, Metric::W1).unwrap();
        assert!((d1 - d2).abs() < 1e-12, "{d1} vs {d2}");
    }

    #[test]
    fn hill_estimator_on_synthetic_pareto() {
        // survival x^{-0.5} (density tail exponent 1.5): X = U^{-2}
        let mut rng = stream(4242, &[]);
        let sample: Vec<f64> = (0..200_000)
            .map(|_| {
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                u.powf(-2.0)
            })
            .collect();
        let est = tail_exponent_estimate(&sample, 0.01).unwrap();
        assert!((est - 1.5).abs() < 0.05, "estimate {est}");
    }

    #[test]
    fn hill_estimator_guards() {
        assert!(matches!(
            tail_exponent_estimate(&vec![1.0; 100], 0.01),
            Err(ConvergenceError::InsufficientSample { .. })
        ));
        assert!(matches!(
            tail_exponent_estimate(&vec![2.5; 20_000], 0.01),
            Err(ConvergenceError::DegenerateSample)
        ));
    }

    #[test]
    fn reproducibility_bitwise() {
        let params = GGParams::new(0.5, 1.0).unwrap();
        let cfg = ScalingConfig {
            n_list: vec![20, 40],
            times: vec![0.2, 0.5],
            params,
            replicates: 300,
            metric: Metric::W1,
            ref_dt: 1e-2,
            seed: 77,
        };
        let a = scaling_experiment(&cfg).unwrap();
        let b = scaling_experiment(&cfg).unwrap();
        assert_eq!(a.distances, b.distances);
        assert_eq!(a.noise_floors, b.noise_floors);
    }

    #[test]
    fn stationarity_zero_steps_is_zero_tv() {
        let params = GGParams::new(0.5, 1.0).unwrap();
        let cfg = StationarityConfig {
            n: 10,
            steps: 0,
            checkpoints: vec![],
            params,
            replicates: 500,
            initial: StationarityInitial::Stationary,
            seed: 5,
        };
        let rep = stationarity_experiment(&cfg).unwrap();
        // the only checkpoint collapses to step 0 (steps = 0 keeps none)
        assert!(rep.tv.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn gamma_zero_reference_distance_is_zero() {
        // gamma list containing 0 compares the reference with itself
        let params = GGParams::new(0.5, 1.0).unwrap();
        let cfg = GammaLimitConfig {
            gamma_list: vec![0.0],
            times: vec![0.3],
            params,
            replicates: 200,
            metric: Metric::W1,
            dt: 1e-2,
            seed: 3,
        };
        let table = gamma_limit_experiment(&cfg).unwrap();
        assert_eq!(table.distances[0][0], 0.0);
    }
}
