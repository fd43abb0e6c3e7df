//! Population dynamics: the full Moran particle chain (one uniformly chosen
//! individual dies and is replaced by a predictive redraw from the remaining
//! sample), the reduced cluster-count chains in discrete and continuous time,
//! and the space-time rescaling map toward the diffusion limit.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::partition::{urn_assignments, Partition, PartitionError, WeightSource};
use crate::weights::{ExactWeightTable, GGParams, WeightError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoranError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("path covers {got} steps but the time grid needs {needed}")]
    PathTooShort { needed: usize, got: usize },
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// The particle configuration of the Moran chain: one type label per
/// individual, with block sizes and singleton count maintained incrementally.
#[derive(Debug, Clone)]
pub struct PopulationState {
    types: Vec<u32>,
    sizes: Vec<u32>,
    free_labels: Vec<u32>,
    k: usize,
    m1: usize,
    step: u64,
}

impl PopulationState {
    /// Stationary initial state: a sequential urn sample of size `n`.
    pub fn sample<R: Rng + ?Sized>(
        n: usize,
        alpha: f64,
        weights: &WeightSource<'_>,
        rng: &mut R,
    ) -> Self {
        let (types, sizes) = urn_assignments(n, alpha, weights, rng);
        let k = sizes.len();
        let m1 = sizes.iter().filter(|&&s| s == 1).count();
        PopulationState { types, sizes, free_labels: Vec::new(), k, m1, step: 0 }
    }

    /// All `n` individuals of distinct types (deliberately non-stationary).
    pub fn all_distinct(n: usize) -> Self {
        PopulationState {
            types: (0..n as u32).collect(),
            sizes: vec![1; n],
            free_labels: Vec::new(),
            k: n,
            m1: n,
            step: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.types.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn partition(&self) -> Partition {
        let sizes: Vec<u32> = self.sizes.iter().copied().filter(|&s| s > 0).collect();
        Partition::from_block_sizes(sizes).expect("live state has positive sizes")
    }

    #[inline]
    fn remove_individual(&mut self, i: usize) -> u32 {
        let label = self.types[i];
        let s = &mut self.sizes[label as usize];
        *s -= 1;
        match *s {
            0 => {
                self.k -= 1;
                self.m1 -= 1;
                self.free_labels.push(label);
            }
            1 => self.m1 += 1,
            _ => {}
        }
        label
    }

    #[inline]
    fn fresh_label(&mut self) -> u32 {
        match self.free_labels.pop() {
            Some(l) => {
                self.sizes[l as usize] = 1;
                l
            }
            None => {
                self.sizes.push(1);
                (self.sizes.len() - 1) as u32
            }
        }
    }
}

/// One Moran update: a uniformly chosen individual is removed and replaced by
/// a draw from the predictive distribution given the remaining `n - 1`
/// individuals (new type with probability `g0(n-1, k')`, copy of an existing
/// one with probability proportional to `g1(n-1, k') (n_j - alpha)`).
pub fn moran_step<R: Rng + ?Sized>(
    state: &mut PopulationState,
    alpha: f64,
    weights: &WeightSource<'_>,
    rng: &mut R,
) {
    let n = state.n();
    let i = rng.gen_range(0..n);
    state.remove_individual(i);
    let m = n - 1;
    let k_rest = state.k;

    let (g0, g1) = weights.weights(m, k_rest);
    let w_new = g0;
    let w_old = g1.max(0.0) * (m as f64 - alpha * k_rest as f64);
    let total = w_new + w_old;
    let new_type = total <= 0.0 || rng.gen::<f64>() * total < w_new;
    if new_type {
        let label = state.fresh_label();
        state.types[i] = label;
        state.k += 1;
        state.m1 += 1;
    } else {
        // choose a surviving individual uniformly, thin to `(n_j - alpha)/n_j`
        let j = loop {
            let o = rng.gen_range(0..n);
            if o == i {
                continue;
            }
            let cand = state.types[o];
            let nj = state.sizes[cand as usize] as f64;
            if rng.gen::<f64>() * nj < nj - alpha {
                break cand;
            }
        };
        state.types[i] = j;
        let s = &mut state.sizes[j as usize];
        *s += 1;
        if *s == 2 {
            state.m1 -= 1;
        }
    }
    state.step += 1;
}

/// State of the reduced cluster-count chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KChainState {
    pub n: usize,
    pub k: usize,
    pub step: u64,
}

impl KChainState {
    pub fn new(n: usize, k: usize) -> Result<Self, MoranError> {
        if n == 0 || k == 0 || k > n {
            return Err(MoranError::Domain(format!("need 1 <= k <= n, got n={n} k={k}")));
        }
        Ok(KChainState { n, k, step: 0 })
    }
}

/// Which transition rule the reduced chain follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KChainMode {
    /// Exact predictive weights with the singleton-count reduction
    /// `M_1 ~ alpha K` that makes the count a Markov chain.
    M1Reduced,
    /// Second-order approximate weights, clamped as the transition rule
    /// prescribes.
    Approx,
}

/// Transition probabilities `(p_up, p_down, p_stay)` of the reduced chain.
///
/// Clamping order: `p_up <- min(p_up, 1)`, `p_down <- max(p_down, 0)`, then
/// `p_up` is reduced first if the pair still sums above one, and the
/// boundary conditions `p(1 -> 0) = 0`, `p(n -> n+1) = 0` are enforced last.
pub fn kchain_transition_probs(
    n: usize,
    k: usize,
    params: &GGParams,
    mode: KChainMode,
) -> Result<(f64, f64, f64), MoranError> {
    match mode {
        KChainMode::Approx => {
            if k == 0 || k > n {
                return Err(MoranError::Domain(format!("need 1 <= k <= n, got n={n} k={k}")));
            }
            Ok(approx_transition_probs(n, k, params))
        }
        KChainMode::M1Reduced => {
            let sampler = KChainSampler::new_m1_reduced(n, params)?;
            sampler.probs(k)
        }
    }
}

fn approx_transition_probs(n: usize, k: usize, params: &GGParams) -> (f64, f64, f64) {
    let alpha = params.alpha();
    let beta = params.beta();
    let nf = n as f64;
    let kf = k as f64;
    let up_raw = if k < n {
        (1.0 - alpha * kf / nf) * (alpha * kf / (nf - 1.0) + beta / kf.powf(1.0 / alpha))
    } else {
        0.0
    };
    let down_raw = if k > 1 {
        let g1 = 1.0 / (nf - 1.0) - beta / ((nf - 1.0) * (kf - 1.0).powf(1.0 / alpha));
        (alpha * kf / nf) * (nf - 1.0 - alpha * (kf - 1.0)) * g1
    } else {
        0.0
    };
    clamp_probs(up_raw, down_raw, n, k)
}

fn clamp_probs(up_raw: f64, down_raw: f64, n: usize, k: usize) -> (f64, f64, f64) {
    let mut p_up = up_raw.min(1.0);
    let mut p_down = down_raw.max(0.0);
    if p_up + p_down > 1.0 {
        p_up = 1.0 - p_down;
    }
    if k == 1 {
        p_down = 0.0;
    }
    if k == n {
        p_up = 0.0;
    }
    let p_stay = (1.0 - p_up - p_down).max(0.0);
    (p_up, p_down, p_stay)
}

/// Reduced-chain stepper with the whole transition table precomputed, so a
/// step is two lookups and one uniform draw.
pub struct KChainSampler {
    n: usize,
    mode: KChainMode,
    /// `(p_up, p_up + p_down)` indexed by `k`
    cdf: Vec<(f64, f64)>,
}

impl KChainSampler {
    pub fn new_approx(n: usize, params: &GGParams) -> Result<Self, MoranError> {
        if n == 0 {
            return Err(MoranError::Domain("population size must be positive".into()));
        }
        let cdf = (0..=n)
            .map(|k| {
                if k == 0 {
                    (0.0, 0.0)
                } else {
                    let (u, d, _) = approx_transition_probs(n, k, params);
                    (u, u + d)
                }
            })
            .collect();
        Ok(KChainSampler { n, mode: KChainMode::Approx, cdf })
    }

    pub fn new_m1_reduced(n: usize, params: &GGParams) -> Result<Self, MoranError> {
        if n == 0 {
            return Err(MoranError::Domain("population size must be positive".into()));
        }
        let table = ExactWeightTable::build(params, n.saturating_sub(1))?;
        let alpha = params.alpha();
        let nf = n as f64;
        let cdf = (0..=n)
            .map(|k| {
                if k == 0 {
                    return (0.0, 0.0);
                }
                let kf = k as f64;
                let up_raw = if k < n {
                    (1.0 - alpha * kf / nf) * table.weights(n - 1, k).0
                } else {
                    0.0
                };
                let down_raw = if k > 1 {
                    (alpha * kf / nf)
                        * (nf - 1.0 - alpha * (kf - 1.0))
                        * table.weights(n - 1, k - 1).1
                } else {
                    0.0
                };
                let (u, d, _) = clamp_probs(up_raw, down_raw, n, k);
                (u, u + d)
            })
            .collect();
        Ok(KChainSampler { n, mode: KChainMode::M1Reduced, cdf })
    }

    pub fn mode(&self) -> KChainMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self, k: usize) -> Result<(f64, f64, f64), MoranError> {
        if k == 0 || k > self.n {
            return Err(MoranError::Domain(format!(
                "need 1 <= k <= n, got n={} k={k}",
                self.n
            )));
        }
        let (up, up_down) = self.cdf[k];
        Ok((up, up_down - up, 1.0 - up_down))
    }

    /// One transition of the count chain; the count moves by at most one.
    #[inline]
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &mut KChainState,
        rng: &mut R,
    ) -> Result<(), MoranError> {
        debug_assert!(state.k >= 1 && state.k <= self.n);
        let (up, up_down) = self.cdf[state.k];
        let u: f64 = rng.gen();
        if u < up {
            state.k += 1;
        } else if u < up_down {
            state.k -= 1;
        }
        state.step += 1;
        Ok(())
    }
}

/// One step of the reduced chain (convenience wrapper; hot loops should
/// reuse a [`KChainSampler`]).
pub fn kchain_step<R: Rng + ?Sized>(
    state: &mut KChainState,
    params: &GGParams,
    mode: KChainMode,
    rng: &mut R,
) -> Result<(), MoranError> {
    let sampler = match mode {
        KChainMode::Approx => KChainSampler::new_approx(state.n, params)?,
        KChainMode::M1Reduced => KChainSampler::new_m1_reduced(state.n, params)?,
    };
    sampler.step(state, rng)
}

/// Birth/death rates of the continuous-time count chain:
/// `lambda_up = alpha k^{1+gamma} / n^{1+alpha gamma} + beta / k^{1/alpha}`,
/// `lambda_down = alpha k^{1+gamma} / n^{1+alpha gamma}` (zero at `k = 1`).
pub fn ctmc_rates(n: usize, k: usize, params: &GGParams, gamma: f64) -> (f64, f64) {
    let alpha = params.alpha();
    let kf = k as f64;
    let sym = alpha * kf.powf(1.0 + gamma) / (n as f64).powf(1.0 + alpha * gamma);
    let up = sym + params.beta() / kf.powf(1.0 / alpha);
    let down = if k > 1 { sym } else { 0.0 };
    (up, down)
}

/// Gillespie step of the continuous-time chain: exponential holding time at
/// total rate, then a jump of exactly one up or down.
pub fn ctmc_step<R: Rng + ?Sized>(
    state: &mut KChainState,
    params: &GGParams,
    gamma: f64,
    rng: &mut R,
) -> Result<f64, MoranError> {
    if state.k == 0 {
        return Err(MoranError::Domain("count must be at least 1".into()));
    }
    let (up, down) = ctmc_rates(state.n, state.k, params, gamma);
    let total = up + down;
    let holding: f64 = rng.sample::<f64, _>(Exp1) / total;
    if rng.gen::<f64>() * total < up {
        state.k += 1;
    } else {
        state.k -= 1;
    }
    state.step += 1;
    Ok(holding)
}

/// A chain path mapped onto diffusion coordinates:
/// `values[j] = k(floor(n^{1+alpha} times[j])) / n^alpha`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RescaledPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub n: usize,
    pub alpha: f64,
}

/// Space-time rescaling of a stored discrete-time count path.
pub fn rescale_path(
    raw_counts: &[u32],
    n: usize,
    alpha: f64,
    time_grid: &[f64],
) -> Result<RescaledPath, MoranError> {
    let scale = (n as f64).powf(1.0 + alpha);
    let space = (n as f64).powf(alpha);
    let mut values = Vec::with_capacity(time_grid.len());
    for &t in time_grid {
        if t < 0.0 {
            return Err(MoranError::Domain(format!("negative time {t}")));
        }
        let idx = (scale * t).floor() as usize;
        match raw_counts.get(idx) {
            Some(&k) => values.push(k as f64 / space),
            None => {
                return Err(MoranError::PathTooShort {
                    needed: idx + 1,
                    got: raw_counts.len(),
                })
            }
        }
    }
    Ok(RescaledPath { times: time_grid.to_vec(), values, n, alpha })
}
