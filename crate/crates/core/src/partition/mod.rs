//! Exchangeable partitions under the generalised gamma prior: sequential urn
//! sampling, the exact law of the number of blocks, and the limiting
//! diversity distribution (sampler and density) in [`stable`].

mod stable;

pub use stable::{
    alpha_diversity_density, alpha_diversity_sample, alpha_diversity_sample_with_stats,
    positive_stable_sample, stable_density, TiltStats,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::{gen_factorial_ln_row, ln_gamma};
use crate::weights::{
    gg_weights_approx, ExactWeightTable, GGParams, GgWeightCalculator, WeightError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

/// Block structure of a sample: sizes, total, block count, singleton count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    block_sizes: Vec<u32>,
    n: usize,
    k: usize,
    m1: usize,
}

impl Partition {
    pub fn from_block_sizes(block_sizes: Vec<u32>) -> Result<Self, PartitionError> {
        if block_sizes.is_empty() || block_sizes.iter().any(|&s| s == 0) {
            return Err(PartitionError::Domain("block sizes must be positive".into()));
        }
        let n = block_sizes.iter().map(|&s| s as usize).sum();
        let k = block_sizes.len();
        let m1 = block_sizes.iter().filter(|&&s| s == 1).count();
        Ok(Partition { block_sizes, n, k, m1 })
    }

    pub fn block_sizes(&self) -> &[u32] {
        &self.block_sizes
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks (distinct types).
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of singleton blocks.
    pub fn m1(&self) -> usize {
        self.m1
    }

    /// Sizes as a sorted (descending) multiset, for order-free comparisons.
    pub fn sorted_sizes(&self) -> Vec<u32> {
        let mut v = self.block_sizes.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }
}

/// Where the urn draws its predictive weights from.
pub enum WeightSource<'a> {
    /// Exact table, precomputed up to the largest conditioning size needed.
    Exact(&'a ExactWeightTable),
    /// Second-order approximate weights, clamped and renormalised at use.
    Approx(GGParams),
    /// Exact table within its range, approximation beyond it -- how exact
    /// mode continues past the certified sum threshold, where the
    /// approximation error is `o(1/m)` anyway.
    Hybrid(&'a ExactWeightTable, GGParams),
}

impl WeightSource<'_> {
    /// `(g0, g1)` for a conditioning sample of size `m` with `k` blocks;
    /// `m = 0` is the empty sample, where the first draw is always new.
    #[inline]
    pub fn weights(&self, m: usize, k: usize) -> (f64, f64) {
        match self {
            WeightSource::Exact(t) => t.weights(m, k),
            WeightSource::Approx(p) => approx_clamped(m, k, p),
            WeightSource::Hybrid(t, p) => {
                if m <= t.max_m() {
                    t.weights(m, k)
                } else {
                    approx_clamped(m, k, p)
                }
            }
        }
    }
}

#[inline]
fn approx_clamped(m: usize, k: usize, p: &GGParams) -> (f64, f64) {
    if m == 0 {
        (1.0, 0.0)
    } else {
        let w = gg_weights_approx(m, k, p);
        (w.clamped.g0, w.clamped.g1)
    }
}

/// Sampling mode of [`urn_sample`].
///
/// Beyond the certified exact range both modes continue with the same
/// exact-head/approximate-tail sampler: early draws steer the almost-sure
/// limit of `K_n/n^alpha` (an early surplus propagates like `(i/i0)^alpha`),
/// so using the large-`m` approximation from the first draw would converge
/// to a visibly shifted diversity law. Within the range the modes differ as
/// named.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UrnMode {
    Exact,
    Approx,
}

/// Sequential predictive (urn) sample of size `n`: each draw starts a new
/// block with probability `g0(m, k)` or joins block `j` with probability
/// proportional to `g1(m, k) (n_j - alpha)`. Fresh blocks get consecutive
/// integer labels; the base measure is nonatomic so only the induced
/// partition is meaningful.
///
/// In approximate mode the clamped weights are renormalised to a probability
/// vector at each step. Exact mode precomputes a weight table (continuing
/// with the approximation past the certified range, where its error is
/// `o(1/m)`); batch callers should build the table once and use
/// [`urn_sample_with`].
pub fn urn_sample<R: Rng + ?Sized>(
    n: usize,
    params: &GGParams,
    mode: UrnMode,
    rng: &mut R,
) -> Result<Partition, PartitionError> {
    if n == 0 {
        return Err(PartitionError::Domain("sample size must be positive".into()));
    }
    let limit = crate::special::EXACT_N_LIMIT;
    if n.saturating_sub(1) > limit {
        let table = ExactWeightTable::build(params, limit)?;
        let src = WeightSource::Hybrid(&table, *params);
        return Ok(urn_sample_with(n, params.alpha(), &src, rng));
    }
    match mode {
        UrnMode::Exact => {
            let table = ExactWeightTable::build(params, n.saturating_sub(1))?;
            Ok(urn_sample_with(n, params.alpha(), &WeightSource::Exact(&table), rng))
        }
        UrnMode::Approx => {
            Ok(urn_sample_with(n, params.alpha(), &WeightSource::Approx(*params), rng))
        }
    }
}

/// Urn sample against a prepared weight source (hot path).
pub fn urn_sample_with<R: Rng + ?Sized>(
    n: usize,
    alpha: f64,
    weights: &WeightSource<'_>,
    rng: &mut R,
) -> Partition {
    let (_, sizes) = urn_assignments(n, alpha, weights, rng);
    Partition::from_block_sizes(sizes).expect("urn produced positive sizes")
}

/// The sequential draw itself, keeping per-individual labels: returns
/// `(assignments, block sizes)` with labels `0..k` in order of appearance.
pub(crate) fn urn_assignments<R: Rng + ?Sized>(
    n: usize,
    alpha: f64,
    weights: &WeightSource<'_>,
    rng: &mut R,
) -> (Vec<u32>, Vec<u32>) {
    let mut assignments: Vec<u32> = Vec::with_capacity(n);
    let mut sizes: Vec<u32> = Vec::new();
    for m in 0..n {
        let k = sizes.len();
        let (g0, g1) = weights.weights(m, k);
        let w_new = g0;
        let w_old = g1.max(0.0) * (m as f64 - alpha * k as f64);
        let total = w_new + w_old;
        let new_block = total <= 0.0 || rng.gen::<f64>() * total < w_new;
        if new_block {
            assignments.push(sizes.len() as u32);
            sizes.push(1);
        } else {
            let j = pick_size_biased_minus_alpha(&assignments, &sizes, alpha, rng);
            assignments.push(j);
            sizes[j as usize] += 1;
        }
    }
    (assignments, sizes)
}

/// Choose a block with probability proportional to `n_j - alpha` in O(1)
/// expected time: size-biased proposal (uniform member), thinned by
/// `(n_j - alpha)/n_j`.
#[inline]
fn pick_size_biased_minus_alpha<R: Rng + ?Sized>(
    assignments: &[u32],
    sizes: &[u32],
    alpha: f64,
    rng: &mut R,
) -> u32 {
    loop {
        let o = rng.gen_range(0..assignments.len());
        let j = assignments[o];
        let nj = sizes[j as usize] as f64;
        if nj == 1.0 {
            // acceptance probability (1 - alpha)/1
            if rng.gen::<f64>() < 1.0 - alpha {
                return j;
            }
        } else if rng.gen::<f64>() * nj < nj - alpha {
            return j;
        }
    }
}

/// Exact distribution of the number of blocks:
/// `P(K_n = k) = e^beta G(n,k,alpha) / (alpha Gamma(n)) *
///  sum_{i=0}^{n-1} C(n-1,i) (-1)^i beta^{i/alpha} Gamma(k - i/alpha; beta)`.
pub fn k_pmf(n: usize, k: usize, params: &GGParams) -> Result<f64, PartitionError> {
    let row = k_pmf_row(n, params)?;
    Ok(row[k - 1])
}

/// The whole pmf row `P(K_n = .)` over `k = 1..=n` (shared gamma ladders
/// make this barely more expensive than a single entry).
pub fn k_pmf_row(n: usize, params: &GGParams) -> Result<Vec<f64>, PartitionError> {
    if n == 0 {
        return Err(PartitionError::Domain("n must be positive".into()));
    }
    let mut calc = GgWeightCalculator::new(*params);
    let g_row = gen_factorial_ln_row(n, params.alpha());
    let ln_pref = params.beta() - params.alpha().ln() - ln_gamma(n as f64);
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let s2 = calc.pmf_sum(n, k)?;
        if s2.sign <= 0 {
            return Err(PartitionError::Domain(format!(
                "pmf sum came out nonpositive at (n={n}, k={k})"
            )));
        }
        let ln_p = ln_pref + g_row[k] + s2.ln_abs;
        out.push(ln_p.exp());
    }
    Ok(out)
}

/// `E[...]`-style helper: total-variation distance between two histograms
/// given as counts over a common support.
pub fn tv_distance(a: &[u64], b: &[u64]) -> f64 {
    let ta: f64 = a.iter().map(|&x| x as f64).sum();
    let tb: f64 = b.iter().map(|&x| x as f64).sum();
    let len = a.len().max(b.len());
    let mut acc = 0.0;
    for i in 0..len {
        let pa = a.get(i).copied().unwrap_or(0) as f64 / ta;
        let pb = b.get(i).copied().unwrap_or(0) as f64 / tb;
        acc += (pa - pb).abs();
    }
    0.5 * acc
}
