//! Estimators of a permuted isotonic tensor from a single noisy observation.
//!
//! All of them work from the per-axis score vectors (slice sums) and the
//! pairwise statistics built on them:
//!
//! - Mirsky partition (MP): cluster indices into ordered blocks with a
//!   thresholded comparison graph, then project onto isotonic tensors that
//!   are constant on the resulting hyper-rectangles.
//! - Borda count (BC): sort each axis by score and project onto the
//!   isotonic cone along those orders.
//! - Count-Randomize-Least-Squares (CRL): Borda order, corrected by the
//!   entrywise statistic, with the largest indistinguishable group shuffled
//!   at random before the projection.
//! - Brute-force global least squares over every permutation tuple, for tiny
//!   instances only.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::iso::{block_isotonic_project, isotonic_project, BoxBound};
use crate::numeric::CompensatedSum;
use crate::order::{build_comparison_graph, mirsky_decompose, OrderedPartition, Thresholds};
use crate::tensor::{apply_permutations, strides, unravel, PermutationTuple, Tensor};

/// Which procedure produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodTag {
    MirskyPartition,
    BordaCount,
    Crl,
    PermutationLse,
    GlobalLse,
}

/// Score differences and maximal entrywise slice differences along one axis.
///
/// `sum_diff[k][l] = tau(l) - tau(k)`; `max_diff[k][l]` is the largest value
/// of `Y(.., l, ..) - Y(.., k, ..)` over matching off-axis indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseStats {
    pub axis: usize,
    pub sum_diff: Vec<Vec<f64>>,
    pub max_diff: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub theta_hat: Tensor,
    pub partitions: Option<Vec<OrderedPartition>>,
    pub perms: Option<PermutationTuple>,
    pub method: MethodTag,
}

fn check_axis(y: &Tensor, axis: usize) -> Result<()> {
    if axis >= y.shape().d() {
        return Err(Error::AxisOutOfRange { axis, order: y.shape().d() });
    }
    Ok(())
}

/// Offsets of every fiber start along `axis` (cells with index 0 on it).
fn fiber_starts(y: &Tensor, axis: usize) -> Vec<usize> {
    let dims = y.shape().dims();
    let mut idx = vec![0; dims.len()];
    (0..y.shape().n())
        .filter(|&off| {
            unravel(&dims, off, &mut idx);
            idx[axis] == 0
        })
        .collect()
}

/// Slice sums along `axis`: `tau(k) = sum of Y over cells with i_axis = k`.
pub fn scores(y: &Tensor, axis: usize) -> Result<Vec<f64>> {
    check_axis(y, axis)?;
    let shape = y.shape();
    let stride = strides(&shape.dims())[axis];
    let mut acc = vec![CompensatedSum::default(); shape.n1()];
    for start in fiber_starts(y, axis) {
        for (k, a) in acc.iter_mut().enumerate() {
            a.add(y.values()[start + k * stride]);
        }
    }
    Ok(acc.iter().map(CompensatedSum::value).collect())
}

pub fn pairwise_stats(y: &Tensor, axis: usize) -> Result<PairwiseStats> {
    let tau = scores(y, axis)?;
    let n1 = y.shape().n1();
    let stride = strides(&y.shape().dims())[axis];
    let sum_diff = (0..n1).map(|k| (0..n1).map(|l| tau[l] - tau[k]).collect()).collect();
    let mut max_diff = vec![vec![f64::NEG_INFINITY; n1]; n1];
    let v = y.values();
    for start in fiber_starts(y, axis) {
        for k in 0..n1 {
            let yk = v[start + k * stride];
            for (l, m) in max_diff[k].iter_mut().enumerate() {
                *m = m.max(v[start + l * stride] - yk);
            }
        }
    }
    for (k, row) in max_diff.iter_mut().enumerate() {
        row[k] = 0.0;
    }
    Ok(PairwiseStats { axis, sum_diff, max_diff })
}

/// Mirsky partition estimator.
pub fn mirsky_partition_estimate(y: &Tensor, bound: BoxBound) -> Result<EstimateResult> {
    let shape = y.shape();
    let thresholds = Thresholds::for_lattice(shape.d(), shape.n());
    let partitions = (0..shape.d())
        .map(|j| {
            let stats = pairwise_stats(y, j)?;
            let g = build_comparison_graph(&stats.sum_diff, &stats.max_diff, thresholds);
            mirsky_decompose(&g)
        })
        .collect::<Result<Vec<_>>>()?;
    let theta_hat = block_isotonic_project(y, &partitions, bound)?;
    Ok(EstimateResult {
        theta_hat,
        partitions: Some(partitions),
        perms: None,
        method: MethodTag::MirskyPartition,
    })
}

/// Position map that sorts `tau` nondecreasingly, ties by ascending index:
/// `out[k]` is the position of index `k`.
pub fn borda_permutation(tau: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..tau.len()).collect();
    order.sort_by(|&a, &b| tau[a].total_cmp(&tau[b]).then(a.cmp(&b)));
    let mut pos = vec![0; tau.len()];
    for (p, &k) in order.iter().enumerate() {
        pos[k] = p;
    }
    pos
}

/// Least-squares projection of `y` onto tensors that are isotonic when
/// viewed along `p` (optionally intersected with the box). `p[j][i]` is the
/// latent position of index `i` on axis `j`.
pub fn perm_projection_lse(y: &Tensor, p: &PermutationTuple, bound: BoxBound) -> Result<Tensor> {
    let sorted = apply_permutations(y, &p.inverse())?;
    let fitted = isotonic_project(&sorted, bound)?;
    apply_permutations(&fitted, p)
}

pub fn borda_count_estimate(y: &Tensor, bound: BoxBound) -> Result<EstimateResult> {
    let perms = (0..y.shape().d())
        .map(|j| scores(y, j).map(|tau| borda_permutation(&tau)))
        .collect::<Result<Vec<_>>>()?;
    let perms = PermutationTuple::new(perms)?;
    let theta_hat = perm_projection_lse(y, &perms, bound)?;
    Ok(EstimateResult { theta_hat, partitions: None, perms: Some(perms), method: MethodTag::BordaCount })
}

/// Outcome of the CRL ordering step on one axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrlAxis {
    pub perm: Vec<usize>,
    /// The flip pass produced an inconsistent ordering; Borda order was kept.
    pub collision: bool,
    /// Indices that were shuffled (empty on collision).
    pub randomized: Vec<usize>,
}

/// Applies the entrywise flips to the Borda order. Returns the corrected
/// position map, or `None` when the flipped relation is not a total order.
fn crl_prune(borda: &[usize], max_diff: &[Vec<f64>], max_threshold: f64) -> Option<Vec<usize>> {
    let n1 = borda.len();
    // preceded_by[k] counts the indices placed before k.
    let mut preceded_by = vec![0usize; n1];
    for k in 0..n1 {
        for l in (k + 1)..n1 {
            let (first, second) = if borda[k] < borda[l] { (k, l) } else { (l, k) };
            // Flip when the later index is entrywise clearly below the earlier one.
            let flip = max_diff[second][first] > max_threshold;
            let later = if flip { first } else { second };
            preceded_by[later] += 1;
        }
    }
    // A tournament is transitive iff its in-degrees are exactly 0..n1.
    let mut seen = vec![false; n1];
    for &c in &preceded_by {
        if seen[c] {
            return None;
        }
        seen[c] = true;
    }
    Some(preceded_by)
}

/// Largest window of consecutive indices in Borda order whose members are
/// pairwise indistinguishable under both thresholds; leftmost on ties.
fn crl_window(borda: &[usize], stats: &PairwiseStats, thresholds: Thresholds) -> Vec<usize> {
    let n1 = borda.len();
    let mut order = vec![0; n1];
    for (k, &p) in borda.iter().enumerate() {
        order[p] = k;
    }
    let close = |a: usize, b: usize| {
        stats.sum_diff[a][b] <= thresholds.sum
            && stats.sum_diff[b][a] <= thresholds.sum
            && stats.max_diff[a][b] <= thresholds.max
            && stats.max_diff[b][a] <= thresholds.max
    };
    let mut best = (0, 1);
    for start in 0..n1 {
        let mut end = start + 1;
        while end < n1 && (start..end).all(|i| close(order[i], order[end])) {
            end += 1;
        }
        if end - start > best.1 - best.0 {
            best = (start, end);
        }
    }
    order[best.0..best.1].to_vec()
}

/// CRL ordering for one axis.
pub fn crl_axis<R: Rng + ?Sized>(y: &Tensor, axis: usize, rng: &mut R) -> Result<CrlAxis> {
    let shape = y.shape();
    let thresholds = Thresholds::for_lattice(shape.d(), shape.n());
    let stats = pairwise_stats(y, axis)?;
    let tau = scores(y, axis)?;
    let borda = borda_permutation(&tau);
    let Some(mut perm) = crl_prune(&borda, &stats.max_diff, thresholds.max) else {
        return Ok(CrlAxis { perm: borda, collision: true, randomized: Vec::new() });
    };
    let group = crl_window(&borda, &stats, thresholds);
    let mut slots: Vec<usize> = group.iter().map(|&k| perm[k]).collect();
    slots.shuffle(rng);
    for (&k, &slot) in group.iter().zip(&slots) {
        perm[k] = slot;
    }
    Ok(CrlAxis { perm, collision: false, randomized: group })
}

/// Count-Randomize-Least-Squares estimator. Randomness comes only from `rng`.
pub fn crl_estimate<R: Rng + ?Sized>(y: &Tensor, bound: BoxBound, rng: &mut R) -> Result<EstimateResult> {
    let perms = (0..y.shape().d())
        .map(|j| crl_axis(y, j, rng).map(|a| a.perm))
        .collect::<Result<Vec<_>>>()?;
    let perms = PermutationTuple::new(perms)?;
    let theta_hat = perm_projection_lse(y, &perms, bound)?;
    Ok(EstimateResult { theta_hat, partitions: None, perms: Some(perms), method: MethodTag::Crl })
}

pub const BRUTE_FORCE_MAX_N1: usize = 4;
pub const BRUTE_FORCE_MAX_D: usize = 3;

/// Exhaustive least squares over all `(n1!)^d` permutation tuples. Returns
/// the first minimizer in lexicographic tuple order.
pub fn global_lse_bruteforce(y: &Tensor, bound: BoxBound) -> Result<EstimateResult> {
    let shape = y.shape();
    if shape.n1() > BRUTE_FORCE_MAX_N1 || shape.d() > BRUTE_FORCE_MAX_D {
        return Err(Error::SizeCap(format!(
            "brute-force least squares needs n1 <= {BRUTE_FORCE_MAX_N1} and d <= {BRUTE_FORCE_MAX_D}, got n1 = {}, d = {}",
            shape.n1(),
            shape.d()
        )));
    }
    let n1 = shape.n1();
    let mut best: Option<(f64, Tensor, PermutationTuple)> = None;
    for tuple in (0..shape.d()).map(|_| (0..n1).permutations(n1)).multi_cartesian_product() {
        let p = PermutationTuple::new(tuple)?;
        let fit = perm_projection_lse(y, &p, bound)?;
        let resid = y.values().iter().zip(fit.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let better = match &best {
            None => true,
            Some((r, _, _)) => resid < *r - 1e-12 * (1.0 + r.abs()),
        };
        if better {
            best = Some((resid, fit, p));
        }
    }
    let (_, theta_hat, perms) = best.expect("at least one permutation tuple");
    Ok(EstimateResult { theta_hat, partitions: None, perms: Some(perms), method: MethodTag::GlobalLse })
}

/// Residual sum of squares `||y - theta||^2`.
pub fn residual(y: &Tensor, theta: &Tensor) -> f64 {
    y.values().iter().zip(theta.values()).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Deterministic bound for permutations that respect a noisy ordering.
///
/// With `a` nondecreasing and `pi` satisfying `pi(i) < pi(j)` whenever
/// `b_j - b_i > tau`, returns whether `max_i |a_{pi(i)} - a_i| <= tau + 2 ||b - a||_inf`.
/// The premise is the caller's responsibility.
pub fn permutation_lemma_check(a: &[f64], b: &[f64], tau: f64, pi: &[usize]) -> bool {
    let dev = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let bound = tau + 2.0 * dev;
    let worst = (0..a.len()).map(|i| (a[pi[i]] - a[i]).abs()).fold(0.0, f64::max);
    // Slack for rounding in the subtractions above.
    worst <= bound + 1e-12 * (1.0 + bound.abs())
}
