//! Exhaustive reference implementations for small inputs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::{global_lse_bruteforce, perm_projection_lse, permutation_lemma_check, residual};
use crate::iso::{
    block_average, block_isotonic_project, isotonic_minmax_oracle_weighted, isotonic_project,
    isotonic_project_weighted, BoxBound, WeightedLattice,
};
use crate::order::{faithful_permutation, has_cycle, mirsky_decompose, ComparisonDigraph, OrderedPartition};
use crate::rng::stream;
use crate::synth::{make_instance, random_monotone_tensor, PermSource};
use crate::tensor::{linf_distance, LatticeShape, PermutationTuple, Tensor};

/// `reach[u][v]` iff there is a nonempty directed path from `u` to `v`.
pub fn reachability(g: &ComparisonDigraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut reach: Vec<Vec<bool>> = (0..n).map(|u| (0..n).map(|v| g.has_edge(u, v)).collect()).collect();
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut().filter(|row| row[k]) {
            row.iter_mut().zip(&via).for_each(|(r, &v)| *r |= v);
        }
    }
    reach
}

/// Whether no two members of `set` are joined by a directed path.
pub fn is_antichain(reach: &[Vec<bool>], set: &[usize]) -> bool {
    set.iter().all(|&u| set.iter().all(|&v| !reach[u][v]))
}

/// Smallest number of antichains covering the vertices, found by trying
/// every colouring with 1, 2, .. colours. Exponential; meant for `n <= 8`.
pub fn min_antichain_partition_bruteforce(g: &ComparisonDigraph) -> usize {
    let n = g.node_count();
    if n == 0 {
        return 0;
    }
    let reach = reachability(g);
    let comparable = |u: usize, v: usize| reach[u][v] || reach[v][u];
    fn colour(v: usize, k: usize, colours: &mut Vec<usize>, comparable: &dyn Fn(usize, usize) -> bool) -> bool {
        if v == colours.len() {
            return true;
        }
        for c in 0..k {
            if (0..v).all(|u| colours[u] != c || !comparable(u, v)) {
                colours[v] = c;
                if colour(v + 1, k, colours, comparable) {
                    return true;
                }
            }
        }
        false
    }
    (1..=n)
        .find(|&k| colour(0, k, &mut vec![usize::MAX; n], &comparable))
        .expect("n colours always suffice")
}

/// Every labelled DAG on `n` nodes (all acyclic subsets of the ordered pairs).
pub fn all_dags(n: usize) -> Vec<ComparisonDigraph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v))).collect();
    assert!(pairs.len() < 31, "too many graphs to enumerate");
    (0u32..1 << pairs.len())
        .filter_map(|mask| {
            let edges: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e).collect();
            let g = ComparisonDigraph::from_edges(n, &edges).expect("no self-loops");
            (!has_cycle(&g)).then_some(g)
        })
        .collect()
}

/// A random DAG: forward edges of a random vertex order, each present with
/// a density drawn uniformly per graph.
pub fn random_dag<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComparisonDigraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let density: f64 = rng.random();
    let mut g = ComparisonDigraph::empty(n);
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < density {
                g.add_edge(order[a], order[b]).expect("distinct endpoints");
            }
        }
    }
    g
}

/// A uniformly random rank map on `0..n1` with ranks compressed to `0..k`.
pub fn random_partition<R: Rng + ?Sized>(n1: usize, rng: &mut R) -> OrderedPartition {
    let raw: Vec<usize> = (0..n1).map(|_| rng.random_range(0..n1)).collect();
    let mut used = raw.clone();
    used.sort_unstable();
    used.dedup();
    let ranks: Vec<usize> = raw.iter().map(|r| used.binary_search(r).expect("present")).collect();
    OrderedPartition::from_ranks(&ranks).expect("compressed ranks")
}

fn uniform_tensor<R: Rng + ?Sized>(shape: LatticeShape, rng: &mut R) -> Tensor {
    Tensor::new(shape, (0..shape.n()).map(|_| rng.random_range(-2.0..2.0)).collect()).expect("finite")
}

/// Outcome of one oracle suite.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub suite: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Largest observed discrepancy (0 for boolean suites).
    pub max_error: f64,
}

impl CheckResult {
    fn new(suite: &'static str) -> Self {
        Self { suite, trials: 0, failures: 0, max_error: 0.0 }
    }

    fn record(&mut self, error: f64, ok: bool) {
        self.trials += 1;
        self.max_error = self.max_error.max(error);
        self.failures += usize::from(!ok);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub const PROJECTION_TOL: f64 = 1e-6;
pub const COMPOSITION_TOL: f64 = 1e-8;
/// Allowance for the iterative solver's stopping tolerance in the
/// contraction inequality.
pub const CONTRACTION_SLACK: f64 = 1e-9;
pub const LSE_RESIDUAL_TOL: f64 = 1e-9;

/// Mirsky levels against exhaustive colouring on every labelled DAG with at
/// most 4 nodes (at least one) and `random_trials` random DAGs with 1 to 6 nodes. Both the
/// block count and the antichain property are checked.
pub fn check_mirsky(seed: u64, random_trials: usize) -> Result<CheckResult> {
    let mut res = CheckResult::new("mirsky");
    let mut rng = stream(seed, 0);
    let exhaustive = (1..=4).flat_map(all_dags);
    let random: Vec<ComparisonDigraph> = (0..random_trials)
        .map(|_| {
            let n = rng.random_range(1..=6);
            random_dag(n, &mut rng)
        })
        .collect();
    for g in exhaustive.chain(random) {
        let part = mirsky_decompose(&g)?;
        let reach = reachability(&g);
        let want = min_antichain_partition_bruteforce(&g);
        let ok = part.card() == want && part.blocks().iter().all(|b| is_antichain(&reach, b));
        res.record(part.card().abs_diff(want) as f64, ok);
    }
    Ok(res)
}

/// Lattice projection against the min-max formula on `trials` random
/// instances of each of 3x3, 2x2x2 and a 6-chain, in four variants: unit
/// weights, random weights, each with and without the box `[-1, 1]`. With
/// a uniform box the bounded projection is the clipped unbounded one.
pub fn check_projection(seed: u64, trials: usize) -> Result<CheckResult> {
    let mut res = CheckResult::new("projection");
    let mut rng = stream(seed, 1);
    let box1 = BoxBound::radius(1.0)?;
    for (d, n1) in [(2, 3), (3, 2), (1, 6)] {
        let shape = LatticeShape::new(d, n1)?;
        for _ in 0..trials {
            let t = uniform_tensor(shape, &mut rng);
            let unit = WeightedLattice::unit(shape.dims())?;
            let weights: Vec<f64> = (0..shape.n()).map(|_| rng.random_range(0.2..3.0)).collect();
            let weighted = WeightedLattice::new(shape.dims(), weights)?;
            for lattice in [&unit, &weighted] {
                let oracle = isotonic_minmax_oracle_weighted(lattice, t.values(), crate::iso::ORACLE_CAP)?;
                for bound in [BoxBound::NONE, box1] {
                    let got = if std::ptr::eq(lattice, &unit) {
                        isotonic_project(&t, bound)?.into_values()
                    } else {
                        isotonic_project_weighted(lattice, t.values(), bound)?
                    };
                    let err = got
                        .iter()
                        .zip(&oracle)
                        .map(|(g, o)| (g - bound.clamp(*o)).abs())
                        .fold(0.0, f64::max);
                    res.record(err, err <= PROJECTION_TOL);
                }
            }
        }
    }
    Ok(res)
}

/// Block projection against averaging, then projecting along faithful
/// permutations of the partitions, on random tensors with `d` in `{2, 3}`.
pub fn check_composition(seed: u64, trials: usize) -> Result<CheckResult> {
    let mut res = CheckResult::new("composition");
    let mut rng = stream(seed, 2);
    for trial in 0..trials {
        let (d, n1) = if trial % 2 == 0 { (2, rng.random_range(2..=6)) } else { (3, rng.random_range(2..=4)) };
        let shape = LatticeShape::new(d, n1)?;
        let t = uniform_tensor(shape, &mut rng);
        let parts: Vec<OrderedPartition> = (0..d).map(|_| random_partition(n1, &mut rng)).collect();
        let direct = block_isotonic_project(&t, &parts, BoxBound::NONE)?;
        let faithful = PermutationTuple::new(parts.iter().map(faithful_permutation).collect())?;
        let composed = perm_projection_lse(&block_average(&t, &parts)?, &faithful, BoxBound::NONE)?;
        let err = linf_distance(&direct, &composed)?;
        res.record(err, err <= COMPOSITION_TOL);
    }
    Ok(res)
}

/// `||op(A) - op(B)||_inf <= ||A - B||_inf` for block averaging, lattice
/// projection and block projection on random pairs.
pub fn check_contraction(seed: u64, trials: usize) -> Result<CheckResult> {
    let mut res = CheckResult::new("contraction");
    let mut rng = stream(seed, 3);
    for trial in 0..trials {
        let (d, n1) = [(1, 7), (2, 4), (3, 3)][trial % 3];
        let shape = LatticeShape::new(d, n1)?;
        let a = uniform_tensor(shape, &mut rng);
        let b = if rng.random_bool(0.5) {
            // Nearby pairs exercise the inequality at small scales too.
            let eps = uniform_tensor(shape, &mut rng).map(|v| 0.01 * v)?;
            a.add(&eps)?
        } else {
            uniform_tensor(shape, &mut rng)
        };
        let parts: Vec<OrderedPartition> = (0..d).map(|_| random_partition(n1, &mut rng)).collect();
        let dist = linf_distance(&a, &b)?;
        type Op<'a> = &'a dyn Fn(&Tensor) -> Result<Tensor>;
        let ops: [Op; 3] = [
            &|t| block_average(t, &parts),
            &|t| isotonic_project(t, BoxBound::NONE),
            &|t| block_isotonic_project(t, &parts, BoxBound::NONE),
        ];
        let mut worst = f64::NEG_INFINITY;
        for op in ops {
            worst = worst.max(linf_distance(&op(&a)?, &op(&b)?)? - dist);
        }
        res.record(worst.max(0.0), worst <= CONTRACTION_SLACK);
    }
    Ok(res)
}

/// Random instances of the permutation lemma premise: `a` sorted, `b` a
/// perturbation, and `pi` the ranks of `b + u` with `u` in `[0, tau)`,
/// which orders `i` before `j` whenever `b_j - b_i > tau`.
pub fn check_permutation_lemma(seed: u64, trials: usize) -> Result<CheckResult> {
    let mut res = CheckResult::new("permutation-lemma");
    let mut rng = stream(seed, 4);
    for _ in 0..trials {
        let n = rng.random_range(1..=12);
        let mut a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        if rng.random_bool(0.3) {
            // Ties in a.
            a.iter_mut().for_each(|v| *v = v.round());
        }
        a.sort_by(f64::total_cmp);
        let noise = rng.random_range(0.0..1.0);
        let b: Vec<f64> = a.iter().map(|v| v + noise * rng.random_range(-1.0..1.0)).collect();
        let tau = rng.random_range(1e-3..2.0);
        let key: Vec<f64> = b.iter().map(|v| v + rng.random_range(0.0..tau)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        order.sort_by(|&i, &j| key[i].total_cmp(&key[j]));
        let mut pi = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            pi[i] = pos;
        }
        let premise = (0..n).all(|i| (0..n).all(|j| b[j] - b[i] <= tau || pi[i] < pi[j]));
        if !premise {
            return Err(Error::InvalidParameter("generated pair violates the premise".into()));
        }
        res.record(0.0, permutation_lemma_check(&a, &b, tau, &pi));
    }
    Ok(res)
}

/// Brute-force least squares on noiseless permuted monotone 3x3 tensors
/// must fit exactly.
pub fn check_global_lse(seed: u64, trials: usize) -> Result<CheckResult> {
    let mut res = CheckResult::new("global-lse");
    let mut rng = stream(seed, 5);
    let shape = LatticeShape::new(2, 3)?;
    for _ in 0..trials {
        let truth = random_monotone_tensor(shape, 1.0, &mut rng)?;
        let inst = make_instance(&truth, PermSource::Random, 0.0, &mut rng)?;
        let fit = global_lse_bruteforce(&inst.y, BoxBound::NONE)?;
        let r = residual(&inst.y, &fit.theta_hat);
        res.record(r, r <= LSE_RESIDUAL_TOL);
    }
    Ok(res)
}

/// Every suite with `trials` random cases each (the Mirsky suite also
/// covers all small DAGs).
pub fn run_all(seed: u64, trials: usize) -> Result<Vec<CheckResult>> {
    Ok(vec![
        check_mirsky(seed, trials)?,
        check_projection(seed, trials)?,
        check_composition(seed, trials)?,
        check_contraction(seed, trials)?,
        check_permutation_lemma(seed, trials)?,
        check_global_lse(seed, trials)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::mirsky_decompose;
    use crate::rng::stream;

    #[test]
    fn dag_counts() {
        // Labelled DAG counts: 1, 1, 3, 25, 543.
        let counts: Vec<usize> = (0..=4).map(|n| all_dags(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 3, 25, 543]);
    }

    #[test]
    fn bruteforce_examples() {
        let chain = ComparisonDigraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(min_antichain_partition_bruteforce(&chain), 4);
        assert_eq!(min_antichain_partition_bruteforce(&ComparisonDigraph::empty(5)), 1);
        let diamond = ComparisonDigraph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(min_antichain_partition_bruteforce(&diamond), 3);
    }

    #[test]
    fn suites_pass_at_small_scale() {
        for r in run_all(3, 20).unwrap() {
            assert!(r.passed(), "{r:?}");
            assert!(r.trials >= 20);
        }
    }

    #[test]
    fn random_partitions_are_valid() {
        let mut r = stream(1, 0);
        for _ in 0..50 {
            let p = random_partition(5, &mut r);
            assert_eq!(p.n1(), 5);
        }
    }

    #[test]
    fn mirsky_matches_on_small_random_dags() {
        let mut r = stream(9, 0);
        for _ in 0..200 {
            let n = r.random_range(1..=6);
            let g = random_dag(n, &mut r);
            let reach = reachability(&g);
            let part = mirsky_decompose(&g).unwrap();
            assert_eq!(part.card(), min_antichain_partition_bruteforce(&g));
            assert!(part.blocks().iter().all(|b| is_antichain(&reach, b)));
        }
    }
}
