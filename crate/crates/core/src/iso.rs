//! Isotonic projections on (weighted) product lattices.
//!
//! The multivariate projection runs cyclic Dykstra over the axis-wise chain
//! constraints. Each axis step is an exact weighted PAVA on every 1D fiber,
//! and an optional box is one more Dykstra component. Projections are taken
//! in the weighted norm `sum_x w_x (v_x - mu_x)^2`.

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::order::OrderedPartition;
use crate::tensor::{strides, unravel, LatticeShape, Tensor};

/// Convergence tolerance on the l-infinity change of successive Dykstra sweeps.
pub const SWEEP_TOL: f64 = 1e-10;
/// Largest admissible monotonicity violation of a projection output.
pub const MONOTONE_TOL: f64 = 1e-9;
pub const MAX_SWEEPS: usize = 100_000;
/// Default cell cap of the exhaustive min-max oracle.
pub const ORACLE_CAP: usize = 9;

/// Product lattice with per-axis sizes and a positive weight on every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLattice {
    dims: Vec<usize>,
    weights: Vec<f64>,
}

impl WeightedLattice {
    pub fn new(dims: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidShape(format!("bad lattice dims {dims:?}")));
        }
        let cells: usize = dims.iter().product();
        if weights.len() != cells {
            return Err(Error::InvalidWeights(format!(
                "{} weights for {cells} cells",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {w} is not positive")));
        }
        Ok(Self { dims, weights })
    }

    pub fn unit(dims: Vec<usize>) -> Result<Self> {
        let cells = dims.iter().product();
        Self::new(dims, vec![1.0; cells])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }
}

/// Optional l-infinity radius intersected with the monotone cone.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoxBound(Option<f64>);

impl BoxBound {
    pub const NONE: BoxBound = BoxBound(None);

    pub fn radius(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!("box radius {r} must be positive")));
        }
        Ok(BoxBound(Some(r)))
    }

    pub fn get(&self) -> Option<f64> {
        self.0
    }

    pub fn clamp(&self, v: f64) -> f64 {
        match self.0 {
            Some(r) => v.clamp(-r, r),
            None => v,
        }
    }
}

/// Weighted pool-adjacent-violators: the weighted l2 projection of `values`
/// onto nondecreasing sequences.
pub fn pava(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} values vs {} weights",
            values.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::InvalidWeights(format!("weight {w} is not positive")));
    }
    let mut out = values.to_vec();
    let mut scratch = PavaScratch::default();
    scratch.run(&mut out, weights);
    Ok(out)
}

#[derive(Default)]
struct PavaScratch {
    // (weighted sum, total weight, length) per pooled block
    blocks: Vec<(f64, f64, usize)>,
}

impl PavaScratch {
    fn run(&mut self, values: &mut [f64], weights: &[f64]) {
        self.blocks.clear();
        for (&v, &w) in values.iter().zip(weights) {
            let mut cur = (v * w, w, 1usize);
            while let Some(&(s, tw, len)) = self.blocks.last() {
                if s / tw > cur.0 / cur.1 {
                    self.blocks.pop();
                    cur = (s + cur.0, tw + cur.1, len + cur.2);
                } else {
                    break;
                }
            }
            self.blocks.push(cur);
        }
        let mut i = 0;
        for &(s, tw, len) in &self.blocks {
            let mean = s / tw;
            values[i..i + len].fill(mean);
            i += len;
        }
    }
}

/// Start offsets of every fiber along `axis`.
fn fiber_starts(dims: &[usize], axis: usize) -> Vec<usize> {
    let cells: usize = dims.iter().product();
    let mut idx = vec![0; dims.len()];
    (0..cells)
        .filter(|&off| {
            unravel(dims, off, &mut idx);
            idx[axis] == 0
        })
        .collect()
}

/// Largest violation of the axis-wise order constraints `v(x) <= v(x + e_j)`.
pub fn max_violation(dims: &[usize], values: &[f64]) -> f64 {
    let st = strides(dims);
    let mut idx = vec![0; dims.len()];
    let mut worst: f64 = 0.0;
    for off in 0..values.len() {
        unravel(dims, off, &mut idx);
        for j in 0..dims.len() {
            if idx[j] + 1 < dims[j] {
                worst = worst.max(values[off] - values[off + st[j]]);
            }
        }
    }
    worst
}

/// True when every axis-wise order constraint holds up to `tol`.
pub fn is_monotone(dims: &[usize], values: &[f64], tol: f64) -> bool {
    max_violation(dims, values) <= tol
}

/// Weighted l2 projection of `values` onto coordinate-wise nondecreasing
/// arrays on `lattice` (intersected with the box when present).
pub fn isotonic_project_weighted(
    lattice: &WeightedLattice,
    values: &[f64],
    bound: BoxBound,
) -> Result<Vec<f64>> {
    if values.len() != lattice.cells() {
        return Err(Error::ShapeMismatch(format!(
            "{} values for {} cells",
            values.len(),
            lattice.cells()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let dims = lattice.dims();
    let st = strides(dims);
    // Axes of length one carry no constraint.
    let axes: Vec<usize> = (0..dims.len()).filter(|&j| dims[j] > 1).collect();
    let fibers: Vec<Vec<usize>> = axes.iter().map(|&j| fiber_starts(dims, j)).collect();
    let components = axes.len() + usize::from(bound.get().is_some());

    let mut x = values.to_vec();
    let mut scratch = PavaScratch::default();
    let mut buf = Vec::new();
    let mut wbuf = Vec::new();
    let project_axis = |x: &mut [f64], a: usize, scratch: &mut PavaScratch, buf: &mut Vec<f64>, wbuf: &mut Vec<f64>| {
        let j = axes[a];
        for &start in &fibers[a] {
            buf.clear();
            wbuf.clear();
            for t in 0..dims[j] {
                buf.push(x[start + t * st[j]]);
                wbuf.push(lattice.weights[start + t * st[j]]);
            }
            scratch.run(buf, wbuf);
            for t in 0..dims[j] {
                x[start + t * st[j]] = buf[t];
            }
        }
    };

    if components == 0 {
        return Ok(x);
    }
    if components == 1 {
        if axes.is_empty() {
            return Ok(x.into_iter().map(|v| bound.clamp(v)).collect());
        }
        project_axis(&mut x, 0, &mut scratch, &mut buf, &mut wbuf);
        return Ok(x);
    }

    let mut incr = vec![vec![0.0; x.len()]; components];
    let mut prev = x.clone();
    for _sweep in 0..MAX_SWEEPS {
        prev.copy_from_slice(&x);
        for (k, p) in incr.iter_mut().enumerate() {
            for (xi, pi) in x.iter_mut().zip(p.iter()) {
                *xi += pi;
            }
            // p holds x + p_k before projection; subtract the projection after.
            p.copy_from_slice(&x);
            if k < axes.len() {
                project_axis(&mut x, k, &mut scratch, &mut buf, &mut wbuf);
            } else {
                x.iter_mut().for_each(|v| *v = bound.clamp(*v));
            }
            for (pi, xi) in p.iter_mut().zip(&x) {
                *pi -= xi;
            }
        }
        let change = x.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change < SWEEP_TOL && max_violation(dims, &x) <= MONOTONE_TOL {
            break;
        }
    }
    Ok(x.into_iter().map(|v| bound.clamp(v)).collect())
}

/// Unit-weight projection of a balanced tensor onto isotonic tensors.
pub fn isotonic_project(t: &Tensor, bound: BoxBound) -> Result<Tensor> {
    let lattice = WeightedLattice::unit(t.shape().dims())?;
    Tensor::new(t.shape(), isotonic_project_weighted(&lattice, t.values(), bound)?)
}

/// Exact projection by the min-max formula
/// `f(x) = min_{L lower, x in L} max_{U upper, x in U} mean_w(L and U)`,
/// enumerating every lower set. Exponential; refuses lattices above `cap`.
pub fn isotonic_minmax_oracle_weighted(
    lattice: &WeightedLattice,
    values: &[f64],
    cap: usize,
) -> Result<Vec<f64>> {
    let cells = lattice.cells();
    if cells > cap || cells > 24 {
        return Err(Error::SizeCap(format!("{cells} cells exceeds oracle cap {}", cap.min(24))));
    }
    if values.len() != cells {
        return Err(Error::ShapeMismatch(format!("{} values for {cells} cells", values.len())));
    }
    let dims = lattice.dims();
    let st = strides(dims);
    let mut idx = vec![0; dims.len()];
    // Immediate predecessors of each cell as a bitmask.
    let pred: Vec<u32> = (0..cells)
        .map(|off| {
            unravel(dims, off, &mut idx);
            (0..dims.len())
                .filter(|&j| idx[j] > 0)
                .fold(0u32, |m, j| m | 1 << (off - st[j]))
        })
        .collect();
    let full: u32 = if cells == 32 { u32::MAX } else { (1u32 << cells) - 1 };
    let lower_sets: Vec<u32> = (0..=full)
        .filter(|&m| (0..cells).all(|x| m & (1 << x) == 0 || pred[x] & !m == 0))
        .collect();
    let upper_sets: Vec<u32> = lower_sets.iter().map(|m| full & !m).collect();

    let mean = |mask: u32| {
        let mut s = CompensatedSum::default();
        let mut w = CompensatedSum::default();
        for x in 0..cells {
            if mask & (1 << x) != 0 {
                s.add(lattice.weights[x] * values[x]);
                w.add(lattice.weights[x]);
            }
        }
        s.value() / w.value()
    };

    Ok((0..cells)
        .map(|x| {
            let bit = 1u32 << x;
            lower_sets
                .iter()
                .filter(|&&l| l & bit != 0)
                .map(|&l| {
                    upper_sets
                        .iter()
                        .filter(|&&u| u & bit != 0)
                        .map(|&u| mean(l & u))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

pub fn isotonic_minmax_oracle(t: &Tensor, cap: usize) -> Result<Tensor> {
    let lattice = WeightedLattice::unit(t.shape().dims())?;
    Tensor::new(t.shape(), isotonic_minmax_oracle_weighted(&lattice, t.values(), cap)?)
}

fn check_partitions(shape: LatticeShape, partitions: &[OrderedPartition]) -> Result<()> {
    if partitions.len() != shape.d() {
        return Err(Error::InvalidPartition(format!(
            "{} partitions for order {}",
            partitions.len(),
            shape.d()
        )));
    }
    if let Some(p) = partitions.iter().find(|p| p.n1() != shape.n1()) {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} indices, expected {}",
            p.n1(),
            shape.n1()
        )));
    }
    Ok(())
}

/// Block-lattice offset of every cell of the fine lattice.
fn block_index(shape: LatticeShape, partitions: &[OrderedPartition]) -> (Vec<usize>, Vec<usize>) {
    let block_dims: Vec<usize> = partitions.iter().map(OrderedPartition::card).collect();
    let bst = strides(&block_dims);
    let dims = shape.dims();
    let mut idx = vec![0; shape.d()];
    let map = (0..shape.n())
        .map(|off| {
            unravel(&dims, off, &mut idx);
            idx.iter()
                .enumerate()
                .map(|(j, &i)| bst[j] * partitions[j].rank()[i])
                .sum()
        })
        .collect();
    (map, block_dims)
}

/// Averages `t` over each hyper-rectangle of the product partition and
/// returns the block lattice (weights = block cardinalities) with the means.
pub fn collapse(t: &Tensor, partitions: &[OrderedPartition]) -> Result<(WeightedLattice, Vec<f64>)> {
    check_partitions(t.shape(), partitions)?;
    let (map, block_dims) = block_index(t.shape(), partitions);
    let blocks: usize = block_dims.iter().product();
    let mut sums = vec![CompensatedSum::default(); blocks];
    let mut counts = vec![0usize; blocks];
    for (&b, &v) in map.iter().zip(t.values()) {
        sums[b].add(v);
        counts[b] += 1;
    }
    let means = sums.iter().zip(&counts).map(|(s, &c)| s.value() / c as f64).collect();
    let weights = counts.into_iter().map(|c| c as f64).collect();
    Ok((WeightedLattice::new(block_dims, weights)?, means))
}

/// Spreads block values back onto the fine lattice.
pub fn lift(shape: LatticeShape, partitions: &[OrderedPartition], block_values: &[f64]) -> Result<Tensor> {
    check_partitions(shape, partitions)?;
    let (map, block_dims) = block_index(shape, partitions);
    if block_values.len() != block_dims.iter().product::<usize>() {
        return Err(Error::ShapeMismatch("block values do not match partition sizes".into()));
    }
    Tensor::new(shape, map.into_iter().map(|b| block_values[b]).collect())
}

/// Replaces every cell by the mean of its block.
pub fn block_average(t: &Tensor, partitions: &[OrderedPartition]) -> Result<Tensor> {
    let (_, means) = collapse(t, partitions)?;
    lift(t.shape(), partitions, &means)
}

/// Projection onto isotonic tensors that are constant on the blocks of the
/// product partition and nondecreasing along each partition's block order:
/// average on blocks, project on the weighted block lattice, lift back.
pub fn block_isotonic_project(
    t: &Tensor,
    partitions: &[OrderedPartition],
    bound: BoxBound,
) -> Result<Tensor> {
    let (lattice, means) = collapse(t, partitions)?;
    let fitted = isotonic_project_weighted(&lattice, &means, bound)?;
    lift(t.shape(), partitions, &fitted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(d: usize, n1: usize) -> LatticeShape {
        LatticeShape::new(d, n1).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn pava_examples() {
        assert_eq!(pava(&[1.0, 2.0, 3.0], &[1.0; 3]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(pava(&[3.0, 1.0, 2.0], &[1.0; 3]).unwrap(), vec![2.0, 2.0, 2.0]);
        assert_eq!(pava(&[4.0, 0.0], &[1.0, 3.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn pava_errors() {
        assert!(matches!(pava(&[1.0], &[1.0, 1.0]), Err(Error::ShapeMismatch(_))));
        assert!(matches!(pava(&[1.0, 2.0], &[1.0, 0.0]), Err(Error::InvalidWeights(_))));
        assert!(matches!(pava(&[1.0, 2.0], &[1.0, -2.0]), Err(Error::InvalidWeights(_))));
    }

    #[test]
    fn projection_examples() {
        let t = Tensor::new(shape(2, 2), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = isotonic_project(&t, BoxBound::NONE).unwrap();
        let third = 1.0 / 3.0;
        assert!(close(p.values(), &[third, third, third, 1.0], 1e-9), "{p:?}");

        let mono = Tensor::new(shape(2, 2), vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(isotonic_project(&mono, BoxBound::NONE).unwrap(), mono);

        let chain = Tensor::new(shape(1, 2), vec![-3.0, 3.0]).unwrap();
        let boxed = isotonic_project(&chain, BoxBound::radius(1.0).unwrap()).unwrap();
        assert_eq!(boxed.values(), &[-1.0, 1.0]);
    }

    #[test]
    fn oracle_examples() {
        let chain = Tensor::new(shape(1, 3), vec![3.0, 1.0, 2.0]).unwrap();
        assert!(close(isotonic_minmax_oracle(&chain, ORACLE_CAP).unwrap().values(), &[2.0; 3], 1e-12));
        let c = Tensor::filled(shape(2, 3), 1.5);
        assert_eq!(isotonic_minmax_oracle(&c, ORACLE_CAP).unwrap(), c);
        let t = Tensor::new(shape(2, 2), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let third = 1.0 / 3.0;
        assert!(close(
            isotonic_minmax_oracle(&t, ORACLE_CAP).unwrap().values(),
            &[third, third, third, 1.0],
            1e-12
        ));
        let big = Tensor::zeros(shape(2, 4));
        assert!(matches!(isotonic_minmax_oracle(&big, ORACLE_CAP), Err(Error::SizeCap(_))));
    }

    #[test]
    fn block_average_examples() {
        let t = Tensor::new(shape(2, 2), vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        let parts = [OrderedPartition::single(2), OrderedPartition::singletons(2)];
        assert_eq!(block_average(&t, &parts).unwrap().values(), &[3.0, 5.0, 3.0, 5.0]);
        let singles = [OrderedPartition::singletons(2), OrderedPartition::singletons(2)];
        assert_eq!(block_average(&t, &singles).unwrap(), t);
        let one = [OrderedPartition::single(2), OrderedPartition::single(2)];
        assert_eq!(block_average(&t, &one).unwrap().values(), &[4.0; 4]);
        assert!(block_average(&t, &one[..1]).is_err());
        assert!(block_average(&t, &[OrderedPartition::single(3), OrderedPartition::single(2)]).is_err());
    }

    #[test]
    fn block_projection_examples() {
        let t = Tensor::new(shape(2, 2), vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let one = [OrderedPartition::single(2), OrderedPartition::single(2)];
        assert_eq!(block_isotonic_project(&t, &one, BoxBound::NONE).unwrap().values(), &[0.5; 4]);
        let singles = [OrderedPartition::singletons(2), OrderedPartition::singletons(2)];
        assert_eq!(block_isotonic_project(&t, &singles, BoxBound::NONE).unwrap(), t);
    }

    #[test]
    fn block_projection_matches_oracle_on_random_3x3() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let t = Tensor::new(shape(2, 3), (0..9).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let parts: Vec<OrderedPartition> = (0..2)
                .map(|_| {
                    let ranks: Vec<usize> = (0..3).map(|_| rng.random_range(0..3)).collect();
                    let mut used = ranks.clone();
                    used.sort_unstable();
                    used.dedup();
                    OrderedPartition::from_ranks(
                        &ranks.iter().map(|r| used.binary_search(r).unwrap()).collect::<Vec<_>>(),
                    )
                    .unwrap()
                })
                .collect();
            let got = block_isotonic_project(&t, &parts, BoxBound::NONE).unwrap();
            let (lattice, means) = collapse(&t, &parts).unwrap();
            let want = lift(t.shape(), &parts, &isotonic_minmax_oracle_weighted(&lattice, &means, 9).unwrap()).unwrap();
            assert!(close(got.values(), want.values(), 1e-6));
        }
    }

    #[test]
    fn rectangular_weighted_lattice() {
        // 2x3 lattice, weights emphasise one corner.
        let lat = WeightedLattice::new(vec![2, 3], vec![5.0, 1.0, 1.0, 1.0, 1.0, 2.0]).unwrap();
        let v = [3.0, 0.0, 1.0, -1.0, 2.0, 0.5];
        let got = isotonic_project_weighted(&lat, &v, BoxBound::NONE).unwrap();
        let want = isotonic_minmax_oracle_weighted(&lat, &v, 9).unwrap();
        assert!(close(&got, &want, 1e-8), "{got:?} vs {want:?}");
        assert!(WeightedLattice::new(vec![2], vec![1.0, 0.0]).is_err());
        assert!(WeightedLattice::new(vec![2], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn pava_matches_oracle_on_small_grid(
            v in proptest::collection::vec((-2i32..=2).prop_map(f64::from), 1..=6),
        ) {
            let w = vec![1.0; v.len()];
            let lat = WeightedLattice::unit(vec![v.len()]).unwrap();
            let a = pava(&v, &w).unwrap();
            let b = isotonic_minmax_oracle_weighted(&lat, &v, 9).unwrap();
            prop_assert!(close(&a, &b, 1e-10));
        }

        #[test]
        fn pava_output_monotone_and_mean_preserving(
            v in proptest::collection::vec(-5.0f64..5.0, 1..30),
            w in proptest::collection::vec(0.1f64..3.0, 30),
        ) {
            let w = &w[..v.len()];
            let a = pava(&v, w).unwrap();
            prop_assert!(a.windows(2).all(|p| p[0] <= p[1] + 1e-12));
            let before: f64 = v.iter().zip(w).map(|(x, y)| x * y).sum();
            let after: f64 = a.iter().zip(w).map(|(x, y)| x * y).sum();
            prop_assert!((before - after).abs() < 1e-9);
        }

        #[test]
        fn projection_is_idempotent_and_nonexpansive(
            a in proptest::collection::vec(-3.0f64..3.0, 27),
            b in proptest::collection::vec(-3.0f64..3.0, 27),
        ) {
            let s = shape(3, 3);
            let ta = Tensor::new(s, a).unwrap();
            let tb = Tensor::new(s, b).unwrap();
            let pa = isotonic_project(&ta, BoxBound::NONE).unwrap();
            let pb = isotonic_project(&tb, BoxBound::NONE).unwrap();
            prop_assert!(is_monotone(&s.dims(), pa.values(), MONOTONE_TOL));
            let again = isotonic_project(&pa, BoxBound::NONE).unwrap();
            prop_assert!(close(again.values(), pa.values(), 1e-8));
            let d_in: f64 = ta.values().iter().zip(tb.values()).map(|(x, y)| (x - y).powi(2)).sum();
            let d_out: f64 = pa.values().iter().zip(pb.values()).map(|(x, y)| (x - y).powi(2)).sum();
            prop_assert!(d_out <= d_in + 1e-8);
        }
    }
}
