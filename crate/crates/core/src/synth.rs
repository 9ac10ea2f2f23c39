//! Ground-truth tensors and noisy observations.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iso::{is_monotone, lift};
use crate::order::OrderedPartition;
use crate::rng;
use crate::tensor::{apply_permutations, strides, unravel, LatticeShape, PermutationTuple, Tensor};

/// Per-axis sizes of the indifference sets: axis `j` is cut into
/// consecutive intervals of sizes `sizes[j][0], sizes[j][1], ..`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndifferenceSpec {
    d: usize,
    n1: usize,
    sizes: Vec<Vec<usize>>,
}

impl IndifferenceSpec {
    pub fn new(shape: LatticeShape, sizes: Vec<Vec<usize>>) -> Result<Self> {
        if sizes.len() != shape.d() {
            return Err(Error::InvalidPartition(format!(
                "{} size tuples for order {}",
                sizes.len(),
                shape.d()
            )));
        }
        for (j, k) in sizes.iter().enumerate() {
            if k.is_empty() || k.contains(&0) || k.iter().sum::<usize>() != shape.n1() {
                return Err(Error::InvalidPartition(format!(
                    "axis {j} sizes {k:?} must be positive and sum to {}",
                    shape.n1()
                )));
            }
        }
        Ok(Self { d: shape.d(), n1: shape.n1(), sizes })
    }

    /// The same size tuple on every axis.
    pub fn uniform(shape: LatticeShape, sizes: &[usize]) -> Result<Self> {
        Self::new(shape, vec![sizes.to_vec(); shape.d()])
    }

    pub fn shape(&self) -> LatticeShape {
        LatticeShape::new(self.d, self.n1).expect("validated at construction")
    }

    pub fn sizes(&self) -> &[Vec<usize>] {
        &self.sizes
    }

    /// Number of indifference sets per axis, `s_j`.
    pub fn block_counts(&self) -> Vec<usize> {
        self.sizes.iter().map(Vec::len).collect()
    }

    /// Total number of hyper-rectangles, `s = prod s_j`.
    pub fn total_blocks(&self) -> usize {
        self.block_counts().iter().product()
    }

    /// Largest indifference set on axis `j`.
    pub fn k_max(&self, j: usize) -> usize {
        self.sizes[j].iter().copied().max().unwrap_or(0)
    }

    /// `k* = min_j k_max(j)`.
    pub fn k_star(&self) -> usize {
        (0..self.d).map(|j| self.k_max(j)).min().unwrap_or(0)
    }

    pub fn partitions(&self) -> Vec<OrderedPartition> {
        self.sizes
            .iter()
            .map(|k| OrderedPartition::intervals(k).expect("validated at construction"))
            .collect()
    }
}

/// Lifts block values on the `s_1 x .. x s_d` block lattice to the full
/// lattice. Without explicit values the base tensor `sum_j x_j` (0-based
/// block coordinates) is used. Supplied values must be monotone.
pub fn base_indifference_tensor(spec: &IndifferenceSpec, block_values: Option<&[f64]>) -> Result<Tensor> {
    let dims = spec.block_counts();
    let cells: usize = dims.iter().product();
    let values = match block_values {
        Some(v) => {
            if v.len() != cells {
                return Err(Error::ShapeMismatch(format!("{} block values for {cells} blocks", v.len())));
            }
            if !is_monotone(&dims, v, 0.0) {
                return Err(Error::InvalidParameter("block values are not monotone".into()));
            }
            v.to_vec()
        }
        None => {
            let mut idx = vec![0; dims.len()];
            (0..cells)
                .map(|off| {
                    unravel(&dims, off, &mut idx);
                    idx.iter().sum::<usize>() as f64
                })
                .collect()
        }
    };
    lift(spec.shape(), &spec.partitions(), &values)
}

/// Random coordinate-wise nondecreasing tensor with entries in
/// `[-bound, bound]`: iid uniform increments, cumulated along every axis,
/// then affinely mapped onto the interval.
pub fn random_monotone_tensor<R: Rng + ?Sized>(shape: LatticeShape, bound: f64, rng: &mut R) -> Result<Tensor> {
    if !(bound.is_finite() && bound >= 0.0) {
        return Err(Error::InvalidParameter(format!("bound {bound} must be nonnegative")));
    }
    let dims = shape.dims();
    let st = strides(&dims);
    let mut v: Vec<f64> = (0..shape.n()).map(|_| rng.random::<f64>()).collect();
    let mut idx = vec![0; dims.len()];
    for j in 0..dims.len() {
        for off in 0..v.len() {
            unravel(&dims, off, &mut idx);
            if idx[j] > 0 {
                v[off] += v[off - st[j]];
            }
        }
    }
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let values = v
        .into_iter()
        .map(|x| if span > 0.0 { -bound + 2.0 * bound * (x - lo) / span } else { 0.0 })
        .map(|x| x.clamp(-bound, bound))
        .collect();
    Tensor::new(shape, values)
}

pub fn random_permutations<R: Rng + ?Sized>(shape: LatticeShape, rng: &mut R) -> PermutationTuple {
    let perms = (0..shape.d())
        .map(|_| {
            let mut p: Vec<usize> = (0..shape.n1()).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    PermutationTuple::new(perms).expect("shuffled identity is a permutation")
}

/// Where the latent permutations of an instance come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PermSource {
    Identity,
    Random,
    Given(PermutationTuple),
}

/// A noisy observation `Y = theta_star + noise_sd * eps`, where
/// `theta_star` is the monotone truth viewed along `true_perms`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub theta_star: Tensor,
    pub y: Tensor,
    pub true_perms: PermutationTuple,
    pub spec: Option<IndifferenceSpec>,
    pub noise_sd: f64,
    pub seed: Option<u64>,
}

pub fn make_instance<R: Rng + ?Sized>(
    truth: &Tensor,
    perms: PermSource,
    noise_sd: f64,
    rng: &mut R,
) -> Result<Instance> {
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise_sd {noise_sd} must be nonnegative")));
    }
    let shape = truth.shape();
    let true_perms = match perms {
        PermSource::Identity => PermutationTuple::identity(shape),
        PermSource::Random => random_permutations(shape, rng),
        PermSource::Given(p) => p,
    };
    let theta_star = apply_permutations(truth, &true_perms)?;
    let y = if noise_sd == 0.0 {
        theta_star.clone()
    } else {
        let noise: Vec<f64> = (0..shape.n())
            .map(|_| noise_sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect();
        theta_star.add(&Tensor::new(shape, noise)?)?
    };
    Ok(Instance { theta_star, y, true_perms, spec: None, noise_sd, seed: None })
}

/// [`make_instance`] on stream 0 of `seed`, recording the seed.
pub fn make_seeded_instance(truth: &Tensor, perms: PermSource, noise_sd: f64, seed: u64) -> Result<Instance> {
    let mut r = rng::stream(seed, 0);
    let mut inst = make_instance(truth, perms, noise_sd, &mut r)?;
    inst.seed = Some(seed);
    Ok(inst)
}

#[derive(Serialize, Deserialize)]
struct InstanceHeader {
    format: String,
    seed: Option<u64>,
    noise_sd: f64,
    perms: PermutationTuple,
    spec: Option<IndifferenceSpec>,
}

const INSTANCE_FORMAT: &str = "isoperm-instance-v1";

impl Instance {
    /// One JSON metadata line (0-based permutations), then `Y` and
    /// `theta_star` in the tensor text format.
    pub fn to_text(&self) -> String {
        let header = InstanceHeader {
            format: INSTANCE_FORMAT.into(),
            seed: self.seed,
            noise_sd: self.noise_sd,
            perms: self.true_perms.clone(),
            spec: self.spec.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        out.push_str(&self.y.to_text());
        out.push_str(&self.theta_star.to_text());
        out
    }

    pub fn from_text(text: &str) -> Result<Instance> {
        let (first, rest) = text.split_once('\n').ok_or_else(|| Error::Parse("missing header line".into()))?;
        let header: InstanceHeader =
            serde_json::from_str(first).map_err(|e| Error::Parse(format!("bad instance header: {e}")))?;
        if header.format != INSTANCE_FORMAT {
            return Err(Error::Parse(format!("unknown instance format {:?}", header.format)));
        }
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        let (y, used) = tensor_from_tokens(&tokens)?;
        let (theta_star, used2) = tensor_from_tokens(&tokens[used..])?;
        if used + used2 != tokens.len() {
            return Err(Error::Parse("trailing tokens after instance".into()));
        }
        let true_perms = PermutationTuple::new(header.perms.perms().to_vec())?;
        Ok(Instance { theta_star, y, true_perms, spec: header.spec, noise_sd: header.noise_sd, seed: header.seed })
    }
}

fn tensor_from_tokens(tokens: &[&str]) -> Result<(Tensor, usize)> {
    if tokens.len() < 2 {
        return Err(Error::Parse("missing tensor header".into()));
    }
    let d: usize = tokens[0].parse().map_err(|e| Error::Parse(format!("bad d: {e}")))?;
    let n1: usize = tokens[1].parse().map_err(|e| Error::Parse(format!("bad n1: {e}")))?;
    let shape = LatticeShape::new(d, n1)?;
    let end = 2 + shape.n();
    if tokens.len() < end {
        return Err(Error::Parse("truncated tensor".into()));
    }
    let text = tokens[..end].join(" ");
    Ok((Tensor::from_text(&text)?, end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::scores;
    use crate::iso::block_average;
    use crate::tensor::empirical_sq_loss;

    fn shape(d: usize, n1: usize) -> LatticeShape {
        LatticeShape::new(d, n1).unwrap()
    }

    #[test]
    fn spec_validation_and_summaries() {
        let s = shape(2, 5);
        assert!(IndifferenceSpec::new(s, vec![vec![2, 3]]).is_err());
        assert!(IndifferenceSpec::new(s, vec![vec![2, 2], vec![5]]).is_err());
        assert!(IndifferenceSpec::new(s, vec![vec![5, 0], vec![5]]).is_err());
        let spec = IndifferenceSpec::new(s, vec![vec![2, 3], vec![1, 1, 3]]).unwrap();
        assert_eq!(spec.block_counts(), vec![2, 3]);
        assert_eq!(spec.total_blocks(), 6);
        assert_eq!(spec.k_max(0), 3);
        assert_eq!(spec.k_star(), 3);
    }

    #[test]
    fn base_tensor_examples() {
        let spec = IndifferenceSpec::uniform(shape(2, 2), &[1, 1]).unwrap();
        assert_eq!(base_indifference_tensor(&spec, None).unwrap().values(), &[0.0, 1.0, 1.0, 2.0]);

        let spec = IndifferenceSpec::uniform(shape(3, 3), &[3]).unwrap();
        assert_eq!(base_indifference_tensor(&spec, None).unwrap(), Tensor::zeros(shape(3, 3)));

        let spec = IndifferenceSpec::uniform(shape(2, 4), &[2, 2]).unwrap();
        let t = base_indifference_tensor(&spec, None).unwrap();
        #[rustfmt::skip]
        let want = [
            0.0, 0.0, 1.0, 1.0,
            0.0, 0.0, 1.0, 1.0,
            1.0, 1.0, 2.0, 2.0,
            1.0, 1.0, 2.0, 2.0,
        ];
        assert_eq!(t.values(), &want);
        assert!(base_indifference_tensor(&spec, Some(&[1.0, 0.0, 2.0, 3.0])).is_err());
        assert!(base_indifference_tensor(&spec, Some(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn base_tensor_structure() {
        let spec = IndifferenceSpec::new(shape(3, 6), vec![vec![1, 2, 3], vec![4, 2], vec![6]]).unwrap();
        let t = base_indifference_tensor(&spec, None).unwrap();
        assert_eq!(block_average(&t, &spec.partitions()).unwrap(), t);
        for j in 0..3 {
            let tau = scores(&t, j).unwrap();
            let mut start = 0;
            let mut prev_level: Option<f64> = None;
            for &k in &spec.sizes()[j] {
                let level = tau[start];
                assert!(tau[start..start + k].iter().all(|&v| v == level));
                if let Some(p) = prev_level {
                    assert!(level > p);
                }
                prev_level = Some(level);
                start += k;
            }
        }
    }

    #[test]
    fn random_monotone_examples() {
        let mut r = rng::stream(5, 0);
        let z = random_monotone_tensor(shape(2, 4), 0.0, &mut r).unwrap();
        assert_eq!(z, Tensor::zeros(shape(2, 4)));
        for (d, n1) in [(1, 7), (2, 5), (3, 4)] {
            let t = random_monotone_tensor(shape(d, n1), 1.0, &mut r).unwrap();
            assert!(is_monotone(&shape(d, n1).dims(), t.values(), 0.0));
            assert!(t.values().iter().all(|v| v.abs() <= 1.0));
        }
        let a = random_monotone_tensor(shape(1, 3), 1.0, &mut rng::stream(9, 0)).unwrap();
        let b = random_monotone_tensor(shape(1, 3), 1.0, &mut rng::stream(9, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values()[0], -1.0);
        assert_eq!(a.values()[2], 1.0);
        assert!(a.values()[1] >= -1.0 && a.values()[1] <= 1.0);
    }

    #[test]
    fn instance_examples() {
        let spec = IndifferenceSpec::uniform(shape(2, 4), &[2, 2]).unwrap();
        let truth = base_indifference_tensor(&spec, None).unwrap();
        let mut r = rng::stream(1, 0);
        let inst = make_instance(&truth, PermSource::Identity, 0.0, &mut r).unwrap();
        assert_eq!(inst.y, truth);
        assert_eq!(inst.theta_star, truth);

        let reps = 400;
        let mean: f64 = (0..reps)
            .map(|i| {
                let inst = make_instance(&truth, PermSource::Random, 1.0, &mut rng::stream(2, i)).unwrap();
                empirical_sq_loss(&inst.y, &inst.theta_star).unwrap()
            })
            .sum::<f64>()
            / reps as f64;
        // Each loss averages 16 chi-square(1) draws: sd of the mean is sqrt(2/16/400).
        assert!((mean - 1.0).abs() < 3.0 * (2.0f64 / 16.0 / 400.0).sqrt(), "{mean}");
        assert!(make_instance(&truth, PermSource::Identity, -1.0, &mut r).is_err());
    }

    #[test]
    fn instance_text_round_trip() {
        let spec = IndifferenceSpec::uniform(shape(2, 3), &[1, 2]).unwrap();
        let truth = base_indifference_tensor(&spec, None).unwrap();
        let mut inst = make_seeded_instance(&truth, PermSource::Random, 0.5, 77).unwrap();
        inst.spec = Some(spec);
        let text = inst.to_text();
        assert_eq!(Instance::from_text(&text).unwrap(), inst);
        assert!(Instance::from_text("{}\n2 2 0 0 0 0").is_err());
    }
}
