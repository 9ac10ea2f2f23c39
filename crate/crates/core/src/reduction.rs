//! Hypergraph planted-clique models and the detection-via-adaptation test.
//!
//! The test zooms a `d`-uniform hypergraph on `N = n1 * d` vertices into a
//! binary order-`d` tensor, turns each bit into a near-Gaussian entry with
//! the rejection kernel, denoises with a plug-in estimator and thresholds the
//! squared norm of the estimate.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use itertools::Itertools;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::{LatticeShape, Tensor};

/// A `D`-uniform hypergraph on vertices `0..N`; edges are sorted vertex lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    vertices: usize,
    uniformity: usize,
    edges: BTreeSet<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(vertices: usize, uniformity: usize, edges: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        if uniformity < 2 || uniformity > vertices {
            return Err(Error::InvalidParameter(format!(
                "uniformity {uniformity} must be in 2..={vertices}"
            )));
        }
        let mut set = BTreeSet::new();
        for mut e in edges {
            e.sort_unstable();
            if e.len() != uniformity || e.windows(2).any(|w| w[0] == w[1]) || e.iter().any(|&v| v >= vertices) {
                return Err(Error::InvalidParameter(format!("bad hyperedge {e:?}")));
            }
            if !set.insert(e.clone()) {
                return Err(Error::InvalidParameter(format!("duplicate hyperedge {e:?}")));
            }
        }
        Ok(Self { vertices, uniformity, edges: set })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn uniformity(&self) -> usize {
        self.uniformity
    }

    pub fn edges(&self) -> &BTreeSet<Vec<usize>> {
        &self.edges
    }

    pub fn contains(&self, edge: &[usize]) -> bool {
        self.edges.contains(edge)
    }

    /// Text format: `N D` on the first line, then one edge per line as `D`
    /// sorted 1-based vertex indices.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vertices, self.uniformity);
        for e in &self.edges {
            let _ = writeln!(out, "{}", e.iter().map(|v| (v + 1).to_string()).join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty hypergraph file".into()))?;
        let nums = parse_line(header)?;
        let [n, d] = nums[..] else {
            return Err(Error::Parse(format!("bad header {header:?}")));
        };
        let edges = lines
            .map(|l| {
                let e = parse_line(l)?;
                if e.contains(&0) {
                    return Err(Error::Parse(format!("vertex indices are 1-based: {l:?}")));
                }
                Ok(e.into_iter().map(|v| v - 1).collect())
            })
            .collect::<Result<Vec<Vec<usize>>>>()?;
        Self::new(n, d, edges)
    }
}

fn parse_line(line: &str) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("bad integer {t:?}: {e}"))))
        .collect()
}

/// All `D`-subsets of `0..N` in colexicographic order.
fn colex_subsets(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (0..n).combinations(d).collect();
    all.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
    all
}

fn check_model(n: usize, d: usize, p: f64) -> Result<()> {
    if d < 2 || d > n {
        return Err(Error::InvalidParameter(format!("need 2 <= D <= N, got D = {d}, N = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("edge probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Null model: every `D`-subset is an edge independently with probability `p`.
pub fn sample_null<R: Rng + ?Sized>(n: usize, d: usize, p: f64, rng: &mut R) -> Result<Hypergraph> {
    check_model(n, d, p)?;
    let edges: Vec<Vec<usize>> = colex_subsets(n, d)
        .into_iter()
        .filter(|_| rng.random::<f64>() < p)
        .collect();
    Hypergraph::new(n, d, edges)
}

/// A planted-clique draw together with the clique's vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedHypergraph {
    pub graph: Hypergraph,
    pub clique: Vec<usize>,
}

/// Planted model: `K` uniformly chosen vertices span a clique, every other
/// `D`-subset is an edge independently with probability `p`.
pub fn sample_planted<R: Rng + ?Sized>(n: usize, d: usize, p: f64, k: usize, rng: &mut R) -> Result<PlantedHypergraph> {
    check_model(n, d, p)?;
    if k < d || k > n {
        return Err(Error::InvalidParameter(format!("clique size {k} must be in {d}..={n}")));
    }
    let mut clique = rand::seq::index::sample(rng, n, k).into_vec();
    clique.sort_unstable();
    let mut member = vec![false; n];
    clique.iter().for_each(|&v| member[v] = true);
    let edges: Vec<Vec<usize>> = colex_subsets(n, d)
        .into_iter()
        .filter(|e| e.iter().all(|&v| member[v]) || rng.random::<f64>() < p)
        .collect();
    Ok(PlantedHypergraph { graph: Hypergraph::new(n, d, edges)?, clique })
}

/// Binary tensor of the hyperedges that take exactly one vertex from each
/// slab `{j n1, .., (j+1) n1 - 1}`: `Y(i) = 1` iff
/// `{i_1, i_2 + n1, .., i_d + (d-1) n1}` is an edge.
pub fn zoom_tensor(g: &Hypergraph, d: usize, n1: usize) -> Result<Tensor> {
    if g.uniformity() != d || g.vertices() != n1 * d {
        return Err(Error::ShapeMismatch(format!(
            "hypergraph (N = {}, D = {}) does not match d = {d}, n1 = {n1}",
            g.vertices(),
            g.uniformity()
        )));
    }
    let shape = LatticeShape::new(d, n1)?;
    let mut edge = vec![0; d];
    Tensor::from_fn(shape, |idx| {
        for (j, &i) in idx.iter().enumerate() {
            edge[j] = i + j * n1;
        }
        if g.contains(&edge) { 1.0 } else { 0.0 }
    })
}

/// Per-slab restrictions of a vertex set, shifted to `0..n1`.
pub fn slab_sets(vertices: &[usize], d: usize, n1: usize) -> Vec<Vec<usize>> {
    (0..d)
        .map(|j| {
            vertices
                .iter()
                .filter(|&&v| v >= j * n1 && v < (j + 1) * n1)
                .map(|&v| v - j * n1)
                .collect()
        })
        .collect()
}

/// Parameters of the Gaussian rejection kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RejectionKernelParams {
    pub rho: f64,
    pub p: f64,
    pub q: f64,
    pub iterations: usize,
}

impl RejectionKernelParams {
    pub fn new(rho: f64, p: f64, q: f64, iterations: usize) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidParameter(format!("rho {rho} must lie in (0, 1)")));
        }
        if !(q > 0.0 && q < p && p <= 1.0) {
            return Err(Error::InvalidParameter(format!("need 0 < q < p <= 1, got p = {p}, q = {q}")));
        }
        if iterations == 0 {
            return Err(Error::InvalidParameter("iteration cap must be at least 1".into()));
        }
        Ok(Self { rho, p, q, iterations })
    }

    /// `p = 1`, `q = 1/2` with the canonical `rho` and iteration count.
    pub fn canonical(d: usize, n1: usize) -> Self {
        Self { rho: canonical_rho(d, n1), p: 1.0, q: 0.5, iterations: canonical_iterations(d, n1) }
    }
}

/// `rho = log 2 / (2 sqrt(6 (d + 1) log n1 + 2 log 2))`.
pub fn canonical_rho(d: usize, n1: usize) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    ln2 / (2.0 * (6.0 * (d as f64 + 1.0) * (n1 as f64).ln() + 2.0 * ln2).sqrt())
}

/// `T = ceil(6 (d + 1) log n1 / log 2)`.
pub fn canonical_iterations(d: usize, n1: usize) -> usize {
    (6.0 * (d as f64 + 1.0) * (n1 as f64).ln() / std::f64::consts::LN_2).ceil() as usize
}

/// Maps a bit to a real number whose law is close to `N(0, 1)` when the bit
/// is `Ber(q)` and to `N(rho, 1)` when it is `Ber(p)`. Returns 0 when no
/// proposal is accepted within the iteration cap.
pub fn rejection_kernel<R: Rng + ?Sized>(bit: bool, params: &RejectionKernelParams, rng: &mut R) -> f64 {
    let RejectionKernelParams { rho, p, q, iterations } = *params;
    for _ in 0..iterations {
        let z: f64 = StandardNormal.sample(rng);
        if !bit {
            // phi_rho(z) / phi_0(z)
            let ratio = (rho * z - 0.5 * rho * rho).exp();
            if p >= q * ratio && rng.random::<f64>() < 1.0 - q * ratio / p {
                return z;
            }
        } else {
            let x = z + rho;
            // phi_0(x) / phi_rho(x)
            let ratio = (0.5 * rho * rho - rho * x).exp();
            if 1.0 - q >= (1.0 - p) * ratio && rng.random::<f64>() < 1.0 - (1.0 - p) * ratio / (1.0 - q) {
                return x;
            }
        }
    }
    0.0
}

/// Result of one run of the detection test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaOutcome {
    /// `||theta_hat||_2^2` (unnormalized).
    pub statistic: f64,
    /// `rho^2 (K / 2d)^d / 4`.
    pub threshold: f64,
    pub reject: bool,
}

/// Detection via adaptation on a `d`-uniform hypergraph with `N = n1 d`.
/// `estimator` denoises the kernel output; any tensor-to-tensor map works.
pub fn da_test<R, F>(g: &Hypergraph, k: usize, estimator: F, rng: &mut R) -> Result<DaOutcome>
where
    R: Rng + ?Sized,
    F: FnOnce(&Tensor) -> Result<Tensor>,
{
    let d = g.uniformity();
    if !g.vertices().is_multiple_of(d) {
        return Err(Error::ShapeMismatch(format!("N = {} is not a multiple of D = {d}", g.vertices())));
    }
    let n1 = g.vertices() / d;
    let bits = zoom_tensor(g, d, n1)?;
    let params = RejectionKernelParams::canonical(d, n1);
    let y = Tensor::new(
        bits.shape(),
        bits.values().iter().map(|&b| rejection_kernel(b != 0.0, &params, rng)).collect(),
    )?;
    let theta_hat = estimator(&y)?;
    if theta_hat.shape() != y.shape() {
        return Err(Error::ShapeMismatch("estimator changed the tensor shape".into()));
    }
    let statistic = theta_hat.sq_norm();
    let k_tilde = k as f64 / (2.0 * d as f64);
    let threshold = params.rho * params.rho * k_tilde.powi(d as i32) / 4.0;
    Ok(DaOutcome { statistic, threshold, reject: statistic >= threshold })
}

/// Oracle denoiser for the planted model: the mean of `y` over the product of
/// the clique's slab sets, placed on that product; zero elsewhere.
pub fn clique_block_oracle(y: &Tensor, clique: &[usize]) -> Result<Tensor> {
    let shape = y.shape();
    let sets = slab_sets(clique, shape.d(), shape.n1());
    let inside = |idx: &[usize]| idx.iter().zip(&sets).all(|(i, s)| s.contains(i));
    let strides = shape.strides();
    let mut sum = 0.0;
    let mut count = 0usize;
    let dims = shape.dims();
    let mut idx = vec![0; shape.d()];
    for off in 0..shape.n() {
        crate::tensor::unravel(&dims, off, &mut idx);
        if inside(&idx) {
            sum += y.values()[crate::tensor::offset(&strides, &idx)];
            count += 1;
        }
    }
    let mean = if count > 0 { sum / count as f64 } else { 0.0 };
    Tensor::from_fn(shape, |idx| if inside(idx) { mean } else { 0.0 })
}
