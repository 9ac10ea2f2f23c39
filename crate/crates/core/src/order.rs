//! Ordered partitions, comparison digraphs and antichain decomposition.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// A sequence of disjoint, nonempty blocks covering `0..n1`, with the rank
/// map `rank[i] = l` iff `i` is in `blocks[l]`. Block contents are kept
/// sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderedPartition {
    blocks: Vec<Vec<usize>>,
    rank: Vec<usize>,
}

impl OrderedPartition {
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n1: usize = blocks.iter().map(Vec::len).sum();
        let mut rank = vec![usize::MAX; n1];
        for (l, block) in blocks.iter_mut().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {l} is empty")));
            }
            block.sort_unstable();
            for &i in block.iter() {
                if i >= n1 || rank[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} is out of range or repeated"
                    )));
                }
                rank[i] = l;
            }
        }
        if n1 == 0 {
            return Err(Error::InvalidPartition("no indices".into()));
        }
        Ok(Self { blocks, rank })
    }

    /// Builds the partition from a rank map; ranks must cover `0..max+1`.
    pub fn from_ranks(rank: &[usize]) -> Result<Self> {
        let count = rank.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); count];
        for (i, &l) in rank.iter().enumerate() {
            blocks[l].push(i);
        }
        Self::new(blocks)
    }

    /// One block holding every index.
    pub fn single(n1: usize) -> Self {
        Self { blocks: vec![(0..n1).collect()], rank: vec![0; n1] }
    }

    /// Every index in its own block, in natural order.
    pub fn singletons(n1: usize) -> Self {
        Self { blocks: (0..n1).map(|i| vec![i]).collect(), rank: (0..n1).collect() }
    }

    /// Contiguous intervals of the given sizes, in order.
    pub fn intervals(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let blocks = sizes
            .iter()
            .map(|&k| {
                let b: Vec<usize> = (start..start + k).collect();
                start += k;
                b
            })
            .collect();
        Self::new(blocks)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn rank(&self) -> &[usize] {
        &self.rank
    }

    /// Number of blocks.
    pub fn card(&self) -> usize {
        self.blocks.len()
    }

    pub fn n1(&self) -> usize {
        self.rank.len()
    }

    /// Size of the largest block.
    pub fn max_block(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Relabels indices: index `i` moves to `q[i]`.
    pub fn relabel(&self, q: &[usize]) -> Result<Self> {
        Self::new(self.blocks.iter().map(|b| b.iter().map(|&i| q[i]).collect()).collect())
    }
}

/// Directed graph on `0..node_count` without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonDigraph {
    adj: Vec<Vec<usize>>,
}

impl ComparisonDigraph {
    pub fn empty(node_count: usize) -> Self {
        Self { adj: vec![Vec::new(); node_count] }
    }

    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(node_count);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.adj.len();
        if u == v || u >= n || v >= n {
            return Err(Error::InvalidParameter(format!("bad edge {u} -> {v} on {n} nodes")));
        }
        if !self.adj[u].contains(&v) {
            self.adj[u].push(v);
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// Kahn's algorithm; `None` when a cycle exists.
    fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.adj.len();
        let mut indeg = vec![0usize; n];
        for vs in &self.adj {
            for &v in vs {
                indeg[v] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &self.adj[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

pub fn has_cycle(g: &ComparisonDigraph) -> bool {
    g.topological_order().is_none()
}

/// Splits the vertices of a DAG into antichains by longest-path level:
/// block `l` holds the nodes whose longest incoming path has `l` edges.
/// The block count is one plus the longest path length, which is the
/// minimum number of antichains covering the graph.
pub fn mirsky_decompose(g: &ComparisonDigraph) -> Result<OrderedPartition> {
    let order = g.topological_order().ok_or(Error::Cyclic)?;
    let mut level = vec![0usize; g.node_count()];
    for &u in &order {
        for &v in &g.adj[u] {
            level[v] = level[v].max(level[u] + 1);
        }
    }
    OrderedPartition::from_ranks(&level)
}

/// Canonical permutation faithful to `b`: positions follow block rank, ties
/// inside a block broken by ascending index. `out[i]` is the position of `i`.
pub fn faithful_permutation(b: &OrderedPartition) -> Vec<usize> {
    let mut pos = vec![0; b.n1()];
    let mut next = 0;
    for block in b.blocks() {
        for &i in block {
            pos[i] = next;
            next += 1;
        }
    }
    pos
}

/// Edge thresholds of the comparison graph for a lattice with `n` cells and
/// order `d`: the score condition `8 sqrt(log n) n^((1 - 1/d)/2)` and the
/// entrywise condition `8 sqrt(log n)` (natural log).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub sum: f64,
    pub max: f64,
}

impl Thresholds {
    pub fn for_lattice(d: usize, n: usize) -> Self {
        let n = n as f64;
        let base = 8.0 * n.ln().sqrt();
        let sum = base * n.powf(0.5 * (1.0 - 1.0 / d as f64));
        Self { sum, max: base }
    }
}

/// Builds the comparison graph from the pairwise statistics: `u -> v` when
/// either statistic strictly exceeds its threshold. When that graph has a
/// cycle it is rebuilt from the score condition alone.
pub fn build_comparison_graph(
    sum_stats: &[Vec<f64>],
    max_stats: &[Vec<f64>],
    thresholds: Thresholds,
) -> ComparisonDigraph {
    let n1 = sum_stats.len();
    let build = |use_max: bool| {
        let mut g = ComparisonDigraph::empty(n1);
        for u in 0..n1 {
            for v in 0..n1 {
                if u == v {
                    continue;
                }
                if sum_stats[u][v] > thresholds.sum || (use_max && max_stats[u][v] > thresholds.max) {
                    g.adj[u].push(v);
                }
            }
        }
        g
    };
    let g = build(true);
    if has_cycle(&g) { build(false) } else { g }
}
