//! Random connected topologies and shortest-path route matrices.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::store_vector;
use crate::matrix::RouteMatrix;

/// Attempts at drawing a connected random graph before giving up.
pub const MAX_GRAPH_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// `n_links` edges drawn uniformly from all node pairs, redrawn until connected.
    #[default]
    Random,
    /// Node 0 linked to every other node; `n_links` must be `n_nodes - 1`.
    Star,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub n_nodes: usize,
    pub n_links: usize,
    pub uniform_lo: f64,
    pub uniform_hi: f64,
    #[serde(default = "yes")]
    pub shortest_path: bool,
    pub seed: u64,
    #[serde(default)]
    pub topology: Topology,
    /// Standard deviation of Gaussian noise added to the loads.
    #[serde(default)]
    pub noise_sigma: f64,
}

fn yes() -> bool {
    true
}

impl TopologySpec {
    /// Random topology with demands uniform on [100, 300].
    pub fn new(n_nodes: usize, n_links: usize, seed: u64) -> Self {
        TopologySpec {
            n_nodes,
            n_links,
            uniform_lo: 100.0,
            uniform_hi: 300.0,
            shortest_path: true,
            seed,
            topology: Topology::Random,
            noise_sigma: 0.0,
        }
    }

    pub fn star(n_nodes: usize, seed: u64) -> Self {
        TopologySpec { topology: Topology::Star, ..Self::new(n_nodes, n_nodes.saturating_sub(1), seed) }
    }

    pub fn n_demands(&self) -> usize {
        self.n_nodes * (self.n_nodes - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(Error::invalid(format!("need at least 2 nodes, got {}", self.n_nodes)));
        }
        if !(self.uniform_lo <= self.uniform_hi) || !(self.uniform_lo >= 0.0) {
            return Err(Error::invalid(format!(
                "demand range must satisfy 0 <= lo <= hi, got [{}, {}]",
                self.uniform_lo, self.uniform_hi
            )));
        }
        if self.n_links < self.n_nodes - 1 {
            return Err(Error::invalid(format!(
                "{} links cannot connect {} nodes",
                self.n_links, self.n_nodes
            )));
        }
        let max_links = self.n_nodes * (self.n_nodes - 1) / 2;
        if self.n_links > max_links {
            return Err(Error::invalid(format!(
                "{} links exceed the {max_links} node pairs",
                self.n_links
            )));
        }
        if self.topology == Topology::Star && self.n_links != self.n_nodes - 1 {
            return Err(Error::invalid("a star has exactly n_nodes - 1 links"));
        }
        if !self.shortest_path {
            return Err(Error::invalid("only shortest-path routing is implemented"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise_sigma must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub a: Arc<RouteMatrix>,
    pub x_true: Vec<f64>,
    pub b: Vec<f64>,
    pub spec: TopologySpec,
    /// Link endpoints `(u, v)` with `u < v`, indexed by row.
    pub links: Vec<(usize, usize)>,
    /// Ordered node pair of each demand, indexed by column.
    pub demands: Vec<(usize, usize)>,
}

/// Maps `k < N(N-1)/2` to the k-th pair `(u, v)`, `u < v`, in row-major order.
fn pair_from_index(mut k: usize, nodes: usize) -> (usize, usize) {
    let mut u = 0;
    loop {
        let row = nodes - 1 - u;
        if k < row {
            return (u, u + 1 + k);
        }
        k -= row;
        u += 1;
    }
}

fn adjacency(nodes: usize, links: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); nodes];
    for (id, &(u, v)) in links.iter().enumerate() {
        adj[u].push((v, id));
        adj[v].push((u, id));
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

fn connected(adj: &[Vec<(usize, usize)>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &(v, _) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == adj.len()
}

fn draw_links(spec: &TopologySpec, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    let nodes = spec.n_nodes;
    if spec.topology == Topology::Star {
        return Ok((1..nodes).map(|v| (0, v)).collect());
    }
    let total = nodes * (nodes - 1) / 2;
    for attempt in 0..MAX_GRAPH_ATTEMPTS {
        let mut links: Vec<(usize, usize)> =
            index::sample(rng, total, spec.n_links).into_iter().map(|k| pair_from_index(k, nodes)).collect();
        links.sort_unstable();
        if connected(&adjacency(nodes, &links)) {
            log::debug!("connected graph after {} draws", attempt + 1);
            return Ok(links);
        }
    }
    Err(Error::Topology(format!(
        "no connected graph with {} nodes and {} links after {MAX_GRAPH_ATTEMPTS} draws",
        nodes, spec.n_links
    )))
}

/// BFS tree from `src`; neighbours are scanned in increasing node order, so the
/// first-found parent gives the lexicographically smallest tie-break.
fn bfs_parents(adj: &[Vec<(usize, usize)>], src: usize) -> Vec<Option<(usize, usize)>> {
    let mut parent = vec![None; adj.len()];
    let mut seen = vec![false; adj.len()];
    seen[src] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &(v, link) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some((u, link));
                queue.push_back(v);
            }
        }
    }
    parent
}

pub fn generate_network(spec: &TopologySpec) -> Result<SyntheticInstance> {
    spec.validate()?;
    let nodes = spec.n_nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let links = draw_links(spec, &mut rng)?;
    let adj = adjacency(nodes, &links);

    let mut columns = Vec::with_capacity(spec.n_demands());
    let mut demands = Vec::with_capacity(spec.n_demands());
    for s in 0..nodes {
        let parent = bfs_parents(&adj, s);
        for t in (0..nodes).filter(|&t| t != s) {
            let mut col = Vec::new();
            let mut v = t;
            while let Some((u, link)) = parent[v] {
                col.push(link);
                v = u;
            }
            col.sort_unstable();
            columns.push(col);
            demands.push((s, t));
        }
    }
    let a = RouteMatrix::from_columns(links.len(), columns)?;

    let x_true: Vec<f64> = (0..a.cols())
        .map(|_| {
            if spec.uniform_hi > spec.uniform_lo {
                rng.gen_range(spec.uniform_lo..spec.uniform_hi)
            } else {
                spec.uniform_lo
            }
        })
        .collect();
    let mut b = a.matvec(&x_true)?;
    if spec.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
        for bi in &mut b {
            *bi += noise.sample(&mut rng);
        }
    }
    Ok(SyntheticInstance { a: Arc::new(a), x_true, b, spec: spec.clone(), links, demands })
}

impl SyntheticInstance {
    /// Writes `route.mtx`, `x_true.txt`, `b.txt` and `spec.json` into `dir`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.a.store_pattern(dir.join("route.mtx"))?;
        store_vector(dir.join("x_true.txt"), &self.x_true)?;
        store_vector(dir.join("b.txt"), &self.b)?;
        std::fs::write(dir.join("spec.json"), serde_json::to_string_pretty(&self.spec)?)?;
        Ok(())
    }
}
