//! Community partitioning: a multilevel k-way partitioner, external
//! partition import, aggregation weights, and graph coarsening.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;

/// Allowed imbalance of community node counts around the even split.
const BALANCE_SLACK: f64 = 0.10;
/// Boundary refinement sweeps per level.
const REFINE_PASSES: usize = 8;

/// Hard node-to-community assignment with per-node aggregation weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: Vec<usize>,
    num_communities: usize,
    sizes: Vec<usize>,
    /// Aggregation weight of each node inside its community.
    weights: Vec<f64>,
    /// Member lists per community, in ascending node order.
    members: Vec<Vec<usize>>,
}

/// How per-node aggregation weights are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// 1 / |community|; community features become masked means.
    Mean,
    /// Constant 1.
    Unit,
}

impl Partition {
    /// Build from a raw assignment; ids are compacted to `[0, m)` in order
    /// of first appearance. Weights start in `Mean` mode.
    pub fn from_assignment(raw: &[usize]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Argument("empty assignment".into()));
        }
        let mut remap: Vec<Option<usize>> = Vec::new();
        let mut assignment = Vec::with_capacity(raw.len());
        let mut next = 0usize;
        for &c in raw {
            if c >= remap.len() {
                remap.resize(c + 1, None);
            }
            let id = *remap[c].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
            assignment.push(id);
        }
        let num_communities = next;
        let mut sizes = vec![0usize; num_communities];
        let mut members = vec![Vec::new(); num_communities];
        for (v, &c) in assignment.iter().enumerate() {
            sizes[c] += 1;
            members[c].push(v);
        }
        let mut p = Self {
            assignment,
            num_communities,
            sizes,
            weights: Vec::new(),
            members,
        };
        p.set_weights(WeightMode::Mean);
        Ok(p)
    }

    /// Build keeping community ids exactly as given; every id in `[0, m)`
    /// must appear at least once.
    pub fn from_assignment_in_id_order(raw: &[usize], m: usize) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Argument("empty assignment".into()));
        }
        let mut sizes = vec![0usize; m];
        let mut members = vec![Vec::new(); m];
        for (v, &c) in raw.iter().enumerate() {
            if c >= m {
                return Err(Error::Argument(format!(
                    "community id {c} out of range [0, {m})"
                )));
            }
            sizes[c] += 1;
            members[c].push(v);
        }
        if let Some(empty) = (0..m).find(|&c| sizes[c] == 0) {
            return Err(Error::Argument(format!("community {empty} is empty")));
        }
        let mut p = Self {
            assignment: raw.to_vec(),
            num_communities: m,
            sizes,
            weights: Vec::new(),
            members,
        };
        p.set_weights(WeightMode::Mean);
        Ok(p)
    }

    /// Fill aggregation weights for the given mode.
    pub fn set_weights(&mut self, mode: WeightMode) {
        self.weights = self
            .assignment
            .iter()
            .map(|&c| match mode {
                WeightMode::Mean => 1.0 / self.sizes[c] as f64,
                WeightMode::Unit => 1.0,
            })
            .collect();
    }

    pub fn num_nodes(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_communities(&self) -> usize {
        self.num_communities
    }

    pub fn community_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn members(&self, c: usize) -> &[usize] {
        &self.members[c]
    }

    /// Sum of member weights per community (1 in `Mean` mode).
    pub fn community_weight_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.num_communities];
        for (v, &c) in self.assignment.iter().enumerate() {
            sums[c] += self.weights[v];
        }
        sums
    }
}

/// Community-level adjacency produced by aggregating node adjacency over
/// the partition, with optional normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarsenedGraph {
    pub matrix: Array2<f64>,
    pub normalization: CoarsenNormalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarsenNormalization {
    /// Endpoint counts: diagonal = 2x intra edges, off-diagonal = cross edges.
    Raw,
    /// Each row divided by its sum.
    Row,
    /// D^{-1/2} A D^{-1/2} on the raw counts.
    Symmetric,
}

impl CoarsenedGraph {
    pub fn num_communities(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Aggregate the node adjacency into community space and normalize.
pub fn coarsen(
    g: &SparseGraph,
    p: &Partition,
    normalization: CoarsenNormalization,
) -> CoarsenedGraph {
    let m = p.num_communities();
    let mut matrix = Array2::<f64>::zeros((m, m));
    for (u, v) in g.edge_list() {
        let (cu, cv) = (p.community_of(u), p.community_of(v));
        matrix[[cu, cv]] += 1.0;
        matrix[[cv, cu]] += 1.0;
    }
    match normalization {
        CoarsenNormalization::Raw => {}
        CoarsenNormalization::Row => {
            for mut row in matrix.rows_mut() {
                let s: f64 = row.sum();
                if s > 0.0 {
                    row.mapv_inplace(|x| x / s);
                }
            }
        }
        CoarsenNormalization::Symmetric => {
            let inv_sqrt: Vec<f64> = matrix
                .rows()
                .into_iter()
                .map(|row| {
                    let s = row.sum();
                    if s > 0.0 {
                        1.0 / s.sqrt()
                    } else {
                        0.0
                    }
                })
                .collect();
            for i in 0..m {
                for j in 0..m {
                    matrix[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
                }
            }
        }
    }
    CoarsenedGraph {
        matrix,
        normalization,
    }
}

/// Load an external partition (one community id per line, `n` lines);
/// ids are compacted preserving grouping.
pub fn load_partition(path: &std::path::Path, n: usize) -> Result<Partition> {
    let raw = crate::io::read_partition_file(path)?;
    if raw.len() != n {
        return Err(Error::Input(format!(
            "partition file has {} lines, expected {n}",
            raw.len()
        )));
    }
    Partition::from_assignment(&raw)
}

/// Number of edges crossing community boundaries.
pub fn edge_cut(g: &SparseGraph, p: &Partition) -> usize {
    g.edge_list()
        .into_iter()
        .filter(|&(u, v)| p.community_of(u) != p.community_of(v))
        .count()
}

// ============================================================================
// Multilevel k-way partitioner
// ============================================================================

/// Working graph at one coarsening level: weighted nodes and edges.
struct LevelGraph {
    node_weights: Vec<u64>,
    adj: Vec<Vec<(usize, u64)>>,
}

impl LevelGraph {
    fn from_graph(g: &SparseGraph) -> Self {
        let n = g.node_count();
        let adj = (0..n)
            .map(|v| g.neighbors(v).iter().map(|&u| (u, 1u64)).collect())
            .collect();
        Self {
            node_weights: vec![1; n],
            adj,
        }
    }

    fn len(&self) -> usize {
        self.node_weights.len()
    }
}

/// Partition the graph into `m` communities: heavy-edge-matching coarsening,
/// greedy balanced k-way seeding, then boundary refinement at every level.
/// Deterministic for a fixed seed; every community is non-empty.
pub fn partition_graph(g: &SparseGraph, m: usize, seed: u64) -> Result<Partition> {
    let n = g.node_count();
    if m == 0 || m > n {
        return Err(Error::Argument(format!(
            "community count {m} must lie in [1, {n}]"
        )));
    }
    if m == 1 {
        return Partition::from_assignment(&vec![0; n]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // coarsening phase
    let coarsen_target = (2 * m).max(64);
    let mut levels: Vec<LevelGraph> = vec![LevelGraph::from_graph(g)];
    let mut maps: Vec<Vec<usize>> = Vec::new(); // fine node -> coarse node per level
    while levels.last().unwrap().len() > coarsen_target {
        let current = levels.last().unwrap();
        let (coarse, map) = coarsen_level(current, &mut rng);
        if coarse.len() as f64 > 0.95 * current.len() as f64 {
            break; // matching stalled
        }
        levels.push(coarse);
        maps.push(map);
    }

    // initial partition on the coarsest level
    let coarsest = levels.last().unwrap();
    let total_weight: u64 = coarsest.node_weights.iter().sum();
    let mut assignment = greedy_kway(coarsest, m, total_weight, &mut rng);
    refine(coarsest, &mut assignment, m, total_weight, REFINE_PASSES);

    // uncoarsen, refining after each projection
    for level in (0..maps.len()).rev() {
        let fine = &levels[level];
        let map = &maps[level];
        let mut fine_assignment = vec![0usize; fine.len()];
        for (v, &cv) in map.iter().enumerate() {
            fine_assignment[v] = assignment[cv];
        }
        assignment = fine_assignment;
        refine(fine, &mut assignment, m, total_weight, REFINE_PASSES);
    }

    fill_empty_communities(&levels[0], &mut assignment, m);
    Partition::from_assignment(&assignment)
}

/// Community count from a partition rate: m = max(1, round(rate * n)).
pub fn communities_from_rate(rate: f64, n: usize) -> usize {
    (((rate * n as f64).round() as usize).max(1)).min(n)
}

/// One round of heavy-edge matching; returns the coarse graph and the
/// fine-to-coarse node map.
fn coarsen_level<R: rand::Rng>(g: &LevelGraph, rng: &mut R) -> (LevelGraph, Vec<usize>) {
    let n = g.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut matched = vec![usize::MAX; n];
    let mut coarse_count = 0usize;
    for &u in &order {
        if matched[u] != usize::MAX {
            continue;
        }
        // heaviest unmatched neighbor, ties to the smallest id
        let mut best: Option<(u64, usize)> = None;
        for &(v, w) in &g.adj[u] {
            if matched[v] != usize::MAX || v == u {
                continue;
            }
            let better = match best {
                None => true,
                Some((bw, bv)) => w > bw || (w == bw && v < bv),
            };
            if better {
                best = Some((w, v));
            }
        }
        let coarse = coarse_count;
        coarse_count += 1;
        matched[u] = coarse;
        if let Some((_, v)) = best {
            matched[v] = coarse;
        }
    }

    let mut node_weights = vec![0u64; coarse_count];
    for v in 0..n {
        node_weights[matched[v]] += g.node_weights[v];
    }
    let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); coarse_count];
    let mut acc: Vec<u64> = vec![0; coarse_count];
    let mut touched: Vec<usize> = Vec::new();
    // accumulate merged edge weights row by row
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); coarse_count];
    for u in 0..n {
        rows[matched[u]].push(u);
    }
    for cu in 0..coarse_count {
        touched.clear();
        for &u in &rows[cu] {
            for &(v, w) in &g.adj[u] {
                let cv = matched[v];
                if cv == cu {
                    continue;
                }
                if acc[cv] == 0 {
                    touched.push(cv);
                }
                acc[cv] += w;
            }
        }
        touched.sort_unstable();
        adj[cu] = touched.iter().map(|&cv| (cv, acc[cv])).collect();
        for &cv in &touched {
            acc[cv] = 0;
        }
    }
    (LevelGraph { node_weights, adj }, matched)
}

fn weight_cap(total_weight: u64, m: usize) -> u64 {
    let even = total_weight.div_ceil(m as u64);
    let slack = ((1.0 + BALANCE_SLACK) * total_weight as f64 / m as f64).floor() as u64;
    even.max(slack)
}

/// Greedy balanced region growing: seed each community and repeatedly pull
/// in the unassigned node with the strongest connection.
fn greedy_kway<R: rand::Rng>(
    g: &LevelGraph,
    m: usize,
    total_weight: u64,
    rng: &mut R,
) -> Vec<usize> {
    let n = g.len();
    let cap = weight_cap(total_weight, m);
    let mut assignment = vec![usize::MAX; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut order_cursor = 0usize;
    // connection strength to the community currently being grown
    let mut gain = vec![0u64; n];
    let mut part_weight = vec![0u64; m];

    for part in 0..m {
        // remaining parts must each get at least one node
        let remaining_parts = (m - part - 1) as u64;
        let unassigned_total: u64 = (0..n)
            .filter(|&v| assignment[v] == usize::MAX)
            .map(|v| g.node_weights[v])
            .sum();
        if unassigned_total == 0 {
            break;
        }
        // seed: next unassigned node in shuffled order
        let seed_node = loop {
            let v = order[order_cursor];
            order_cursor += 1;
            if assignment[v] == usize::MAX {
                break v;
            }
        };
        assignment[seed_node] = part;
        part_weight[part] += g.node_weights[seed_node];
        for v in 0..n {
            gain[v] = 0;
        }
        for &(v, w) in &g.adj[seed_node] {
            if assignment[v] == usize::MAX {
                gain[v] = w;
            }
        }
        let target = (unassigned_total / (m - part) as u64).max(1);
        while part_weight[part] < target {
            // strongest-connected unassigned node, ties to smallest id
            let mut best: Option<(u64, usize)> = None;
            for v in 0..n {
                if assignment[v] != usize::MAX || gain[v] == 0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bw, bv)) => gain[v] > bw || (gain[v] == bw && v < bv),
                };
                if better {
                    best = Some((gain[v], v));
                }
            }
            let v = match best {
                Some((_, v)) => v,
                None => break, // region has no frontier; stop growing this part
            };
            // keep enough nodes for the remaining parts
            let unassigned_after = (0..n)
                .filter(|&u| assignment[u] == usize::MAX && u != v)
                .count() as u64;
            if unassigned_after < remaining_parts {
                break;
            }
            if part_weight[part] + g.node_weights[v] > cap {
                gain[v] = 0;
                continue;
            }
            assignment[v] = part;
            part_weight[part] += g.node_weights[v];
            for &(u, w) in &g.adj[v] {
                if assignment[u] == usize::MAX {
                    gain[u] += w;
                }
            }
        }
    }

    // leftovers: attach to the most-connected part that has room
    for v in 0..n {
        if assignment[v] != usize::MAX {
            continue;
        }
        let mut conn = vec![0u64; m];
        for &(u, w) in &g.adj[v] {
            if assignment[u] != usize::MAX {
                conn[assignment[u]] += w;
            }
        }
        let mut best = 0usize;
        for part in 1..m {
            let better = (conn[part], std::cmp::Reverse(part_weight[part]))
                > (conn[best], std::cmp::Reverse(part_weight[best]));
            if better && part_weight[part] + g.node_weights[v] <= cap {
                best = part;
            }
        }
        if part_weight[best] + g.node_weights[v] > cap {
            // fall back to the lightest part
            best = (0..m).min_by_key(|&p| part_weight[p]).unwrap();
        }
        assignment[v] = best;
        part_weight[best] += g.node_weights[v];
    }
    assignment
}

/// Greedy boundary refinement: move nodes to the neighboring community with
/// the largest positive cut gain, respecting the balance cap and never
/// emptying a community.
fn refine(
    g: &LevelGraph,
    assignment: &mut [usize],
    m: usize,
    total_weight: u64,
    passes: usize,
) {
    let n = g.len();
    let cap = weight_cap(total_weight, m);
    let mut part_weight = vec![0u64; m];
    let mut part_count = vec![0usize; m];
    for v in 0..n {
        part_weight[assignment[v]] += g.node_weights[v];
        part_count[assignment[v]] += 1;
    }
    let mut conn = vec![0u64; m];
    for _ in 0..passes {
        let mut moved = false;
        for v in 0..n {
            let home = assignment[v];
            if part_count[home] <= 1 {
                continue;
            }
            let mut touched: Vec<usize> = Vec::new();
            for &(u, w) in &g.adj[v] {
                let cu = assignment[u];
                if conn[cu] == 0 {
                    touched.push(cu);
                }
                conn[cu] += w;
            }
            let internal = conn[home];
            let mut best_part = home;
            let mut best_gain = 0i64;
            for &q in &touched {
                if q == home {
                    continue;
                }
                if part_weight[q] + g.node_weights[v] > cap {
                    continue;
                }
                let gain = conn[q] as i64 - internal as i64;
                let better = gain > best_gain
                    || (gain == best_gain
                        && gain > 0
                        && part_weight[q] < part_weight[best_part]);
                if better {
                    best_gain = gain;
                    best_part = q;
                }
            }
            for &q in &touched {
                conn[q] = 0;
            }
            if best_part != home && best_gain > 0 {
                part_weight[home] -= g.node_weights[v];
                part_count[home] -= 1;
                part_weight[best_part] += g.node_weights[v];
                part_count[best_part] += 1;
                assignment[v] = best_part;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

/// Guarantee every community id in [0, m) is used: donate the weakest-attached
/// node of the largest community to each empty one.
fn fill_empty_communities(g: &LevelGraph, assignment: &mut [usize], m: usize) {
    let n = g.len();
    loop {
        let mut count = vec![0usize; m];
        for &c in assignment.iter() {
            count[c] += 1;
        }
        let empty = match (0..m).find(|&c| count[c] == 0) {
            Some(c) => c,
            None => return,
        };
        let largest = (0..m).max_by_key(|&c| count[c]).unwrap();
        // member of `largest` with the fewest internal connections
        let mut best: Option<(u64, usize)> = None;
        for v in 0..n {
            if assignment[v] != largest {
                continue;
            }
            let internal: u64 = g.adj[v]
                .iter()
                .filter(|&&(u, _)| assignment[u] == largest)
                .map(|&(_, w)| w)
                .sum();
            let better = match best {
                None => true,
                Some((bw, bv)) => internal < bw || (internal == bw && v < bv),
            };
            if better {
                best = Some((internal, v));
            }
        }
        assignment[best.expect("largest community is non-empty").1] = empty;
    }
}
