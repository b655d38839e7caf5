//! Graph storage, loading, and propagation primitives.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::io;
use crate::sparse::CsrMatrix;

/// Immutable undirected graph: CSR adjacency (unit weights, no self-loops)
/// plus a dense node-feature matrix.
///
/// Structure reads go through [`SparseGraph::adjacency`] / [`SparseGraph::neighbors`],
/// which bump an access counter; inference paths that must stay structure-free
/// are checked against that counter in tests.
#[derive(Debug)]
pub struct SparseGraph {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    features: Array2<f64>,
    adjacency_reads: AtomicU64,
}

impl Clone for SparseGraph {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            features: self.features.clone(),
            adjacency_reads: AtomicU64::new(0),
        }
    }
}

impl PartialEq for SparseGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
            && self.features == other.features
    }
}

impl SparseGraph {
    /// Build from an undirected edge list. Duplicate and reversed pairs are
    /// deduplicated and self-loops dropped; ids must be `< n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], features: Array2<f64>) -> Result<Self> {
        if features.nrows() != n {
            return Err(Error::Input(format!(
                "feature rows ({}) do not match node count ({n})",
                features.nrows()
            )));
        }
        let mut pairs = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Input(format!(
                    "edge ({u}, {v}) references a node outside [0, {n})"
                )));
            }
            if u == v {
                continue;
            }
            pairs.push((u, v));
            pairs.push((v, u));
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(pairs.len());
        row_offsets.push(0);
        let mut row = 0;
        for (u, v) in pairs {
            while row < u {
                row_offsets.push(col_indices.len());
                row += 1;
            }
            col_indices.push(v);
        }
        while row < n {
            row_offsets.push(col_indices.len());
            row += 1;
        }
        Ok(Self {
            n,
            row_offsets,
            col_indices,
            features,
            adjacency_reads: AtomicU64::new(0),
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    /// Undirected edge count.
    pub fn edge_count(&self) -> usize {
        self.col_indices.len() / 2
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row_offsets[v + 1] - self.row_offsets[v]
    }

    /// Neighbor ids of `v`; counted as a structure read.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.adjacency_reads.fetch_add(1, Ordering::Relaxed);
        &self.col_indices[self.row_offsets[v]..self.row_offsets[v + 1]]
    }

    /// Number of structure reads since construction (or last reset).
    pub fn adjacency_read_count(&self) -> u64 {
        self.adjacency_reads.load(Ordering::Relaxed)
    }

    pub fn reset_adjacency_read_count(&self) {
        self.adjacency_reads.store(0, Ordering::Relaxed);
    }

    /// Symmetrically normalized adjacency with self-loops,
    /// entry (i, j) = 1 / sqrt(d~_i * d~_j) with d~ counting the self-loop.
    ///
    /// Counted as one structure read; the returned matrix is detached from
    /// the graph.
    pub fn normalized_adjacency(&self) -> CsrMatrix {
        self.adjacency_reads.fetch_add(1, Ordering::Relaxed);
        // one sqrt per entry on the integer degree product keeps the matrix
        // exactly symmetric and the simple cases exact
        let entry = |i: usize, j: usize| {
            let product = ((self.degree(i) + 1) * (self.degree(j) + 1)) as f64;
            1.0 / product.sqrt()
        };
        let mut rows = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let nbrs = &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]];
            let mut row = Vec::with_capacity(nbrs.len() + 1);
            let mut self_written = false;
            for &j in nbrs {
                if !self_written && j > i {
                    row.push((i, entry(i, i)));
                    self_written = true;
                }
                row.push((j, entry(i, j)));
            }
            if !self_written {
                row.push((i, entry(i, i)));
            }
            rows.push(row);
        }
        CsrMatrix::from_rows(self.n, rows).expect("normalized adjacency rows are sorted")
    }

    /// Undirected edge list in canonical (u < v) order.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            for &j in &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]] {
                if i < j {
                    edges.push((i, j));
                }
            }
        }
        edges
    }
}

/// Node class labels in `[0, num_classes)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&c| c >= num_classes) {
            return Err(Error::Input(format!(
                "label {bad} out of range [0, {num_classes})"
            )));
        }
        Ok(Self {
            labels,
            num_classes,
        })
    }

    /// Infer the class count as max label + 1.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
        Self {
            labels,
            num_classes,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn label(&self, v: usize) -> usize {
        self.labels[v]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }
}

/// Disjoint train/valid/test index sets.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (name, set) in [
            ("train", &self.train),
            ("valid", &self.valid),
            ("test", &self.test),
        ] {
            for &i in set.iter() {
                if i >= n {
                    return Err(Error::Input(format!(
                        "{name} index {i} out of range [0, {n})"
                    )));
                }
                if seen[i] {
                    return Err(Error::Input(format!(
                        "index {i} appears in more than one split"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

/// One-hop homophily: the fraction of `v`'s neighbors sharing its label.
pub fn node_homophily(g: &SparseGraph, labels: &LabelVector, v: usize) -> Result<f64> {
    let nbrs = g.neighbors(v);
    if nbrs.is_empty() {
        return Err(Error::UndefinedScore(format!(
            "node {v} is isolated; homophily needs at least one neighbor"
        )));
    }
    let same = nbrs
        .iter()
        .filter(|&&u| labels.label(u) == labels.label(v))
        .count();
    Ok(same as f64 / nbrs.len() as f64)
}

/// Load a graph from a whitespace "u v" edge file and a feature file
/// (CSV, or raw binary when the extension is `.bin`).
pub fn load_graph(edge_path: &Path, feature_path: &Path) -> Result<SparseGraph> {
    let features = io::read_matrix_auto(feature_path)?;
    let edges = io::read_edge_list(edge_path)?;
    SparseGraph::from_edges(features.nrows(), &edges, features)
}

/// Write a graph back out in canonical form (`u v` lines with u < v,
/// features as raw binary). `load_graph` of the result reproduces the
/// graph bit-exactly.
pub fn save_graph(g: &SparseGraph, edge_path: &Path, feature_path: &Path) -> Result<()> {
    io::write_edge_list(edge_path, &g.edge_list())?;
    io::write_matrix_binary(feature_path, &g.features().view())
}
