//! Downstream evaluation on frozen representations: linear-probe
//! classification, k-means clustering, and clustering agreement metrics.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{LabelVector, SplitSpec};
use crate::train::AdamState;

/// Linear probe: softmax regression weights plus the standardization fitted
/// on the training split.
#[derive(Debug, Clone)]
pub struct ProbeParams {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    mean: Array1<f64>,
    std: Array1<f64>,
}

/// One evaluation run's numbers; aggregated externally over seeds.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub split_sizes: (usize, usize, usize),
    pub config_digest: String,
}

/// Full-batch softmax regression with Adam on standardized features.
/// Standardization is fitted on the training split only.
pub fn train_probe(
    z: &ArrayView2<f64>,
    labels: &LabelVector,
    train: &[usize],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<ProbeParams> {
    if train.is_empty() {
        return Err(Error::Argument("empty train split".into()));
    }
    let num_classes = labels.num_classes();
    let first = labels.label(train[0]);
    if train.iter().all(|&i| labels.label(i) == first) {
        return Err(Error::DegenerateProbe(
            "train split contains a single class".into(),
        ));
    }
    let d = z.ncols();
    let (mean, std) = fit_standardizer(z, train);
    let z_train = standardize_rows(z, train, &mean, &std);
    let y_train: Vec<usize> = train.iter().map(|&i| labels.label(i)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = (6.0 / (d + num_classes) as f64).sqrt();
    let mut weights = Array2::from_shape_fn((d, num_classes), |_| rng.gen_range(-bound..bound));
    let mut bias = Array1::<f64>::zeros(num_classes);
    let mut adam = AdamState::new(&[d * num_classes, num_classes], lr);

    let n_train = train.len() as f64;
    for _ in 0..epochs {
        let mut logits = z_train.dot(&weights);
        logits += &bias;
        // softmax rows in place, then subtract the one-hot targets
        for (mut row, &y) in logits.rows_mut().into_iter().zip(&y_train) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|x| (x - max).exp());
            let sum = row.sum();
            row.mapv_inplace(|x| x / sum);
            row[y] -= 1.0;
        }
        logits.mapv_inplace(|x| x / n_train);
        let d_w = z_train.t().dot(&logits);
        let d_b = logits.sum_axis(Axis(0));
        adam.step(
            &mut [
                weights.as_slice_mut().unwrap(),
                bias.as_slice_mut().unwrap(),
            ],
            &[
                d_w.as_standard_layout().as_slice().unwrap(),
                d_b.as_slice().unwrap(),
            ],
        )?;
    }
    Ok(ProbeParams {
        weights,
        bias,
        mean,
        std,
    })
}

fn fit_standardizer(z: &ArrayView2<f64>, train: &[usize]) -> (Array1<f64>, Array1<f64>) {
    let d = z.ncols();
    let mut mean = Array1::<f64>::zeros(d);
    for &i in train {
        mean += &z.row(i);
    }
    mean /= train.len() as f64;
    let mut var = Array1::<f64>::zeros(d);
    for &i in train {
        let diff = &z.row(i) - &mean;
        var += &diff.mapv(|x| x * x);
    }
    var /= train.len() as f64;
    let std = var.mapv(|v| if v > 0.0 { v.sqrt() } else { 1.0 });
    (mean, std)
}

fn standardize_rows(
    z: &ArrayView2<f64>,
    idx: &[usize],
    mean: &Array1<f64>,
    std: &Array1<f64>,
) -> Array2<f64> {
    let d = z.ncols();
    let mut out = Array2::<f64>::zeros((idx.len(), d));
    for (r, &i) in idx.iter().enumerate() {
        let mut row = out.row_mut(r);
        row.assign(&z.row(i));
        row -= mean;
        row /= std;
    }
    out
}

/// Argmax-match fraction over the index set; ties break toward the lowest
/// class id.
pub fn accuracy(
    probe: &ProbeParams,
    z: &ArrayView2<f64>,
    labels: &LabelVector,
    index_set: &[usize],
) -> f64 {
    assert!(!index_set.is_empty(), "empty evaluation index set");
    let z_eval = standardize_rows(z, index_set, &probe.mean, &probe.std);
    let mut logits = z_eval.dot(&probe.weights);
    logits += &probe.bias;
    let mut correct = 0usize;
    for (row, &i) in logits.rows().into_iter().zip(index_set) {
        let mut best = 0usize;
        for c in 1..row.len() {
            if row[c] > row[best] {
                best = c;
            }
        }
        if best == labels.label(i) {
            correct += 1;
        }
    }
    correct as f64 / index_set.len() as f64
}

// ============================================================================
// k-means
// ============================================================================

/// Lloyd's algorithm with k-means++ seeding; best of `restarts` runs by
/// inertia, deterministic per seed.
pub fn kmeans(
    z: &ArrayView2<f64>,
    num_clusters: usize,
    seed: u64,
    restarts: usize,
) -> Result<Vec<usize>> {
    let n = z.nrows();
    if num_clusters == 0 || num_clusters > n {
        return Err(Error::Argument(format!(
            "cluster count {num_clusters} must lie in [1, {n}]"
        )));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..restarts.max(1) {
        let (assignment, inertia) =
            kmeans_single(z, num_clusters, seed.wrapping_add(restart as u64))?;
        let replace = match &best {
            None => true,
            Some((bi, _)) => inertia < *bi,
        };
        if replace {
            best = Some((inertia, assignment));
        }
    }
    Ok(best.unwrap().1)
}

/// One k-means run; returns (assignment, inertia).
pub fn kmeans_single(
    z: &ArrayView2<f64>,
    num_clusters: usize,
    seed: u64,
) -> Result<(Vec<usize>, f64)> {
    let n = z.nrows();
    let d = z.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centroids = Array2::<f64>::zeros((num_clusters, d));
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).assign(&z.row(first));
    let mut dist_sq: Vec<f64> = (0..n)
        .map(|i| squared_distance(&z.row(i), &centroids.row(0)))
        .collect();
    for c in 1..num_clusters {
        let total: f64 = dist_sq.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &dsq) in dist_sq.iter().enumerate() {
                target -= dsq;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).assign(&z.row(pick));
        for i in 0..n {
            let dsq = squared_distance(&z.row(i), &centroids.row(c));
            if dsq < dist_sq[i] {
                dist_sq[i] = dsq;
            }
        }
    }

    // Lloyd iterations
    let mut assignment = vec![0usize; n];
    let mut inertia = f64::INFINITY;
    for _ in 0..300 {
        let mut new_inertia = 0.0;
        for i in 0..n {
            let mut best_c = 0usize;
            let mut best_d = f64::INFINITY;
            for c in 0..num_clusters {
                let dsq = squared_distance(&z.row(i), &centroids.row(c));
                if dsq < best_d {
                    best_d = dsq;
                    best_c = c;
                }
            }
            assignment[i] = best_c;
            new_inertia += best_d;
        }
        let mut counts = vec![0usize; num_clusters];
        let mut sums = Array2::<f64>::zeros((num_clusters, d));
        for i in 0..n {
            counts[assignment[i]] += 1;
            sums.row_mut(assignment[i]).scaled_add(1.0, &z.row(i));
        }
        for c in 0..num_clusters {
            if counts[c] > 0 {
                let mut row = sums.row_mut(c);
                row.mapv_inplace(|x| x / counts[c] as f64);
                centroids.row_mut(c).assign(&row);
            } else {
                // revive an empty cluster at the point farthest from its centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = squared_distance(&z.row(a), &centroids.row(assignment[a]));
                        let db = squared_distance(&z.row(b), &centroids.row(assignment[b]));
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centroids.row_mut(c).assign(&z.row(far));
            }
        }
        if (inertia - new_inertia).abs() <= 1e-6 * new_inertia.max(f64::MIN_POSITIVE) {
            inertia = new_inertia;
            break;
        }
        inertia = new_inertia;
    }
    Ok((assignment, inertia))
}

fn squared_distance(a: &ndarray::ArrayView1<f64>, b: &ndarray::ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

// ============================================================================
// Clustering agreement
// ============================================================================

/// Sorted cells ((label_a, label_b), count) plus row and column marginals.
type Contingency = (Vec<((usize, usize), u64)>, Vec<u64>, Vec<u64>);

fn contingency(a: &[usize], b: &[usize]) -> Contingency {
    assert_eq!(a.len(), b.len(), "assignments must have equal length");
    let mut cells = std::collections::BTreeMap::<(usize, usize), u64>::new();
    for (&x, &y) in a.iter().zip(b) {
        *cells.entry((x, y)).or_insert(0) += 1;
    }
    let mut row_marginals = std::collections::BTreeMap::<usize, u64>::new();
    let mut col_marginals = std::collections::BTreeMap::<usize, u64>::new();
    for (&(x, y), &c) in &cells {
        *row_marginals.entry(x).or_insert(0) += c;
        *col_marginals.entry(y).or_insert(0) += c;
    }
    (
        cells.into_iter().collect(),
        row_marginals.into_values().collect(),
        col_marginals.into_values().collect(),
    )
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.ln();
        }
    }
    h
}

/// Normalized mutual information with arithmetic-mean normalization:
/// MI / ((H(a) + H(b)) / 2). Two single-cluster assignments score 1.
pub fn nmi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let (cells, rows, cols) = contingency(a, b);
    if rows.len() == 1 && cols.len() == 1 {
        return 1.0;
    }
    let h_a = entropy(&rows, n);
    let h_b = entropy(&cols, n);
    let row_index: std::collections::BTreeMap<usize, usize> = {
        let mut labels: Vec<usize> = a.to_vec();
        labels.sort_unstable();
        labels.dedup();
        labels.into_iter().enumerate().map(|(i, l)| (l, i)).collect()
    };
    let col_index: std::collections::BTreeMap<usize, usize> = {
        let mut labels: Vec<usize> = b.to_vec();
        labels.sort_unstable();
        labels.dedup();
        labels.into_iter().enumerate().map(|(i, l)| (l, i)).collect()
    };
    let mut mi = 0.0;
    for &((x, y), c) in &cells {
        let p = c as f64 / n;
        let pa = rows[row_index[&x]] as f64 / n;
        let pb = cols[col_index[&y]] as f64 / n;
        mi += p * (p / (pa * pb)).ln();
    }
    let normalizer = 0.5 * (h_a + h_b);
    if normalizer <= 0.0 {
        return 0.0;
    }
    (mi / normalizer).clamp(0.0, 1.0)
}

/// Adjusted Rand index under the permutation-model expectation, computed as
/// an exact integer ratio before the final division.
pub fn ari(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as i128;
    let (cells, rows, cols) = contingency(a, b);
    let choose2 = |x: i128| x * (x - 1) / 2;
    let s: i128 = cells.iter().map(|&(_, c)| choose2(c as i128)).sum();
    let sum_a: i128 = rows.iter().map(|&c| choose2(c as i128)).sum();
    let sum_b: i128 = cols.iter().map(|&c| choose2(c as i128)).sum();
    let total = choose2(n);
    let numerator = 2 * (total * s - sum_a * sum_b);
    let denominator = total * (sum_a + sum_b) - 2 * sum_a * sum_b;
    if denominator == 0 {
        return 1.0;
    }
    numerator as f64 / denominator as f64
}

/// Random class-balanced split: `per_class` train nodes per class, then
/// `n_valid` and `n_test` nodes from the shuffled remainder.
pub fn balanced_split(
    labels: &LabelVector,
    per_class: usize,
    n_valid: usize,
    n_test: usize,
    seed: u64,
) -> Result<SplitSpec> {
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); labels.num_classes()];
    for i in 0..n {
        by_class[labels.label(i)].push(i);
    }
    let mut train = Vec::new();
    let mut rest = Vec::new();
    for class_nodes in &mut by_class {
        rand::seq::SliceRandom::shuffle(&mut class_nodes[..], &mut rng);
        if class_nodes.len() < per_class {
            return Err(Error::Argument(format!(
                "class with {} nodes cannot supply {per_class} train nodes",
                class_nodes.len()
            )));
        }
        train.extend_from_slice(&class_nodes[..per_class]);
        rest.extend_from_slice(&class_nodes[per_class..]);
    }
    rand::seq::SliceRandom::shuffle(&mut rest[..], &mut rng);
    if rest.len() < n_valid + n_test {
        return Err(Error::Argument(format!(
            "{} remaining nodes cannot supply {n_valid} valid + {n_test} test",
            rest.len()
        )));
    }
    let valid = rest[..n_valid].to_vec();
    let test = rest[n_valid..n_valid + n_test].to_vec();
    let split = SplitSpec { train, valid, test };
    split.validate(n)?;
    Ok(split)
}

/// Brute-force reference implementations used to certify the fast metrics.
pub mod reference {
    /// All set partitions of `n` elements, as restricted-growth strings.
    pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut current = vec![0usize; n];
        fn recurse(current: &mut Vec<usize>, pos: usize, max_used: usize, out: &mut Vec<Vec<usize>>) {
            if pos == current.len() {
                out.push(current.clone());
                return;
            }
            for c in 0..=max_used + 1 {
                current[pos] = c;
                recurse(current, pos + 1, max_used.max(c), out);
            }
        }
        if n == 0 {
            return vec![vec![]];
        }
        current[0] = 0;
        recurse(&mut current, 1, 0, &mut out);
        out
    }

    /// Pair-counting adjusted Rand index: classify every unordered pair as
    /// together/apart in each assignment, then apply the pair-count identity.
    pub fn ari_pair_counting(a: &[usize], b: &[usize]) -> f64 {
        assert_eq!(a.len(), b.len());
        let n = a.len();
        let (mut n11, mut n00, mut n10, mut n01) = (0i128, 0i128, 0i128, 0i128);
        for i in 0..n {
            for j in i + 1..n {
                let same_a = a[i] == a[j];
                let same_b = b[i] == b[j];
                match (same_a, same_b) {
                    (true, true) => n11 += 1,
                    (false, false) => n00 += 1,
                    (true, false) => n10 += 1,
                    (false, true) => n01 += 1,
                }
            }
        }
        let numerator = 2 * (n00 * n11 - n01 * n10);
        let denominator = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
        if denominator == 0 {
            return 1.0;
        }
        numerator as f64 / denominator as f64
    }

    /// NMI from a contingency table built by exhaustive scans: for every
    /// (label_a, label_b) value pair, count joint occurrences over the full
    /// arrays.
    pub fn nmi_brute_force(a: &[usize], b: &[usize]) -> f64 {
        assert_eq!(a.len(), b.len());
        let n = a.len() as f64;
        let mut values_a: Vec<usize> = a.to_vec();
        values_a.sort_unstable();
        values_a.dedup();
        let mut values_b: Vec<usize> = b.to_vec();
        values_b.sort_unstable();
        values_b.dedup();
        if values_a.len() == 1 && values_b.len() == 1 {
            return 1.0;
        }
        let count_a: Vec<u64> = values_a
            .iter()
            .map(|&va| a.iter().filter(|&&x| x == va).count() as u64)
            .collect();
        let count_b: Vec<u64> = values_b
            .iter()
            .map(|&vb| b.iter().filter(|&&x| x == vb).count() as u64)
            .collect();
        let entropy = |counts: &[u64]| -> f64 {
            let mut h = 0.0;
            for &c in counts {
                if c > 0 {
                    let p = c as f64 / n;
                    h -= p * p.ln();
                }
            }
            h
        };
        let h_a = entropy(&count_a);
        let h_b = entropy(&count_b);
        let mut mi = 0.0;
        for (ia, &va) in values_a.iter().enumerate() {
            for (ib, &vb) in values_b.iter().enumerate() {
                let joint = a
                    .iter()
                    .zip(b)
                    .filter(|&(&x, &y)| x == va && y == vb)
                    .count() as u64;
                if joint > 0 {
                    let p = joint as f64 / n;
                    let pa = count_a[ia] as f64 / n;
                    let pb = count_b[ib] as f64 / n;
                    mi += p * (p / (pa * pb)).ln();
                }
            }
        }
        let normalizer = 0.5 * (h_a + h_b);
        if normalizer <= 0.0 {
            return 0.0;
        }
        (mi / normalizer).clamp(0.0, 1.0)
    }
}
