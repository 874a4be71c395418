//! Sibling and degree statistics of recursive trees.
//!
//! Node 0 is the root. Counts are kept as integers; divisions happen only
//! when a mean is reported, so the squared-degree identity is checked
//! exactly.

use crate::error::{Error, Result};
use crate::nnt::LabelledTree;

/// Per-tree statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeStats {
    pub n: usize,
    /// `(1/n) Σ_{i≥2} s(i)`.
    pub mean_siblings: f64,
    /// `(1/n) Σ_i deg(i)²`.
    pub mean_sq_degree: f64,
    pub root_degree: u64,
    /// Nodes without children.
    pub leaf_count: u64,
    /// Number of edges from the last node to the root.
    pub depth_last: u64,
    pub sibling_sum: u64,
    pub sq_degree_sum: u64,
}

fn require_edges(tree: &LabelledTree) -> Result<()> {
    if tree.len() < 2 {
        return Err(Error::TooFew {
            min: 2,
            got: tree.len(),
        });
    }
    Ok(())
}

/// Number of children of every node.
pub fn child_counts(tree: &LabelledTree) -> Vec<u64> {
    let mut c = vec![0u64; tree.len()];
    for &p in tree.parents() {
        c[p as usize] += 1;
    }
    c
}

/// `s(i)` for nodes `1..n` (0-based), the number of other children of the
/// node's parent.
pub fn siblings(tree: &LabelledTree) -> Result<Vec<u64>> {
    require_edges(tree)?;
    let c = child_counts(tree);
    Ok(tree.parents().iter().map(|&p| c[p as usize] - 1).collect())
}

/// `Σ_{i≥2} s(i) = Σ_v c(v) (c(v) - 1)`.
pub fn sibling_sum(tree: &LabelledTree) -> Result<u64> {
    require_edges(tree)?;
    Ok(child_counts(tree).iter().map(|&c| c * c.saturating_sub(1)).sum())
}

/// `S(T_n) = (1/n) Σ_{i≥2} s(i)`.
pub fn mean_siblings(tree: &LabelledTree) -> Result<f64> {
    Ok(sibling_sum(tree)? as f64 / tree.len() as f64)
}

fn degrees(tree: &LabelledTree) -> Vec<u64> {
    let mut deg = child_counts(tree);
    deg.iter_mut().skip(1).for_each(|x| *x += 1);
    deg
}

pub fn sq_degree_sum(tree: &LabelledTree) -> Result<u64> {
    require_edges(tree)?;
    Ok(degrees(tree).iter().map(|&x| x * x).sum())
}

/// `(1/n) Σ_i deg(i)²`.
pub fn mean_sq_degree(tree: &LabelledTree) -> Result<f64> {
    Ok(sq_degree_sum(tree)? as f64 / tree.len() as f64)
}

/// Checks `Σ deg² = Σ_{i≥2} s(i) + 4(n-1) - 2 deg(root)` in integers.
pub fn check_deg_identity(tree: &LabelledTree) -> Result<bool> {
    let lhs = sq_degree_sum(tree)? as i128;
    let n = tree.len() as i128;
    let rhs = sibling_sum(tree)? as i128 + 4 * (n - 1) - 2 * root_degree(tree) as i128;
    Ok(lhs == rhs)
}

pub fn root_degree(tree: &LabelledTree) -> u64 {
    tree.parents().iter().filter(|&&p| p == 0).count() as u64
}

/// Nodes with no children (a lone root counts as a leaf).
pub fn leaf_count(tree: &LabelledTree) -> u64 {
    child_counts(tree).iter().filter(|&&c| c == 0).count() as u64
}

/// Graph distance from the last node to the root.
pub fn depth_last(tree: &LabelledTree) -> u64 {
    let mut v = tree.len().saturating_sub(1);
    let mut depth = 0;
    while let Some(p) = tree.parent(v) {
        v = p;
        depth += 1;
    }
    depth
}

/// All statistics in one pass over the child counts.
pub fn tree_stats(tree: &LabelledTree) -> Result<TreeStats> {
    require_edges(tree)?;
    let n = tree.len();
    let c = child_counts(tree);
    let sibling_sum: u64 = c.iter().map(|&k| k * k.saturating_sub(1)).sum();
    let sq_degree_sum: u64 = c
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let deg = if i == 0 { k } else { k + 1 };
            deg * deg
        })
        .sum();
    Ok(TreeStats {
        n,
        mean_siblings: sibling_sum as f64 / n as f64,
        mean_sq_degree: sq_degree_sum as f64 / n as f64,
        root_degree: c[0],
        leaf_count: c.iter().filter(|&&k| k == 0).count() as u64,
        depth_last: depth_last(tree),
        sibling_sum,
        sq_degree_sum,
    })
}

impl TreeStats {
    /// The squared-degree identity on the stored integer sums.
    pub fn deg_identity_holds(&self) -> bool {
        let n = self.n as i128;
        self.sq_degree_sum as i128 == self.sibling_sum as i128 + 4 * (n - 1) - 2 * self.root_degree as i128
    }
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_error: f64,
}

impl Summary {
    /// `|mean - target| <= k · std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Mean and standard error (sample standard deviation over `√count`).
pub fn summarize(values: &[f64]) -> Summary {
    let count = values.len();
    if count == 0 {
        return Summary {
            count,
            mean: f64::NAN,
            std_error: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let std_error = if count > 1 {
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        (var / count as f64).sqrt()
    } else {
        f64::NAN
    };
    Summary { count, mean, std_error }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
///
/// Correct for samples with repeated values: both empirical CDFs are
/// advanced past a value before they are compared.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// Asymptotic critical value of the two-sample KS statistic at level `alpha`.
pub fn ks_critical(alpha: f64, na: usize, nb: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (na, nb) = (na as f64, nb as f64);
    c * ((na + nb) / (na * nb)).sqrt()
}

/// Exact `E[S(T_n)]` for the random recursive tree on `n` nodes.
///
/// Node `k` (0-based) gains child `j > k` independently with probability
/// `1/j`, so `E[c(c-1)] = (Σ p)² - Σ p²` for its child count `c`.
pub fn rrt_expected_mean_siblings(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFew { min: 2, got: n });
    }
    let (mut m, mut v, mut total) = (0.0f64, 0.0f64, 0.0f64);
    // walk k downwards, accumulating the tail sums over j in (k, n)
    for k in (0..n).rev() {
        total += m * m - v;
        if k > 0 {
            m += 1.0 / k as f64;
            v += 1.0 / (k * k) as f64;
        }
    }
    Ok(total / n as f64)
}
