//! The Poisson nearest-older-neighbour tree, sampled on a periodic window.
//!
//! A unit-intensity Poisson process on the `d`-torus of side `L` carries
//! i.i.d. uniform labels; each point is joined to the nearest point with a
//! smaller label. The mean sibling count of such a sample estimates `S_d`
//! without any finite-`n` tree in between.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nnt::grid::for_each_ring_offset;
use crate::spaces::{replicate_seed, stream_rng, Point};

/// Smallest admissible expected point count `L^d`.
pub const MIN_EXPECTED_POINTS: f64 = 10.0;
const BOUND_MARGIN: f64 = 1e-12;

/// One realization of the Poisson nearest-older-neighbour tree.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSample {
    pub d: usize,
    pub side: f64,
    /// Coordinates in `[0, side)^d`, `d` per point.
    pub positions: Vec<f64>,
    pub labels: Vec<f64>,
    /// Nearest point with a smaller label; `None` only for the oldest point.
    pub parents: Vec<Option<usize>>,
}

impl PoissonSample {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.d..(i + 1) * self.d]
    }

    /// `Σ_v c(v) (c(v) - 1)` over the child counts.
    pub fn sibling_sum(&self) -> u64 {
        sibling_sum_of(self.len(), self.parents.iter().flatten().copied())
    }

    /// Mean sibling count over all points, the oldest counting 0.
    pub fn mean_siblings(&self) -> f64 {
        self.sibling_sum() as f64 / self.len() as f64
    }

    /// Indices in increasing label order.
    pub fn label_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.labels[a].total_cmp(&self.labels[b]).then(a.cmp(&b)));
        order
    }

    /// Positions rescaled to the unit torus, in label order.
    pub fn unit_torus_points(&self) -> (Vec<Point>, Vec<usize>) {
        let order = self.label_order();
        let pts = order
            .iter()
            .map(|&i| Point::new(self.position(i).iter().map(|x| x / self.side).collect()))
            .collect();
        (pts, order)
    }
}

fn sibling_sum_of(n: usize, parents: impl Iterator<Item = usize>) -> u64 {
    let mut c = vec![0u64; n];
    for p in parents {
        c[p] += 1;
    }
    c.iter().map(|&k| k * k.saturating_sub(1)).sum()
}

fn check_window(d: usize, side: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Dimension { min: 1, got: 0 });
    }
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::InvalidArgument(format!("window side must be positive, got {side}")));
    }
    let expected = side.powi(d as i32);
    if !(expected >= MIN_EXPECTED_POINTS) {
        return Err(Error::InvalidArgument(format!(
            "expected point count L^d = {expected} is below {MIN_EXPECTED_POINTS}"
        )));
    }
    Ok(expected)
}

fn poisson_count(expected: f64, seed: u64) -> Result<usize> {
    let dist = Poisson::new(expected).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(dist.sample(&mut stream_rng(seed, 0)) as usize)
}

/// Samples the process on the torus of side `side` and links every point to
/// its nearest older neighbour.
///
/// The count comes from stream 0 of the seed, point `i` from stream `i + 1`.
pub fn sample_poisson_nn(d: usize, side: f64, seed: u64) -> Result<PoissonSample> {
    let expected = check_window(d, side)?;
    let n = poisson_count(expected, seed)?;
    let mut positions = vec![0.0; n * d];
    let mut labels = vec![0.0; n];
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64 + 1);
        for x in &mut positions[i * d..(i + 1) * d] {
            let v = side * rng.random::<f64>();
            *x = if v >= side { 0.0 } else { v };
        }
        labels[i] = rng.random::<f64>();
    }
    let parents = nearest_older(d, side, &positions, &labels);
    Ok(PoissonSample {
        d,
        side,
        positions,
        labels,
        parents,
    })
}

#[inline]
fn older(labels: &[f64], j: usize, i: usize) -> bool {
    labels[j] < labels[i] || (labels[j] == labels[i] && j < i)
}

#[inline]
fn wrap_dist2(a: &[f64], b: &[f64], side: f64) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = (x - y).abs();
        let t = t.min(side - t);
        acc += t * t;
    }
    acc
}

/// Static periodic grid with about one point per cell and ring search.
fn nearest_older(d: usize, side: f64, pos: &[f64], labels: &[f64]) -> Vec<Option<usize>> {
    let n = labels.len();
    let g = ((n as f64).powf(1.0 / d as f64).floor() as i64).max(1);
    let h = side / g as f64;
    let cell_of = |x: &[f64], out: &mut [i64]| {
        for (c, &v) in out.iter_mut().zip(x) {
            *c = ((v / h).floor() as i64).clamp(0, g - 1);
        }
    };
    let key = |c: &[i64]| c.iter().rev().fold(0usize, |acc, &ci| acc * g as usize + ci as usize);
    let mut cells: Vec<Vec<u32>> = vec![Vec::new(); (g as usize).pow(d as u32)];
    let mut scratch = vec![0i64; d];
    for i in 0..n {
        cell_of(&pos[i * d..(i + 1) * d], &mut scratch);
        cells[key(&scratch)].push(i as u32);
    }

    let mut qc = vec![0i64; d];
    let mut cell = vec![0i64; d];
    (0..n)
        .map(|i| {
            let q = &pos[i * d..(i + 1) * d];
            cell_of(q, &mut qc);
            let mut best = f64::INFINITY;
            let mut parent = None;
            let mut k: i64 = 0;
            loop {
                if 2 * k + 1 > g {
                    // rings would overlap: scan everything
                    best = f64::INFINITY;
                    parent = None;
                    for j in 0..n {
                        if older(labels, j, i) {
                            let d2 = wrap_dist2(&pos[j * d..(j + 1) * d], q, side);
                            if d2 < best {
                                best = d2;
                                parent = Some(j);
                            }
                        }
                    }
                    break;
                }
                for_each_ring_offset(d, k, |off| {
                    for a in 0..d {
                        cell[a] = (qc[a] + off[a]).rem_euclid(g);
                    }
                    for &j in &cells[key(&cell)] {
                        let j = j as usize;
                        if older(labels, j, i) {
                            let d2 = wrap_dist2(&pos[j * d..(j + 1) * d], q, side);
                            if d2 < best || (d2 == best && parent.is_some_and(|p| j < p)) {
                                best = d2;
                                parent = Some(j);
                            }
                        }
                    }
                });
                if k >= 1 {
                    let reach = k as f64 * h;
                    if best < reach * reach * (1.0 - BOUND_MARGIN) {
                        break;
                    }
                }
                k += 1;
            }
            parent
        })
        .collect()
}

/// How parents are chosen in [`estimate_s_local_mode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalMode {
    /// Nearest older neighbour on the torus.
    Euclidean,
    /// Uniform older point, ignoring positions.
    Rrt,
}

/// Pooled sibling estimate over independent windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalEstimate {
    pub d: usize,
    pub side: f64,
    pub reps: usize,
    /// `Σ siblings / Σ points` over all windows.
    pub mean: f64,
    /// Ratio-estimator standard error; NaN for a single window.
    pub std_error: f64,
    pub total_points: u64,
}

impl LocalEstimate {
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Estimates `S_d` from `reps` windows of side `side`.
pub fn estimate_s_local(d: usize, side: f64, reps: usize, seed: u64) -> Result<LocalEstimate> {
    estimate_s_local_mode(LocalMode::Euclidean, d, side, reps, seed)
}

/// Replicate `r` uses the seed `replicate_seed(seed, r)`; replicates run in
/// parallel and are merged in index order.
pub fn estimate_s_local_mode(mode: LocalMode, d: usize, side: f64, reps: usize, seed: u64) -> Result<LocalEstimate> {
    let expected = check_window(d, side)?;
    if reps == 0 {
        return Err(Error::TooFew { min: 1, got: 0 });
    }
    let per_rep: Vec<(u64, u64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = replicate_seed(seed, r as u64);
            match mode {
                LocalMode::Euclidean => {
                    let sample = sample_poisson_nn(d, side, s)?;
                    Ok((sample.sibling_sum(), sample.len() as u64))
                }
                LocalMode::Rrt => {
                    let n = poisson_count(expected, s)?;
                    let parents = (1..n).map(|i| stream_rng(s, i as u64 + 1).random_range(0..i));
                    Ok((sibling_sum_of(n, parents), n as u64))
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(merge(d, side, &per_rep))
}

fn merge(d: usize, side: f64, per_rep: &[(u64, u64)]) -> LocalEstimate {
    let k = per_rep.len();
    let total_y: f64 = per_rep.iter().map(|r| r.0 as f64).sum();
    let total_n: u64 = per_rep.iter().map(|r| r.1).sum();
    let mean = total_y / total_n as f64;
    let std_error = if k > 1 {
        let n_bar = total_n as f64 / k as f64;
        let ss: f64 = per_rep.iter().map(|&(y, n)| (y as f64 - mean * n as f64).powi(2)).sum();
        (ss / (k as f64 * (k as f64 - 1.0))).sqrt() / n_bar
    } else {
        f64::NAN
    };
    LocalEstimate {
        d,
        side,
        reps: k,
        mean,
        std_error,
        total_points: total_n,
    }
}

/// Estimates at sides `L` and `2L` and whether they agree within
/// `k` combined standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCheck {
    pub base: LocalEstimate,
    pub doubled: LocalEstimate,
    pub agree: bool,
}

pub fn window_doubling_check(d: usize, side: f64, reps: usize, seed: u64, k: f64) -> Result<WindowCheck> {
    let base = estimate_s_local(d, side, reps, seed)?;
    let doubled = estimate_s_local(d, 2.0 * side, reps, replicate_seed(seed, u64::MAX))?;
    let spread = (base.std_error.powi(2) + doubled.std_error.powi(2)).sqrt();
    Ok(WindowCheck {
        base,
        doubled,
        agree: (base.mean - doubled.mean).abs() <= k * spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnt::build_nnt;
    use crate::spaces::Space;

    #[test]
    fn parents_are_older() {
        let s = sample_poisson_nn(1, 50.0, 4).unwrap();
        let oldest = s.label_order()[0];
        for (i, p) in s.parents.iter().enumerate() {
            match p {
                Some(p) => assert!(s.labels[*p] < s.labels[i]),
                None => assert_eq!(i, oldest),
            }
        }
    }

    #[test]
    fn matches_label_sorted_tree() {
        for (d, side, seed) in [(1, 200.0, 1), (2, 20.0, 2), (3, 7.0, 3), (4, 3.5, 4)] {
            let s = sample_poisson_nn(d, side, seed).unwrap();
            let (pts, order) = s.unit_torus_points();
            let tree = build_nnt(Space::Torus { d }, &pts, 0).unwrap();
            let mut rank = vec![0; s.len()];
            for (r, &i) in order.iter().enumerate() {
                rank[i] = r;
            }
            for (r, &i) in order.iter().enumerate().skip(1) {
                assert_eq!(tree.parent(r), s.parents[i].map(|p| rank[p]), "d={d} rank {r}");
            }
        }
    }

    #[test]
    fn rejects_small_windows() {
        assert!(sample_poisson_nn(2, 3.0, 1).is_err());
        assert!(sample_poisson_nn(0, 30.0, 1).is_err());
        assert!(estimate_s_local(1, 100.0, 0, 1).is_err());
    }

    #[test]
    fn merge_is_a_ratio_estimate() {
        let e = merge(1, 10.0, &[(10, 5), (30, 15)]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.total_points, 20);
    }

    #[test]
    fn deterministic_in_seed() {
        let a = estimate_s_local(2, 15.0, 4, 9).unwrap();
        let b = estimate_s_local(2, 15.0, 4, 9).unwrap();
        assert_eq!(a, b);
    }
}
