//! Work behind `simulate`, `quadrature` and `locallimit`, returning tables.

use std::time::Instant;

use nntlab_core::locallimit::{estimate_s_local_mode, window_doubling_check, LocalEstimate, LocalMode};
use nntlab_core::nnt::{build_nnt, build_nnt_accelerated};
use nntlab_core::quadrature::{s1_closed_form, sd_row};
use nntlab_core::spaces::{replicate_seed, sample_points, Space};
use nntlab_core::stats::{summarize, tree_stats, TreeStats};
use rayon::prelude::*;

use crate::output::{Cell, Table};
use crate::CliError;

/// Prefix length checked against the naive builder for geometric spaces.
pub const PREFIX_CHECK: usize = 2000;

pub const SIMULATE_HEADER: [&str; 9] =
    ["seed", "space", "d", "n", "mean_siblings", "mean_sq_degree", "root_degree", "leaf_count", "depth_last"];
pub const QUADRATURE_HEADER: [&str; 7] = ["d", "S_d", "err", "T_plus", "T_minus", "evaluations", "seconds"];
pub const LOCALLIMIT_HEADER: [&str; 5] = ["d", "L", "reps", "estimate", "std_error"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replicate {
    pub seed: u64,
    pub stats: TreeStats,
}

/// One tree per replicate. Replicate `r` draws its points from
/// `replicate_seed(seed, r)` and breaks ties with stream 1 of that seed.
///
/// Every tree must satisfy the squared-degree identity, and for geometric
/// spaces the accelerated parents of the first [`PREFIX_CHECK`] points
/// must equal the naive ones.
pub fn simulate(space: Space, n: usize, reps: usize, seed: u64) -> Result<Vec<Replicate>, CliError> {
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let rs = replicate_seed(seed, r);
            let tie = replicate_seed(rs, 1);
            let pts = sample_points(space, n, rs)?;
            let tree = build_nnt_accelerated(space, &pts, tie)?;
            if space != Space::Rrt {
                let m = n.min(PREFIX_CHECK);
                let naive = build_nnt(space, &pts[..m], tie)?;
                if naive.parents() != &tree.parents()[..m - 1] {
                    return Err(CliError::Check(format!("replicate {r}: accelerated tree differs from naive on the prefix")));
                }
            }
            let stats = tree_stats(&tree)?;
            if !stats.deg_identity_holds() {
                return Err(CliError::Check(format!("replicate {r}: squared-degree identity fails")));
            }
            Ok(Replicate { seed: rs, stats })
        })
        .collect()
}

fn space_dim(space: Space) -> u64 {
    match space {
        Space::Sphere { d } | Space::Torus { d } => d as u64,
        Space::Rrt => 0,
    }
}

/// Per-replicate rows followed by `mean` and `stderr` rows over replicates.
pub fn simulate_table(space: Space, n: usize, reps: &[Replicate]) -> Table {
    let mut t = Table::new(SIMULATE_HEADER.to_vec());
    let dim = space_dim(space);
    for r in reps {
        let s = &r.stats;
        t.push(vec![
            r.seed.into(),
            space.name().into(),
            dim.into(),
            n.into(),
            s.mean_siblings.into(),
            s.mean_sq_degree.into(),
            s.root_degree.into(),
            s.leaf_count.into(),
            s.depth_last.into(),
        ]);
    }
    let column = |f: fn(&TreeStats) -> f64| summarize(&reps.iter().map(|r| f(&r.stats)).collect::<Vec<_>>());
    let cols = [
        column(|s| s.mean_siblings),
        column(|s| s.mean_sq_degree),
        column(|s| s.root_degree as f64),
        column(|s| s.leaf_count as f64),
        column(|s| s.depth_last as f64),
    ];
    for (label, pick) in [("mean", 0usize), ("stderr", 1)] {
        let mut row: Vec<Cell> = vec![label.into(), space.name().into(), dim.into(), n.into()];
        row.extend(cols.iter().map(|c| Cell::Float(if pick == 0 { c.mean } else { c.std_error })));
        t.push(row);
    }
    t
}

/// Aggregate of `mean_siblings` over replicates.
pub fn simulate_summary(reps: &[Replicate]) -> nntlab_core::stats::Summary {
    summarize(&reps.iter().map(|r| r.stats.mean_siblings).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRow {
    pub d: usize,
    pub s_d: f64,
    pub err: f64,
    /// `None` for `d = 1`, where only the closed form is reported.
    pub t_plus: Option<f64>,
    pub t_minus: Option<f64>,
    pub evaluations: usize,
    pub seconds: f64,
    pub consistent: bool,
}

/// Rows for each dimension, computed in parallel and kept in input order.
pub fn quadrature(dims: &[usize], tol: f64) -> Result<Vec<QuadratureRow>, CliError> {
    dims.par_iter()
        .map(|&d| {
            let start = Instant::now();
            if d == 1 {
                return Ok(QuadratureRow {
                    d,
                    s_d: s1_closed_form(),
                    err: 0.0,
                    t_plus: None,
                    t_minus: None,
                    evaluations: 0,
                    seconds: start.elapsed().as_secs_f64(),
                    consistent: true,
                });
            }
            let row = sd_row(d, tol)?;
            Ok(QuadratureRow {
                d,
                s_d: row.s_d.value,
                err: row.combined_error(),
                t_plus: Some(row.t_plus.value),
                t_minus: Some(row.t_minus.value),
                evaluations: row.evaluations(),
                seconds: start.elapsed().as_secs_f64(),
                consistent: row.decomposition_holds(),
            })
        })
        .collect()
}

pub fn quadrature_table(rows: &[QuadratureRow]) -> Table {
    let mut t = Table::new(QUADRATURE_HEADER.to_vec());
    let opt = |v: Option<f64>| v.map_or(Cell::Empty, Cell::Float);
    for r in rows {
        t.push(vec![
            r.d.into(),
            r.s_d.into(),
            r.err.into(),
            opt(r.t_plus),
            opt(r.t_minus),
            r.evaluations.into(),
            r.seconds.into(),
        ]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalLimitRun {
    pub base: LocalEstimate,
    /// Same number of windows at side `2L`.
    pub doubled: LocalEstimate,
    pub agree: bool,
}

/// Number of combined standard errors allowed between `L` and `2L`.
pub const DOUBLING_K: f64 = 3.0;

pub fn locallimit(mode: LocalMode, d: usize, side: f64, reps: usize, seed: u64) -> Result<LocalLimitRun, CliError> {
    let run = match mode {
        LocalMode::Euclidean => {
            let c = window_doubling_check(d, side, reps, seed, DOUBLING_K)?;
            LocalLimitRun { base: c.base, doubled: c.doubled, agree: c.agree }
        }
        LocalMode::Rrt => {
            let base = estimate_s_local_mode(mode, d, side, reps, seed)?;
            let doubled = estimate_s_local_mode(mode, d, 2.0 * side, reps, replicate_seed(seed, u64::MAX))?;
            let spread = base.std_error.hypot(doubled.std_error);
            LocalLimitRun { base, doubled, agree: (base.mean - doubled.mean).abs() <= DOUBLING_K * spread }
        }
    };
    Ok(run)
}

/// The estimate at `L`, then the window-doubling row at `2L`.
pub fn locallimit_table(run: &LocalLimitRun) -> Table {
    let mut t = Table::new(LOCALLIMIT_HEADER.to_vec());
    for e in [&run.base, &run.doubled] {
        t.push(vec![(e.d as u64).into(), e.side.into(), e.reps.into(), e.mean.into(), e.std_error.into()]);
    }
    t
}
