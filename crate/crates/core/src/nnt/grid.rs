//! Exact nearest-older-neighbour search on a uniform cell grid.

use std::collections::HashMap;

use super::{pick_tie, LabelledTree};
use crate::spaces::{dist2, Space};

pub(super) const MAX_TORUS_DIM: usize = 4;
pub(super) const MAX_SPHERE_DIM: usize = 3;

/// Below this many inserted points a brute-force scan is cheaper.
const FIRST_BUILD: usize = 32;
/// Relative margin on the ring-termination bound, absorbs rounding in `k h`.
const BOUND_MARGIN: f64 = 1e-12;

struct Grid {
    m: usize,
    periodic: bool,
    lo: f64,
    h: f64,
    g: i64,
    cells: HashMap<u64, Vec<u32>>,
}

impl Grid {
    fn new(space: Space, count: usize) -> Self {
        match space {
            Space::Torus { d } => {
                let g = ((count as f64).powf(1.0 / d as f64).floor() as i64).max(1);
                Self {
                    m: d,
                    periodic: true,
                    lo: 0.0,
                    h: 1.0 / g as f64,
                    g,
                    cells: HashMap::new(),
                }
            }
            Space::Sphere { d } => {
                // about one point per occupied cell on the sphere surface
                let area = crate::geomvol::sphere_area(d);
                let h_target = (area / count as f64).powf(1.0 / d as f64);
                let cap = (1i64 << (60 / (d + 1))).min(1 << 20);
                let g = ((2.0 / h_target).ceil() as i64).clamp(1, cap);
                Self {
                    m: d + 1,
                    periodic: false,
                    lo: -1.0,
                    h: 2.0 / g as f64,
                    g,
                    cells: HashMap::new(),
                }
            }
            Space::Rrt => unreachable!("no grid for the RRT metric"),
        }
    }

    fn cell_of(&self, x: &[f64], out: &mut [i64]) {
        for (c, &v) in out.iter_mut().zip(x) {
            *c = (((v - self.lo) / self.h).floor() as i64).clamp(0, self.g - 1);
        }
    }

    fn key(&self, c: &[i64]) -> u64 {
        c.iter().rev().fold(0u64, |acc, &ci| acc * self.g as u64 + ci as u64)
    }

    fn insert(&mut self, idx: usize, x: &[f64], scratch: &mut [i64]) {
        self.cell_of(x, scratch);
        let key = self.key(scratch);
        self.cells.entry(key).or_default().push(idx as u32);
    }
}

/// Visits every offset in `[-k, k]^m` whose sup-norm is exactly `k`.
pub(crate) fn for_each_ring_offset(m: usize, k: i64, mut f: impl FnMut(&[i64])) {
    if k == 0 {
        f(&vec![0; m]);
        return;
    }
    // `first` is the lowest axis with |offset| = k: axes below it stay
    // strictly inside, axes above it are free
    let mut off = vec![0i64; m];
    for first in 0..m {
        let lo = |a: usize| if a < first { -(k - 1) } else { -k };
        let hi = |a: usize| if a < first { k - 1 } else { k };
        let step = |a: usize| if a == first { 2 * k } else { 1 };
        for (a, o) in off.iter_mut().enumerate() {
            *o = lo(a);
        }
        loop {
            f(&off);
            let mut axis = 0;
            loop {
                if axis == m {
                    break;
                }
                off[axis] += step(axis);
                if off[axis] <= hi(axis) {
                    break;
                }
                off[axis] = lo(axis);
                axis += 1;
            }
            if axis == m {
                break;
            }
        }
    }
}

struct Search<'a> {
    space: Space,
    flat: &'a [f64],
    m: usize,
    best: f64,
    ties: Vec<usize>,
}

impl Search<'_> {
    fn reset(&mut self) {
        self.best = f64::INFINITY;
        self.ties.clear();
    }

    #[inline]
    fn offer(&mut self, j: usize, q: &[f64]) {
        let d2 = dist2(self.space, &self.flat[j * self.m..(j + 1) * self.m], q);
        if d2 < self.best {
            self.best = d2;
            self.ties.clear();
            self.ties.push(j);
        } else if d2 == self.best {
            self.ties.push(j);
        }
    }

    fn brute(&mut self, upto: usize, q: &[f64]) {
        for j in 0..upto {
            self.offer(j, q);
        }
    }
}

pub(super) fn build(space: Space, flat: &[f64], n: usize, tie_seed: u64) -> LabelledTree {
    let m = space.coord_len();
    let mut parents = Vec::with_capacity(n.saturating_sub(1));
    let mut dists = Vec::with_capacity(n.saturating_sub(1));
    let mut search = Search {
        space,
        flat,
        m,
        best: f64::INFINITY,
        ties: Vec::new(),
    };
    let mut grid: Option<Grid> = None;
    let mut next_build = FIRST_BUILD;
    let mut qc = vec![0i64; m];
    let mut cell = vec![0i64; m];

    for i in 1..n {
        if i == next_build {
            let mut g = Grid::new(space, i);
            for j in 0..i {
                g.insert(j, &flat[j * m..(j + 1) * m], &mut cell);
            }
            grid = Some(g);
            next_build *= 2;
        }
        let q = &flat[i * m..(i + 1) * m];
        search.reset();
        match &grid {
            None => search.brute(i, q),
            Some(g) => ring_search(g, &mut search, i, q, &mut qc, &mut cell),
        }
        // ties must be in ascending label order, as the reference scan yields
        search.ties.sort_unstable();
        parents.push(pick_tie(tie_seed, i, &search.ties) as u32);
        dists.push(search.best.sqrt());
        if let Some(g) = grid.as_mut() {
            g.insert(i, q, &mut cell);
        }
    }
    LabelledTree {
        parents,
        attach_distance: Some(dists),
    }
}

fn ring_search(g: &Grid, s: &mut Search<'_>, upto: usize, q: &[f64], qc: &mut [i64], cell: &mut [i64]) {
    g.cell_of(q, qc);
    let mut k: i64 = 0;
    loop {
        if g.periodic && 2 * k + 1 > g.g {
            // the ring would wrap onto itself: finish exhaustively
            s.reset();
            s.brute(upto, q);
            return;
        }
        let mut any_in_range = false;
        for_each_ring_offset(g.m, k, |off| {
            let mut inside = true;
            for a in 0..g.m {
                let c = qc[a] + off[a];
                if g.periodic {
                    cell[a] = c.rem_euclid(g.g);
                } else if (0..g.g).contains(&c) {
                    cell[a] = c;
                } else {
                    inside = false;
                    break;
                }
            }
            if !inside {
                return;
            }
            any_in_range = true;
            if let Some(list) = g.cells.get(&g.key(cell)) {
                for &j in list {
                    s.offer(j as usize, q);
                }
            }
        });
        if !g.periodic && !any_in_range {
            // every cell of the cube has been visited
            return;
        }
        if k >= 1 {
            let reach = k as f64 * g.h;
            if s.best < reach * reach * (1.0 - BOUND_MARGIN) {
                return;
            }
        }
        k += 1;
    }
}
