//! Labelled nearest-neighbour trees.
//!
//! Node `i` (0-based here, 1-based in dumps) attaches to the earlier point
//! nearest to it. Ties are resolved uniformly at random among all earlier
//! points whose squared distance is bitwise equal to the minimum; the choice
//! for node `i` is drawn from stream `i` of the tie generator, so it does not
//! depend on how the candidates were found. Under the RRT metric every
//! earlier point ties and the tree is a random recursive tree.

pub(crate) mod grid;

use std::io::{self, BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::spaces::{dist2, stream_rng, Point, Space};

/// A recursive tree on nodes `0..n`: every node `i >= 1` has a parent `< i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledTree {
    /// `parents[i - 1]` is the parent of node `i`.
    parents: Vec<u32>,
    attach_distance: Option<Vec<f64>>,
}

impl LabelledTree {
    /// Builds a tree from the parents of nodes `1..n` (0-based labels).
    pub fn from_parents(parents: Vec<usize>) -> Result<Self> {
        let mut packed = Vec::with_capacity(parents.len());
        for (k, &p) in parents.iter().enumerate() {
            let node = k + 1;
            if p >= node {
                return Err(Error::InvalidArgument(format!(
                    "parent of node {node} is {p}, must be smaller"
                )));
            }
            packed.push(p as u32);
        }
        Ok(Self {
            parents: packed,
            attach_distance: None,
        })
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.parents.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Parent of node `i`, `None` for the root.
    pub fn parent(&self, i: usize) -> Option<usize> {
        if i == 0 {
            None
        } else {
            Some(self.parents[i - 1] as usize)
        }
    }

    /// Parents of nodes `1..n`.
    pub fn parents(&self) -> &[u32] {
        &self.parents
    }

    /// Realized attachment distances of nodes `1..n`, when recorded.
    pub fn attach_distance(&self) -> Option<&[f64]> {
        self.attach_distance.as_deref()
    }

    /// Tree dump: one line per node, `i<TAB>parent`, 1-indexed, root parent 0.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "1\t0")?;
        for (k, &p) in self.parents.iter().enumerate() {
            writeln!(out, "{}\t{}", k + 2, p + 1)?;
        }
        Ok(())
    }

    /// Parses the format written by [`LabelledTree::write_dump`].
    pub fn read_dump<R: BufRead>(input: R) -> Result<Self> {
        let mut parents = Vec::new();
        let mut saw_root = false;
        for (line_no, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidArgument(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::InvalidArgument(format!("malformed dump line {}", line_no + 1));
            let mut it = line.split('\t');
            let node: usize = it.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
            let parent: usize = it.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
            if node != line_no + 1 {
                return Err(bad());
            }
            if node == 1 {
                if parent != 0 {
                    return Err(bad());
                }
                saw_root = true;
            } else {
                if parent == 0 {
                    return Err(bad());
                }
                parents.push(parent - 1);
            }
        }
        if !saw_root {
            return Err(Error::InvalidArgument("empty tree dump".into()));
        }
        Self::from_parents(parents)
    }
}

/// Validates the input and packs the coordinates row-major.
fn flatten(space: Space, points: &[Point]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::TooFew { min: 1, got: 0 });
    }
    let m = space.coord_len();
    let mut flat = Vec::with_capacity(points.len() * m);
    for p in points {
        space.check_point(p)?;
        flat.extend_from_slice(&p.coords);
    }
    Ok(flat)
}

/// Chooses uniformly among tied candidates, which must be sorted ascending.
fn pick_tie(tie_seed: u64, node: usize, ties: &[usize]) -> usize {
    if ties.len() == 1 {
        ties[0]
    } else {
        let mut rng = stream_rng(tie_seed, node as u64);
        ties[rng.random_range(0..ties.len())]
    }
}

/// Reference O(n²) builder: scans every earlier point for every node.
pub fn build_nnt(space: Space, points: &[Point], tie_seed: u64) -> Result<LabelledTree> {
    let flat = flatten(space, points)?;
    let m = space.coord_len();
    let n = points.len();
    let mut parents = Vec::with_capacity(n.saturating_sub(1));
    let mut dists = Vec::with_capacity(n.saturating_sub(1));
    let mut ties = Vec::new();
    for i in 1..n {
        let q = &flat[i * m..(i + 1) * m];
        let mut best = f64::INFINITY;
        ties.clear();
        for j in 0..i {
            let d2 = dist2(space, &flat[j * m..(j + 1) * m], q);
            if d2 < best {
                best = d2;
                ties.clear();
                ties.push(j);
            } else if d2 == best {
                ties.push(j);
            }
        }
        parents.push(pick_tie(tie_seed, i, &ties) as u32);
        dists.push(best.sqrt());
    }
    Ok(LabelledTree {
        parents,
        attach_distance: Some(dists),
    })
}

/// Same contract as [`build_nnt`], with an exact accelerated search.
///
/// * Rrt: the parent is drawn directly, as the tie rule would.
/// * Torus with `d <= 4`, Sphere with `d <= 3`: uniform cell grid (periodic
///   for the torus, over the embedding cube for the sphere) with
///   expanding-ring search, rebuilt each time the point count doubles.
/// * Otherwise: a linear scan over a structure-of-arrays coordinate layout.
pub fn build_nnt_accelerated(space: Space, points: &[Point], tie_seed: u64) -> Result<LabelledTree> {
    let flat = flatten(space, points)?;
    let n = points.len();
    match space {
        Space::Rrt => {
            let parents = (1..n)
                .map(|i| {
                    if i == 1 {
                        0
                    } else {
                        stream_rng(tie_seed, i as u64).random_range(0..i) as u32
                    }
                })
                .collect();
            Ok(LabelledTree {
                parents,
                attach_distance: Some(vec![1.0; n - 1]),
            })
        }
        Space::Torus { d } if d <= grid::MAX_TORUS_DIM => Ok(grid::build(space, &flat, n, tie_seed)),
        Space::Sphere { d } if d <= grid::MAX_SPHERE_DIM => Ok(grid::build(space, &flat, n, tie_seed)),
        _ => Ok(build_soa_scan(space, &flat, n, tie_seed)),
    }
}

fn build_soa_scan(space: Space, flat: &[f64], n: usize, tie_seed: u64) -> LabelledTree {
    let m = space.coord_len();
    let torus = matches!(space, Space::Torus { .. });
    let cols: Vec<Vec<f64>> = (0..m).map(|k| (0..n).map(|i| flat[i * m + k]).collect()).collect();
    let mut buf = vec![0.0; n];
    let mut parents = Vec::with_capacity(n.saturating_sub(1));
    let mut dists = Vec::with_capacity(n.saturating_sub(1));
    let mut ties = Vec::new();
    for i in 1..n {
        let acc = &mut buf[..i];
        acc.iter_mut().for_each(|x| *x = 0.0);
        // same summation order as `dist2`, so values are bitwise identical
        for col in &cols {
            let qk = col[i];
            if torus {
                for (a, &x) in acc.iter_mut().zip(&col[..i]) {
                    let t = crate::spaces::torus_gap(x, qk);
                    *a += t * t;
                }
            } else {
                for (a, &x) in acc.iter_mut().zip(&col[..i]) {
                    let t = x - qk;
                    *a += t * t;
                }
            }
        }
        let best = acc.iter().copied().fold(f64::INFINITY, f64::min);
        ties.clear();
        ties.extend(acc.iter().enumerate().filter(|(_, &v)| v == best).map(|(j, _)| j));
        parents.push(pick_tie(tie_seed, i, &ties) as u32);
        dists.push(best.sqrt());
    }
    LabelledTree {
        parents,
        attach_distance: Some(dists),
    }
}
