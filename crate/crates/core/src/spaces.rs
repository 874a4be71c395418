//! Metric spaces that nearest-neighbour trees are grown on, and reproducible
//! uniform sampling on them.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), a counter-based generator:
//! point `i` of a sample is drawn from stream `i` of the generator keyed by the
//! seed, so a sample can be sharded by index range and is bitwise-identical
//! across platforms. Gaussians use Box–Muller, which consumes a fixed number
//! of uniforms per variate.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A sampleable metric space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    /// Unit `d`-sphere embedded in `R^{d+1}` with the chordal metric.
    Sphere { d: usize },
    /// `[0,1)^d` with the wrap-around Euclidean metric.
    Torus { d: usize },
    /// Constant metric: every pair of distinct points is at distance 1.
    Rrt,
}

/// A point of a [`Space`]; empty for [`Space::Rrt`].
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

impl Space {
    pub fn sphere(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Space::Sphere { d })
    }

    pub fn torus(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Space::Torus { d })
    }

    /// Intrinsic dimension, 0 for the RRT metric.
    pub fn dim(&self) -> usize {
        match *self {
            Space::Sphere { d } | Space::Torus { d } => d,
            Space::Rrt => 0,
        }
    }

    /// Number of coordinates stored per point.
    pub fn coord_len(&self) -> usize {
        match *self {
            Space::Sphere { d } => d + 1,
            Space::Torus { d } => d,
            Space::Rrt => 0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Space::Sphere { .. } => "sphere",
            Space::Torus { .. } => "torus",
            Space::Rrt => "rrt",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Space::Sphere { d } | Space::Torus { d } => check_dim(d),
            Space::Rrt => Ok(()),
        }
    }

    pub(crate) fn check_point(&self, p: &Point) -> Result<()> {
        if p.coords.len() != self.coord_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coord_len(),
                got: p.coords.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Sphere { d } => write!(f, "sphere(d={d})"),
            Space::Torus { d } => write!(f, "torus(d={d})"),
            Space::Rrt => write!(f, "rrt"),
        }
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::Dimension { min: 1, got: 0 });
    }
    Ok(())
}

/// Generator for item `index` of the sample keyed by `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed of replicate `index` in an experiment keyed by `base`.
///
/// Depends only on `(base, index)`, so results do not depend on how
/// replicates are scheduled.
pub fn replicate_seed(base: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base ^ 0x6a09_e667_f3bc_c908);
    rng.set_stream(index);
    rng.next_u64()
}

/// Fills `out` with independent standard normals (Box–Muller).
pub(crate) fn fill_gaussian<R: Rng>(rng: &mut R, out: &mut [f64]) {
    let mut k = 0;
    while k < out.len() {
        // 1 - U lies in (0, 1], so the log is finite
        let u1 = 1.0 - rng.random::<f64>();
        let u2 = rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        out[k] = r * c;
        if k + 1 < out.len() {
            out[k + 1] = r * s;
        }
        k += 2;
    }
}

/// Writes one uniform point of `space` into `out` (length `coord_len`).
pub(crate) fn sample_into(space: Space, rng: &mut ChaCha8Rng, out: &mut [f64]) {
    match space {
        Space::Sphere { .. } => loop {
            fill_gaussian(rng, out);
            let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            // a zero vector has probability zero but would poison the point
            if norm > 0.0 {
                out.iter_mut().for_each(|x| *x /= norm);
                break;
            }
        },
        Space::Torus { .. } => out.iter_mut().for_each(|x| *x = rng.random::<f64>()),
        Space::Rrt => {}
    }
}

/// Draws `n` i.i.d. uniform points of `space`, deterministically in `seed`.
pub fn sample_points(space: Space, n: usize, seed: u64) -> Result<Vec<Point>> {
    space.validate()?;
    if n == 0 {
        return Err(Error::TooFew { min: 1, got: 0 });
    }
    let m = space.coord_len();
    Ok((0..n)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut coords = vec![0.0; m];
            sample_into(space, &mut rng, &mut coords);
            Point { coords }
        })
        .collect())
}

/// Squared distance on raw coordinate slices. No validation; hot loops only.
#[inline]
pub(crate) fn dist2(space: Space, a: &[f64], b: &[f64]) -> f64 {
    match space {
        Space::Sphere { .. } => {
            let mut acc = 0.0;
            for (x, y) in a.iter().zip(b) {
                let t = x - y;
                acc += t * t;
            }
            acc
        }
        Space::Torus { .. } => {
            let mut acc = 0.0;
            for (x, y) in a.iter().zip(b) {
                let t = torus_gap(*x, *y);
                acc += t * t;
            }
            acc
        }
        Space::Rrt => 1.0,
    }
}

#[inline]
pub(crate) fn torus_gap(x: f64, y: f64) -> f64 {
    let t = (x - y).abs();
    t.min(1.0 - t)
}

/// Distance between two points of `space`.
///
/// Sphere: chordal distance in the embedding. Torus: wrap-around Euclidean
/// distance. Rrt: the constant 1 (the tree builder never compares a point
/// with itself).
pub fn distance(space: Space, a: &Point, b: &Point) -> Result<f64> {
    space.check_point(a)?;
    space.check_point(b)?;
    Ok(dist2(space, &a.coords, &b.coords).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_points_are_unit() {
        let pts = sample_points(Space::Sphere { d: 1 }, 1000, 7).unwrap();
        assert_eq!(pts.len(), 1000);
        for p in &pts {
            let n = p.coords.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn torus_sampling_is_deterministic_and_in_range() {
        let a = sample_points(Space::Torus { d: 3 }, 5, 1).unwrap();
        let b = sample_points(Space::Torus { d: 3 }, 5, 1).unwrap();
        assert_eq!(a, b);
        for p in &a {
            assert_eq!(p.coords.len(), 3);
            assert!(p.coords.iter().all(|&x| (0.0..1.0).contains(&x)));
        }
        let c = sample_points(Space::Torus { d: 3 }, 5, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn prefix_does_not_depend_on_n() {
        let a = sample_points(Space::Sphere { d: 2 }, 10, 9).unwrap();
        let b = sample_points(Space::Sphere { d: 2 }, 50, 9).unwrap();
        assert_eq!(a[..], b[..10]);
    }

    #[test]
    fn sphere_coordinate_means_are_centred() {
        let n = 100_000;
        let pts = sample_points(Space::Sphere { d: 2 }, n, 3).unwrap();
        let band = 4.0 / (n as f64).sqrt();
        for k in 0..3 {
            let mean = pts.iter().map(|p| p.coords[k]).sum::<f64>() / n as f64;
            assert!(mean.abs() < band, "coordinate {k} mean {mean}");
        }
    }

    #[test]
    fn rrt_points_are_empty() {
        let pts = sample_points(Space::Rrt, 4, 0).unwrap();
        assert!(pts.iter().all(|p| p.coords.is_empty()));
        assert_eq!(distance(Space::Rrt, &pts[0], &pts[1]).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            sample_points(Space::Torus { d: 2 }, 0, 1),
            Err(Error::TooFew { .. })
        ));
        assert!(matches!(
            sample_points(Space::Sphere { d: 0 }, 3, 1),
            Err(Error::Dimension { .. })
        ));
        assert!(Space::sphere(0).is_err());
    }

    #[test]
    fn known_distances() {
        let s = Space::Sphere { d: 1 };
        let a = Point::new(vec![1.0, 0.0]);
        let b = Point::new(vec![-1.0, 0.0]);
        assert_eq!(distance(s, &a, &b).unwrap(), 2.0);

        let t = Space::Torus { d: 2 };
        let a = Point::new(vec![0.1, 0.1]);
        let b = Point::new(vec![0.9, 0.1]);
        assert!((distance(t, &a, &b).unwrap() - 0.2).abs() < 1e-15);

        let bad = Point::new(vec![0.1]);
        assert!(matches!(
            distance(t, &a, &bad),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn metric_axioms_on_samples() {
        for space in [Space::Sphere { d: 2 }, Space::Torus { d: 3 }] {
            let pts = sample_points(space, 3000, 11).unwrap();
            for t in pts.chunks(3) {
                let (a, b, c) = (&t[0], &t[1], &t[2]);
                let ab = distance(space, a, b).unwrap();
                let ba = distance(space, b, a).unwrap();
                let bc = distance(space, b, c).unwrap();
                let ac = distance(space, a, c).unwrap();
                assert_eq!(ab, ba);
                assert_eq!(distance(space, a, a).unwrap(), 0.0);
                assert!(ac <= ab + bc + 1e-12);
            }
        }
    }
}
