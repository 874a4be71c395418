use nntlab_core::nnt::{build_nnt, build_nnt_accelerated};
use nntlab_core::spaces::{sample_points, Point, Space};
use proptest::prelude::*;

fn spaces() -> Vec<Space> {
    vec![
        Space::Rrt,
        Space::Sphere { d: 1 },
        Space::Sphere { d: 2 },
        Space::Sphere { d: 3 },
        Space::Sphere { d: 5 },
        Space::Torus { d: 1 },
        Space::Torus { d: 2 },
        Space::Torus { d: 3 },
        Space::Torus { d: 4 },
        Space::Torus { d: 6 },
    ]
}

#[test]
fn accelerated_equals_naive_on_many_instances() {
    for space in spaces() {
        for seed in 0..20u64 {
            let pts = sample_points(space, 800, seed).unwrap();
            let a = build_nnt(space, &pts, seed).unwrap();
            let b = build_nnt_accelerated(space, &pts, seed).unwrap();
            assert_eq!(a, b, "{space} seed {seed}");
        }
    }
}

#[test]
fn sphere_200_example() {
    let s = Space::Sphere { d: 2 };
    let pts = sample_points(s, 200, 42).unwrap();
    assert_eq!(build_nnt(s, &pts, 1).unwrap(), build_nnt_accelerated(s, &pts, 1).unwrap());
}

#[test]
fn rrt_ten_thousand_equals_naive() {
    let pts = sample_points(Space::Rrt, 10_000, 0).unwrap();
    assert_eq!(
        build_nnt(Space::Rrt, &pts, 77).unwrap(),
        build_nnt_accelerated(Space::Rrt, &pts, 77).unwrap()
    );
}

#[test]
fn large_torus_prefix_matches_naive() {
    let s = Space::Torus { d: 2 };
    let pts = sample_points(s, 100_000, 3).unwrap();
    let big = build_nnt_accelerated(s, &pts, 0).unwrap();
    let prefix = build_nnt(s, &pts[..2000], 0).unwrap();
    assert_eq!(&big.parents()[..1999], prefix.parents());
}

#[test]
fn lattice_ties_are_resolved_identically() {
    // grid points produce many bitwise-equal distances
    let s = Space::Torus { d: 2 };
    let mut pts = Vec::new();
    for i in 0..16 {
        for j in 0..16 {
            pts.push(Point::new(vec![i as f64 / 16.0, j as f64 / 16.0]));
        }
    }
    // interleave so later points see several equidistant candidates
    pts.reverse();
    for seed in 0..5 {
        assert_eq!(build_nnt(s, &pts, seed).unwrap(), build_nnt_accelerated(s, &pts, seed).unwrap());
    }
}

#[test]
fn rrt_parent_is_uniform() {
    // chi-square over parent of node 10 (1-based) across seeds
    let n = 10;
    let reps = 100_000u64;
    let pts = sample_points(Space::Rrt, n, 0).unwrap();
    let mut counts = [0u64; 9];
    for seed in 0..reps {
        let t = build_nnt_accelerated(Space::Rrt, &pts, seed).unwrap();
        counts[t.parent(n - 1).unwrap()] += 1;
    }
    let expected = reps as f64 / 9.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9% quantile of chi-square with 8 degrees of freedom
    assert!(chi2 < 26.12, "chi2 = {chi2}, counts {counts:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parents_precede_children(space_idx in 0usize..10, n in 1usize..400, seed in any::<u64>()) {
        let space = spaces()[space_idx];
        let pts = sample_points(space, n, seed).unwrap();
        let t = build_nnt_accelerated(space, &pts, seed).unwrap();
        prop_assert_eq!(t.len(), n);
        for i in 1..n {
            prop_assert!(t.parent(i).unwrap() < i);
        }
        prop_assert_eq!(t, build_nnt(space, &pts, seed).unwrap());
    }

    #[test]
    fn attach_distance_is_the_minimum(n in 2usize..200, seed in any::<u64>()) {
        let space = Space::Sphere { d: 2 };
        let pts = sample_points(space, n, seed).unwrap();
        let t = build_nnt(space, &pts, 0).unwrap();
        let dist = t.attach_distance().unwrap();
        for i in 1..n {
            let best = (0..i)
                .map(|j| nntlab_core::spaces::distance(space, &pts[i], &pts[j]).unwrap())
                .fold(f64::INFINITY, f64::min);
            prop_assert!((dist[i - 1] - best).abs() <= 1e-12);
        }
    }
}
