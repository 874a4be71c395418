use std::f64::consts::LN_2;

use nntlab_core::locallimit::*;
use nntlab_core::nnt::build_nnt;
use nntlab_core::spaces::Space;
use nntlab_core::stats::summarize;

#[test]
fn point_count_is_poisson() {
    let side = 20.0;
    let counts: Vec<f64> = (0..1000u64).map(|s| sample_poisson_nn(2, side, s).unwrap().len() as f64).collect();
    let s = summarize(&counts);
    // standard deviation of a Poisson(400) mean over 1000 draws
    let sigma = (400.0f64 / 1000.0).sqrt();
    assert!((s.mean - 400.0).abs() <= 3.0 * sigma, "{}", s.mean);
}

#[test]
fn parents_have_smaller_labels() {
    let s = sample_poisson_nn(1, 50.0, 3).unwrap();
    let roots = s.parents.iter().filter(|p| p.is_none()).count();
    assert_eq!(roots, 1);
    for (i, p) in s.parents.iter().enumerate() {
        if let Some(p) = p {
            assert!(s.labels[*p] < s.labels[i]);
        }
    }
}

#[test]
fn equals_label_sorted_torus_tree() {
    for (d, side) in [(1usize, 500.0), (2, 30.0), (3, 9.0)] {
        for seed in 0..3 {
            let s = sample_poisson_nn(d, side, seed).unwrap();
            let (pts, order) = s.unit_torus_points();
            let tree = build_nnt(Space::Torus { d }, &pts, 0).unwrap();
            let mut rank = vec![0; s.len()];
            for (r, &i) in order.iter().enumerate() {
                rank[i] = r;
            }
            for (r, &i) in order.iter().enumerate().skip(1) {
                assert_eq!(tree.parent(r), s.parents[i].map(|p| rank[p]));
            }
        }
    }
}

#[test]
fn dimension_one_limit() {
    let e = estimate_s_local(1, 10_000.0, 50, 1).unwrap();
    let target = 1.0 + LN_2;
    assert!(e.within(target, 3.0), "{} ± {}", e.mean, e.std_error);
}

#[test]
fn rrt_mode_limit() {
    let e = estimate_s_local_mode(LocalMode::Rrt, 1, 10_000.0, 50, 2).unwrap();
    assert!(e.within(2.0, 3.0), "{} ± {}", e.mean, e.std_error);
}

#[test]
fn window_doubling_agrees() {
    let c = window_doubling_check(2, 60.0, 40, 4, 3.0).unwrap();
    assert!(c.agree, "{:?}", c);
}
