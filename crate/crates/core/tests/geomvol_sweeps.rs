use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nntlab_core::geomvol::*;
use nntlab_core::quadrature::integrate;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

#[test]
fn kernel_shape() {
    // nonincreasing and convex on a log grid, values in [0, 1/2]
    let xs: Vec<f64> = (0..=400).map(|k| 10f64.powf(-6.0 + 14.0 * k as f64 / 400.0)).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| kernel(x).unwrap()).collect();
    assert!(fs.iter().all(|&f| (0.0..=0.5).contains(&f)));
    let slopes: Vec<f64> = (1..xs.len()).map(|i| (fs[i] - fs[i - 1]) / (xs[i] - xs[i - 1])).collect();
    assert!(slopes.iter().all(|&s| s <= 0.0));
    for w in slopes.windows(2) {
        assert!(w[1] >= w[0] - 1e-12 * w[0].abs());
    }
    assert!(kernel(-1e-3).is_err());
}

#[test]
fn kernel_integrates_to_one() {
    // ∫_0^∞ F: [0, 1] directly, [1, ∞) in t = ln u, tail ln(1+U)/U added exactly
    let head = integrate(kernel_value, 0.0, 1.0, 1e-12, 1_000_000).unwrap();
    let big: f64 = 1e9;
    let body = integrate(|t| kernel_value(t.exp()) * t.exp(), 0.0, big.ln(), 1e-12, 1_000_000).unwrap();
    let total = head.value + body.value + kernel_tail(big);
    assert!((total - 1.0).abs() < 1e-8, "{total}");
}

#[test]
fn lemma4_stratified_grid() {
    let dims = [2usize, 3, 4, 5, 7, 10, 14, 20, 25, 30];
    let mut checked = 0;
    let mut refined = 0;
    for &d in &dims {
        for i in 0..40 {
            let theta = PI * (i as f64 + 0.5) / 40.0;
            let zc = z_cut(theta);
            for k in 0..25 {
                let off = 10f64.powf(-4.0 + 6.0 * k as f64 / 24.0);
                let z = if zc > 0.0 { zc + off } else { off };
                let c = check_lemma4(z, theta, d).unwrap();
                assert!(c.holds(), "z={z} θ={theta} d={d}: {c:?}");
                checked += 1;
                refined += c.refined_bound.is_some() as usize;
            }
        }
    }
    assert_eq!(checked, 10_000);
    assert!(refined > 5_000);
}

#[test]
fn lemma5_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for i in 0..100_000 {
        let (u, eps) = if i % 2 == 0 {
            let u = log_uniform(&mut rng, 1e-6, 1e6);
            (u, u * rng.random::<f64>())
        } else {
            // the region with the extra two bounds
            let u = log_uniform(&mut rng, 1.1, 1e6);
            (u, rng.random::<f64>())
        };
        assert!(check_lemma5(u, eps).unwrap(), "u={u} eps={eps}");
    }
}

fn band_range(region: Prop7Region, d: usize) -> (f64, f64) {
    use Prop7Region::*;
    match region {
        AcuteAny => (0.0, FRAC_PI_4),
        SteepSmall => (b_angle(), FRAC_PI_2),
        SteepMid => (a_angle(d).max(FRAC_PI_4), FRAC_PI_2),
        SteepUpper | SteepTail => (FRAC_PI_4, FRAC_PI_2),
        _ => (FRAC_PI_2, PI),
    }
}

/// Candidate `u` range for a region at angle `θ`, before the domain cut.
fn u_range(region: Prop7Region, theta: f64, d: usize) -> (f64, f64) {
    use Prop7Region::*;
    let di = d as i32;
    let small = 0.1f64.powi(di);
    let c_pow = c_theta(theta).powi(di);
    match region {
        AcuteAny => (1e-300, z_cut(theta).powi(di) * 1e6),
        SteepSmall | ObtuseSmall => (small * 1e-12, small),
        SteepMid | ObtuseMid => (small, 1.1),
        SteepUpper => (1.1, c_pow),
        SteepTail => (c_pow, c_pow * 1e6),
        ObtuseUpper => (1.1, 10f64.powi(di)),
        ObtuseTail => (10f64.powi(di), 10f64.powi(di) * 1e6),
    }
}

#[test]
fn proposition7_every_region() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for &d in &[2usize, 5, 10, 20] {
        for region in Prop7Region::ALL {
            let (t0, t1) = band_range(region, d);
            let mut found = 0;
            let mut tries = 0;
            while found < 10_000 {
                tries += 1;
                assert!(tries < 2_000_000, "region {region:?} too thin at d={d}");
                let theta = t0 + (t1 - t0) * rng.random::<f64>();
                let (lo, hi) = u_range(region, theta, d);
                let lo = lo.max(z_cut(theta).powi(d as i32));
                if !(lo < hi) {
                    continue;
                }
                let u = log_uniform(&mut rng, lo.max(1e-300), hi);
                if u < z_cut(theta).powi(d as i32) || locate_prop7(u, theta, d).region != region {
                    continue;
                }
                let c = check_prop7(u, theta, d).unwrap();
                assert!(c.holds, "d={d} u={u} θ={theta}: {c:?}");
                found += 1;
            }
        }
    }
}

#[test]
fn lens_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut done = 0;
    while done < 6 {
        let d = rng.random_range(2..=6);
        let theta = PI * rng.random::<f64>();
        let z = z_cut(theta) + 2.0 * rng.random::<f64>() + 0.05;
        let exact = lens_ratio(z, theta, d).unwrap();
        let (mc, se) = lens_ratio_monte_carlo(z, theta, d, 1_000_000, done).unwrap();
        assert!((exact - mc).abs() <= 3.5 * se.max(1e-12), "z={z} θ={theta} d={d}: {exact} vs {mc} ± {se}");
        done += 1;
    }
}

#[test]
fn lens_monotone_in_theta_for_large_z() {
    for d in [2usize, 3, 6, 12] {
        for &z in &[2.0, 2.5, 4.0] {
            let mut prev = lens_ratio(z, 0.0, d).unwrap();
            for k in 1..=200 {
                let v = lens_ratio(z, PI * k as f64 / 200.0, d).unwrap();
                assert!(v >= prev - 1e-12 * v.max(1.0), "d={d} z={z} k={k}");
                prev = v;
            }
        }
    }
}

#[test]
fn dimension_constants() {
    for d in 1..60 {
        let k = DimConstants::new(d).unwrap();
        let a = ball_surface_area(d);
        assert!((a / (d as f64 * k.v_d()) - 1.0).abs() < 1e-12);
    }
    // stays finite far out
    let k = DimConstants::new(500).unwrap();
    assert!(k.prefactor_8.is_finite() && k.log_v_d.is_finite() && k.log_v_d < -800.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn lemma5_holds(u in 1e-8f64..1e8, frac in 0.0f64..=1.0) {
        prop_assert!(check_lemma5(u, u * frac).unwrap());
    }

    #[test]
    fn lemma4_holds(d in 2usize..=30, theta in 0.0f64..PI, off in 1e-6f64..50.0) {
        let z = z_cut(theta) + off;
        prop_assert!(check_lemma4(z, theta, d).unwrap().holds());
    }

    #[test]
    fn intersection_is_bounded(d in 2usize..=40, theta in 0.0f64..PI, off in 0.0f64..20.0) {
        let z = z_cut(theta) + off;
        prop_assume!(z > 0.0);
        let g = LensGeometry::new(z, theta, d).unwrap();
        let u = z.powi(d as i32);
        prop_assert!(g.intersection_ratio >= 0.0 && g.intersection_ratio <= u.min(1.0));
        prop_assert!(g.lens_ratio >= (u - 1.0).max(0.0) && g.lens_ratio <= u);
        let law = (1.0 + z * z - 2.0 * z * theta.cos()).max(0.0).sqrt();
        prop_assert!((g.delta - law).abs() <= 1e-12 * (1.0 + z));
    }

    #[test]
    fn lens_is_continuous(d in 2usize..=20, theta in 0.05f64..3.1, off in 1e-3f64..5.0) {
        let z = z_cut(theta) + off;
        let a = lens_ratio(z, theta, d).unwrap();
        let b = lens_ratio(z + 1e-9, theta, d).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a));
    }

    #[test]
    fn kernel_in_range(x in 0.0f64..1e12) {
        let f = kernel(x).unwrap();
        prop_assert!((0.0..=0.5).contains(&f));
    }
}
