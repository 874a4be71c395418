//! The property suite run by `verify`, one function per check.
//!
//! Each check runs at full size or, with [`Scale::Quick`], on a reduced
//! sample that keeps the whole suite under a minute.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};
use std::time::Instant;

use nntlab_core::geomvol::*;
use nntlab_core::locallimit::estimate_s_local;
use nntlab_core::nnt::{build_nnt, build_nnt_accelerated};
use nntlab_core::quadrature::*;
use nntlab_core::spaces::{replicate_seed, sample_points, stream_rng, Space};
use nntlab_core::special::harmonic;
use nntlab_core::stats::{depth_last, rrt_expected_mean_siblings, ks_critical, ks_statistic, root_degree, summarize, tree_stats};
use nntlab_core::Result;
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Full,
    Quick,
}

impl Scale {
    fn pick<T>(self, full: T, quick: T) -> T {
        match self {
            Scale::Full => full,
            Scale::Quick => quick,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{:<4}  {:<22} {:>8.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.detail
        )
    }
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn sim_rrt(scale: Scale, seed: u64) -> Outcome {
    timed("simulate-rrt", || {
        let reps = scale.pick(500, 100);
        let vals: Vec<f64> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let s = replicate_seed(seed, r);
                let pts = sample_points(Space::Rrt, 2000, s)?;
                Ok(tree_stats(&build_nnt_accelerated(Space::Rrt, &pts, s)?)?.mean_siblings)
            })
            .collect::<Result<_>>()?;
        let s = summarize(&vals);
        let exact = rrt_expected_mean_siblings(2000)?;
        Ok((
            s.within(exact, 3.0),
            format!("n=2000 reps={reps}: {:.5} ± {:.5} vs E_n = {exact:.5} (limit 2)", s.mean, s.std_error),
        ))
    })
}

pub fn sim_sphere_d1(scale: Scale, seed: u64) -> Outcome {
    timed("simulate-sphere-d1", || {
        let (n, reps) = scale.pick((50_000, 16), (10_000, 16));
        let vals: Vec<f64> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let s = replicate_seed(seed, r);
                let space = Space::Sphere { d: 1 };
                let pts = sample_points(space, n, s)?;
                Ok(tree_stats(&build_nnt_accelerated(space, &pts, s)?)?.mean_siblings)
            })
            .collect::<Result<_>>()?;
        let s = summarize(&vals);
        let target = 1.0 + LN_2;
        let ok = s.within(target, 3.0) && (s.mean - 1.6931).abs() <= 0.02;
        Ok((ok, format!("n={n} reps={reps}: {:.5} ± {:.5} vs {target:.6}", s.mean, s.std_error)))
    })
}

pub fn local_limit_d1(scale: Scale, seed: u64) -> Outcome {
    timed("locallimit-d1", || {
        let reps = scale.pick(50, 20);
        let e = estimate_s_local(1, 10_000.0, reps, seed)?;
        let target = 1.0 + LN_2;
        let ok = e.within(target, 3.0) && (e.mean - 1.6931).abs() <= 0.02;
        Ok((ok, format!("L=10000 reps={reps}: {:.5} ± {:.5} vs {target:.6}", e.mean, e.std_error)))
    })
}

pub fn reduced_integrals() -> Outcome {
    timed("reduced-integrals", || {
        let s_inf = s_infinity_reduced_integral()?;
        let s1 = s1_reduced_integral(1e-10)?;
        let ok = (s_inf.value - 2.0).abs() <= 1e-10 && (s1.value - (1.0 + LN_2)).abs() <= 1e-8;
        Ok((ok, format!("S_inf={:.12} S_1={:.12}", s_inf.value, s1.value)))
    })
}

pub fn normalization(scale: Scale) -> Outcome {
    timed("normalization", || {
        let top = scale.pick(12, 6);
        let vals: Vec<(usize, f64)> =
            (2..=top).into_par_iter().map(|d| Ok((d, normalization_integral(d, 1e-9)?.value))).collect::<Result<_>>()?;
        let worst = vals.iter().map(|v| (v.1 - 2.0).abs()).fold(0.0, f64::max);
        Ok((worst <= 1e-8, format!("d=2..{top}: max |I-2| = {worst:.2e}")))
    })
}

pub fn decomposition(scale: Scale) -> Outcome {
    timed("decomposition", || {
        let top = scale.pick(10, 5);
        let rows: Vec<SdRow> = (2..=top).into_par_iter().map(|d| sd_row(d, 1e-8)).collect::<Result<_>>()?;
        let bad: Vec<usize> = rows.iter().filter(|r| !r.decomposition_holds()).map(|r| r.d).collect();
        let worst = rows.iter().map(|r| r.decomposition_gap().abs() / r.combined_error()).fold(0.0, f64::max);
        Ok((bad.is_empty(), format!("d=2..{top}: max gap/err = {worst:.3}, failing {bad:?}")))
    })
}

/// Torus trees and Poisson windows against `S_d` from quadrature.
pub fn monte_carlo_agreement(scale: Scale, seed: u64) -> Outcome {
    timed("mc-vs-quadrature", || {
        let (n, reps) = scale.pick((100_000, 8), (20_000, 8));
        let windows = [(2usize, scale.pick(300.0, 100.0), scale.pick(30, 10)), (3, scale.pick(45.0, 20.0), scale.pick(30, 10))];
        let mut ok = true;
        let mut parts = Vec::new();
        for (k, &(d, side, wreps)) in windows.iter().enumerate() {
            let exact = s_d_direct(d, 1e-8)?.value;
            let space = Space::Torus { d };
            let base = replicate_seed(seed, k as u64);
            let vals: Vec<f64> = (0..reps as u64)
                .into_par_iter()
                .map(|r| {
                    let s = replicate_seed(base, r);
                    let pts = sample_points(space, n, s)?;
                    Ok(tree_stats(&build_nnt_accelerated(space, &pts, s)?)?.mean_siblings)
                })
                .collect::<Result<_>>()?;
            let sim = summarize(&vals);
            let local = estimate_s_local(d, side, wreps, replicate_seed(base, u64::MAX))?;
            ok &= sim.within(exact, 3.0) && local.within(exact, 3.0);
            parts.push(format!(
                "d={d}: S={exact:.6} torus {:.5}±{:.5} local {:.5}±{:.5}",
                sim.mean, sim.std_error, local.mean, local.std_error
            ));
        }
        Ok((ok, parts.join("; ")))
    })
}

pub fn t_plus_ratio() -> Outcome {
    timed("t-plus-asymptotic", || {
        let ratios: Vec<f64> = [25usize, 50, 100, 200]
            .par_iter()
            .map(|&d| {
                let a = t_plus_asymptotic(d);
                Ok(t_plus(d, 1e-9 * a)?.value / a)
            })
            .collect::<Result<_>>()?;
        let monotone = ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
        let last = ratios[3];
        let ok = monotone && (0.95..=1.05).contains(&last);
        Ok((ok, format!("ratios {ratios:.5?}")))
    })
}

pub fn t_minus_slope(scale: Scale) -> Outcome {
    timed("t-minus-decay", || {
        let rate = t_minus_rate();
        let dims: Vec<usize> = match scale {
            Scale::Full => (6..=20).collect(),
            Scale::Quick => (6..=12).collect(),
        };
        let vals: Vec<f64> = dims
            .par_iter()
            .map(|&d| Ok(t_minus(d, 1e-6 * rate.powi(d as i32))?.value))
            .collect::<Result<_>>()?;
        let nonneg = vals.iter().all(|&v| v >= 0.0);
        let xs: Vec<f64> = dims.iter().map(|&d| d as f64).collect();
        let ys: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
        let slope = fit_slope(&xs, &ys);
        let ok = nonneg && slope <= rate.ln() + 0.02;
        Ok((ok, format!("d={}..{}: slope {slope:.4} vs bound {:.4}", dims[0], dims[dims.len() - 1], rate.ln() + 0.02)))
    })
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn lemma6_constants() -> Outcome {
    timed("lemma6-constants", || {
        let a = lemma6_first(1e-12)?.value;
        let b = lemma6_second(1e-12)?.value;
        let r3 = 3f64.sqrt();
        let ea = (a - (PI * r3 - 3.0) / 8.0).abs();
        let eb = (b - (PI * r3 + 3.0) / 8.0).abs();
        Ok((ea <= 1e-10 && eb <= 1e-10, format!("errors {ea:.1e}, {eb:.1e}")))
    })
}

/// The stratified `(d, θ, z)` grid: 10 dimensions × 40 angles × 25 offsets
/// above the domain edge, log-spaced from `1e-4` to `1e2`.
pub fn lemma4_grid() -> Vec<(f64, f64, usize)> {
    let dims = [2usize, 3, 4, 5, 7, 10, 14, 20, 25, 30];
    let mut out = Vec::with_capacity(10_000);
    for &d in &dims {
        for i in 0..40 {
            let theta = PI * (i as f64 + 0.5) / 40.0;
            let zc = z_cut(theta);
            for k in 0..25 {
                let off = 10f64.powf(-4.0 + 6.0 * k as f64 / 24.0);
                out.push((if zc > 0.0 { zc + off } else { off }, theta, d));
            }
        }
    }
    out
}

/// Lemma 4 on the grid; `corrupt` swaps in a deliberately wrong lens ratio.
pub fn lemma4_sweep(corrupt: bool) -> Outcome {
    timed("lemma4-sweep", || {
        let grid = lemma4_grid();
        let lens = |z: f64, t: f64, d: usize| -> Result<f64> {
            let raw = LensGeometry::new(z, t, d)?.raw_lens_ratio;
            Ok(if corrupt { 0.5 * raw - 1.0 } else { raw })
        };
        let failures = grid
            .par_iter()
            .map(|&(z, t, d)| Ok(!check_lemma4_with(lens, z, t, d)?.holds() as usize))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum::<usize>();
        Ok((failures == 0, format!("{} points, {failures} failures{}", grid.len(), if corrupt { " (corrupted lens)" } else { "" })))
    })
}

pub fn lemma5_sweep(scale: Scale, seed: u64) -> Outcome {
    timed("lemma5-sweep", || {
        let count = scale.pick(100_000u64, 20_000);
        let failures: usize = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, i);
                let (u, eps) = if i % 2 == 0 {
                    let u = log_uniform(&mut rng, 1e-6, 1e6);
                    (u, u * rng.random::<f64>())
                } else {
                    (log_uniform(&mut rng, 1.1, 1e6), rng.random::<f64>())
                };
                Ok(!check_lemma5(u, eps)? as usize)
            })
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum();
        Ok((failures == 0, format!("{count} pairs, {failures} failures")))
    })
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

/// Rejection-samples `count` points of `region` at dimension `d`.
pub fn prop7_points(region: Prop7Region, d: usize, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = stream_rng(seed, 0);
    let (t0, t1) = band_range(region, d);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count && tries < 1000 * count {
        tries += 1;
        let theta = t0 + (t1 - t0) * rng.random::<f64>();
        let edge = z_cut(theta).powi(d as i32);
        let (lo, hi) = u_range(region, theta, d);
        let lo = lo.max(edge).max(1e-300);
        if !(lo < hi) {
            continue;
        }
        let u = log_uniform(&mut rng, lo, hi);
        if u >= edge && locate_prop7(u, theta, d).region == region {
            out.push((u, theta));
        }
    }
    out
}

pub fn prop7_sweep(scale: Scale, seed: u64) -> Outcome {
    timed("prop7-sweep", || {
        let per = scale.pick(10_000, 1_000);
        let jobs: Vec<(usize, Prop7Region)> =
            [2usize, 5, 10, 20].iter().flat_map(|&d| Prop7Region::ALL.into_iter().map(move |r| (d, r))).collect();
        let results: Vec<(usize, usize)> = jobs
            .par_iter()
            .enumerate()
            .map(|(k, &(d, region))| {
                let pts = prop7_points(region, d, per, replicate_seed(seed, k as u64));
                let mut bad = 0;
                for &(u, t) in &pts {
                    bad += !check_prop7(u, t, d)?.holds as usize;
                }
                Ok((pts.len(), bad))
            })
            .collect::<Result<_>>()?;
        let short = results.iter().filter(|r| r.0 < per).count();
        let bad: usize = results.iter().map(|r| r.1).sum();
        let total: usize = results.iter().map(|r| r.0).sum();
        Ok((bad == 0 && short == 0, format!("{total} points over {} cells, {bad} failures, {short} short cells", jobs.len())))
    })
}

pub fn lens_monte_carlo(scale: Scale, seed: u64) -> Outcome {
    timed("lens-monte-carlo", || {
        let (triples, samples) = scale.pick((20u64, 10_000_000u64), (5, 1_000_000));
        let mut worst: f64 = 0.0;
        for k in 0..triples {
            let mut rng = stream_rng(seed, k);
            let d = rng.random_range(2..=6usize);
            let theta = PI * rng.random::<f64>();
            let z = z_cut(theta) + 2.0 * rng.random::<f64>() + 0.05;
            let exact = lens_ratio(z, theta, d)?;
            let (mc, se) = lens_ratio_monte_carlo(z, theta, d, samples, replicate_seed(seed, k))?;
            worst = worst.max((exact - mc).abs() / se);
        }
        Ok((worst <= 3.0, format!("{triples} triples × {samples} samples, max |Δ|/se = {worst:.2}")))
    })
}

pub fn tree_identities(scale: Scale, seed: u64) -> Outcome {
    timed("tree-identities", || {
        let count = scale.pick(10_000u64, 2_000);
        let spaces = [Space::Rrt, Space::Sphere { d: 1 }, Space::Torus { d: 2 }, Space::Sphere { d: 3 }];
        let bad: usize = (0..count)
            .into_par_iter()
            .map(|r| {
                let space = spaces[(r % 4) as usize];
                let n = 2 + (r % 197) as usize;
                let s = replicate_seed(seed, r);
                let pts = sample_points(space, n, s)?;
                Ok(!tree_stats(&build_nnt_accelerated(space, &pts, s)?)?.deg_identity_holds() as usize)
            })
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum();
        Ok((bad == 0, format!("{count} trees, {bad} violations")))
    })
}

pub fn rrt_root_degree(scale: Scale, seed: u64) -> Outcome {
    timed("rrt-root-degree", || {
        let reps = scale.pick(10_000u64, 2_000);
        let pts = sample_points(Space::Rrt, 100, 0)?;
        let degs: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| Ok(root_degree(&build_nnt_accelerated(Space::Rrt, &pts, replicate_seed(seed, r))?) as f64))
            .collect::<Result<_>>()?;
        let s = summarize(&degs);
        let h = harmonic(99);
        Ok((s.within(h, 3.0), format!("{reps} trees: {:.4} ± {:.4} vs H_99 = {h:.6}", s.mean, s.std_error)))
    })
}

pub fn depth_ks(scale: Scale, seed: u64) -> Outcome {
    timed("depth-ks", || {
        let reps = scale.pick(10_000u64, 2_000);
        let depth = |space: Space, base: u64| -> Result<Vec<f64>> {
            (0..reps)
                .into_par_iter()
                .map(|r| {
                    let s = replicate_seed(base, r);
                    let pts = sample_points(space, 200, s)?;
                    Ok(depth_last(&build_nnt_accelerated(space, &pts, s)?) as f64)
                })
                .collect()
        };
        let a = depth(Space::Sphere { d: 1 }, replicate_seed(seed, 0))?;
        let b = depth(Space::Rrt, replicate_seed(seed, 1))?;
        let ks = ks_statistic(&a, &b);
        let crit = ks_critical(0.01, a.len(), b.len());
        Ok((ks < crit, format!("n=200, {reps} each: D = {ks:.4} vs {crit:.4}")))
    })
}

pub fn builder_equivalence(scale: Scale, seed: u64) -> Outcome {
    timed("builder-equivalence", || {
        let per = scale.pick(100u64, 20);
        let kinds = [Space::Sphere { d: 0 }, Space::Torus { d: 0 }, Space::Rrt];
        let jobs: Vec<(Space, u64)> = kinds
            .iter()
            .flat_map(|&k| {
                (0..per).map(move |i| {
                    let d = 1 + (i % 4) as usize;
                    let space = match k {
                        Space::Sphere { .. } => Space::Sphere { d },
                        Space::Torus { .. } => Space::Torus { d },
                        Space::Rrt => Space::Rrt,
                    };
                    (space, i)
                })
            })
            .collect();
        let bad: usize = jobs
            .par_iter()
            .enumerate()
            .map(|(k, &(space, _))| {
                let s = replicate_seed(seed, k as u64);
                let pts = sample_points(space, 2000, s)?;
                let a = build_nnt(space, &pts, s)?;
                let b = build_nnt_accelerated(space, &pts, s)?;
                Ok((a.parents() != b.parents()) as usize)
            })
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum();
        Ok((bad == 0, format!("{} instances at n=2000, {bad} mismatches", jobs.len())))
    })
}

/// Every check in table order.
pub fn run_all(scale: Scale, seed: u64, corrupt_lens: bool) -> Vec<Outcome> {
    let s = |k: u64| replicate_seed(seed, k);
    vec![
        sim_sphere_d1(scale, s(1)),
        local_limit_d1(scale, s(2)),
        sim_rrt(scale, s(3)),
        reduced_integrals(),
        normalization(scale),
        decomposition(scale),
        monte_carlo_agreement(scale, s(6)),
        t_plus_ratio(),
        t_minus_slope(scale),
        lemma6_constants(),
        lemma4_sweep(corrupt_lens),
        lemma5_sweep(scale, s(11)),
        prop7_sweep(scale, s(12)),
        lens_monte_carlo(scale, s(13)),
        tree_identities(scale, s(14)),
        rrt_root_degree(scale, s(15)),
        depth_ks(scale, s(16)),
        builder_equivalence(scale, s(17)),
    ]
}
