//! Globally adaptive 7/15-point Gauss–Kronrod integration.
//!
//! Each panel's error is `|K15 - G7|` (no QUADPACK rescaling, so the
//! estimate stays conservative) plus the propagated error of the integrand
//! itself, for integrands that are inner integrals. The panel with the
//! largest error is bisected until the total falls below the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Panels whose error is below this fraction of `∫|f|` cannot be improved.
const ROUNDOFF_FLOOR: f64 = 1e-15;

/// Value, error bound and cost of a numerical integral.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadResult {
    pub value: f64,
    /// Absolute error estimate, quadrature plus truncation.
    pub abs_error_estimate: f64,
    /// Integrand evaluations, inner integrals included.
    pub evaluations: usize,
    /// Bound on the discarded part of an infinite range.
    pub truncation_bound: f64,
}

impl QuadResult {
    /// Sum of two independent estimates (errors add).
    pub fn plus(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            abs_error_estimate: self.abs_error_estimate + other.abs_error_estimate,
            evaluations: self.evaluations + other.evaluations,
            truncation_bound: self.truncation_bound + other.truncation_bound,
        }
    }

    /// Multiplies the value and the errors by `|c|`-scaled amounts.
    pub fn scaled(self, c: f64) -> QuadResult {
        QuadResult {
            value: self.value * c,
            abs_error_estimate: self.abs_error_estimate * c.abs(),
            evaluations: self.evaluations,
            truncation_bound: self.truncation_bound * c.abs(),
        }
    }
}

/// Sample of an integrand: its value and the absolute error of that value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl Sample {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error: 0.0,
            evaluations: 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
    seq: u64,
}

impl Panel {
    fn improvable(&self) -> bool {
        let mid = 0.5 * (self.a + self.b);
        mid > self.a && mid < self.b && self.error > ROUNDOFF_FLOOR * self.resabs
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn gk15<F: FnMut(f64) -> Sample>(f: &mut F, a: f64, b: f64, evals: &mut usize, seq: u64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = 0.0;
    let mut gauss = 0.0;
    let mut resabs = 0.0;
    let mut inner_err = 0.0;
    let mut take = |x: f64, wk: f64, wg: f64, kron: &mut f64, gauss: &mut f64| {
        let s = f(x);
        *evals += s.evaluations;
        *kron += wk * s.value;
        *gauss += wg * s.value;
        resabs += wk * s.value.abs();
        inner_err += wk * s.error;
    };
    take(c, WGK[7], WG[3], &mut kron, &mut gauss);
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        let dx = h * XGK[j];
        take(c - dx, WGK[j], wg, &mut kron, &mut gauss);
        take(c + dx, WGK[j], wg, &mut kron, &mut gauss);
    }
    let h = h.abs();
    Panel {
        a,
        b,
        value: kron * (0.5 * (b - a)),
        error: (kron - gauss).abs() * h + inner_err * h,
        resabs: resabs * h,
        seq,
    }
}

/// Adaptive integration of an integrand that reports its own error.
///
/// `breaks` are the panel edges to start from (at least two, increasing).
/// Fails with [`Error::NoConvergence`] when `budget` evaluations are spent
/// before the error estimate drops to `tol`.
pub fn integrate_samples<F>(mut f: F, breaks: &[f64], tol: f64, budget: usize) -> Result<QuadResult>
where
    F: FnMut(f64) -> Sample,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("breakpoints must be increasing".into()));
    }
    let mut evals = 0usize;
    let mut seq = 0u64;
    let mut heap = BinaryHeap::new();
    let mut done: Vec<Panel> = Vec::new();
    for w in breaks.windows(2) {
        let p = gk15(&mut f, w[0], w[1], &mut evals, seq);
        seq += 1;
        if p.improvable() {
            heap.push(p);
        } else {
            done.push(p);
        }
    }
    let total_err = |heap: &BinaryHeap<Panel>, done: &[Panel]| -> f64 {
        heap.iter().chain(done.iter()).map(|p| p.error).sum()
    };
    let mut err = total_err(&heap, &done);
    while err > tol {
        let Some(worst) = heap.pop() else {
            break;
        };
        if evals >= budget {
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&mut f, worst.a, mid, &mut evals, seq);
        let right = gk15(&mut f, mid, worst.b, &mut evals, seq + 1);
        seq += 2;
        err += left.error + right.error - worst.error;
        for p in [left, right] {
            if p.improvable() {
                heap.push(p);
            } else {
                done.push(p);
            }
        }
        if err <= tol {
            // guard against drift in the running sum
            err = total_err(&heap, &done);
        }
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(done);
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().map(|p| p.value).sum();
    let err = panels.iter().map(|p| p.error).sum::<f64>();
    if err > tol {
        // roundoff-limited panels are accepted if they are all that is left
        let improvable_err: f64 = panels.iter().filter(|p| p.improvable()).map(|p| p.error).sum();
        if improvable_err > 0.0 || evals >= budget {
            return Err(Error::NoConvergence {
                tol,
                budget,
                estimate: value,
            });
        }
    }
    Ok(QuadResult {
        value,
        abs_error_estimate: err,
        evaluations: evals,
        truncation_bound: 0.0,
    })
}

/// Adaptive integration of a plain function over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64, budget: usize) -> Result<QuadResult>
where
    F: FnMut(f64) -> f64,
{
    integrate_samples(|x| Sample::exact(f(x)), &[a, b], tol, budget)
}

/// Adaptive integration of a plain function starting from the given panels.
pub fn integrate_breaks<F>(mut f: F, breaks: &[f64], tol: f64, budget: usize) -> Result<QuadResult>
where
    F: FnMut(f64) -> f64,
{
    integrate_samples(|x| Sample::exact(f(x)), breaks, tol, budget)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        // K15 integrates degree 22 exactly
        let r = integrate(|x| x.powi(10) - 3.0 * x.powi(3), -1.0, 2.0, 1e-12, 10_000).unwrap();
        let exact = (2.0_f64.powi(11) + 1.0) / 11.0 - 3.0 * (16.0 - 1.0) / 4.0;
        assert!((r.value - exact).abs() < 1e-12);
        assert_eq!(r.evaluations, 15);
    }

    #[test]
    fn log_singularity() {
        let r = integrate(|x| -x.ln(), 0.0, 1.0, 1e-12, 100_000).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(r.abs_error_estimate <= 1e-12);
    }

    #[test]
    fn peaked_integrand_with_breaks() {
        let f = |x: f64| 1.0 / (1e-4 + (x - 0.3).powi(2));
        let exact = 1e2 * ((0.7 / 1e-2_f64).atan() + (0.3 / 1e-2_f64).atan());
        let r = integrate_breaks(f, &[0.0, 0.3, 1.0], 1e-9, 100_000).unwrap();
        assert!((r.value - exact).abs() < 1e-9);
    }

    #[test]
    fn error_estimate_is_honest_on_oscillation() {
        let r = integrate(|x| (30.0 * x).sin(), 0.0, 3.0, 1e-10, 100_000).unwrap();
        let exact = (1.0 - (90.0_f64).cos()) / 30.0;
        assert!((r.value - exact).abs() <= r.abs_error_estimate.max(1e-15));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let r = integrate(|x| (1.0 / x).sin(), 1e-9, 1.0, 1e-14, 300);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(integrate(|x| x, 0.0, 1.0, 0.0, 100).is_err());
        assert!(integrate_breaks(|x| x, &[0.0, 0.0], 1e-6, 100).is_err());
    }

    #[test]
    fn inner_errors_propagate() {
        let r = integrate_samples(
            |x| Sample {
                value: x,
                error: 1e-3,
                evaluations: 1,
            },
            &[0.0, 1.0],
            1.0,
            1000,
        )
        .unwrap();
        // Kronrod weights sum to 2, times the half-width 1/2
        assert!((r.abs_error_estimate - 1e-3).abs() < 1e-12);
    }
}
