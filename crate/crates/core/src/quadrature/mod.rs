//! Numerical evaluation of the limiting mean sibling count `S_d`, its split
//! `S_d = 2 - T₊(d) + T₋(d)`, and the reduced integrals behind `S_1` and
//! `S_∞`.
//!
//! The double integrals over `(θ, u)` use `u = z^d` as inner variable. The
//! inner range `[z(θ)^d, ∞)` is cut at a point `U` whose tail is bounded
//! analytically through `F(L) <= F(u - 1)`. Beyond `u = 1` the inner
//! integrand is integrated in `t = ln u`, where it decays like `t e^{-t}`.
//!
//! Error budget for a requested `tol`: at most `tol/10` for the discarded
//! tail and `9 tol/10` for the adaptive part, inner integrals included.

pub mod gk;

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, LN_2, PI};

pub use gk::{integrate, integrate_breaks, integrate_samples, QuadResult, Sample};

use crate::error::{Error, Result};
use crate::geomvol::{kernel_value, one_minus_log1p_ratio, z_cut, DimConstants, LensGeometry};
use crate::special::ln_gamma;

/// Evaluation budget of a full double integral, inner evaluations included.
pub const DEFAULT_BUDGET: usize = 400_000_000;
/// Evaluation budget of one inner integral.
const INNER_BUDGET: usize = 4_000_000;

/// Which function of `(u, θ)` a double integral integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    /// `F(L(u^{1/d}, θ) / V_d)` from `z(θ)^d`: the integral of `S_d`.
    Lens,
    /// `F(u)` from `0`: the normalization identity, equal to 2.
    Free,
    /// `F(L / V_d) - F(u)` from `z(θ)^d`: the integral of `T₋(d)`.
    Excess,
}

impl Integrand {
    /// Bound on `∫_U^∞` of the inner integrand.
    fn tail(self, big_u: f64) -> f64 {
        match self {
            // F(L) <= F(u - 1) and ∫_{U-1}^∞ F = ln U / (U - 1)
            Integrand::Lens => big_u.ln() / (big_u - 1.0),
            Integrand::Free => big_u.ln_1p() / big_u,
            Integrand::Excess => (big_u.ln() / (big_u - 1.0) - big_u.ln_1p() / big_u).max(0.0),
        }
    }

    fn lower(self, theta: f64, d: usize) -> f64 {
        match self {
            Integrand::Free => 0.0,
            _ => z_cut(theta).powi(d as i32),
        }
    }

    fn eval(self, u: f64, theta: f64, d: usize) -> f64 {
        match self {
            Integrand::Free => kernel_value(u),
            Integrand::Lens => kernel_value(lens(u, theta, d)),
            Integrand::Excess => {
                let l = lens(u, theta, d);
                (kernel_value(l) - kernel_value(u)).max(0.0)
            }
        }
    }
}

/// Clamped lens ratio at `z = u^{1/d}`, without the domain check (the
/// quadrature nodes can sit a rounding error below `z(θ)`).
fn lens(u: f64, theta: f64, d: usize) -> f64 {
    LensGeometry::compute(u.powf(1.0 / d as f64), theta, d).lens_ratio
}

/// `∫_0^π sin^{d-2} θ dθ`.
pub fn sine_power_integral(d: usize) -> f64 {
    let a = (d as f64 - 1.0) / 2.0;
    (0.5 * PI.ln() + ln_gamma(a) - ln_gamma(d as f64 / 2.0)).exp()
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Dimension { min: 2, got: d });
    }
    Ok(())
}

/// Smallest `U` (up to a factor 2^{1/8}) with `scale · tail(U) <= target`.
fn truncation_point(kind: Integrand, scale: f64, target: f64) -> f64 {
    let mut u = 4.0_f64;
    while scale * kind.tail(u) > target {
        u *= 2.0;
    }
    let (mut lo, mut hi) = (u / 2.0, u);
    while hi / lo > 1.09 {
        let mid = (lo * hi).sqrt();
        if scale * kind.tail(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.max(2.0)
}

/// `∫_a^U φ(u) du`, direct below 1 and in `t = ln u` above.
fn inner_integral<P: Fn(f64) -> f64>(phi: P, a: f64, big_u: f64, tol: f64, budget: usize) -> Result<QuadResult> {
    let mut out = QuadResult::default();
    if a < 1.0 {
        out = out.plus(integrate(&phi, a, 1.0, tol / 2.0, budget)?);
    }
    let lo = a.max(1.0).ln();
    let hi = big_u.ln();
    if hi > lo {
        let r = integrate(
            |t| {
                let u = t.exp();
                phi(u) * u
            },
            lo,
            hi,
            tol / 2.0,
            budget,
        )?;
        out = out.plus(r);
    }
    Ok(out)
}

/// `prefactor_8 ∫_0^π sin^{d-2} θ ∫ φ(u, θ) du dθ` for the chosen integrand.
pub fn theta_u_integral(kind: Integrand, d: usize, tol: f64, budget: usize) -> Result<QuadResult> {
    check_d(d)?;
    check_tol(tol)?;
    let k = DimConstants::new(d)?;
    let pref = k.prefactor_8;
    let mass = pref * sine_power_integral(d);
    let big_u = truncation_point(kind, mass, tol / 10.0);
    let truncation = mass * kind.tail(big_u);

    // inner error weighted by pref sin^{d-2} integrates to at most 0.45 tol
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let outer = |theta: f64| -> Sample {
        if failure.borrow().is_some() {
            return Sample::exact(0.0);
        }
        let w = pref * theta.sin().max(0.0).powi(d as i32 - 2);
        let inner_tol = 0.15 * tol * (1.0 / (PI * w)).max(1.0);
        let a = kind.lower(theta, d);
        let upper = big_u.max(4.0 * a);
        match inner_integral(|u| kind.eval(u, theta, d), a, upper, inner_tol, INNER_BUDGET) {
            Ok(r) => Sample {
                value: w * r.value,
                error: w * r.abs_error_estimate,
                evaluations: r.evaluations,
            },
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                Sample::exact(0.0)
            }
        }
    };
    let breaks = [0.0, FRAC_PI_4, FRAC_PI_3, FRAC_PI_2, PI];
    let res = integrate_samples(outer, &breaks, 0.9 * tol, budget);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let mut res = res?;
    res.truncation_bound = truncation;
    res.abs_error_estimate += truncation;
    Ok(res)
}

/// `S_d` from its defining double integral, `d >= 2`.
pub fn s_d_direct(d: usize, tol: f64) -> Result<QuadResult> {
    theta_u_integral(Integrand::Lens, d, tol, DEFAULT_BUDGET)
}

/// `S_d` with an explicit evaluation budget.
pub fn s_d_direct_with_budget(d: usize, tol: f64, budget: usize) -> Result<QuadResult> {
    theta_u_integral(Integrand::Lens, d, tol, budget)
}

/// The `S_d` integral with `F(u)` in place of `F(L/V_d)`; equals 2.
pub fn normalization_integral(d: usize, tol: f64) -> Result<QuadResult> {
    theta_u_integral(Integrand::Free, d, tol, DEFAULT_BUDGET)
}

/// `T₋(d)`, the non-negative correction term.
pub fn t_minus(d: usize, tol: f64) -> Result<QuadResult> {
    theta_u_integral(Integrand::Excess, d, tol, DEFAULT_BUDGET)
}

/// `T₊(d) = prefactor_8 ∫_0^1 (1-z²)^{(d-3)/2} (1 - ln(1+w)/w) dz`, `w = (2z)^d`.
///
/// Integrated in `z = sin φ`, which removes the endpoint singularity at
/// `d = 2`. `tol` is absolute.
pub fn t_plus(d: usize, tol: f64) -> Result<QuadResult> {
    check_d(d)?;
    check_tol(tol)?;
    let pref = DimConstants::new(d)?.prefactor_8;
    let f = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let w = (2.0 * s).powi(d as i32);
        pref * c.max(0.0).powi(d as i32 - 2) * one_minus_log1p_ratio(w)
    };
    // z = 1/2 separates the two regimes of the integrand
    integrate_breaks(f, &[0.0, FRAC_PI_6, FRAC_PI_2], tol, DEFAULT_BUDGET)
}

/// Leading-order form `(2√(2π)/3) d^{-1/2} (√3/2)^d` of `T₊(d)`.
pub fn t_plus_asymptotic(d: usize) -> f64 {
    let df = d as f64;
    2.0 * (2.0 * PI).sqrt() / 3.0 * df.powf(-0.5) * (3.0_f64.sqrt() / 2.0).powf(df)
}

/// Geometric rate `4√3/9` bounding `T₋(d)`.
pub fn t_minus_rate() -> f64 {
    4.0 * 3.0_f64.sqrt() / 9.0
}

/// `(3/2) ∫_0^1 y^{-2} (1 - ln(1+y³)/y³) dy`, equal to `(π√3 - 3)/8`.
pub fn lemma6_first(tol: f64) -> Result<QuadResult> {
    check_tol(tol)?;
    integrate(
        |y| {
            if y == 0.0 {
                return 0.0;
            }
            1.5 * one_minus_log1p_ratio(y * y * y) / (y * y)
        },
        0.0,
        1.0,
        tol,
        DEFAULT_BUDGET,
    )
}

/// `(3/2) ∫_0^1 (1 + 3 y³ ln y - y³ ln(1+y³)) dy`, equal to `(π√3 + 3)/8`.
pub fn lemma6_second(tol: f64) -> Result<QuadResult> {
    check_tol(tol)?;
    integrate(
        |y| {
            let y3 = y * y * y;
            let log_term = if y > 0.0 { 3.0 * y3 * y.ln() } else { 0.0 };
            1.5 * (1.0 + log_term - y3 * y3.ln_1p())
        },
        0.0,
        1.0,
        tol,
        DEFAULT_BUDGET,
    )
}

/// Which partial fraction of the `S_1` integrand to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum S1Terms {
    Both,
    /// Only `2/u₂`; integrates to 2.
    First,
    /// Only `-1/(u₁+u₂)`; integrates to `ln 2 - 1`.
    Second,
}

/// `∫_0^1 du₁ (1/u₁) ∫_0^{u₁} dv ∫_v^{u₁} du₂ (2/u₂ - 1/(u₁+u₂))`, the
/// dimension-one sibling integral, equal to `1 + ln 2`.
///
/// The `u₂` integral is done in closed form; `v` and `u₁` numerically.
pub fn s1_reduced_integral(tol: f64) -> Result<QuadResult> {
    s1_reduced_integral_terms(tol, S1Terms::Both)
}

pub fn s1_reduced_integral_terms(tol: f64, terms: S1Terms) -> Result<QuadResult> {
    check_tol(tol)?;
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_tol = 0.4 * tol;
    let outer = |u1: f64| -> Sample {
        let g = |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            // ∫_v^{u₁} 2/u₂ = 2 ln(u₁/v);  ∫_v^{u₁} 1/(u₁+u₂) = ln(2u₁/(u₁+v))
            let first = 2.0 * (u1 / v).ln();
            let second = -(2.0 * u1 / (u1 + v)).ln();
            let val = match terms {
                S1Terms::Both => first + second,
                S1Terms::First => first,
                S1Terms::Second => second,
            };
            val / u1
        };
        match integrate(g, 0.0, u1, inner_tol, INNER_BUDGET) {
            Ok(r) => Sample {
                value: r.value,
                error: r.abs_error_estimate,
                evaluations: r.evaluations,
            },
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                Sample::exact(0.0)
            }
        }
    };
    let res = integrate_samples(outer, &[0.0, 1.0], tol, DEFAULT_BUDGET);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    res
}

/// `∫_0^1 (1 - ln x) dx`, the reduced `S_∞` integral, equal to 2.
pub fn s_infinity_reduced_integral() -> Result<QuadResult> {
    integrate(|x| 1.0 - x.ln(), 0.0, 1.0, 1e-13, DEFAULT_BUDGET)
}

/// `∫_0^1 dx (1/x) ∫_0^x dy ∫_y^1 dz / z` by three nested quadratures.
pub fn s_infinity_triple_integral(tol: f64) -> Result<QuadResult> {
    check_tol(tol)?;
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let record = |e: Error| {
        let mut f = failure.borrow_mut();
        if f.is_none() {
            *f = Some(e);
        }
    };
    let as_sample = |r: Result<QuadResult>| match r {
        Ok(r) => Sample {
            value: r.value,
            error: r.abs_error_estimate,
            evaluations: r.evaluations,
        },
        Err(e) => {
            record(e);
            Sample::exact(0.0)
        }
    };
    let innermost = |y: f64| -> Sample {
        if y <= 0.0 {
            return Sample::exact(0.0);
        }
        as_sample(integrate(|z| 1.0 / z, y, 1.0, 0.1 * tol, INNER_BUDGET))
    };
    let middle = |x: f64| -> Sample {
        let r = integrate_samples(&innermost, &[0.0, x], 0.3 * tol * x, INNER_BUDGET).map(|r| r.scaled(1.0 / x));
        as_sample(r)
    };
    let res = integrate_samples(middle, &[0.0, 1.0], tol, DEFAULT_BUDGET);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    res
}

/// Fraction of the unit `d`-ball beyond the hyperplane at height `x`,
/// by direct quadrature of `(V_{d-1}/V_d) ∫_x^1 (1-t²)^{(d-1)/2} dt`.
pub fn cap_fraction_quadrature(x: f64, d: usize, tol: f64) -> Result<QuadResult> {
    if d < 1 {
        return Err(Error::Dimension { min: 1, got: d });
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("cap height must be in [-1, 1], got {x}")));
    }
    check_tol(tol)?;
    let ratio = DimConstants::new(d)?.ratio();
    let e = (d as f64 - 1.0) / 2.0;
    if x == 1.0 {
        return Ok(QuadResult::default());
    }
    let r = integrate(|t| (1.0 - t * t).max(0.0).powf(e), x, 1.0, tol / ratio, DEFAULT_BUDGET)?;
    Ok(r.scaled(ratio))
}

/// One row of an `S_d` table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdRow {
    pub d: usize,
    pub s_d: QuadResult,
    pub t_plus: QuadResult,
    pub t_minus: QuadResult,
}

impl SdRow {
    /// `S_d - (2 - T₊ + T₋)`.
    pub fn decomposition_gap(&self) -> f64 {
        self.s_d.value - (2.0 - self.t_plus.value + self.t_minus.value)
    }

    /// Sum of the three error estimates.
    pub fn combined_error(&self) -> f64 {
        self.s_d.abs_error_estimate + self.t_plus.abs_error_estimate + self.t_minus.abs_error_estimate
    }

    pub fn decomposition_holds(&self) -> bool {
        self.decomposition_gap().abs() <= self.combined_error()
    }

    pub fn evaluations(&self) -> usize {
        self.s_d.evaluations + self.t_plus.evaluations + self.t_minus.evaluations
    }
}

/// `S_d`, `T₊` and `T₋` for one dimension.
pub fn sd_row(d: usize, tol: f64) -> Result<SdRow> {
    Ok(SdRow {
        d,
        s_d: s_d_direct(d, tol)?,
        t_plus: t_plus(d, tol)?,
        t_minus: t_minus(d, tol)?,
    })
}

/// Rows for several dimensions plus the observed trend in `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdTable {
    pub rows: Vec<SdRow>,
    /// Whether `S_d` increased along the listed dimensions (reported only).
    pub increasing: bool,
}

pub fn sd_table(d_list: &[usize], tol: f64) -> Result<SdTable> {
    let rows = d_list.iter().map(|&d| sd_row(d, tol)).collect::<Result<Vec<_>>>()?;
    Ok(table_from_rows(rows))
}

/// Wraps already computed rows (e.g. from a parallel run) into a table.
pub fn table_from_rows(rows: Vec<SdRow>) -> SdTable {
    let mut sorted: Vec<&SdRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.d);
    let increasing = sorted.windows(2).all(|w| w[1].s_d.value > w[0].s_d.value);
    SdTable { rows, increasing }
}

/// `S_1 = 1 + ln 2`.
pub fn s1_closed_form() -> f64 {
    1.0 + LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_power_integral_matches_closed_forms() {
        assert!((sine_power_integral(2) - PI).abs() < 1e-13);
        assert!((sine_power_integral(3) - 2.0).abs() < 1e-13);
        assert!((sine_power_integral(4) - PI / 2.0).abs() < 1e-13);
        for d in 2..40 {
            let k = DimConstants::new(d).unwrap();
            assert!((k.prefactor_8 * sine_power_integral(d) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_bounds_are_decreasing_and_small() {
        for kind in [Integrand::Lens, Integrand::Free, Integrand::Excess] {
            let u = truncation_point(kind, 2.0, 1e-9);
            assert!(2.0 * kind.tail(u) <= 1e-9);
            assert!(kind.tail(2.0 * u) < kind.tail(u));
        }
    }

    #[test]
    fn t_plus_small_d() {
        assert!((t_plus(2, 1e-12).unwrap().value - 0.381_966_011_250_105).abs() < 1e-9);
        assert!((t_plus(3, 1e-12).unwrap().value - 0.319_825).abs() < 1e-6);
    }

    #[test]
    fn lemma6_constants() {
        let s3 = 3.0_f64.sqrt();
        let a = lemma6_first(1e-12).unwrap().value;
        let b = lemma6_second(1e-12).unwrap().value;
        assert!((a - (PI * s3 - 3.0) / 8.0).abs() < 1e-10);
        assert!((b - (PI * s3 + 3.0) / 8.0).abs() < 1e-10);
    }

    #[test]
    fn s1_terms() {
        let both = s1_reduced_integral(1e-10).unwrap();
        assert!((both.value - s1_closed_form()).abs() < 1e-9);
        assert!(both.abs_error_estimate <= 1e-10);
        let first = s1_reduced_integral_terms(1e-10, S1Terms::First).unwrap().value;
        let second = s1_reduced_integral_terms(1e-10, S1Terms::Second).unwrap().value;
        assert!((first - 2.0).abs() < 1e-9);
        assert!((second - (LN_2 - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn s_infinity() {
        let r = s_infinity_reduced_integral().unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        // ∫_0^x ln y dy = x (ln x - 1), at x = 1
        let r = integrate(|y| y.ln(), 0.0, 1.0, 1e-13, 1_000_000).unwrap();
        assert!((r.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cap_quadrature_matches_incomplete_beta() {
        for d in [1usize, 2, 3, 7, 15, 30] {
            for &x in &[-0.9, -0.3, 0.0, 0.2, 0.75, 0.99] {
                let q = cap_fraction_quadrature(x, d, 1e-13).unwrap().value;
                let b = crate::geomvol::cap_fraction(x, 1.0 - x * x, d);
                assert!((q - b).abs() < 1e-11, "d={d} x={x}: {q} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(s_d_direct(1, 1e-6), Err(Error::Dimension { .. })));
        assert!(t_plus(1, 1e-6).is_err());
        assert!(t_minus(2, 0.0).is_err());
        assert!(cap_fraction_quadrature(1.5, 3, 1e-8).is_err());
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let r = s_d_direct_with_budget(3, 1e-10, 2_000);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }
}
