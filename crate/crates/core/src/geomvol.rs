//! Unit-ball constants, the sibling kernel `F`, and the lens ratio
//! `L(z, θ) / V_d` of a radius-`z` ball against the unit ball.
//!
//! The configuration throughout: a unit ball centred at the origin and a
//! ball of radius `z` whose centre sits at distance
//! `δ = sqrt(1 + z² - 2 z cos θ)` from it. The lens is the part of the
//! radius-`z` ball outside the unit ball, normalised by `V_d`.
//!
//! Both spherical caps are computed as fractions of their ball through the
//! regularized incomplete beta function `I_y((d+1)/2, 1/2)`, with `1 - x²`
//! formed from exact identities rather than by subtraction.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spaces::stream_rng;
use crate::special::{ln_gamma, ln_reg_inc_beta};

/// `ln V_d`, the log-volume of the unit `d`-ball (`V_0 = 1`).
pub fn ln_unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    h * PI.ln() - ln_gamma(h + 1.0)
}

pub fn unit_ball_volume(d: usize) -> f64 {
    ln_unit_ball_volume(d).exp()
}

/// Surface area `A_{d-1} = d V_d` of the unit ball in `R^d`.
pub fn ball_surface_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (2.0_f64.ln() + h * PI.ln() - ln_gamma(h)).exp()
}

/// Area of the unit `d`-sphere `S_d` embedded in `R^{d+1}`.
pub fn sphere_area(d: usize) -> f64 {
    ball_surface_area(d + 1)
}

/// Dimension-dependent constants of the sibling integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimConstants {
    pub d: usize,
    /// `ln V_d`.
    pub log_v_d: f64,
    /// `ln(V_{d-1} / V_d)`.
    pub log_ratio: f64,
    /// `2 (d-1) V_{d-1} / V_d`, prefactor of the `z`-form of `S_d`.
    pub prefactor_6: f64,
    /// `2 (d-1) V_{d-1} / (d V_d)`, prefactor of the `u = z^d` forms.
    pub prefactor_8: f64,
}

impl DimConstants {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Dimension { min: 1, got: 0 });
        }
        let df = d as f64;
        // V_{d-1}/V_d = Γ(d/2 + 1) / (√π Γ(d/2 + 1/2)), never formed from the volumes
        let log_ratio = ln_gamma(df / 2.0 + 1.0) - 0.5 * PI.ln() - ln_gamma(df / 2.0 + 0.5);
        let ratio = log_ratio.exp();
        Ok(Self {
            d,
            log_v_d: ln_unit_ball_volume(d),
            log_ratio,
            prefactor_6: 2.0 * (df - 1.0) * ratio,
            prefactor_8: 2.0 * (df - 1.0) * ratio / df,
        })
    }

    pub fn v_d(&self) -> f64 {
        self.log_v_d.exp()
    }

    /// `V_{d-1} / V_d`.
    pub fn ratio(&self) -> f64 {
        self.log_ratio.exp()
    }
}

const F_SERIES_CUTOFF: f64 = 0.1;
const F_SERIES_TERMS: usize = 20;

/// The sibling kernel `F(x) = (ln(1+x)/x - 1/(1+x)) / x`, without the sign check.
///
/// Below `x = 0.1` the alternating series `Σ (-1)^{k+1} k/(k+1) x^{k-1}` is used.
pub fn kernel_value(x: f64) -> f64 {
    if x < F_SERIES_CUTOFF {
        let mut acc = 0.0;
        for k in (1..=F_SERIES_TERMS).rev() {
            let kf = k as f64;
            let c = kf / (kf + 1.0);
            acc = c - x * acc;
        }
        acc
    } else {
        (x.ln_1p() / x - 1.0 / (1.0 + x)) / x
    }
}

/// `F(x)` for `x >= 0`; `F(0) = 1/2`.
pub fn kernel(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("F needs x >= 0, got {x}")));
    }
    Ok(kernel_value(x))
}

/// `∫_a^∞ F = ln(1+a)/a` (equal to 1 at `a = 0`).
pub fn kernel_tail(a: f64) -> f64 {
    if a <= 0.0 {
        1.0
    } else {
        1.0 - one_minus_log1p_ratio(a)
    }
}

/// `1 - ln(1+w)/w`, accurate for small `w` (value → `w/2`).
pub fn one_minus_log1p_ratio(w: f64) -> f64 {
    if w < 0.05 {
        // Σ_{k≥1} (-1)^{k+1} w^k / (k+1)
        let mut acc = 0.0;
        for k in (1..=24).rev() {
            acc = 1.0 / (k as f64 + 1.0) - w * acc;
        }
        w * acc
    } else {
        1.0 - w.ln_1p() / w
    }
}

/// `z(θ) = (2 cos θ)_+`, lower edge of the sibling domain.
pub fn z_cut(theta: f64) -> f64 {
    (2.0 * theta.cos()).max(0.0)
}

/// Fraction of the unit `d`-ball whose first coordinate exceeds `x`.
///
/// `one_minus_x2` must be `1 - x²`, supplied by the caller from an exact
/// expression.
pub fn cap_fraction(x: f64, one_minus_x2: f64, d: usize) -> f64 {
    ln_cap_fraction(x, one_minus_x2, d).exp()
}

/// Natural log of [`cap_fraction`].
pub fn ln_cap_fraction(x: f64, one_minus_x2: f64, d: usize) -> f64 {
    let a = (d as f64 + 1.0) / 2.0;
    let y = one_minus_x2.clamp(0.0, 1.0);
    let half = ln_reg_inc_beta(a, 0.5, y, x * x) - std::f64::consts::LN_2;
    if x >= 0.0 {
        half
    } else {
        (-half.exp()).ln_1p()
    }
}

/// Geometry of the two-ball configuration at `(z, θ)` in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensGeometry {
    pub z: f64,
    pub theta: f64,
    pub d: usize,
    /// Centre distance, law of cosines.
    pub delta: f64,
    /// Intersection volume over `V_d`, clamped to `[0, min(1, z^d)]`.
    pub intersection_ratio: f64,
    /// `L(z, θ) / V_d`, clamped to `[max(0, z^d - 1), z^d]`.
    pub lens_ratio: f64,
    /// Lens ratio before clamping.
    pub raw_lens_ratio: f64,
}

impl LensGeometry {
    pub fn new(z: f64, theta: f64, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Dimension { min: 2, got: d });
        }
        if !(0.0..=PI).contains(&theta) || !z.is_finite() || z < 0.0 {
            return Err(Error::InvalidArgument(format!("need z >= 0, theta in [0, pi]; got ({z}, {theta})")));
        }
        if z < z_cut(theta) {
            return Err(Error::OutsideDomain { z, theta });
        }
        let geo = Self::compute(z, theta, d);
        if geo.delta == 0.0 {
            return Err(Error::InvalidArgument("coincident ball centres".into()));
        }
        Ok(geo)
    }

    pub(crate) fn compute(z: f64, theta: f64, d: usize) -> Self {
        let (sin, cos) = theta.sin_cos();
        let sin = sin.max(0.0);
        // (z - cos θ)² + sin² θ avoids the cancellation in 1 + z² - 2 z cos θ
        let delta2 = (z - cos) * (z - cos) + sin * sin;
        let delta = delta2.sqrt();
        let u = z.powi(d as i32);
        if delta == 0.0 {
            // only (z, θ) = (1, 0), where z^d = 1 and the balls coincide
            return Self {
                z,
                theta,
                d,
                delta,
                intersection_ratio: 1.0,
                lens_ratio: 0.0,
                raw_lens_ratio: 0.0,
            };
        }
        // radical hyperplane: x1 in the unit ball's frame, x2 in the z-ball's frame
        let x1 = (1.0 - z * cos) / delta;
        let y1 = (z * sin / delta).powi(2);
        let x2 = (cos - z) / delta;
        let y2 = (sin / delta).powi(2);

        let cap_unit = cap_fraction(x1, y1, d);
        // the z-ball's part beyond the plane, as a fraction of that ball
        let ln_cap_z = ln_cap_fraction(-x2, y2, d);
        let cap_z = (d as f64 * z.ln() + ln_cap_z).exp();
        let raw_intersection = cap_unit + cap_z;
        let raw_lens = u - raw_intersection;
        let intersection = raw_intersection.clamp(0.0, u.min(1.0));
        Self {
            z,
            theta,
            d,
            delta,
            intersection_ratio: intersection,
            lens_ratio: (u - intersection).clamp((u - 1.0).max(0.0), u),
            raw_lens_ratio: raw_lens,
        }
    }
}

/// `L(z, θ) / V_d` on the domain `z >= (2 cos θ)_+`, `d >= 2`.
pub fn lens_ratio(z: f64, theta: f64, d: usize) -> Result<f64> {
    Ok(LensGeometry::new(z, theta, d)?.lens_ratio)
}

/// Slack used by every boolean bound check: `1e-12 · max(1, u)`.
pub fn check_slack(u: f64) -> f64 {
    1e-12 * u.abs().max(1.0)
}

/// Outcome of the two lens lower bounds at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma4Check {
    /// `lens >= max(0, u - 1)`.
    pub trivial_bound: bool,
    /// The refined bound; `None` outside the region where it is claimed.
    pub refined_bound: Option<bool>,
}

impl Lemma4Check {
    pub fn holds(&self) -> bool {
        self.trivial_bound && self.refined_bound.unwrap_or(true)
    }
}

/// `C(θ) = 1 / (cos θ + 0.01)`.
pub fn c_theta(theta: f64) -> f64 {
    1.0 / (theta.cos() + 0.01)
}

/// `A(d) = arccos(1.1^{1/d} / 2)`.
pub fn a_angle(d: usize) -> f64 {
    (1.1_f64.powf(1.0 / d as f64) / 2.0).acos()
}

/// `B = arccos(0.05)`.
pub fn b_angle() -> f64 {
    0.05_f64.acos()
}

/// Whether the refined lens bound is claimed at `(u, θ)`.
pub fn lemma4_refined_region(u: f64, theta: f64, d: usize) -> bool {
    if theta >= FRAC_PI_2 {
        return true;
    }
    let lo = (2.0 * theta.cos()).powi(d as i32);
    let hi = c_theta(theta).powi(d as i32);
    lo <= u && u <= hi
}

/// The subtracted term of the refined lens bound at `z = u^{1/d}`.
pub fn lemma4_deficit(z: f64, theta: f64, d: usize) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let df = d as f64;
    let (sin, cos) = theta.sin_cos();
    let sin = sin.max(0.0);
    let delta = ((z - cos) * (z - cos) + sin * sin).sqrt();
    // u sin^{d+1} θ / δ^d = (z sin θ / δ)^d sin θ, each factor ≤ 1
    let core = (z * sin / delta).powi(d as i32) * sin;
    let recips = 1.0 / (1.0 / z - cos) + 1.0 / (z - cos);
    SQRT_2 / (PI * df.sqrt()) * core * recips
}

/// Checks both lens lower bounds with a caller-supplied lens function.
pub fn check_lemma4_with<L>(lens: L, z: f64, theta: f64, d: usize) -> Result<Lemma4Check>
where
    L: Fn(f64, f64, usize) -> Result<f64>,
{
    let value = lens(z, theta, d)?;
    let u = z.powi(d as i32);
    let slack = check_slack(u);
    let trivial_bound = value >= (u - 1.0).max(0.0) - slack;
    let refined_bound = lemma4_refined_region(u, theta, d)
        .then(|| value >= u - lemma4_deficit(z, theta, d) - slack);
    Ok(Lemma4Check {
        trivial_bound,
        refined_bound,
    })
}

/// Both lens lower bounds, checked on the unclamped lens ratio.
pub fn check_lemma4(z: f64, theta: f64, d: usize) -> Result<Lemma4Check> {
    check_lemma4_with(|z, t, d| Ok(LensGeometry::new(z, t, d)?.raw_lens_ratio), z, theta, d)
}

/// `F(u - ε) - F(u)`.
pub fn kernel_drop(u: f64, eps: f64) -> f64 {
    kernel_value(u - eps) - kernel_value(u)
}

/// Checks the increment bounds on `F` at `(u, ε)`, `0 <= ε <= u`.
///
/// Always: `≤ 1/2` and `≤ 2ε/3`. When `u >= 1.1` and `ε <= 1`, also
/// `≤ 2 ln u / (u (u-1)²) · ε ≤ 242 ln u / u³ · ε`.
pub fn check_lemma5(u: f64, eps: f64) -> Result<bool> {
    if !(0.0..=u).contains(&eps) {
        return Err(Error::InvalidArgument(format!("need 0 <= eps <= u, got ({u}, {eps})")));
    }
    let drop = kernel_drop(u, eps);
    let slack = check_slack(u);
    let mut ok = drop <= 0.5 + slack && drop <= 2.0 / 3.0 * eps + slack;
    if u >= 1.1 && eps <= 1.0 {
        let mid = 2.0 * u.ln() / (u * (u - 1.0).powi(2)) * eps;
        let outer = 242.0 * u.ln() / u.powi(3) * eps;
        ok &= drop <= mid + slack && mid <= outer + slack;
    }
    Ok(ok)
}

/// Angular band of the partition used to bound the difference integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThetaBand {
    /// `[0, π/4)`.
    Acute,
    /// `[π/4, A(d))`.
    QuarterToA,
    /// `[A(d), B)`.
    AToB,
    /// `[B, π/2)`.
    BToHalf,
    /// `[π/2, π]`.
    Obtuse,
}

/// Cell of the bound table for `F(L(u^{1/d}, θ)/V_d) - F(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prop7Region {
    /// `θ ∈ [0, π/4]`: `F(u-1) - F(u)`.
    AcuteAny,
    /// `θ ∈ [π/4, π/2]`, `u ≤ 0.1^d`: `1/2`.
    SteepSmall,
    /// `θ ∈ [π/4, π/2]`, `u ∈ [max(0.1, 2cos θ)^d, 1.1]`.
    SteepMid,
    /// `θ ∈ [π/4, π/2]`, `u ∈ [1.1, C(θ)^d]`.
    SteepUpper,
    /// `θ ∈ [π/4, π/2]`, `u ≥ C(θ)^d`: `F(u-1) - F(u)`.
    SteepTail,
    /// `θ ∈ [π/2, π]`, `u ≤ 0.1^d`: `1/2`.
    ObtuseSmall,
    /// `θ ∈ [π/2, π]`, `u ∈ [0.1^d, 1.1]`.
    ObtuseMid,
    /// `θ ∈ [π/2, π]`, `u ∈ [1.1, 10^d]`.
    ObtuseUpper,
    /// `θ ∈ [π/2, π]`, `u ≥ 10^d`: `F(u-1) - F(u)`.
    ObtuseTail,
}

impl Prop7Region {
    pub const ALL: [Prop7Region; 9] = [
        Prop7Region::AcuteAny,
        Prop7Region::SteepSmall,
        Prop7Region::SteepMid,
        Prop7Region::SteepUpper,
        Prop7Region::SteepTail,
        Prop7Region::ObtuseSmall,
        Prop7Region::ObtuseMid,
        Prop7Region::ObtuseUpper,
        Prop7Region::ObtuseTail,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prop7Location {
    pub band: ThetaBand,
    pub region: Prop7Region,
}

/// Places `(u, θ)` (on the domain `u >= z(θ)^d`) in the bound table.
pub fn locate_prop7(u: f64, theta: f64, d: usize) -> Prop7Location {
    let di = d as i32;
    let band = if theta < FRAC_PI_4 {
        ThetaBand::Acute
    } else if theta < a_angle(d) {
        ThetaBand::QuarterToA
    } else if theta < b_angle() {
        ThetaBand::AToB
    } else if theta < FRAC_PI_2 {
        ThetaBand::BToHalf
    } else {
        ThetaBand::Obtuse
    };
    let small = 0.1_f64.powi(di);
    let region = match band {
        ThetaBand::Acute => Prop7Region::AcuteAny,
        ThetaBand::Obtuse => {
            if u <= small {
                Prop7Region::ObtuseSmall
            } else if u <= 1.1 {
                Prop7Region::ObtuseMid
            } else if u <= 10.0_f64.powi(di) {
                Prop7Region::ObtuseUpper
            } else {
                Prop7Region::ObtuseTail
            }
        }
        _ => {
            let c_pow = c_theta(theta).powi(di);
            if u >= c_pow {
                Prop7Region::SteepTail
            } else if u <= small {
                Prop7Region::SteepSmall
            } else if u <= 1.1 {
                Prop7Region::SteepMid
            } else {
                Prop7Region::SteepUpper
            }
        }
    };
    Prop7Location { band, region }
}

/// `(z sin θ / δ')^d sin θ` with `δ'² = 1 + z² - 2 z c` for the given `c`.
fn scaled_sine_power(z: f64, theta: f64, d: usize, c: f64) -> f64 {
    let sin = theta.sin().max(0.0);
    let denom = ((z - c) * (z - c) + (1.0 - c * c)).sqrt();
    (z * sin / denom).powi(d as i32) * sin
}

/// Tabulated upper bound for `F(L/V_d) - F(u)` in `region`.
pub fn prop7_bound(region: Prop7Region, u: f64, theta: f64, d: usize) -> f64 {
    let df = d as f64;
    let z = u.powf(1.0 / df);
    let pref = SQRT_2 / (PI * df.sqrt());
    let tail = || kernel_drop(u, 1.0_f64.min(u));
    match region {
        Prop7Region::SteepSmall | Prop7Region::ObtuseSmall => 0.5,
        Prop7Region::AcuteAny | Prop7Region::SteepTail | Prop7Region::ObtuseTail => tail(),
        Prop7Region::SteepMid => 18.0 * pref * scaled_sine_power(z, theta, d, theta.cos()),
        // (1 + u^{2/d})^{-d/2} u sin^{d+1} = scaled power with cos replaced by 0
        Prop7Region::ObtuseMid => 8.0 * pref * scaled_sine_power(z, theta, d, 0.0),
        Prop7Region::ObtuseUpper => {
            let base = 1.0 + 1.1_f64.powf(2.0 / df);
            2662.0 * pref * base.powf(-df / 2.0) * u.ln() / (u * u)
        }
        Prop7Region::SteepUpper => {
            // sin^{d+1} θ / δ^d with u factored out: (z sinθ/δ)^d sin θ / u
            25168.0 * pref * u.ln() / (u * u) * scaled_sine_power(z, theta, d, theta.cos()) / u
        }
    }
}

/// Result of one bound-table check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prop7Check {
    pub location: Prop7Location,
    pub difference: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks the bound-table entry at `(u, θ)`; needs `d >= 2` and `u >= z(θ)^d`.
pub fn check_prop7(u: f64, theta: f64, d: usize) -> Result<Prop7Check> {
    let z = u.powf(1.0 / d as f64);
    let geo = LensGeometry::new(z, theta, d)?;
    let difference = kernel_value(geo.lens_ratio) - kernel_value(u);
    let location = locate_prop7(u, theta, d);
    let bound = prop7_bound(location.region, u, theta, d);
    Ok(Prop7Check {
        location,
        difference,
        bound,
        holds: difference <= bound + check_slack(u),
    })
}

/// Monte Carlo estimate of the lens ratio and its standard error.
///
/// Points are drawn uniformly in the bounding cube of the radius-`z` ball and
/// rejected outside it; the fraction of accepted points that also fall in
/// the unit ball estimates the intersection share of the `z`-ball; its
/// standard error uses a share of at least one event. Work is
/// split into blocks of `2^16` draws, block `b` using stream `b` of `seed`.
pub fn lens_ratio_monte_carlo(z: f64, theta: f64, d: usize, samples: u64, seed: u64) -> Result<(f64, f64)> {
    LensGeometry::new(z, theta, d)?;
    if samples == 0 {
        return Err(Error::TooFew { min: 1, got: 0 });
    }
    const BLOCK: u64 = 1 << 16;
    let blocks = samples.div_ceil(BLOCK);
    let (sin, cos) = theta.sin_cos();
    let (accepted, inside) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            let count = BLOCK.min(samples - b * BLOCK);
            let mut p = vec![0.0; d];
            let (mut acc, mut hit) = (0u64, 0u64);
            for _ in 0..count {
                p.iter_mut().for_each(|x| *x = z * (2.0 * rng.random::<f64>() - 1.0));
                if p.iter().map(|x| x * x).sum::<f64>() > z * z {
                    continue;
                }
                acc += 1;
                // unit ball at e_1, z-ball at z (cos θ, sin θ, 0, ...): centres δ apart
                let mut r2 = (p[0] + z * cos - 1.0).powi(2) + (p[1] + z * sin).powi(2);
                r2 += p[2..].iter().map(|x| x * x).sum::<f64>();
                if r2 <= 1.0 {
                    hit += 1;
                }
            }
            (acc, hit)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let u = z.powi(d as i32);
    let n = accepted as f64;
    let share = inside as f64 / n;
    // no hits or all hits: floor the spread at one event
    let spread_share = share.clamp(1.0 / n, 1.0 - 1.0 / n);
    let se = u * (spread_share * (1.0 - spread_share) / n).sqrt();
    Ok((u * (1.0 - share), se))
}
