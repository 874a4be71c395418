//! Log-gamma, log-beta and the regularized incomplete beta function.
//!
//! Everything is evaluated in log space so that ratios of unit-ball volumes
//! stay finite for dimensions in the hundreds.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma needs a positive argument");
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln x` when the caller also knows `1 - x` exactly.
fn ln_with_complement(x: f64, xc: f64) -> f64 {
    if xc < 0.5 {
        (-xc).ln_1p()
    } else {
        x.ln()
    }
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 20_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return h;
        }
    }
    h
}

/// `ln I_x(a, b)`, the log of the regularized incomplete beta function.
///
/// `xc` must equal `1 - x`; passing it separately keeps full relative
/// precision when `x` is close to 1.
pub fn ln_reg_inc_beta(a: f64, b: f64, x: f64, xc: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if xc <= 0.0 {
        return 0.0;
    }
    let ln_x = ln_with_complement(x, xc);
    let ln_xc = ln_with_complement(xc, x);
    if x < (a + 1.0) / (a + b + 2.0) {
        a * ln_x + b * ln_xc - ln_beta(a, b) + beta_cf(a, b, x).ln() - a.ln()
    } else {
        let other = (b * ln_xc + a * ln_x - ln_beta(a, b) + beta_cf(b, a, xc).ln() - b.ln()).exp();
        (-other).ln_1p()
    }
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64, xc: f64) -> f64 {
    ln_reg_inc_beta(a, b, x, xc).exp()
}

/// Harmonic number `H_n`.
pub fn harmonic(n: u64) -> f64 {
    (1..=n).rev().map(|k| 1.0 / k as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_at_integers_and_halves() {
        let mut fact = 1.0_f64;
        for n in 1..30 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-13 * fact.ln().abs().max(1.0));
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-14);
        assert!((ln_gamma(1.5) - (0.5 * PI.sqrt()).ln()).abs() < 1e-14);
    }

    #[test]
    fn gamma_large_argument_matches_stirling() {
        let x: f64 = 400.0;
        let stirling = (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x.powi(3));
        assert!((ln_gamma(x) - stirling).abs() < 1e-11);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, b) = 1 - (1-x)^b
        for &x in &[0.01_f64, 0.3, 0.5, 0.9, 0.999] {
            let exact = 1.0 - (1.0 - x).powf(2.5);
            assert!((reg_inc_beta(1.0, 2.5, x, 1.0 - x) - exact).abs() < 1e-14);
        }
        // I_x(a, 1) = x^a
        for &x in &[0.01, 0.3, 0.7, 0.99] {
            assert!((reg_inc_beta(3.5, 1.0, x, 1.0 - x) - x.powf(3.5)).abs() < 1e-14);
        }
        // I_x(1/2, 1/2) = (2/π) asin(√x)
        for &x in &[0.1_f64, 0.5, 0.8] {
            let exact = 2.0 / PI * x.sqrt().asin();
            assert!((reg_inc_beta(0.5, 0.5, x, 1.0 - x) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn incomplete_beta_symmetry() {
        for &(a, b, x) in &[(2.5, 0.5, 0.3), (40.0, 0.5, 0.97), (250.5, 0.5, 0.99)] {
            let lhs = reg_inc_beta(a, b, x, 1.0 - x);
            let rhs = 1.0 - reg_inc_beta(b, a, 1.0 - x, x);
            assert!((lhs - rhs).abs() < 1e-13, "{a} {b} {x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn harmonic_small() {
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
    }
}
