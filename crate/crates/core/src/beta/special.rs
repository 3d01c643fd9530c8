//! Log-gamma, log-beta and the regularized incomplete beta function.
//!
//! Everything here works on plain `f64` without argument validation; the
//! checked entry points live one level up in [`crate::beta`].

use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Remainder of Stirling's series, `ln Γ(x) - [(x-½)ln x - x + ln √(2π)]`,
/// valid for `x >= 10`.
fn stirling_remainder(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0
            + r2 * (1.0 / 1260.0 + r2 * (-1.0 / 1680.0 + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360_360.0))))))
}

/// `ln Be(a, b)` for positive finite arguments.
///
/// Large arguments are handled through Stirling remainders so that the
/// leading `x ln x` terms cancel analytically instead of numerically.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (p, q) = if a < b { (a, b) } else { (b, a) };
    let sum = p + q;
    if p >= 10.0 {
        let corr = stirling_remainder(p) + stirling_remainder(q) - stirling_remainder(sum);
        -0.5 * q.ln() + LN_SQRT_2PI + corr + (p - 0.5) * (p / sum).ln() + q * (-p / sum).ln_1p()
    } else if q >= 10.0 {
        let corr = stirling_remainder(q) - stirling_remainder(sum);
        ln_gamma(p) + corr + p - p * sum.ln() + (q - 0.5) * (-p / sum).ln_1p()
    } else {
        ln_gamma(p) + ln_gamma(q) - ln_gamma(sum)
    }
}

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 20_000;

/// Continued fraction for `I_x(a, b)` (modified Lentz). Returns `None` when
/// the fraction has not converged within the iteration budget.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> Option<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Some(h);
        }
    }
    None
}

/// Returns `(I_x(a, b), 1 - I_x(a, b))`, each computed without subtractive
/// cancellation. `None` signals continued-fraction non-convergence.
pub fn inc_beta_pair(x: f64, a: f64, b: f64) -> Option<(f64, f64)> {
    if x <= 0.0 {
        return Some((0.0, 1.0));
    }
    if x >= 1.0 {
        return Some((1.0, 0.0));
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        let lower = (ln_front.exp() * beta_continued_fraction(x, a, b)? / a).clamp(0.0, 1.0);
        Some((lower, 1.0 - lower))
    } else {
        let upper = (ln_front.exp() * beta_continued_fraction(1.0 - x, b, a)? / b).clamp(0.0, 1.0);
        Some((1.0 - upper, upper))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_factorial(k: u32) -> f64 {
        (2..=k).map(|j| (j as f64).ln()).sum()
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        for k in 1..60u32 {
            let expected = ln_factorial(k - 1);
            let got = ln_gamma(k as f64);
            assert!(
                (got - expected).abs() <= 1e-13 * expected.abs().max(1.0),
                "k={k}: {got} vs {expected}"
            );
        }
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_beta_integer_oracle_across_branches() {
        // Be(a, b) = (a-1)!(b-1)!/(a+b-1)! exercises all three branches.
        for &(a, b) in &[(1u32, 1u32), (3, 4), (2, 40), (9, 11), (10, 10), (37, 150), (200, 3)] {
            let expected = ln_factorial(a - 1) + ln_factorial(b - 1) - ln_factorial(a + b - 1);
            let got = ln_beta(a as f64, b as f64);
            assert!(
                (got - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                "({a},{b}): {got} vs {expected}"
            );
        }
    }

    #[test]
    fn ln_beta_is_continuous_at_branch_switch() {
        for &other in &[0.3, 2.5, 9.99, 55.0] {
            let below = ln_beta(10.0 - 1e-9, other);
            let above = ln_beta(10.0 + 1e-9, other);
            assert!((below - above).abs() < 1e-7, "other={other}");
        }
    }

    #[test]
    fn incomplete_beta_simple_closed_forms() {
        // I_x(1, b) = 1 - (1-x)^b and I_x(a, 1) = x^a.
        for &x in &[0.01, 0.2, 0.5, 0.77, 0.99] {
            let (lo, hi) = inc_beta_pair(x, 1.0, 3.5).unwrap();
            let exact = 1.0 - (1.0 - x).powf(3.5);
            assert!((lo - exact).abs() < 1e-14);
            assert!((hi - (1.0 - x).powf(3.5)).abs() < 1e-14);
            let (lo, _) = inc_beta_pair(x, 2.25, 1.0).unwrap();
            assert!((lo - x.powf(2.25)).abs() < 1e-14);
        }
    }
}
