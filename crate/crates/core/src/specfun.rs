//! Scalar special functions and inverse-CDF sampling primitives.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::RngStream;

const PI2_6: f64 = PI * PI / 6.0;
const PI2_8: f64 = PI * PI / 8.0;
// sqrt(2) - 1: fixed point of x -> (1 - x) / (1 + x).
const CHI2_SPLIT: f64 = core::f64::consts::SQRT_2 - 1.0;

/// Euler's dilogarithm `Li₂(x) = Σ_{k≥1} x^k / k²` on `[-1, 1]`.
///
/// The power series is summed directly for `|x| ≤ 1/2`. Above that the
/// reflection `Li₂(x) + Li₂(1-x) = π²/6 - ln x ln(1-x)` is used, and below
/// `-1/2` the Landen identity `Li₂(x) = -Li₂(x/(x-1)) - ½ ln²(1-x)` maps the
/// argument into `[1/3, 1/2]`.
pub fn li2(x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            what: "li2",
            value: x,
        });
    }
    Ok(li2_unchecked(x))
}

fn li2_unchecked(x: f64) -> f64 {
    if x == 1.0 {
        PI2_6
    } else if x > 0.5 {
        PI2_6 - math::ln(x) * math::ln_1p(-x) - li2_series(1.0 - x)
    } else if x < -0.5 {
        let l = math::ln_1p(-x);
        -li2_series(x / (x - 1.0)) - 0.5 * l * l
    } else {
        li2_series(x)
    }
}

fn li2_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = x;
    let mut k = 1.0;
    loop {
        let term = pow / (k * k);
        sum += term;
        if math::abs(term) <= 1e-18 * math::abs(sum) || pow == 0.0 {
            return sum;
        }
        pow *= x;
        k += 1.0;
    }
}

/// Legendre's chi function `χ₂(x) = Σ_{k odd} x^k / k² = (Li₂(x) - Li₂(-x)) / 2`
/// for `x ∈ [0, 1]`.
///
/// Uses `χ₂(x) + χ₂(y) = π²/8 - ½ ln x ln y` with `y = (1-x)/(1+x)` above
/// `√2 - 1`, so the odd series never runs at an argument larger than 0.415.
pub(crate) fn legendre_chi2(x: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&x));
    if x == 1.0 {
        PI2_8
    } else if x > CHI2_SPLIT {
        let y = (1.0 - x) / (1.0 + x);
        PI2_8 - 0.5 * math::ln(x) * math::ln(y) - chi2_series(y)
    } else {
        chi2_series(x)
    }
}

fn chi2_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut sum = 0.0;
    let mut pow = x;
    let mut k = 1.0;
    loop {
        let term = pow / (k * k);
        sum += term;
        if term <= 1e-18 * sum || pow == 0.0 {
            return sum;
        }
        pow *= x2;
        k += 2.0;
    }
}

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            what: "log_gamma",
            value: x,
        });
    }
    Ok(libm::lgamma_r(x).0)
}

/// Draw from the density proportional to `e^{-s}` on `[lo, hi]` by inverting
/// its CDF. `hi` may be `+∞`.
pub fn sample_trunc_exp(lo: f64, hi: f64, rng: &mut RngStream) -> Result<f64> {
    if !(lo >= 0.0) || !(hi > lo) {
        return Err(Error::InvalidInterval { lo, hi });
    }
    Ok(trunc_exp_from_uniform(lo, hi, rng.uniform()))
}

pub(crate) fn trunc_exp_from_uniform(lo: f64, hi: f64, u: f64) -> f64 {
    let s = if hi.is_infinite() {
        lo - math::ln_1p(-u)
    } else {
        lo - math::ln_1p(u * math::exp_m1(lo - hi))
    };
    s.clamp(lo, hi)
}

/// Solve `f(x) = 0` for increasing `f` on the bracket `[lo, hi]` with
/// safeguarded Newton steps. `f` returns the value and derivative.
pub(crate) fn solve_increasing<F>(mut f: F, mut lo: f64, mut hi: f64, x0: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut x = x0.clamp(lo, hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if math::abs(next - x) <= tol || hi - lo <= tol {
            return next;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn li2_special_values() {
        assert_eq!(li2(0.0).unwrap(), 0.0);
        assert!((li2(1.0).unwrap() - 1.644_934_066_848_226_4).abs() < 1e-14);
        assert!((li2(-1.0).unwrap() + 0.822_467_033_424_113_2).abs() < 1e-14);
        assert!((li2(0.5).unwrap() - 0.582_240_526_465_012_5).abs() < 1e-14);
        assert!((li2(-0.5).unwrap() + 0.448_414_206_923_646_2).abs() < 1e-14);
    }

    #[test]
    fn li2_rejects_outside_unit_interval() {
        assert!(matches!(li2(1.0001), Err(Error::Domain { .. })));
        assert!(li2(-1.5).is_err());
        assert!(li2(f64::NAN).is_err());
    }

    // Oracle: partial sums of Σ 1/k² with the integral tail correction
    // 1/N - 1/(2N²) + 1/(6N³).
    #[test]
    fn li2_one_matches_partial_sums() {
        let n = 100_000u64;
        let mut s = 0.0;
        for k in (1..=n).rev() {
            let k = k as f64;
            s += 1.0 / (k * k);
        }
        let nf = n as f64;
        s += 1.0 / nf - 0.5 / (nf * nf) + 1.0 / (6.0 * nf * nf * nf);
        assert!((li2(1.0).unwrap() - s).abs() < 1e-14);
    }

    #[test]
    fn li2_minus_one_matches_alternating_series() {
        // Pairwise-summed alternating series with Euler's tail estimate.
        let n = 200_000u64;
        let mut s = 0.0;
        for k in (1..=n).rev() {
            let kf = k as f64;
            let t = 1.0 / (kf * kf);
            s += if k % 2 == 1 { -t } else { t };
        }
        let next = 1.0 / (((n + 1) as f64).powi(2));
        s -= 0.5 * next;
        assert!((li2(-1.0).unwrap() - s).abs() < 1e-12);
    }

    #[test]
    fn li2_duplication_identity() {
        for i in 1..=100 {
            let x = i as f64 / 101.0;
            let lhs = li2(x).unwrap() + li2(-x).unwrap();
            let rhs = 0.5 * li2(x * x).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "x = {x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn chi2_agrees_with_li2_difference() {
        for i in 0..=400 {
            let x = i as f64 / 400.0;
            let a = legendre_chi2(x);
            let b = 0.5 * (li2(x).unwrap() - li2(-x).unwrap());
            assert!((a - b).abs() < 2e-15, "x = {x}: {a} vs {b}");
        }
    }

    #[test]
    fn log_gamma_values() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-15);
        // Γ(½)² = π / sin(π/2).
        let half = 0.5 * libm::log(PI);
        assert!((log_gamma(0.5).unwrap() - half).abs() < 1e-12);
        assert!((log_gamma(0.5).unwrap() - 0.572_364_942_924_700_1).abs() < 1e-12);
        // Recurrence Γ(x+1) = x Γ(x).
        for &x in &[0.1, 0.7, 3.3, 12.5] {
            let lhs = log_gamma(x + 1.0).unwrap();
            let rhs = libm::log(x) + log_gamma(x).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn log_gamma_domain() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.0).is_err());
    }

    #[test]
    fn trunc_exp_interval_errors() {
        let mut rng = RngStream::new(1, 0);
        assert!(matches!(
            sample_trunc_exp(2.0, 2.0, &mut rng),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(sample_trunc_exp(3.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn trunc_exp_support_and_means() {
        let mut rng = RngStream::new(5, 0);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_trunc_exp(0.0, f64::INFINITY, &mut rng).unwrap();
        }
        assert!((sum / n as f64 - 1.0).abs() < 0.005);

        let mut sum = 0.0;
        for _ in 0..200_000 {
            let s = sample_trunc_exp(0.0, 1.0, &mut rng).unwrap();
            assert!((0.0..=1.0).contains(&s));
            sum += s;
        }
        let expect = 1.0 - 1.0 / (core::f64::consts::E - 1.0);
        assert!((sum / 200_000.0 - expect).abs() < 0.003);

        let eps = 1e-9;
        for _ in 0..1000 {
            let s = sample_trunc_exp(2.0, 2.0 + eps, &mut rng).unwrap();
            assert!((2.0..=2.0 + eps).contains(&s));
        }
    }

    #[test]
    fn solver_finds_root() {
        let r = solve_increasing(|x| (x * x * x - 2.0, 3.0 * x * x), 0.0, 2.0, 0.0, 1e-14);
        assert!((r - libm::cbrt(2.0)).abs() < 1e-13);
    }
}
