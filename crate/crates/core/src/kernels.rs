//! Majorizing kernels and their offspring laws.
//!
//! Two kernels are supported:
//!
//! * dilogarithmic, `h_d(ξ) = |ξ|⁻²` with `h_d * h_d = π³ |ξ| h_d`;
//! * Bessel, `h_b(ξ) = e^{-|ξ|} / |ξ|` with `h_b * h_b = 2π |ξ| h_b`.
//!
//! A branching node at `ξ` produces `W₁ ~ h(η) h(ξ-η) / h*h(ξ)` and
//! `W₂ = ξ - W₁`. Both samplers here are exact: every coordinate is drawn by
//! inverting a closed-form (or bracketed numerical) CDF, so each call
//! consumes a fixed number of uniforms.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::RngStream;
use crate::specfun::{self, legendre_chi2, solve_increasing};
use crate::vector::{Frame, Wavenumber};

const TWO_OVER_PI2: f64 = 2.0 / (PI * PI);
const EIGHT_OVER_PI2: f64 = 8.0 / (PI * PI);
/// Dilog ratio draws are kept this far away from the log singularity at 1.
pub const DILOG_UNIT_GAP: f64 = 1e-12;
const QUANTILE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Dilog,
    Bessel,
}

impl KernelKind {
    /// The constant `c` in `h*h(ξ) = c |ξ| h(ξ)`.
    pub fn star_constant(self) -> f64 {
        match self {
            KernelKind::Dilog => PI * PI * PI,
            KernelKind::Bessel => 2.0 * PI,
        }
    }

    /// `h(ξ)` as a function of `|ξ|`.
    pub fn h_radial(self, mag: f64) -> f64 {
        match self {
            KernelKind::Dilog => 1.0 / (mag * mag),
            KernelKind::Bessel => math::exp(-mag) / mag,
        }
    }

    pub fn h(self, xi: Wavenumber) -> f64 {
        self.h_radial(xi.norm())
    }

    /// Multiplier applied at every branching of the normalized payoff
    /// `χ = û / h`: substituting into the mild equation and using the star
    /// identity gives `c / (ν (2π)^{3/2})`.
    pub fn branch_multiplier(self, nu: f64) -> f64 {
        let two_pi = 2.0 * PI;
        self.star_constant() / (nu * two_pi * math::sqrt(two_pi))
    }

    pub fn sample_offspring(
        self,
        parent: Wavenumber,
        rng: &mut RngStream,
    ) -> Result<OffspringPair> {
        match self {
            KernelKind::Dilog => sample_dilog_offspring(parent, rng),
            KernelKind::Bessel => sample_bessel_offspring(parent, rng),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Dilog => "dilog",
            KernelKind::Bessel => "bessel",
        }
    }
}

impl core::str::FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dilog" => Ok(KernelKind::Dilog),
            "bessel" => Ok(KernelKind::Bessel),
            _ => Err(Error::InvalidParameter {
                name: "kernel",
                reason: "expected `dilog` or `bessel`",
            }),
        }
    }
}

/// Two offspring wavenumbers with `w1 + w2` equal to the parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffspringPair {
    pub w1: Wavenumber,
    pub w2: Wavenumber,
}

impl OffspringPair {
    /// `|w1 + w2 - parent|` relative to the largest magnitude involved.
    pub fn conservation_error(&self, parent: Wavenumber) -> f64 {
        let scale = parent
            .max_abs()
            .max(self.w1.max_abs())
            .max(self.w2.max_abs());
        (self.w1 + self.w2 - parent).max_abs() / scale
    }
}

// ---------------------------------------------------------------------------
// Dilogarithmic kernel

/// Density `𝒟(r) = (2/π²)(1/r) ln|(1+r)/(1-r)|` of the ratio `|W₁|/|ξ|`.
///
/// Returns `+∞` at the integrable singularity `r = 1`.
pub fn dilog_density(r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain {
            what: "dilog_density",
            value: r,
        });
    }
    if r == 1.0 {
        return Ok(f64::INFINITY);
    }
    if r.is_infinite() {
        return Ok(0.0);
    }
    // ln|(1+r)/(1-r)| = ln(1 + 2 min(r, 1) / |1-r|); 1-r is exact near 1
    let log_ratio = math::ln_1p(2.0 * r.min(1.0) / math::abs(1.0 - r));
    Ok(TWO_OVER_PI2 * log_ratio / r)
}

/// CDF of the dilogarithmic ratio law, via `Li₂`.
pub fn dilog_cdf(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain {
            what: "dilog_cdf",
            value: r,
        });
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    if r.is_infinite() {
        return Ok(1.0);
    }
    let folded = if r <= 1.0 { r } else { 1.0 / r };
    let half = TWO_OVER_PI2 * (specfun::li2(folded)? - specfun::li2(-folded)?);
    Ok(if r <= 1.0 { half } else { 1.0 - half })
}

/// `P(min(R, 1/R) ≤ v)` for `v ∈ [0, 1]`, via Legendre's chi function.
fn folded_dilog_cdf(v: f64) -> f64 {
    EIGHT_OVER_PI2 * legendre_chi2(v)
}

/// Inverse of [`folded_dilog_cdf`] on `(0, 1)`, capped at `1 - DILOG_UNIT_GAP`.
pub(crate) fn folded_dilog_quantile(p: f64) -> f64 {
    // χ₂(v) ≥ v, so the start point lies right of the root and Newton on the
    // convex CDF descends monotonically.
    let x0 = (PI * PI * p / 8.0).min(1.0 - DILOG_UNIT_GAP);
    let v = solve_increasing(
        |v| {
            let f = folded_dilog_cdf(v) - p;
            let df = if v > 0.0 {
                EIGHT_OVER_PI2 * math::atanh(v) / v
            } else {
                EIGHT_OVER_PI2
            };
            (f, df)
        },
        0.0,
        1.0,
        x0,
        QUANTILE_TOL,
    );
    v.clamp(f64::MIN_POSITIVE, 1.0 - DILOG_UNIT_GAP)
}

/// Draw `R` from the dilogarithmic ratio law.
///
/// The folded value `min(R, 1/R)` (equivalently `|ln R|`) is drawn by
/// inverse CDF, then a fair sign picks `R` or `1/R`. Consumes two words.
pub fn sample_dilog_ratio(rng: &mut RngStream) -> f64 {
    let v = folded_dilog_quantile(rng.uniform());
    if rng.coin() {
        v
    } else {
        1.0 / v
    }
}

/// Magnitude draws of one dilog branching at a unit parent.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DilogPairDraw {
    /// `|W₁|` for a unit parent.
    pub r: f64,
    /// `|W₂|² = 1 - 2 r cos φ + r²`.
    pub q: f64,
    /// `cos φ`, the angle between `W₁` and the parent.
    pub cos_angle: f64,
}

/// Consumes three words: the ratio (two) and the polar angle (one).
pub(crate) fn draw_dilog_pair(rng: &mut RngStream) -> DilogPairDraw {
    let r = sample_dilog_ratio(rng);
    let u = rng.uniform();
    // Given r, cos φ has density ∝ 1/(1 + r² - 2 r c) on [-1, 1]; with
    // L = ln|(1+r)/(1-r)| the inverse CDF is q = (1+r)² e^{-2uL}, which is
    // itself |W₂|². Near u = 1 the equivalent form (1-r)² e^{2(1-u)L} is used.
    let folded = if r < 1.0 { r } else { 1.0 / r };
    let l = 2.0 * math::atanh(folded);
    let q = if u <= 0.5 {
        (1.0 + r) * (1.0 + r) * math::exp(-2.0 * u * l)
    } else {
        (1.0 - r) * (1.0 - r) * math::exp(2.0 * (1.0 - u) * l)
    };
    let cos_angle = ((1.0 + r * r - q) / (2.0 * r)).clamp(-1.0, 1.0);
    DilogPairDraw { r, q, cos_angle }
}

/// The magnitudes `(|W̃₁|, |W̃₂|)` of one dilog branching at a unit parent.
pub fn sample_dilog_ratio_pair(rng: &mut RngStream) -> (f64, f64) {
    let d = draw_dilog_pair(rng);
    (d.r, math::sqrt(d.q))
}

/// Offspring of `parent` under `H_d(η | ξ) = |ξ| / (π³ |ξ-η|² |η|²)`.
///
/// Draw order: ratio (two words), polar angle, azimuth.
pub fn sample_dilog_offspring(parent: Wavenumber, rng: &mut RngStream) -> Result<OffspringPair> {
    let e = parent.unit()?;
    let mag = parent.norm();
    let d = draw_dilog_pair(rng);
    let azimuth = 2.0 * PI * rng.uniform();
    let dir = Frame::from_unit(e).direction(d.cos_angle, azimuth);
    let w1 = dir * (mag * d.r);
    Ok(OffspringPair {
        w1,
        w2: parent - w1,
    })
}

// ---------------------------------------------------------------------------
// Bessel kernel

/// `P(|W| > r)` for `W` the offspring of a parent with `|ξ| = u` under `H_b`.
pub fn bessel_radial_survival(u: f64, r: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Domain {
            what: "bessel_radial_survival",
            value: u,
        });
    }
    if !(r >= 0.0) {
        return Err(Error::Domain {
            what: "bessel_radial_survival",
            value: r,
        });
    }
    Ok(bessel_survival_unchecked(u, r))
}

fn bessel_survival_unchecked(u: f64, r: f64) -> f64 {
    if r >= u {
        // e^{-2r}(e^{2u} - 1)/(2u), written to avoid overflow for large u.
        math::exp(2.0 * (u - r)) * (-math::exp_m1(-2.0 * u)) / (2.0 * u)
    } else {
        1.0 - r / u - math::exp_m1(-2.0 * r) / (2.0 * u)
    }
}

/// Radius with survival probability `p` under the Bessel transition from `u`.
fn bessel_radial_quantile(u: f64, p: f64) -> f64 {
    let at_u = -math::exp_m1(-2.0 * u) / (2.0 * u);
    if p <= at_u {
        // ln(e^{2u} - 1) = 2u + ln(1 - e^{-2u})
        let log_num = 2.0 * u + math::ln(-math::exp_m1(-2.0 * u));
        let r = 0.5 * (log_num - math::ln(2.0 * u * p));
        return r.max(u);
    }
    // Solve r - (1 - e^{-2r})/2 = u(1 - p) on [0, u]; the left side is convex
    // increasing and t + 1/2 lies right of the root.
    let target = u * (1.0 - p);
    let x0 = (target + 0.5).min(u);
    let r = solve_increasing(
        |r| {
            (
                r + 0.5 * math::exp_m1(-2.0 * r) - target,
                -math::exp_m1(-2.0 * r),
            )
        },
        0.0,
        u,
        x0,
        QUANTILE_TOL * x0.min(1.0),
    );
    r.clamp(0.0, u)
}

/// Draw `|W|` from the Bessel transition density `p(u, ·)`. Consumes one word.
pub fn sample_bessel_radial(u: f64, rng: &mut RngStream) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Domain {
            what: "sample_bessel_radial",
            value: u,
        });
    }
    Ok(bessel_radial_quantile(u, rng.uniform()))
}

/// Offspring of `parent` under `H_b`.
///
/// With `u = |ξ|` and `ρ = |W₁|`, the distance `s = |ξ - W₁|` given `ρ` has
/// density `∝ e^{-s}` on `[|ρ-u|, ρ+u]`; the polar angle follows from the
/// law of cosines. Draw order: radius, distance, azimuth.
pub fn sample_bessel_offspring(parent: Wavenumber, rng: &mut RngStream) -> Result<OffspringPair> {
    let e = parent.unit()?;
    let u = parent.norm();
    let rho = bessel_radial_quantile(u, rng.uniform());
    let lo = math::abs(rho - u);
    let hi = rho + u;
    let s = specfun::trunc_exp_from_uniform(lo, hi, rng.uniform());
    let cos_angle = if rho > 0.0 {
        // (ρ² + u² - s²)/(2ρu) with the difference of squares factored.
        (((rho - s) * (rho + s) + u * u) / (2.0 * rho * u)).clamp(-1.0, 1.0)
    } else {
        1.0
    };
    let azimuth = 2.0 * PI * rng.uniform();
    let w1 = Frame::from_unit(e).direction(cos_angle, azimuth) * rho;
    Ok(OffspringPair {
        w1,
        w2: parent - w1,
    })
}

/// Angle-resolved dilog offspring density
/// `H̃(θ, r) = (2/π²) sin θ / (1 - 2r cos θ + r²)`.
pub fn htilde_density(theta: f64, r: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain {
            what: "htilde_density",
            value: theta,
        });
    }
    if !(r > 0.0) {
        return Err(Error::Domain {
            what: "htilde_density",
            value: r,
        });
    }
    // 1 - 2r cos θ + r² = (1 - r)² + 4r sin²(θ/2)
    let h = math::sin(0.5 * theta);
    let denom = (1.0 - r) * (1.0 - r) + 4.0 * r * h * h;
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(TWO_OVER_PI2 * math::sin(theta) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_adaptive;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn ks_stat(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = cdf(x);
            d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
        }
        d
    }

    #[test]
    fn dilog_reference_values() {
        assert!((dilog_cdf(0.5).unwrap() - 0.2088543150270339).abs() < 1e-14);
        assert!((dilog_density(0.5).unwrap() - 0.4452507898074821).abs() < 1e-14);
        assert!((dilog_cdf(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(dilog_density(1.0).unwrap(), f64::INFINITY);
        let lo = dilog_cdf(0.5).unwrap();
        assert!((dilog_cdf(2.0).unwrap() - (1.0 - lo)).abs() < 1e-15);
    }

    #[test]
    fn dilog_domain_errors() {
        assert!(dilog_density(0.0).is_err());
        assert!(dilog_density(-1.0).is_err());
        assert!(dilog_density(f64::NAN).is_err());
        assert!(dilog_cdf(-1e-300).is_err());
        assert_eq!(dilog_cdf(0.0).unwrap(), 0.0);
        assert_eq!(dilog_cdf(f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn dilog_cdf_integrates_density() {
        for &r in &[0.1, 0.5, 0.9, 0.999] {
            let v = integrate_adaptive(|x| dilog_density(x).unwrap(), 0.0, r, 1e-14, 1e-13);
            assert!((v - dilog_cdf(r).unwrap()).abs() < 1e-11, "r={r}");
        }
        let v = integrate_adaptive(|x| dilog_density(x).unwrap(), 1.5, 40.0, 1e-14, 1e-13);
        let want = dilog_cdf(40.0).unwrap() - dilog_cdf(1.5).unwrap();
        assert!((v - want).abs() < 1e-11);
    }

    #[test]
    fn folded_quantile_inverts_cdf() {
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let v = folded_dilog_quantile(p);
            assert!((folded_dilog_cdf(v) - p).abs() < 1e-12, "p={p}");
        }
        assert!(folded_dilog_quantile(1.0 - 1e-17) <= 1.0 - DILOG_UNIT_GAP);
    }

    #[test]
    fn dilog_ratio_ks() {
        let mut rng = RngStream::new(11, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_dilog_ratio(&mut rng)).collect();
        let d = ks_stat(xs, |x| dilog_cdf(x).unwrap());
        assert!(d < 0.0065, "D={d}");
    }

    #[test]
    fn dilog_ratio_heavy_tail_and_log_moments() {
        let mut rng = RngStream::new(12, 0);
        let n = 200_000;
        let mut above = 0usize;
        let mut abs_log = 0.0;
        for _ in 0..n {
            let r = sample_dilog_ratio(&mut rng);
            if r > 100.0 {
                above += 1;
            }
            abs_log += r.ln().abs();
        }
        let p = 1.0 - dilog_cdf(100.0).unwrap();
        assert!((p - 4.0 / (PI * PI * 100.0)).abs() < 1e-5 * 4.0);
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((above as f64 - n as f64 * p).abs() < 5.0 * sd);
        // E|ln R| = 7ζ(3)/π²
        let mean = abs_log / n as f64;
        assert!((mean - 0.8525567976350116).abs() < 0.01, "{mean}");
    }

    #[test]
    fn dilog_second_offspring_has_same_law() {
        let parent = Wavenumber::new(0.3, -1.2, 2.0);
        let mag = parent.norm();
        let mut rng = RngStream::new(13, 0);
        let mut r2 = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            let p = sample_dilog_offspring(parent, &mut rng).unwrap();
            r2.push(p.w2.norm() / mag);
        }
        let d = ks_stat(r2, |x| dilog_cdf(x).unwrap());
        assert!(d < 0.0065, "D={d}");
    }

    #[test]
    fn dilog_pair_draw_magnitudes_match_vectors() {
        let parent = Wavenumber::new(0.0, 0.0, 1.0);
        for i in 0..1000 {
            let mut a = RngStream::new(14, i);
            let mut b = a.clone();
            let (r1, r2) = sample_dilog_ratio_pair(&mut a);
            let p = sample_dilog_offspring(parent, &mut b).unwrap();
            assert!((p.w1.norm() - r1).abs() <= 1e-12 * r1.max(1.0));
            assert!((p.w2.norm() - r2).abs() <= 1e-9 * r2.max(1.0));
        }
    }

    #[test]
    fn bessel_survival_values() {
        let s = bessel_radial_survival(1.0, 1.0).unwrap();
        assert!((s - 0.43233235838169365).abs() < 1e-15);
        assert_eq!(bessel_radial_survival(2.0, 0.0).unwrap(), 1.0);
        let u = 0.7;
        let below = bessel_radial_survival(u, u * (1.0 - 1e-12)).unwrap();
        let above = bessel_radial_survival(u, u).unwrap();
        assert!((below - above).abs() < 1e-11);
        assert!(bessel_radial_survival(0.0, 1.0).is_err());
        assert!(bessel_radial_survival(1.0, -1.0).is_err());
        assert!(bessel_radial_survival(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn bessel_quantile_inverts_survival() {
        for &u in &[1e-3, 0.1, 1.0, 5.0, 40.0] {
            for i in 1..100 {
                let p = i as f64 / 100.0;
                let r = bessel_radial_quantile(u, p);
                let s = bessel_survival_unchecked(u, r);
                assert!((s - p).abs() < 1e-10, "u={u} p={p} r={r} s={s}");
            }
        }
    }

    #[test]
    fn bessel_radial_ks_and_mean() {
        for &u in &[0.3f64, 1.0, 4.0] {
            let mut rng = RngStream::new(15, u.to_bits());
            let xs: Vec<f64> = (0..100_000)
                .map(|_| sample_bessel_radial(u, &mut rng).unwrap())
                .collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let d = ks_stat(xs, |x| 1.0 - bessel_survival_unchecked(u, x));
            assert!(d < 0.0065, "u={u} D={d}");
            assert!((mean - (u + 1.0) / 2.0).abs() < 0.02, "u={u} mean={mean}");
        }
    }

    #[test]
    fn bessel_second_offspring_has_same_law() {
        let u = 1.5;
        let parent = Wavenumber::new(u, 0.0, 0.0);
        let mut rng = RngStream::new(16, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_bessel_offspring(parent, &mut rng).unwrap().w2.norm())
            .collect();
        let d = ks_stat(xs, |x| 1.0 - bessel_survival_unchecked(u, x));
        assert!(d < 0.0065, "D={d}");
    }

    #[test]
    fn offspring_reject_zero_parent() {
        let mut rng = RngStream::new(0, 0);
        assert!(sample_dilog_offspring(Wavenumber::default(), &mut rng).is_err());
        assert!(sample_bessel_offspring(Wavenumber::default(), &mut rng).is_err());
        assert!(sample_bessel_radial(0.0, &mut rng).is_err());
    }

    #[test]
    fn htilde_values_and_marginal() {
        assert!((htilde_density(PI / 2.0, 1.0).unwrap() - 1.0 / (PI * PI)).abs() < 1e-16);
        assert_eq!(htilde_density(0.0, 1.0).unwrap(), f64::INFINITY);
        assert!(htilde_density(-0.1, 1.0).is_err());
        assert!(htilde_density(1.0, 0.0).is_err());
        for &r in &[0.2, 0.8, 3.0] {
            let m = integrate_adaptive(|t| htilde_density(t, r).unwrap(), 0.0, PI, 1e-14, 1e-13);
            assert!((m - dilog_density(r).unwrap()).abs() < 1e-11);
        }
    }

    #[test]
    fn branch_multipliers() {
        let mu = KernelKind::Dilog.branch_multiplier(1.0);
        assert!((mu - (PI / 2.0).powf(1.5)).abs() < 1e-15);
        let mb = KernelKind::Bessel.branch_multiplier(2.0);
        assert!((mb - 1.0 / (2.0 * (2.0 * PI).sqrt())).abs() < 1e-15);
        assert_eq!("bessel".parse::<KernelKind>().unwrap(), KernelKind::Bessel);
        assert!("gauss".parse::<KernelKind>().is_err());
    }

    proptest! {
        #[test]
        fn offspring_conserve_momentum(
            x in -1e3f64..1e3, y in -1e3f64..1e3, z in -1e3f64..1e3,
            seed in any::<u64>(), bessel in any::<bool>(),
        ) {
            let parent = Wavenumber::new(x, y, z);
            prop_assume!(parent.norm() > 1e-6);
            let kind = if bessel { KernelKind::Bessel } else { KernelKind::Dilog };
            let mut rng = RngStream::new(seed, 0);
            let p = kind.sample_offspring(parent, &mut rng).unwrap();
            prop_assert!(p.w1.is_finite() && p.w2.is_finite());
            prop_assert!(p.conservation_error(parent) <= 1e-12);
        }

        #[test]
        fn dilog_ratio_positive_and_off_unit(seed in any::<u64>()) {
            let mut rng = RngStream::new(seed, 1);
            for _ in 0..50 {
                let r = sample_dilog_ratio(&mut rng);
                prop_assert!(r > 0.0 && r.is_finite() && r != 1.0);
            }
        }
    }
}
