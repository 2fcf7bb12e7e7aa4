//! Distributional tests and Monte Carlo bound checks.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::cascade::{zeta_n, zeta_tilde_n};
use crate::error::{Error, Result};
use crate::kernels::{sample_bessel_radial, sample_dilog_ratio, KernelKind};
use crate::math;
use crate::rng::RngStream;
use crate::specfun::log_gamma;
use crate::vector::Wavenumber;

/// Smallest sample accepted by the KS tests.
pub const KS_MIN_SAMPLE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    pub statistic: f64,
    pub n: usize,
    pub m: usize,
    pub critical_at_alpha: f64,
    pub pass: bool,
}

impl KsReport {
    fn new(statistic: f64, n: usize, m: usize, critical: f64) -> Self {
        KsReport {
            statistic,
            n,
            m,
            critical_at_alpha: critical,
            pass: statistic < critical,
        }
    }
}

/// Asymptotic Kolmogorov coefficient `c(α) = sqrt(-ln(α/2) / 2)`.
pub fn ks_coefficient(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            what: "ks_coefficient",
            value: alpha,
        });
    }
    Ok(math::sqrt(-math::ln(alpha / 2.0) / 2.0))
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter {
            name: "sample",
            reason: "contains NaN",
        });
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Exact two-sample statistic `sup |F_a - F_b|`, ties handled.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsReport> {
    for s in [a, b] {
        if s.len() < KS_MIN_SAMPLE {
            return Err(Error::UndersizedSample {
                len: s.len(),
                min: KS_MIN_SAMPLE,
            });
        }
    }
    let c = ks_coefficient(alpha)?;
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max(math::abs(i as f64 / n as f64 - j as f64 / m as f64));
    }
    let (nf, mf) = (n as f64, m as f64);
    Ok(KsReport::new(
        d,
        n,
        m,
        c * math::sqrt((nf + mf) / (nf * mf)),
    ))
}

/// One-sample statistic against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(a: &[f64], cdf: F, alpha: f64) -> Result<KsReport> {
    if a.len() < KS_MIN_SAMPLE {
        return Err(Error::UndersizedSample {
            len: a.len(),
            min: KS_MIN_SAMPLE,
        });
    }
    let c = ks_coefficient(alpha)?;
    let a = sorted(a)?;
    let n = a.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in a.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(KsReport::new(d, a.len(), 0, c / math::sqrt(n)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `satisfied` iff `estimate - 3σ ≤ bound`.
    Upper,
    /// `satisfied` iff `|estimate - bound| ≤ 3σ`.
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub kind: BoundKind,
    pub satisfied: bool,
}

impl BoundReport {
    pub fn new(estimate: f64, stderr: f64, bound: f64, kind: BoundKind) -> Self {
        let satisfied = match kind {
            BoundKind::Upper => estimate - 3.0 * stderr <= bound,
            BoundKind::Equal => math::abs(estimate - bound) <= 3.0 * stderr,
        };
        BoundReport {
            estimate,
            stderr,
            bound,
            kind,
            satisfied,
        }
    }

    /// `estimate + 3σ ≤ bound`: the bound holds even at the top of the interval.
    pub fn holds_with_margin(&self) -> bool {
        self.estimate + 3.0 * self.stderr <= self.bound
    }
}

/// Sample mean and standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, math::sqrt(var / n))
}

/// Which explosion functional a sample was drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaSource {
    /// `|ξ|² ζₙ(ξ)` for the given kernel and `|ξ|`.
    Scaled { kernel: KernelKind, xi_mag: f64 },
    /// `ζ̃ₙ`.
    SelfSimilar,
}

impl ZetaSource {
    pub fn label(&self) -> String {
        match self {
            ZetaSource::Scaled { kernel, xi_mag } => alloc::format!("{}:{}", kernel.name(), xi_mag),
            ZetaSource::SelfSimilar => String::from("selfsim"),
        }
    }
}

/// `reps` draws of the functional at depth `n`; replicate `i` runs on
/// `rng.fork(i)`. `ξ` points along the third axis.
pub fn zeta_sample(source: ZetaSource, n: u32, reps: usize, rng: &RngStream) -> Result<Vec<f64>> {
    (0..reps as u64)
        .map(|i| {
            let s = rng.fork(i);
            match source {
                ZetaSource::Scaled { kernel, xi_mag } => {
                    let xi = Wavenumber::new(0.0, 0.0, xi_mag);
                    Ok(xi_mag * xi_mag * zeta_n(xi, n, kernel, &s)?)
                }
                ZetaSource::SelfSimilar => zeta_tilde_n(n, &s),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub left: String,
    pub right: String,
    pub ks: KsReport,
}

/// Pairwise KS among `|ξ|² ζₙ(|ξ|)` (dilog) for every `|ξ|` and `ζ̃ₙ`, each
/// group on its own family of streams.
pub fn verify_scaling_equivalence(
    xi_mags: &[f64],
    n: u32,
    reps: usize,
    alpha: f64,
    rng: &RngStream,
) -> Result<Vec<PairReport>> {
    let mut groups: Vec<ZetaSource> = xi_mags
        .iter()
        .map(|&x| ZetaSource::Scaled {
            kernel: KernelKind::Dilog,
            xi_mag: x,
        })
        .collect();
    groups.push(ZetaSource::SelfSimilar);
    compare_groups(&groups, n, reps, alpha, rng)
}

/// Pairwise KS among arbitrary sources; group `g` uses `rng.fork(1000 + g)`.
pub fn compare_groups(
    groups: &[ZetaSource],
    n: u32,
    reps: usize,
    alpha: f64,
    rng: &RngStream,
) -> Result<Vec<PairReport>> {
    let samples: Vec<Vec<f64>> = groups
        .iter()
        .enumerate()
        .map(|(g, src)| zeta_sample(*src, n, reps, &rng.fork(1000 + g as u64)))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            out.push(PairReport {
                left: groups[i].label(),
                right: groups[j].label(),
                ks: ks_two_sample(&samples[i], &samples[j], alpha)?,
            });
        }
    }
    Ok(out)
}

fn check_positive(what: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value: v })
    }
}

/// `E_u[λ / (λ + W²)]` over Bessel radial draws against the bound `π√λ`.
pub fn bessel_bound_check(
    u: f64,
    lambda: f64,
    reps: usize,
    rng: &RngStream,
) -> Result<BoundReport> {
    check_positive("bessel_bound_check", u)?;
    check_positive("bessel_bound_check", lambda)?;
    let mut s = rng.clone();
    let xs: Vec<f64> = (0..reps)
        .map(|_| sample_bessel_radial(u, &mut s).map(|w| lambda / (lambda + w * w)))
        .collect::<Result<_>>()?;
    let (m, se) = mean_stderr(&xs);
    Ok(BoundReport::new(
        m,
        se,
        PI * math::sqrt(lambda),
        BoundKind::Upper,
    ))
}

/// `2ⁿ E Π_{j=1..n} λ / (λ + |W_j|²)` along one Bessel path from `|ξ|`,
/// against `(2π√λ)ⁿ`.
pub fn monotonicity_criterion(
    xi_mag: f64,
    lambda: f64,
    n: u32,
    reps: usize,
    rng: &RngStream,
) -> Result<BoundReport> {
    check_positive("monotonicity_criterion", xi_mag)?;
    check_positive("monotonicity_criterion", lambda)?;
    let scale = math::powf(2.0, n as f64);
    let xs: Vec<f64> = (0..reps as u64)
        .map(|i| {
            let mut s = rng.fork(i);
            let mut w = xi_mag;
            let mut prod = scale;
            for _ in 0..n {
                w = sample_bessel_radial(w, &mut s)?;
                prod *= lambda / (lambda + w * w);
            }
            Ok(prod)
        })
        .collect::<Result<_>>()?;
    let (m, se) = mean_stderr(&xs);
    let bound = math::powf(2.0 * PI * math::sqrt(lambda), n as f64);
    Ok(BoundReport::new(m, se, bound, BoundKind::Upper))
}

/// `(2 Γ(1 - u/2))^{-1/u}`, the largest `M` for which the Chernoff series
/// bound on the clock factor converges.
pub fn chernoff_threshold(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 2.0) {
        return Err(Error::Domain {
            what: "chernoff_threshold",
            value: u,
        });
    }
    Ok(math::exp(
        -(core::f64::consts::LN_2 + log_gamma(1.0 - 0.5 * u)?) / u,
    ))
}

/// `min_{|s|=n} Σ_{j=1..n} ½ ln T_{s|j}` for clocks drawn from `clock` in
/// depth-first order. Logs can be negative, so the minimum is computed by
/// exact bottom-up recursion rather than by pruning.
fn min_half_log_sum<F: FnMut() -> f64>(depth: u32, clock: &mut F) -> f64 {
    if depth == 0 {
        return 0.0;
    }
    let a = 0.5 * math::ln(clock()) + min_half_log_sum(depth - 1, clock);
    let b = 0.5 * math::ln(clock()) + min_half_log_sum(depth - 1, clock);
    a.min(b)
}

/// Average over `trees` of `(min_{|s|=n} Π_{j=1..n} √T_{s|j})^{1/n}`.
pub fn bkh_speed_estimate(n: u32, trees: usize, rng: &RngStream) -> Result<f64> {
    bkh_speed_with(n, trees, |i| {
        let mut s = rng.fork(i);
        move || s.exp1()
    })
}

/// [`bkh_speed_estimate`] with the clocks of tree `i` supplied by `source(i)`.
pub fn bkh_speed_with<S, F>(n: u32, trees: usize, mut source: S) -> Result<f64>
where
    S: FnMut(u64) -> F,
    F: FnMut() -> f64,
{
    if n == 0 || n > 30 {
        return Err(Error::DepthBudget {
            requested: n,
            max: 30,
        });
    }
    if trees == 0 {
        return Err(Error::InvalidParameter {
            name: "trees",
            reason: "must be at least 1",
        });
    }
    let mut acc = 0.0;
    for i in 0..trees as u64 {
        let mut clock = source(i);
        acc += math::exp(min_half_log_sum(n, &mut clock) / n as f64);
    }
    Ok(acc / trees as f64)
}

/// `E[a²R² / (a²R² + θ)]` over dilog ratios against `(2/π) arctan(a/√θ)`.
pub fn arctan_identity_check(
    a: f64,
    theta: f64,
    reps: usize,
    rng: &RngStream,
) -> Result<BoundReport> {
    check_positive("arctan_identity_check", a)?;
    check_positive("arctan_identity_check", theta)?;
    if reps < 10_000 {
        return Err(Error::UndersizedSample {
            len: reps,
            min: 10_000,
        });
    }
    let mut s = rng.clone();
    let xs: Vec<f64> = (0..reps)
        .map(|_| {
            let r = sample_dilog_ratio(&mut s);
            let x = a * a * r * r;
            x / (x + theta)
        })
        .collect();
    let (m, se) = mean_stderr(&xs);
    let closed = 2.0 / PI * math::atan(a / math::sqrt(theta));
    Ok(BoundReport::new(m, se, closed, BoundKind::Equal))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRatioReport {
    /// Mean of `ln R` against 0.
    pub mean: BoundReport,
    pub second_moment: f64,
    pub fourth_moment: f64,
    /// Mean over the stream paired with its reciprocals.
    pub antithetic_mean: f64,
}

/// Moments of `ln R` over dilog ratio draws.
pub fn mean_log_ratio(reps: usize, rng: &RngStream) -> Result<LogRatioReport> {
    if reps < 10_000 {
        return Err(Error::UndersizedSample {
            len: reps,
            min: 10_000,
        });
    }
    let mut s = rng.clone();
    let xs: Vec<f64> = (0..reps)
        .map(|_| math::ln(sample_dilog_ratio(&mut s)))
        .collect();
    let (m, se) = mean_stderr(&xs);
    let n = reps as f64;
    let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x * x) * (x * x)).sum::<f64>() / n;
    let anti = xs.iter().map(|&x| x + (-x)).sum::<f64>() / (2.0 * n);
    Ok(LogRatioReport {
        mean: BoundReport::new(m, se, 0.0, BoundKind::Equal),
        second_moment: m2,
        fourth_moment: m4,
        antithetic_mean: anti,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceSummary {
    /// Visits of `Σ ln R_j` to `[-ε, ε]` per replicate.
    pub counts: Vec<u64>,
    pub median: f64,
    pub mean: f64,
    pub min: u64,
    pub max: u64,
}

/// Visits of the dilog log-walk to `[-ε, ε]` within `steps` steps.
/// Exploratory: a finite horizon cannot confirm infinitely many returns.
pub fn recurrence_scan(
    epsilon: f64,
    steps: usize,
    reps: usize,
    rng: &RngStream,
) -> Result<RecurrenceSummary> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain {
            what: "recurrence_scan",
            value: epsilon,
        });
    }
    if reps == 0 {
        return Err(Error::InvalidParameter {
            name: "reps",
            reason: "must be at least 1",
        });
    }
    let counts: Vec<u64> = (0..reps as u64)
        .map(|i| {
            let mut s = rng.fork(i);
            let mut walk = 0.0;
            let mut visits = 0;
            for _ in 0..steps {
                walk += math::ln(sample_dilog_ratio(&mut s));
                if math::abs(walk) <= epsilon {
                    visits += 1;
                }
            }
            visits
        })
        .collect();
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let k = sorted.len();
    let median = if k % 2 == 1 {
        sorted[k / 2] as f64
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2]) as f64
    };
    let mean = counts.iter().sum::<u64>() as f64 / k as f64;
    Ok(RecurrenceSummary {
        median,
        mean,
        min: sorted[0],
        max: sorted[k - 1],
        counts,
    })
}

/// One verification outcome, shaped for machine-readable output.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRecord {
    pub test: String,
    pub params: Vec<(String, f64)>,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::dilog_cdf;

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let r = ks_two_sample(&a, &a, 0.001).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn ks_shifted_uniforms_fail() {
        let mut s = RngStream::new(1, 0);
        let a: Vec<f64> = (0..10_000).map(|_| s.uniform()).collect();
        let b: Vec<f64> = (0..10_000).map(|_| s.uniform() + 0.5).collect();
        let r = ks_two_sample(&a, &b, 0.001).unwrap();
        assert!((r.statistic - 0.5).abs() < 0.02, "{}", r.statistic);
        assert!(!r.pass);
    }

    #[test]
    fn ks_small_samples_rejected() {
        let a = [1.0; 10];
        let b = [1.0; 100];
        assert_eq!(
            ks_two_sample(&a, &b, 0.01),
            Err(Error::UndersizedSample { len: 10, min: 50 })
        );
        assert!(ks_one_sample(&a, |x| x, 0.01).is_err());
        assert!(ks_two_sample(&b, &b, 0.0).is_err());
    }

    #[test]
    fn ks_coefficient_value() {
        assert!((ks_coefficient(0.001).unwrap() - 1.9494746035204051).abs() < 1e-12);
    }

    #[test]
    fn ks_ties_are_grouped() {
        let a: Vec<f64> = (0..100).map(|i| (i % 3) as f64).collect();
        let b: Vec<f64> = (0..200).map(|i| (i % 3) as f64).collect();
        let r = ks_two_sample(&a, &b, 0.001).unwrap();
        assert!(r.statistic < 0.02, "{}", r.statistic);
    }

    #[test]
    fn ks_dilog_self_consistency() {
        let mut fails = 0;
        for rep in 0..100 {
            let mut s = RngStream::new(2, rep);
            let a: Vec<f64> = (0..10_000).map(|_| sample_dilog_ratio(&mut s)).collect();
            let b: Vec<f64> = (0..10_000).map(|_| sample_dilog_ratio(&mut s)).collect();
            if !ks_two_sample(&a, &b, 0.001).unwrap().pass {
                fails += 1;
            }
        }
        assert!(fails <= 1, "{fails}");
        let mut s = RngStream::new(2, 999);
        let a: Vec<f64> = (0..10_000).map(|_| sample_dilog_ratio(&mut s)).collect();
        assert!(
            ks_one_sample(&a, |x| dilog_cdf(x).unwrap(), 0.001)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn bound_report_semantics() {
        let r = BoundReport::new(1.0, 0.1, 0.8, BoundKind::Upper);
        assert!(r.satisfied && !r.holds_with_margin());
        let r = BoundReport::new(1.0, 0.1, 0.6, BoundKind::Upper);
        assert!(!r.satisfied);
        let r = BoundReport::new(1.0, 0.1, 1.25, BoundKind::Equal);
        assert!(r.satisfied);
        let r = BoundReport::new(1.0, 0.1, 1.35, BoundKind::Equal);
        assert!(!r.satisfied);
    }

    #[test]
    fn chernoff_values() {
        let c1 = chernoff_threshold(1.0).unwrap();
        assert!((c1 - 0.28209479177387814).abs() < 1e-10);
        assert!(chernoff_threshold(0.0).is_err());
        assert!(chernoff_threshold(2.0).is_err());
        // increasing toward the maximum from small u
        let mut prev = 0.0;
        for i in 1..100 {
            let v = chernoff_threshold(i as f64 * 0.01).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let (mut best, mut arg) = (0.0, 0.0);
        for i in 1..2000 {
            let u = i as f64 * 1e-3;
            let v = chernoff_threshold(u).unwrap();
            if v > best {
                best = v;
                arg = u;
            }
        }
        assert!((best - 0.28904960122055397).abs() < 1e-12, "{best}");
        assert!((arg - 1.178).abs() < 1e-9);
    }

    #[test]
    fn bkh_deterministic_and_single_level() {
        for n in [1, 5, 12] {
            assert_eq!(bkh_speed_with(n, 3, |_| || 1.0).unwrap(), 1.0);
        }
        let rng = RngStream::new(3, 0);
        let est = bkh_speed_estimate(1, 200_000, &rng).unwrap();
        // E min(√T₁, √T₂) = Γ(3/2)/√2
        assert!((est - 0.6266570686577501).abs() < 0.004, "{est}");
        assert!(bkh_speed_estimate(0, 10, &rng).is_err());
    }

    #[test]
    fn bessel_bound_examples() {
        let rng = RngStream::new(4, 0);
        let r = bessel_bound_check(1.0, 0.01, 100_000, &rng).unwrap();
        assert!(r.satisfied && r.holds_with_margin());
        let r = bessel_bound_check(10.0, 0.01, 100_000, &rng).unwrap();
        assert!(r.satisfied);
        let r = bessel_bound_check(1.0, 1e4, 10_000, &rng).unwrap();
        assert!(r.estimate >= 0.99);
        assert!(bessel_bound_check(0.0, 1.0, 10, &rng).is_err());
    }

    #[test]
    fn monotonicity_examples() {
        let rng = RngStream::new(5, 0);
        let r0 = monotonicity_criterion(1.0, 0.5 / (4.0 * PI * PI), 0, 100, &rng).unwrap();
        assert_eq!((r0.estimate, r0.stderr), (1.0, 0.0));
        let lam = 0.9 / (4.0 * PI * PI);
        let r = monotonicity_criterion(1.0, lam, 10, 20_000, &rng).unwrap();
        assert!((r.bound - 0.9f64.powi(5)).abs() < 1e-12);
        assert!(r.holds_with_margin());
        let lam = 0.5 / (4.0 * PI * PI);
        let a = monotonicity_criterion(1.0, lam, 5, 20_000, &rng).unwrap();
        let b = monotonicity_criterion(1.0, lam, 10, 20_000, &rng).unwrap();
        assert!(b.estimate / a.estimate <= 1.0);
    }

    #[test]
    fn arctan_examples() {
        let rng = RngStream::new(6, 0);
        let r = arctan_identity_check(1.0, 1.0, 200_000, &rng).unwrap();
        assert_eq!(r.bound, 0.5);
        assert!(r.satisfied);
        let r = arctan_identity_check(2.0, 1.0, 200_000, &rng.fork(1)).unwrap();
        assert!((r.bound - 0.7048327646991335).abs() < 1e-15);
        assert!(r.satisfied);
        let r = arctan_identity_check(1.0, 1e6, 10_000, &rng).unwrap();
        assert!(r.estimate <= 0.01);
        assert!(arctan_identity_check(1.0, 1.0, 100, &rng).is_err());
    }

    #[test]
    fn log_ratio_moments() {
        let rng = RngStream::new(7, 0);
        let r = mean_log_ratio(200_000, &rng).unwrap();
        assert!(r.mean.satisfied);
        assert_eq!(r.antithetic_mean, 0.0);
        let se2 = (r.fourth_moment / 200_000.0).sqrt();
        assert!((r.second_moment - PI * PI / 6.0).abs() < 4.0 * se2);
        // E(ln R)^8 ≈ 32682.7 sets the spread of the fourth-moment estimate
        let se4 = ((32682.72f64 - 19.4818f64.powi(2)) / 200_000.0).sqrt();
        assert!(
            (r.fourth_moment - 19.48181820680049).abs() < 4.0 * se4,
            "{}",
            r.fourth_moment
        );
    }

    #[test]
    fn recurrence_examples() {
        let rng = RngStream::new(8, 0);
        let s = recurrence_scan(f64::INFINITY, 50, 5, &rng).unwrap();
        assert!(s.counts.iter().all(|&c| c == 50));
        let a = recurrence_scan(0.2, 2000, 20, &rng).unwrap();
        let b = recurrence_scan(0.5, 2000, 20, &rng).unwrap();
        for (x, y) in a.counts.iter().zip(&b.counts) {
            assert!(x <= y);
        }
        assert!(b.median > 0.0);
        assert!(recurrence_scan(0.0, 10, 1, &rng).is_err());
    }

    #[test]
    fn zeta_zero_is_unit_exponential_on_both_sides() {
        let rng = RngStream::new(9, 0);
        let groups = [
            ZetaSource::Scaled {
                kernel: KernelKind::Dilog,
                xi_mag: 3.0,
            },
            ZetaSource::SelfSimilar,
        ];
        let r = compare_groups(&groups, 0, 5000, 0.001, &rng).unwrap();
        assert!(r[0].ks.pass);
        let s = zeta_sample(ZetaSource::SelfSimilar, 0, 20_000, &rng).unwrap();
        let k = ks_one_sample(&s, |x| 1.0 - (-x).exp(), 0.001).unwrap();
        assert!(k.pass);
    }
}
