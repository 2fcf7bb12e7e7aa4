//! Monte Carlo evaluation of mild solutions through the recursive `⊙` product.
//!
//! A replicate simulates one cascade tree and folds payoffs from the leaves
//! up: a leaf that outlives the horizon pays the normalized initial datum, a
//! thinned death pays zero, and a branching node combines its children with
//! `⊙` at its own wavenumber. Replicates whose tree hit the budget are
//! excluded from the mean and counted.
//!
//! Replicate `i` of an estimate with base stream `rng` runs on `rng.fork(i)`.
//! Replicates are reduced in fixed chunks of [`REDUCTION_CHUNK`] that are
//! merged in index order, so any driver that respects the chunking gets
//! bit-identical reports regardless of how chunks are scheduled.

use core::fmt;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::cascade::{
    simulate_ns_tree, simulate_selfsimilar_tree, SimBudget, TerminalReason, ThinningMode,
};
use crate::error::{Error, Result};
use crate::kernels::KernelKind;
use crate::math;
use crate::rng::RngStream;
use crate::vector::{Frame, Wavenumber};

/// Replicates per reduction chunk.
pub const REDUCTION_CHUNK: u64 = 4096;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Three complex components: a Fourier coefficient or a node payoff.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoeffVec(pub [Complex64; 3]);

impl CoeffVec {
    pub const ZERO: CoeffVec = CoeffVec([ZERO; 3]);

    pub fn from_real(v: Wavenumber) -> Self {
        CoeffVec([
            Complex64::new(v.x, 0.0),
            Complex64::new(v.y, 0.0),
            Complex64::new(v.z, 0.0),
        ])
    }

    /// Bilinear product with a real vector (no conjugation).
    pub fn dot_real(&self, e: Wavenumber) -> Complex64 {
        self.0[0] * e.x + self.0[1] * e.y + self.0[2] * e.z
    }

    /// Hermitian norm `sqrt(Σ |v_k|²)`.
    pub fn norm(&self) -> f64 {
        math::sqrt(self.0.iter().map(|c| c.norm_sqr()).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(self, s: Complex64) -> Self {
        CoeffVec([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn conj(self) -> Self {
        CoeffVec([self.0[0].conj(), self.0[1].conj(), self.0[2].conj()])
    }
}

impl Add for CoeffVec {
    type Output = CoeffVec;
    fn add(self, o: CoeffVec) -> CoeffVec {
        CoeffVec([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for CoeffVec {
    type Output = CoeffVec;
    fn sub(self, o: CoeffVec) -> CoeffVec {
        CoeffVec([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for CoeffVec {
    type Output = CoeffVec;
    fn mul(self, s: f64) -> CoeffVec {
        CoeffVec([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

/// `v ⊙_ξ w = -i (e_ξ·w) π_{ξ⊥} v` with `π_{ξ⊥} v = v - (e_ξ·v) e_ξ`.
pub fn odot(v: CoeffVec, w: CoeffVec, xi: Wavenumber) -> Result<CoeffVec> {
    Ok(odot_unit(v, w, xi.unit()?))
}

fn odot_unit(v: CoeffVec, w: CoeffVec, e: Wavenumber) -> CoeffVec {
    let ew = w.dot_real(e);
    let ev = v.dot_real(e);
    let proj = v - CoeffVec::from_real(e).scale(ev);
    proj.scale(-I * ew)
}

/// Built-in shapes `p(e)` of initial data `û₀(ξ) = a h(ξ) p(e_ξ)`.
#[derive(Clone, Copy)]
pub enum Profile {
    Zero,
    /// `p(e) = f(e)`, the first transverse vector of the stable frame at `e`.
    Aligned,
    /// `p(e) = (f(e) + i g(e)) / √2`.
    Swirl,
    /// `û₀(ξ) = a · f(ξ)`, with no kernel factor.
    Custom(&'static str, fn(Wavenumber) -> CoeffVec),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::Zero => "zero",
            Profile::Aligned => "aligned",
            Profile::Swirl => "swirl",
            Profile::Custom(name, _) => name,
        }
    }
}

/// Checks applied to every evaluation of the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Validation {
    /// Require `ξ·û₀(ξ) = 0`.
    pub divergence_free: bool,
    /// Require `|û₀(ξ)| ≤ a h(ξ)` for the active kernel.
    pub bounded: bool,
}

impl Default for Validation {
    fn default() -> Self {
        Validation {
            divergence_free: true,
            bounded: true,
        }
    }
}

const VALIDATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct InitialData {
    pub profile: Profile,
    pub amplitude: f64,
    pub validation: Validation,
}

impl InitialData {
    pub fn new(profile: Profile, amplitude: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidParameter {
                name: "amplitude",
                reason: "must be finite and nonnegative",
            });
        }
        Ok(InitialData {
            profile,
            amplitude,
            validation: Validation::default(),
        })
    }

    pub fn zero() -> Self {
        InitialData {
            profile: Profile::Zero,
            amplitude: 0.0,
            validation: Validation::default(),
        }
    }

    pub fn aligned(amplitude: f64) -> Result<Self> {
        InitialData::new(Profile::Aligned, amplitude)
    }

    /// A built-in profile by name: `zero`, `aligned` or `swirl`.
    pub fn named(name: &str, amplitude: f64) -> Result<Self> {
        let profile = match name {
            "zero" => Profile::Zero,
            "aligned" => Profile::Aligned,
            "swirl" => Profile::Swirl,
            _ => {
                return Err(Error::InvalidParameter {
                    name: "u0",
                    reason: "expected `zero`, `aligned` or `swirl`",
                })
            }
        };
        InitialData::new(profile, amplitude)
    }

    pub fn with_validation(mut self, validation: Validation) -> Self {
        self.validation = validation;
        self
    }

    /// `û₀(ξ)` with the kernel factor of `kernel`, without validation.
    pub fn eval_raw(&self, xi: Wavenumber, kernel: KernelKind) -> Result<CoeffVec> {
        let e = xi.unit()?;
        let a = self.amplitude;
        Ok(match self.profile {
            Profile::Zero => CoeffVec::ZERO,
            Profile::Aligned => CoeffVec::from_real(Frame::from_unit(e).f) * (a * kernel.h(xi)),
            Profile::Swirl => {
                let fr = Frame::from_unit(e);
                let c = a * kernel.h(xi) * core::f64::consts::FRAC_1_SQRT_2;
                (CoeffVec::from_real(fr.f) + CoeffVec::from_real(fr.g).scale(I)) * c
            }
            Profile::Custom(_, f) => f(xi) * a,
        })
    }

    /// `û₀(ξ)`, checked against the active validation options.
    pub fn eval(&self, xi: Wavenumber, kernel: KernelKind) -> Result<CoeffVec> {
        let v = self.eval_raw(xi, kernel)?;
        if !v.is_finite() {
            return Err(Error::InvalidParameter {
                name: "u0",
                reason: "non-finite value",
            });
        }
        if self.validation.divergence_free && divergence_residual(&v, xi) > VALIDATION_TOL {
            return Err(Error::InvalidParameter {
                name: "u0",
                reason: "not divergence-free",
            });
        }
        if self.validation.bounded
            && v.norm() > self.amplitude * kernel.h(xi) * (1.0 + VALIDATION_TOL)
        {
            return Err(Error::InvalidParameter {
                name: "u0",
                reason: "exceeds amplitude times kernel",
            });
        }
        Ok(v)
    }

    /// `|û₀(-ξ) - conj û₀(ξ)|` relative to `|û₀(ξ)|`.
    pub fn reality_residual(&self, xi: Wavenumber, kernel: KernelKind) -> Result<f64> {
        let a = self.eval_raw(xi, kernel)?;
        let b = self.eval_raw(-xi, kernel)?;
        let n = a.norm();
        Ok(if n == 0.0 {
            (b - a.conj()).norm()
        } else {
            (b - a.conj()).norm() / n
        })
    }
}

/// `|e_ξ·v| / |v|`, zero for `v = 0`.
pub fn divergence_residual(v: &CoeffVec, xi: Wavenumber) -> f64 {
    let n = v.norm();
    if n == 0.0 {
        return 0.0;
    }
    match xi.unit() {
        Ok(e) => math::sqrt(v.dot_real(e).norm_sqr()) / n,
        Err(_) => f64::INFINITY,
    }
}

/// Result of one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplicateOutcome {
    Value(CoeffVec),
    /// The tree hit the budget.
    Truncated,
}

/// Streaming mean and variance of replicate payoffs (Chan et al. merge).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Accumulator {
    pub count: u64,
    pub truncated: u64,
    mean: CoeffVec,
    /// Sum of squared deviations of real and imaginary parts per component.
    m2: [f64; 3],
    pub max_divergence: f64,
}

impl Accumulator {
    pub fn push(&mut self, outcome: ReplicateOutcome, xi_dir: Wavenumber) {
        let x = match outcome {
            ReplicateOutcome::Truncated => {
                self.truncated += 1;
                return;
            }
            ReplicateOutcome::Value(x) => x,
        };
        self.max_divergence = self.max_divergence.max(divergence_residual(&x, xi_dir));
        self.count += 1;
        let n = self.count as f64;
        for k in 0..3 {
            let d = x.0[k] - self.mean.0[k];
            self.mean.0[k] += d / n;
            let d2 = x.0[k] - self.mean.0[k];
            self.m2[k] += d.re * d2.re + d.im * d2.im;
        }
    }

    pub fn merge(&mut self, o: &Accumulator) {
        self.truncated += o.truncated;
        self.max_divergence = self.max_divergence.max(o.max_divergence);
        if o.count == 0 {
            return;
        }
        if self.count == 0 {
            self.count = o.count;
            self.mean = o.mean;
            self.m2 = o.m2;
            return;
        }
        let (na, nb) = (self.count as f64, o.count as f64);
        let n = na + nb;
        for k in 0..3 {
            let d = o.mean.0[k] - self.mean.0[k];
            self.mean.0[k] += d * (nb / n);
            self.m2[k] += o.m2[k] + d.norm_sqr() * na * nb / n;
        }
        self.count += o.count;
    }

    /// Report with payoffs scaled by `scale` (the kernel value `h(ξ)`).
    pub fn report(&self, scale: f64) -> EstimateReport {
        let total = self.count + self.truncated;
        let mut stderr = [0.0; 3];
        if self.count > 1 {
            let n = self.count as f64;
            for (se, m2) in stderr.iter_mut().zip(self.m2) {
                *se = scale * math::sqrt(m2 / (n - 1.0) / n);
            }
        }
        EstimateReport {
            mean: self.mean * scale,
            stderr,
            replicates: self.count,
            truncated: self.truncated,
            truncated_fraction: if total == 0 {
                0.0
            } else {
                self.truncated as f64 / total as f64
            },
            divergence_residual: self.max_divergence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub mean: CoeffVec,
    /// Standard error of each complex component, `sqrt((s²_re + s²_im) / n)`.
    pub stderr: [f64; 3],
    /// Replicates entering the mean.
    pub replicates: u64,
    pub truncated: u64,
    pub truncated_fraction: f64,
    /// Largest `|e_ξ·X| / |X|` over replicates.
    pub divergence_residual: f64,
}

impl EstimateReport {
    /// Whether the `k`-sigma intervals of every real and imaginary component
    /// overlap.
    pub fn overlaps(&self, other: &EstimateReport, k: f64) -> bool {
        (0..3).all(|c| {
            let tol = k * (self.stderr[c] + other.stderr[c]);
            let d = self.mean.0[c] - other.mean.0[c];
            math::abs(d.re) <= tol && math::abs(d.im) <= tol
        })
    }
}

/// Accumulate replicates `range` in chunks of [`REDUCTION_CHUNK`].
pub fn accumulate_chunk<F>(
    chunk: u64,
    reps: u64,
    dir: Wavenumber,
    replicate: &F,
) -> Result<Accumulator>
where
    F: Fn(u64) -> Result<ReplicateOutcome>,
{
    let start = chunk * REDUCTION_CHUNK;
    let end = (start + REDUCTION_CHUNK).min(reps);
    let mut acc = Accumulator::default();
    for i in start..end {
        acc.push(replicate(i)?, dir);
    }
    Ok(acc)
}

pub fn chunk_count(reps: u64) -> u64 {
    reps.div_ceil(REDUCTION_CHUNK)
}

fn accumulate_all<F>(reps: u64, dir: Wavenumber, replicate: F) -> Result<Accumulator>
where
    F: Fn(u64) -> Result<ReplicateOutcome>,
{
    let mut total = Accumulator::default();
    for c in 0..chunk_count(reps) {
        total.merge(&accumulate_chunk(c, reps, dir, &replicate)?);
    }
    Ok(total)
}

/// Parameters of a Fourier-mode estimate.
#[derive(Debug, Clone, Copy)]
pub struct NsProblem {
    pub xi: Wavenumber,
    pub t: f64,
    pub u0: InitialData,
    pub kernel: KernelKind,
    pub mode: ThinningMode,
    pub nu: f64,
    pub budget: SimBudget,
}

impl NsProblem {
    /// The normalized payoff `X(ξ, t)` of one tree.
    pub fn replicate(&self, stream: &RngStream) -> Result<ReplicateOutcome> {
        let tree = simulate_ns_tree(
            self.xi,
            self.t,
            self.kernel,
            self.mode,
            self.nu,
            self.budget,
            stream,
        )?;
        if tree.is_truncated() {
            return Ok(ReplicateOutcome::Truncated);
        }
        let mu = self.kernel.branch_multiplier(self.nu)
            * if self.mode == ThinningMode::Thinned {
                2.0
            } else {
                1.0
            };
        let mut pay = alloc::vec![CoeffVec::ZERO; tree.len()];
        for (i, n) in tree.nodes.iter().enumerate().rev() {
            pay[i] = match n.terminal {
                TerminalReason::SurvivedHorizon => {
                    self.u0.eval(n.wavenumber, self.kernel)? * (1.0 / self.kernel.h(n.wavenumber))
                }
                TerminalReason::ThinnedDeath => CoeffVec::ZERO,
                TerminalReason::Branched => {
                    let [a, b] = n.children.expect("branched node has children");
                    odot(pay[a as usize], pay[b as usize], n.wavenumber)? * mu
                }
                TerminalReason::BudgetTruncated => unreachable!("truncated trees are excluded"),
            };
        }
        Ok(ReplicateOutcome::Value(pay[0]))
    }

    pub fn validate(&self, reps: u64) -> Result<()> {
        if reps == 0 {
            return Err(Error::InvalidParameter {
                name: "reps",
                reason: "must be at least 1",
            });
        }
        if !self.xi.is_finite() || self.xi.norm_sq() == 0.0 {
            return Err(Error::DegenerateWavenumber);
        }
        if !(self.t > 0.0) || !(self.nu > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t, nu",
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

/// Estimate `û(ξ, t)` from `reps` replicates.
#[allow(clippy::too_many_arguments)]
pub fn estimate_ns(
    xi: Wavenumber,
    t: f64,
    u0: InitialData,
    kernel: KernelKind,
    mode: ThinningMode,
    nu: f64,
    reps: u64,
    budget: SimBudget,
    rng: &RngStream,
) -> Result<EstimateReport> {
    let p = NsProblem {
        xi,
        t,
        u0,
        kernel,
        mode,
        nu,
        budget,
    };
    p.validate(reps)?;
    let acc = accumulate_all(reps, xi, |i| p.replicate(&rng.fork(i)))?;
    Ok(acc.report(kernel.h(xi)))
}

/// Parameters of a self-similar estimate.
#[derive(Debug, Clone, Copy)]
pub struct SelfSimilarProblem {
    pub e0: Wavenumber,
    pub lambda: f64,
    pub u0: InitialData,
    pub budget: SimBudget,
}

impl SelfSimilarProblem {
    /// The payoff `X̃(e₀, λ)` of one self-similar tree.
    pub fn replicate(&self, stream: &RngStream) -> Result<ReplicateOutcome> {
        let tree = simulate_selfsimilar_tree(self.e0, self.lambda, self.budget, stream)?;
        if tree.is_truncated() {
            return Ok(ReplicateOutcome::Truncated);
        }
        let mu = KernelKind::Dilog.branch_multiplier(1.0);
        let mut pay = alloc::vec![CoeffVec::ZERO; tree.len()];
        for (i, n) in tree.nodes.iter().enumerate().rev() {
            pay[i] = match n.terminal {
                TerminalReason::SurvivedHorizon => self.u0.eval(n.direction, KernelKind::Dilog)?,
                TerminalReason::Branched => {
                    let [a, b] = n.children.expect("branched node has children");
                    odot_unit(pay[a as usize], pay[b as usize], n.direction) * mu
                }
                TerminalReason::ThinnedDeath | TerminalReason::BudgetTruncated => {
                    unreachable!("self-similar trees neither thin nor keep truncated nodes")
                }
            };
        }
        Ok(ReplicateOutcome::Value(pay[0]))
    }
}

/// Estimate the self-similar solution `û(e₀, λ)` from `reps` replicates.
///
/// `u0` is read on the unit sphere with the dilog kernel factor, which is 1
/// there.
pub fn estimate_selfsimilar(
    e0: Wavenumber,
    lambda: f64,
    u0: InitialData,
    reps: u64,
    budget: SimBudget,
    rng: &RngStream,
) -> Result<EstimateReport> {
    if reps == 0 {
        return Err(Error::InvalidParameter {
            name: "reps",
            reason: "must be at least 1",
        });
    }
    let p = SelfSimilarProblem {
        e0,
        lambda,
        u0,
        budget,
    };
    let acc = accumulate_all(reps, e0, |i| p.replicate(&rng.fork(i)))?;
    Ok(acc.report(1.0))
}

/// Leray profile value `Û(√λ e) = û(e, λ) / λ`.
pub fn leray_profile(u_ss: CoeffVec, lambda: f64) -> Result<CoeffVec> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain {
            what: "leray_profile",
            value: lambda,
        });
    }
    Ok(u_ss * (1.0 / lambda))
}
