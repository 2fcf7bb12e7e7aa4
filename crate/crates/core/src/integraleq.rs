//! Picard iteration for the scalar non-explosion equation
//!
//! ```text
//! m̃(λ) = e^{-λ} + ∫₀^λ e^{-(λ-s)} G(s) ds,
//! G(s) = ∫₀^π ∫₀^∞ m̃(r² s) m̃((1 - 2r cos θ + r²) s) H̃(θ, r) dr dθ,
//! ```
//!
//! and for its Fourier-mode counterpart `m(|ξ|, t) = m̃(|ξ|² t)`.
//!
//! Discretization:
//!
//! * the angle is replaced by `ℓ = ln(1 - 2r cos θ + r²)`, under which
//!   `H̃ dθ = dℓ / (π² r)` is uniform on `[2 ln|1-r|, 2 ln(1+r)]`; that range
//!   is cut into pieces of length at most `max_l_piece`, each with a
//!   Gauss–Legendre rule;
//! * the radius uses Gauss–Legendre panels `[0, ½]`, dyadic panels shrinking
//!   geometrically toward `r = 1` from both sides, then `[2^k, 2^{k+1}]` up
//!   to `r_max`; the exact tail mass beyond `r_max` multiplies
//!   `m̃(r_max² s)²`;
//! * `m̃` is linear between λ-grid nodes and constant past the last node;
//! * the `s` integral is exact for `G` linear on each grid cell.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::dilog_cdf;
use crate::math;
use crate::quad::GaussLegendre;

/// Largest tolerated deviation of the discrete `∫∫ H̃` from one.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Slack allowed when checking that iterates stay below one.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss–Legendre order of each radial panel.
    pub order_r: usize,
    /// Gauss–Legendre order of each `ℓ` piece.
    pub order_l: usize,
    /// Number of dyadic panels on each side of `r = 1`.
    pub geometric_levels: u32,
    pub r_max: f64,
    pub max_l_piece: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            order_r: 8,
            order_l: 8,
            geometric_levels: 40,
            r_max: 1000.0,
            max_l_piece: 4.0,
        }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        if self.order_r == 0 || self.order_l == 0 {
            return Err(Error::InvalidGrid("quadrature orders must be positive"));
        }
        if !(self.r_max >= 2.0) || !self.r_max.is_finite() {
            return Err(Error::InvalidGrid("r_max must be finite and at least 2"));
        }
        if !(self.max_l_piece > 0.0) {
            return Err(Error::InvalidGrid("max_l_piece must be positive"));
        }
        if self.geometric_levels == 0 || self.geometric_levels > 50 {
            return Err(Error::InvalidGrid("geometric_levels must be in 1..=50"));
        }
        Ok(())
    }

    /// Radial panels `[a, b]`, increasing, covering `(0, r_max)` except a
    /// gap of width `2^{-levels}` on each side of 1.
    fn radial_panels(&self) -> Vec<(f64, f64)> {
        let mut p = alloc::vec![(0.0, 0.5)];
        let levels = self.geometric_levels as i32;
        for k in 1..levels {
            p.push((1.0 - pow2(-k), 1.0 - pow2(-k - 1)));
        }
        for k in (1..=levels).rev() {
            p.push((1.0 + pow2(-k), 1.0 + pow2(1 - k)));
        }
        let mut a = 2.0;
        while a < self.r_max {
            let b = (2.0 * a).min(self.r_max);
            p.push((a, b));
            a = b;
        }
        p
    }
}

fn pow2(k: i32) -> f64 {
    libm::ldexp(1.0, k)
}

/// One radial node: `r²` and the angular nodes `(q, weight)` with the radial
/// weight folded in.
#[derive(Debug, Clone)]
struct RadialNode {
    r: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    weight: f64,
    r2: f64,
    inner: Vec<(f64, f64)>,
}

/// The discretized `(r, θ)` average against `H̃`.
#[derive(Debug, Clone)]
pub struct KernelQuadrature {
    spec: QuadratureSpec,
    nodes: Vec<RadialNode>,
    tail_mass: f64,
    normalization: f64,
}

impl KernelQuadrature {
    pub fn new(spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        let gr = GaussLegendre::new(spec.order_r)?;
        let gl = GaussLegendre::new(spec.order_l)?;
        let mut nodes = Vec::new();
        for (a, b) in spec.radial_panels() {
            for (r, wr) in gr.mapped(a, b) {
                // the width 2 ln|(1+r)/(1-r)| is formed directly; hi - lo would cancel
                let hi = 2.0 * math::ln_1p(r);
                let total = 2.0 * math::ln_1p(2.0 * r.min(1.0) / math::abs(1.0 - r));
                let lo = hi - total;
                let pieces = libm::ceil(total / spec.max_l_piece).max(1.0) as usize;
                let half = 0.5 * total / pieces as f64;
                let scale = wr / (core::f64::consts::PI * core::f64::consts::PI * r);
                let mut inner = Vec::with_capacity(pieces * gl.order());
                for p in 0..pieces {
                    let mid = lo + half * (2 * p + 1) as f64;
                    for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
                        inner.push((math::exp(mid + half * x), half * w * scale));
                    }
                }
                nodes.push(RadialNode {
                    r,
                    weight: wr,
                    r2: r * r,
                    inner,
                });
            }
        }
        let tail_mass = 1.0 - dilog_cdf(spec.r_max)?;
        let normalization = nodes
            .iter()
            .map(|n| n.inner.iter().map(|&(_, w)| w).sum::<f64>())
            .sum::<f64>()
            + tail_mass;
        let q = KernelQuadrature {
            spec,
            nodes,
            tail_mass,
            normalization,
        };
        let dev = normalization - 1.0;
        if math::abs(dev) > NORMALIZATION_TOL {
            return Err(Error::QuadratureNormalization { deviation: dev });
        }
        Ok(q)
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// Discrete `∫∫ H̃`, tail included.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Discrete `∫ 𝒟 dr` over the panels, tail excluded.
    pub fn radial_mass(&self) -> f64 {
        self.normalization - self.tail_mass
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Number of `(r, ℓ)` evaluation points.
    pub fn size(&self) -> usize {
        self.nodes.iter().map(|n| n.inner.len()).sum()
    }

    /// `∫∫ f(r²) g(q) H̃` with the tail mass on `f(r_max²) g(r_max²)` and an
    /// extra radial weight `rho(r)`.
    fn average<F, G, R>(&self, f: F, g: G, rho: R) -> f64
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
        R: Fn(f64) -> f64,
    {
        let mut acc = 0.0;
        for n in &self.nodes {
            let fr = f(n.r2) * rho(n.r);
            if fr == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for &(q, w) in &n.inner {
                inner += w * g(q);
            }
            acc += fr * inner;
        }
        let big = self.spec.r_max * self.spec.r_max;
        acc + self.tail_mass * f(big) * g(big) * rho(self.spec.r_max)
    }
}

/// Values of `m̃` on increasing nodes starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// Spacing when `nodes[i] == i * step` for every `i`.
    step: Option<f64>,
}

impl LambdaGrid {
    /// `n + 1` equispaced nodes on `[0, lambda_max]`, all values `fill`.
    pub fn uniform(lambda_max: f64, n: usize, fill: f64) -> Result<Self> {
        if !(lambda_max > 0.0) || !lambda_max.is_finite() || n == 0 {
            return Err(Error::InvalidGrid(
                "need lambda_max > 0 and at least one interval",
            ));
        }
        let h = lambda_max / n as f64;
        let nodes = (0..=n).map(|i| h * i as f64).collect();
        LambdaGrid::new(nodes, alloc::vec![fill; n + 1])
    }

    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(Error::InvalidGrid(
                "need at least two nodes and one value per node",
            ));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid("first node must be 0"));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) || !nodes[nodes.len() - 1].is_finite() {
            return Err(Error::InvalidGrid(
                "nodes must be finite and strictly increasing",
            ));
        }
        if values
            .iter()
            .any(|v| !(-BOUND_SLACK..=1.0 + BOUND_SLACK).contains(v))
        {
            return Err(Error::InvalidGrid("values must lie in [0, 1]"));
        }
        let h = nodes[1];
        let uniform = nodes.iter().enumerate().all(|(i, &x)| x == h * i as f64);
        Ok(LambdaGrid {
            nodes,
            values,
            step: uniform.then_some(h),
        })
    }

    pub fn lambda_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Piecewise-linear interpolant, constant beyond the last node.
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.nodes.len() - 1;
        if !(x < self.nodes[last]) {
            return self.values[last];
        }
        if x <= 0.0 {
            return self.values[0];
        }
        let j = match self.step {
            Some(h) => {
                let mut j = (math::floor(x / h) as usize).min(last - 1);
                while j > 0 && self.nodes[j] > x {
                    j -= 1;
                }
                while self.nodes[j + 1] <= x {
                    j += 1;
                }
                j
            }
            None => self.nodes.partition_point(|&n| n <= x) - 1,
        };
        let (a, b) = (self.nodes[j], self.nodes[j + 1]);
        let t = (x - a) / (b - a);
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }

    fn with_values(&self, values: Vec<f64>) -> LambdaGrid {
        LambdaGrid {
            nodes: self.nodes.clone(),
            values,
            step: self.step,
        }
    }
}

/// The discretized right-hand side of the `m̃` equation.
#[derive(Debug, Clone)]
pub struct MtildeOperator {
    quad: KernelQuadrature,
}

impl MtildeOperator {
    pub fn new(spec: QuadratureSpec) -> Result<Self> {
        Ok(MtildeOperator {
            quad: KernelQuadrature::new(spec)?,
        })
    }

    pub fn quadrature(&self) -> &KernelQuadrature {
        &self.quad
    }

    pub fn apply(&self, g: &LambdaGrid) -> LambdaGrid {
        self.apply_with(g, |_| 1.0)
    }

    /// The operator with the kernel average reweighted by `rho(r)`.
    pub fn apply_with<R: Fn(f64) -> f64>(&self, g: &LambdaGrid, rho: R) -> LambdaGrid {
        let m = |x: f64| g.eval(x);
        let big_g: Vec<f64> = g
            .nodes
            .iter()
            .map(|&s| self.quad.average(|r2| m(r2 * s), |q| m(q * s), &rho))
            .collect();
        let mut out = Vec::with_capacity(g.nodes.len());
        let mut integral = 0.0;
        out.push(1.0);
        for j in 1..g.nodes.len() {
            let h = g.nodes[j] - g.nodes[j - 1];
            let e0 = -math::exp_m1(-h);
            let e1 = e0 - h * math::exp(-h);
            integral =
                integral * math::exp(-h) + big_g[j - 1] * (e1 / h) + big_g[j] * (e0 - e1 / h);
            out.push(math::exp(-g.nodes[j]) + integral);
        }
        g.with_values(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PicardStart {
    Zero,
    One,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardResult {
    pub grid: LambdaGrid,
    /// Operator applications that produced a new iterate.
    pub iterations: usize,
    /// `max |T(values) - values|` over the grid.
    pub sup_residual: f64,
    pub converged: bool,
    /// Every iterate was pointwise at least its predecessor and within
    /// `[0, 1 + BOUND_SLACK]`.
    pub monotone_flag: bool,
    /// Values beyond the last node were taken equal to the last value.
    pub flat_extension: bool,
}

pub fn picard_mtilde(
    start: PicardStart,
    grid_nodes: Vec<f64>,
    op: &MtildeOperator,
    max_iters: usize,
    tol: f64,
) -> Result<PicardResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: "must be positive",
        });
    }
    let fill = match start {
        PicardStart::Zero => 0.0,
        PicardStart::One => 1.0,
    };
    let n = grid_nodes.len();
    let mut cur = LambdaGrid::new(grid_nodes, alloc::vec![fill; n])?;
    let mut monotone = true;
    let mut iterations = 0;
    loop {
        let next = op.apply(&cur);
        let mut diff: f64 = 0.0;
        for (a, b) in cur.values.iter().zip(&next.values) {
            diff = diff.max(math::abs(b - a));
            if b < a || *b > 1.0 + BOUND_SLACK || *b < 0.0 {
                monotone = false;
            }
        }
        if diff < tol || iterations >= max_iters {
            return Ok(PicardResult {
                grid: cur,
                iterations,
                sup_residual: diff,
                converged: diff < tol,
                monotone_flag: monotone,
                flat_extension: true,
            });
        }
        cur = next;
        iterations += 1;
    }
}

/// Solve for `m(|ξ|, t)` on the time nodes `t_nodes` through `λ = |ξ|² t`.
///
/// The returned grid is indexed by time.
pub fn picard_m_ns(
    xi_mag: f64,
    t_nodes: Vec<f64>,
    op: &MtildeOperator,
    max_iters: usize,
    tol: f64,
) -> Result<PicardResult> {
    if !(xi_mag > 0.0) || !xi_mag.is_finite() {
        return Err(Error::Domain {
            what: "picard_m_ns",
            value: xi_mag,
        });
    }
    let scale = xi_mag * xi_mag;
    let lambda_nodes: Vec<f64> = t_nodes.iter().map(|t| t * scale).collect();
    let mut res = picard_mtilde(PicardStart::Zero, lambda_nodes, op, max_iters, tol)?;
    res.grid = LambdaGrid::new(t_nodes, res.grid.values)?;
    Ok(res)
}

/// `max |m(|ξ|, λ/|ξ|²) - m̃(λ)|` over the nodes of `mtilde`.
pub fn equivalence_gap(m_ns: &PicardResult, xi_mag: f64, mtilde: &PicardResult) -> f64 {
    let scale = xi_mag * xi_mag;
    mtilde
        .grid
        .nodes
        .iter()
        .zip(&mtilde.grid.values)
        .map(|(&l, &v)| math::abs(m_ns.grid.eval(l / scale) - v))
        .fold(0.0, f64::max)
}
