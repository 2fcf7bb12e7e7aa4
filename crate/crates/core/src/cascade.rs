//! Branching trees of the Fourier-mode cascade and the self-similar cascade.
//!
//! All randomness is node-addressed (see [`crate::rng`]): the clock, coin and
//! offspring of the node with genealogy `s` are fixed functions of
//! `(seed, stream, s)`. A tree is therefore the same object whether it is
//! materialized, walked partially, pruned by branch-and-bound or cut by a
//! budget, which is what makes the pruned explosion functionals bitwise equal
//! to exhaustive enumeration.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::kernels::{sample_dilog_offspring, sample_dilog_ratio_pair, KernelKind, OffspringPair};
use crate::rng::{NodeSlot, RngStream, MAX_NODE_DEPTH};
use crate::vector::{Frame, Wavenumber};

/// Depth limit for the explosion functionals unless overridden.
pub const DEFAULT_MAX_ZETA_DEPTH: u32 = 25;

/// Position of a node in the binary genealogy, as a heap index.
///
/// The root `∅` is `1`; the children of `k` are `2k` (offspring 1) and
/// `2k + 1` (offspring 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Genealogy(u64);

impl Genealogy {
    pub const ROOT: Genealogy = Genealogy(1);

    pub fn from_heap_index(k: u64) -> Option<Genealogy> {
        if k == 0 || 63 - k.leading_zeros() > MAX_NODE_DEPTH {
            None
        } else {
            Some(Genealogy(k))
        }
    }

    pub fn heap_index(self) -> u64 {
        self.0
    }

    /// Length of the sequence `s`.
    pub fn depth(self) -> u32 {
        63 - self.0.leading_zeros()
    }

    /// `s j` for `j ∈ {1, 2}`.
    pub fn child(self, j: u8) -> Genealogy {
        debug_assert!(j == 1 || j == 2);
        Genealogy(2 * self.0 + u64::from(j - 1))
    }

    pub fn parent(self) -> Option<Genealogy> {
        if self.0 == 1 {
            None
        } else {
            Some(Genealogy(self.0 / 2))
        }
    }

    /// The sequence `s` as labels in `{1, 2}`, root first.
    pub fn labels(self) -> impl Iterator<Item = u8> {
        let d = self.depth();
        let k = self.0;
        (0..d).rev().map(move |i| 1 + ((k >> i) & 1) as u8)
    }
}

impl fmt::Display for Genealogy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 1 {
            return f.write_str("∅");
        }
        for l in self.labels() {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimBudget {
    pub max_nodes: u64,
    pub max_depth: u32,
}

impl SimBudget {
    pub fn new(max_nodes: u64, max_depth: u32) -> Result<Self> {
        if max_nodes == 0 {
            return Err(Error::InvalidParameter {
                name: "max_nodes",
                reason: "must be positive",
            });
        }
        if max_depth == 0 || max_depth > MAX_NODE_DEPTH {
            return Err(Error::InvalidParameter {
                name: "max_depth",
                reason: "must be in 1..=60",
            });
        }
        Ok(SimBudget {
            max_nodes,
            max_depth,
        })
    }
}

impl Default for SimBudget {
    fn default() -> Self {
        SimBudget {
            max_nodes: 1 << 22,
            max_depth: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminalReason {
    /// The clock outlasted the remaining time or horizon.
    SurvivedHorizon,
    /// Thinned cascade: the coin chose death.
    ThinnedDeath,
    /// The node would branch but the budget forbids it.
    BudgetTruncated,
    Branched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThinningMode {
    /// Every expiring clock is a death or a split with probability 1/2 each.
    Thinned,
    /// Every expiring clock is a split.
    Nonthinned,
}

impl core::str::FromStr for ThinningMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thinned" => Ok(ThinningMode::Thinned),
            "nonthinned" => Ok(ThinningMode::Nonthinned),
            _ => Err(Error::InvalidParameter {
                name: "mode",
                reason: "expected `thinned` or `nonthinned`",
            }),
        }
    }
}

/// Source of a cascade's per-node randomness.
pub trait CascadeLaw {
    /// Unit-mean exponential clock `T_s`.
    fn clock(&self, node: Genealogy) -> f64;
    /// Thinning coin: `true` means split.
    fn splits(&self, node: Genealogy) -> bool;
    fn offspring(&self, node: Genealogy, parent: Wavenumber) -> Result<OffspringPair>;
}

/// The cascade law of a majorizing kernel on a node-addressed stream.
#[derive(Debug, Clone)]
pub struct KernelLaw {
    pub kernel: KernelKind,
    stream: RngStream,
}

impl KernelLaw {
    pub fn new(kernel: KernelKind, stream: RngStream) -> Self {
        KernelLaw { kernel, stream }
    }
}

impl CascadeLaw for KernelLaw {
    fn clock(&self, node: Genealogy) -> f64 {
        self.stream
            .at_node(node.heap_index(), NodeSlot::Clock)
            .exp1()
    }
    fn splits(&self, node: Genealogy) -> bool {
        self.stream
            .at_node(node.heap_index(), NodeSlot::Coin)
            .coin()
    }
    fn offspring(&self, node: Genealogy, parent: Wavenumber) -> Result<OffspringPair> {
        let mut rng = self.stream.at_node(node.heap_index(), NodeSlot::Offspring);
        self.kernel.sample_offspring(parent, &mut rng)
    }
}

/// Fixed clocks and symmetric offspring `|W₁| = |W₂| = |ξ|` at 60° either
/// side of the parent. Intended for injection in tests.
#[derive(Debug, Clone, Copy)]
pub struct DeterministicLaw {
    pub clock: f64,
    pub split: bool,
}

impl CascadeLaw for DeterministicLaw {
    fn clock(&self, _: Genealogy) -> f64 {
        self.clock
    }
    fn splits(&self, _: Genealogy) -> bool {
        self.split
    }
    fn offspring(&self, _: Genealogy, parent: Wavenumber) -> Result<OffspringPair> {
        let frame = Frame::from_unit(parent.unit()?);
        let w1 = frame.direction(0.5, 0.0) * parent.norm();
        Ok(OffspringPair {
            w1,
            w2: parent - w1,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeNode {
    pub genealogy: Genealogy,
    pub wavenumber: Wavenumber,
    /// The unit-mean exponential `T_s`; the holding time is `T_s / (ν|W_s|²)`.
    pub clock: f64,
    /// Time at which the node was born.
    pub birth: f64,
    /// Arena indices of the two offspring.
    pub children: Option<[u32; 2]>,
    pub terminal: TerminalReason,
}

/// A cascade tree stored in an arena; the root is at index 0 and every child
/// index exceeds its parent's.
#[derive(Debug, Clone, Default)]
pub struct CascadeTree<N> {
    pub nodes: Vec<N>,
    pub truncated: u64,
}

impl<N> CascadeTree<N> {
    pub fn root(&self) -> &N {
        &self.nodes[0]
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn is_truncated(&self) -> bool {
        self.truncated > 0
    }
}

impl CascadeTree<CascadeNode> {
    /// Particles alive at the horizon.
    pub fn alive_count(&self) -> u64 {
        self.nodes
            .iter()
            .filter(|n| n.terminal == TerminalReason::SurvivedHorizon)
            .count() as u64
    }
}

/// Simulate the Fourier-mode cascade rooted at `root` up to time `t`.
pub fn simulate_ns_tree(
    root: Wavenumber,
    t: f64,
    kernel: KernelKind,
    mode: ThinningMode,
    nu: f64,
    budget: SimBudget,
    rng: &RngStream,
) -> Result<CascadeTree<CascadeNode>> {
    simulate_ns_tree_with(
        &KernelLaw::new(kernel, rng.clone()),
        root,
        t,
        mode,
        nu,
        budget,
    )
}

pub fn simulate_ns_tree_with<L: CascadeLaw + ?Sized>(
    law: &L,
    root: Wavenumber,
    t: f64,
    mode: ThinningMode,
    nu: f64,
    budget: SimBudget,
) -> Result<CascadeTree<CascadeNode>> {
    if !root.is_finite() || root.norm_sq() == 0.0 {
        return Err(Error::DegenerateWavenumber);
    }
    check_positive("t", t)?;
    check_positive("nu", nu)?;
    let mut tree = CascadeTree {
        nodes: Vec::new(),
        truncated: 0,
    };
    tree.nodes.push(CascadeNode {
        genealogy: Genealogy::ROOT,
        wavenumber: root,
        clock: law.clock(Genealogy::ROOT),
        birth: 0.0,
        children: None,
        terminal: TerminalReason::SurvivedHorizon,
    });
    let mut stack: Vec<u32> = alloc::vec![0];
    while let Some(idx) = stack.pop() {
        let node = tree.nodes[idx as usize];
        let hold = node.clock / (nu * node.wavenumber.norm_sq());
        let expiry = node.birth + hold;
        let terminal = if !(expiry < t) {
            TerminalReason::SurvivedHorizon
        } else if mode == ThinningMode::Thinned && !law.splits(node.genealogy) {
            TerminalReason::ThinnedDeath
        } else if node.genealogy.depth() >= budget.max_depth
            || tree.nodes.len() as u64 + 2 > budget.max_nodes
        {
            tree.truncated += 1;
            TerminalReason::BudgetTruncated
        } else {
            TerminalReason::Branched
        };
        tree.nodes[idx as usize].terminal = terminal;
        if terminal != TerminalReason::Branched {
            continue;
        }
        let pair = law.offspring(node.genealogy, node.wavenumber)?;
        let base = tree.nodes.len() as u32;
        for (j, w) in [(1u8, pair.w1), (2u8, pair.w2)] {
            let g = node.genealogy.child(j);
            tree.nodes.push(CascadeNode {
                genealogy: g,
                wavenumber: w,
                clock: law.clock(g),
                birth: expiry,
                children: None,
                terminal: TerminalReason::SurvivedHorizon,
            });
        }
        tree.nodes[idx as usize].children = Some([base, base + 1]);
        stack.push(base + 1);
        stack.push(base);
    }
    Ok(tree)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchCount {
    Finite(u64),
    /// The budget was hit before the tree closed.
    Truncated,
}

/// `Z(ξ, t)`, the number of particles alive at time `t`.
pub fn branch_count(
    root: Wavenumber,
    t: f64,
    kernel: KernelKind,
    mode: ThinningMode,
    nu: f64,
    budget: SimBudget,
    rng: &RngStream,
) -> Result<BranchCount> {
    let tree = simulate_ns_tree(root, t, kernel, mode, nu, budget, rng)?;
    Ok(if tree.is_truncated() {
        BranchCount::Truncated
    } else {
        BranchCount::Finite(tree.alive_count())
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilarNode {
    pub genealogy: Genealogy,
    /// The unit vector `e_s`.
    pub direction: Wavenumber,
    /// `λ_s`.
    pub horizon: f64,
    pub clock: f64,
    /// `(|W̃_{s1}|, |W̃_{s2}|)` when the node branched.
    pub ratio_pair: Option<(f64, f64)>,
    pub children: Option<[u32; 2]>,
    pub terminal: TerminalReason,
}

/// Simulate the self-similar cascade with initial direction `e0` and horizon
/// `lambda0`.
pub fn simulate_selfsimilar_tree(
    e0: Wavenumber,
    lambda0: f64,
    budget: SimBudget,
    rng: &RngStream,
) -> Result<CascadeTree<SelfSimilarNode>> {
    if !e0.is_finite() || (e0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter {
            name: "e0",
            reason: "must be a unit vector",
        });
    }
    check_positive("lambda0", lambda0)?;
    let clock = |g: Genealogy| rng.at_node(g.heap_index(), NodeSlot::Clock).exp1();
    let mut tree = CascadeTree {
        nodes: Vec::new(),
        truncated: 0,
    };
    tree.nodes.push(SelfSimilarNode {
        genealogy: Genealogy::ROOT,
        direction: e0,
        horizon: lambda0,
        clock: clock(Genealogy::ROOT),
        ratio_pair: None,
        children: None,
        terminal: TerminalReason::SurvivedHorizon,
    });
    let mut stack: Vec<u32> = alloc::vec![0];
    while let Some(idx) = stack.pop() {
        let node = tree.nodes[idx as usize];
        let terminal = if !(node.clock < node.horizon) {
            TerminalReason::SurvivedHorizon
        } else if node.genealogy.depth() >= budget.max_depth
            || tree.nodes.len() as u64 + 2 > budget.max_nodes
        {
            tree.truncated += 1;
            TerminalReason::BudgetTruncated
        } else {
            TerminalReason::Branched
        };
        tree.nodes[idx as usize].terminal = terminal;
        if terminal != TerminalReason::Branched {
            continue;
        }
        let mut orng = rng.at_node(node.genealogy.heap_index(), NodeSlot::Offspring);
        let pair = sample_dilog_offspring(node.direction, &mut orng)?;
        let (r1, r2) = (pair.w1.norm(), pair.w2.norm());
        let rest = node.horizon - node.clock;
        let base = tree.nodes.len() as u32;
        for (j, w, r) in [(1u8, pair.w1, r1), (2u8, pair.w2, r2)] {
            let g = node.genealogy.child(j);
            tree.nodes.push(SelfSimilarNode {
                genealogy: g,
                direction: w * (1.0 / r),
                horizon: r * r * rest,
                clock: clock(g),
                ratio_pair: None,
                children: None,
                terminal: TerminalReason::SurvivedHorizon,
            });
        }
        let n = &mut tree.nodes[idx as usize];
        n.ratio_pair = Some((r1, r2));
        n.children = Some([base, base + 1]);
        stack.push(base + 1);
        stack.push(base);
    }
    Ok(tree)
}

// ---------------------------------------------------------------------------
// Explosion functionals

/// Minimum over depth-`n` paths of the accumulated terms, by depth-first
/// branch-and-bound. `expand(s, state)` yields the terms and states of the
/// two children of `s`. A subtree is skipped once its partial sum reaches the
/// incumbent; terms are nonnegative, so this never changes the result.
fn min_path_sum<S: Copy, F>(
    n: u32,
    root_term: f64,
    root: S,
    prune: bool,
    expand: &mut F,
) -> Result<f64>
where
    F: FnMut(Genealogy, S) -> Result<[(f64, S); 2]>,
{
    let mut best = f64::INFINITY;
    let mut stack: Vec<(Genealogy, f64, S)> = alloc::vec![(Genealogy::ROOT, root_term, root)];
    while let Some((g, partial, state)) = stack.pop() {
        if prune && partial >= best {
            continue;
        }
        if g.depth() == n {
            if partial < best {
                best = partial;
            }
            continue;
        }
        let [(t1, s1), (t2, s2)] = expand(g, state)?;
        let c1 = (g.child(1), partial + t1, s1);
        let c2 = (g.child(2), partial + t2, s2);
        // Visit the cheaper child first so the incumbent tightens early.
        if c1.1 <= c2.1 {
            stack.push(c2);
            stack.push(c1);
        } else {
            stack.push(c1);
            stack.push(c2);
        }
    }
    Ok(best)
}

fn check_depth(n: u32, max_depth: u32) -> Result<()> {
    let max = max_depth.min(MAX_NODE_DEPTH);
    if n > max {
        Err(Error::DepthBudget { requested: n, max })
    } else {
        Ok(())
    }
}

fn zeta_generic<L: CascadeLaw + ?Sized>(
    law: &L,
    root: Wavenumber,
    n: u32,
    max_depth: u32,
    prune: bool,
) -> Result<f64> {
    if !root.is_finite() || root.norm_sq() == 0.0 {
        return Err(Error::DegenerateWavenumber);
    }
    check_depth(n, max_depth)?;
    let root_term = law.clock(Genealogy::ROOT) / root.norm_sq();
    min_path_sum(
        n,
        root_term,
        root,
        prune,
        &mut |g: Genealogy, w: Wavenumber| {
            let pair = law.offspring(g, w)?;
            let (g1, g2) = (g.child(1), g.child(2));
            Ok([
                (law.clock(g1) / pair.w1.norm_sq(), pair.w1),
                (law.clock(g2) / pair.w2.norm_sq(), pair.w2),
            ])
        },
    )
}

/// `ζₙ(ξ)`: the least accumulated holding time `Σ_{j=0..n} T_{s|j} / |W_{s|j}|²`
/// over the `2ⁿ` genealogies of length `n`, with `ν = 1`.
pub fn zeta_n(root: Wavenumber, n: u32, kernel: KernelKind, rng: &RngStream) -> Result<f64> {
    zeta_n_with(
        &KernelLaw::new(kernel, rng.clone()),
        root,
        n,
        DEFAULT_MAX_ZETA_DEPTH,
    )
}

/// [`zeta_n`] for an arbitrary law and depth limit.
pub fn zeta_n_with<L: CascadeLaw + ?Sized>(
    law: &L,
    root: Wavenumber,
    n: u32,
    max_depth: u32,
) -> Result<f64> {
    zeta_generic(law, root, n, max_depth, true)
}

/// `ζₙ` by visiting all `2ⁿ` paths. Reference implementation.
pub fn zeta_n_exhaustive<L: CascadeLaw + ?Sized>(
    law: &L,
    root: Wavenumber,
    n: u32,
    max_depth: u32,
) -> Result<f64> {
    zeta_generic(law, root, n, max_depth, false)
}

/// `ζ̃ₙ = min Σ_{j=0..n} T_{s|j} / Π_{k=0..j} |W̃_{s|k}|²` with `|W̃_∅| = 1`.
///
/// Only the ratio magnitudes enter, so directions are not tracked.
pub fn zeta_tilde_n(n: u32, rng: &RngStream) -> Result<f64> {
    zeta_tilde_n_with(n, DEFAULT_MAX_ZETA_DEPTH, rng, true)
}

/// [`zeta_tilde_n`] with an explicit depth limit, optionally without pruning.
pub fn zeta_tilde_n_with(n: u32, max_depth: u32, rng: &RngStream, prune: bool) -> Result<f64> {
    check_depth(n, max_depth)?;
    let clock = |g: Genealogy| rng.at_node(g.heap_index(), NodeSlot::Clock).exp1();
    min_path_sum(
        n,
        clock(Genealogy::ROOT),
        1.0f64,
        prune,
        &mut |g: Genealogy, prod: f64| {
            let mut orng = rng.at_node(g.heap_index(), NodeSlot::Offspring);
            let (r1, r2) = sample_dilog_ratio_pair(&mut orng);
            let (p1, p2) = (prod * r1 * r1, prod * r2 * r2);
            Ok([(clock(g.child(1)) / p1, p1), (clock(g.child(2)) / p2, p2)])
        },
    )
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: "must be positive and finite",
        })
    }
}
