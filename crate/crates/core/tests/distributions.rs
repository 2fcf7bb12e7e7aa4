use nscascade_core::analysis::{
    compare_groups, ks_one_sample, ks_two_sample, verify_scaling_equivalence, zeta_sample,
    ZetaSource,
};
use nscascade_core::cascade::{branch_count, BranchCount, SimBudget, ThinningMode};
use nscascade_core::kernels::KernelKind;
use nscascade_core::{RngStream, Wavenumber};

#[test]
fn scaled_zeta_matches_selfsimilar_zeta() {
    let rng = RngStream::new(11, 0);
    let pairs = verify_scaling_equivalence(&[0.5, 3.0], 3, 3000, 0.001, &rng).unwrap();
    assert_eq!(pairs.len(), 3);
    for p in &pairs {
        assert!(p.ks.pass, "{} vs {}: {}", p.left, p.right, p.ks.statistic);
    }
}

#[test]
fn bessel_scaled_zeta_is_distinguishable() {
    let rng = RngStream::new(12, 0);
    let groups = [
        ZetaSource::Scaled {
            kernel: KernelKind::Bessel,
            xi_mag: 5.0,
        },
        ZetaSource::SelfSimilar,
    ];
    let r = compare_groups(&groups, 3, 3000, 0.001, &rng).unwrap();
    assert!(!r[0].ks.pass, "{}", r[0].ks.statistic);
}

#[test]
fn zeta_does_not_depend_on_direction() {
    let rng = RngStream::new(13, 0);
    let along = |xi: Wavenumber, tag| -> Vec<f64> {
        (0..3000u64)
            .map(|i| {
                nscascade_core::cascade::zeta_n(xi, 4, KernelKind::Dilog, &rng.fork(tag).fork(i))
                    .unwrap()
            })
            .collect()
    };
    let a = along(Wavenumber::new(0.0, 0.0, 2.0), 1);
    let b = along(Wavenumber::new(2.0f64.sqrt(), -(2.0f64.sqrt()), 0.0), 2);
    assert!(ks_two_sample(&a, &b, 0.001).unwrap().pass);
}

#[test]
fn root_clock_alone_is_unit_exponential() {
    let rng = RngStream::new(14, 0);
    let s = zeta_sample(ZetaSource::SelfSimilar, 0, 50_000, &rng).unwrap();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    assert!((mean - 1.0).abs() < 3.0 / (s.len() as f64).sqrt());
    assert!(ks_one_sample(&s, |x| -(-x).exp_m1(), 0.001).unwrap().pass);
}

#[test]
fn no_branching_probability_is_exponential_in_horizon() {
    // P(Z = 1) = P(T > |ξ|² t) = e^{-1/2}
    let rng = RngStream::new(15, 0);
    let xi = Wavenumber::new(0.0, 1.0, 0.0);
    let reps = 20_000;
    let budget = SimBudget::new(1 << 12, 25).unwrap();
    let hits = (0..reps as u64)
        .filter(|&i| {
            let z = branch_count(
                xi,
                0.5,
                KernelKind::Dilog,
                ThinningMode::Nonthinned,
                1.0,
                budget,
                &rng.fork(i),
            )
            .unwrap();
            z == BranchCount::Finite(1)
        })
        .count();
    let p = hits as f64 / reps as f64;
    let want = (-0.5f64).exp();
    let se = (want * (1.0 - want) / reps as f64).sqrt();
    assert!((p - want).abs() < 3.0 * se, "{p}");
}

#[test]
fn thinned_tree_is_critical() {
    // Thinned trees are critical Galton-Watson: E Z(t) = 1 for every t.
    let rng = RngStream::new(16, 0);
    let xi = Wavenumber::new(1.0, 0.0, 0.0);
    let budget = SimBudget::new(1 << 14, 40).unwrap();
    let reps = 20_000u64;
    let mut zs = Vec::new();
    for i in 0..reps {
        match branch_count(
            xi,
            0.3,
            KernelKind::Bessel,
            ThinningMode::Thinned,
            1.0,
            budget,
            &rng.fork(i),
        )
        .unwrap()
        {
            BranchCount::Finite(z) => zs.push(z as f64),
            BranchCount::Truncated => panic!("thinned tree truncated"),
        }
    }
    let n = zs.len() as f64;
    let m = zs.iter().sum::<f64>() / n;
    let v = zs.iter().map(|z| (z - m) * (z - m)).sum::<f64>() / (n - 1.0);
    assert!((m - 1.0).abs() < 3.0 * (v / n).sqrt(), "{m}");
}
