use proptest::prelude::*;
use qrh::specialfn::{
    fractional_kernel, gamma, ln_gamma, mittag_leffler, ml_cdf, ml_density, ml_density_large_t, resolvent_residual,
    KernelSpec,
};
use qrh::Error;
use statrs::function::erf::erfc;
use statrs::function::gamma as oracle;

fn spec(alpha: f64, lambda: f64) -> KernelSpec<f64> {
    KernelSpec::new(alpha, lambda).unwrap()
}

/// Composite Gauss–Legendre (5 nodes) on `n` equal panels.
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683, 0.538_469_310_105_683, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
        0.236_926_885_056_189,
    ];
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let mid = a + (i as f64 + 0.5) * h;
            X.iter().zip(&W).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

#[test]
fn mittag_leffler_examples() {
    let e = mittag_leffler(1.0, 1.0, 1.0).unwrap();
    assert!((e - std::f64::consts::E).abs() < 1e-12);
    let v = mittag_leffler(0.7, 0.3, 0.0).unwrap();
    assert!((v - 1.0 / oracle::gamma(0.3)).abs() < 1e-12);
    // E_{1/2,1}(z) = e^{z²} erfc(−z)
    let v = mittag_leffler(0.5, 1.0, 1.0).unwrap();
    let closed = 1.0f64.exp() * erfc(-1.0);
    assert!((v - closed).abs() < 1e-10);
    assert!((v - 5.0090).abs() < 1e-4);
}

#[test]
fn mittag_leffler_range_errors() {
    assert!(matches!(mittag_leffler(0.5, 1.0, 51.0), Err(Error::Range { .. })));
    assert!(matches!(mittag_leffler(-0.5, 1.0, 1.0), Err(Error::Domain { .. })));
    assert!(matches!(mittag_leffler(0.5, 0.0, 1.0), Err(Error::Domain { .. })));
}

proptest! {
    #[test]
    fn exponential_identity(x in -5.0f64..5.0) {
        prop_assert!((mittag_leffler(1.0, 1.0, x).unwrap() - x.exp()).abs() < 1e-10);
    }

    #[test]
    fn half_order_closed_form(z in -12.0f64..5.0) {
        let v = mittag_leffler(0.5, 1.0, z).unwrap();
        // e^{z²} erfc(−z), written in the scaled form for negative z
        let closed = if z >= 0.0 { (z * z).exp() * erfc(-z) } else { (z * z + erfc(-z).ln()).exp() };
        prop_assert!((v - closed).abs() < 1e-10 * closed.max(1.0), "z={} {} vs {}", z, v, closed);
    }

    #[test]
    fn gamma_matches_oracle(x in 0.05f64..25.0) {
        let g = gamma(x);
        let o = oracle::gamma(x);
        prop_assert!(((g - o) / o).abs() < 1e-12);
        prop_assert!((ln_gamma(x) - oracle::ln_gamma(x)).abs() < 1e-11 * oracle::ln_gamma(x).abs().max(1.0));
    }

    #[test]
    fn gamma_recurrence(x in 0.1f64..20.0) {
        prop_assert!(((gamma(x + 1.0) - x * gamma(x)) / gamma(x + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn density_and_cdf_are_well_behaved(alpha in 0.51f64..1.0, lambda in 0.2f64..3.0, t in 1e-4f64..200.0) {
        let s = spec(alpha, lambda);
        prop_assert!(ml_density(&s, t).unwrap() >= 0.0);
        let c1 = ml_cdf(&s, t).unwrap();
        let c2 = ml_cdf(&s, t * 1.1).unwrap();
        prop_assert!((0.0..1.0).contains(&c1));
        prop_assert!(c2 >= c1);
    }
}

#[test]
fn gamma_half_is_sqrt_pi() {
    assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
}

#[test]
fn kernel_examples() {
    assert!((fractional_kernel(&spec(1.0, 1.2), 3.0).unwrap() - 1.2).abs() < 1e-15);
    let k = fractional_kernel(&spec(0.51, 1.2), 1.0).unwrap();
    assert!((k - 1.2 / oracle::gamma(0.51)).abs() < 1e-13);
    let k = fractional_kernel(&spec(0.51, 1.2), 0.01).unwrap();
    assert!((k - 1.2 * 0.01f64.powf(-0.49) / oracle::gamma(0.51)).abs() < 1e-12);
    assert!(matches!(fractional_kernel(&spec(0.51, 1.2), 0.0), Err(Error::Domain { .. })));
}

#[test]
fn exponential_limit() {
    let s = spec(1.0, 2.0);
    assert!((ml_density(&s, 0.5).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
    assert!((ml_cdf(&s, 1.0).unwrap() - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
    assert_eq!(ml_cdf(&spec(0.51, 1.2), 0.0).unwrap(), 0.0);
    assert!(ml_cdf(&s, -1.0).is_err());
    assert!(ml_density(&s, 0.0).is_err());
}

#[test]
fn cdf_matches_quadrature_of_density() {
    let s = spec(0.51, 1.2);
    let alpha = s.alpha;
    // s = u^{1/α} removes the s^{α−1} singularity at the origin
    let integrand = |u: f64| {
        if u <= 0.0 {
            return 1.2 / oracle::gamma(alpha) / alpha;
        }
        let x = u.powf(1.0 / alpha);
        ml_density(&s, x).unwrap() * x / (alpha * u)
    };
    let q = gauss_legendre(integrand, 0.0, 5f64.powf(alpha), 400);
    let c = ml_cdf(&s, 5.0).unwrap();
    assert!((q - c).abs() < 1e-6, "{q} vs {c}");
}

#[test]
fn large_time_asymptote() {
    let s = spec(0.51, 1.2);
    for &t in &[2e4, 1e5, 1e6] {
        let r = ml_density(&s, t).unwrap() / ml_density_large_t(&s, t);
        assert!((r - 1.0).abs() < 0.01, "t={t}: ratio {r}");
    }
}

#[test]
fn resolvent_identity() {
    let grid: Vec<f64> = (1..=16).map(|i| i as f64 / 8.0).collect();
    for (alpha, lambda) in [(0.51, 1.2), (0.75, 0.5)] {
        let s = spec(alpha, lambda);
        let r: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&n| resolvent_residual(&s, &grid, n).unwrap())
            .collect();
        assert!(r[3] < 1e-3, "alpha {alpha}: {r:?}");
        assert!(r.windows(2).all(|w| w[1] <= w[0] * 1.05), "alpha {alpha}: {r:?}");
    }
    assert!(resolvent_residual(&spec(1.0, 1.3), &grid, 8).unwrap() < 1e-12);
}
