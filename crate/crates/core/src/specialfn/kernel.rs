//! The fractional kernel `K(t) = λ t^{α−1}/Γ(α)` and its resolvent, the
//! Mittag-Leffler density `f(t) = λ t^{α−1} E_{α,α}(−λ t^α)`.

use super::gamma::{gamma, rgamma};
use super::mittag_leffler::mittag_leffler;
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Roughness exponent and mean-reversion scale of the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<T: Scalar = f64> {
    pub alpha: T,
    pub lambda: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(alpha: T, lambda: T) -> Result<Self> {
        let spec = KernelSpec { alpha, lambda };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks `1/2 < α ≤ 1` and `λ > 0`.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > lit(0.5) && self.alpha <= T::one()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                detail: format!("{} not in (1/2, 1]", self.alpha),
            });
        }
        if !(self.lambda > T::zero()) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                detail: format!("{} must be positive", self.lambda),
            });
        }
        Ok(())
    }

    /// `∫_{t-b}^{t-a} K(x) dx` written as the mass the kernel assigns to a cell
    /// `[a, b]` when observed from time `t ≥ b`.
    #[inline]
    pub fn cell_mass(&self, t: T, a: T, b: T) -> T {
        self.lambda * rgamma(self.alpha + T::one()) * ((t - a).powf(self.alpha) - (t - b).powf(self.alpha))
    }

    /// Kernel masses `m_n = ∫_{(n−1)h}^{nh} K(x) dx` for lags `n = 0..=n_max`
    /// (`m_0 = 0`).
    pub fn lag_masses(&self, h: T, n_max: usize) -> Vec<T> {
        let scale = self.lambda * rgamma(self.alpha + T::one()) * h.powf(self.alpha);
        let mut out = Vec::with_capacity(n_max + 1);
        out.push(T::zero());
        let mut prev = T::zero();
        for n in 1..=n_max {
            let cur = T::from_usize_lossy(n).powf(self.alpha);
            out.push(scale * (cur - prev));
            prev = cur;
        }
        out
    }

    /// `∫₀^h K(x)² dx`, finite because `α > 1/2`.
    pub fn squared_mass(&self, h: T) -> T {
        let c = self.lambda * rgamma(self.alpha);
        let e = lit::<T>(2.0) * self.alpha - T::one();
        c * c * h.powf(e) / e
    }
}

fn check_positive<T: Scalar>(ctx: &'static str, t: T) -> Result<()> {
    if t > T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(ctx, format!("t = {t} must be positive")))
    }
}

/// `K(t) = λ t^{α−1} / Γ(α)`.
pub fn fractional_kernel<T: Scalar>(spec: &KernelSpec<T>, t: T) -> Result<T> {
    check_positive("specialfn::fractional_kernel", t)?;
    Ok(spec.lambda * t.powf(spec.alpha - T::one()) * rgamma(spec.alpha))
}

/// Mittag-Leffler density `f^{α,λ}(t)`.
pub fn ml_density<T: Scalar>(spec: &KernelSpec<T>, t: T) -> Result<T> {
    check_positive("specialfn::ml_density", t)?;
    if spec.alpha == T::one() {
        return Ok(spec.lambda * (-spec.lambda * t).exp());
    }
    let e = mittag_leffler(spec.alpha, spec.alpha, -spec.lambda * t.powf(spec.alpha))?;
    Ok((spec.lambda * t.powf(spec.alpha - T::one()) * e).max(T::zero()))
}

/// `∫₀ᵗ f^{α,λ}(s) ds = 1 − E_{α,1}(−λ t^α)`.
pub fn ml_cdf<T: Scalar>(spec: &KernelSpec<T>, t: T) -> Result<T> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::domain("specialfn::ml_cdf", format!("t = {t} must be non-negative")));
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    let e = mittag_leffler(spec.alpha, T::one(), -spec.lambda * t.powf(spec.alpha))?;
    Ok((T::one() - e).max(T::zero()).min(T::one()))
}

/// Small-time asymptote `λ t^{α−1}/Γ(α)` of the density.
pub fn ml_density_small_t<T: Scalar>(spec: &KernelSpec<T>, t: T) -> T {
    spec.lambda * t.powf(spec.alpha - T::one()) / gamma(spec.alpha)
}

/// Large-time asymptote `α t^{−α−1} / (λ Γ(1−α))` of the density.
pub fn ml_density_large_t<T: Scalar>(spec: &KernelSpec<T>, t: T) -> T {
    spec.alpha * rgamma(T::one() - spec.alpha) * t.powf(-spec.alpha - T::one()) / spec.lambda
}

/// Largest violation of the resolvent identity `f + K∗f = K` over `grid`.
///
/// Each convolution `∫₀ᵗ K(t−s) f(s) ds` is discretised on `cells` uniform
/// cells of `[0, t]`: every cell contributes its exact density mass (from
/// [`ml_cdf`]) times the exact cell average of the kernel, so neither the
/// `s = 0` singularity of `f` nor the `s = t` singularity of `K` is ever
/// point-evaluated.
pub fn resolvent_residual<T: Scalar>(spec: &KernelSpec<T>, grid: &[T], cells: usize) -> Result<T> {
    const CTX: &str = "specialfn::resolvent_residual";
    if grid.is_empty() {
        return Err(Error::domain(CTX, "empty grid"));
    }
    if cells == 0 {
        return Err(Error::domain(CTX, "at least one quadrature cell is required"));
    }
    if !(grid[0] > T::zero()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain(CTX, "grid must be strictly increasing and start above 0"));
    }
    let mut worst = T::zero();
    for &t in grid {
        let h = t / T::from_usize_lossy(cells);
        let mut conv = T::zero();
        let mut cdf_lo = T::zero();
        for j in 0..cells {
            let a = T::from_usize_lossy(j) * h;
            let b = if j + 1 == cells { t } else { a + h };
            let cdf_hi = ml_cdf(spec, b)?;
            let kernel_avg = spec.cell_mass(t, a, b) / (b - a);
            conv += (cdf_hi - cdf_lo) * kernel_avg;
            cdf_lo = cdf_hi;
        }
        let r = (ml_density(spec, t)? + conv - fractional_kernel(spec, t)?).abs();
        worst = worst.max(r);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_spec() -> KernelSpec<f64> {
        KernelSpec::new(0.51, 1.2).unwrap()
    }

    #[test]
    fn kernel_values() {
        let k1 = KernelSpec::new(1.0, 1.2).unwrap();
        assert!((fractional_kernel(&k1, 3.0_f64).unwrap() - 1.2).abs() < 1e-15);
        let s = paper_spec();
        assert!((fractional_kernel(&s, 1.0).unwrap() - 1.2 / gamma(0.51)).abs() < 1e-14);
        assert!(fractional_kernel(&s, 0.0).is_err());
        assert!(fractional_kernel(&s, -1.0).is_err());
    }

    #[test]
    fn exponential_density_and_cdf() {
        let s = KernelSpec::new(1.0, 2.0).unwrap();
        assert!((ml_density(&s, 0.5).unwrap() - 2.0 * (-1.0_f64).exp()).abs() < 1e-15);
        assert!((ml_cdf(&s, 1.0).unwrap() - (1.0 - (-2.0_f64).exp())).abs() < 1e-15);
        assert_eq!(ml_cdf(&s, 0.0).unwrap(), 0.0);
        assert!(ml_cdf(&s, -1.0).is_err());
    }

    #[test]
    fn asymptotes() {
        let s = paper_spec();
        // the first correction is −λ t^α Γ(α)/Γ(2α), still 1.3% at t = 5e-5
        for &t in &[1e-7, 1e-6, 1e-5, 2e-5] {
            let r = ml_density(&s, t).unwrap() / ml_density_small_t(&s, t);
            assert!((r - 1.0).abs() < 0.01, "t={t} ratio={r}");
        }
        let r = ml_density(&s, 5e-5).unwrap() / ml_density_small_t(&s, 5e-5);
        assert!((r - 0.986_604_095_222_530_6).abs() < 1e-10, "{r}");
        for &t in &[1.5e4, 1e5, 1e6] {
            let r = ml_density(&s, t).unwrap() / ml_density_large_t(&s, t);
            assert!((r - 1.0).abs() < 0.01, "t={t} ratio={r}");
        }
    }

    #[test]
    fn cdf_reaches_one() {
        let s = paper_spec();
        // the tail decays like t^{-α}: 1.36% of the mass is still missing at t = 1e3
        assert!((ml_cdf(&s, 1e3).unwrap() - 0.986_390_076_844_911_4).abs() < 1e-10);
        assert!(ml_cdf(&s, 2e3).unwrap() > 0.99);
        let mut prev = 0.0;
        for i in 1..400 {
            let t = 1e-3 * 1.05_f64.powi(i);
            let c = ml_cdf(&s, t).unwrap();
            assert!(c >= prev && c <= 1.0);
            prev = c;
        }
    }

    #[test]
    fn exponential_resolvent_is_exact() {
        let s = KernelSpec::new(1.0, 1.7).unwrap();
        let r = resolvent_residual(&s, &[0.1, 0.5, 1.0, 2.0], 16).unwrap();
        assert!(r < 1e-13, "{r}");
    }

    #[test]
    fn residual_rejects_bad_grids() {
        let s = paper_spec();
        assert!(resolvent_residual(&s, &[], 8).is_err());
        assert!(resolvent_residual(&s, &[0.0, 1.0], 8).is_err());
        assert!(resolvent_residual(&s, &[1.0, 0.5], 8).is_err());
    }

    #[test]
    fn lag_masses_sum_to_integral() {
        let s = paper_spec();
        let h = 0.01;
        let m = s.lag_masses(h, 100);
        let total: f64 = m.iter().sum();
        let exact = s.lambda * rgamma(s.alpha + 1.0) * (100.0 * h).powf(s.alpha);
        assert!((total - exact).abs() < 1e-12);
        assert!((m[3] - s.cell_mass(0.03, 0.0, 0.01)).abs() < 1e-14);
    }

    #[test]
    fn invalid_specs() {
        assert!(KernelSpec::new(0.5, 1.0).is_err());
        assert!(KernelSpec::new(1.01, 1.0).is_err());
        assert!(KernelSpec::new(0.7, 0.0).is_err());
    }
}
