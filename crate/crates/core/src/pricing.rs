//! Monte Carlo prices of SPX options, VIX futures and VIX options.
//!
//! Rates and dividends are zero, so the SPX forward is the initial spot.
//! The VIX is the continuous-path quantity
//! `VIX_t² = (scale²/Δ) E[∫_t^{t+Δ} V_s ds | F_t]`, estimated for every outer
//! path by restarting the model at `t` and averaging inner paths. Because the
//! square root is concave, the nested VIX estimate is biased low by
//! `O(1/n_inner)`; every nested estimate also carries a two-level value built
//! from the two halves of the inner sample, which cancels that leading term.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::impliedvol::{implied_vol, implied_vol_band};
use crate::model::ThetaCurve;
use crate::rng::PathKey;
use crate::scalar::{lit, Scalar};
use crate::simulate::{trapezoid, PathEnsemble, RestartPlan, Scheme, Workspace};
use crate::stats::{covariance, mean_and_se, pairwise_sum};

pub use crate::impliedvol::OptionKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceEstimate<T: Scalar = f64> {
    pub value: T,
    pub std_error: T,
    pub n_outer: usize,
    /// Inner paths per outer path (`0` for non-nested estimates).
    pub n_inner: usize,
    /// Nested estimates only: `2·plain − half-sample estimate`.
    pub two_level: Option<T>,
}

impl<T: Scalar> PriceEstimate<T> {
    fn plain(samples: &[T]) -> Self {
        let (value, std_error) = mean_and_se(samples);
        PriceEstimate {
            value,
            std_error,
            n_outer: samples.len(),
            n_inner: 0,
            two_level: None,
        }
    }
}

/// VIX window and quotation scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VixConvention<T: Scalar = f64> {
    /// Window length in years.
    pub delta: T,
    pub scale: T,
}

impl<T: Scalar> Default for VixConvention<T> {
    fn default() -> Self {
        VixConvention {
            delta: lit(30.0 / 365.0),
            scale: lit(100.0),
        }
    }
}

impl<T: Scalar> VixConvention<T> {
    fn validate(&self) -> Result<()> {
        if !(self.delta > T::zero()) || !(self.scale > T::zero()) {
            return Err(Error::Config(format!(
                "VIX window {} and scale {} must be positive",
                self.delta, self.scale
            )));
        }
        Ok(())
    }

    fn factor(&self) -> T {
        self.scale * self.scale / self.delta
    }
}

/// Default number of outer paths for VIX instruments; with the default 500
/// inner paths this keeps the standard error below half a VIX point.
pub const VIX_OUTER_PATHS: usize = 10_000;

/// Sampling sizes of the inner (restarted) simulations. The outer sample
/// is whatever ensemble the caller passes in (see [`VIX_OUTER_PATHS`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NestedConfig {
    pub inner_paths: usize,
    pub steps_per_year: usize,
    pub seed: u64,
    pub stream: u32,
    pub scheme: Scheme,
}

impl Default for NestedConfig {
    fn default() -> Self {
        NestedConfig {
            inner_paths: 500,
            steps_per_year: 500,
            seed: 0,
            stream: 0,
            scheme: Scheme::VolterraEuler,
        }
    }
}

/// `VIX²` from an ensemble of inner paths spanning exactly one VIX window.
pub fn vix_squared_at<T: Scalar>(restarted: &PathEnsemble<T>, convention: &VixConvention<T>) -> Result<T> {
    convention.validate()?;
    let h = restarted.horizon();
    if (h - convention.delta).abs() > lit::<T>(1e-9) * convention.delta.max(T::one()) {
        return Err(Error::HorizonMismatch {
            expected: convention.delta.as_f64(),
            found: h.as_f64(),
        });
    }
    let dt = restarted.dt();
    let iv: Vec<T> = (0..restarted.n_paths()).map(|p| trapezoid(restarted.v(p), dt)).collect();
    let n = T::from_usize_lossy(iv.len());
    Ok(convention.factor() * pairwise_sum(&iv) / n)
}

fn check_strike<T: Scalar>(strike: T) -> Result<()> {
    if strike > T::zero() && strike.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("pricing::price", format!("strike {strike} must be positive")))
    }
}

fn terminal_spots<T: Scalar>(ensemble: &PathEnsemble<T>, expiry: T) -> Result<Vec<T>> {
    let k = ensemble.time_index(expiry)?;
    Ok(ensemble.spots_at(k))
}

/// Plain payoff average of a European SPX option. Calls and puts priced on
/// the same ensemble satisfy `C − P = mean(S_T) − K` up to rounding.
pub fn price_spx_option<T: Scalar>(
    ensemble: &PathEnsemble<T>,
    strike: T,
    expiry: T,
    kind: OptionKind,
) -> Result<PriceEstimate<T>> {
    check_strike(strike)?;
    let s = terminal_spots(ensemble, expiry)?;
    let pay: Vec<T> = s.iter().map(|&x| kind.payoff(x, strike)).collect();
    Ok(PriceEstimate::plain(&pay))
}

/// Like [`price_spx_option`], with `S_T` (mean `S₀`) as control variate.
pub fn price_spx_option_cv<T: Scalar>(
    ensemble: &PathEnsemble<T>,
    strike: T,
    expiry: T,
    kind: OptionKind,
) -> Result<PriceEstimate<T>> {
    check_strike(strike)?;
    let s = terminal_spots(ensemble, expiry)?;
    Ok(cv_estimate(&s, ensemble.spot0(), strike, kind))
}

fn cv_estimate<T: Scalar>(s: &[T], s0: T, strike: T, kind: OptionKind) -> PriceEstimate<T> {
    let pay: Vec<T> = s.iter().map(|&x| kind.payoff(x, strike)).collect();
    let var_s = covariance(s, s);
    let beta = if var_s > T::zero() {
        covariance(&pay, s) / var_s
    } else {
        T::zero()
    };
    let adj: Vec<T> = pay.iter().zip(s).map(|(&y, &x)| y - beta * (x - s0)).collect();
    PriceEstimate::plain(&adj)
}

/// One point of a model smile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmilePoint<T: Scalar = f64> {
    pub log_moneyness: T,
    pub strike: T,
    pub kind: OptionKind,
    pub price: PriceEstimate<T>,
    /// `None` when the price falls outside the inversion bounds.
    pub vol: Option<T>,
    /// Implied vols of `price ∓ std_error`.
    pub vol_lo: T,
    pub vol_hi: T,
}

fn smile_point<T: Scalar>(
    forward: T,
    expiry: T,
    log_moneyness: T,
    price: PriceEstimate<T>,
    kind: OptionKind,
) -> Result<SmilePoint<T>> {
    let strike = forward * log_moneyness.exp();
    let vol = implied_vol(price.value, forward, strike, expiry, kind).ok();
    let (vol_lo, vol_hi) = implied_vol_band(price.value, price.std_error, forward, strike, expiry, kind)?;
    Ok(SmilePoint {
        log_moneyness,
        strike,
        kind,
        price,
        vol,
        vol_lo,
        vol_hi,
    })
}

/// SPX implied vols of out-of-the-money options at `log(K/S₀)`, priced with
/// the spot control variate.
pub fn spx_smile<T: Scalar>(
    ensemble: &PathEnsemble<T>,
    expiry: T,
    log_moneyness: &[T],
) -> Result<Vec<SmilePoint<T>>> {
    if !(expiry > T::zero()) {
        return Err(Error::domain("pricing::spx_smile", "expiry must be positive"));
    }
    let s = terminal_spots(ensemble, expiry)?;
    let s0 = ensemble.spot0();
    log_moneyness
        .iter()
        .map(|&k| {
            let kind = OptionKind::otm(k);
            let price = cv_estimate(&s, s0, s0 * k.exp(), kind);
            smile_point(s0, expiry, k, price, kind)
        })
        .collect()
}

/// Per-outer-path VIX estimates at one expiry.
#[derive(Debug, Clone, PartialEq)]
pub struct VixSamples<T: Scalar = f64> {
    pub expiry: T,
    /// Nested estimate of `VIX_T` for each outer path.
    pub vix: Vec<T>,
    /// Estimates from the first and second half of the inner sample.
    pub halves: Vec<(T, T)>,
    pub n_inner: usize,
}

impl<T: Scalar> VixSamples<T> {
    pub fn n_outer(&self) -> usize {
        self.vix.len()
    }

    fn estimate(&self, f: impl Fn(T) -> T) -> PriceEstimate<T> {
        let vals: Vec<T> = self.vix.iter().map(|&v| f(v)).collect();
        let mut est = PriceEstimate::plain(&vals);
        est.n_inner = self.n_inner;
        if self.n_inner >= 2 {
            let half = lit::<T>(0.5);
            let h: Vec<T> = self.halves.iter().map(|&(a, b)| half * (f(a) + f(b))).collect();
            let n = T::from_usize_lossy(h.len());
            est.two_level = Some(lit::<T>(2.0) * est.value - pairwise_sum(&h) / n);
        }
        est
    }

    /// VIX future (volatility points).
    pub fn future(&self) -> PriceEstimate<T> {
        self.estimate(|v| v)
    }

    pub fn option(&self, strike: T, kind: OptionKind) -> Result<PriceEstimate<T>> {
        check_strike(strike)?;
        Ok(self.estimate(|v| kind.payoff(v, strike)))
    }

    /// Black-76 implied vols of out-of-the-money VIX options at
    /// `log(K/F)`, with `F` the VIX future from the same samples.
    pub fn smile(&self, log_moneyness: &[T]) -> Result<Vec<SmilePoint<T>>> {
        if !(self.expiry > T::zero()) {
            return Err(Error::domain("pricing::vix_smile", "expiry must be positive"));
        }
        let forward = self.future().value;
        log_moneyness
            .iter()
            .map(|&k| {
                let kind = OptionKind::otm(k);
                let price = self.option(forward * k.exp(), kind)?;
                smile_point(forward, self.expiry, k, price, kind)
            })
            .collect()
    }
}

/// Nested VIX estimates at `expiry` for every outer path of `ensemble`.
///
/// Outer path `p` is restarted from its own history with inner keys
/// `(inner.seed, inner.stream, p, j)`.
pub fn vix_samples<T: Scalar>(
    ensemble: &PathEnsemble<T>,
    theta0: &impl ThetaCurve<T>,
    expiry: T,
    inner: &NestedConfig,
    convention: &VixConvention<T>,
) -> Result<VixSamples<T>> {
    convention.validate()?;
    if inner.inner_paths == 0 {
        return Err(Error::Config("inner_paths must be at least 1".into()));
    }
    let k = ensemble.time_index(expiry)?;
    let t0 = ensemble.grid()[k];
    let params = ensemble.params();
    let plan = RestartPlan::new(
        params,
        theta0,
        t0,
        k + 1,
        convention.delta,
        inner.steps_per_year,
        inner.scheme,
    )?;
    let n_inner = inner.inner_paths;
    let factor = convention.factor();
    let half_n = n_inner / 2;
    let rows: Vec<(T, (T, T))> = (0..ensemble.n_paths())
        .into_par_iter()
        .map_init(
            || (Workspace::new(plan.n_steps()), vec![T::zero(); n_inner]),
            |(ws, iv), p| {
                let engine = plan.engine(&ensemble.z(p)[..=k], T::one());
                for (j, slot) in iv.iter_mut().enumerate() {
                    let key = PathKey::inner(inner.seed, inner.stream, p as u32, j as u32);
                    *slot = engine.integrated_variance(key, ws);
                }
                let vix = |xs: &[T]| {
                    if xs.is_empty() {
                        T::nan()
                    } else {
                        (factor * pairwise_sum(xs) / T::from_usize_lossy(xs.len())).sqrt()
                    }
                };
                (vix(iv), (vix(&iv[..half_n]), vix(&iv[half_n..])))
            },
        )
        .collect();
    let (vix, halves) = rows.into_iter().unzip();
    Ok(VixSamples {
        expiry: t0,
        vix,
        halves,
        n_inner,
    })
}

/// Nested VIX future.
pub fn vix_future<T: Scalar>(
    ensemble: &PathEnsemble<T>,
    theta0: &impl ThetaCurve<T>,
    expiry: T,
    inner: &NestedConfig,
    convention: &VixConvention<T>,
) -> Result<PriceEstimate<T>> {
    Ok(vix_samples(ensemble, theta0, expiry, inner, convention)?.future())
}

/// Nested VIX option (strike in volatility points).
pub fn price_vix_option<T: Scalar>(
    ensemble: &PathEnsemble<T>,
    theta0: &impl ThetaCurve<T>,
    strike: T,
    expiry: T,
    kind: OptionKind,
    inner: &NestedConfig,
    convention: &VixConvention<T>,
) -> Result<PriceEstimate<T>> {
    check_strike(strike)?;
    vix_samples(ensemble, theta0, expiry, inner, convention)?.option(strike, kind)
}
