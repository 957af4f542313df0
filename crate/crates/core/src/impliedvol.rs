//! Black (forward) pricing and implied-volatility inversion.
//!
//! Prices are undiscounted and written on the forward, so the same routines
//! serve SPX options (forward = spot at zero rates) and VIX options (forward =
//! VIX future).

use crate::error::{Error, PriceBound, Result};
use crate::scalar::{lit, Scalar};

const CTX: &str = "impliedvol::black_price";
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    pub fn payoff<T: Scalar>(self, underlying: T, strike: T) -> T {
        match self {
            OptionKind::Call => (underlying - strike).max(T::zero()),
            OptionKind::Put => (strike - underlying).max(T::zero()),
        }
    }

    /// Out-of-the-money side at `log(K/F) = k`: puts below the forward.
    pub fn otm<T: Scalar>(log_moneyness: T) -> Self {
        if log_moneyness < T::zero() {
            OptionKind::Put
        } else {
            OptionKind::Call
        }
    }
}

impl std::str::FromStr for OptionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "call" | "c" => Ok(OptionKind::Call),
            "put" | "p" => Ok(OptionKind::Put),
            other => Err(Error::Config(format!("unknown option kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for OptionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptionKind::Call => "call",
            OptionKind::Put => "put",
        })
    }
}

/// A quoted implied volatility with its strike coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolQuote<T: Scalar = f64> {
    pub forward: T,
    pub strike: T,
    pub expiry: T,
    pub vol: T,
    /// `ln(strike / forward)`.
    pub log_moneyness: T,
}

impl<T: Scalar> VolQuote<T> {
    pub fn new(forward: T, strike: T, expiry: T, vol: T) -> Result<Self> {
        check_inputs(forward, strike, expiry)?;
        Ok(VolQuote {
            forward,
            strike,
            expiry,
            vol,
            log_moneyness: (strike / forward).ln(),
        })
    }

    pub fn from_log_moneyness(forward: T, log_moneyness: T, expiry: T, vol: T) -> Result<Self> {
        let strike = forward * log_moneyness.exp();
        check_inputs(forward, strike, expiry)?;
        Ok(VolQuote {
            forward,
            strike,
            expiry,
            vol,
            log_moneyness,
        })
    }

    pub fn price(&self, kind: OptionKind) -> Result<T> {
        black_price(self.forward, self.strike, self.expiry, self.vol, kind)
    }
}

fn check_inputs<T: Scalar>(forward: T, strike: T, expiry: T) -> Result<()> {
    for (name, x) in [("forward", forward), ("strike", strike), ("expiry", expiry)] {
        if !(x > T::zero()) || !x.is_finite() {
            return Err(Error::domain(CTX, format!("{name} = {x} must be positive")));
        }
    }
    Ok(())
}

/// Standard normal CDF.
pub fn norm_cdf<T: Scalar>(x: T) -> T {
    T::lit(0.5 * libm::erfc(-x.as_f64() * std::f64::consts::FRAC_1_SQRT_2))
}

/// Standard normal density.
pub fn norm_pdf<T: Scalar>(x: T) -> T {
    let c = lit::<T>(0.398_942_280_401_432_7);
    c * (-lit::<T>(0.5) * x * x).exp()
}

/// Black price in terms of the total volatility `w = σ√T`.
fn price_w<T: Scalar>(forward: T, strike: T, w: T, kind: OptionKind) -> T {
    if w <= T::zero() {
        return kind.payoff(forward, strike);
    }
    let k = (strike / forward).ln();
    let d1 = -k / w + lit::<T>(0.5) * w;
    let d2 = d1 - w;
    let p = match kind {
        OptionKind::Call => forward * norm_cdf(d1) - strike * norm_cdf(d2),
        OptionKind::Put => strike * norm_cdf(-d2) - forward * norm_cdf(-d1),
    };
    p.max(T::zero())
}

/// Undiscounted Black price of a European option on a forward.
pub fn black_price<T: Scalar>(forward: T, strike: T, expiry: T, vol: T, kind: OptionKind) -> Result<T> {
    check_inputs(forward, strike, expiry)?;
    if !(vol >= T::zero()) || !vol.is_finite() {
        return Err(Error::domain(CTX, format!("vol = {vol} must be non-negative")));
    }
    Ok(price_w(forward, strike, vol * expiry.sqrt(), kind))
}

/// Sensitivity of the Black price to `σ`.
pub fn black_vega<T: Scalar>(forward: T, strike: T, expiry: T, vol: T) -> Result<T> {
    check_inputs(forward, strike, expiry)?;
    let sqrt_t = expiry.sqrt();
    let w = vol * sqrt_t;
    if !(w > T::zero()) {
        return Ok(T::zero());
    }
    let d1 = -(strike / forward).ln() / w + lit::<T>(0.5) * w;
    Ok(forward * norm_pdf(d1) * sqrt_t)
}

/// Volatility at which [`black_price`] reproduces `price`.
///
/// The price is first mapped to the out-of-the-money option by parity. The
/// total volatility is then found by safeguarded Newton iteration on the log
/// price, falling back to bisection whenever a step leaves the current
/// bracket, so deep-wing quotes with tiny vega still converge.
pub fn implied_vol<T: Scalar>(price: T, forward: T, strike: T, expiry: T, kind: OptionKind) -> Result<T> {
    check_inputs(forward, strike, expiry)?;
    let intrinsic = kind.payoff(forward, strike);
    let upper = match kind {
        OptionKind::Call => forward,
        OptionKind::Put => strike,
    };
    if !price.is_finite() || price <= intrinsic {
        return Err(Error::PriceOutOfBounds {
            bound: PriceBound::Lower,
            price: price.as_f64(),
            limit: intrinsic.as_f64(),
        });
    }
    if price >= upper {
        return Err(Error::PriceOutOfBounds {
            bound: PriceBound::Upper,
            price: price.as_f64(),
            limit: upper.as_f64(),
        });
    }
    let otm = if strike >= forward {
        OptionKind::Call
    } else {
        OptionKind::Put
    };
    let target = if otm == kind {
        price
    } else {
        // parity: C − P = F − K
        match kind {
            OptionKind::Call => price - (forward - strike),
            OptionKind::Put => price - (strike - forward),
        }
    };
    if !(target > T::zero()) {
        return Err(Error::PriceOutOfBounds {
            bound: PriceBound::Lower,
            price: price.as_f64(),
            limit: intrinsic.as_f64(),
        });
    }
    let tol = lit::<T>(1e-13).max(lit::<T>(8.0) * T::epsilon());
    let ln_target = target.ln();
    let k = (strike / forward).ln();

    // bracket [lo, hi] on w with price(lo) < target < price(hi)
    let mut lo = T::zero();
    let mut hi = T::one();
    let mut iter = 0;
    while price_w(forward, strike, hi, otm) < target {
        lo = hi;
        hi *= lit(2.0);
        iter += 1;
        if iter > 60 {
            return Err(Error::range("impliedvol::implied_vol", "no finite volatility reproduces the price"));
        }
    }
    // start near the ATM approximation, clipped into the bracket
    let mut w = (lit::<T>(2.5066282746310002) * target / forward.min(strike)).max(k.abs().sqrt());
    if !(w > lo && w < hi) {
        w = lit::<T>(0.5) * (lo + hi);
    }
    for _ in 0..MAX_ITER {
        let p = price_w(forward, strike, w, otm);
        if p < target {
            lo = w;
        } else {
            hi = w;
        }
        if (p - target).abs() <= tol * target {
            return Ok(w / expiry.sqrt());
        }
        let d1 = -k / w + lit::<T>(0.5) * w;
        let vega = forward * norm_pdf(d1);
        let mut next = if p > T::zero() && vega > T::zero() {
            w - (p.ln() - ln_target) * p / vega
        } else {
            T::nan()
        };
        if !(next > lo && next < hi) {
            next = lit::<T>(0.5) * (lo + hi);
        }
        if next == w || hi - lo <= T::epsilon() * hi {
            return Ok(next / expiry.sqrt());
        }
        w = next;
    }
    Ok(w / expiry.sqrt())
}

/// Implied volatilities of `price − se` and `price + se`.
///
/// A side whose shifted price leaves the inversion bounds is reported as
/// `0` (lower) or `+∞` (upper).
pub fn implied_vol_band<T: Scalar>(
    price: T,
    std_error: T,
    forward: T,
    strike: T,
    expiry: T,
    kind: OptionKind,
) -> Result<(T, T)> {
    check_inputs(forward, strike, expiry)?;
    let lo = implied_vol(price - std_error, forward, strike, expiry, kind).unwrap_or(T::zero());
    let hi = implied_vol(price + std_error, forward, strike, expiry, kind).unwrap_or(T::infinity());
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vol_is_intrinsic() {
        assert_eq!(black_price(100.0, 100.0, 1.0, 0.0, OptionKind::Call).unwrap(), 0.0);
        assert_eq!(black_price(100.0, 90.0, 1.0, 0.0, OptionKind::Call).unwrap(), 10.0);
        assert_eq!(black_price(100.0, 90.0, 1.0, 0.0, OptionKind::Put).unwrap(), 0.0);
    }

    #[test]
    fn parity() {
        for &vol in &[0.01, 0.2, 1.5] {
            for &k in &[60.0, 100.0, 140.0] {
                let c = black_price(100.0_f64, k, 0.7, vol, OptionKind::Call).unwrap();
                let p = black_price(100.0, k, 0.7, vol, OptionKind::Put).unwrap();
                assert!((c - p - (100.0 - k)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn bounds_are_named() {
        let e = implied_vol(10.0, 100.0, 90.0, 1.0, OptionKind::Call).unwrap_err();
        assert!(matches!(e, Error::PriceOutOfBounds { bound: PriceBound::Lower, .. }));
        let e = implied_vol(100.0, 100.0, 90.0, 1.0, OptionKind::Call).unwrap_err();
        assert!(matches!(e, Error::PriceOutOfBounds { bound: PriceBound::Upper, .. }));
        let e = implied_vol(90.0, 100.0, 90.0, 1.0, OptionKind::Put).unwrap_err();
        assert!(matches!(e, Error::PriceOutOfBounds { bound: PriceBound::Upper, .. }));
    }

    #[test]
    fn domain_errors() {
        assert!(black_price(0.0, 1.0, 1.0, 0.2, OptionKind::Call).is_err());
        assert!(black_price(1.0, -1.0, 1.0, 0.2, OptionKind::Call).is_err());
        assert!(black_price(1.0, 1.0, 0.0, 0.2, OptionKind::Call).is_err());
        assert!(black_price(1.0, 1.0, 1.0, -0.2, OptionKind::Call).is_err());
    }

    #[test]
    fn itm_quotes_round_trip() {
        let p = black_price(100.0_f64, 70.0, 0.5, 0.3, OptionKind::Call).unwrap();
        let v = implied_vol(p, 100.0, 70.0, 0.5, OptionKind::Call).unwrap();
        assert!((v - 0.3).abs() < 1e-8);
    }

    #[test]
    fn single_precision_round_trip() {
        let p = black_price(100.0f32, 110.0, 1.0, 0.25, OptionKind::Call).unwrap();
        let v = implied_vol(p, 100.0f32, 110.0, 1.0, OptionKind::Call).unwrap();
        assert!((v - 0.25).abs() < 1e-3);
    }

    #[test]
    fn band_brackets_vol() {
        let p = black_price(100.0, 105.0, 0.25, 0.2, OptionKind::Call).unwrap();
        let (lo, hi) = implied_vol_band(p, 0.05, 100.0, 105.0, 0.25, OptionKind::Call).unwrap();
        assert!(lo < 0.2 && 0.2 < hi);
        let (lo, _) = implied_vol_band(p, 10.0, 100.0, 105.0, 0.25, OptionKind::Call).unwrap();
        assert_eq!(lo, 0.0);
    }
}
