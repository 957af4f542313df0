//! Two-parameter Mittag-Leffler function on the real line.
//!
//! `E_{α,β}(z) = Σ_{n≥0} zⁿ / Γ(αn + β)`
//!
//! Evaluation strategy for real `z`:
//! - `z ≥ 0`, `α ≥ 1`, or small `|z|`: the power series (all terms positive, or
//!   cancellation bounded by `exp(|z|^{1/α})`).
//! - `z = −x < 0` with `α < 1`: the series while `x^{1/α} ≤ 8`, the algebraic
//!   asymptotic expansion once `x^{1/α} ≥ 45`, and in between the real-line
//!   integral representation
//!   `E_{α,β}(−x) = ∫₀^∞ K(χ) dχ`, valid for `β < 1 + α`, with
//!   `K(χ) = χ^{(1−β)/α} e^{−χ^{1/α}} [χ sin(π(1−β)) + x sin(π(1−β+α))]
//!           / (απ (χ² + 2χx cos(πα) + x²))`.

use super::gamma::{ln_gamma, rgamma};
use super::quad;
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Largest `|z|` accepted where only the power series applies.
pub const MAX_SERIES_ARG: f64 = 50.0;

const SERIES_Q: f64 = 8.0;
const ASYMPTOTIC_Q: f64 = 45.0;
const CTX: &str = "specialfn::mittag_leffler";

/// Evaluates `E_{α,β}(z)`.
///
/// Absolute accuracy is about `1e-12` (`f64`) for `0 < α ≤ 1` on the whole
/// negative axis and for `|z| ≤ 50` elsewhere. Positive arguments are limited
/// by overflow of the result.
pub fn mittag_leffler<T: Scalar>(alpha: T, beta: T, z: T) -> Result<T> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::domain(CTX, format!("alpha = {alpha} must be positive")));
    }
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(Error::domain(CTX, format!("beta = {beta} must be positive")));
    }
    if !z.is_finite() {
        return Err(Error::range(CTX, format!("z = {z} is not finite")));
    }
    if z == T::zero() {
        return Ok(rgamma(beta));
    }
    if alpha == T::one() && beta == T::one() {
        return Ok(z.exp());
    }
    let max_series = lit::<T>(MAX_SERIES_ARG);
    if z > T::zero() || alpha >= T::one() {
        if z.abs() > max_series {
            return Err(Error::range(
                CTX,
                format!("|z| = {} exceeds {MAX_SERIES_ARG} for alpha = {alpha}", z.abs()),
            ));
        }
        let v = series(alpha, beta, z);
        return if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::range(CTX, format!("E({alpha}, {beta}, {z}) overflows")))
        };
    }
    Ok(negative_axis(alpha, beta, -z))
}

/// `E_{α,β}(−x)` for `x > 0`, `0 < α < 1`.
fn negative_axis<T: Scalar>(alpha: T, beta: T, x: T) -> T {
    let q = x.powf(alpha.recip());
    if q <= lit(SERIES_Q) {
        series(alpha, beta, -x)
    } else if q >= lit(ASYMPTOTIC_Q) {
        asymptotic(alpha, beta, x)
    } else if beta < T::one() + alpha {
        integral(alpha, beta, x)
    } else {
        // E_{α,β}(z) = (E_{α,β−α}(z) − 1/Γ(β−α)) / z
        let lower = negative_axis(alpha, beta - alpha, x);
        (lower - rgamma(beta - alpha)) / (-x)
    }
}

fn series<T: Scalar>(alpha: T, beta: T, z: T) -> T {
    let tiny = T::epsilon() * lit(0.01);
    let mut sum = T::zero();
    let mut prev_abs = T::infinity();
    let ln_abs = z.abs().ln();
    let max_direct = lit::<T>(170.0);
    for n in 0..20_000usize {
        let nn = T::from_usize_lossy(n);
        let arg = alpha * nn + beta;
        let term = if arg < max_direct && n < 1_000 {
            z.powi(n as i32) * rgamma(arg)
        } else {
            let mag = (nn * ln_abs - ln_gamma(arg)).exp();
            if z < T::zero() && n % 2 == 1 {
                -mag
            } else {
                mag
            }
        };
        sum += term;
        let a = term.abs();
        // past the peak and negligible
        if n > 2 && a <= prev_abs && a <= tiny * sum.abs() {
            break;
        }
        prev_abs = a;
    }
    sum
}

fn asymptotic<T: Scalar>(alpha: T, beta: T, x: T) -> T {
    // |1/Γ(β − αk)| ≤ Γ(1 − β + αk)/π, so x^{−k} Γ(1 − β + αk)/π bounds the
    // k-th term; summation stops where that envelope is negligible or turns up.
    let tiny = T::epsilon() * lit(0.01);
    let ln_x = x.ln();
    let mut sum = T::zero();
    let mut prev_bound = T::infinity();
    for k in 1..400usize {
        let kk = T::from_usize_lossy(k);
        let bound = (ln_gamma(T::one() - beta + alpha * kk) - kk * ln_x).exp() / T::PI();
        if bound > prev_bound {
            break;
        }
        let term = (-kk * ln_x).exp() * rgamma(beta - alpha * kk);
        sum += if k % 2 == 1 { term } else { -term };
        if bound <= tiny * sum.abs() {
            break;
        }
        prev_bound = bound;
    }
    sum
}

fn integral<T: Scalar>(alpha: T, beta: T, x: T) -> T {
    let pi = T::PI();
    let inv_alpha = alpha.recip();
    let s1 = (pi * (T::one() - beta)).sin();
    let s2 = (pi * (T::one() - beta + alpha)).sin();
    let cos_pa = (pi * alpha).cos();
    let expo = (T::one() - beta) * inv_alpha;
    let norm = (alpha * pi).recip();
    let integrand = |chi: T| -> T {
        if chi <= T::zero() {
            return T::zero();
        }
        let num = chi * s1 + x * s2;
        let den = chi * chi + lit::<T>(2.0) * chi * x * cos_pa + x * x;
        norm * chi.powf(expo) * (-chi.powf(inv_alpha)).exp() * num / den
    };
    // e^{-χ^{1/α}} < 1e-20 beyond this point
    let upper = lit::<T>(46.0).powf(alpha);
    let peak = -x * cos_pa;
    let tol = T::epsilon() * lit(10.0);
    let mut total = T::zero();
    let mut edges = vec![T::zero()];
    if peak > T::zero() && peak < upper {
        edges.push(peak);
    }
    edges.push(upper);
    for w in edges.windows(2) {
        let (v, _) = quad::integrate(integrand, w[0], w[1], tol, tol, 4_000);
        total += v;
    }
    total
}
