//! Gamma function via the Lanczos approximation (g = 7, nine terms).

#![allow(clippy::excessive_precision)]

use crate::scalar::{lit, Scalar};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum<T: Scalar>(x: T) -> T {
    // x is the shifted argument (Γ(x + 1) is being evaluated)
    let mut acc = lit::<T>(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += lit::<T>(c) / (x + T::from_usize_lossy(i));
    }
    acc
}

/// `sin(πx)` with argument reduction so that integers map to exact zeros.
pub fn sin_pi<T: Scalar>(x: T) -> T {
    let two = lit::<T>(2.0);
    let mut r = x - two * (x / two).round();
    // r in [-1, 1]
    let half = lit::<T>(0.5);
    if r > half {
        r = T::one() - r;
    } else if r < -half {
        r = -T::one() - r;
    }
    (T::PI() * r).sin()
}

/// Γ(x) for real x; returns ±∞ at the poles (non-positive integers).
pub fn gamma<T: Scalar>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let half = lit::<T>(0.5);
    if x < half {
        let s = sin_pi(x);
        if s == T::zero() {
            return T::infinity();
        }
        return T::PI() / (s * gamma(T::one() - x));
    }
    let xm1 = x - T::one();
    let t = xm1 + lit::<T>(LANCZOS_G) + half;
    let sqrt_two_pi = (lit::<T>(2.0) * T::PI()).sqrt();
    // split the power so t^(x - 1/2) does not overflow before e^-t scales it
    let p = t.powf((xm1 + half) * half);
    sqrt_two_pi * p * (p * (-t).exp()) * lanczos_sum(xm1)
}

/// 1/Γ(x), exactly zero at the poles of Γ.
pub fn rgamma<T: Scalar>(x: T) -> T {
    if x < lit(0.5) {
        // reflection without dividing by sin(πx)
        return sin_pi(x) * gamma(T::one() - x) / T::PI();
    }
    let g = gamma(x);
    if g.is_infinite() {
        T::zero()
    } else {
        T::one() / g
    }
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    let half = lit::<T>(0.5);
    if x < half {
        return ln_gamma(x + T::one()) - x.ln();
    }
    let xm1 = x - T::one();
    let t = xm1 + lit::<T>(LANCZOS_G) + half;
    half * (lit::<T>(2.0) * T::PI()).ln() + (xm1 + half) * t.ln() - t + lanczos_sum(xm1).ln()
}
