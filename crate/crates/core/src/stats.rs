//! Order-fixed reductions used by every Monte Carlo estimator.

use crate::scalar::Scalar;

/// Pairwise (cascade) summation; the result depends only on the slice order.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut s = T::zero();
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se<T: Scalar>(xs: &[T]) -> (T, T) {
    let n = xs.len();
    if n == 0 {
        return (T::nan(), T::nan());
    }
    let nf = T::from_usize_lossy(n);
    let mean = pairwise_sum(xs) / nf;
    if n == 1 {
        return (mean, T::zero());
    }
    let sq: Vec<T> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (nf - T::one());
    (mean, (var / nf).sqrt())
}

/// Sample covariance of two equally long series.
pub fn covariance<T: Scalar>(xs: &[T], ys: &[T]) -> T {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return T::zero();
    }
    let nf = T::from_usize_lossy(n);
    let mx = pairwise_sum(xs) / nf;
    let my = pairwise_sum(ys) / nf;
    let prods: Vec<T> = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).collect();
    pairwise_sum(&prods) / (nf - T::one())
}

/// Pearson correlation.
pub fn correlation<T: Scalar>(xs: &[T], ys: &[T]) -> T {
    let cxy = covariance(xs, ys);
    let cxx = covariance(xs, xs);
    let cyy = covariance(ys, ys);
    cxy / (cxx * cyy).sqrt()
}
