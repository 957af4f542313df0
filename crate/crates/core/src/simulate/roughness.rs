use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::PathEnsemble;

/// Lags (in grid steps) of the variogram regression.
pub const ROUGHNESS_LAGS: [usize; 5] = [1, 2, 4, 8, 16];

/// Estimates the Hurst exponent of `√V` from the scaling of the log-moment
/// `m(δ) = E log|√V_{t+δ} − √V_t| = H log δ + const`, pooled over all paths and
/// start times, by least squares of `m` on `log δ`. The log-moment stays
/// finite under the heavy tails of `V`, where the second moment is dominated
/// by a few paths. Exactly flat increments are skipped.
pub fn estimate_roughness<T: Scalar>(ensemble: &PathEnsemble<T>) -> Result<T> {
    let n = ensemble.n_steps();
    if n < 100 {
        return Err(Error::InsufficientData(format!(
            "roughness estimation needs at least 100 steps, got {n}"
        )));
    }
    let mut sums = [0.0f64; ROUGHNESS_LAGS.len()];
    let mut counts = [0usize; ROUGHNESS_LAGS.len()];
    let mut vol = vec![0.0f64; n + 1];
    for p in 0..ensemble.n_paths() {
        for (s, v) in vol.iter_mut().zip(ensemble.v(p)) {
            *s = v.as_f64().sqrt();
        }
        for (i, &lag) in ROUGHNESS_LAGS.iter().enumerate() {
            let mut acc = 0.0;
            for k in 0..=n - lag {
                let d = (vol[k + lag] - vol[k]).abs();
                if d > 0.0 {
                    acc += d.ln();
                    counts[i] += 1;
                }
            }
            sums[i] += acc;
        }
    }
    let mut xs = [0.0; ROUGHNESS_LAGS.len()];
    let mut ys = [0.0; ROUGHNESS_LAGS.len()];
    for i in 0..ROUGHNESS_LAGS.len() {
        if counts[i] == 0 {
            return Err(Error::Degenerate(
                "variance path is constant; roughness is undefined".into(),
            ));
        }
        xs[i] = (ROUGHNESS_LAGS[i] as f64).ln();
        ys[i] = sums[i] / counts[i] as f64;
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(T::lit(sxy / sxx))
}
