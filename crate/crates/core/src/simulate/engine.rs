use crate::model::{instantaneous_variance, ModelParams};
use crate::rng::PathKey;
use crate::scalar::{lit, Scalar};
use crate::specialfn::KernelSpec;

use super::Scheme;

/// Per-worker scratch space.
pub(crate) struct Workspace<T> {
    normals: Vec<f64>,
    aux: Vec<f64>,
    x: Vec<T>,
    pub(crate) log_spot: Vec<T>,
    pub(crate) z: Vec<T>,
    pub(crate) v: Vec<T>,
    pub(crate) dw: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    pub(crate) fn new(n: usize) -> Self {
        Workspace {
            normals: vec![0.0; n],
            aux: vec![0.0; n],
            x: vec![T::zero(); n],
            log_spot: vec![T::zero(); n + 1],
            z: vec![T::zero(); n + 1],
            v: vec![T::zero(); n + 1],
            dw: vec![T::zero(); n],
        }
    }
}

/// One discretised Volterra system: drift terms, kernel weights and noise
/// scaling shared by every path of a run.
pub(crate) struct Engine<T: Scalar> {
    params: ModelParams<T>,
    n: usize,
    dt: T,
    sqrt_dt: T,
    /// `masses_rev[i] = m_{n−i}`, so the weights for step `k+1` are the
    /// contiguous slice `masses_rev[n−k−1..n]`.
    masses_rev: Vec<T>,
    drift: Vec<T>,
    /// Extra noise scale of the newest cell under the hybrid scheme.
    hybrid_scale: Option<T>,
    log_spot0: T,
}

impl<T: Scalar> Engine<T> {
    pub(crate) fn new(params: ModelParams<T>, drift: Vec<T>, dt: T, n: usize, scheme: Scheme, spot: T) -> Self {
        debug_assert_eq!(drift.len(), n + 1);
        let kernel: KernelSpec<T> = params.kernel();
        let masses = kernel.lag_masses(dt, n);
        let masses_rev: Vec<T> = masses.iter().rev().copied().collect();
        let hybrid_scale = match scheme {
            Scheme::VolterraEuler => None,
            Scheme::Hybrid => {
                let m1 = masses.get(1).copied().unwrap_or(T::zero());
                let resid = kernel.squared_mass(dt) - m1 * m1 / dt;
                Some(resid.max(T::zero()).sqrt())
            }
        };
        Engine {
            params,
            n,
            dt,
            sqrt_dt: dt.sqrt(),
            masses_rev,
            drift,
            hybrid_scale,
            log_spot0: spot.ln(),
        }
    }

    pub(crate) fn n_steps(&self) -> usize {
        self.n
    }

    /// Simulates one path into the given slices (`n + 1` samples each, `n`
    /// increments).
    pub(crate) fn run(
        &self,
        key: PathKey,
        ws: &mut Workspace<T>,
        log_spot: &mut [T],
        z: &mut [T],
        v: &mut [T],
        dw: &mut [T],
    ) {
        let n = self.n;
        let p = &self.params;
        let eta = p.eta();
        let half = lit::<T>(0.5);
        key.fill_normals(&mut ws.normals[..n]);
        if self.hybrid_scale.is_some() {
            key.fill_aux_normals(&mut ws.aux[..n]);
        }
        z[0] = self.drift[0];
        v[0] = instantaneous_variance(z[0], p);
        log_spot[0] = self.log_spot0;
        for k in 0..n {
            let inc = self.sqrt_dt * T::lit(ws.normals[k]);
            dw[k] = inc;
            let sv = v[k].sqrt();
            ws.x[k] = eta * sv * inc / self.dt - z[k];
            log_spot[k + 1] = log_spot[k] - half * v[k] * self.dt + sv * inc;
            let mut acc = dot(&self.masses_rev[n - k - 1..n], &ws.x[..=k]);
            if let Some(s) = self.hybrid_scale {
                acc += eta * sv * s * T::lit(ws.aux[k]);
            }
            z[k + 1] = self.drift[k + 1] + acc;
            v[k + 1] = instantaneous_variance(z[k + 1], p);
        }
    }

    /// Simulates one path and returns the trapezoidal `∫ V dt` over the run.
    pub(crate) fn integrated_variance(&self, key: PathKey, ws: &mut Workspace<T>) -> T {
        let mut ls = std::mem::take(&mut ws.log_spot);
        let mut z = std::mem::take(&mut ws.z);
        let mut v = std::mem::take(&mut ws.v);
        let mut dw = std::mem::take(&mut ws.dw);
        self.run(key, ws, &mut ls, &mut z, &mut v, &mut dw);
        let out = trapezoid(&v, self.dt);
        ws.log_spot = ls;
        ws.z = z;
        ws.v = v;
        ws.dw = dw;
        out
    }
}

/// Fixed-order dot product with four independent accumulators.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = T::zero();
    for j in 4 * chunks..a.len() {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Trapezoidal integral of uniformly spaced samples.
pub(crate) fn trapezoid<T: Scalar>(v: &[T], dt: T) -> T {
    let n = v.len();
    if n < 2 {
        return T::zero();
    }
    let inner: T = v[1..n - 1].iter().copied().fold(T::zero(), |a, b| a + b);
    dt * (inner + lit::<T>(0.5) * (v[0] + v[n - 1]))
}
