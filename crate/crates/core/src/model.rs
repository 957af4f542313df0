//! Model parameters, the quadratic variance map and the θ forward curves.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kv::KvFile;
use crate::scalar::{lit, Scalar};
use crate::specialfn::{rgamma, KernelSpec};

/// The calibrated vector `ν = (α, λ, a, b, c, Z₀)` plus the feedback scale `η`.
///
/// `η` is pinned to 1: `(Z, η, a, b, Z₀) → (kZ, kη, a/k², kb, kZ₀)` leaves `V`
/// unchanged, so it carries no information beyond the other five.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T: Scalar = f64> {
    pub alpha: T,
    pub lambda: T,
    pub a: T,
    pub b: T,
    pub c: T,
    pub z0: T,
    eta: T,
}

pub const PARAM_NAMES: [&str; 6] = ["alpha", "lambda", "a", "b", "c", "z0"];

impl<T: Scalar> ModelParams<T> {
    pub fn new(alpha: T, lambda: T, a: T, b: T, c: T, z0: T) -> Result<Self> {
        let p = ModelParams {
            alpha,
            lambda,
            a,
            b,
            c,
            z0,
            eta: T::one(),
        };
        p.validate()?;
        Ok(p)
    }

    /// `α = 0.51, λ = 1.2, a = 0.384, b = 0.095, c = 0.0025, Z₀ = 0.1`, the
    /// joint SPX/VIX fit of 19 May 2017.
    pub fn reference() -> Self {
        ModelParams {
            alpha: lit(0.51),
            lambda: lit(1.2),
            a: lit(0.384),
            b: lit(0.095),
            c: lit(0.0025),
            z0: lit(0.1),
            eta: T::one(),
        }
    }

    /// Overrides `η`. Only meant for degenerate-case checks (e.g. `η = 0`
    /// turns `Z` into the solution of a deterministic Volterra equation).
    pub fn with_eta(mut self, eta: T) -> Self {
        self.eta = eta;
        self
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    /// Hurst exponent `H = α − 1/2` of the volatility paths.
    pub fn hurst(&self) -> T {
        self.alpha - lit(0.5)
    }

    pub fn kernel(&self) -> KernelSpec<T> {
        KernelSpec {
            alpha: self.alpha,
            lambda: self.lambda,
        }
    }

    /// Checks every invariant and names the first one violated.
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, detail: String| Err(Error::InvalidParameter { name, detail });
        if !(self.alpha > lit(0.5) && self.alpha <= T::one()) {
            return bad("alpha", format!("{} not in (1/2, 1]", self.alpha));
        }
        if !(self.lambda > T::zero()) || !self.lambda.is_finite() {
            return bad("lambda", format!("{} must be positive", self.lambda));
        }
        if !(self.a >= T::zero()) || !self.a.is_finite() {
            return bad("a", format!("{} must be non-negative", self.a));
        }
        if !(self.b >= T::zero()) || !self.b.is_finite() {
            return bad("b", format!("{} must be non-negative", self.b));
        }
        if !(self.c > T::zero()) || !self.c.is_finite() {
            return bad("c", format!("{} must be positive", self.c));
        }
        if !self.z0.is_finite() {
            return bad("z0", format!("{} must be finite", self.z0));
        }
        if !(self.eta >= T::zero()) || !self.eta.is_finite() {
            return bad("eta", format!("{} must be non-negative", self.eta));
        }
        Ok(())
    }

    /// `[α, λ, a, b, c, Z₀]`.
    pub fn to_vec(&self) -> [T; 6] {
        [self.alpha, self.lambda, self.a, self.b, self.c, self.z0]
    }

    /// Inverse of [`to_vec`](Self::to_vec); keeps `η` from `self`.
    pub fn with_vec(&self, v: [T; 6]) -> Self {
        ModelParams {
            alpha: v[0],
            lambda: v[1],
            a: v[2],
            b: v[3],
            c: v[4],
            z0: v[5],
            eta: self.eta,
        }
    }

    /// Reads `alpha, lambda, a, b, c, z0` from a key-value file; an `eta`
    /// entry is accepted only if it equals 1.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let eta: Option<f64> = kv.get("eta")?;
        if let Some(e) = eta {
            if e != 1.0 {
                return Err(Error::InvalidParameter {
                    name: "eta",
                    detail: format!("{e} given, but eta is fixed to 1"),
                });
            }
        }
        let get = |k: &str| -> Result<T> { Ok(T::lit(kv.require::<f64>(k)?)) };
        Self::new(get("alpha")?, get("lambda")?, get("a")?, get("b")?, get("c")?, get("z0")?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::default();
        for (k, v) in PARAM_NAMES.iter().zip(self.to_vec()) {
            kv.set(k, v.as_f64());
        }
        kv
    }
}

impl<T: Scalar> fmt::Display for ModelParams<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "alpha={} lambda={} a={} b={} c={} z0={}",
            self.alpha, self.lambda, self.a, self.b, self.c, self.z0
        )
    }
}

/// `V = a (z − b)² + c`.
#[inline]
pub fn instantaneous_variance<T: Scalar>(z: T, params: &ModelParams<T>) -> T {
    let d = z - params.b;
    params.a * d * d + params.c
}

/// `θ₀(t) = Z₀ t^{−α} / (λ Γ(1−α))`, the initial curve for which `Z` starts
/// at `Z₀` and reverts towards 0.
pub fn theta0_parametric<T: Scalar>(params: &ModelParams<T>, t: T) -> Result<T> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::domain("model::theta0_parametric", format!("t = {t} must be positive")));
    }
    if params.alpha >= T::one() {
        return Err(Error::Unsupported {
            context: "model::theta0_parametric",
            detail: "alpha = 1 puts Γ(1 − α) on its pole".into(),
        });
    }
    Ok(ParametricTheta::from_params(params).value(t))
}

/// A deterministic input curve θ driving the drift of `Z`.
pub trait ThetaCurve<T: Scalar>: Sync {
    fn value(&self, t: T) -> T;

    /// Last time the curve may be evaluated at, `None` if unbounded.
    fn domain_end(&self) -> Option<T> {
        None
    }

    /// `Θ_k = Z-level + ∫₀^{t_k} K(t_k − s) θ(s) ds` on the uniform grid
    /// `t_k = k h`, `k = 0..=n`.
    ///
    /// The default rule samples θ at cell midpoints and weights each cell by
    /// its exact kernel mass.
    fn kernel_drift(&self, kernel: &KernelSpec<T>, h: T, n: usize) -> Vec<T> {
        let masses = kernel.lag_masses(h, n);
        let half = lit::<T>(0.5);
        let mids: Vec<T> = (0..n)
            .map(|j| self.value((T::from_usize_lossy(j) + half) * h))
            .collect();
        let mut out = Vec::with_capacity(n + 1);
        out.push(T::zero());
        for k in 1..=n {
            let mut s = T::zero();
            for j in 0..k {
                s += masses[k - j] * mids[j];
            }
            out.push(s);
        }
        out
    }
}

/// The parametric curve `θ₀(t) = Z₀ t^{−α}/(λΓ(1−α))`, integrated exactly:
/// `∫₀ᵗ K(t−s) θ₀(s) ds = Z₀` for every `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametricTheta<T: Scalar = f64> {
    pub z0: T,
    pub alpha: T,
    pub lambda: T,
}

impl<T: Scalar> ParametricTheta<T> {
    pub fn from_params(p: &ModelParams<T>) -> Self {
        ParametricTheta {
            z0: p.z0,
            alpha: p.alpha,
            lambda: p.lambda,
        }
    }

    /// Samples the curve on `grid` (all points > 0).
    pub fn tabulate(&self, grid: &[T]) -> Result<ForwardCurve<T>> {
        ForwardCurve::new(
            grid.to_vec(),
            grid.iter().map(|&t| self.value(t)).collect(),
            Some(self.alpha),
        )
    }
}

impl<T: Scalar> ThetaCurve<T> for ParametricTheta<T> {
    fn value(&self, t: T) -> T {
        // 1/Γ(0) = 0 gives the α = 1 limit: all mass sits at t = 0
        self.z0 * t.powf(-self.alpha) * rgamma(T::one() - self.alpha) / self.lambda
    }

    fn kernel_drift(&self, _kernel: &KernelSpec<T>, _h: T, n: usize) -> Vec<T> {
        vec![self.z0; n + 1]
    }
}

/// θ on a time grid: linear between nodes, constant before the first node and
/// power-law decaying (`t^{−p}`) after the last one when an exponent is set.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCurve<T: Scalar = f64> {
    grid: Vec<T>,
    values: Vec<T>,
    extrapolation_exponent: Option<T>,
}

impl<T: Scalar> ForwardCurve<T> {
    pub fn new(grid: Vec<T>, values: Vec<T>, extrapolation_exponent: Option<T>) -> Result<Self> {
        const CTX: &str = "model::ForwardCurve";
        if grid.is_empty() || grid.len() != values.len() {
            return Err(Error::domain(
                CTX,
                format!("grid ({}) and values ({}) must be equally long and non-empty", grid.len(), values.len()),
            ));
        }
        if !(grid[0] >= T::zero()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(CTX, "grid must be non-negative and strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(CTX, "values must be finite"));
        }
        Ok(ForwardCurve {
            grid,
            values,
            extrapolation_exponent,
        })
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn extrapolation_exponent(&self) -> Option<T> {
        self.extrapolation_exponent
    }
}

impl<T: Scalar> ThetaCurve<T> for ForwardCurve<T> {
    fn value(&self, t: T) -> T {
        let n = self.grid.len();
        if t <= self.grid[0] {
            return self.values[0];
        }
        let last = self.grid[n - 1];
        if t >= last {
            return match self.extrapolation_exponent {
                Some(p) if t > last && last > T::zero() => self.values[n - 1] * (t / last).powf(-p),
                _ => self.values[n - 1],
            };
        }
        let i = self.grid.partition_point(|&g| g <= t) - 1;
        let (t0, t1) = (self.grid[i], self.grid[i + 1]);
        let w = (t - t0) / (t1 - t0);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    fn domain_end(&self) -> Option<T> {
        match self.extrapolation_exponent {
            Some(_) => None,
            None => Some(self.grid[self.grid.len() - 1]),
        }
    }
}

/// Precomputed quadrature weights for the history integral of the
/// conditional forward curve
///
/// `θ_{t₀}(u) = θ₀(t₀+u) + α/(λΓ(1−α)) ∫₀^{t₀} (t₀−v+u)^{−1−α} (Z_v − Z_{t₀}) dv`.
///
/// `Z` is taken piecewise linear between the uniform history samples and each
/// cell is integrated exactly against the power kernel, so the integrable
/// concentration at `v → t₀` for small `u` carries its exact weight. The
/// weights depend only on `(α, t₀, number of samples, u)` and can be shared by
/// every path observed on the same grid.
#[derive(Debug, Clone)]
pub struct ForwardThetaWeights<T: Scalar> {
    t0: T,
    out_grid: Vec<T>,
    n_hist: usize,
    coef: T,
    /// Row-major `out_grid.len() × n_hist` weights on the history samples.
    weights: Vec<T>,
}

impl<T: Scalar> ForwardThetaWeights<T> {
    /// `n_hist` samples on `[0, t0]` (`n_hist = 1` requires `t0 = 0`).
    pub fn new(params: &ModelParams<T>, t0: T, n_hist: usize, out_grid: &[T]) -> Result<Self> {
        const CTX: &str = "model::forward_theta";
        params.validate()?;
        if n_hist == 0 {
            return Err(Error::domain(CTX, "empty history"));
        }
        if !(t0 >= T::zero()) || (n_hist == 1 && t0 != T::zero()) || (n_hist > 1 && !(t0 > T::zero())) {
            return Err(Error::domain(CTX, format!("history of {n_hist} samples cannot span [0, {t0}]")));
        }
        if let Some(u) = out_grid.iter().find(|u| !(**u > T::zero()) || !u.is_finite()) {
            return Err(Error::domain(CTX, format!("evaluation time u = {u} must be positive")));
        }
        let alpha = params.alpha;
        let coef = alpha * rgamma(T::one() - alpha) / params.lambda;
        let cells = n_hist - 1;
        let mut weights = vec![T::zero(); out_grid.len() * n_hist];
        if cells > 0 && coef != T::zero() {
            let h = t0 / T::from_usize_lossy(cells);
            let one_m_alpha = T::one() - alpha;
            for (row, &u) in weights.chunks_mut(n_hist).zip(out_grid) {
                // x_j = t0 + u − v_j runs from t0 + u (j = 0) down to u (j = cells)
                let x_at = |j: usize| {
                    if j == cells {
                        u
                    } else {
                        t0 + u - T::from_usize_lossy(j) * h
                    }
                };
                let mut x_hi = x_at(0);
                let mut p_hi = x_hi.powf(-alpha);
                let mut q_hi = x_hi.powf(one_m_alpha);
                for j in 0..cells {
                    let x_lo = x_at(j + 1);
                    let p_lo = x_lo.powf(-alpha);
                    let q_lo = x_lo.powf(one_m_alpha);
                    // ∫ x^{-1-α} and ∫ x^{-α} over [x_lo, x_hi]
                    let m0 = (p_lo - p_hi) / alpha;
                    let m1 = (q_hi - q_lo) / one_m_alpha;
                    // linear interpolant: Y(v) = Y_j + (Y_{j+1} − Y_j)(x_hi − x)/h
                    let right = (x_hi * m0 - m1) / h;
                    row[j] += m0 - right;
                    row[j + 1] += right;
                    x_hi = x_lo;
                    p_hi = p_lo;
                    q_hi = q_lo;
                }
            }
        }
        Ok(ForwardThetaWeights {
            t0,
            out_grid: out_grid.to_vec(),
            n_hist,
            coef,
            weights,
        })
    }

    pub fn out_grid(&self) -> &[T] {
        &self.out_grid
    }

    /// `θ_{t₀}(u) − θ₀(t₀+u)` for every `u` in the output grid.
    pub fn history_term(&self, z_path: &[T], out: &mut [T]) {
        debug_assert_eq!(z_path.len(), self.n_hist);
        let z_last = z_path[self.n_hist - 1];
        for (o, row) in out.iter_mut().zip(self.weights.chunks(self.n_hist)) {
            let mut s = T::zero();
            for (&w, &z) in row.iter().zip(z_path) {
                s += w * (z - z_last);
            }
            *o = self.coef * s;
        }
    }

    /// Full conditional curve values on the output grid.
    pub fn apply(&self, z_path: &[T], theta0: &impl ThetaCurve<T>) -> Result<Vec<T>> {
        if z_path.len() != self.n_hist {
            return Err(Error::domain(
                "model::forward_theta",
                format!("expected {} history samples, got {}", self.n_hist, z_path.len()),
            ));
        }
        let mut out = vec![T::zero(); self.out_grid.len()];
        self.history_term(z_path, &mut out);
        for (o, &u) in out.iter_mut().zip(&self.out_grid) {
            *o += theta0.value(self.t0 + u);
        }
        Ok(out)
    }
}

/// The conditional curve `θ_{t₀}` on `out_grid`, from `Z` sampled uniformly
/// on `[0, t₀]` (`z_path[0]` at time 0, `z_path[last]` at `t₀`).
///
/// The returned curve extrapolates with exponent `α`.
pub fn forward_theta<T: Scalar>(
    z_path: &[T],
    t0: T,
    theta0: &impl ThetaCurve<T>,
    params: &ModelParams<T>,
    out_grid: &[T],
) -> Result<ForwardCurve<T>> {
    let w = ForwardThetaWeights::new(params, t0, z_path.len(), out_grid)?;
    let values = w.apply(z_path, theta0)?;
    ForwardCurve::new(out_grid.to_vec(), values, Some(params.alpha))
}
