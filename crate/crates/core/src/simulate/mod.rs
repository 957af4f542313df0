//! Path simulation of `(log S, Z, V)` on a uniform grid.
//!
//! `Z` is advanced with a first-order Volterra–Euler scheme whose weights are
//! the exact kernel masses of each cell,
//!
//! `Z_k = Θ_k + Σ_{j<k} m_{k−j} [ −Z_j + η √V_j ΔW_j / Δt ]`,
//!
//! where `Θ_k = ∫₀^{t_k} K(t_k−s) θ(s) ds` and `m_n = ∫_{(n−1)Δt}^{nΔt} K`.
//! The log-spot uses the same increments:
//! `log S_{k+1} = log S_k − ½ V_k Δt + √V_k ΔW_k`.
//!
//! The kernel weights depend only on the lag, so they are computed once per
//! run and shared by every path. Paths are generated in parallel; the
//! counter-based generator in [`crate::rng`] makes the output independent of
//! the number of workers.

mod engine;
mod export;
mod roughness;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ForwardThetaWeights, ModelParams, ThetaCurve};
use crate::rng::PathKey;
use crate::scalar::{lit, Scalar};
use crate::specialfn::rgamma;

pub(crate) use engine::{trapezoid, Engine, Workspace};
pub use export::write_paths_csv;
pub use roughness::{estimate_roughness, ROUGHNESS_LAGS};

/// Discretisation of the Volterra equation for `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Left-point Euler with exact per-cell kernel masses.
    #[default]
    VolterraEuler,
    /// As `VolterraEuler`, but the newest cell's stochastic integral
    /// `∫ K(t_k − s) dW_s` is sampled exactly (jointly Gaussian with `ΔW`),
    /// which restores the local variance lost by averaging the singular kernel.
    Hybrid,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" | "volterra-euler" => Ok(Scheme::VolterraEuler),
            "hybrid" => Ok(Scheme::Hybrid),
            other => Err(Error::Config(format!("unknown scheme `{other}` (expected euler or hybrid)"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::VolterraEuler => "euler",
            Scheme::Hybrid => "hybrid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T: Scalar = f64> {
    /// Grid resolution; a run over `horizon` uses `max(1, round(horizon·steps_per_year))` steps.
    pub steps_per_year: usize,
    pub n_paths: usize,
    pub horizon: T,
    pub seed: u64,
    /// RNG branch, so that several runs under one seed stay independent.
    pub stream: u32,
    pub scheme: Scheme,
    /// Initial spot `S₀`.
    pub spot: T,
}

impl<T: Scalar> SimConfig<T> {
    pub fn new(horizon: T, n_paths: usize, steps_per_year: usize, seed: u64) -> Self {
        SimConfig {
            steps_per_year,
            n_paths,
            horizon,
            seed,
            stream: 0,
            scheme: Scheme::VolterraEuler,
            spot: lit(100.0),
        }
    }

    pub fn with_stream(mut self, stream: u32) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_spot(mut self, spot: T) -> Self {
        self.spot = spot;
        self
    }

    pub fn n_steps(&self) -> usize {
        let n = (self.horizon * T::from_usize_lossy(self.steps_per_year)).round();
        n.to_usize().unwrap_or(0).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_year == 0 {
            return Err(Error::Config("steps_per_year must be at least 1".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        if self.n_paths > u32::MAX as usize {
            return Err(Error::Config("n_paths exceeds the generator's path counter".into()));
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(Error::Config(format!("horizon {} must be positive", self.horizon)));
        }
        if !(self.spot > T::zero()) || !self.spot.is_finite() {
            return Err(Error::Config(format!("spot {} must be positive", self.spot)));
        }
        Ok(())
    }
}

/// Simulated paths, stored row-major (one row per path).
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble<T: Scalar = f64> {
    grid: Vec<T>,
    n_paths: usize,
    log_spot: Vec<T>,
    z: Vec<T>,
    v: Vec<T>,
    increments: Vec<T>,
    keys: Vec<PathKey>,
    params: ModelParams<T>,
}

impl<T: Scalar> PathEnsemble<T> {
    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn dt(&self) -> T {
        self.grid[1] - self.grid[0]
    }

    pub fn horizon(&self) -> T {
        self.grid[self.grid.len() - 1] - self.grid[0]
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    fn row<'a>(&self, data: &'a [T], path: usize) -> &'a [T] {
        let w = self.grid.len();
        &data[path * w..(path + 1) * w]
    }

    pub fn log_spot(&self, path: usize) -> &[T] {
        self.row(&self.log_spot, path)
    }

    pub fn z(&self, path: usize) -> &[T] {
        self.row(&self.z, path)
    }

    pub fn v(&self, path: usize) -> &[T] {
        self.row(&self.v, path)
    }

    /// Brownian increments `ΔW_k`, `k = 0..n_steps`.
    pub fn increments(&self, path: usize) -> &[T] {
        let w = self.n_steps();
        &self.increments[path * w..(path + 1) * w]
    }

    /// Generator key that reproduces `path`.
    pub fn key(&self, path: usize) -> PathKey {
        self.keys[path]
    }

    /// Grid index of `t`, which must coincide with a grid point.
    pub fn time_index(&self, t: T) -> Result<usize> {
        let t0 = self.grid[0];
        let dt = self.dt();
        let k = ((t - t0) / dt).round();
        let tol = lit::<T>(1e-9) * T::one().max(t.abs());
        match k.to_usize() {
            Some(k) if k < self.grid.len() && (self.grid[k] - t).abs() <= tol => Ok(k),
            _ => Err(Error::OffGrid { expiry: t.as_f64() }),
        }
    }

    /// `S` of every path at grid index `k`.
    pub fn spots_at(&self, k: usize) -> Vec<T> {
        (0..self.n_paths).map(|p| self.log_spot(p)[k].exp()).collect()
    }

    /// Initial spot.
    pub fn spot0(&self) -> T {
        self.log_spot[0].exp()
    }
}

fn run_engine<T: Scalar>(
    engine: &Engine<T>,
    params: ModelParams<T>,
    grid: Vec<T>,
    keys: Vec<PathKey>,
) -> PathEnsemble<T> {
    let n = engine.n_steps();
    let w = n + 1;
    let n_paths = keys.len();
    let mut log_spot = vec![T::zero(); n_paths * w];
    let mut z = vec![T::zero(); n_paths * w];
    let mut v = vec![T::zero(); n_paths * w];
    let mut increments = vec![T::zero(); n_paths * n];
    log_spot
        .par_chunks_mut(w)
        .zip(z.par_chunks_mut(w))
        .zip(v.par_chunks_mut(w))
        .zip(increments.par_chunks_mut(n))
        .zip(keys.par_iter())
        .for_each_init(
            || Workspace::new(n),
            |ws, ((((ls, zz), vv), dw), key)| engine.run(*key, ws, ls, zz, vv, dw),
        );
    PathEnsemble {
        grid,
        n_paths,
        log_spot,
        z,
        v,
        increments,
        keys,
        params,
    }
}

/// Simulates `config.n_paths` paths of the model driven by the curve `theta0`.
pub fn simulate<T: Scalar>(
    params: &ModelParams<T>,
    theta0: &impl ThetaCurve<T>,
    config: &SimConfig<T>,
) -> Result<PathEnsemble<T>> {
    params.validate()?;
    config.validate()?;
    if let Some(end) = theta0.domain_end() {
        if config.horizon > end {
            return Err(Error::Config(format!(
                "horizon {} exceeds the forward curve's domain (ends at {end}) and extrapolation is disabled",
                config.horizon
            )));
        }
    }
    let n = config.n_steps();
    let dt = config.horizon / T::from_usize_lossy(n);
    let drift = theta0.kernel_drift(&params.kernel(), dt, n);
    let engine = Engine::new(*params, drift, dt, n, config.scheme, config.spot);
    let grid = (0..=n).map(|k| T::from_usize_lossy(k) * dt).collect();
    let keys = (0..config.n_paths)
        .map(|p| PathKey::outer(config.seed, config.stream, p as u32))
        .collect();
    Ok(run_engine(&engine, *params, grid, keys))
}

/// Everything needed to restart the model at `t₀ = t_m` of an outer grid that
/// does not depend on the particular outer path: the history weights of the
/// conditional forward curve and the inner kernel masses.
///
/// The restarted `Z` solves
/// `Z_{t₀+t} = Z_{t₀} + ∫₀ᵗ K(t−s) (θ'(s) − Z_{t₀+s}) ds + ∫₀ᵗ K(t−s) η √V dW`
/// with `θ'(s) = θ_{t₀}(s) − Z_{t₀} (t₀+s)^{−α}/(λΓ(1−α))`; the extra level and
/// its compensating tail are what the `(Z_v − Z_{t₀})` form of `θ_{t₀}` omits
/// (their kernel convolutions cancel for `t₀ = 0`).
pub struct RestartPlan<T: Scalar> {
    params: ModelParams<T>,
    t0: T,
    dt: T,
    n: usize,
    weights: ForwardThetaWeights<T>,
    /// `θ₀(t₀+u_i) − tail(u_i)` at the inner midpoints (path independent).
    base: Vec<T>,
    tail_unit: Vec<T>,
    masses: Vec<T>,
    scheme: Scheme,
}

impl<T: Scalar> RestartPlan<T> {
    /// `n_hist` uniform history samples on `[0, t0]`, inner run over
    /// `horizon` with `inner_steps_per_year` resolution.
    pub fn new(
        params: &ModelParams<T>,
        theta0: &impl ThetaCurve<T>,
        t0: T,
        n_hist: usize,
        horizon: T,
        inner_steps_per_year: usize,
        scheme: Scheme,
    ) -> Result<Self> {
        params.validate()?;
        let probe = SimConfig::new(horizon, 1, inner_steps_per_year, 0);
        probe.validate()?;
        if let Some(end) = theta0.domain_end() {
            if t0 + horizon > end {
                return Err(Error::Config(format!(
                    "restart window ends at {} beyond the forward curve's domain ({end})",
                    t0 + horizon
                )));
            }
        }
        let n = probe.n_steps();
        let dt = horizon / T::from_usize_lossy(n);
        let half = lit::<T>(0.5);
        let mids: Vec<T> = (0..n).map(|i| (T::from_usize_lossy(i) + half) * dt).collect();
        let weights = ForwardThetaWeights::new(params, t0, n_hist, &mids)?;
        let g = rgamma(T::one() - params.alpha);
        let tail_unit: Vec<T> = mids
            .iter()
            .map(|&u| (t0 + u).powf(-params.alpha) * g / params.lambda)
            .collect();
        let base = mids.iter().map(|&u| theta0.value(t0 + u)).collect();
        Ok(RestartPlan {
            params: *params,
            t0,
            dt,
            n,
            weights,
            base,
            tail_unit,
            masses: params.kernel().lag_masses(dt, n),
            scheme,
        })
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn n_steps(&self) -> usize {
        self.n
    }

    /// Conditional forward curve `θ_{t₀}` at the inner cell midpoints.
    pub fn forward_curve_values(&self, z_hist: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        self.weights.history_term(z_hist, &mut out);
        for (o, b) in out.iter_mut().zip(&self.base) {
            *o += *b;
        }
        out
    }

    /// Inner drift terms `Θ'_k`, `k = 0..=n`.
    pub fn drift(&self, z_hist: &[T]) -> Vec<T> {
        let z_t0 = z_hist[z_hist.len() - 1];
        let theta: Vec<T> = self
            .forward_curve_values(z_hist)
            .into_iter()
            .zip(&self.tail_unit)
            .map(|(th, &tail)| th - z_t0 * tail)
            .collect();
        let mut out = Vec::with_capacity(self.n + 1);
        out.push(z_t0);
        for k in 1..=self.n {
            let mut s = T::zero();
            for (i, th) in theta.iter().enumerate().take(k) {
                s += self.masses[k - i] * *th;
            }
            out.push(z_t0 + s);
        }
        out
    }

    pub(crate) fn engine(&self, z_hist: &[T], spot: T) -> Engine<T> {
        Engine::new(self.params, self.drift(z_hist), self.dt, self.n, self.scheme, spot)
    }
}

/// Restarts the model from `path_index` of `ensemble` at grid index `at_step`
/// and simulates `inner.n_paths` continuations over `inner.horizon`.
///
/// Inner path `j` uses the generator key `(inner.seed, inner.stream,
/// path_index, j)`. `inner.spot` is ignored: continuations start from the
/// outer path's `S_{t₀}`.
pub fn restart<T: Scalar>(
    ensemble: &PathEnsemble<T>,
    path_index: usize,
    at_step: usize,
    params: &ModelParams<T>,
    theta0: &impl ThetaCurve<T>,
    inner: &SimConfig<T>,
) -> Result<PathEnsemble<T>> {
    inner.validate()?;
    if path_index >= ensemble.n_paths() {
        return Err(Error::domain(
            "simulate::restart",
            format!("path {path_index} out of range ({} paths)", ensemble.n_paths()),
        ));
    }
    if at_step > ensemble.n_steps() {
        return Err(Error::domain("simulate::restart", format!("step {at_step} beyond the grid")));
    }
    if ensemble.grid()[0] != T::zero() {
        return Err(Error::domain(
            "simulate::restart",
            "restarts need the full history from time 0",
        ));
    }
    let t0 = ensemble.grid()[at_step];
    let plan = RestartPlan::new(params, theta0, t0, at_step + 1, inner.horizon, inner.steps_per_year, inner.scheme)?;
    let z_hist = &ensemble.z(path_index)[..=at_step];
    let spot = ensemble.log_spot(path_index)[at_step].exp();
    let engine = plan.engine(z_hist, spot);
    let grid = (0..=plan.n).map(|k| t0 + T::from_usize_lossy(k) * plan.dt).collect();
    let keys = (0..inner.n_paths)
        .map(|j| PathKey::inner(inner.seed, inner.stream, path_index as u32, j as u32))
        .collect();
    Ok(run_engine(&engine, *params, grid, keys))
}
