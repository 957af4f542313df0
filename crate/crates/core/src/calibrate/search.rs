use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::{lit, Scalar};

use super::{objective_report, CalibrationResult, McConfig, ObjectiveReport, SmileSet, TraceEntry};

/// Box the search stays in; the open bounds of `α` and the positivity of
/// `λ` and `c` are kept a small distance away from the boundary.
const LOWER: [f64; 6] = [0.5 + 1e-4, 1e-4, 0.0, 0.0, 1e-6, f64::NEG_INFINITY];
const UPPER: [f64; 6] = [1.0 - 1e-4, f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridStrategy {
    /// Sweep one coordinate at a time, moving to the best point after each
    /// sweep; later rounds shrink the half-widths around the current best.
    Coordinate { rounds: usize },
    /// Every point of the Cartesian product (`points⁶` evaluations).
    Cartesian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T: Scalar = f64> {
    /// Half-width of the grid along `[α, λ, a, b, c, Z₀]`.
    pub half_widths: [T; 6],
    /// Points per axis (odd counts keep the centre on the grid).
    pub points: usize,
    pub strategy: GridStrategy,
    /// Half-width multiplier between coordinate rounds.
    pub shrink: T,
}

impl<T: Scalar> GridSpec<T> {
    /// Two coordinate rounds of 5 points with half-widths `frac·|ν₀ᵢ|`
    /// (`frac·(α₀ − 1/2)` for `α`).
    pub fn relative(nu0: &ModelParams<T>, frac: T) -> Self {
        let v = nu0.to_vec();
        let mut hw = [T::zero(); 6];
        for i in 0..6 {
            hw[i] = frac * v[i].abs();
        }
        hw[0] = frac * (v[0] - lit(0.5));
        GridSpec {
            half_widths: hw,
            points: 5,
            strategy: GridStrategy::Coordinate { rounds: 2 },
            shrink: lit(0.5),
        }
    }

    fn axis(&self, center: T, hw: T) -> Vec<T> {
        if self.points <= 1 || hw == T::zero() {
            return vec![center];
        }
        let m = T::from_usize_lossy(self.points - 1);
        // the middle node is the center itself so the memo recognises it
        (0..self.points)
            .map(|j| {
                if 2 * j + 1 == self.points {
                    center
                } else {
                    center + hw * (lit::<T>(2.0) * T::from_usize_lossy(j) / m - T::one())
                }
            })
            .collect()
    }
}

fn clamp<T: Scalar>(v: [T; 6]) -> [T; 6] {
    let mut out = v;
    for i in 0..6 {
        out[i] = out[i].max(T::lit(LOWER[i])).min(T::lit(UPPER[i]));
    }
    out
}

fn feasible<T: Scalar>(base: &ModelParams<T>, v: [T; 6]) -> Result<ModelParams<T>> {
    let p = base.with_vec(v);
    p.validate().map_err(|e| Error::InfeasibleGrid(e.to_string()))?;
    if !(p.alpha < T::one()) {
        return Err(Error::InfeasibleGrid("alpha must stay below 1".into()));
    }
    Ok(p)
}

/// Memoised objective with an evaluation trace.
struct Evaluator<'a, T: Scalar> {
    base: ModelParams<T>,
    data: &'a SmileSet<T>,
    mc: &'a McConfig,
    cache: HashMap<[u64; 6], (T, usize)>,
    reports: Vec<ObjectiveReport<T>>,
    trace: Vec<TraceEntry<T>>,
    best: Option<usize>,
}

fn bits<T: Scalar>(v: &[T; 6]) -> [u64; 6] {
    let mut b = [0u64; 6];
    for i in 0..6 {
        b[i] = v[i].as_f64().to_bits();
    }
    b
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    fn new(base: ModelParams<T>, data: &'a SmileSet<T>, mc: &'a McConfig) -> Self {
        Evaluator {
            base,
            data,
            mc,
            cache: HashMap::new(),
            reports: Vec::new(),
            trace: Vec::new(),
            best: None,
        }
    }

    /// Evaluates a batch (in parallel) and returns the objectives in order.
    fn eval(&mut self, points: &[[T; 6]]) -> Result<Vec<T>> {
        let mut fresh: Vec<[T; 6]> = Vec::new();
        for p in points {
            if !self.cache.contains_key(&bits(p)) && !fresh.iter().any(|q| bits(q) == bits(p)) {
                fresh.push(*p);
            }
        }
        let reports: Vec<Result<ObjectiveReport<T>>> = fresh
            .par_iter()
            .map(|v| objective_report(&self.base.with_vec(*v), self.data, self.mc))
            .collect();
        for (v, r) in fresh.into_iter().zip(reports) {
            let r = r?;
            let f = r.value;
            let idx = self.trace.len();
            let accepted = match self.best {
                None => true,
                Some(b) => f < self.trace[b].objective,
            };
            if accepted {
                self.best = Some(idx);
            }
            self.trace.push(TraceEntry {
                params: v,
                objective: f,
                accepted,
            });
            self.reports.push(r);
            self.cache.insert(bits(&v), (f, idx));
        }
        Ok(points.iter().map(|p| self.cache[&bits(p)].0).collect())
    }

    fn best(&self) -> ([T; 6], T) {
        let b = self.best.expect("at least one evaluation");
        (self.trace[b].params, self.trace[b].objective)
    }

    fn finish(self) -> CalibrationResult<T> {
        let b = self.best.expect("at least one evaluation");
        let params = self.base.with_vec(self.trace[b].params);
        let report = self.reports[b].clone();
        CalibrationResult::from_report(params, self.data, report, self.trace, *self.mc)
    }

    fn seed_from(&mut self, start: &CalibrationResult<T>) {
        for t in &start.trace {
            self.cache.insert(bits(&t.params), (t.objective, usize::MAX));
        }
    }
}

/// Minimises the objective over a grid centred on `nu0`.
///
/// Every point of the first grid must satisfy the parameter invariants;
/// later coordinate rounds are clamped into the admissible box. The returned
/// objective is the minimum over the trace and never exceeds `F(ν₀)`.
pub fn grid_search<T: Scalar>(
    nu0: &ModelParams<T>,
    data: &SmileSet<T>,
    spec: &GridSpec<T>,
    mc: &McConfig,
) -> Result<CalibrationResult<T>> {
    data.validate()?;
    mc.validate()?;
    feasible(nu0, nu0.to_vec())?;
    let v0 = nu0.to_vec();
    for i in 0..6 {
        if !(spec.half_widths[i] >= T::zero()) {
            return Err(Error::InfeasibleGrid(format!("negative half-width on axis {i}")));
        }
        for x in spec.axis(v0[i], spec.half_widths[i]) {
            let mut v = v0;
            v[i] = x;
            feasible(nu0, v)?;
        }
    }
    let mut ev = Evaluator::new(*nu0, data, mc);
    ev.eval(&[v0])?;
    match spec.strategy {
        GridStrategy::Cartesian => {
            let axes: Vec<Vec<T>> = (0..6).map(|i| spec.axis(v0[i], spec.half_widths[i])).collect();
            let mut points = vec![v0];
            for (i, axis) in axes.iter().enumerate() {
                points = points
                    .iter()
                    .flat_map(|p| {
                        axis.iter().map(move |&x| {
                            let mut q = *p;
                            q[i] = x;
                            q
                        })
                    })
                    .collect();
            }
            ev.eval(&points)?;
        }
        GridStrategy::Coordinate { rounds } => {
            let mut hw = spec.half_widths;
            for round in 0..rounds.max(1) {
                for i in 0..6 {
                    let (center, _) = ev.best();
                    let points: Vec<[T; 6]> = spec
                        .axis(center[i], hw[i])
                        .into_iter()
                        .map(|x| {
                            let mut q = center;
                            q[i] = x;
                            if round > 0 {
                                clamp(q)
                            } else {
                                q
                            }
                        })
                        .collect();
                    ev.eval(&points)?;
                }
                for h in hw.iter_mut() {
                    *h *= spec.shrink;
                }
            }
        }
    }
    Ok(ev.finish())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions<T: Scalar = f64> {
    /// Initial simplex edge relative to `|νᵢ|` (absolute `1e-3` floor).
    pub initial_step: T,
    pub max_evaluations: usize,
    /// Stop once the simplex objective spread falls below this.
    pub f_tol: T,
    /// Stop once every vertex is this close (relative) to the best one.
    pub x_tol: T,
}

impl<T: Scalar> Default for RefineOptions<T> {
    fn default() -> Self {
        RefineOptions {
            initial_step: lit(0.05),
            max_evaluations: 300,
            f_tol: lit(1e-12),
            x_tol: lit(1e-6),
        }
    }
}

/// Folds `x` back into `[lo, hi]` by mirror reflection, then clamps.
fn reflect<T: Scalar>(v: [T; 6]) -> [T; 6] {
    let mut out = v;
    for i in 0..6 {
        let lo = T::lit(LOWER[i]);
        let hi = T::lit(UPPER[i]);
        if out[i] < lo {
            out[i] = lo + (lo - out[i]);
        }
        if out[i] > hi {
            out[i] = hi - (out[i] - hi);
        }
        out[i] = out[i].max(lo).min(hi);
    }
    out
}

/// Bounded Nelder–Mead descent from `start.params` under the same common
/// random numbers. The result is never worse than `start`.
pub fn refine<T: Scalar>(
    start: &CalibrationResult<T>,
    data: &SmileSet<T>,
    mc: &McConfig,
    options: &RefineOptions<T>,
) -> Result<CalibrationResult<T>> {
    data.validate()?;
    let x0 = start.params.to_vec();
    let mut ev = Evaluator::new(start.params, data, mc);
    ev.seed_from(start);
    // the start itself is the first accepted point
    ev.cache.remove(&bits(&x0));
    ev.eval(&[x0])?;

    let n = 6;
    let mut simplex: Vec<[T; 6]> = vec![x0];
    for i in 0..n {
        let mut v = x0;
        let step = (options.initial_step * x0[i].abs()).max(lit(1e-3));
        v[i] += step;
        if reflect(v)[i] == x0[i] {
            v[i] = x0[i] - step;
        }
        simplex.push(reflect(v));
    }
    let mut fs = ev.eval(&simplex)?;
    let (alpha, gamma, rho, sigma) = (T::one(), lit::<T>(2.0), lit::<T>(0.5), lit::<T>(0.5));

    while ev.trace.len() < options.max_evaluations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fs[a].partial_cmp(&fs[b]).unwrap().then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i]).collect();
        fs = order.iter().map(|&i| fs[i]).collect();

        let spread = fs[n] - fs[0];
        let size = simplex[1..].iter().fold(T::zero(), |m, v| {
            (0..n).fold(m, |m, i| m.max((v[i] - simplex[0][i]).abs() / simplex[0][i].abs().max(lit(1e-3))))
        });
        if spread <= options.f_tol || size <= options.x_tol {
            break;
        }

        let mut centroid = [T::zero(); 6];
        for v in &simplex[..n] {
            for i in 0..n {
                centroid[i] += v[i] / T::from_usize_lossy(n);
            }
        }
        let along = |t: T| {
            let mut out = [T::zero(); 6];
            for i in 0..n {
                out[i] = centroid[i] + t * (simplex[n][i] - centroid[i]);
            }
            reflect(out)
        };
        let xr = along(-alpha);
        let fr = ev.eval(&[xr])?[0];
        if fr < fs[0] {
            let xe = along(-alpha * gamma);
            let fe = ev.eval(&[xe])?[0];
            if fe < fr {
                simplex[n] = xe;
                fs[n] = fe;
            } else {
                simplex[n] = xr;
                fs[n] = fr;
            }
        } else if fr < fs[n - 1] {
            simplex[n] = xr;
            fs[n] = fr;
        } else {
            let (xc, fc) = if fr < fs[n] {
                let xc = along(-alpha * rho);
                (xc, ev.eval(&[xc])?[0])
            } else {
                let xc = along(rho);
                (xc, ev.eval(&[xc])?[0])
            };
            if fc < fs[n].min(fr) {
                simplex[n] = xc;
                fs[n] = fc;
            } else {
                let best = simplex[0];
                let shrunk: Vec<[T; 6]> = simplex[1..]
                    .iter()
                    .map(|v| {
                        let mut out = best;
                        for i in 0..n {
                            out[i] = best[i] + sigma * (v[i] - best[i]);
                        }
                        reflect(out)
                    })
                    .collect();
                let fsh = ev.eval(&shrunk)?;
                for (k, (v, f)) in shrunk.into_iter().zip(fsh).enumerate() {
                    simplex[k + 1] = v;
                    fs[k + 1] = f;
                }
            }
        }
    }

    let mut result = ev.finish();
    if !(result.objective < start.objective) {
        let mut kept = start.clone();
        kept.trace.extend(result.trace.into_iter().skip(1).map(|mut t| {
            t.accepted = false;
            t
        }));
        return Ok(kept);
    }
    let mut trace = start.trace.clone();
    let best_before = start.objective;
    let mut running = best_before;
    for mut t in result.trace.into_iter().skip(1) {
        t.accepted = t.objective < running;
        if t.accepted {
            running = t.objective;
        }
        trace.push(t);
    }
    result.trace = trace;
    Ok(result)
}
