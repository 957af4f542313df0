//! Joint SPX/VIX smile calibration of `ν = (α, λ, a, b, c, Z₀)`.
//!
//! The objective is
//!
//! `F(ν) = mean_{SPX}(σ_mid − σ_ν)² + mean_{VIX}(σ_mid − σ_ν)²`,
//!
//! with model vols from Monte Carlo under common random numbers: every
//! evaluation reuses the same seed and the same stream layout, so `F` is a
//! deterministic function of `ν`. SPX expiry `i` (ascending) simulates on
//! stream `1 + i`; VIX expiry `i` uses stream `1001 + i` for the outer paths
//! and `2001 + i` for the inner ones.

mod search;
mod smile;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kv::KvFile;
use crate::model::{ModelParams, ParametricTheta, PARAM_NAMES};
use crate::pricing::{spx_smile, vix_samples, NestedConfig, VixConvention};
use crate::scalar::{lit, Scalar};
use crate::simulate::{simulate, Scheme, SimConfig};

pub use search::{grid_search, refine, GridSpec, GridStrategy, RefineOptions};
pub use smile::{InstrumentClass, Quote, SmileSet, SMILE_HEADER};

/// Largest share of quotes that may be excluded before a result is flagged
/// invalid.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.05;

const SPX_STREAM: u32 = 1;
const VIX_OUTER_STREAM: u32 = 1001;
const VIX_INNER_STREAM: u32 = 2001;

/// Monte Carlo sizes and seed of one calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub outer_paths: usize,
    pub inner_paths: usize,
    pub steps_per_year: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            outer_paths: 30_000,
            inner_paths: 300,
            steps_per_year: 500,
            seed: 1,
            scheme: Scheme::VolterraEuler,
        }
    }
}

impl McConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_paths < 2 || self.inner_paths < 1 || self.steps_per_year < 1 {
            return Err(Error::Config(format!(
                "invalid Monte Carlo sizes: outer {} inner {} steps/year {}",
                self.outer_paths, self.inner_paths, self.steps_per_year
            )));
        }
        Ok(())
    }
}

/// Model implied vol for every quote of `data` (`None` where the model price
/// cannot be inverted). A VIX expiry whose nested VIX samples are all equal
/// has no optionality; its quotes get vol `0`.
pub fn model_vols<T: Scalar>(params: &ModelParams<T>, data: &SmileSet<T>, mc: &McConfig) -> Result<Vec<Option<T>>> {
    params.validate()?;
    mc.validate()?;
    let theta = ParametricTheta::from_params(params);
    let mut out = vec![None; data.quotes.len()];
    for class in [InstrumentClass::Spx, InstrumentClass::Vix] {
        for (i, expiry) in data.expiries(class).into_iter().enumerate() {
            let idx: Vec<usize> = (0..data.quotes.len())
                .filter(|&j| data.quotes[j].class == class && data.quotes[j].expiry == expiry)
                .collect();
            let ks: Vec<T> = idx.iter().map(|&j| data.quotes[j].log_moneyness).collect();
            let stream = match class {
                InstrumentClass::Spx => SPX_STREAM,
                InstrumentClass::Vix => VIX_OUTER_STREAM,
            } + i as u32;
            let cfg = SimConfig::new(expiry, mc.outer_paths, mc.steps_per_year, mc.seed)
                .with_stream(stream)
                .with_scheme(mc.scheme);
            let ens = simulate(params, &theta, &cfg)?;
            let horizon = ens.grid()[ens.n_steps()];
            let vols: Vec<Option<T>> = match class {
                InstrumentClass::Spx => spx_smile(&ens, horizon, &ks)?.into_iter().map(|p| p.vol).collect(),
                InstrumentClass::Vix => {
                    let inner = NestedConfig {
                        inner_paths: mc.inner_paths,
                        steps_per_year: mc.steps_per_year,
                        seed: mc.seed,
                        stream: VIX_INNER_STREAM + i as u32,
                        scheme: mc.scheme,
                    };
                    let s = vix_samples(&ens, &theta, horizon, &inner, &VixConvention::default())?;
                    let lo = s.vix.iter().copied().fold(T::infinity(), T::min);
                    let hi = s.vix.iter().copied().fold(T::neg_infinity(), T::max);
                    if hi - lo <= T::zero() {
                        vec![Some(T::zero()); ks.len()]
                    } else {
                        s.smile(&ks)?.into_iter().map(|p| p.vol).collect()
                    }
                }
            };
            for (j, v) in idx.into_iter().zip(vols) {
                out[j] = v;
            }
        }
    }
    Ok(out)
}

/// Value of the objective with its ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveReport<T: Scalar = f64> {
    pub value: T,
    pub spx_term: T,
    pub vix_term: T,
    pub model_vols: Vec<Option<T>>,
    /// Quotes left out because their model price could not be inverted.
    pub excluded: usize,
}

fn assemble<T: Scalar>(data: &SmileSet<T>, model_vols: Vec<Option<T>>) -> ObjectiveReport<T> {
    let mut sums = [T::zero(); 2];
    let mut counts = [0usize; 2];
    let mut excluded = 0;
    for (q, v) in data.quotes.iter().zip(&model_vols) {
        let c = q.class as usize;
        match v {
            Some(v) => {
                let d = q.mid_vol - *v;
                sums[c] += d * d;
                counts[c] += 1;
            }
            None => excluded += 1,
        }
    }
    let term = |c: usize| {
        if counts[c] == 0 {
            T::zero()
        } else {
            sums[c] / T::from_usize_lossy(counts[c])
        }
    };
    let (spx_term, vix_term) = (term(0), term(1));
    ObjectiveReport {
        value: spx_term + vix_term,
        spx_term,
        vix_term,
        model_vols,
        excluded,
    }
}

/// Evaluates `F(ν)` with its per-class terms and the model vols.
pub fn objective_report<T: Scalar>(params: &ModelParams<T>, data: &SmileSet<T>, mc: &McConfig) -> Result<ObjectiveReport<T>> {
    data.validate()?;
    Ok(assemble(data, model_vols(params, data, mc)?))
}

/// `F(ν)`, in squared vol units. An empty instrument class contributes 0.
pub fn objective<T: Scalar>(params: &ModelParams<T>, data: &SmileSet<T>, mc: &McConfig) -> Result<T> {
    Ok(objective_report(params, data, mc)?.value)
}

/// Expiries and log-moneyness grids of a synthetic smile set.
#[derive(Debug, Clone, PartialEq)]
pub struct SmileLayout<T: Scalar = f64> {
    pub spx_expiries: Vec<T>,
    pub spx_log_moneyness: Vec<T>,
    pub vix_expiries: Vec<T>,
    pub vix_log_moneyness: Vec<T>,
}

impl<T: Scalar> SmileLayout<T> {
    /// SPX at 2–5 weeks over `[−0.2, 0.05]`, VIX at 4 weeks over `[−0.2, 0.6]`.
    pub fn standard() -> Self {
        let weeks = |w: f64| lit::<T>(7.0 * w / 365.0);
        SmileLayout {
            spx_expiries: (2..=5).map(|w| weeks(w as f64)).collect(),
            spx_log_moneyness: (0..=10).map(|i| lit(-0.2 + 0.025 * i as f64)).collect(),
            vix_expiries: vec![weeks(4.0)],
            vix_log_moneyness: (0..=8).map(|i| lit(-0.2 + 0.1 * i as f64)).collect(),
        }
    }
}

/// Half-width of the synthetic bid/ask spread, in vol units.
pub const SYNTH_HALF_SPREAD: f64 = 0.005;

/// Prices every instrument of `layout` at `params` and quotes the model vols
/// as mids with a spread of `±0.5` vol points. Degenerate VIX expiries (the
/// VIX does not move) are emitted with vol and spread 0.
pub fn synth_smiles<T: Scalar>(params: &ModelParams<T>, layout: &SmileLayout<T>, mc: &McConfig) -> Result<SmileSet<T>> {
    let mut quotes = Vec::new();
    for (class, exps, ks) in [
        (InstrumentClass::Spx, &layout.spx_expiries, &layout.spx_log_moneyness),
        (InstrumentClass::Vix, &layout.vix_expiries, &layout.vix_log_moneyness),
    ] {
        for &e in exps {
            for &k in ks {
                quotes.push(Quote {
                    class,
                    expiry: e,
                    log_moneyness: k,
                    bid_vol: None,
                    ask_vol: None,
                    mid_vol: T::zero(),
                });
            }
        }
    }
    let mut set = SmileSet::new(quotes, "synthetic")?;
    let vols = model_vols(params, &set, mc)?;
    let half = lit::<T>(SYNTH_HALF_SPREAD);
    for (q, v) in set.quotes.iter_mut().zip(vols) {
        let v = v.ok_or_else(|| {
            Error::range(
                "calibrate::synth_smiles",
                format!(
                    "{} quote at expiry {} log-moneyness {} cannot be inverted",
                    q.class, q.expiry, q.log_moneyness
                ),
            )
        })?;
        q.mid_vol = v;
        if v > T::zero() {
            q.bid_vol = Some((v - half).max(T::zero()));
            q.ask_vol = Some(v + half);
        } else {
            q.bid_vol = Some(T::zero());
            q.ask_vol = Some(T::zero());
        }
    }
    Ok(set)
}

/// One evaluated parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry<T: Scalar = f64> {
    pub params: [T; 6],
    pub objective: T,
    /// The evaluation improved on the best value found so far.
    pub accepted: bool,
}

/// Per-quote fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual<T: Scalar = f64> {
    pub quote: Quote<T>,
    pub model_vol: Option<T>,
}

impl<T: Scalar> Residual<T> {
    /// `model − mid`.
    pub fn residual(&self) -> Option<T> {
        self.model_vol.map(|v| v - self.quote.mid_vol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult<T: Scalar = f64> {
    pub params: ModelParams<T>,
    pub objective: T,
    pub spx_term: T,
    pub vix_term: T,
    pub residuals: Vec<Residual<T>>,
    /// Every distinct evaluation, in order; `trace[0]` is the initial guess.
    pub trace: Vec<TraceEntry<T>>,
    pub mc: McConfig,
    pub excluded: usize,
}

impl<T: Scalar> CalibrationResult<T> {
    pub(crate) fn from_report(
        params: ModelParams<T>,
        data: &SmileSet<T>,
        report: ObjectiveReport<T>,
        trace: Vec<TraceEntry<T>>,
        mc: McConfig,
    ) -> Self {
        let residuals = data
            .quotes
            .iter()
            .zip(&report.model_vols)
            .map(|(q, v)| Residual {
                quote: *q,
                model_vol: *v,
            })
            .collect();
        CalibrationResult {
            params,
            objective: report.value,
            spx_term: report.spx_term,
            vix_term: report.vix_term,
            residuals,
            trace,
            mc,
            excluded: report.excluded,
        }
    }

    /// Evaluates `params` once and wraps the result (trace of length 1).
    pub fn evaluate(params: &ModelParams<T>, data: &SmileSet<T>, mc: &McConfig) -> Result<Self> {
        let report = objective_report(params, data, mc)?;
        let trace = vec![TraceEntry {
            params: params.to_vec(),
            objective: report.value,
            accepted: true,
        }];
        Ok(Self::from_report(*params, data, report, trace, *mc))
    }

    /// More than 5% of the quotes were excluded.
    pub fn is_valid(&self) -> bool {
        (self.excluded as f64) <= MAX_EXCLUDED_FRACTION * self.residuals.len() as f64
    }

    /// Share of quotes whose model vol lies within the quoted spread.
    pub fn within_spread_fraction(&self) -> f64 {
        let checked: Vec<bool> = self
            .residuals
            .iter()
            .filter_map(|r| r.model_vol.and_then(|v| r.quote.within_spread(v)))
            .collect();
        let total = self.residuals.iter().filter(|r| r.quote.bid_vol.is_some() && r.quote.ask_vol.is_some()).count();
        if total == 0 {
            return 1.0;
        }
        checked.iter().filter(|&&b| b).count() as f64 / total as f64
    }

    /// Key-value report: fitted parameters, objective and sampling sizes.
    pub fn report(&self) -> KvFile {
        let mut kv = self.params.to_kv();
        kv.set("objective", self.objective.as_f64());
        kv.set("objective.spx", self.spx_term.as_f64());
        kv.set("objective.vix", self.vix_term.as_f64());
        kv.set("quotes", self.residuals.len());
        kv.set("quotes.excluded", self.excluded);
        kv.set("quotes.within_spread", self.within_spread_fraction());
        kv.set("valid", self.is_valid());
        kv.set("evaluations", self.trace.len());
        kv.set("mc.outer_paths", self.mc.outer_paths);
        kv.set("mc.inner_paths", self.mc.inner_paths);
        kv.set("mc.steps_per_year", self.mc.steps_per_year);
        kv.set("mc.seed", self.mc.seed);
        kv.set("mc.scheme", self.mc.scheme);
        kv
    }

    /// CSV of per-quote fits.
    pub fn residuals_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for h in header {
            let _ = writeln!(out, "# {h}");
        }
        let _ = writeln!(
            out,
            "class,expiry_years,log_moneyness,bid_vol,ask_vol,mid_vol,model_vol,residual,within_spread"
        );
        let opt = |x: Option<T>| x.map(|v| v.as_f64().to_string()).unwrap_or_default();
        for r in &self.residuals {
            let q = &r.quote;
            let within = r
                .model_vol
                .and_then(|v| q.within_spread(v))
                .map(|b| b.to_string())
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                q.class,
                q.expiry.as_f64(),
                q.log_moneyness.as_f64(),
                opt(q.bid_vol),
                opt(q.ask_vol),
                q.mid_vol.as_f64(),
                opt(r.model_vol),
                opt(r.residual()),
                within
            );
        }
        out
    }

    /// CSV of the search trace.
    pub fn trace_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "step,{},objective,accepted", PARAM_NAMES.join(","));
        for (i, t) in self.trace.iter().enumerate() {
            let _ = write!(out, "{i}");
            for p in t.params {
                let _ = write!(out, ",{}", p.as_f64());
            }
            let _ = writeln!(out, ",{},{}", t.objective.as_f64(), t.accepted);
        }
        out
    }
}
