use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use qrh::calibrate::{
    grid_search, refine, synth_smiles, GridSpec, GridStrategy, McConfig, RefineOptions, SmileLayout, SmileSet,
};
use qrh::kv::KvFile;
use qrh::model::{ModelParams, ParametricTheta};
use qrh::pricing::{price_spx_option_cv, spx_smile, vix_samples, NestedConfig, OptionKind, SmilePoint, VixConvention};
use qrh::simulate::{simulate as run_paths, write_paths_csv, PathEnsemble, SimConfig};

use crate::grid::{expiry_label, parse_expiries, parse_expiry, parse_log_moneyness};
use crate::{Class, CliError, Common};

// same streams as the calibration objective, so prices agree with its fits
const SPX_STREAM: u32 = 1;
const VIX_OUTER_STREAM: u32 = 1001;
const VIX_INNER_STREAM: u32 = 2001;

const SIMULATE_DEFAULT_PATHS: usize = 10;

struct Setup {
    params: ModelParams,
    theta: ParametricTheta,
    mc: McConfig,
    command: &'static str,
}

impl Setup {
    fn new(common: &Common, command: &'static str) -> Result<Self, CliError> {
        let kv = KvFile::read(&common.params)?;
        let params = ModelParams::from_kv(&kv)?;
        let mut mc = McConfig::default();
        if let Some(v) = kv.get("mc.outer_paths")? {
            mc.outer_paths = v;
        }
        if let Some(v) = kv.get("mc.inner_paths")? {
            mc.inner_paths = v;
        }
        if let Some(v) = kv.get("mc.steps_per_year")? {
            mc.steps_per_year = v;
        }
        if let Some(v) = kv.get("mc.seed")? {
            mc.seed = v;
        }
        mc.outer_paths = common.outer_paths.unwrap_or(mc.outer_paths);
        mc.inner_paths = common.inner_paths.unwrap_or(mc.inner_paths);
        mc.steps_per_year = common.steps_per_year.unwrap_or(mc.steps_per_year);
        mc.seed = common.seed.unwrap_or(mc.seed);
        mc.validate()?;
        std::fs::create_dir_all(&common.out)?;
        Ok(Setup {
            theta: ParametricTheta::from_params(&params),
            params,
            mc,
            command,
        })
    }

    /// Provenance lines written as `#` comments at the top of every output.
    fn header(&self, extra: &[String]) -> Vec<String> {
        let mc = &self.mc;
        let mut h = vec![
            format!("qrh {} {}", env!("CARGO_PKG_VERSION"), self.command),
            format!("params {}", self.params),
            format!(
                "seed={} outer_paths={} inner_paths={} steps_per_year={}",
                mc.seed, mc.outer_paths, mc.inner_paths, mc.steps_per_year
            ),
        ];
        h.extend_from_slice(extra);
        h
    }

    fn spx_paths(&self, expiry: f64, i: usize) -> Result<PathEnsemble, CliError> {
        let cfg = SimConfig::new(expiry, self.mc.outer_paths, self.mc.steps_per_year, self.mc.seed)
            .with_stream(SPX_STREAM + i as u32)
            .with_scheme(self.mc.scheme);
        Ok(run_paths(&self.params, &self.theta, &cfg)?)
    }

    fn vix_at(&self, expiry: f64, i: usize) -> Result<qrh::pricing::VixSamples, CliError> {
        let cfg = SimConfig::new(expiry, self.mc.outer_paths, self.mc.steps_per_year, self.mc.seed)
            .with_stream(VIX_OUTER_STREAM + i as u32)
            .with_scheme(self.mc.scheme);
        let ens = run_paths(&self.params, &self.theta, &cfg)?;
        let inner = NestedConfig {
            inner_paths: self.mc.inner_paths,
            steps_per_year: self.mc.steps_per_year,
            seed: self.mc.seed,
            stream: VIX_INNER_STREAM + i as u32,
            scheme: self.mc.scheme,
        };
        Ok(vix_samples(&ens, &self.theta, ens.horizon(), &inner, &VixConvention::default())?)
    }
}

fn comments(header: &[String]) -> String {
    header.iter().map(|h| format!("# {h}\n")).collect()
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn kind_name(kind: OptionKind) -> &'static str {
    match kind {
        OptionKind::Call => "CALL",
        OptionKind::Put => "PUT",
    }
}

pub fn simulate(common: &Common, horizon: &str, vix_every: usize) -> Result<(), CliError> {
    let mut setup = Setup::new(common, "simulate")?;
    let horizon = parse_expiry(horizon)?;
    setup.mc.outer_paths = common.outer_paths.unwrap_or(SIMULATE_DEFAULT_PATHS);
    let cfg = SimConfig::new(horizon, setup.mc.outer_paths, setup.mc.steps_per_year, setup.mc.seed);
    let ens = run_paths(&setup.params, &setup.theta, &cfg)?;
    let header = setup.header(&[format!("horizon={horizon}")]);
    let file = File::create(common.out.join("paths.csv"))?;
    write_paths_csv(&ens, &header, ens.n_paths(), BufWriter::new(file))?;
    if vix_every > 0 {
        let mut out = comments(&header);
        out.push_str("path,t,VIX\n");
        let conv = VixConvention::default();
        let mut rows = vec![Vec::new(); ens.n_paths()];
        for k in (0..=ens.n_steps()).step_by(vix_every) {
            let inner = NestedConfig {
                inner_paths: setup.mc.inner_paths,
                steps_per_year: setup.mc.steps_per_year,
                seed: setup.mc.seed,
                stream: VIX_INNER_STREAM + k as u32,
                scheme: setup.mc.scheme,
            };
            let t = ens.grid()[k];
            let s = vix_samples(&ens, &setup.theta, t, &inner, &conv)?;
            for (p, v) in s.vix.iter().enumerate() {
                rows[p].push((t, *v));
            }
        }
        for (p, row) in rows.iter().enumerate() {
            for (t, v) in row {
                let _ = writeln!(out, "{p},{t},{v}");
            }
        }
        write(&common.out, "vix.csv", &out)?;
    }
    Ok(())
}

pub fn price(common: &Common, expiries: &str, log_moneyness: &str, class: Class) -> Result<(), CliError> {
    let setup = Setup::new(common, "price")?;
    let expiries = parse_expiries(expiries)?;
    let ks = parse_log_moneyness(log_moneyness)?;
    let mut out = comments(&setup.header(&[]));
    out.push_str("instrument,expiry,strike_or_logmoneyness,price,std_error\n");
    for (i, &t) in expiries.iter().enumerate() {
        if class.spx() {
            let ens = setup.spx_paths(t, i)?;
            let s0 = ens.spot0();
            for &k in &ks {
                let kind = OptionKind::otm(k);
                let p = price_spx_option_cv(&ens, s0 * k.exp(), ens.horizon(), kind)?;
                let _ = writeln!(out, "SPX_{},{t},{k},{},{}", kind_name(kind), p.value, p.std_error);
            }
        }
        if class.vix() {
            let s = setup.vix_at(t, i)?;
            let f = s.future();
            let _ = writeln!(out, "VIX_FUTURE,{t},,{},{}", f.value, f.std_error);
            for &k in &ks {
                let kind = OptionKind::otm(k);
                let p = s.option(f.value * k.exp(), kind)?;
                let _ = writeln!(out, "VIX_{},{t},{k},{},{}", kind_name(kind), p.value, p.std_error);
            }
        }
    }
    write(&common.out, "prices.csv", &out)
}

fn smile_csv(header: &[String], points: &[SmilePoint]) -> String {
    let mut out = comments(header);
    out.push_str("log_moneyness,model_vol,vol_se_lo,vol_se_hi\n");
    for p in points {
        let vol = p.vol.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{vol},{},{}", p.log_moneyness, p.vol_lo, p.vol_hi);
    }
    out
}

pub fn smile(common: &Common, expiries: &str, log_moneyness: &str, class: Class) -> Result<(), CliError> {
    let setup = Setup::new(common, "smile")?;
    let expiries = parse_expiries(expiries)?;
    let ks = parse_log_moneyness(log_moneyness)?;
    for (i, &t) in expiries.iter().enumerate() {
        if class.spx() {
            let ens = setup.spx_paths(t, i)?;
            let points = spx_smile(&ens, ens.horizon(), &ks)?;
            let header = setup.header(&[format!("class=SPX expiry={t}")]);
            write(&common.out, &format!("smile_spx_{}.csv", expiry_label(t)), &smile_csv(&header, &points))?;
        }
        if class.vix() {
            let s = setup.vix_at(t, i)?;
            let f = s.future();
            let points = s.smile(&ks)?;
            let header = setup.header(&[format!(
                "class=VIX expiry={t} future={} future_std_error={}",
                f.value, f.std_error
            )]);
            write(&common.out, &format!("smile_vix_{}.csv", expiry_label(t)), &smile_csv(&header, &points))?;
        }
    }
    Ok(())
}

pub fn vix_futures(common: &Common, expiries: &str) -> Result<(), CliError> {
    let setup = Setup::new(common, "vix-futures")?;
    let expiries = parse_expiries(expiries)?;
    let mut out = comments(&setup.header(&[]));
    out.push_str("expiry,future,std_error,two_level\n");
    for (i, &t) in expiries.iter().enumerate() {
        let f = setup.vix_at(t, i)?.future();
        let two = f.two_level.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{t},{},{},{two}", f.value, f.std_error);
    }
    write(&common.out, "vix_futures.csv", &out)
}

pub fn synth(
    common: &Common,
    expiries: &str,
    log_moneyness: &str,
    vix_expiries: &str,
    vix_log_moneyness: &str,
) -> Result<(), CliError> {
    let setup = Setup::new(common, "synth")?;
    let layout = SmileLayout {
        spx_expiries: parse_expiries(expiries)?,
        spx_log_moneyness: parse_log_moneyness(log_moneyness)?,
        vix_expiries: parse_expiries(vix_expiries)?,
        vix_log_moneyness: parse_log_moneyness(vix_log_moneyness)?,
    };
    let data = synth_smiles(&setup.params, &layout, &setup.mc)?;
    write(&common.out, "smiles.csv", &data.render(&setup.header(&[])))
}

pub struct SearchArgs {
    pub grid_width: f64,
    pub grid_points: usize,
    pub rounds: usize,
    pub refine_evals: usize,
}

pub fn calibrate(common: &Common, data: &Path, search: SearchArgs) -> Result<(), CliError> {
    let setup = Setup::new(common, "calibrate")?;
    let data = SmileSet::read(data)?;
    data.validate()?;
    if search.grid_width.is_nan() || search.grid_width < 0.0 || search.grid_points == 0 {
        return Err(CliError::usage("grid width must be nonnegative and grid points positive"));
    }
    let mut spec = GridSpec::relative(&setup.params, search.grid_width);
    spec.points = search.grid_points;
    spec.strategy = match search.rounds {
        0 => GridStrategy::Cartesian,
        rounds => GridStrategy::Coordinate { rounds },
    };
    let mut result = grid_search(&setup.params, &data, &spec, &setup.mc)?;
    let grid_evaluations = result.trace.len();
    if search.refine_evals > 0 {
        let options = RefineOptions {
            max_evaluations: search.refine_evals,
            ..RefineOptions::default()
        };
        result = refine(&result, &data, &setup.mc, &options)?;
    }
    let header = setup.header(&[format!(
        "start {} grid_width={} grid_points={} rounds={} refine_evals={}",
        setup.params, search.grid_width, search.grid_points, search.rounds, search.refine_evals
    )]);
    let mut report = result.report();
    report.set("evaluations.grid", grid_evaluations);
    write(&common.out, "calibration.txt", &format!("{}{}", comments(&header), report.render()))?;
    write(
        &common.out,
        "params.txt",
        &format!("{}{}", comments(&header), result.params.to_kv().render()),
    )?;
    write(&common.out, "residuals.csv", &result.residuals_csv(&header))?;
    write(&common.out, "trace.csv", &format!("{}{}", comments(&header), result.trace_csv()))
}
