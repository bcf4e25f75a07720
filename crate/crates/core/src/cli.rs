//! Command-line front end: `generate`, `fit`, `compress`, `eval`, `bode`.
//!
//! Exit codes: 0 success, 2 bad flags or malformed input, 3 a solver did not
//! converge (its best result is still written), 4 numerical failure.
//! `PARAFIT_THREADS` (positive integer) sizes the worker pool; results do not
//! depend on it.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::bench::{imag_log_grid, lin_grid, sample_model, sample_model2, ChainSpec, ConvDiffSpec, ParametricSystem, ParametricSystem2, Penzl, PenzlSpec};
use crate::compress::{compress, IrkaConfig, IrkaReport};
use crate::coupled::{fit_fixed_basis, fit_local_models, Phase1Config};
use crate::error::{Error, Result};
use crate::io::{read_dataset, read_model, write_dataset, write_model, DatasetFile, ModelFile};
use crate::metrics::{band_energy, hinf_error_at_param, peak_magnitude, rel_rms};
use crate::multiparam::{compress_two_param, fit_two_param, TwoParamConfig};
use crate::varpro::{default_initial_poles, fit_adaptive_basis, PoleCoordinates, VarproConfig};
use crate::vecfit::VfConfig;
use crate::{ParametricBasis, C64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub const THREADS_ENV: &str = "PARAFIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "parafit", version, about = "Parametric rational fitting and H2 compression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a benchmark system into a dataset file.
    Generate(GenerateArgs),
    /// Fit a parametric model to a dataset.
    Fit(FitArgs),
    /// Compress a parametric model to a reduced order.
    Compress(CompressArgs),
    /// Per-parameter error report (CSV).
    Eval(EvalArgs),
    /// Magnitude response at one parameter value (CSV).
    Bode(BodeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Benchmark {
    Penzl,
    Chain,
    Convdiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Log,
    Lin,
}

/// Frequency band flags shared by several commands; unset values fall back
/// to per-benchmark defaults.
#[derive(Debug, Clone, Args)]
pub struct FreqArgs {
    #[arg(long)]
    pub freq_min: Option<f64>,
    #[arg(long)]
    pub freq_max: Option<f64>,
    #[arg(long)]
    pub freq_count: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub param_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub param_max: Option<f64>,
    #[arg(long)]
    pub param_count: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub param2_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub param2_max: Option<f64>,
    #[arg(long)]
    pub param2_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: Benchmark,
    #[command(flatten)]
    pub freq: FreqArgs,
    #[arg(long, value_enum, default_value = "log")]
    pub freq_spacing: Spacing,
    #[command(flatten)]
    pub param: ParamArgs,
    /// Chain masses or convection-diffusion interior nodes per direction.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub local_order: usize,
    /// `monomial:d`, `bernstein:d` or `rational:r`.
    #[arg(long)]
    pub basis: String,
    /// Basis in the second parameter (two-parameter data); defaults to `--basis`.
    #[arg(long)]
    pub basis_q: Option<String>,
    /// Optimize the rational basis poles (requires `rational:r`).
    #[arg(long)]
    pub adaptive: bool,
    /// Rational basis poles, comma separated: `5.5` is a real pole and
    /// `2.5+1i` stands for the pair `2.5 +- 1i`.
    #[arg(long, allow_hyphen_values = true)]
    pub poles: Option<String>,
    /// Minimum distance of rational poles to the parameter interval.
    #[arg(long)]
    pub guard: Option<f64>,
    #[arg(long)]
    pub real: bool,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub order: usize,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, conflicts_with = "truth", required_unless_present = "truth")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<Benchmark>,
    /// Number of evaluation parameters per parameter direction.
    #[arg(long, default_value_t = 50)]
    pub param_grid: usize,
    #[command(flatten)]
    pub param: ParamArgs,
    #[command(flatten)]
    pub freq: FreqArgs,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value = "rms,h2,hinf")]
    pub metrics: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub param: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub param2: Option<f64>,
    #[command(flatten)]
    pub freq: FreqArgs,
    #[arg(long)]
    pub truth: Option<Benchmark>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    NotConverged,
}

/// Exit code for a library error: 2 for input problems, 4 for numerics.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ShapeMismatch(_)
        | Error::InvalidInput(_)
        | Error::Format(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::OutOfRange(_)
        | Error::BasisMismatch
        | Error::NotConjugationClosed
        | Error::GuardViolation { .. }
        | Error::ProblemTooLarge(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `PARAFIT_THREADS`; `None` when unset.
pub fn threads_from_env(value: Option<&str>) -> Result<Option<usize>> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

/// Full entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let threads = match threads_from_env(std::env::var(THREADS_ENV).ok().as_deref()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(n) = threads {
        // Fails only if the global pool already exists (repeated calls in one process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli.command) {
        Ok(Status::Done) => EXIT_OK,
        Ok(Status::NotConverged) => EXIT_NOT_CONVERGED,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cmd: &Command) -> Result<Status> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a),
        Command::Compress(a) => compress_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Bode(a) => bode(a),
    }
}

// ---------------------------------------------------------------- defaults

struct Defaults {
    freq: (f64, f64, usize),
    param: (f64, f64, usize),
    size: usize,
}

fn defaults(m: Benchmark) -> Defaults {
    match m {
        Benchmark::Penzl => Defaults {
            freq: (1e-1, 1e5, 100),
            param: (1.0, 5.0, 8),
            size: 26,
        },
        Benchmark::Chain => Defaults {
            freq: (1e-3, 1e3, 80),
            param: (0.01, 0.8, 10),
            size: 200,
        },
        Benchmark::Convdiff => Defaults {
            freq: (1e2, 1e6, 100),
            param: (0.0, 1.0, 6),
            size: 20,
        },
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn freq_band(f: &FreqArgs, d: (f64, f64, usize)) -> Result<(f64, f64, usize)> {
    let lo = f.freq_min.unwrap_or(d.0);
    let hi = f.freq_max.unwrap_or(d.1);
    let n = f.freq_count.unwrap_or(d.2);
    if !(lo > 0.0 && lo < hi && hi.is_finite()) || n < 2 {
        return Err(usage("frequency band needs 0 < freq-min < freq-max and freq-count >= 2"));
    }
    Ok((lo, hi, n))
}

fn range(lo: f64, hi: f64, n: usize, what: &str) -> Result<Vec<f64>> {
    if n == 0 || !(lo.is_finite() && hi.is_finite()) || (n > 1 && !(lo < hi)) {
        return Err(usage(format!("{what} range needs min < max and a positive count")));
    }
    Ok(if n == 1 { vec![lo] } else { lin_grid(lo, hi, n) })
}

enum Truth {
    One(Box<dyn ParametricSystem>),
    Two(ConvDiffSpec),
}

fn truth_system(m: Benchmark, size: Option<usize>) -> Result<Truth> {
    let n = size.unwrap_or(defaults(m).size);
    if n == 0 && m != Benchmark::Penzl {
        return Err(usage("--size must be positive"));
    }
    Ok(match m {
        Benchmark::Penzl => Truth::One(Box::new(Penzl::new(PenzlSpec::default())?)),
        Benchmark::Chain => Truth::One(Box::new(ChainSpec { n })),
        Benchmark::Convdiff => Truth::Two(ConvDiffSpec::with_size(n)),
    })
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------- generate

fn generate(a: &GenerateArgs) -> Result<Status> {
    let d = defaults(a.model);
    let (lo, hi, n) = freq_band(&a.freq, d.freq)?;
    let freqs: Vec<C64> = match a.freq_spacing {
        Spacing::Log => imag_log_grid(lo, hi, n),
        Spacing::Lin => lin_grid(lo, hi, n).into_iter().map(|w| C64::new(0.0, w)).collect(),
    };
    let p = &a.param;
    let pp = range(p.param_min.unwrap_or(d.param.0), p.param_max.unwrap_or(d.param.1), p.param_count.unwrap_or(d.param.2), "parameter")?;
    let file = match truth_system(a.model, a.size)? {
        Truth::One(sys) => {
            if p.param2_min.is_some() || p.param2_max.is_some() || p.param2_count.is_some() {
                return Err(usage("--param2-* flags need a two-parameter model"));
            }
            let params: Vec<C64> = pp.iter().map(|x| C64::new(*x, 0.0)).collect();
            DatasetFile::OneParam(sample_model(sys.as_ref(), &freqs, &params)?)
        }
        Truth::Two(sys) => {
            let qq = range(
                p.param2_min.unwrap_or(d.param.0),
                p.param2_max.unwrap_or(d.param.1),
                p.param2_count.unwrap_or(d.param.2),
                "second parameter",
            )?;
            DatasetFile::TwoParam(sample_model2(&sys, &freqs, &pp, &qq)?)
        }
    };
    write_dataset(&a.out, &file)?;
    Ok(Status::Done)
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, PartialEq)]
enum BasisSpec {
    Monomial(usize),
    Bernstein(usize),
    Rational(usize),
}

fn parse_basis(s: &str) -> Result<BasisSpec> {
    let (kind, n) = s.split_once(':').ok_or_else(|| usage(format!("basis `{s}` is not of the form kind:n")))?;
    let n: usize = n.trim().parse().map_err(|_| usage(format!("basis size in `{s}` is not a non-negative integer")))?;
    match kind.trim() {
        "monomial" => Ok(BasisSpec::Monomial(n)),
        "bernstein" => Ok(BasisSpec::Bernstein(n)),
        "rational" if n > 0 => Ok(BasisSpec::Rational(n)),
        "rational" => Err(usage("rational basis needs at least one pole")),
        other => Err(usage(format!("unknown basis kind `{other}`"))),
    }
}

/// `5.5` is a real pole, `2.5+1i` (or `2.5-1i`) the conjugate pair `2.5 +- 1i`.
fn parse_poles(s: &str) -> Result<PoleCoordinates> {
    let bad = |t: &str| usage(format!("cannot parse pole `{t}`"));
    let mut out = PoleCoordinates::real(Vec::new());
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some(body) = tok.strip_suffix('i') {
            let split = body.char_indices().skip(1).filter(|(_, c)| *c == '+' || *c == '-').map(|(i, _)| i).last().ok_or_else(|| bad(tok))?;
            let re: f64 = body[..split].parse().map_err(|_| bad(tok))?;
            let im: f64 = body[split..].trim_start_matches('+').parse().map_err(|_| bad(tok))?;
            if im == 0.0 {
                out.real_poles.push(re);
            } else {
                out.pair_poles.push((re, im.abs()));
            }
        } else {
            out.real_poles.push(tok.parse().map_err(|_| bad(tok))?);
        }
    }
    Ok(out)
}

fn interval(values: &[f64]) -> Result<(f64, f64)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) {
        return Err(usage("parameter samples must span an interval"));
    }
    Ok((lo, hi))
}

fn build_basis(spec: &BasisSpec, (a, b): (f64, f64), poles: Option<&PoleCoordinates>, guard: f64) -> Result<ParametricBasis> {
    match spec {
        BasisSpec::Monomial(d) => ParametricBasis::monomial(*d, a, b),
        BasisSpec::Bernstein(d) => ParametricBasis::bernstein(*d, a, b),
        BasisSpec::Rational(r) => {
            let coords = poles.cloned().unwrap_or_else(|| default_initial_poles(a, b, *r, guard));
            if coords.len() != *r {
                return Err(usage(format!("{} poles given for rational:{r}", coords.len())));
            }
            ParametricBasis::rational(coords.poles(), a, b)
        }
    }
}

fn rms_line(values: impl IntoIterator<Item = f64>) -> String {
    let v: Vec<String> = values.into_iter().map(|x| format!("{x:.3e}")).collect();
    v.join(",")
}

fn fit(a: &FitArgs) -> Result<Status> {
    if a.local_order == 0 {
        return Err(usage("--local-order must be positive"));
    }
    let spec = parse_basis(&a.basis)?;
    if a.adaptive && !matches!(spec, BasisSpec::Rational(_)) {
        return Err(usage("--adaptive requires a rational basis"));
    }
    if a.poles.is_some() && !matches!(spec, BasisSpec::Rational(_)) {
        return Err(usage("--poles requires a rational basis"));
    }
    let poles = a.poles.as_deref().map(parse_poles).transpose()?;
    if let Some(g) = a.guard {
        if !(g > 0.0) {
            return Err(usage("--guard must be positive"));
        }
    }
    let mut vf = VfConfig::new(a.local_order);
    if let Some(n) = a.max_iters {
        vf.max_iters = n;
    }

    match read_dataset(&a.data)? {
        DatasetFile::OneParam(data) => {
            if a.basis_q.is_some() {
                return Err(usage("--basis-q needs two-parameter data"));
            }
            let params: Vec<f64> = data.parameters().iter().map(|p| p.re).collect();
            let iv = interval(&params)?;
            let guard = a.guard.unwrap_or(0.05 * (iv.1 - iv.0));
            let (model, rel, converged) = if a.adaptive {
                let BasisSpec::Rational(r) = spec else { unreachable!() };
                let locals = fit_local_models(&data, &[a.local_order], &vf, data.weights())?;
                let mut cfg = VarproConfig {
                    guard: Some(guard),
                    interval: Some(iv),
                    enforce_real: a.real,
                    ..VarproConfig::default()
                };
                if let Some(n) = a.max_iters {
                    cfg.max_iters = n;
                }
                let fit = fit_adaptive_basis(&data, &locals.models, r, poles, &cfg)?;
                let vf_ok = locals.reports.iter().all(|r| r.as_ref().is_ok_and(|r| r.converged));
                (fit.model, fit.rel_residual, vf_ok && fit.report.converged)
            } else {
                let basis = build_basis(&spec, iv, poles.as_ref(), guard)?;
                let mut cfg = Phase1Config::uniform(a.local_order, basis);
                cfg.vf = vf;
                cfg.enforce_real = a.real;
                let fit = fit_fixed_basis(&data, &cfg)?;
                let ok = fit.vf_reports.iter().all(|r| r.as_ref().is_ok_and(|r| r.converged));
                (fit.model, fit.rel_residual, ok)
            };
            let mut per = Vec::with_capacity(data.n_params());
            for (j, p) in data.parameters().iter().enumerate() {
                let col = data.column(j);
                let fitted: Vec<C64> = data.frequencies().iter().map(|s| model.eval(*s, *p)).collect::<Result<_>>()?;
                per.push(rel_rms(&fitted, col.as_slice()));
            }
            println!("order={} residual={rel:.6e} rms=[{}] converged={converged}", model.order(), rms_line(per));
            write_model(&a.out, &ModelFile::Parametric(model))?;
            Ok(if converged { Status::Done } else { Status::NotConverged })
        }
        DatasetFile::TwoParam(data) => {
            if a.adaptive {
                return Err(usage("--adaptive supports one-parameter data only"));
            }
            let spec_q = a.basis_q.as_deref().map(parse_basis).transpose()?.unwrap_or_else(|| spec.clone());
            let (ip, iq) = (interval(data.params_p())?, interval(data.params_q())?);
            let bp = build_basis(&spec, ip, poles.as_ref(), a.guard.unwrap_or(0.05 * (ip.1 - ip.0)))?;
            let bq = build_basis(&spec_q, iq, poles.as_ref(), a.guard.unwrap_or(0.05 * (iq.1 - iq.0)))?;
            let mut cfg = TwoParamConfig::new(a.local_order, bp, bq);
            cfg.vf = vf;
            cfg.enforce_real = a.real;
            let fit = fit_two_param(&data, &cfg)?;
            let converged = fit.vf_reports.iter().all(|r| r.converged);
            let mut per = Vec::new();
            for j in 0..data.samples().ncols() {
                let (p, q) = data.grid_point(j);
                let fitted: Vec<C64> = data
                    .frequencies()
                    .iter()
                    .map(|s| fit.model.eval(*s, C64::new(p, 0.0), C64::new(q, 0.0)))
                    .collect::<Result<_>>()?;
                let col: Vec<C64> = data.samples().column(j).iter().copied().collect();
                per.push(rel_rms(&fitted, &col));
            }
            println!("order={} residual={:.6e} rms=[{}] converged={converged}", fit.model.order(), fit.rel_residual, rms_line(per));
            write_model(&a.out, &ModelFile::Parametric2(fit.model))?;
            Ok(if converged { Status::Done } else { Status::NotConverged })
        }
    }
}

// ---------------------------------------------------------------- compress

fn compress_cmd(a: &CompressArgs) -> Result<Status> {
    if a.order == 0 {
        return Err(usage("--order must be positive"));
    }
    let mut cfg = IrkaConfig::new(a.order);
    if let Some(n) = a.max_iters {
        cfg.max_iters = n;
    }
    let report_line = |order: usize, err: f64, norm: f64, r: &IrkaReport| {
        let rel = if norm > 0.0 { err / norm } else { err };
        println!(
            "order={order} h2l2_error={err:.6e} relative={rel:.6e} iterations={} converged={}",
            r.iterations, r.converged
        );
    };
    let (file, converged) = match read_model(&a.model)? {
        ModelFile::Parametric(m) => {
            let c = compress(&m, &cfg)?;
            report_line(c.model.order(), c.error, c.input_norm, &c.report);
            (ModelFile::Compressed(c.model), c.report.converged)
        }
        ModelFile::Parametric2(m) => {
            let c = compress_two_param(&m, &cfg)?;
            report_line(c.model.order(), c.error, c.input_norm, &c.report);
            (ModelFile::Compressed2(c.model), c.report.converged)
        }
        _ => return Err(usage("model is already compressed")),
    };
    write_model(&a.out, &file)?;
    Ok(if converged { Status::Done } else { Status::NotConverged })
}

// ---------------------------------------------------------------- eval / bode

fn eval_model(m: &ModelFile, s: C64, p: f64, q: Option<f64>) -> Result<C64> {
    let (p, qc) = (C64::new(p, 0.0), q.map(|q| C64::new(q, 0.0)));
    match (m, qc) {
        (ModelFile::Parametric(m), None) => m.eval(s, p),
        (ModelFile::Compressed(m), None) => m.eval(s, p),
        (ModelFile::Parametric2(m), Some(q)) => m.eval(s, p, q),
        (ModelFile::Compressed2(m), Some(q)) => m.eval(s, p, q),
        (_, None) => Err(usage("two-parameter model needs a second parameter value")),
        (_, Some(_)) => Err(usage("one-parameter model takes a single parameter value")),
    }
}

fn is_two_param(m: &ModelFile) -> bool {
    matches!(m, ModelFile::Parametric2(_) | ModelFile::Compressed2(_))
}

fn model_domain(m: &ModelFile) -> ((f64, f64), Option<(f64, f64)>) {
    match m {
        ModelFile::Parametric(m) => (m.basis().domain(), None),
        ModelFile::Compressed(m) => (m.basis.domain(), None),
        ModelFile::Parametric2(m) => (m.basis_p().domain(), Some(m.basis_q().domain())),
        ModelFile::Compressed2(m) => (m.basis_p.domain(), Some(m.basis_q.domain())),
    }
}

#[derive(Debug, Clone, Copy)]
struct MetricSet {
    rms: bool,
    h2: bool,
    hinf: bool,
}

fn parse_metrics(s: &str) -> Result<MetricSet> {
    let mut m = MetricSet {
        rms: false,
        h2: false,
        hinf: false,
    };
    for t in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match t {
            "rms" => m.rms = true,
            "h2" => m.h2 = true,
            "hinf" => m.hinf = true,
            other => return Err(usage(format!("unknown metric `{other}`"))),
        }
    }
    Ok(m)
}

/// Error metrics of one parameter point from fitted and reference samples on
/// positive frequencies `omegas`.
fn point_metrics(fit: &[C64], truth: &[C64], omegas: &[f64]) -> [f64; 3] {
    let err: Vec<C64> = fit.iter().zip(truth).map(|(a, b)| a - b).collect();
    let rms = rel_rms(fit, truth);
    let energy = |v: &[C64]| {
        let mut acc = 0.0;
        for k in 1..omegas.len() {
            acc += 0.5 * (v[k].norm_sqr() * omegas[k] + v[k - 1].norm_sqr() * omegas[k - 1]) * (omegas[k] / omegas[k - 1]).ln();
        }
        acc
    };
    let (num, den) = (energy(&err), energy(truth));
    let h2 = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    let peak = truth.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let emax = err.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let hinf = if peak > 0.0 { emax / peak } else { emax };
    [rms, h2, hinf]
}

fn metric_row(params: &[f64], vals: [f64; 3], sel: MetricSet) -> String {
    let mut row: Vec<String> = params.iter().map(|p| fmt(*p)).collect();
    for (on, v) in [(sel.rms, vals[0]), (sel.h2, vals[1]), (sel.hinf, vals[2])] {
        row.push(if on { fmt(v) } else { "nan".into() });
    }
    row.join(",")
}

fn write_csv(path: &std::path::Path, header: &str, rows: &[String]) -> Result<()> {
    let mut out = String::with_capacity(rows.iter().map(|r| r.len() + 1).sum::<usize>() + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{r}");
    }
    Ok(std::fs::write(path, out)?)
}

fn eval(a: &EvalArgs) -> Result<Status> {
    let model = read_model(&a.model)?;
    let sel = parse_metrics(&a.metrics)?;
    let two = is_two_param(&model);
    let header = if two { "param,param2,rms,h2_rel,hinf_rel" } else { "param,rms,h2_rel,hinf_rel" };

    // Parameter points with reference samples on a positive frequency grid.
    let rows: Vec<String> = if let Some(path) = &a.data {
        let data = read_dataset(path)?;
        let (freqs, samples, points): (&[C64], _, Vec<(f64, Option<f64>)>) = match &data {
            DatasetFile::OneParam(d) => (d.frequencies(), d.samples(), d.parameters().iter().map(|p| (p.re, None)).collect()),
            DatasetFile::TwoParam(d) => {
                (d.frequencies(), d.samples(), (0..d.samples().ncols()).map(|j| d.grid_point(j)).map(|(p, q)| (p, Some(q))).collect())
            }
        };
        if points[0].1.is_some() != two {
            return Err(usage("model and dataset have different parameter counts"));
        }
        let omegas: Vec<f64> = freqs.iter().map(|s| s.im).collect();
        if freqs.iter().any(|s| s.re != 0.0) || omegas.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) || omegas[0] <= 0.0 {
            return Err(usage("eval --data needs increasing positive imaginary-axis frequencies"));
        }
        points
            .par_iter()
            .enumerate()
            .map(|(j, (p, q))| {
                let fit: Vec<C64> = freqs.iter().map(|s| eval_model(&model, *s, *p, *q)).collect::<Result<_>>()?;
                let truth: Vec<C64> = samples.column(j).iter().copied().collect();
                let ps: Vec<f64> = std::iter::once(*p).chain(*q).collect();
                Ok(metric_row(&ps, point_metrics(&fit, &truth, &omegas), sel))
            })
            .collect::<Result<_>>()?
    } else {
        let bench = a.truth.expect("clap enforces --data or --truth");
        let d = defaults(bench);
        let (lo, hi, n) = freq_band(&a.freq, d.freq)?;
        let omegas = crate::bench::log_grid(lo, hi, n);
        let (dp, dq) = model_domain(&model);
        let p = &a.param;
        let pp = range(p.param_min.unwrap_or(dp.0), p.param_max.unwrap_or(dp.1), p.param_count.unwrap_or(a.param_grid), "parameter")?;
        let truth = truth_system(bench, a.size)?;
        let points: Vec<(f64, Option<f64>)> = match (&truth, dq) {
            (Truth::One(_), None) => pp.iter().map(|x| (*x, None)).collect(),
            (Truth::Two(_), Some(dq)) => {
                let qq = range(p.param2_min.unwrap_or(dq.0), p.param2_max.unwrap_or(dq.1), p.param2_count.unwrap_or(a.param_grid), "second parameter")?;
                pp.iter().flat_map(|x| qq.iter().map(move |y| (*x, Some(*y)))).collect()
            }
            _ => return Err(usage("model and reference system have different parameter counts")),
        };
        let reference = |s: C64, p: f64, q: Option<f64>| -> Result<C64> {
            match (&truth, q) {
                (Truth::One(sys), _) => sys.eval(s, C64::new(p, 0.0)),
                (Truth::Two(sys), Some(q)) => sys.eval2(s, p, q),
                (Truth::Two(_), None) => unreachable!(),
            }
        };
        points
            .par_iter()
            .map(|(p, q)| {
                let fitf = |s: C64| eval_model(&model, s, *p, *q);
                let truef = |s: C64| reference(s, *p, *q);
                let mut fit = Vec::with_capacity(omegas.len());
                let mut tru = Vec::with_capacity(omegas.len());
                for w in &omegas {
                    let s = C64::new(0.0, *w);
                    fit.push(fitf(s)?);
                    tru.push(truef(s)?);
                }
                let mut vals = point_metrics(&fit, &tru, &omegas);
                if sel.h2 {
                    let num = band_energy(|s| Ok(fitf(s)? - truef(s)?), &omegas)?;
                    let den = band_energy(truef, &omegas)?;
                    vals[1] = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
                }
                if sel.hinf {
                    let peak = peak_magnitude(truef, &omegas)?;
                    let e = hinf_error_at_param(fitf, truef, &omegas)?;
                    vals[2] = if peak > 0.0 { e / peak } else { e };
                }
                let ps: Vec<f64> = std::iter::once(*p).chain(*q).collect();
                Ok(metric_row(&ps, vals, sel))
            })
            .collect::<Result<_>>()?
    };
    write_csv(&a.out, header, &rows)?;
    Ok(Status::Done)
}

fn bode(a: &BodeArgs) -> Result<Status> {
    let model = read_model(&a.model)?;
    let d = defaults(a.truth.unwrap_or(Benchmark::Chain));
    let (lo, hi, n) = freq_band(&a.freq, d.freq)?;
    let omegas = crate::bench::log_grid(lo, hi, n);
    let truth = a.truth.map(|b| truth_system(b, a.size)).transpose()?;
    let mut rows = Vec::with_capacity(n);
    for w in &omegas {
        let s = C64::new(0.0, *w);
        let fit = eval_model(&model, s, a.param, a.param2)?;
        let row = match &truth {
            None => format!("{},{}", fmt(*w), fmt(fit.norm())),
            Some(t) => {
                let tv = match (t, a.param2) {
                    (Truth::One(sys), None) => sys.eval(s, C64::new(a.param, 0.0))?,
                    (Truth::Two(sys), Some(q)) => sys.eval2(s, a.param, q)?,
                    _ => return Err(usage("model and reference system have different parameter counts")),
                };
                format!("{},{},{},{}", fmt(*w), fmt(tv.norm()), fmt(fit.norm()), fmt((fit - tv).norm()))
            }
        };
        rows.push(row);
    }
    let header = if truth.is_some() { "omega,abs_true,abs_fit,abs_err" } else { "omega,abs_fit" };
    write_csv(&a.out, header, &rows)?;
    Ok(Status::Done)
}
