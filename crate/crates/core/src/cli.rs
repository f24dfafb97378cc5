//! Command-line front end.
//!
//! Every option may also come from a TOML file given with `--config`; the
//! command line wins over the file, and the file wins over built-in defaults.
//! The default thread count comes from `SURVEYCAL_THREADS` when set.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Deserializer};

use crate::calibrate::{greg_weights, lr_weights, CalibratedWeights, CalibrationSpec};
use crate::design::{
    ht_total, DesignSample, FinitePopulation, JointInclusion, SrsworDesign, DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result};
use crate::experiment::{
    monte_carlo_grid, transformed_enumeration_re, DegeneratePolicy, EnumerationOptions,
    ExperimentReport, MonteCarloConfig, Transformation,
};
use crate::io;
use crate::par::Execution;
use crate::stratified::{
    calibrated_combined_variance, combined_lr_mean, combined_lr_variance, combined_slope,
    shy_calibrated_mean,
};
use crate::variance::{
    calibrated_lr_variance, das_tripathi_variance, ds_variance_estimate, shy_variance,
    syg_true_variance, syg_variance_estimate, PairValues, ResidualSet,
};

pub const THREADS_ENV: &str = "SURVEYCAL_THREADS";

const DEFAULT_RHOS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const DEFAULT_SIM_NS: [usize; 4] = [25, 50, 75, 100];

#[derive(Debug, Parser)]
#[command(
    name = "surveycal",
    version,
    about = "Calibration estimators for survey samples"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a population total from a sample.
    Estimate(Invocation),
    /// Estimate the variance of a total estimator.
    Variance(Invocation),
    /// Estimate a population mean from a stratified sample.
    Stratified(Invocation),
    /// Exact relative efficiency over every sample of a population.
    Enumerate(Invocation),
    /// Monte Carlo relative efficiency on a bivariate normal model.
    Simulate(Invocation),
}

impl Command {
    fn parts(&self) -> (&'static str, &Invocation) {
        match self {
            Command::Estimate(i) => ("estimate", i),
            Command::Variance(i) => ("variance", i),
            Command::Stratified(i) => ("stratified", i),
            Command::Enumerate(i) => ("enumerate", i),
            Command::Simulate(i) => ("simulate", i),
        }
    }
}

#[derive(Debug, Args)]
pub struct Invocation {
    /// TOML file with option defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub options: RunOptions,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Delimited values with full precision.
    #[default]
    Machine,
    /// Aligned table, two decimals.
    Table,
}

#[derive(Clone, Debug, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunOptions {
    /// Input data file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Field delimiter: a single character or `tab`.
    #[arg(long)]
    pub delimiter: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Estimator to use.
    #[arg(long)]
    pub method: Option<String>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub n: Option<Vec<usize>>,
    /// Tuning weights: a number for all units or a file with one value per line.
    #[arg(long)]
    pub q: Option<String>,
    /// Known population total of x.
    #[arg(long)]
    pub aux_total: Option<f64>,
    /// Population size; defaults to the number of input rows.
    #[arg(long)]
    pub population_size: Option<usize>,
    /// Population file supplying the x total, known variance, and S_x^2.
    #[arg(long)]
    pub population: Option<PathBuf>,
    /// Known variance of the HT estimator of the x total.
    #[arg(long)]
    pub known_v: Option<f64>,
    /// Known population variance of x.
    #[arg(long)]
    pub pop_x_variance: Option<f64>,
    /// Strata sidecar (TOML) with stratum sizes.
    #[arg(long)]
    pub sizes: Option<PathBuf>,
    /// Known population mean of x.
    #[arg(long)]
    pub xbar: Option<f64>,
    /// Also estimate the variance.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub variance: Option<bool>,
    /// Known variance of the stratified x mean.
    #[arg(long)]
    pub known_vx: Option<f64>,
    /// Transformations, e.g. `sqrt:y,log:x`.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub transform: Option<Vec<String>>,
    /// Correlations, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub rho: Option<Vec<f64>>,
    #[arg(long)]
    pub replicates: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Handling of samples with an undefined slope: `skip` or `fallback`.
    #[arg(long)]
    pub policy: Option<String>,
    /// Largest number of samples to enumerate.
    #[arg(long)]
    pub cap: Option<u64>,
}

fn one_or_many<'de, D, T>(de: D) -> std::result::Result<Option<Vec<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(Some(match Either::<T>::deserialize(de)? {
        Either::One(v) => vec![v],
        Either::Many(v) => v,
    }))
}

macro_rules! option_fields {
    ($m:ident) => {
        $m!(
            input,
            output,
            delimiter,
            format,
            threads,
            method,
            n,
            q,
            aux_total,
            population_size,
            population,
            known_v,
            pop_x_variance,
            sizes,
            xbar,
            variance,
            known_vx,
            transform,
            rho,
            replicates,
            seed,
            policy,
            cap
        )
    };
}

impl RunOptions {
    /// Fields set here win; the rest come from `fallback`.
    pub fn merged_over(self, fallback: RunOptions) -> RunOptions {
        macro_rules! merge {
            ($($f:ident),*) => {
                RunOptions { $($f: self.$f.or(fallback.$f)),* }
            };
        }
        option_fields!(merge)
    }

    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        macro_rules! collect {
            ($($f:ident),*) => {
                $(if self.$f.is_some() {
                    out.push(stringify!($f));
                })*
            };
        }
        option_fields!(collect);
        out
    }

    pub fn from_toml(text: &str) -> Result<RunOptions> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }
}

const COMMON: [&str; 4] = ["output", "delimiter", "format", "threads"];

fn allowed(command: &str) -> &'static [&'static str] {
    match command {
        "estimate" => &["input", "n", "method", "q", "aux_total", "population_size"],
        "variance" => &[
            "input",
            "n",
            "method",
            "q",
            "aux_total",
            "population_size",
            "population",
            "known_v",
            "pop_x_variance",
        ],
        "stratified" => &[
            "input", "sizes", "method", "q", "xbar", "variance", "known_vx",
        ],
        "enumerate" => &["input", "n", "q", "transform", "policy", "cap"],
        "simulate" => &["n", "rho", "replicates", "seed", "policy"],
        _ => &[],
    }
}

fn flag(field: &str) -> String {
    format!("--{}", field.replace('_', "-"))
}

fn require<T>(value: Option<T>, command: &str, field: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("{command} requires {}", flag(field))))
}

/// Resolved options for one subcommand.
struct Context {
    command: &'static str,
    opts: RunOptions,
    delimiter: u8,
    format: Format,
    execution: Execution,
}

impl Context {
    fn new(command: &'static str, inv: &Invocation) -> Result<Self> {
        let file = match &inv.config {
            Some(path) => RunOptions::from_toml(&std::fs::read_to_string(path)?)?,
            None => RunOptions::default(),
        };
        let opts = inv.options.clone().merged_over(file);
        let allowed = allowed(command);
        if let Some(extra) = opts
            .present()
            .into_iter()
            .find(|f| !COMMON.contains(f) && !allowed.contains(f))
        {
            return Err(Error::Config(format!(
                "{} does not apply to {command}",
                flag(extra)
            )));
        }
        let delimiter = parse_delimiter(opts.delimiter.as_deref().unwrap_or(","))?;
        let threads = match opts.threads {
            Some(t) => t,
            None => match std::env::var(THREADS_ENV) {
                Ok(v) => v.trim().parse().map_err(|_| {
                    Error::Config(format!("{THREADS_ENV}='{v}' is not a thread count"))
                })?,
                Err(_) => 0,
            },
        };
        Ok(Self {
            command,
            format: opts.format.unwrap_or_default(),
            opts,
            delimiter,
            execution: Execution::with_threads(threads),
        })
    }

    fn input(&self) -> Result<&Path> {
        require(self.opts.input.as_deref(), self.command, "input")
    }

    fn policy(&self) -> Result<DegeneratePolicy> {
        self.opts
            .policy
            .as_deref()
            .map_or(Ok(DegeneratePolicy::Skip), str::parse)
    }

    fn method(&self, default: &'static str, choices: &[&str]) -> Result<String> {
        let m = self
            .opts
            .method
            .clone()
            .unwrap_or_else(|| default.to_string());
        if !choices.contains(&m.as_str()) {
            return Err(Error::Config(format!(
                "unknown {} method '{m}' (expected one of {})",
                self.command,
                choices.join(", ")
            )));
        }
        Ok(m)
    }
}

fn parse_delimiter(s: &str) -> Result<u8> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(Error::Config(format!(
            "delimiter '{s}' must be a single ASCII character or 'tab'"
        ))),
    }
}

/// `--q`: a number shared by all `len` units, or a file with one value each.
fn resolve_q(spec: Option<&str>, len: usize) -> Result<Vec<f64>> {
    let Some(spec) = spec else {
        return Ok(vec![1.0; len]);
    };
    let values = match spec.trim().parse::<f64>() {
        Ok(v) => vec![v; len],
        Err(_) => io::read_values(Path::new(spec))?,
    };
    if values.len() != len {
        return Err(Error::LengthMismatch {
            what: "tuning weights",
            expected: len,
            found: values.len(),
        });
    }
    Ok(values)
}

/// Rows of an input file treated as an SRSWOR sample of `population_size` units.
fn read_sample(
    ctx: &Context,
    population_size: Option<usize>,
) -> Result<(DesignSample, SrsworDesign)> {
    let rows = io::read_population(ctx.input()?, ctx.delimiter)?;
    let n = rows.len();
    if let Some(ns) = &ctx.opts.n {
        if ns.as_slice() != [n] {
            return Err(Error::Config(format!(
                "--n {ns:?} does not match the {n} input rows"
            )));
        }
    }
    let big_n = population_size.unwrap_or(n);
    let design = SrsworDesign::new(big_n, n)?;
    let sample = DesignSample::new(
        (0..n).collect(),
        rows.y().to_vec(),
        rows.x().to_vec(),
        vec![design.first_order(); n],
        JointInclusion::Constant(design.joint()),
    )?;
    Ok((sample, design))
}

struct Quantities {
    rows: Vec<(&'static str, f64)>,
}

impl Quantities {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    fn push(&mut self, name: &'static str, value: f64) {
        self.rows.push((name, value));
    }

    fn render(&self, format: Format, delimiter: u8) -> String {
        let mut out = String::new();
        match format {
            Format::Machine => {
                let d = delimiter as char;
                let _ = writeln!(out, "quantity{d}value");
                for (k, v) in &self.rows {
                    let _ = writeln!(out, "{k}{d}{}", io::machine_number(*v));
                }
            }
            Format::Table => {
                for (k, v) in &self.rows {
                    let _ = writeln!(out, "{k:<24} {v:>18.2}");
                }
            }
        }
        out
    }
}

fn weight_checks(q: &mut Quantities, sample: &DesignSample, w: &CalibratedWeights) {
    q.push("weight_sum", w.w.iter().sum());
    q.push("design_weight_sum", sample.d().iter().sum());
    q.push("weighted_x_total", w.weighted_total(sample.x()));
    q.push("negative_weights", w.negative_weights as f64);
}

fn run_estimate(ctx: &Context) -> Result<String> {
    let method = ctx.method("lr", &["ht", "greg", "lr"])?;
    let (sample, design) = read_sample(ctx, ctx.opts.population_size)?;
    let mut out = Quantities::new();
    out.push("population_size", design.population_size() as f64);
    out.push("sample_size", sample.len() as f64);
    if method == "ht" {
        out.push("ht_total", ht_total(&sample));
    } else {
        let aux_total = require(ctx.opts.aux_total, ctx.command, "aux_total")?;
        let q = resolve_q(ctx.opts.q.as_deref(), sample.len())?;
        let (name, w) = if method == "greg" {
            (
                "greg_total",
                greg_weights(&sample, &CalibrationSpec::aux_only(q, aux_total)?)?,
            )
        } else {
            (
                "lr_total",
                lr_weights(&sample, &CalibrationSpec::aux_and_weight_sum(q, aux_total)?)?,
            )
        };
        out.push(name, w.weighted_total(sample.y()));
        out.push("slope", w.slope);
        out.push("distance", w.distance);
        weight_checks(&mut out, &sample, &w);
    }
    Ok(out.render(ctx.format, ctx.delimiter))
}

/// Known quantities for `variance`, from flags or a population file.
struct Known {
    population_size: Option<usize>,
    aux_total: Option<f64>,
    v: Option<f64>,
    sx2: Option<f64>,
}

fn known_quantities(ctx: &Context) -> Result<Known> {
    let mut k = Known {
        population_size: ctx.opts.population_size,
        aux_total: ctx.opts.aux_total,
        v: ctx.opts.known_v,
        sx2: ctx.opts.pop_x_variance,
    };
    if let Some(path) = &ctx.opts.population {
        let pop: FinitePopulation = io::read_population(path, ctx.delimiter)?;
        let rows = io::read_population(ctx.input()?, ctx.delimiter)?.len();
        if let Some(big_n) = ctx.opts.population_size {
            if big_n != pop.len() {
                return Err(Error::Config(format!(
                    "--population-size {big_n} disagrees with the {} population rows",
                    pop.len()
                )));
            }
        }
        let design = SrsworDesign::new(pop.len(), rows)?;
        k.population_size = Some(pop.len());
        k.aux_total = k.aux_total.or(Some(pop.total_x()));
        k.v = k.v.or(Some(syg_true_variance(&pop, &design, pop.x())?));
        k.sx2 = k.sx2.or(Some(pop.variance_x()));
    }
    Ok(k)
}

fn run_variance(ctx: &Context) -> Result<String> {
    let method = ctx.method(
        "calibrated",
        &["syg", "ds", "shy", "calibrated", "das-tripathi"],
    )?;
    let known = known_quantities(ctx)?;
    let (sample, design) = read_sample(ctx, known.population_size)?;
    let n = sample.len();
    let mut out = Quantities::new();
    out.push("population_size", design.population_size() as f64);
    out.push("sample_size", n as f64);
    let need_total = || require(known.aux_total, ctx.command, "aux_total");
    match method.as_str() {
        "syg" => out.push("syg_variance", syg_variance_estimate(&sample, sample.y())?),
        "ds" => {
            let q = resolve_q(ctx.opts.q.as_deref(), n)?;
            let w = greg_weights(
                &sample,
                &CalibrationSpec::aux_only(q.clone(), need_total()?)?,
            )?;
            let e = ResidualSet::through_origin(&sample, &q)?;
            out.push("ds_variance", ds_variance_estimate(&sample, &w, &e)?);
        }
        "shy" | "calibrated" => {
            let q = resolve_q(ctx.opts.q.as_deref(), n)?;
            let w = lr_weights(
                &sample,
                &CalibrationSpec::aux_and_weight_sum(q.clone(), need_total()?)?,
            )?;
            let e = ResidualSet::with_intercept(&sample, &q)?;
            if method == "shy" {
                out.push("shy_variance", shy_variance(&sample, &w, &e)?);
            } else {
                let v = require(known.v, ctx.command, "known_v")?;
                let c = calibrated_lr_variance(&sample, &w, &e, &PairValues::uniform(n, 1.0), v)?;
                out.push("calibrated_variance", c.estimate);
                out.push("shy_variance", c.base);
                out.push("b2", c.b2);
                out.push("known_x_variance", v);
                out.push("estimated_x_variance", c.estimated_x_variance);
            }
        }
        _ => {
            let sx2 = require(known.sx2, ctx.command, "pop_x_variance")?;
            out.push(
                "das_tripathi_variance",
                das_tripathi_variance(&sample, sx2)?,
            );
        }
    }
    Ok(out.render(ctx.format, ctx.delimiter))
}

fn run_stratified(ctx: &Context) -> Result<String> {
    let method = ctx.method("lr", &["shy", "lr"])?;
    let sizes_path = require(ctx.opts.sizes.as_deref(), ctx.command, "sizes")?;
    let sidecar = io::StrataSidecar::read(sizes_path)?;
    let sample = io::parse_stratified(std::fs::File::open(ctx.input()?)?, ctx.delimiter, &sidecar)?;
    let xbar = require(ctx.opts.xbar, ctx.command, "xbar")?;
    let q = resolve_q(ctx.opts.q.as_deref(), sample.len())?;
    let calib = if method == "shy" {
        shy_calibrated_mean(&sample, &q, xbar)?
    } else {
        combined_lr_mean(&sample, &q, xbar)?
    };
    let mut out = Quantities::new();
    out.push("strata", sample.len() as f64);
    out.push("mean", calib.mean);
    out.push("slope", calib.slope);
    out.push("weight_sum", calib.weights.iter().sum());
    if ctx.opts.variance.unwrap_or(false) {
        let b_st = combined_slope(&sample)?;
        let known_vx = match ctx.opts.known_vx {
            Some(v) => v,
            None if !sidecar.population_x_variance.is_empty() => {
                sample.known_x_variance(&io::sidecar_x_variances(&sample, &sidecar)?)?
            }
            None => {
                out.push("variance", combined_lr_variance(&sample, &calib, b_st)?);
                out.push("combined_slope", b_st);
                return Ok(out.render(ctx.format, ctx.delimiter));
            }
        };
        let v = calibrated_combined_variance(&sample, &calib, b_st, &q, known_vx)?;
        out.push("variance", v.base);
        out.push("calibrated_variance", v.estimate);
        out.push("combined_slope", b_st);
        out.push("known_x_variance", known_vx);
        out.push("estimated_x_variance", v.estimated_x_variance);
    }
    Ok(out.render(ctx.format, ctx.delimiter))
}

fn render_reports(ctx: &Context, reports: &[ExperimentReport]) -> String {
    match ctx.format {
        Format::Machine => io::write_report(reports, ctx.delimiter as char),
        Format::Table => io::write_table(reports),
    }
}

fn run_enumerate(ctx: &Context) -> Result<String> {
    let pop = io::read_population(ctx.input()?, ctx.delimiter)?;
    let ns = require(ctx.opts.n.clone(), ctx.command, "n")?;
    let transforms = match &ctx.opts.transform {
        Some(list) => list
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Transformation>>>()?,
        None => vec![Transformation::IDENTITY],
    };
    let q = match ctx.opts.q.as_deref() {
        Some(spec) => resolve_q(Some(spec), pop.len())?,
        None => Vec::new(),
    };
    let opts = EnumerationOptions {
        policy: ctx.policy()?,
        cap: ctx.opts.cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
        execution: ctx.execution,
    };
    let mut reports = Vec::new();
    for &n in &ns {
        for &t in &transforms {
            reports.push(transformed_enumeration_re(&pop, t, n, &q, &opts)?);
        }
    }
    Ok(render_reports(ctx, &reports))
}

fn run_simulate(ctx: &Context) -> Result<String> {
    let defaults = MonteCarloConfig::default();
    let base = MonteCarloConfig {
        replicates: ctx.opts.replicates.unwrap_or(defaults.replicates),
        seed: ctx.opts.seed.unwrap_or(defaults.seed),
        policy: ctx.policy()?,
        ..defaults
    };
    let rhos = ctx
        .opts
        .rho
        .clone()
        .unwrap_or_else(|| DEFAULT_RHOS.to_vec());
    let ns = ctx
        .opts
        .n
        .clone()
        .unwrap_or_else(|| DEFAULT_SIM_NS.to_vec());
    let reports = monte_carlo_grid(&base, &rhos, &ns, ctx.execution)?;
    Ok(render_reports(ctx, &reports))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub text: String,
    /// Set when the report went to a file instead of stdout.
    pub written_to: Option<PathBuf>,
}

/// Runs a parsed command, writing the report to `--output` when given.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let (name, inv) = cli.command.parts();
    let ctx = Context::new(name, inv)?;
    let text = match name {
        "estimate" => run_estimate(&ctx)?,
        "variance" => run_variance(&ctx)?,
        "stratified" => run_stratified(&ctx)?,
        "enumerate" => run_enumerate(&ctx)?,
        _ => run_simulate(&ctx)?,
    };
    if let Some(path) = &ctx.opts.output {
        std::fs::write(path, &text)?;
    }
    Ok(Outcome {
        text,
        written_to: ctx.opts.output.clone(),
    })
}

/// Entry point: parses `args`, runs, prints the report (or one error line)
/// and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: usage: {}", first.trim_start_matches("error: "));
            return 1;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            if outcome.written_to.is_none() {
                print!("{}", outcome.text);
            }
            0
        }
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {message}", e.code());
            1
        }
    }
}
