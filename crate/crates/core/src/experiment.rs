//! Efficiency studies comparing the intercept-allowing regression estimator
//! with the through-origin (GREG) estimator of a mean.
//!
//! Both studies work on the mean scale under SRSWOR:
//! `lr = ybar + b_ols (Xbar - xbar)` and `ds = ybar + b_ds (Xbar - xbar)`,
//! and report `RE = 100 * MSE(ds) / MSE(lr)`.
//!
//! Work is split into independent units (fixed-size rank chunks of the
//! enumeration, or single Monte Carlo replicates) whose results are reduced in
//! a fixed order, so reports do not depend on the thread count.

use std::fmt;
use std::str::FromStr;

use crate::calibrate::negligible;
use crate::design::{enumeration_count, Combinations, FinitePopulation, DEFAULT_ENUMERATION_CAP};
use crate::error::{check_len, Error, Result};
use crate::par::Execution;
use crate::rng::NormalStream;

/// Samples per enumeration work unit.
const ENUMERATION_CHUNK: u64 = 2048;

/// An MSE below `(MSE_ZERO_TOLERANCE * scale)^2` is treated as exactly zero.
pub const MSE_ZERO_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Y,
    X,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformMap {
    Identity,
    Sqrt,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transformation {
    pub target: Target,
    pub map: TransformMap,
}

impl Transformation {
    pub const IDENTITY: Transformation = Transformation {
        target: Target::Y,
        map: TransformMap::Identity,
    };

    pub fn new(map: TransformMap, target: Target) -> Self {
        Self { target, map }
    }
}

impl fmt::Display for Transformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let map = match self.map {
            TransformMap::Identity => "id",
            TransformMap::Sqrt => "sqrt",
            TransformMap::Log => "log",
        };
        let target = match self.target {
            Target::Y => "y",
            Target::X => "x",
        };
        write!(f, "{map}:{target}")
    }
}

impl FromStr for Transformation {
    type Err = Error;

    /// Parses `map:target`, e.g. `sqrt:y` or `log:x`; a bare `id` is accepted.
    fn from_str(s: &str) -> Result<Self> {
        let (map, target) = s.split_once(':').unwrap_or((s, "y"));
        let map = match map.trim() {
            "id" | "identity" => TransformMap::Identity,
            "sqrt" => TransformMap::Sqrt,
            "log" => TransformMap::Log,
            other => return Err(Error::Config(format!("unknown transformation '{other}'"))),
        };
        let target = match target.trim() {
            "y" => Target::Y,
            "x" => Target::X,
            other => {
                return Err(Error::Config(format!(
                    "unknown transformation target '{other}'"
                )))
            }
        };
        Ok(Self { target, map })
    }
}

/// Maps the selected column pointwise; the other column is untouched.
pub fn apply_transformation(pop: &FinitePopulation, t: Transformation) -> Result<FinitePopulation> {
    let column = match t.target {
        Target::Y => pop.y(),
        Target::X => pop.x(),
    };
    let mapped = column
        .iter()
        .enumerate()
        .map(|(unit, &v)| match t.map {
            TransformMap::Identity => Ok(v),
            TransformMap::Sqrt if v >= 0.0 => Ok(v.sqrt()),
            TransformMap::Sqrt => Err(Error::Domain {
                unit,
                value: v,
                map: "sqrt",
            }),
            TransformMap::Log if v > 0.0 => Ok(v.ln()),
            TransformMap::Log => Err(Error::Domain {
                unit,
                value: v,
                map: "log",
            }),
        })
        .collect::<Result<Vec<f64>>>()?;
    match t.target {
        Target::Y => FinitePopulation::new(mapped, pop.x().to_vec()),
        Target::X => FinitePopulation::new(pop.y().to_vec(), mapped),
    }
}

/// What to do with a sample whose x values make a slope undefined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DegeneratePolicy {
    /// Drop the sample and count it in `skipped`.
    #[default]
    Skip,
    /// Use `ybar` for both estimators.
    Fallback,
}

impl FromStr for DegeneratePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skip" => Ok(DegeneratePolicy::Skip),
            "fallback" => Ok(DegeneratePolicy::Fallback),
            other => Err(Error::Config(format!(
                "unknown degenerate policy '{other}'"
            ))),
        }
    }
}

/// `100 * MSE(ds) / MSE(lr)`, with sentinels for vanishing MSEs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RelativeEfficiency {
    Finite(f64),
    /// `MSE(lr) = 0 < MSE(ds)`.
    Infinite,
    /// Both MSEs are zero.
    Undefined,
}

impl RelativeEfficiency {
    pub fn from_mse(mse_lr: f64, mse_ds: f64, scale: f64) -> Self {
        let zero = |m: f64| m <= (MSE_ZERO_TOLERANCE * scale).powi(2);
        match (zero(mse_lr), zero(mse_ds)) {
            (false, _) => RelativeEfficiency::Finite(100.0 * mse_ds / mse_lr),
            (true, false) => RelativeEfficiency::Infinite,
            (true, true) => RelativeEfficiency::Undefined,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            RelativeEfficiency::Finite(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scenario {
    Enumeration { transform: Transformation },
    MonteCarlo { rho: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub scenario: Scenario,
    pub n: usize,
    pub mse_lr: f64,
    pub mse_ds: f64,
    pub re: RelativeEfficiency,
    /// Samples (or replicates) visited, including skipped ones.
    pub sample_count: u64,
    pub skipped: u64,
    /// Population correlation of the (transformed) columns, enumeration only.
    pub rho_xy: Option<f64>,
}

impl ExperimentReport {
    pub fn re_percent(&self) -> Option<f64> {
        self.re.value()
    }
}

/// Mean-scale `(lr, ds)` estimates from one SRSWOR sample, or `None` when a
/// slope is undefined. `q` weights both slopes; `None` means all ones.
pub fn mean_estimates(y: &[f64], x: &[f64], q: Option<&[f64]>, xbar: f64) -> Option<(f64, f64)> {
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let xbar_s = x.iter().sum::<f64>() / n;
    let qi = |i: usize| q.map_or(1.0, |q| q[i]);

    let (mut s0, mut sx, mut sy, mut sxx0, mut sxy0) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..y.len() {
        let w = qi(i);
        s0 += w;
        sx += w * x[i];
        sy += w * y[i];
        sxx0 += w * x[i] * x[i];
        sxy0 += w * x[i] * y[i];
    }
    if negligible(sxx0, sxx0) {
        return None;
    }
    let (mx, my) = (sx / s0, sy / s0);
    let (mut cxx, mut cxy) = (0.0, 0.0);
    for i in 0..y.len() {
        let w = qi(i);
        cxx += w * (x[i] - mx) * (x[i] - mx);
        cxy += w * (x[i] - mx) * (y[i] - my);
    }
    if negligible(cxx, sxx0) {
        return None;
    }
    let gap = xbar - xbar_s;
    Some((ybar + cxy / cxx * gap, ybar + sxy0 / sxx0 * gap))
}

#[derive(Clone, Copy, Debug, Default)]
struct Accumulator {
    sse_lr: f64,
    sse_ds: f64,
    used: u64,
    skipped: u64,
}

impl Accumulator {
    fn add(
        &mut self,
        estimates: Option<(f64, f64)>,
        fallback: f64,
        target: f64,
        policy: DegeneratePolicy,
    ) {
        let pair = match (estimates, policy) {
            (Some(p), _) => p,
            (None, DegeneratePolicy::Fallback) => (fallback, fallback),
            (None, DegeneratePolicy::Skip) => {
                self.skipped += 1;
                return;
            }
        };
        self.sse_lr += (pair.0 - target).powi(2);
        self.sse_ds += (pair.1 - target).powi(2);
        self.used += 1;
    }

    fn merge(mut self, other: Accumulator) -> Self {
        self.sse_lr += other.sse_lr;
        self.sse_ds += other.sse_ds;
        self.used += other.used;
        self.skipped += other.skipped;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationOptions {
    pub policy: DegeneratePolicy,
    pub cap: u64,
    pub execution: Execution,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            policy: DegeneratePolicy::Skip,
            cap: DEFAULT_ENUMERATION_CAP,
            execution: Execution::default(),
        }
    }
}

/// Exact MSEs over all `C(N, n)` SRSWOR samples, each with equal weight.
/// `q_star` holds one tuning weight per population unit (empty for all ones).
pub fn exact_enumeration_re(
    pop: &FinitePopulation,
    n: usize,
    q_star: &[f64],
    opts: &EnumerationOptions,
) -> Result<ExperimentReport> {
    let count = enumeration_count(pop.len(), n, opts.cap)?;
    if !q_star.is_empty() {
        check_len("population q*", pop.len(), q_star.len())?;
    }
    let xbar = pop.mean_x();
    let target = pop.mean_y();
    let chunks = count.div_ceil(ENUMERATION_CHUNK) as usize;

    let partials = opts.execution.map_indices(chunks, |chunk| {
        let start = chunk as u64 * ENUMERATION_CHUNK;
        let end = (start + ENUMERATION_CHUNK).min(count);
        let mut cursor = Combinations::from_rank(pop.len(), n, start);
        let (mut ys, mut xs, mut qs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut acc = Accumulator::default();
        for _ in start..end {
            let subset = cursor.current().expect("rank within range");
            for (slot, &unit) in subset.iter().enumerate() {
                ys[slot] = pop.y()[unit];
                xs[slot] = pop.x()[unit];
                if !q_star.is_empty() {
                    qs[slot] = q_star[unit];
                }
            }
            let q = (!q_star.is_empty()).then_some(qs.as_slice());
            let ybar = ys.iter().sum::<f64>() / n as f64;
            acc.add(mean_estimates(&ys, &xs, q, xbar), ybar, target, opts.policy);
            cursor.advance();
        }
        acc
    });
    let acc = partials
        .into_iter()
        .fold(Accumulator::default(), Accumulator::merge);
    let scale = mean_square(pop.y());
    Ok(finish_report(
        Scenario::Enumeration {
            transform: Transformation::IDENTITY,
        },
        n,
        acc,
        count,
        scale,
        Some(pop.correlation()),
    ))
}

/// Applies `transform` to the raw population, then runs [`exact_enumeration_re`].
pub fn transformed_enumeration_re(
    raw: &FinitePopulation,
    transform: Transformation,
    n: usize,
    q_star: &[f64],
    opts: &EnumerationOptions,
) -> Result<ExperimentReport> {
    let pop = apply_transformation(raw, transform)?;
    let mut report = exact_enumeration_re(&pop, n, q_star, opts)?;
    report.scenario = Scenario::Enumeration { transform };
    Ok(report)
}

fn mean_square(v: &[f64]) -> f64 {
    (v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64).sqrt()
}

fn finish_report(
    scenario: Scenario,
    n: usize,
    acc: Accumulator,
    sample_count: u64,
    scale: f64,
    rho_xy: Option<f64>,
) -> ExperimentReport {
    let (mse_lr, mse_ds) = if acc.used == 0 {
        (f64::NAN, f64::NAN)
    } else {
        (acc.sse_lr / acc.used as f64, acc.sse_ds / acc.used as f64)
    };
    let re = if acc.used == 0 {
        RelativeEfficiency::Undefined
    } else {
        RelativeEfficiency::from_mse(mse_lr, mse_ds, scale)
    };
    ExperimentReport {
        scenario,
        n,
        mse_lr,
        mse_ds,
        re,
        sample_count,
        skipped: acc.skipped,
        rho_xy,
    }
}

/// Superpopulation simulation settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloConfig {
    pub rho: f64,
    pub n: usize,
    pub replicates: u64,
    pub sy2: f64,
    pub sx2: f64,
    pub mu_y: f64,
    pub mu_x: f64,
    pub seed: u64,
    pub policy: DegeneratePolicy,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            rho: 0.5,
            n: 25,
            replicates: 15_000,
            sy2: 50.0,
            sx2: 50.0,
            mu_y: 100.0,
            mu_x: 90.0,
            seed: 13_031_963,
            policy: DegeneratePolicy::Skip,
        }
    }
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::Config(format!(
                "rho {} must lie in (-1, 1)",
                self.rho
            )));
        }
        if self.n < 3 {
            return Err(Error::Config(format!(
                "sample size {} must be at least 3",
                self.n
            )));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if !(self.sy2 >= 0.0 && self.sx2 >= 0.0) {
            return Err(Error::Config("variances must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Independent standard normal streams for `y*` and `x*` of one replicate.
#[derive(Clone, Debug)]
pub struct PairStreams {
    y: NormalStream,
    x: NormalStream,
}

impl PairStreams {
    /// Replicate `k` reads ChaCha streams `2k` (y*) and `2k + 1` (x*).
    pub fn for_replicate(seed: u64, replicate: u64) -> Self {
        Self {
            y: NormalStream::new(seed, 2 * replicate),
            x: NormalStream::new(seed, 2 * replicate + 1),
        }
    }
}

/// `y = mu_y + sqrt(Sy2 (1 - rho^2)) y* + rho Sy x*`, `x = mu_x + Sx x*`.
pub fn generate_correlated_pair_sample(
    cfg: &MonteCarloConfig,
    streams: &mut PairStreams,
) -> (Vec<f64>, Vec<f64>) {
    let sy = cfg.sy2.sqrt();
    let sx = cfg.sx2.sqrt();
    let resid = (cfg.sy2 * (1.0 - cfg.rho * cfg.rho)).sqrt();
    let mut y = Vec::with_capacity(cfg.n);
    let mut x = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let ys = streams.y.next_standard();
        let xs = streams.x.next_standard();
        y.push(cfg.mu_y + resid * ys + cfg.rho * sy * xs);
        x.push(cfg.mu_x + sx * xs);
    }
    (y, x)
}

/// Monte Carlo MSEs against the model mean `mu_y`, with `mu_x` as the known
/// auxiliary mean. The divisor is the number of replicates actually used.
pub fn monte_carlo_re(cfg: &MonteCarloConfig, execution: Execution) -> Result<ExperimentReport> {
    cfg.validate()?;
    let per_replicate = execution.map_indices(cfg.replicates as usize, |k| {
        let mut streams = PairStreams::for_replicate(cfg.seed, k as u64);
        let (y, x) = generate_correlated_pair_sample(cfg, &mut streams);
        let ybar = y.iter().sum::<f64>() / y.len() as f64;
        (mean_estimates(&y, &x, None, cfg.mu_x), ybar)
    });
    let mut acc = Accumulator::default();
    for (estimates, ybar) in per_replicate {
        acc.add(estimates, ybar, cfg.mu_y, cfg.policy);
    }
    Ok(finish_report(
        Scenario::MonteCarlo { rho: cfg.rho },
        cfg.n,
        acc,
        cfg.replicates,
        cfg.mu_y.abs().max(cfg.sy2.sqrt()),
        None,
    ))
}

/// Runs every `(n, rho)` cell, `n`-major, sharing the seed across cells.
pub fn monte_carlo_grid(
    base: &MonteCarloConfig,
    rhos: &[f64],
    ns: &[usize],
    execution: Execution,
) -> Result<Vec<ExperimentReport>> {
    let mut out = Vec::with_capacity(rhos.len() * ns.len());
    for &n in ns {
        for &rho in rhos {
            let cfg = MonteCarloConfig { rho, n, ..*base };
            out.push(monte_carlo_re(&cfg, execution)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::{greg_total, lr_total, CalibrationSpec, ConstraintMode};
    use crate::design::{enumerate_srswor, make_srswor_sample, SrsworDesign};

    fn pop() -> FinitePopulation {
        FinitePopulation::new(
            vec![23.0, 31.0, 18.0, 40.0, 35.0, 27.0, 44.0, 20.0, 38.0, 29.0],
            vec![5.0, 8.0, 3.0, 12.0, 10.0, 7.0, 13.0, 4.0, 11.0, 6.0],
        )
        .unwrap()
    }

    #[test]
    fn transformation_parse_and_display() {
        let t: Transformation = "sqrt:y".parse().unwrap();
        assert_eq!(t, Transformation::new(TransformMap::Sqrt, Target::Y));
        assert_eq!(t.to_string(), "sqrt:y");
        assert_eq!(
            "log:x".parse::<Transformation>().unwrap().to_string(),
            "log:x"
        );
        assert!("cube:y".parse::<Transformation>().is_err());
    }

    #[test]
    fn transformations_apply() {
        let p = FinitePopulation::new(vec![4.0, 9.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(
            apply_transformation(&p, Transformation::IDENTITY).unwrap(),
            p
        );
        let s = apply_transformation(&p, "sqrt:y".parse().unwrap()).unwrap();
        assert_eq!(s.y(), &[2.0, 3.0]);
        assert_eq!(s.x(), p.x());
        assert!(matches!(
            apply_transformation(&p, "log:x".parse().unwrap()),
            Err(Error::Domain {
                unit: 0,
                map: "log",
                ..
            })
        ));
    }

    #[test]
    fn mean_scale_matches_total_scale() {
        let p = pop();
        let design = SrsworDesign::new(10, 4).unwrap();
        let idx = [0, 3, 5, 8];
        let s = make_srswor_sample(&p, &design, &idx).unwrap();
        let (lr, ds) = mean_estimates(s.y(), s.x(), None, p.mean_x()).unwrap();
        let big_n = 10.0;
        let lr_t = lr_total(
            &s,
            &CalibrationSpec::uniform(4, p.total_x(), ConstraintMode::AuxAndWeightSum),
        )
        .unwrap();
        let ds_t = greg_total(
            &s,
            &CalibrationSpec::uniform(4, p.total_x(), ConstraintMode::AuxOnly),
        )
        .unwrap();
        assert!((big_n * lr - lr_t.total).abs() < 1e-12 * lr_t.total.abs());
        assert!((big_n * ds - ds_t.total).abs() < 1e-12 * ds_t.total.abs());
    }

    #[test]
    fn enumeration_matches_materialised_oracle() {
        let p = pop();
        let report = exact_enumeration_re(&p, 4, &[], &EnumerationOptions::default()).unwrap();
        let mut lr = Vec::new();
        let mut ds = Vec::new();
        enumerate_srswor(&p, 4, |idx| {
            let y: Vec<f64> = idx.iter().map(|&i| p.y()[i]).collect();
            let x: Vec<f64> = idx.iter().map(|&i| p.x()[i]).collect();
            let ybar = y.iter().sum::<f64>() / 4.0;
            let xbar = x.iter().sum::<f64>() / 4.0;
            let b_ds = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()
                / x.iter().map(|a| a * a).sum::<f64>();
            let b_ols = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - xbar) * (b - ybar))
                .sum::<f64>()
                / x.iter().map(|a| (a - xbar).powi(2)).sum::<f64>();
            lr.push(ybar + b_ols * (p.mean_x() - xbar));
            ds.push(ybar + b_ds * (p.mean_x() - xbar));
        })
        .unwrap();
        let mse =
            |v: &[f64]| v.iter().map(|e| (e - p.mean_y()).powi(2)).sum::<f64>() / v.len() as f64;
        assert_eq!(report.sample_count, 210);
        assert!((report.mse_lr - mse(&lr)).abs() < 1e-12 * mse(&lr));
        assert!((report.mse_ds - mse(&ds)).abs() < 1e-12 * mse(&ds));
        let re = report.re_percent().unwrap();
        assert!((re * report.mse_lr - 100.0 * report.mse_ds).abs() < 1e-12 * 100.0 * report.mse_ds);
    }

    #[test]
    fn enumeration_is_thread_independent() {
        let p = pop();
        let serial = EnumerationOptions {
            execution: Execution::Sequential,
            ..Default::default()
        };
        let par = EnumerationOptions {
            execution: Execution::with_threads(4),
            ..Default::default()
        };
        let a = exact_enumeration_re(&p, 5, &[], &serial).unwrap();
        let b = exact_enumeration_re(&p, 5, &[], &par).unwrap();
        assert_eq!(a.mse_lr.to_bits(), b.mse_lr.to_bits());
        assert_eq!(a.mse_ds.to_bits(), b.mse_ds.to_bits());
    }

    #[test]
    fn affine_population_gives_infinite_re() {
        let x: Vec<f64> = (1..=9).map(f64::from).collect();
        let p = FinitePopulation::new(x.iter().map(|v| 5.0 + 2.0 * v).collect(), x).unwrap();
        let r = exact_enumeration_re(&p, 3, &[], &EnumerationOptions::default()).unwrap();
        assert_eq!(r.re, RelativeEfficiency::Infinite);
        assert!(r.mse_ds > 0.0);
    }

    #[test]
    fn proportional_population_gives_undefined_re() {
        let x: Vec<f64> = (1..=9).map(f64::from).collect();
        let p = FinitePopulation::new(x.iter().map(|v| 2.0 * v).collect(), x).unwrap();
        let r = exact_enumeration_re(&p, 3, &[], &EnumerationOptions::default()).unwrap();
        assert_eq!(r.re, RelativeEfficiency::Undefined);
    }

    #[test]
    fn degenerate_samples_follow_policy() {
        // units 0..3 share x = 1; the subset {0, 1, 2} has constant x
        let p = FinitePopulation::new(
            vec![3.0, 4.0, 5.0, 9.0, 11.0],
            vec![1.0, 1.0, 1.0, 4.0, 5.0],
        )
        .unwrap();
        let skip = exact_enumeration_re(&p, 3, &[], &EnumerationOptions::default()).unwrap();
        assert_eq!((skip.sample_count, skip.skipped), (10, 1));
        let fallback = exact_enumeration_re(
            &p,
            3,
            &[],
            &EnumerationOptions {
                policy: DegeneratePolicy::Fallback,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(fallback.skipped, 0);
        assert!(fallback.mse_lr != skip.mse_lr);
    }

    #[test]
    fn zero_y_variance_generates_constant_y() {
        let cfg = MonteCarloConfig {
            sy2: 0.0,
            n: 50,
            rho: 0.4,
            ..Default::default()
        };
        let (y, _) = generate_correlated_pair_sample(&cfg, &mut PairStreams::for_replicate(1, 0));
        assert!(y.iter().all(|&v| v == 100.0));
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let cfg = MonteCarloConfig {
            replicates: 500,
            rho: 0.3,
            ..Default::default()
        };
        let a = monte_carlo_re(&cfg, Execution::Sequential).unwrap();
        let b = monte_carlo_re(&cfg, Execution::with_threads(3)).unwrap();
        assert_eq!(a, b);
        let other =
            monte_carlo_re(&MonteCarloConfig { seed: 1, ..cfg }, Execution::Sequential).unwrap();
        assert_ne!(a.mse_lr, other.mse_lr);
    }

    #[test]
    fn single_replicate_ratio() {
        let cfg = MonteCarloConfig {
            replicates: 1,
            ..Default::default()
        };
        let r = monte_carlo_re(&cfg, Execution::Sequential).unwrap();
        let mut streams = PairStreams::for_replicate(cfg.seed, 0);
        let (y, x) = generate_correlated_pair_sample(&cfg, &mut streams);
        let (lr, ds) = mean_estimates(&y, &x, None, 90.0).unwrap();
        assert_eq!(r.mse_lr, (lr - 100.0).powi(2));
        assert_eq!(r.mse_ds, (ds - 100.0).powi(2));
        let re = r.re_percent().unwrap();
        assert!((re * r.mse_lr - 100.0 * r.mse_ds).abs() <= 1e-12 * 100.0 * r.mse_ds);
    }

    #[test]
    fn config_validation() {
        assert!(MonteCarloConfig {
            rho: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(MonteCarloConfig {
            n: 2,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(MonteCarloConfig {
            replicates: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
