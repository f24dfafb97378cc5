//! Finite populations, sampling designs and drawn samples.
//!
//! Unit ids are 0-based positions into the population. A [`DesignSample`]
//! carries everything the estimators need: observed `(y, x)`, first-order
//! inclusion probabilities, joint inclusion probabilities and design weights
//! `d_i = 1 / pi_i`. Only SRSWOR has a built-in constructor; other designs are
//! expressed by supplying the probabilities to [`DesignSample::new`].

use std::collections::{BTreeMap, HashSet};

use crate::error::{check_len, Error, Result};

/// Default upper bound on the number of samples an exhaustive enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct FinitePopulation {
    y: Vec<f64>,
    x: Vec<f64>,
}

impl FinitePopulation {
    pub fn new(y: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        check_len("population x column", y.len(), x.len())?;
        if y.len() < 2 {
            return Err(Error::DegenerateDesign(format!(
                "population needs at least 2 units, got {}",
                y.len()
            )));
        }
        if let Some(i) = y.iter().chain(&x).position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "non-finite value at unit {}",
                i % y.len()
            )));
        }
        Ok(Self { y, x })
    }

    pub fn from_pairs<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Result<Self> {
        let (y, x) = pairs.into_iter().unzip();
        Self::new(y, x)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn total_y(&self) -> f64 {
        self.y.iter().sum()
    }

    pub fn total_x(&self) -> f64 {
        self.x.iter().sum()
    }

    pub fn mean_y(&self) -> f64 {
        self.total_y() / self.len() as f64
    }

    pub fn mean_x(&self) -> f64 {
        self.total_x() / self.len() as f64
    }

    /// Population variance of x with the `N - 1` divisor.
    pub fn variance_x(&self) -> f64 {
        let m = self.mean_x();
        self.x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (self.len() - 1) as f64
    }

    /// Pearson correlation of the y and x columns.
    pub fn correlation(&self) -> f64 {
        let (my, mx) = (self.mean_y(), self.mean_x());
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (y, x) in self.y.iter().zip(&self.x) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx).powi(2);
            syy += (y - my).powi(2);
        }
        sxy / (sxx * syy).sqrt()
    }
}

/// Joint inclusion probabilities, keyed by position within the sample.
#[derive(Clone, Debug, PartialEq)]
pub enum JointInclusion {
    /// Every pair shares the same probability (SRSWOR).
    Constant(f64),
    /// Explicit unordered pairs `(a, b)` with `a < b`. Missing pairs are allowed
    /// at construction but rejected by the pairwise variance estimators.
    Pairs(BTreeMap<(usize, usize), f64>),
}

#[derive(Clone, Debug)]
pub struct DesignSample {
    indices: Vec<usize>,
    y: Vec<f64>,
    x: Vec<f64>,
    pi: Vec<f64>,
    joint: JointInclusion,
    d: Vec<f64>,
}

impl DesignSample {
    pub fn new(
        indices: Vec<usize>,
        y: Vec<f64>,
        x: Vec<f64>,
        pi: Vec<f64>,
        joint: JointInclusion,
    ) -> Result<Self> {
        let n = indices.len();
        check_len("sample y", n, y.len())?;
        check_len("sample x", n, x.len())?;
        check_len("first-order probabilities", n, pi.len())?;
        if n < 2 {
            return Err(Error::DegenerateDesign(format!(
                "sample size must be at least 2, got {n}"
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for &id in &indices {
            if !seen.insert(id) {
                return Err(Error::InvalidSample(format!("duplicate unit id {id}")));
            }
        }
        for (a, &p) in pi.iter().enumerate() {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidSample(format!(
                    "inclusion probability {p} of sample unit {a} is outside (0, 1]"
                )));
            }
        }
        let check_pair = |a: usize, b: usize, p: f64| -> Result<()> {
            if !(p > 0.0 && p <= pi[a].min(pi[b])) {
                return Err(Error::InvalidSample(format!(
                    "joint probability {p} for pair ({a}, {b}) is outside (0, min(pi_a, pi_b)]"
                )));
            }
            Ok(())
        };
        match &joint {
            JointInclusion::Constant(p) => {
                let min_pi = pi.iter().copied().fold(f64::INFINITY, f64::min);
                if !(*p > 0.0 && *p <= min_pi) {
                    return Err(Error::InvalidSample(format!(
                        "joint probability {p} is outside (0, min pi]"
                    )));
                }
            }
            JointInclusion::Pairs(map) => {
                for (&(a, b), &p) in map {
                    if a >= b || b >= n {
                        return Err(Error::InvalidSample(format!(
                            "joint probability key ({a}, {b}) must satisfy a < b < {n}"
                        )));
                    }
                    check_pair(a, b, p)?;
                }
            }
        }
        let d = pi.iter().map(|p| 1.0 / p).collect();
        Ok(Self {
            indices,
            y,
            x,
            pi,
            joint,
            d,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Design weights `1 / pi_i`.
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn joint_inclusion(&self) -> &JointInclusion {
        &self.joint
    }

    /// Joint inclusion probability of sample positions `a != b`.
    pub fn joint(&self, a: usize, b: usize) -> Option<f64> {
        match &self.joint {
            JointInclusion::Constant(p) => Some(*p),
            JointInclusion::Pairs(map) => map.get(&(a.min(b), a.max(b))).copied(),
        }
    }

    /// Sen-Yates-Grundy pair weight `(pi_a pi_b - pi_ab) / pi_ab`.
    pub fn pair_weight(&self, a: usize, b: usize) -> Result<f64> {
        let pab = self
            .joint(a, b)
            .ok_or(Error::IncompleteDesign { i: a, j: b })?;
        Ok((self.pi[a] * self.pi[b] - pab) / pab)
    }

    /// Same units with a replacement y column; used for variance of other study variables.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        check_len("replacement y", self.len(), y.len())?;
        Ok(Self { y, ..self.clone() })
    }
}

/// Simple random sampling without replacement of `sample_size` out of `population_size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SrsworDesign {
    population_size: usize,
    sample_size: usize,
}

impl SrsworDesign {
    pub fn new(population_size: usize, sample_size: usize) -> Result<Self> {
        if sample_size < 2 {
            return Err(Error::DegenerateDesign(format!(
                "sample size must be at least 2, got {sample_size}"
            )));
        }
        if sample_size > population_size {
            return Err(Error::Precondition(format!(
                "sample size {sample_size} exceeds population size {population_size}"
            )));
        }
        Ok(Self {
            population_size,
            sample_size,
        })
    }

    pub fn population_size(&self) -> usize {
        self.population_size
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn sampling_fraction(&self) -> f64 {
        self.sample_size as f64 / self.population_size as f64
    }

    pub fn first_order(&self) -> f64 {
        self.sampling_fraction()
    }

    pub fn joint(&self) -> f64 {
        let (n, big_n) = (self.sample_size as f64, self.population_size as f64);
        n * (n - 1.0) / (big_n * (big_n - 1.0))
    }

    /// `N^2 (1 - f) / n`, the factor linking SRSWOR total variances to unit variances.
    pub fn variance_factor(&self) -> f64 {
        let big_n = self.population_size as f64;
        big_n * big_n * (1.0 - self.sampling_fraction()) / self.sample_size as f64
    }
}

pub fn make_srswor_sample(
    pop: &FinitePopulation,
    design: &SrsworDesign,
    indices: &[usize],
) -> Result<DesignSample> {
    if pop.len() != design.population_size() {
        return Err(Error::Precondition(format!(
            "design is for N = {} but the population has {} units",
            design.population_size(),
            pop.len()
        )));
    }
    if indices.len() != design.sample_size() {
        return Err(Error::InvalidSample(format!(
            "expected {} indices, got {}",
            design.sample_size(),
            indices.len()
        )));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= pop.len()) {
        return Err(Error::InvalidSample(format!(
            "unit id {bad} out of range for N = {}",
            pop.len()
        )));
    }
    let y = indices.iter().map(|&i| pop.y()[i]).collect();
    let x = indices.iter().map(|&i| pop.x()[i]).collect();
    let pi = vec![design.first_order(); indices.len()];
    DesignSample::new(
        indices.to_vec(),
        y,
        x,
        pi,
        JointInclusion::Constant(design.joint()),
    )
}

/// Horvitz-Thompson estimator of the population total of y.
pub fn ht_total(sample: &DesignSample) -> f64 {
    sample.d().iter().zip(sample.y()).map(|(d, y)| d * y).sum()
}

/// Horvitz-Thompson estimator of the population total of x.
pub fn ht_total_x(sample: &DesignSample) -> f64 {
    sample.d().iter().zip(sample.x()).map(|(d, x)| d * x).sum()
}

/// Exact binomial coefficient, `None` on `u128` overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Number of samples an enumeration of `n` out of `population_size` would visit,
/// rejecting designs beyond `cap`.
pub fn enumeration_count(population_size: usize, n: usize, cap: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::DegenerateDesign(format!(
            "sample size must be at least 2, got {n}"
        )));
    }
    if n > population_size {
        return Err(Error::Precondition(format!(
            "sample size {n} exceeds population size {population_size}"
        )));
    }
    let count = binomial(population_size as u64, n as u64).ok_or_else(|| {
        Error::Precondition(format!(
            "C({population_size}, {n}) overflows the counting integer"
        ))
    })?;
    if count > cap as u128 {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    Ok(count as u64)
}

/// Lexicographic cursor over the `k`-subsets of `0..n`.
#[derive(Clone, Debug)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    exhausted: bool,
}

impl Combinations {
    /// Starts at the first subset `{0, 1, ..., k-1}`.
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (0..k).collect(),
            exhausted: k > n,
        }
    }

    /// Starts at the subset with lexicographic rank `rank` (0-based).
    pub fn from_rank(n: usize, k: usize, mut rank: u64) -> Self {
        let total = binomial(n as u64, k as u64).unwrap_or(u128::MAX);
        if k > n || rank as u128 >= total {
            return Self {
                n,
                current: (0..k).collect(),
                exhausted: true,
            };
        }
        let mut current = Vec::with_capacity(k);
        let mut candidate = 0usize;
        for slot in 0..k {
            loop {
                let rest = binomial((n - 1 - candidate) as u64, (k - 1 - slot) as u64)
                    .expect("fits: bounded by total") as u64;
                if rank < rest {
                    break;
                }
                rank -= rest;
                candidate += 1;
            }
            current.push(candidate);
            candidate += 1;
        }
        Self {
            n,
            current,
            exhausted: false,
        }
    }

    pub fn current(&self) -> Option<&[usize]> {
        (!self.exhausted).then_some(self.current.as_slice())
    }

    /// Moves to the next subset; returns `false` once the sequence is exhausted.
    pub fn advance(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        let k = self.current.len();
        let mut slot = k;
        while slot > 0 {
            slot -= 1;
            if self.current[slot] < self.n - k + slot {
                self.current[slot] += 1;
                for next in slot + 1..k {
                    self.current[next] = self.current[next - 1] + 1;
                }
                return true;
            }
        }
        self.exhausted = true;
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationSummary {
    pub visited: u64,
}

/// Streams every `n`-subset of the population to `visitor` in lexicographic
/// order, under the default cap.
pub fn enumerate_srswor<F>(
    pop: &FinitePopulation,
    n: usize,
    visitor: F,
) -> Result<EnumerationSummary>
where
    F: FnMut(&[usize]),
{
    enumerate_srswor_capped(pop, n, DEFAULT_ENUMERATION_CAP, visitor)
}

pub fn enumerate_srswor_capped<F>(
    pop: &FinitePopulation,
    n: usize,
    cap: u64,
    mut visitor: F,
) -> Result<EnumerationSummary>
where
    F: FnMut(&[usize]),
{
    enumeration_count(pop.len(), n, cap)?;
    let mut cursor = Combinations::new(pop.len(), n);
    let mut visited = 0u64;
    while let Some(subset) = cursor.current() {
        visitor(subset);
        visited += 1;
        cursor.advance();
    }
    Ok(EnumerationSummary { visited })
}
