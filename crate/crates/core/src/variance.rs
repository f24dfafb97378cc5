//! Design-based variance estimation for the calibrated estimators.
//!
//! Every pairwise sum here runs over unordered pairs `a < b` of sample
//! positions. `(1/2) sum_{i != j}` over ordered pairs equals the unordered sum,
//! and `sum_{i != j}` equals twice it.

use crate::calibrate::{negligible, CalibratedWeights};
use crate::design::{DesignSample, FinitePopulation, SrsworDesign};
use crate::error::{check_len, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualKind {
    /// `e_i = y_i - b x_i` with the through-origin slope.
    ThroughOrigin,
    /// `e_i = y_i - a - b x_i` with the weighted least-squares intercept and slope.
    WithIntercept,
    /// `e_i = y_i`.
    RawY,
}

impl ResidualKind {
    pub fn name(self) -> &'static str {
        match self {
            ResidualKind::ThroughOrigin => "through-origin",
            ResidualKind::WithIntercept => "with-intercept",
            ResidualKind::RawY => "raw-y",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualSet {
    pub e: Vec<f64>,
    pub kind: ResidualKind,
}

impl ResidualSet {
    /// Residuals about `sum d q x y / sum d q x^2`.
    pub fn through_origin(sample: &DesignSample, q: &[f64]) -> Result<Self> {
        check_len("tuning weights q", sample.len(), q.len())?;
        let (d, x, y) = (sample.d(), sample.x(), sample.y());
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for i in 0..sample.len() {
            sxx += d[i] * q[i] * x[i] * x[i];
            sxy += d[i] * q[i] * x[i] * y[i];
        }
        if negligible(sxx, sxx) {
            return Err(Error::SingularCalibration {
                origin: "through-origin-residuals",
            });
        }
        let slope = sxy / sxx;
        Ok(Self {
            e: x.iter().zip(y).map(|(xi, yi)| yi - slope * xi).collect(),
            kind: ResidualKind::ThroughOrigin,
        })
    }

    /// Residuals of the `d q*`-weighted least-squares line with intercept.
    pub fn with_intercept(sample: &DesignSample, q_star: &[f64]) -> Result<Self> {
        check_len("tuning weights q*", sample.len(), q_star.len())?;
        let (d, x, y) = (sample.d(), sample.x(), sample.y());
        let (mut s0, mut sx, mut sy, mut sx2) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..sample.len() {
            let w = d[i] * q_star[i];
            s0 += w;
            sx += w * x[i];
            sy += w * y[i];
            sx2 += w * x[i] * x[i];
        }
        let (mx, my) = (sx / s0, sy / s0);
        let (mut cxx, mut cxy) = (0.0, 0.0);
        for i in 0..sample.len() {
            let w = d[i] * q_star[i];
            cxx += w * (x[i] - mx) * (x[i] - mx);
            cxy += w * (x[i] - mx) * (y[i] - my);
        }
        if negligible(cxx, sx2) {
            return Err(Error::SingularCalibration {
                origin: "with-intercept-residuals",
            });
        }
        let slope = cxy / cxx;
        let intercept = my - slope * mx;
        Ok(Self {
            e: x.iter()
                .zip(y)
                .map(|(xi, yi)| yi - intercept - slope * xi)
                .collect(),
            kind: ResidualKind::WithIntercept,
        })
    }

    pub fn raw_y(sample: &DesignSample) -> Self {
        Self {
            e: sample.y().to_vec(),
            kind: ResidualKind::RawY,
        }
    }
}

/// Dense symmetric matrix over sample pairs; the diagonal is unused.
#[derive(Clone, Debug, PartialEq)]
pub struct PairValues {
    n: usize,
    data: Vec<f64>,
}

impl PairValues {
    pub fn uniform(n: usize, value: f64) -> Self {
        let mut data = vec![value; n * n];
        for i in 0..n {
            data[i * n + i] = 0.0;
        }
        Self { n, data }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut data = vec![0.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let v = f(a, b);
                data[a * n + b] = v;
                data[b * n + a] = v;
            }
        }
        Self { n, data }
    }

    fn try_from_fn<F: FnMut(usize, usize) -> Result<f64>>(n: usize, mut f: F) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let v = f(a, b)?;
                data[a * n + b] = v;
                data[b * n + a] = v;
            }
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.n + b]
    }

    /// Sum of `f(a, b)` over unordered pairs `a < b`.
    pub fn pair_sum<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> f64 {
        let mut acc = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                acc += f(a, b);
            }
        }
        acc
    }
}

/// `D_ab = (pi_a pi_b - pi_ab) / pi_ab` for every sample pair.
pub fn pair_weights(sample: &DesignSample) -> Result<PairValues> {
    PairValues::try_from_fn(sample.len(), |a, b| sample.pair_weight(a, b))
}

/// `delta_ab = (d_a x_a - d_b x_b)^2`.
pub fn pair_deltas(sample: &DesignSample) -> PairValues {
    let (d, x) = (sample.d(), sample.x());
    PairValues::from_fn(sample.len(), |a, b| (d[a] * x[a] - d[b] * x[b]).powi(2))
}

/// Sen-Yates-Grundy estimator of the variance of the Horvitz-Thompson total of `z`.
pub fn syg_variance_estimate(sample: &DesignSample, z: &[f64]) -> Result<f64> {
    check_len("z", sample.len(), z.len())?;
    let d = sample.d();
    let big_d = pair_weights(sample)?;
    Ok(PairValues::pair_sum(sample.len(), |a, b| {
        big_d.get(a, b) * (d[a] * z[a] - d[b] * z[b]).powi(2)
    }))
}

/// Population Sen-Yates-Grundy variance of the HT total of `z` under SRSWOR:
/// `sum_{i<j} (pi_i pi_j - pi_ij) (d_i z_i - d_j z_j)^2`.
pub fn syg_true_variance(pop: &FinitePopulation, design: &SrsworDesign, z: &[f64]) -> Result<f64> {
    check_len("population z", pop.len(), z.len())?;
    check_len(
        "design population size",
        design.population_size(),
        pop.len(),
    )?;
    let pi = design.first_order();
    let factor = pi * pi - design.joint();
    let d = 1.0 / pi;
    Ok(factor * PairValues::pair_sum(z.len(), |i, j| (d * z[i] - d * z[j]).powi(2)))
}

fn residual_pair_sum(
    sample: &DesignSample,
    weights: &CalibratedWeights,
    residuals: &ResidualSet,
) -> Result<f64> {
    check_len("weights", sample.len(), weights.w.len())?;
    check_len("residuals", sample.len(), residuals.e.len())?;
    let big_d = pair_weights(sample)?;
    let (w, e) = (&weights.w, &residuals.e);
    Ok(PairValues::pair_sum(sample.len(), |a, b| {
        big_d.get(a, b) * (w[a] * e[a] - w[b] * e[b]).powi(2)
    }))
}

/// Deville-Särndal estimator `(1/2) sum D_ij (w_i e_i - w_j e_j)^2` for GREG.
pub fn ds_variance_estimate(
    sample: &DesignSample,
    weights: &CalibratedWeights,
    residuals: &ResidualSet,
) -> Result<f64> {
    if residuals.kind != ResidualKind::ThroughOrigin {
        return Err(Error::WrongResidual {
            expected: ResidualKind::ThroughOrigin.name(),
            found: residuals.kind.name(),
        });
    }
    residual_pair_sum(sample, weights, residuals)
}

/// Pairwise residual (SHY) estimator `(1/2) sum D_ij Phi_ij` for the linear regression
/// estimator, with `Phi_ij = (w_i e*_i - w_j e*_j)^2`. Accepts intercept
/// residuals, or raw y for the design-weight reduction.
pub fn shy_variance(
    sample: &DesignSample,
    weights: &CalibratedWeights,
    residuals: &ResidualSet,
) -> Result<f64> {
    if residuals.kind == ResidualKind::ThroughOrigin {
        return Err(Error::WrongResidual {
            expected: ResidualKind::WithIntercept.name(),
            found: residuals.kind.name(),
        });
    }
    residual_pair_sum(sample, weights, residuals)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairQMode {
    /// Use the supplied `q_ij` directly; only the variance constraint holds.
    Raw,
    /// Replace `q_ij` by `q_ij (sum D q / sum D q delta - 1 / delta_ij)`, which
    /// also preserves `sum Omega = sum D`.
    Transformed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairWeightSet {
    pub d: PairValues,
    /// The effective tuning weights (transformed in [`PairQMode::Transformed`]).
    pub q: PairValues,
    pub omega: PairValues,
    pub delta: PairValues,
    pub mode: PairQMode,
}

impl PairWeightSet {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// `(1/2) sum_{i != j} Omega_ij delta_ij`
    pub fn calibrated_x_variance(&self) -> f64 {
        PairValues::pair_sum(self.len(), |a, b| {
            self.omega.get(a, b) * self.delta.get(a, b)
        })
    }
}

/// Calibrates the pair weights `D_ij` to `Omega_ij` so that the Sen-Yates-Grundy
/// estimator applied to `x` reproduces `known_v`, the true variance of `X_HT`.
pub fn calibrate_pair_weights(
    sample: &DesignSample,
    q_pairs: &PairValues,
    known_v: f64,
    mode: PairQMode,
) -> Result<PairWeightSet> {
    let n = sample.len();
    check_len("pair tuning weights", n, q_pairs.len())?;
    let big_d = pair_weights(sample)?;
    let delta = pair_deltas(sample);

    let q = match mode {
        PairQMode::Raw => q_pairs.clone(),
        PairQMode::Transformed => {
            for a in 0..n {
                for b in a + 1..n {
                    if delta.get(a, b) == 0.0 {
                        return Err(Error::PairDegeneracy { i: a, j: b });
                    }
                }
            }
            let sdq = PairValues::pair_sum(n, |a, b| big_d.get(a, b) * q_pairs.get(a, b));
            let sdqd = PairValues::pair_sum(n, |a, b| {
                big_d.get(a, b) * q_pairs.get(a, b) * delta.get(a, b)
            });
            let scale = PairValues::pair_sum(n, |a, b| {
                (big_d.get(a, b) * q_pairs.get(a, b) * delta.get(a, b)).abs()
            });
            if negligible(sdqd, scale) {
                return Err(Error::SingularPairCalibration);
            }
            let ratio = sdq / sdqd;
            PairValues::from_fn(n, |a, b| {
                q_pairs.get(a, b) * (ratio - 1.0 / delta.get(a, b))
            })
        }
    };

    let den = PairValues::pair_sum(n, |a, b| {
        big_d.get(a, b) * q.get(a, b) * delta.get(a, b).powi(2)
    });
    let scale = PairValues::pair_sum(n, |a, b| {
        (big_d.get(a, b) * q.get(a, b)).abs() * delta.get(a, b).powi(2)
    });
    if negligible(den, scale) {
        return Err(Error::SingularPairCalibration);
    }
    let estimated = PairValues::pair_sum(n, |a, b| big_d.get(a, b) * delta.get(a, b));
    // Lagrange step; the multiplier stays local.
    let step = (known_v - estimated) / den;
    let omega = PairValues::from_fn(n, |a, b| {
        big_d.get(a, b) + big_d.get(a, b) * q.get(a, b) * delta.get(a, b) * step
    });
    Ok(PairWeightSet {
        d: big_d,
        q,
        omega,
        delta,
        mode,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibratedVariance {
    pub estimate: f64,
    /// Slope of `Phi` on `delta` across pairs.
    pub b2: f64,
    /// The uncalibrated SHY estimate.
    pub base: f64,
    /// Sen-Yates-Grundy estimate of the variance of `X_HT`.
    pub estimated_x_variance: f64,
}

/// Calibrated variance of the linear regression estimator:
/// `V_s + B2 (V_syg(X_HT) - V^_syg(X_HT))`, with the pair weights calibrated
/// under both the variance and the weight-sum constraint.
pub fn calibrated_lr_variance(
    sample: &DesignSample,
    weights: &CalibratedWeights,
    residuals: &ResidualSet,
    q_pairs: &PairValues,
    known_v: f64,
) -> Result<CalibratedVariance> {
    let n = sample.len();
    check_len("pair tuning weights", n, q_pairs.len())?;
    let base = shy_variance(sample, weights, residuals)?;
    let big_d = pair_weights(sample)?;
    let delta = pair_deltas(sample);
    for a in 0..n {
        for b in a + 1..n {
            if delta.get(a, b) == 0.0 {
                return Err(Error::PairDegeneracy { i: a, j: b });
            }
        }
    }
    let (w, e) = (&weights.w, &residuals.e);
    let phi = PairValues::from_fn(n, |a, b| (w[a] * e[a] - w[b] * e[b]).powi(2));

    let dq = |a: usize, b: usize| big_d.get(a, b) * q_pairs.get(a, b);
    let s0 = PairValues::pair_sum(n, dq);
    let s_delta = PairValues::pair_sum(n, |a, b| dq(a, b) * delta.get(a, b));
    let s_delta2 = PairValues::pair_sum(n, |a, b| dq(a, b) * delta.get(a, b).powi(2));
    let s_phi = PairValues::pair_sum(n, |a, b| dq(a, b) * phi.get(a, b));
    let s_delta_phi = PairValues::pair_sum(n, |a, b| dq(a, b) * delta.get(a, b) * phi.get(a, b));

    let den = s0 * s_delta2 - s_delta * s_delta;
    if negligible(den, s0 * s_delta2 + s_delta * s_delta) {
        return Err(Error::SingularPairCalibration);
    }
    let b2 = (s0 * s_delta_phi - s_delta * s_phi) / den;
    let estimated_x_variance = PairValues::pair_sum(n, |a, b| big_d.get(a, b) * delta.get(a, b));
    Ok(CalibratedVariance {
        estimate: base + b2 * (known_v - estimated_x_variance),
        b2,
        base,
        estimated_x_variance,
    })
}

/// Das-Tripathi regression-type estimator of the finite population variance
/// of y under SRSWOR: `s_y^2 + b2 (S_x^2 - s_x^2)` with
/// `b2 = (m22 - m20 m02) / (m04 - m02^2)`, `m_rs = sum (y - ybar)^r (x - xbar)^s / (n - 1)`.
pub fn das_tripathi_variance(sample: &DesignSample, pop_x_variance: f64) -> Result<f64> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::Precondition(format!(
            "Das-Tripathi estimator needs n >= 3, got {n}"
        )));
    }
    let (x, y) = (sample.x(), sample.y());
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let moment = |r: i32, s: i32| -> f64 {
        x.iter()
            .zip(y)
            .map(|(xi, yi)| (yi - my).powi(r) * (xi - mx).powi(s))
            .sum::<f64>()
            / (n - 1) as f64
    };
    let (m20, m02, m22, m04) = (moment(2, 0), moment(0, 2), moment(2, 2), moment(0, 4));
    let den = m04 - m02 * m02;
    if negligible(den, m04 + m02 * m02) {
        return Err(Error::SingularMoment);
    }
    let b2 = (m22 - m20 * m02) / den;
    Ok(m20 + b2 * (pop_x_variance - m02))
}
