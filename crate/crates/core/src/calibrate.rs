//! Chi-square calibration of design weights on a single auxiliary variable.
//!
//! Two constraint sets are supported:
//!
//! * [`ConstraintMode::AuxOnly`]: `sum w_i x_i = X`. The minimiser of
//!   `sum (w_i - d_i)^2 / (d_i q_i)` gives the GREG weights and a
//!   regression-through-the-origin correction of the Horvitz-Thompson total.
//! * [`ConstraintMode::AuxAndWeightSum`]: additionally `sum w_i = sum d_i`.
//!   The minimiser reproduces the classical linear regression estimator with
//!   an intercept.
//!
//! Negative calibrated weights are legal and counted in
//! [`CalibratedWeights::negative_weights`]; they are never clamped.

use crate::design::{ht_total, ht_total_x, DesignSample};
use crate::error::{check_len, Error, Result};

/// Relative threshold below which a denominator counts as zero.
pub const SINGULARITY_TOLERANCE: f64 = 1e-12;

pub(crate) fn negligible(value: f64, scale: f64) -> bool {
    value.abs() <= SINGULARITY_TOLERANCE * scale.abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintMode {
    AuxOnly,
    AuxAndWeightSum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    /// `sum w_i x_i = X`
    AuxTotal,
    /// `sum w_i = sum d_i`
    WeightSum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationSpec {
    q: Vec<f64>,
    aux_total: f64,
    mode: ConstraintMode,
}

impl CalibrationSpec {
    pub fn new(q: Vec<f64>, aux_total: f64, mode: ConstraintMode) -> Result<Self> {
        if let Some(i) = q.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Precondition(format!(
                "tuning weight q[{i}] = {} must be positive",
                q[i]
            )));
        }
        Ok(Self { q, aux_total, mode })
    }

    /// Accepts any finite tuning weights, including the negative ones that
    /// [`q_substitution`] can produce. The reported distance is then `NaN`.
    pub fn signed(q: Vec<f64>, aux_total: f64, mode: ConstraintMode) -> Result<Self> {
        if let Some(i) = q.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "tuning weight q[{i}] = {} must be finite",
                q[i]
            )));
        }
        Ok(Self { q, aux_total, mode })
    }

    pub fn aux_only(q: Vec<f64>, aux_total: f64) -> Result<Self> {
        Self::new(q, aux_total, ConstraintMode::AuxOnly)
    }

    pub fn aux_and_weight_sum(q_star: Vec<f64>, aux_total: f64) -> Result<Self> {
        Self::new(q_star, aux_total, ConstraintMode::AuxAndWeightSum)
    }

    /// All tuning weights equal to one.
    pub fn uniform(n: usize, aux_total: f64, mode: ConstraintMode) -> Self {
        Self {
            q: vec![1.0; n],
            aux_total,
            mode,
        }
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn aux_total(&self) -> f64 {
        self.aux_total
    }

    pub fn mode(&self) -> ConstraintMode {
        self.mode
    }

    fn check_for(&self, sample: &DesignSample, mode: ConstraintMode) -> Result<()> {
        if self.mode != mode {
            return Err(Error::Precondition(format!(
                "calibration spec is {:?}, expected {:?}",
                self.mode, mode
            )));
        }
        check_len("tuning weights q", sample.len(), self.q.len())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibratedWeights {
    pub w: Vec<f64>,
    pub satisfied: Vec<Constraint>,
    /// Regression slope implied by the calibration (through-origin or OLS).
    pub slope: f64,
    /// Achieved chi-square distance from the design weights; `NaN` when
    /// some `d q` is not positive.
    pub distance: f64,
    pub negative_weights: usize,
}

impl CalibratedWeights {
    /// The uncalibrated design weights, satisfying no constraint.
    pub fn design(sample: &DesignSample) -> Self {
        Self {
            w: sample.d().to_vec(),
            satisfied: Vec::new(),
            slope: 0.0,
            distance: 0.0,
            negative_weights: 0,
        }
    }

    pub fn satisfies(&self, c: Constraint) -> bool {
        self.satisfied.contains(&c)
    }

    pub fn weighted_total(&self, values: &[f64]) -> f64 {
        self.w.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Estimated total together with the regression slope that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegressionTotal {
    pub total: f64,
    pub slope: f64,
}

/// `sum (w_i - d_i)^2 / (d_i q_i)`.
pub fn chi_square_distance(w: &[f64], d: &[f64], q: &[f64]) -> Result<f64> {
    check_len("design weights", w.len(), d.len())?;
    check_len("tuning weights", w.len(), q.len())?;
    let mut acc = 0.0;
    for (unit, ((wi, di), qi)) in w.iter().zip(d).zip(q).enumerate() {
        let scale = di * qi;
        if scale.is_nan() || scale <= 0.0 {
            return Err(Error::InvalidDistance { unit });
        }
        acc += (wi - di).powi(2) / scale;
    }
    Ok(acc)
}

/// GREG weights `w_i = d_i + d_i q_i x_i (X - sum d x) / sum d q x^2`.
pub fn greg_weights(sample: &DesignSample, spec: &CalibrationSpec) -> Result<CalibratedWeights> {
    spec.check_for(sample, ConstraintMode::AuxOnly)?;
    let (d, x, y, q) = (sample.d(), sample.x(), sample.y(), spec.q());

    let (mut sdqx2, mut sdqxy, mut scale) = (0.0, 0.0, 0.0);
    for i in 0..sample.len() {
        sdqx2 += d[i] * q[i] * x[i] * x[i];
        sdqxy += d[i] * q[i] * x[i] * y[i];
        scale += (d[i] * q[i]).abs() * x[i] * x[i];
    }
    if negligible(sdqx2, scale) {
        return Err(Error::SingularCalibration {
            origin: "greg-weights",
        });
    }
    let lambda = (spec.aux_total() - ht_total_x(sample)) / sdqx2;
    let w: Vec<f64> = (0..sample.len())
        .map(|i| d[i] + d[i] * q[i] * x[i] * lambda)
        .collect();
    finish(w, vec![Constraint::AuxTotal], sdqxy / sdqx2, d, q)
}

pub fn greg_total(sample: &DesignSample, spec: &CalibrationSpec) -> Result<RegressionTotal> {
    let cw = greg_weights(sample, spec)?;
    Ok(RegressionTotal {
        total: cw.weighted_total(sample.y()),
        slope: cw.slope,
    })
}

/// The tuning weights that turn GREG weights into the two-constraint weights:
/// `q_i = q*_i (sum d q* / sum d q* x - 1 / x_i)`. Entries may be negative.
pub fn q_substitution(sample: &DesignSample, q_star: &[f64]) -> Result<Vec<f64>> {
    check_len("q*", sample.len(), q_star.len())?;
    let (d, x) = (sample.d(), sample.x());
    if let Some(unit) = x.iter().position(|&v| v == 0.0) {
        return Err(Error::DivisionByZero { unit });
    }
    let mut sdq = 0.0;
    let mut sdqx = 0.0;
    let mut scale = 0.0;
    for i in 0..sample.len() {
        sdq += d[i] * q_star[i];
        sdqx += d[i] * q_star[i] * x[i];
        scale += (d[i] * q_star[i] * x[i]).abs();
    }
    if negligible(sdqx, scale) {
        return Err(Error::SingularSubstitution);
    }
    let ratio = sdq / sdqx;
    Ok(q_star
        .iter()
        .zip(x)
        .map(|(qs, xi)| qs * (ratio - 1.0 / xi))
        .collect())
}

/// Weights satisfying both `sum w x = X` and `sum w = sum d`.
///
/// Evaluated in centred form: with `m = sum d q* x / sum d q*`,
/// `w_i = d_i + d_i q*_i (x_i - m) (X - sum d x) / sum d q* (x - m)^2`,
/// which equals the uncentred closed form after dividing numerator and
/// denominator by `sum d q*`. No restriction on `x_i = 0`.
pub fn lr_weights(sample: &DesignSample, spec: &CalibrationSpec) -> Result<CalibratedWeights> {
    spec.check_for(sample, ConstraintMode::AuxAndWeightSum)?;
    let (d, x, y, q) = (sample.d(), sample.x(), sample.y(), spec.q());

    let (mut sdq, mut sdqx, mut sdqy, mut sdqx2) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..sample.len() {
        let dq = d[i] * q[i];
        sdq += dq;
        sdqx += dq * x[i];
        sdqy += dq * y[i];
        sdqx2 += dq * x[i] * x[i];
    }
    let mx = sdqx / sdq;
    let my = sdqy / sdq;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..sample.len() {
        let dq = d[i] * q[i];
        sxx += dq * (x[i] - mx) * (x[i] - mx);
        sxy += dq * (x[i] - mx) * (y[i] - my);
    }
    if negligible(sxx, sdqx2) {
        return Err(Error::SingularCalibration {
            origin: "lr-weights",
        });
    }
    let lambda = (spec.aux_total() - ht_total_x(sample)) / sxx;
    let w: Vec<f64> = (0..sample.len())
        .map(|i| d[i] + d[i] * q[i] * (x[i] - mx) * lambda)
        .collect();
    finish(
        w,
        vec![Constraint::AuxTotal, Constraint::WeightSum],
        sxy / sxx,
        d,
        q,
    )
}

pub fn lr_total(sample: &DesignSample, spec: &CalibrationSpec) -> Result<RegressionTotal> {
    let cw = lr_weights(sample, spec)?;
    Ok(RegressionTotal {
        total: cw.weighted_total(sample.y()),
        slope: cw.slope,
    })
}

/// `Y_HT + slope (X - X_HT)`: the regression form shared by both estimators.
pub fn regression_form(sample: &DesignSample, slope: f64, aux_total: f64) -> f64 {
    ht_total(sample) + slope * (aux_total - ht_total_x(sample))
}

fn finish(
    w: Vec<f64>,
    satisfied: Vec<Constraint>,
    slope: f64,
    d: &[f64],
    q: &[f64],
) -> Result<CalibratedWeights> {
    let distance = if d.iter().zip(q).all(|(di, qi)| di * qi > 0.0) {
        chi_square_distance(&w, d, q)?
    } else {
        f64::NAN
    };
    let negative_weights = w.iter().filter(|&&v| v < 0.0).count();
    Ok(CalibratedWeights {
        w,
        satisfied,
        slope,
        distance,
        negative_weights,
    })
}
