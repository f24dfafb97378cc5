//! Stratified SRSWOR: calibration of the stratum weights `W_h = N_h / N`.
//!
//! One constraint (`sum W*_h xbar_h = Xbar`) gives a combined regression-type
//! estimator through the origin. Adding `sum W0_h = sum W_h` gives the
//! classical combined linear regression estimator. The stratum variance
//! weights `D_h = W_h^2 (1 - f_h) / n_h` are calibrated the same way against
//! the known variance of the stratified x mean.

use crate::calibrate::negligible;
use crate::error::{check_len, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Stratum {
    pub label: String,
    pub population_size: usize,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
}

/// Per-stratum summaries derived once at construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StratumSummary {
    pub weight: f64,
    pub fraction: f64,
    pub n: usize,
    pub mean_y: f64,
    pub mean_x: f64,
    pub var_y: f64,
    pub var_x: f64,
    pub cov_xy: f64,
}

impl StratumSummary {
    /// `W_h^2 (1 - f_h) / n_h`
    pub fn variance_weight(&self) -> f64 {
        self.weight * self.weight * (1.0 - self.fraction) / self.n as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StratifiedSample {
    strata: Vec<Stratum>,
    summaries: Vec<StratumSummary>,
}

impl StratifiedSample {
    pub fn new(strata: Vec<Stratum>) -> Result<Self> {
        if strata.is_empty() {
            return Err(Error::Precondition("no strata".into()));
        }
        let total: usize = strata.iter().map(|s| s.population_size).sum();
        let mut summaries = Vec::with_capacity(strata.len());
        for s in &strata {
            check_len("stratum x column", s.y.len(), s.x.len())?;
            let n = s.y.len();
            if n < 2 {
                return Err(Error::InsufficientStratum {
                    stratum: s.label.clone(),
                    size: n,
                });
            }
            if n > s.population_size {
                return Err(Error::Precondition(format!(
                    "stratum {} samples {n} of {} units",
                    s.label, s.population_size
                )));
            }
            let nf = n as f64;
            let mean_y = s.y.iter().sum::<f64>() / nf;
            let mean_x = s.x.iter().sum::<f64>() / nf;
            let (mut vy, mut vx, mut cxy) = (0.0, 0.0, 0.0);
            for (y, x) in s.y.iter().zip(&s.x) {
                vy += (y - mean_y).powi(2);
                vx += (x - mean_x).powi(2);
                cxy += (y - mean_y) * (x - mean_x);
            }
            summaries.push(StratumSummary {
                weight: s.population_size as f64 / total as f64,
                fraction: nf / s.population_size as f64,
                n,
                mean_y,
                mean_x,
                var_y: vy / (nf - 1.0),
                var_x: vx / (nf - 1.0),
                cov_xy: cxy / (nf - 1.0),
            });
        }
        Ok(Self { strata, summaries })
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn summaries(&self) -> &[StratumSummary] {
        &self.summaries
    }

    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    /// `sum W_h xbar_h`
    pub fn mean_x(&self) -> f64 {
        self.summaries.iter().map(|s| s.weight * s.mean_x).sum()
    }

    /// Unbiased estimate of the variance of the stratified x mean,
    /// `sum D_h s_hx^2`.
    pub fn estimated_x_variance(&self) -> f64 {
        self.summaries
            .iter()
            .map(|s| s.variance_weight() * s.var_x)
            .sum()
    }

    /// `V(xbar_st) = sum D_h S_hx^2` from known population stratum variances of x.
    pub fn known_x_variance(&self, population_var_x: &[f64]) -> Result<f64> {
        check_len(
            "population stratum x variances",
            self.len(),
            population_var_x.len(),
        )?;
        Ok(self
            .summaries
            .iter()
            .zip(population_var_x)
            .map(|(s, v)| s.variance_weight() * v)
            .sum())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StratumCalibration {
    /// Calibrated stratum weights.
    pub weights: Vec<f64>,
    pub q: Vec<f64>,
    pub slope: f64,
    pub mean: f64,
}

/// `sum W_h ybar_h`
pub fn stratified_mean(s: &StratifiedSample) -> f64 {
    s.summaries.iter().map(|h| h.weight * h.mean_y).sum()
}

fn check_q(s: &StratifiedSample, q: &[f64]) -> Result<()> {
    check_len("stratum tuning weights", s.len(), q.len())?;
    if let Some(h) = q.iter().position(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::Precondition(format!(
            "stratum tuning weight {h} must be positive"
        )));
    }
    Ok(())
}

/// Single-constraint calibration of the stratum weights onto `Xbar`.
pub fn shy_calibrated_mean(
    s: &StratifiedSample,
    q: &[f64],
    xbar: f64,
) -> Result<StratumCalibration> {
    check_q(s, q)?;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (h, qh) in s.summaries.iter().zip(q) {
        sxx += h.weight * qh * h.mean_x * h.mean_x;
        sxy += h.weight * qh * h.mean_x * h.mean_y;
    }
    if negligible(sxx, sxx) {
        return Err(Error::SingularCalibration {
            origin: "stratified-single-constraint",
        });
    }
    let gap = xbar - s.mean_x();
    let slope = sxy / sxx;
    let weights = s
        .summaries
        .iter()
        .zip(q)
        .map(|(h, qh)| h.weight + h.weight * qh * h.mean_x * gap / sxx)
        .collect();
    Ok(StratumCalibration {
        weights,
        q: q.to_vec(),
        slope,
        mean: stratified_mean(s) + slope * gap,
    })
}

/// Two-constraint calibration (weight sum and `Xbar`), yielding the combined
/// linear regression estimator `ybar_st + b (Xbar - xbar_st)`.
pub fn combined_lr_mean(s: &StratifiedSample, q0: &[f64], xbar: f64) -> Result<StratumCalibration> {
    check_q(s, q0)?;
    let (mut s0, mut sx, mut sy, mut sx2) = (0.0, 0.0, 0.0, 0.0);
    for (h, qh) in s.summaries.iter().zip(q0) {
        let wq = h.weight * qh;
        s0 += wq;
        sx += wq * h.mean_x;
        sy += wq * h.mean_y;
        sx2 += wq * h.mean_x * h.mean_x;
    }
    let (mx, my) = (sx / s0, sy / s0);
    let (mut cxx, mut cxy) = (0.0, 0.0);
    for (h, qh) in s.summaries.iter().zip(q0) {
        let wq = h.weight * qh;
        cxx += wq * (h.mean_x - mx).powi(2);
        cxy += wq * (h.mean_x - mx) * (h.mean_y - my);
    }
    if negligible(cxx, sx2) {
        return Err(Error::SingularCalibration {
            origin: "stratified-combined-lr",
        });
    }
    let gap = xbar - s.mean_x();
    let slope = cxy / cxx;
    let weights = s
        .summaries
        .iter()
        .zip(q0)
        .map(|(h, qh)| h.weight + h.weight * qh * (h.mean_x - mx) * gap / cxx)
        .collect();
    Ok(StratumCalibration {
        weights,
        q: q0.to_vec(),
        slope,
        mean: stratified_mean(s) + slope * gap,
    })
}

/// Combined regression slope `sum D_h s_hxy / sum D_h s_hx^2`, the default
/// coefficient for the residuals in the variance estimators.
pub fn combined_slope(s: &StratifiedSample) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for h in &s.summaries {
        num += h.variance_weight() * h.cov_xy;
        den += h.variance_weight() * h.var_x;
    }
    if negligible(den, den) {
        return Err(Error::SingularCalibration {
            origin: "stratified-combined-slope",
        });
    }
    Ok(num / den)
}

/// `s^2_{e*h}` for `e*_hi = (y_hi - ybar_h) - b (x_hi - xbar_h)`.
pub fn residual_variances(s: &StratifiedSample, b_st: f64) -> Vec<f64> {
    s.strata
        .iter()
        .zip(&s.summaries)
        .map(|(st, h)| {
            st.y.iter()
                .zip(&st.x)
                .map(|(y, x)| ((y - h.mean_y) - b_st * (x - h.mean_x)).powi(2))
                .sum::<f64>()
                / (h.n - 1) as f64
        })
        .collect()
}

/// `sum D_h (W0_h / W_h)^2 s^2_{e*h}`.
pub fn combined_lr_variance(
    s: &StratifiedSample,
    calib: &StratumCalibration,
    b_st: f64,
) -> Result<f64> {
    check_len("calibrated stratum weights", s.len(), calib.weights.len())?;
    let se = residual_variances(s, b_st);
    Ok(s.summaries
        .iter()
        .zip(&calib.weights)
        .zip(&se)
        .map(|((h, w0), e2)| {
            let ratio = w0 / h.weight;
            h.variance_weight() * (ratio * ratio) * e2
        })
        .sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CombinedVariance {
    pub estimate: f64,
    /// Coefficient on `V(xbar_st) - v(xbar_st)`.
    pub slope: f64,
    /// Calibrated variance weights `Omega0_h`.
    pub omega: Vec<f64>,
    /// The uncalibrated estimate from [`combined_lr_variance`].
    pub base: f64,
    pub estimated_x_variance: f64,
}

/// Calibrates `D_h` to `Omega0_h` under `sum Omega0 = sum D` and
/// `sum Omega0_h s_hx^2 = V(xbar_st)`, and returns
/// `v + B (V(xbar_st) - v(xbar_st))`.
pub fn calibrated_combined_variance(
    s: &StratifiedSample,
    calib: &StratumCalibration,
    b_st: f64,
    q0: &[f64],
    known_vx: f64,
) -> Result<CombinedVariance> {
    check_q(s, q0)?;
    let base = combined_lr_variance(s, calib, b_st)?;
    let se = residual_variances(s, b_st);
    let dq: Vec<f64> = s
        .summaries
        .iter()
        .zip(q0)
        .map(|(h, qh)| h.variance_weight() * qh)
        .collect();
    let s0: f64 = dq.iter().sum();
    let m = dq
        .iter()
        .zip(&s.summaries)
        .map(|(a, h)| a * h.var_x)
        .sum::<f64>()
        / s0;
    let (mut cxx, mut scale) = (0.0, 0.0);
    for (a, h) in dq.iter().zip(&s.summaries) {
        cxx += a * (h.var_x - m).powi(2);
        scale += a * h.var_x * h.var_x;
    }
    if negligible(cxx, scale) {
        return Err(Error::SingularCalibration {
            origin: "stratified-variance-calibration",
        });
    }
    let estimated_x_variance = s.estimated_x_variance();
    let gap = known_vx - estimated_x_variance;
    let omega = s
        .summaries
        .iter()
        .zip(&dq)
        .map(|(h, a)| h.variance_weight() + a * (h.var_x - m) * gap / cxx)
        .collect();
    let mut cross = 0.0;
    for (((h, a), w0), e2) in s.summaries.iter().zip(&dq).zip(&calib.weights).zip(&se) {
        let ratio = w0 / h.weight;
        cross += a * (h.var_x - m) * ratio * ratio * e2;
    }
    let slope = cross / cxx;
    Ok(CombinedVariance {
        estimate: base + slope * gap,
        slope,
        omega,
        base,
        estimated_x_variance,
    })
}
