//! Rotor fault detection and isolation from gyro data by least squares.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use libm::{exp, pow};
use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use thiserror::Error;

use crate::actuation::{ActuationMatrix, CapacityVector};
use crate::vehicle::VehicleParams;

/// Largest accepted condition number of the normalized information matrix.
pub const MAX_CONDITION: f64 = 1e12;
/// Columns whose norm falls below this fraction of the largest are treated as unexcited.
pub const EXCITATION_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdiError {
    #[error("need at least 3 samples to differentiate, got {0}")]
    WindowTooShort(usize),
    #[error("need at least 8 stacked rows, got {0}")]
    TooFewSamples(usize),
    #[error("information matrix is ill conditioned (condition {0:e})")]
    IllConditioned(f64),
    #[error("sample timestamps must be strictly increasing and uniform")]
    NonUniformSampling,
    #[error("sample has {got} rotor speeds, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid FDI configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdiSample {
    pub t: f64,
    /// Body rates (P, Q, R).
    pub rates: Vector3<f64>,
    pub omega_sq: Vec<f64>,
    pub w_g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityEstimate {
    /// Estimate clamped to [0, 1].
    pub theta: CapacityVector,
    pub raw: Vec<f64>,
    /// Condition number of the column-normalized information matrix.
    pub condition: f64,
    /// Rotors whose regressor columns carried no information and were held.
    pub held: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forgetting {
    /// Uniform weights over the window.
    Window,
    /// Weight λ^age with age counted in samples from the newest.
    Exponential(f64),
}

fn check_uniform(samples: &[FdiSample]) -> Result<f64, FdiError> {
    let dt = samples[1].t - samples[0].t;
    if !(dt > 0.0) {
        return Err(FdiError::NonUniformSampling);
    }
    for w in samples.windows(2) {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-6 * dt {
            return Err(FdiError::NonUniformSampling);
        }
    }
    Ok(dt)
}

/// Body torques from body rates by finite differences, including the gyroscopic rotor term.
pub fn reconstruct_torques(samples: &[FdiSample], p: &VehicleParams) -> Result<Vec<Vector3<f64>>, FdiError> {
    let n = samples.len();
    if n < 3 {
        return Err(FdiError::WindowTooShort(n));
    }
    let dt = check_uniform(samples)?;
    Ok((0..n)
        .map(|i| {
            let d = if i == 0 {
                (samples[1].rates - samples[0].rates) / dt
            } else if i == n - 1 {
                (samples[n - 1].rates - samples[n - 2].rates) / dt
            } else {
                (samples[i + 1].rates - samples[i - 1].rates) / (2.0 * dt)
            };
            Vector3::new(p.ixx * d.x, p.iyy * d.y, p.izz * d.z) + gyro_terms(&samples[i], p)
        })
        .collect())
}

fn gyro_terms(s: &FdiSample, p: &VehicleParams) -> Vector3<f64> {
    let (pr, qr, rr) = (s.rates.x, s.rates.y, s.rates.z);
    Vector3::new(
        -(p.iyy - p.izz) * qr * rr + p.izzm * s.w_g * qr,
        -(p.izz - p.ixx) * pr * rr - p.izzm * s.w_g * pr,
        -(p.ixx - p.iyy) * pr * qr,
    )
}

/// Mean body torque over each sampling interval, from rate increments.
///
/// Entry `i` covers the interval ending at sample `i + 1` and pairs with that
/// sample's interval-mean squared speeds.
pub fn reconstruct_interval_torques(samples: &[FdiSample], p: &VehicleParams) -> Result<Vec<Vector3<f64>>, FdiError> {
    if samples.len() < 2 {
        return Err(FdiError::WindowTooShort(samples.len()));
    }
    if samples.len() > 2 {
        check_uniform(samples)?;
    }
    Ok(samples
        .windows(2)
        .map(|w| {
            let h = w[1].t - w[0].t;
            let d = (w[1].rates - w[0].rates) / h;
            Vector3::new(p.ixx * d.x, p.iyy * d.y, p.izz * d.z) + (gyro_terms(&w[0], p) + gyro_terms(&w[1], p)) * 0.5
        })
        .collect())
}

/// Stacked regressor with rows (τx, τy, τz) per sample and one column per rotor.
pub fn build_regressors(
    samples: &[FdiSample],
    torques: &[Vector3<f64>],
    a: &ActuationMatrix,
) -> Result<(DMatrix<f64>, DVector<f64>), FdiError> {
    let n = a.rotors();
    let rows = 3 * samples.len();
    if rows < 8 {
        return Err(FdiError::TooFewSamples(rows));
    }
    if let Some(s) = samples.iter().find(|s| s.omega_sq.len() != n) {
        return Err(FdiError::DimensionMismatch {
            expected: n,
            got: s.omega_sq.len(),
        });
    }
    Ok(build_regressors_unchecked(samples, torques, a))
}

fn build_regressors_unchecked(
    samples: &[FdiSample],
    torques: &[Vector3<f64>],
    a: &ActuationMatrix,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = a.rotors();
    let rows = 3 * samples.len();
    let mut psi = DMatrix::zeros(rows, n);
    let mut tau = DVector::zeros(rows);
    for (i, (s, t)) in samples.iter().zip(torques).enumerate() {
        for k in 0..3 {
            tau[3 * i + k] = t[k];
            for j in 0..n {
                psi[(3 * i + k, j)] = a.entries[(k + 1, j)] * s.omega_sq[j];
            }
        }
    }
    (psi, tau)
}

/// Weighted least-squares capacity estimate.
///
/// Unexcited columns are removed from the fit and keep their `prior` values.
pub fn estimate_capacity(
    psi: &DMatrix<f64>,
    tau: &DVector<f64>,
    forgetting: Forgetting,
    prior: &CapacityVector,
) -> Result<CapacityEstimate, FdiError> {
    let (rows, n) = psi.shape();
    if rows < 8 {
        return Err(FdiError::TooFewSamples(rows));
    }
    if prior.len() != n {
        return Err(FdiError::DimensionMismatch {
            expected: n,
            got: prior.len(),
        });
    }
    let samples = rows / 3;
    let weight = |r: usize| match forgetting {
        Forgetting::Window => 1.0,
        Forgetting::Exponential(l) => pow(l, (samples - 1 - r / 3) as f64),
    };
    let norms: Vec<f64> = (0..n).map(|j| psi.column(j).norm()).collect();
    let top = norms.iter().cloned().fold(0.0, f64::max);
    let active: Vec<usize> = (0..n).filter(|&j| norms[j] > EXCITATION_TOL * top && top > 0.0).collect();
    let held: Vec<usize> = (0..n).filter(|j| !active.contains(j)).collect();
    if active.is_empty() {
        return Err(FdiError::IllConditioned(f64::INFINITY));
    }

    // normalized columns, with the held columns' prior contribution moved to the right side
    let m = active.len();
    let mut x = DMatrix::zeros(rows, m);
    let mut y = tau.clone();
    for r in 0..rows {
        let w = libm::sqrt(weight(r));
        for &j in &held {
            y[r] -= psi[(r, j)] * prior.0[j];
        }
        y[r] *= w;
        for (c, &j) in active.iter().enumerate() {
            x[(r, c)] = w * psi[(r, j)] / norms[j];
        }
    }
    let gram = x.transpose() * &x;
    let eig = SymmetricEigen::new(gram.clone());
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(FdiError::IllConditioned(condition));
    }
    let chol = gram.cholesky().ok_or(FdiError::IllConditioned(condition))?;
    let z = chol.solve(&(x.transpose() * y));

    let mut raw = prior.0.clone();
    for (c, &j) in active.iter().enumerate() {
        raw[j] = z[c] / norms[j];
    }
    let theta = CapacityVector(raw.iter().map(|v| v.clamp(0.0, 1.0)).collect());
    Ok(CapacityEstimate {
        theta,
        raw,
        condition,
        held,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultReport {
    /// 0-based rotor index.
    pub motor: usize,
    pub severity: f64,
}

/// Rotors with θ̂ below 1 − threshold, most severe first, ties by index.
pub fn detect_isolate(theta: &CapacityVector, threshold: f64) -> Result<Vec<FaultReport>, FdiError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(FdiError::InvalidConfig("threshold must lie in (0, 1)"));
    }
    let mut out: Vec<FaultReport> = theta
        .0
        .iter()
        .enumerate()
        .filter(|(_, t)| **t < 1.0 - threshold)
        .map(|(motor, t)| FaultReport {
            motor,
            severity: 1.0 - t,
        })
        .collect();
    out.sort_by(|a, b| b.severity.total_cmp(&a.severity).then(a.motor.cmp(&b.motor)));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdiConfig {
    pub rate_hz: f64,
    pub window_s: f64,
    /// Low-pass cutoff applied to rates and squared speeds; `None` disables filtering.
    pub cutoff_hz: Option<f64>,
    pub forgetting: Forgetting,
    pub threshold: f64,
    /// Relative one-interval prediction residual that restarts the window; `None` disables restarts.
    pub reset_residual: Option<f64>,
    /// Intervals required before estimating.
    pub min_intervals: usize,
}

impl Default for FdiConfig {
    fn default() -> Self {
        FdiConfig {
            rate_hz: 100.0,
            window_s: 0.8,
            cutoff_hz: Some(30.0),
            forgetting: Forgetting::Window,
            threshold: 0.5,
            reset_residual: Some(0.2),
            min_intervals: 10,
        }
    }
}

impl FdiConfig {
    pub fn validate(&self) -> Result<(), FdiError> {
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(FdiError::InvalidConfig("rate must be > 0"));
        }
        if self.window_len() < 3 {
            return Err(FdiError::InvalidConfig("window must hold at least 3 samples"));
        }
        if self.min_intervals < 3 || self.min_intervals > self.window_len() {
            return Err(FdiError::InvalidConfig("min_intervals must lie in [3, window length]"));
        }
        if let Some(r) = self.reset_residual {
            if !(r > 0.0 && r.is_finite()) {
                return Err(FdiError::InvalidConfig("reset residual must be > 0"));
            }
        }
        if let Some(fc) = self.cutoff_hz {
            if !(fc > 0.0 && fc.is_finite()) {
                return Err(FdiError::InvalidConfig("cutoff must be > 0"));
            }
        }
        if let Forgetting::Exponential(l) = self.forgetting {
            if !(l > 0.0 && l <= 1.0) {
                return Err(FdiError::InvalidConfig("forgetting factor must lie in (0, 1]"));
            }
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(FdiError::InvalidConfig("threshold must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.rate_hz
    }

    pub fn window_len(&self) -> usize {
        libm::round(self.window_s * self.rate_hz) as usize
    }
}

/// Sliding-window estimator over sampling intervals.
///
/// Each pushed sample carries the body rates at its timestamp and the mean
/// squared rotor speeds over the interval since the previous sample. Interval
/// torques and their squared speeds pass through the same low-pass filter, so
/// the regression stays consistent. The estimate is held when the data are
/// uninformative. When the newest interval disagrees with the current estimate
/// by more than the reset residual, the window restarts so that pre- and
/// post-change data are not mixed.
#[derive(Debug, Clone)]
pub struct CapacityEstimator {
    pub config: FdiConfig,
    params: VehicleParams,
    actuation: ActuationMatrix,
    prev: Option<FdiSample>,
    spacing: Option<f64>,
    intervals: VecDeque<(Vector3<f64>, Vec<f64>)>,
    filtered: Option<(Vector3<f64>, Vec<f64>)>,
    theta_hat: CapacityVector,
    validated: bool,
    resets: usize,
    last: Option<Result<CapacityEstimate, FdiError>>,
}

impl CapacityEstimator {
    pub fn new(params: VehicleParams, actuation: ActuationMatrix, config: FdiConfig) -> Result<Self, FdiError> {
        config.validate()?;
        let n = actuation.rotors();
        Ok(CapacityEstimator {
            config,
            params,
            actuation,
            prev: None,
            spacing: None,
            intervals: VecDeque::with_capacity(config.window_len()),
            filtered: None,
            theta_hat: CapacityVector::healthy(n),
            validated: false,
            resets: 0,
            last: None,
        })
    }

    pub fn theta_hat(&self) -> &CapacityVector {
        &self.theta_hat
    }

    pub fn last(&self) -> Option<&Result<CapacityEstimate, FdiError>> {
        self.last.as_ref()
    }

    /// Number of window restarts triggered so far.
    pub fn resets(&self) -> usize {
        self.resets
    }

    pub fn push(&mut self, raw: FdiSample) -> Result<&CapacityVector, FdiError> {
        let n = self.actuation.rotors();
        if raw.omega_sq.len() != n {
            return Err(FdiError::DimensionMismatch {
                expected: n,
                got: raw.omega_sq.len(),
            });
        }
        let Some(prev) = self.prev.take() else {
            self.prev = Some(raw);
            return Ok(&self.theta_hat);
        };
        let h = raw.t - prev.t;
        let uniform = self.spacing.is_none_or(|dt| (h - dt).abs() <= 1e-6 * dt);
        if !(h > 0.0) || !uniform {
            self.prev = Some(prev);
            return Err(FdiError::NonUniformSampling);
        }
        self.spacing = Some(h);
        let tau = reconstruct_interval_torques(&[prev, raw.clone()], &self.params)?[0];
        let omega_sq = raw.omega_sq.clone();
        self.prev = Some(raw);

        if let (true, Some(limit)) = (self.validated, self.config.reset_residual) {
            if self.residual(&tau, &omega_sq) > limit {
                // the interval straddles the change; drop it together with the history
                self.intervals.clear();
                self.filtered = None;
                self.validated = false;
                self.resets += 1;
                return Ok(&self.theta_hat);
            }
        }

        let row = self.filter(tau, omega_sq);
        if self.intervals.len() == self.config.window_len() {
            self.intervals.pop_front();
        }
        self.intervals.push_back(row);
        if self.intervals.len() < self.config.min_intervals {
            return Ok(&self.theta_hat);
        }

        let m = self.intervals.len();
        let mut psi = DMatrix::zeros(3 * m, n);
        let mut y = DVector::zeros(3 * m);
        for (i, (t, w)) in self.intervals.iter().enumerate() {
            for k in 0..3 {
                y[3 * i + k] = t[k];
                for j in 0..n {
                    psi[(3 * i + k, j)] = self.actuation.entries[(k + 1, j)] * w[j];
                }
            }
        }
        let result = estimate_capacity(&psi, &y, self.config.forgetting, &self.theta_hat);
        match &result {
            Ok(est) => {
                self.theta_hat = est.theta.clone();
                self.validated = true;
            }
            Err(FdiError::IllConditioned(_)) => {}
            Err(e) => return Err(e.clone()),
        }
        self.last = Some(result);
        Ok(&self.theta_hat)
    }

    /// Prediction error of one interval relative to the largest single-rotor torque.
    fn residual(&self, tau: &Vector3<f64>, omega_sq: &[f64]) -> f64 {
        let a = &self.actuation.entries;
        let mut pred = Vector3::zeros();
        let mut scale = 0.0_f64;
        for (j, w) in omega_sq.iter().enumerate() {
            let col = Vector3::new(a[(1, j)], a[(2, j)], a[(3, j)]) * *w;
            pred += col * self.theta_hat.0[j];
            scale = scale.max(col.norm());
        }
        if scale == 0.0 {
            0.0
        } else {
            (tau - pred).norm() / scale
        }
    }

    fn filter(&mut self, tau: Vector3<f64>, omega_sq: Vec<f64>) -> (Vector3<f64>, Vec<f64>) {
        let Some(fc) = self.config.cutoff_hz else {
            return (tau, omega_sq);
        };
        let alpha = 1.0 - exp(-2.0 * core::f64::consts::PI * fc * self.config.period());
        let next = match self.filtered.take() {
            None => (tau, omega_sq),
            Some((t, w)) => (
                t + (tau - t) * alpha,
                w.iter().zip(&omega_sq).map(|(a, b)| a + alpha * (b - a)).collect(),
            ),
        };
        self.filtered = Some(next.clone());
        next
    }
}
