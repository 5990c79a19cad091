//! Closed-loop simulation with fault injection and optional fault isolation.

use ftmav_core::actuation::CapacityVector;
use ftmav_core::control::{ClosedLoop, ControlError, FlatReference, FlatSample, SimState};
use ftmav_core::fdi::{CapacityEstimator, FdiError, FdiSample};
use ftmav_core::planner::{PlanResult, Trajectory};
use ftmav_core::vehicle::gyro_sum;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{ReferenceSource, ScenarioConfig};
use crate::error::HarnessError;
use crate::format::{fmt_num, Table};
use crate::planning::PlanningContext;
use crate::scenarios::VivianiCurve;

#[derive(Debug, Clone, PartialEq)]
pub struct SimRow {
    pub t: f64,
    pub pos: [f64; 3],
    pub euler: [f64; 3],
    /// Reference (x, y, z, ψ).
    pub reference: [f64; 4],
    pub u_des: [f64; 4],
    pub u_achieved: [f64; 4],
    pub omega: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_hat: Vec<f64>,
}

impl SimRow {
    pub fn position_error(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.pos[i] - self.reference[i])
    }

    pub fn error_norm(&self) -> f64 {
        self.position_error().iter().map(|e| e * e).sum::<f64>().sqrt()
    }
}

/// Uniform-rate simulation record.
#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub rotors: usize,
    pub rows: Vec<SimRow>,
    /// Set when the run aborted early; `failure` holds the reason.
    pub partial: bool,
    pub failure: Option<String>,
    pub fdi_resets: usize,
}

impl SimLog {
    pub fn header(rotors: usize) -> Vec<String> {
        let mut h: Vec<String> = [
            "t", "x", "y", "z", "phi", "theta", "psi", "x_ref", "y_ref", "z_ref", "psi_ref", "T_des", "tau_x_des",
            "tau_y_des", "tau_z_des", "T", "tau_x", "tau_y", "tau_z",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for prefix in ["omega", "theta", "theta_hat"] {
            h.extend((1..=rotors).map(|i| format!("{prefix}_{i}")));
        }
        h.push("error".into());
        h
    }

    pub fn table(&self) -> Table {
        let mut t = Table { header: Self::header(self.rotors), rows: Vec::new() };
        for r in &self.rows {
            let mut row: Vec<String> = std::iter::once(r.t)
                .chain(r.pos)
                .chain(r.euler)
                .chain(r.reference)
                .chain(r.u_des)
                .chain(r.u_achieved)
                .chain(r.omega.iter().copied())
                .chain(r.theta.iter().copied())
                .chain(r.theta_hat.iter().copied())
                .map(fmt_num)
                .collect();
            row.push(fmt_num(r.error_norm()));
            t.push(row);
        }
        t
    }

    /// Flown (x, y, z, ψ) over time.
    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            times: self.rows.iter().map(|r| r.t).collect(),
            q: self.rows.iter().map(|r| [r.pos[0], r.pos[1], r.pos[2], r.euler[2]]).collect(),
        }
    }

    /// Largest per-axis absolute position error over rows with `t >= from`.
    pub fn peak_axis_error(&self, from: f64) -> [f64; 3] {
        let mut peak = [0.0_f64; 3];
        for r in self.rows.iter().filter(|r| r.t >= from) {
            for (p, e) in peak.iter_mut().zip(r.position_error()) {
                *p = p.max(e.abs());
            }
        }
        peak
    }

    /// Largest position error norm over rows with `from <= t`.
    pub fn peak_error(&self, from: f64) -> f64 {
        self.rows.iter().filter(|r| r.t >= from).map(SimRow::error_norm).fold(0.0, f64::max)
    }
}

enum Reference {
    Curve(VivianiCurve),
    Samples(FlatReference),
}

impl Reference {
    fn at(&self, t: f64) -> FlatSample {
        match self {
            Reference::Curve(c) => c.sample(t),
            Reference::Samples(r) => r.at(t),
        }
    }
}

fn reference(cfg: &ScenarioConfig) -> Result<Reference, HarnessError> {
    match cfg.sim.reference {
        ReferenceSource::Curve => VivianiCurve::from_path(&cfg.mission.path)
            .map(Reference::Curve)
            .ok_or_else(|| HarnessError::Config("curve reference needs a viviani path".into())),
        ReferenceSource::Plan => {
            let ctx = PlanningContext::new(cfg)?;
            let plan = ctx.plan(cfg.planner.mode)?;
            Ok(Reference::Samples(FlatReference::new(plan.flat_reference())?))
        }
    }
}

fn row(t: f64, sim: &SimState, r: &FlatSample, u_des: [f64; 4], u_ach: [f64; 4], hat: &CapacityVector) -> SimRow {
    let e = sim.rigid.euler;
    SimRow {
        t,
        pos: [sim.rigid.pos.x, sim.rigid.pos.y, sim.rigid.pos.z],
        euler: [e.x, e.y, e.z],
        reference: [r.x[0], r.y[0], r.z[0], r.psi[0]],
        u_des,
        u_achieved: u_ach,
        omega: sim.motors.speeds.clone(),
        theta: sim.theta.0.clone(),
        theta_hat: hat.0.clone(),
    }
}

/// Runs the configured scenario. A singular attitude ends the run early with a flagged partial log.
pub fn run_simulation(cfg: &ScenarioConfig) -> Result<SimLog, HarnessError> {
    cfg.validate()?;
    let reference = reference(cfg)?;
    simulate(cfg, reference)
}

/// Runs the configured scenario tracking an already computed plan.
pub fn run_tracking(cfg: &ScenarioConfig, plan: &PlanResult) -> Result<SimLog, HarnessError> {
    cfg.validate()?;
    simulate(cfg, Reference::Samples(FlatReference::new(plan.flat_reference())?))
}

fn simulate(cfg: &ScenarioConfig, reference: Reference) -> Result<SimLog, HarnessError> {
    let p = cfg.params()?;
    let n = p.rotor_count();
    let s = &cfg.sim;
    let mut cl = ClosedLoop::with_rates(p.clone(), cfg.gains.gains()?, s.dt, s.substeps)?;
    let start = reference.at(0.0);
    let mut sim = SimState::hover(&p, start.position());

    let fdi_cfg = cfg.fdi.config()?;
    let fdi_every = (fdi_cfg.period() / s.dt).round() as usize;
    if cfg.fdi.enabled && (fdi_every == 0 || (fdi_every as f64 * s.dt - fdi_cfg.period()).abs() > 1e-9) {
        return Err(HarnessError::Config("fdi period must be a whole multiple of sim dt".into()));
    }
    let mut est = match cfg.fdi.enabled {
        true => Some(
            CapacityEstimator::new(p.clone(), cl.actuation.clone(), fdi_cfg)
                .map_err(|e| HarnessError::Config(e.to_string()))?,
        ),
        false => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let noise = Normal::new(0.0, s.gyro_noise_std).map_err(|e| HarnessError::Config(e.to_string()))?;

    let mut hat = CapacityVector::healthy(n);
    let mut acc = vec![0.0; n];
    let mut applied = 0;
    let steps = (s.duration / s.dt).round() as usize;
    let hover = [p.hover_thrust(), 0.0, 0.0, 0.0];
    let mut log = SimLog { rotors: n, rows: Vec::new(), partial: false, failure: None, fdi_resets: 0 };
    log.rows.push(row(0.0, &sim, &start, hover, hover, &hat));

    for k in 0..steps {
        let t = k as f64 * s.dt;
        if let Some(est) = est.as_mut().filter(|_| k % fdi_every == 0) {
            let omega_sq = match k {
                0 => sim.motors.squared(),
                _ => acc.iter().map(|v| v / fdi_every as f64).collect(),
            };
            acc.iter_mut().for_each(|v| *v = 0.0);
            let mut rates = sim.rigid.rates;
            if s.gyro_noise_std > 0.0 {
                rates += Vector3::from_fn(|_, _| noise.sample(&mut rng));
            }
            let sample = FdiSample { t, rates, omega_sq, w_g: gyro_sum(&sim.motors.speeds, &p.pattern) };
            match est.push(sample) {
                Ok(h) => hat = h.clone(),
                Err(e @ (FdiError::NonUniformSampling | FdiError::DimensionMismatch { .. })) => {
                    return Err(HarnessError::Numerical(e.to_string()))
                }
                // uninformative window: keep the previous estimate
                Err(_) => {}
            }
        }
        while let Some(f) = cfg.faults.get(applied).filter(|f| t + 1e-9 >= f.onset) {
            sim.theta.0[f.motor - 1] = f.residual;
            applied += 1;
        }
        let r = reference.at(t);
        let step = match cl.step(&mut sim, &r, &hat) {
            Ok(step) => step,
            Err(e @ ControlError::Vehicle(_)) => {
                log.partial = true;
                log.failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e.into()),
        };
        for (a, v) in acc.iter_mut().zip(&step.omega_sq_mean) {
            *a += v;
        }
        if (k + 1) % s.log_every == 0 {
            let now = reference.at(sim.t);
            log.rows.push(row(sim.t, &sim, &now, step.u_des.to_array(), step.u_achieved.to_array(), &hat));
        }
    }
    log.fdi_resets = est.map_or(0, |e| e.resets());
    Ok(log)
}
