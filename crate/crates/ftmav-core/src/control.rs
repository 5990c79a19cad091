//! Cascade PD tracking: altitude, attitude and flat xy position control.

use alloc::vec::Vec;

use libm::{cos, sin, sqrt};
use nalgebra::{DMatrix, Vector2, Vector3};
use thiserror::Error;

use crate::actuation::{
    build_actuation_matrix, effective_matrix, pseudo_inverse_allocate, saturate, ActuationError, ActuationMatrix,
    CapacityVector,
};
use crate::vehicle::{
    euler_rate_map_inv, integrate_step, motor_controller, ControlInput, MotorBank, Plant, RigidState, StepInput,
    VehicleError, VehicleParams,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("gain {0} must be finite and > 0")]
    NonPositiveGain(&'static str),
    #[error("invalid reference: {0}")]
    InvalidReference(&'static str),
    #[error("invalid timing: {0}")]
    InvalidTiming(&'static str),
    #[error(transparent)]
    Vehicle(#[from] VehicleError),
    #[error(transparent)]
    Actuation(#[from] ActuationError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub k_pz: f64,
    pub k_dz: f64,
    pub k_p: f64,
    pub k_d: f64,
    pub k_pxy: f64,
    pub k_dxy: f64,
    pub k_omega: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Gains {
            k_pz: 52.56,
            k_dz: 14.5,
            k_p: 506.5,
            k_d: 45.0,
            k_pxy: 1.5,
            k_dxy: 2.5,
            k_omega: 2.0,
        }
    }
}

impl Gains {
    pub fn validate(&self) -> Result<(), ControlError> {
        let all = [
            (self.k_pz, "k_pz"),
            (self.k_dz, "k_dz"),
            (self.k_p, "k_p"),
            (self.k_d, "k_d"),
            (self.k_pxy, "k_pxy"),
            (self.k_dxy, "k_dxy"),
            (self.k_omega, "k_omega"),
        ];
        for (v, name) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(ControlError::NonPositiveGain(name));
            }
        }
        Ok(())
    }
}

/// Reference at one instant: x, y through the 4th derivative, z and ψ through the 2nd.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlatSample {
    pub t: f64,
    pub x: [f64; 5],
    pub y: [f64; 5],
    pub z: [f64; 3],
    pub psi: [f64; 3],
}

impl FlatSample {
    pub fn hold(t: f64, pos: Vector3<f64>, psi: f64) -> Self {
        FlatSample {
            t,
            x: [pos.x, 0.0, 0.0, 0.0, 0.0],
            y: [pos.y, 0.0, 0.0, 0.0, 0.0],
            z: [pos.z, 0.0, 0.0],
            psi: [psi, 0.0, 0.0],
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x[0], self.y[0], self.z[0])
    }

    fn lerp(&self, o: &FlatSample, w: f64, t: f64) -> FlatSample {
        fn mix<const N: usize>(a: &[f64; N], b: &[f64; N], w: f64) -> [f64; N] {
            core::array::from_fn(|k| a[k] + w * (b[k] - a[k]))
        }
        FlatSample {
            t,
            x: mix(&self.x, &o.x, w),
            y: mix(&self.y, &o.y, w),
            z: mix(&self.z, &o.z, w),
            psi: mix(&self.psi, &o.psi, w),
        }
    }
}

/// Uniformly sampled reference trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatReference {
    pub samples: Vec<FlatSample>,
}

impl FlatReference {
    pub fn new(samples: Vec<FlatSample>) -> Result<Self, ControlError> {
        if samples.is_empty() {
            return Err(ControlError::InvalidReference("no samples"));
        }
        if samples.len() > 1 {
            let dt = samples[1].t - samples[0].t;
            if !(dt > 0.0) {
                return Err(ControlError::InvalidReference("timestamps must increase"));
            }
            for w in samples.windows(2) {
                if ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt.max(1.0) {
                    return Err(ControlError::InvalidReference("sample spacing must be uniform"));
                }
            }
        }
        let finite = samples
            .iter()
            .all(|s| s.x.iter().chain(&s.y).chain(&s.z).chain(&s.psi).all(|v| v.is_finite()));
        if !finite {
            return Err(ControlError::InvalidReference("non-finite value"));
        }
        Ok(FlatReference { samples })
    }

    pub fn start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// Linear interpolation; holds the end samples outside the covered interval.
    pub fn at(&self, t: f64) -> FlatSample {
        let n = self.samples.len();
        if n == 1 || t <= self.start() {
            return FlatSample { t, ..self.samples[0] };
        }
        if t >= self.end() {
            return FlatSample { t, ..self.samples[n - 1] };
        }
        let dt = self.samples[1].t - self.samples[0].t;
        let u = (t - self.start()) / dt;
        let k = (u as usize).min(n - 2);
        self.samples[k].lerp(&self.samples[k + 1], u - k as f64, t)
    }
}

/// T_des = m(g + z̈_ref + K_dz·ė_z + K_pz·e_z).
pub fn altitude_control(z_ref: &[f64; 3], z: f64, z_dot: f64, gains: &Gains, p: &VehicleParams) -> f64 {
    let e = z_ref[0] - z;
    let e_dot = z_ref[1] - z_dot;
    p.mass * (p.g + z_ref[2] + gains.k_dz * e_dot + gains.k_pz * e)
}

/// Angle, rate and acceleration reference for one Euler axis.
pub type AxisRef = [f64; 3];

/// τ = J(Ψ̈_ref + K_d·ė + K_p·e) per axis.
pub fn attitude_control(
    refs: &[AxisRef; 3],
    euler: &Vector3<f64>,
    euler_rate: &Vector3<f64>,
    gains: &Gains,
    p: &VehicleParams,
) -> Vector3<f64> {
    let j = p.inertia();
    Vector3::from_fn(|k, _| {
        let e = refs[k][0] - euler[k];
        let e_dot = refs[k][1] - euler_rate[k];
        j[k] * (refs[k][2] + gains.k_d * e_dot + gains.k_p * e)
    })
}

/// Roll and pitch that produce world acceleration (ẍ, ÿ) at heading ψ, linearized about hover.
pub fn flat_angles(acc: Vector2<f64>, psi: f64, g: f64) -> (f64, f64) {
    let (s, c) = (sin(psi), cos(psi));
    ((s * acc.x - c * acc.y) / g, (c * acc.x + s * acc.y) / g)
}

/// Inverse of [`flat_angles`].
pub fn flat_acceleration(phi: f64, theta: f64, psi: f64, g: f64) -> Vector2<f64> {
    let (s, c) = (sin(psi), cos(psi));
    Vector2::new(g * (c * theta + s * phi), g * (s * theta - c * phi))
}

/// Roll and pitch references with their first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TiltReference {
    pub phi: AxisRef,
    pub theta: AxisRef,
}

/// xy position controller with backward-difference estimates of acceleration and jerk.
#[derive(Debug, Clone, Default)]
pub struct XyController {
    prev_vel: Option<Vector2<f64>>,
    prev_acc: Option<Vector2<f64>>,
}

impl XyController {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }

    /// `vel` is the world-frame velocity; `dt` the control period.
    pub fn update(
        &mut self,
        r: &FlatSample,
        pos: &Vector3<f64>,
        vel: &Vector3<f64>,
        gains: &Gains,
        g: f64,
        dt: f64,
    ) -> TiltReference {
        let rd = |k: usize| Vector2::new(r.x[k], r.y[k]);
        let v = Vector2::new(vel.x, vel.y);
        // without history the estimates fall back to the reference so their error terms vanish
        let acc = match self.prev_vel {
            Some(pv) => (v - pv) / dt,
            None => rd(2),
        };
        let jerk = match self.prev_acc {
            Some(pa) => (acc - pa) / dt,
            None => rd(3),
        };
        self.prev_vel = Some(v);
        self.prev_acc = Some(acc);

        let e = rd(0) - Vector2::new(pos.x, pos.y);
        let e1 = rd(1) - v;
        let e2 = rd(2) - acc;
        let e3 = rd(3) - jerk;
        let a = rd(2) + e1 * gains.k_dxy + e * gains.k_pxy;
        let j = rd(3) + e2 * gains.k_dxy + e1 * gains.k_pxy;
        let s = rd(4) + e3 * gains.k_dxy + e2 * gains.k_pxy;
        xy_tilt(a, j, s, r.psi[0], g)
    }
}

/// Maps commanded acceleration, jerk and snap to tilt references at constant heading.
pub fn xy_tilt(acc: Vector2<f64>, jerk: Vector2<f64>, snap: Vector2<f64>, psi: f64, g: f64) -> TiltReference {
    let (p0, t0) = flat_angles(acc, psi, g);
    let (p1, t1) = flat_angles(jerk, psi, g);
    let (p2, t2) = flat_angles(snap, psi, g);
    TiltReference {
        phi: [p0, p1, p2],
        theta: [t0, t1, t2],
    }
}

/// Full simulation state for the closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub rigid: RigidState,
    pub motors: MotorBank,
    /// True rotor capacities.
    pub theta: CapacityVector,
}

impl SimState {
    /// Hovering at `pos` with every rotor at trim speed.
    pub fn hover(p: &VehicleParams, pos: Vector3<f64>) -> Self {
        let n = p.rotor_count();
        let w = sqrt(p.hover_thrust() / (n as f64 * p.b));
        SimState {
            t: 0.0,
            rigid: RigidState::at(pos),
            motors: MotorBank::at_speed(n, w),
            theta: CapacityVector::healthy(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    pub t: f64,
    pub reference: FlatSample,
    pub u_des: ControlInput,
    pub omega_ref: Vec<f64>,
    pub omega: Vec<f64>,
    /// Trapezoidal time average of Ω² over the period.
    pub omega_sq_mean: Vec<f64>,
    pub u_achieved: ControlInput,
}

/// Cascade controller, allocator and plant advanced one control period at a time.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub params: VehicleParams,
    pub gains: Gains,
    pub actuation: ActuationMatrix,
    pub control_dt: f64,
    pub motor_substeps: usize,
    xy: XyController,
    alloc_cache: Option<(Vec<f64>, DMatrix<f64>)>,
}

impl ClosedLoop {
    /// 500 Hz control with a 1 kHz motor loop.
    pub fn new(params: VehicleParams, gains: Gains) -> Result<Self, ControlError> {
        Self::with_rates(params, gains, 0.002, 2)
    }

    pub fn with_rates(
        params: VehicleParams,
        gains: Gains,
        control_dt: f64,
        motor_substeps: usize,
    ) -> Result<Self, ControlError> {
        params.validate()?;
        gains.validate()?;
        if !(control_dt > 0.0 && control_dt.is_finite()) || motor_substeps == 0 {
            return Err(ControlError::InvalidTiming("control period and substeps must be positive"));
        }
        let actuation = build_actuation_matrix(&params)?;
        Ok(ClosedLoop {
            params,
            gains,
            actuation,
            control_dt,
            motor_substeps,
            xy: XyController::new(),
            alloc_cache: None,
        })
    }

    pub fn reset(&mut self) {
        self.xy.reset();
    }

    /// Desired thrust and torques for the current state.
    pub fn desired_input(&mut self, s: &RigidState, r: &FlatSample) -> Result<ControlInput, ControlError> {
        let p = &self.params;
        let vel = s.world_velocity();
        let tilt = self.xy.update(r, &s.pos, &vel, &self.gains, p.g, self.control_dt);
        let thrust = altitude_control(&r.z, s.pos.z, vel.z, &self.gains, p);
        let euler_rate = euler_rate_map_inv(s.euler.x, s.euler.y)? * s.rates;
        let torque = attitude_control(&[tilt.phi, tilt.theta, r.psi], &s.euler, &euler_rate, &self.gains, p);
        Ok(ControlInput { thrust, torque })
    }

    fn allocation(&mut self, theta_hat: &CapacityVector) -> Result<&DMatrix<f64>, ControlError> {
        let stale = self.alloc_cache.as_ref().is_none_or(|(th, _)| th.as_slice() != theta_hat.as_slice());
        if stale {
            let b = effective_matrix(&self.actuation, theta_hat)?;
            self.alloc_cache = Some((theta_hat.0.clone(), b));
        }
        Ok(&self.alloc_cache.as_ref().expect("filled").1)
    }

    /// One control period: tilt references, PD laws, allocation with `theta_hat`, motor loop, plant.
    pub fn step(
        &mut self,
        sim: &mut SimState,
        r: &FlatSample,
        theta_hat: &CapacityVector,
    ) -> Result<StepLog, ControlError> {
        let u_des = self.desired_input(&sim.rigid, r)?;
        let omega_max = self.params.omega_max;
        let b = self.allocation(theta_hat)?;
        let raw = pseudo_inverse_allocate(b, &u_des)?;
        let omega_ref: Vec<f64> = saturate(&raw, omega_max).iter().map(|w| sqrt(*w)).collect();

        let h = self.control_dt / self.motor_substeps as f64;
        let plant = Plant {
            params: &self.params,
            actuation: &self.actuation.entries,
        };
        let mut omega_sq_mean = alloc::vec![0.0; sim.motors.speeds.len()];
        for _ in 0..self.motor_substeps {
            let before = sim.motors.squared();
            let volts: Vec<f64> = omega_ref
                .iter()
                .zip(&sim.motors.speeds)
                .map(|(wr, w)| motor_controller(*wr, *w, &self.params, self.gains.k_omega))
                .collect();
            let input = StepInput {
                voltages: &volts,
                theta: sim.theta.as_slice(),
            };
            let (rigid, motors) = integrate_step(&sim.rigid, &sim.motors, &input, &plant, h)?;
            sim.rigid = rigid;
            sim.motors = motors;
            for ((m, a), b) in omega_sq_mean.iter_mut().zip(&before).zip(sim.motors.squared()) {
                *m += 0.5 * (a + b) / self.motor_substeps as f64;
            }
        }
        sim.t += self.control_dt;
        let u_achieved = plant.wrench(&sim.motors.speeds, sim.theta.as_slice());
        Ok(StepLog {
            t: sim.t,
            reference: *r,
            u_des,
            omega_ref,
            omega: sim.motors.speeds.clone(),
            omega_sq_mean,
            u_achieved,
        })
    }
}
