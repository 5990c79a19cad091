//! Rigid-body and DC-motor dynamics.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use libm::{cos, sin, tan};
use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Margin kept away from the pitch singularity at ±π/2.
pub const PITCH_GUARD: f64 = 1e-3;

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VehicleError {
    #[error("pitch angle {theta} rad is within {PITCH_GUARD} rad of ±π/2")]
    SingularAttitude { theta: f64 },
    #[error("invalid vehicle parameter: {0}")]
    InvalidParams(&'static str),
    #[error("invalid spin pattern character {0:?}")]
    InvalidPattern(char),
}

/// Rotor spin direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    P,
    N,
}

impl Spin {
    /// Sign used in the gyroscopic sum.
    pub fn gyro_sign(self) -> f64 {
        match self {
            Spin::P => -1.0,
            Spin::N => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinPattern(Vec<Spin>);

impl SpinPattern {
    pub fn new(spins: Vec<Spin>) -> Self {
        SpinPattern(spins)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.0
    }

    pub fn is_balanced(&self) -> bool {
        let p = self.0.iter().filter(|s| **s == Spin::P).count();
        2 * p == self.0.len()
    }
}

impl FromStr for SpinPattern {
    type Err = VehicleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                'P' | 'p' => Ok(Spin::P),
                'N' | 'n' => Ok(Spin::N),
                other => Err(VehicleError::InvalidPattern(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(SpinPattern)
    }
}

impl fmt::Display for SpinPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(match s {
                Spin::P => "P",
                Spin::N => "N",
            })?;
        }
        Ok(())
    }
}

/// Motor electrical constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorConstants {
    /// Back-EMF constant, V·s/rad.
    pub ke: f64,
    /// Torque constant, N·m/A.
    pub km: f64,
    /// Winding resistance, Ω.
    pub r: f64,
    /// Supply voltage limit, V.
    pub v_max: f64,
}

impl Default for MotorConstants {
    fn default() -> Self {
        MotorConstants {
            ke: 0.01,
            km: 0.01,
            r: 1.0,
            v_max: 24.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    pub mass: f64,
    pub arm: f64,
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
    /// Rotor inertia about its spin axis.
    pub izzm: f64,
    /// Thrust coefficient b.
    pub b: f64,
    /// Drag coefficient d.
    pub d: f64,
    pub omega_max: f64,
    pub pattern: SpinPattern,
    pub motor: MotorConstants,
    pub g: f64,
}

impl VehicleParams {
    pub fn rotor_count(&self) -> usize {
        self.pattern.len()
    }

    pub fn validate(&self) -> Result<(), VehicleError> {
        let positive = [
            (self.mass, "mass must be > 0"),
            (self.arm, "arm length must be > 0"),
            (self.ixx, "ixx must be > 0"),
            (self.iyy, "iyy must be > 0"),
            (self.izz, "izz must be > 0"),
            (self.izzm, "izzm must be > 0"),
            (self.b, "thrust coefficient must be > 0"),
            (self.d, "drag coefficient must be > 0"),
            (self.omega_max, "omega_max must be > 0"),
            (self.g, "gravity must be > 0"),
            (self.motor.ke, "ke must be > 0"),
            (self.motor.km, "km must be > 0"),
            (self.motor.r, "motor resistance must be > 0"),
            (self.motor.v_max, "v_max must be > 0"),
        ];
        for (v, msg) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(VehicleError::InvalidParams(msg));
            }
        }
        if !matches!(self.rotor_count(), 4 | 6 | 8) {
            return Err(VehicleError::InvalidParams("rotor count must be 4, 6 or 8"));
        }
        Ok(())
    }

    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.g
    }

    pub fn inertia(&self) -> Vector3<f64> {
        Vector3::new(self.ixx, self.iyy, self.izz)
    }

    fn stock(mass: f64, ixy: f64, izz: f64, izzm: f64, b: f64, d: f64, pattern: &str) -> Self {
        VehicleParams {
            mass,
            arm: 0.211,
            ixx: ixy,
            iyy: ixy,
            izz,
            izzm,
            b,
            d,
            omega_max: 840.0,
            pattern: pattern.parse().expect("stock pattern"),
            motor: MotorConstants::default(),
            g: GRAVITY,
        }
    }

    pub fn stock_quad() -> Self {
        Self::stock(1.32, 0.0128, 0.0239, 4.3e-5, 9.9865e-6, 1.5978e-7, "PNPN")
    }

    pub fn stock_hexa(pattern: &str) -> Self {
        Self::stock(1.54, 0.0168, 0.0308, 2e-5, 8.5485e-6, 1.3678e-7, pattern)
    }

    pub fn stock_octo(pattern: &str) -> Self {
        Self::stock(1.8, 0.0429, 0.0748, 2e-5, 8.5485e-6, 1.3678e-7, pattern)
    }
}

/// 12-dimensional vehicle state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidState {
    /// World position (x, y, z).
    pub pos: Vector3<f64>,
    /// Body velocity (u, v, w).
    pub vel: Vector3<f64>,
    /// Body rates (P, Q, R).
    pub rates: Vector3<f64>,
    /// Euler angles (φ, θ, ψ), ZYX.
    pub euler: Vector3<f64>,
}

impl RigidState {
    pub fn at(pos: Vector3<f64>) -> Self {
        RigidState {
            pos,
            ..Default::default()
        }
    }

    pub fn to_array(&self) -> [f64; 12] {
        let mut a = [0.0; 12];
        a[0..3].copy_from_slice(self.pos.as_slice());
        a[3..6].copy_from_slice(self.vel.as_slice());
        a[6..9].copy_from_slice(self.rates.as_slice());
        a[9..12].copy_from_slice(self.euler.as_slice());
        a
    }

    pub fn from_array(a: &[f64; 12]) -> Self {
        RigidState {
            pos: Vector3::new(a[0], a[1], a[2]),
            vel: Vector3::new(a[3], a[4], a[5]),
            rates: Vector3::new(a[6], a[7], a[8]),
            euler: Vector3::new(a[9], a[10], a[11]),
        }
    }

    /// World-frame velocity.
    pub fn world_velocity(&self) -> Vector3<f64> {
        rotation_matrix(self.euler.x, self.euler.y, self.euler.z) * self.vel
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Thrust and body torques.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub thrust: f64,
    pub torque: Vector3<f64>,
}

impl ControlInput {
    pub fn new(thrust: f64, tx: f64, ty: f64, tz: f64) -> Self {
        ControlInput {
            thrust,
            torque: Vector3::new(tx, ty, tz),
        }
    }

    pub fn hover(params: &VehicleParams) -> Self {
        Self::new(params.hover_thrust(), 0.0, 0.0, 0.0)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.thrust, self.torque.x, self.torque.y, self.torque.z]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Rotor speeds and applied voltages.
#[derive(Debug, Clone, PartialEq)]
pub struct MotorBank {
    pub speeds: Vec<f64>,
    pub voltages: Vec<f64>,
}

impl MotorBank {
    pub fn new(n: usize) -> Self {
        MotorBank {
            speeds: alloc::vec![0.0; n],
            voltages: alloc::vec![0.0; n],
        }
    }

    pub fn at_speed(n: usize, omega: f64) -> Self {
        MotorBank {
            speeds: alloc::vec![omega; n],
            voltages: alloc::vec![0.0; n],
        }
    }

    pub fn squared(&self) -> Vec<f64> {
        self.speeds.iter().map(|w| w * w).collect()
    }
}

/// ZYX rotation R(ψ)·R(θ)·R(φ) from body to world.
pub fn rotation_matrix(phi: f64, theta: f64, psi: f64) -> Matrix3<f64> {
    let (sf, cf) = (sin(phi), cos(phi));
    let (st, ct) = (sin(theta), cos(theta));
    let (sp, cp) = (sin(psi), cos(psi));
    Matrix3::new(
        cp * ct,
        cp * st * sf - sp * cf,
        cp * st * cf + sp * sf,
        sp * ct,
        sp * st * sf + cp * cf,
        sp * st * cf - cp * sf,
        -st,
        ct * sf,
        ct * cf,
    )
}

fn check_pitch(theta: f64) -> Result<(), VehicleError> {
    if !theta.is_finite() || theta.abs() >= core::f64::consts::FRAC_PI_2 - PITCH_GUARD {
        Err(VehicleError::SingularAttitude { theta })
    } else {
        Ok(())
    }
}

/// Map from body rates to Euler angle rates.
pub fn euler_rate_map_inv(phi: f64, theta: f64) -> Result<Matrix3<f64>, VehicleError> {
    check_pitch(theta)?;
    let (sf, cf) = (sin(phi), cos(phi));
    let (ct, tt) = (cos(theta), tan(theta));
    Ok(Matrix3::new(
        1.0,
        sf * tt,
        cf * tt,
        0.0,
        cf,
        -sf,
        0.0,
        sf / ct,
        cf / ct,
    ))
}

/// Time derivative of the rigid-body state.
pub fn state_derivative(
    s: &RigidState,
    u: &ControlInput,
    w_g: f64,
    p: &VehicleParams,
) -> Result<RigidState, VehicleError> {
    let (phi, theta, psi) = (s.euler.x, s.euler.y, s.euler.z);
    check_pitch(theta)?;
    let (uu, vv, ww) = (s.vel.x, s.vel.y, s.vel.z);
    let (pr, qr, rr) = (s.rates.x, s.rates.y, s.rates.z);
    let (sf, cf) = (sin(phi), cos(phi));
    let (st, ct) = (sin(theta), cos(theta));
    let g = p.g;

    let vel_dot = Vector3::new(
        rr * vv - qr * ww + g * st,
        pr * ww - rr * uu - g * ct * sf,
        qr * uu - pr * vv - g * ct * cf + u.thrust / p.mass,
    );
    let rates_dot = Vector3::new(
        (p.iyy - p.izz) / p.ixx * qr * rr + u.torque.x / p.ixx - p.izzm / p.ixx * qr * w_g,
        (p.izz - p.ixx) / p.iyy * pr * rr + u.torque.y / p.iyy + p.izzm / p.iyy * pr * w_g,
        (p.ixx - p.iyy) / p.izz * pr * qr + u.torque.z / p.izz,
    );
    let pos_dot = rotation_matrix(phi, theta, psi) * s.vel;
    let euler_dot = euler_rate_map_inv(phi, theta)? * s.rates;
    Ok(RigidState {
        pos: pos_dot,
        vel: vel_dot,
        rates: rates_dot,
        euler: euler_dot,
    })
}

/// Rotor acceleration under applied voltage `v`.
pub fn motor_derivative(omega: f64, v: f64, p: &VehicleParams) -> f64 {
    let m = &p.motor;
    (m.km * v / m.r - m.km * m.ke * omega / m.r - p.d * omega * omega) / p.izzm
}

/// Proportional speed controller with steady-state feedforward.
pub fn motor_controller(omega_ref: f64, omega: f64, p: &VehicleParams, k_omega: f64) -> f64 {
    let m = &p.motor;
    let v = k_omega * (omega_ref - omega) + m.ke * omega_ref + m.r * p.d * omega_ref * omega_ref / m.km;
    v.clamp(0.0, m.v_max)
}

/// Inertia of a central sphere with point-mass motors on the arms.
pub fn compute_inertia(sphere_mass: f64, radius: f64, motor_mass: f64, arm: f64) -> (f64, f64, f64) {
    let core = 2.0 * sphere_mass * radius * radius / 5.0;
    let ixx = core + 4.0 * motor_mass * arm * arm;
    (ixx, ixx, core + 8.0 * motor_mass * arm * arm)
}

/// Net rotor angular speed entering the gyroscopic torque.
pub fn gyro_sum(speeds: &[f64], pattern: &SpinPattern) -> f64 {
    speeds
        .iter()
        .zip(pattern.spins())
        .map(|(w, s)| s.gyro_sign() * w)
        .sum()
}

/// Per-step inputs held constant over one integration step.
#[derive(Debug, Clone, Copy)]
pub struct StepInput<'a> {
    pub voltages: &'a [f64],
    /// True rotor capacities.
    pub theta: &'a [f64],
}

/// Coupled airframe and motor model used by the integrator.
pub struct Plant<'a> {
    pub params: &'a VehicleParams,
    /// 4×n actuation matrix rows (T, τx, τy, τz), column-major per rotor.
    pub actuation: &'a nalgebra::DMatrix<f64>,
}

impl Plant<'_> {
    /// Forces produced by the given rotor speeds.
    pub fn wrench(&self, speeds: &[f64], theta: &[f64]) -> ControlInput {
        let mut out = [0.0; 4];
        for (i, (w, th)) in speeds.iter().zip(theta).enumerate() {
            let s = th * w * w;
            for (r, o) in out.iter_mut().enumerate() {
                *o += self.actuation[(r, i)] * s;
            }
        }
        ControlInput::from_slice(&out)
    }

    fn deriv(
        &self,
        s: &RigidState,
        speeds: &[f64],
        input: &StepInput<'_>,
    ) -> Result<(RigidState, Vec<f64>), VehicleError> {
        let u = self.wrench(speeds, input.theta);
        let wg = gyro_sum(speeds, &self.params.pattern);
        let ds = state_derivative(s, &u, wg, self.params)?;
        let dw = speeds
            .iter()
            .zip(input.voltages)
            .map(|(w, v)| motor_derivative(*w, *v, self.params))
            .collect();
        Ok((ds, dw))
    }
}

fn axpy_state(s: &RigidState, h: f64, d: &RigidState) -> RigidState {
    RigidState {
        pos: s.pos + d.pos * h,
        vel: s.vel + d.vel * h,
        rates: s.rates + d.rates * h,
        euler: s.euler + d.euler * h,
    }
}

fn axpy_vec(a: &[f64], h: f64, d: &[f64]) -> Vec<f64> {
    a.iter().zip(d).map(|(x, y)| x + h * y).collect()
}

/// One fixed-step RK4 advance of the coupled rigid-body and motor equations.
pub fn integrate_step(
    state: &RigidState,
    motors: &MotorBank,
    input: &StepInput<'_>,
    plant: &Plant<'_>,
    dt: f64,
) -> Result<(RigidState, MotorBank), VehicleError> {
    let w0 = &motors.speeds;
    let (k1s, k1w) = plant.deriv(state, w0, input)?;
    let (k2s, k2w) = plant.deriv(&axpy_state(state, dt / 2.0, &k1s), &axpy_vec(w0, dt / 2.0, &k1w), input)?;
    let (k3s, k3w) = plant.deriv(&axpy_state(state, dt / 2.0, &k2s), &axpy_vec(w0, dt / 2.0, &k2w), input)?;
    let (k4s, k4w) = plant.deriv(&axpy_state(state, dt, &k3s), &axpy_vec(w0, dt, &k3w), input)?;

    let comb = |a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>, d: Vector3<f64>| {
        (a + b * 2.0 + c * 2.0 + d) * (dt / 6.0)
    };
    let next = RigidState {
        pos: state.pos + comb(k1s.pos, k2s.pos, k3s.pos, k4s.pos),
        vel: state.vel + comb(k1s.vel, k2s.vel, k3s.vel, k4s.vel),
        rates: state.rates + comb(k1s.rates, k2s.rates, k3s.rates, k4s.rates),
        euler: state.euler + comb(k1s.euler, k2s.euler, k3s.euler, k4s.euler),
    };
    check_pitch(next.euler.y)?;
    let wmax = plant.params.omega_max;
    let speeds = (0..w0.len())
        .map(|i| {
            let w = w0[i] + dt / 6.0 * (k1w[i] + 2.0 * k2w[i] + 2.0 * k3w[i] + k4w[i]);
            w.clamp(0.0, wmax)
        })
        .collect();
    Ok((
        next,
        MotorBank {
            speeds,
            voltages: input.voltages.to_vec(),
        },
    ))
}

/// RK4 step of the rigid body alone under a constant wrench.
pub fn rk4_rigid(
    state: &RigidState,
    u: &ControlInput,
    w_g: f64,
    p: &VehicleParams,
    dt: f64,
) -> Result<RigidState, VehicleError> {
    let k1 = state_derivative(state, u, w_g, p)?;
    let k2 = state_derivative(&axpy_state(state, dt / 2.0, &k1), u, w_g, p)?;
    let k3 = state_derivative(&axpy_state(state, dt / 2.0, &k2), u, w_g, p)?;
    let k4 = state_derivative(&axpy_state(state, dt, &k3), u, w_g, p)?;
    let mut out = *state;
    out.pos += (k1.pos + k2.pos * 2.0 + k3.pos * 2.0 + k4.pos) * (dt / 6.0);
    out.vel += (k1.vel + k2.vel * 2.0 + k3.vel * 2.0 + k4.vel) * (dt / 6.0);
    out.rates += (k1.rates + k2.rates * 2.0 + k3.rates * 2.0 + k4.rates) * (dt / 6.0);
    out.euler += (k1.euler + k2.euler * 2.0 + k3.euler * 2.0 + k4.euler) * (dt / 6.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::FRAC_PI_2;

    fn octo() -> VehicleParams {
        VehicleParams::stock_octo("PNPNPNPN")
    }

    #[test]
    fn rotation_identity_and_quarter_yaw() {
        assert_abs_diff_eq!(rotation_matrix(0.0, 0.0, 0.0), Matrix3::identity(), epsilon = 1e-15);
        let r = rotation_matrix(0.0, 0.0, FRAC_PI_2);
        assert_abs_diff_eq!(r * Vector3::x(), Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn rotation_is_orthonormal() {
        let r = rotation_matrix(0.1, 0.2, 0.3);
        assert_abs_diff_eq!(r.transpose() * r, Matrix3::identity(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn euler_map_level_and_guard() {
        assert_abs_diff_eq!(euler_rate_map_inv(0.0, 0.0).unwrap(), Matrix3::identity());
        assert!(matches!(
            euler_rate_map_inv(0.0, FRAC_PI_2 - 1e-4),
            Err(VehicleError::SingularAttitude { .. })
        ));
    }

    #[test]
    fn euler_map_inverts_forward_map() {
        let (phi, theta) = (0.3_f64, 0.4_f64);
        // forward map from Euler rates to body rates, written out independently
        let fwd = Matrix3::new(
            1.0,
            0.0,
            -theta.sin(),
            0.0,
            phi.cos(),
            phi.sin() * theta.cos(),
            0.0,
            -phi.sin(),
            phi.cos() * theta.cos(),
        );
        let inv = euler_rate_map_inv(phi, theta).unwrap();
        assert_abs_diff_eq!(inv * fwd, Matrix3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn hover_is_equilibrium() {
        let p = octo();
        let d = state_derivative(&RigidState::default(), &ControlInput::hover(&p), 0.0, &p).unwrap();
        assert!(d.to_array().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn thrust_surplus_accelerates_up() {
        let p = octo();
        let u = ControlInput::new(p.hover_thrust() + 1.0, 0.0, 0.0, 0.0);
        let d = state_derivative(&RigidState::default(), &u, 0.0, &p).unwrap();
        assert_abs_diff_eq!(d.vel.z, 1.0 / p.mass, epsilon = 1e-12);
        assert_abs_diff_eq!(d.vel.x, 0.0);
    }

    #[test]
    fn euler_coupling_term() {
        let p = octo();
        let mut s = RigidState::default();
        s.rates = Vector3::new(0.1, 0.2, 0.3);
        let d = state_derivative(&s, &ControlInput::new(p.hover_thrust(), 0.0, 0.0, 0.0), 0.0, &p).unwrap();
        let expected = (0.0429 - 0.0748) / 0.0429 * 0.2 * 0.3;
        assert_abs_diff_eq!(d.rates.x, expected, epsilon = 1e-15);
    }

    #[test]
    fn gyro_term_signs() {
        let p = octo();
        let mut s = RigidState::default();
        s.rates = Vector3::new(0.5, 0.2, 0.0);
        let u = ControlInput::hover(&p);
        let d0 = state_derivative(&s, &u, 0.0, &p).unwrap();
        let d1 = state_derivative(&s, &u, 100.0, &p).unwrap();
        assert_abs_diff_eq!(d1.rates.x - d0.rates.x, -p.izzm / p.ixx * 0.2 * 100.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d1.rates.y - d0.rates.y, p.izzm / p.iyy * 0.5 * 100.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d1.rates.z, d0.rates.z);
    }

    #[test]
    fn motor_balance() {
        let p = octo();
        assert_eq!(motor_derivative(0.0, 0.0, &p), 0.0);
        let w = 500.0;
        let v = p.motor.ke * w + p.motor.r * p.d * w * w / p.motor.km;
        assert_abs_diff_eq!(motor_derivative(w, v, &p), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(motor_controller(w, w, &p, 2.0), v, epsilon = 1e-12);
        assert_eq!(motor_controller(0.0, 0.0, &p, 2.0), 0.0);
    }

    #[test]
    fn inertia_formulas() {
        let (ixx, iyy, izz) = compute_inertia(1.0, 0.1, 0.0, 0.211);
        assert_abs_diff_eq!(ixx, 0.004, epsilon = 1e-15);
        assert_eq!(ixx, iyy);
        assert_eq!(ixx, izz);
        let (ixx, _, izz) = compute_inertia(0.0, 0.1, 0.05, 0.211);
        assert_abs_diff_eq!(izz, 2.0 * ixx, epsilon = 1e-15);
        let (ixx, _, _) = compute_inertia(1.0, 0.1, 0.05, 0.211);
        assert_abs_diff_eq!(ixx, 0.004 + 4.0 * 0.05 * 0.211 * 0.211, epsilon = 1e-15);
    }

    #[test]
    fn gyro_sum_signs() {
        let pat: SpinPattern = "PNPNPNPN".parse().unwrap();
        assert_eq!(gyro_sum(&[3.0; 8], &pat), 0.0);
        let mut w = [0.0; 8];
        w[1] = 10.0;
        assert_eq!(gyro_sum(&w, &pat), 10.0);
        w[0] = 4.0;
        assert_eq!(gyro_sum(&w, &pat), 6.0);
    }

    #[test]
    fn pattern_parse_and_display() {
        let p: SpinPattern = "PPNNPN".parse().unwrap();
        assert_eq!(alloc::format!("{p}"), "PPNNPN");
        assert!(p.is_balanced());
        assert!("PXN".parse::<SpinPattern>().is_err());
    }

    #[test]
    fn free_fall_one_second() {
        let p = octo();
        let mut s = RigidState::default();
        let u = ControlInput::default();
        for _ in 0..1000 {
            s = rk4_rigid(&s, &u, 0.0, &p, 1e-3).unwrap();
        }
        assert_abs_diff_eq!(s.pos.z, -p.g / 2.0, epsilon = 1e-6);
    }

    #[test]
    fn stock_params_validate() {
        VehicleParams::stock_quad().validate().unwrap();
        VehicleParams::stock_hexa("PNPNPN").validate().unwrap();
        octo().validate().unwrap();
        let mut bad = octo();
        bad.mass = 0.0;
        assert!(bad.validate().is_err());
    }
}
