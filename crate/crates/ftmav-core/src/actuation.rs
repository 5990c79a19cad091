//! Actuation matrices, rotor capacities and control allocation.

use alloc::vec::Vec;

use libm::{cos, sin};
use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use thiserror::Error;

use crate::vehicle::{ControlInput, Spin, SpinPattern, VehicleParams};

/// Relative singular-value threshold for a usable allocation.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActuationError {
    #[error("unsupported rotor layout with {0} rotors")]
    UnsupportedLayout(usize),
    #[error("effective actuation matrix is rank deficient (rank {rank} < 4)")]
    RankDeficient { rank: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Linear map from squared rotor speeds to (T, τx, τy, τz).
#[derive(Debug, Clone, PartialEq)]
pub struct ActuationMatrix {
    pub entries: DMatrix<f64>,
    /// Arm angles measured clockwise from +Y seen from above.
    pub arm_angles: Vec<f64>,
    pub pattern: SpinPattern,
}

impl ActuationMatrix {
    pub fn rotors(&self) -> usize {
        self.entries.ncols()
    }

    pub fn column(&self, i: usize) -> Vector4<f64> {
        Vector4::new(
            self.entries[(0, i)],
            self.entries[(1, i)],
            self.entries[(2, i)],
            self.entries[(3, i)],
        )
    }
}

/// Per-rotor health coefficients in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityVector(pub Vec<f64>);

impl CapacityVector {
    pub fn healthy(n: usize) -> Self {
        CapacityVector(alloc::vec![1.0; n])
    }

    /// Zero capacity on the given 0-based rotor indices.
    pub fn with_failed(n: usize, failed: &[usize]) -> Self {
        let mut v = alloc::vec![1.0; n];
        for &i in failed {
            if i < n {
                v[i] = 0.0;
            }
        }
        CapacityVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|t| (0.0..=1.0).contains(t))
    }
}

pub fn build_actuation_matrix(params: &VehicleParams) -> Result<ActuationMatrix, ActuationError> {
    let n = params.rotor_count();
    if !matches!(n, 4 | 6 | 8) {
        return Err(ActuationError::UnsupportedLayout(n));
    }
    let (b, l, d) = (params.b, params.arm, params.d);
    let mut m = DMatrix::zeros(4, n);
    let mut angles = Vec::with_capacity(n);
    for (k, spin) in params.pattern.spins().iter().enumerate() {
        let a = 2.0 * core::f64::consts::PI * k as f64 / n as f64;
        angles.push(a);
        m[(0, k)] = b;
        m[(1, k)] = clean(b * l * cos(a), b * l);
        m[(2, k)] = clean(-b * l * sin(a), b * l);
        m[(3, k)] = match spin {
            Spin::P => -d,
            Spin::N => d,
        };
    }
    Ok(ActuationMatrix {
        entries: m,
        arm_angles: angles,
        pattern: params.pattern.clone(),
    })
}

// snap trigonometric round-off such as cos(π/2) to exact zero
fn clean(v: f64, scale: f64) -> f64 {
    if v.abs() < 1e-14 * scale {
        0.0
    } else {
        v
    }
}

/// B = A·diag(θ).
pub fn effective_matrix(a: &ActuationMatrix, theta: &CapacityVector) -> Result<DMatrix<f64>, ActuationError> {
    let n = a.rotors();
    if theta.len() != n {
        return Err(ActuationError::DimensionMismatch {
            expected: n,
            got: theta.len(),
        });
    }
    let mut b = a.entries.clone();
    for (i, t) in theta.0.iter().enumerate() {
        b.column_mut(i).scale_mut(*t);
    }
    Ok(b)
}

/// Minimum-norm squared speeds with B·Ω_s = u (no saturation).
pub fn pseudo_inverse_allocate(b: &DMatrix<f64>, u: &ControlInput) -> Result<Vec<f64>, ActuationError> {
    let svd = b.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s > RANK_TOL * smax && **s > 0.0)
        .count();
    if rank < 4 {
        return Err(ActuationError::RankDeficient { rank });
    }
    let rhs = DVector::from_row_slice(&u.to_array());
    let x = svd
        .solve(&rhs, RANK_TOL * smax)
        .map_err(|_| ActuationError::RankDeficient { rank })?;
    Ok(x.iter().copied().collect())
}

/// Octocopter allocation on the square subsystem with Ω₁=Ω₃, Ω₂=Ω₄, Ω₅=Ω₇, Ω₆=Ω₈.
pub fn square_reduced_allocate(u: &ControlInput, params: &VehicleParams) -> Result<Vec<f64>, ActuationError> {
    if params.rotor_count() != 8 {
        return Err(ActuationError::UnsupportedLayout(params.rotor_count()));
    }
    let a = build_actuation_matrix(params)?;
    let af = reduced_matrix(&a);
    let lu = af.lu();
    let x = lu
        .solve(&Vector4::from_row_slice(&u.to_array()))
        .ok_or(ActuationError::RankDeficient { rank: 3 })?;
    Ok(expand_reduced(&[x[0], x[1], x[2], x[3]]).to_vec())
}

/// Columns of the 8-rotor matrix summed over the tied pairs.
pub fn reduced_matrix(a: &ActuationMatrix) -> Matrix4<f64> {
    let mut af = Matrix4::zeros();
    for (j, (p, q)) in [(0, 2), (1, 3), (4, 6), (5, 7)].iter().enumerate() {
        for r in 0..4 {
            af[(r, j)] = a.entries[(r, *p)] + a.entries[(r, *q)];
        }
    }
    af
}

/// Expands (Ω₁², Ω₂², Ω₅², Ω₆²) to all eight rotors.
pub fn expand_reduced(x: &[f64; 4]) -> [f64; 8] {
    [x[0], x[1], x[0], x[1], x[2], x[3], x[2], x[3]]
}

/// Component-wise clamp of squared speeds to [0, ω_max²].
pub fn saturate(raw: &[f64], omega_max: f64) -> Vec<f64> {
    let hi = omega_max * omega_max;
    raw.iter().map(|v| v.clamp(0.0, hi)).collect()
}

/// Achieved (T, τx, τy, τz) for squared speeds and capacities.
pub fn apply_actuation(omega_sq: &[f64], a: &ActuationMatrix, theta: &CapacityVector) -> ControlInput {
    let mut out = [0.0; 4];
    for i in 0..a.rotors() {
        let s = omega_sq[i] * theta.0[i];
        for (r, o) in out.iter_mut().enumerate() {
            *o += a.entries[(r, i)] * s;
        }
    }
    ControlInput::from_slice(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const B: f64 = 8.5485e-6;
    const L: f64 = 0.211;
    const D: f64 = 1.3678e-7;

    fn octo() -> VehicleParams {
        VehicleParams::stock_octo("PNPNPNPN")
    }

    #[test]
    fn octo_matrix_matches_literal() {
        let a = build_actuation_matrix(&octo()).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2 * B * L;
        let lit = DMatrix::from_row_slice(
            4,
            8,
            &[
                B, B, B, B, B, B, B, B, //
                B * L, h, 0.0, -h, -B * L, -h, 0.0, h, //
                0.0, -h, -B * L, -h, 0.0, h, B * L, h, //
                -D, D, -D, D, -D, D, -D, D,
            ],
        );
        assert_abs_diff_eq!(a.entries, lit, epsilon = 1e-20);
    }

    #[test]
    fn torque_rows_sum_to_zero() {
        for p in [
            VehicleParams::stock_quad(),
            VehicleParams::stock_hexa("PNPNPN"),
            VehicleParams::stock_hexa("PPNNPN"),
            octo(),
            VehicleParams::stock_octo("PPNNPPNN"),
        ] {
            let a = build_actuation_matrix(&p).unwrap();
            for r in 1..4 {
                assert!(a.entries.row(r).sum().abs() < 1e-18, "row {r}");
            }
        }
    }

    #[test]
    fn unsupported_layout() {
        let mut p = octo();
        p.pattern = "PNP".parse().unwrap();
        assert_eq!(build_actuation_matrix(&p), Err(ActuationError::UnsupportedLayout(3)));
    }

    #[test]
    fn quad_hover_speed() {
        let p = VehicleParams::stock_quad();
        let a = build_actuation_matrix(&p).unwrap();
        let x = pseudo_inverse_allocate(&a.entries, &ControlInput::hover(&p)).unwrap();
        for v in x {
            assert_abs_diff_eq!(v.sqrt(), 569.35, epsilon = 0.01);
        }
    }

    #[test]
    fn octo_hover_speed() {
        let p = octo();
        let a = build_actuation_matrix(&p).unwrap();
        let x = pseudo_inverse_allocate(&a.entries, &ControlInput::hover(&p)).unwrap();
        let expect = (p.mass * p.g / (8.0 * p.b)).sqrt();
        for v in &x {
            assert_abs_diff_eq!(v.sqrt(), expect, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(expect, 508.14, epsilon = 0.01);
    }

    #[test]
    fn effective_matrix_columns() {
        let a = build_actuation_matrix(&octo()).unwrap();
        let b = effective_matrix(&a, &CapacityVector::healthy(8)).unwrap();
        assert_eq!(b, a.entries);
        let b = effective_matrix(&a, &CapacityVector::with_failed(8, &[2])).unwrap();
        assert!(b.column(2).iter().all(|v| *v == 0.0));
        let b = effective_matrix(&a, &CapacityVector(alloc::vec![0.5; 8])).unwrap();
        assert_abs_diff_eq!(b, &a.entries * 0.5, epsilon = 1e-20);
    }

    #[test]
    fn zero_demand_gives_zero_speeds() {
        let a = build_actuation_matrix(&octo()).unwrap();
        let x = pseudo_inverse_allocate(&a.entries, &ControlInput::default()).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rank_deficient_detected() {
        let a = build_actuation_matrix(&octo()).unwrap();
        let th = CapacityVector::with_failed(8, &[0, 2, 4, 6, 1]);
        let b = effective_matrix(&a, &th).unwrap();
        assert!(matches!(
            pseudo_inverse_allocate(&b, &ControlInput::hover(&octo())),
            Err(ActuationError::RankDeficient { .. })
        ));
    }

    #[test]
    fn square_reduced_round_trip() {
        let p = octo();
        let a = build_actuation_matrix(&p).unwrap();
        let u = ControlInput::new(18.0, 0.05, -0.08, 0.01);
        let x = square_reduced_allocate(&u, &p).unwrap();
        assert_eq!(x[0], x[2]);
        assert_eq!(x[1], x[3]);
        assert_eq!(x[4], x[6]);
        assert_eq!(x[5], x[7]);
        let back = apply_actuation(&x, &a, &CapacityVector::healthy(8));
        for (g, w) in back.to_array().iter().zip(u.to_array()) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-9);
        }
        let hx = square_reduced_allocate(&ControlInput::hover(&p), &p).unwrap();
        assert!(hx.iter().all(|v| (v - hx[0]).abs() < 1e-6));
        assert!(square_reduced_allocate(&u, &VehicleParams::stock_quad()).is_err());
    }

    #[test]
    fn reduced_matrix_literal() {
        let a = build_actuation_matrix(&octo()).unwrap();
        let af = reduced_matrix(&a);
        let s2 = core::f64::consts::SQRT_2;
        let lit = Matrix4::new(
            2.0 * B, 2.0 * B, 2.0 * B, 2.0 * B, //
            B * L, 0.0, -B * L, 0.0, //
            -B * L, -s2 * B * L, B * L, s2 * B * L, //
            -2.0 * D, 2.0 * D, -2.0 * D, 2.0 * D,
        );
        assert_abs_diff_eq!(af, lit, epsilon = 1e-18);
    }

    #[test]
    fn saturation_clamps() {
        let w = 840.0;
        let s = saturate(&[-5.0, w * w + 1.0, 100.0], w);
        assert_eq!(s, alloc::vec![0.0, w * w, 100.0]);
        assert_eq!(saturate(&s, w), s);
    }

    #[test]
    fn single_column_image() {
        let a = build_actuation_matrix(&octo()).unwrap();
        let mut x = [0.0; 8];
        x[0] = 1000.0;
        let u = apply_actuation(&x, &a, &CapacityVector::healthy(8));
        assert_abs_diff_eq!(u.thrust, B * 1000.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u.torque.x, B * L * 1000.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u.torque.y, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u.torque.z, -D * 1000.0, epsilon = 1e-15);
        assert_eq!(apply_actuation(&[0.0; 8], &a, &CapacityVector::healthy(8)), ControlInput::default());
    }
}
