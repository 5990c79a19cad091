//! Finite-difference operators on uniform sample grids and the flat control map.

use alloc::vec::Vec;

use libm::{cos, sin};

use crate::vehicle::VehicleParams;

fn binomial(k: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// Backward difference of a fixed order; rows before `order` reuse the first full stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceOperator {
    pub order: usize,
    pub len: usize,
    pub dt: f64,
}

impl DifferenceOperator {
    /// First sample index and weights of row `i`.
    pub fn stencil(&self, i: usize) -> (usize, Vec<f64>) {
        let k = self.order;
        let r = i.max(k);
        let scale = libm::pow(self.dt, k as f64);
        let w = (0..=k)
            .rev()
            .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(k, j) / scale)
            .collect();
        (r - k, w)
    }

    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        (0..self.len)
            .map(|i| {
                let (start, w) = self.stencil(i);
                w.iter().enumerate().map(|(j, c)| c * q[start + j]).sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceOps {
    pub d1: DifferenceOperator,
    pub d2: DifferenceOperator,
    pub d4: DifferenceOperator,
}

/// First, second and fourth backward differences on `n ≥ 5` samples spaced `dt` apart.
pub fn finite_difference_operators(n: usize, dt: f64) -> Option<DifferenceOps> {
    if n < 5 || !(dt > 0.0) {
        return None;
    }
    let op = |order| DifferenceOperator { order, len: n, dt };
    Some(DifferenceOps { d1: op(1), d2: op(2), d4: op(4) })
}

/// Central difference of orders 0..=4 at sample `i`, clamping indices at the ends.
pub fn centered_derivatives(q: &[f64], i: usize, dt: f64) -> [f64; 5] {
    let n = q.len() as isize;
    let at = |o: isize| q[(i as isize + o).clamp(0, n - 1) as usize];
    let (m2, m1, c, p1, p2) = (at(-2), at(-1), at(0), at(1), at(2));
    [
        c,
        (p1 - m1) / (2.0 * dt),
        (p1 - 2.0 * c + m1) / (dt * dt),
        (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * dt * dt * dt),
        (p2 - 4.0 * p1 + 6.0 * c - 4.0 * m1 + m2) / (dt * dt * dt * dt),
    ]
}

/// Mass, inertia and gravity needed by the flat map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatModel {
    pub mass: f64,
    pub inertia: [f64; 3],
    pub g: f64,
}

impl FlatModel {
    pub fn from_params(p: &VehicleParams) -> Self {
        FlatModel { mass: p.mass, inertia: [p.ixx, p.iyy, p.izz], g: p.g }
    }

    /// Coefficients of (T, τx, τy, τz) on (D⁴x, D⁴y, D²z, D²ψ) for heading `psi`; constant part is `(m·g, 0, 0, 0)`.
    pub fn jacobian(&self, psi: f64) -> [[f64; 4]; 4] {
        let (s, c) = (sin(psi), cos(psi));
        let [ixx, iyy, izz] = self.inertia;
        let g = self.g;
        [
            [0.0, 0.0, self.mass, 0.0],
            [ixx * s / g, -ixx * c / g, 0.0, 0.0],
            [iyy * c / g, iyy * s / g, 0.0, 0.0],
            [0.0, 0.0, 0.0, izz],
        ]
    }

    /// (T, τx, τy, τz) from x⁗, y⁗, z̈, ψ̈ at heading `psi`.
    pub fn control(&self, d4x: f64, d4y: f64, d2z: f64, d2psi: f64, psi: f64) -> [f64; 4] {
        let j = self.jacobian(psi);
        let v = [d4x, d4y, d2z, d2psi];
        let mut u = [self.mass * self.g, 0.0, 0.0, 0.0];
        for (r, row) in j.iter().enumerate() {
            u[r] += row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        }
        u
    }
}

/// Flat controls at every sample of `q` (rows x, y, z, ψ) using backward differences and `psi_ref`.
pub fn flat_control_map(q: &[[f64; 4]], psi_ref: &[f64], dt: f64, model: &FlatModel) -> Option<Vec<[f64; 4]>> {
    let ops = finite_difference_operators(q.len(), dt)?;
    let col = |c: usize| -> Vec<f64> { q.iter().map(|r| r[c]).collect() };
    let (d4x, d4y) = (ops.d4.apply(&col(0)), ops.d4.apply(&col(1)));
    let (d2z, d2p) = (ops.d2.apply(&col(2)), ops.d2.apply(&col(3)));
    Some((0..q.len()).map(|k| model.control(d4x[k], d4y[k], d2z[k], d2p[k], psi_ref[k])).collect())
}
