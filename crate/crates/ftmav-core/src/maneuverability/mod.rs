//! Admissible thrust/torque sets and hover controllability under rotor faults.

pub mod bvls;
pub mod hull;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use libm::sqrt;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::actuation::{build_actuation_matrix, effective_matrix, ActuationError, ActuationMatrix, CapacityVector};
use crate::vehicle::{ControlInput, VehicleParams};

pub use bvls::{bvls, kkt_residual, BvlsSolution};

/// Infinity-norm threshold separating zero from nonzero hover residuals.
pub const CLASS_TOL: f64 = 5e-3;
/// Relative tolerance for hull construction.
pub const HULL_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManeuverError {
    #[error("cannot build a hull from an empty point set")]
    DegenerateHull,
    #[error("thrust level {level} N lies outside the polytope range [{min}, {max}] N")]
    EmptySlice { level: f64, min: f64, max: f64 },
    #[error("fault order must be at least 1 and at most the rotor count")]
    InvalidOrder,
    #[error(transparent)]
    Actuation(#[from] ActuationError),
}

/// Halfspace `normal·u ≤ offset` over (T, τx, τy, τz) with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfspace {
    pub normal: [f64; 4],
    pub offset: f64,
}

impl Halfspace {
    /// Signed violation; positive outside.
    pub fn margin(&self, u: &[f64; 4]) -> f64 {
        hull::dot(&self.normal, u) - self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlPolytope {
    pub vertices: Vec<[f64; 4]>,
    pub halfspaces: Vec<Halfspace>,
    /// Affine dimension of the vertex cloud.
    pub dim: usize,
    pub center: [f64; 4],
}

impl ControlPolytope {
    /// Admissible set for capacity vector `theta`.
    pub fn for_capacity(a: &ActuationMatrix, theta: &CapacityVector, omega_max: f64) -> Result<Self, ManeuverError> {
        hull_halfspaces(&enumerate_vertices(a, theta, omega_max))
    }

    pub fn contains(&self, u: &ControlInput, tol: f64) -> bool {
        contains(self, u, tol)
    }

    /// Count of halfspaces that are not the mirror image of another one.
    pub fn asymmetric_facets(&self, tol: f64) -> usize {
        let c = self.center;
        self.halfspaces
            .iter()
            .filter(|h| {
                let refl_normal = h.normal.map(|x| -x);
                let refl_offset = h.offset - 2.0 * hull::dot(&h.normal, &c);
                let scale = 1.0 + h.offset.abs();
                !self.halfspaces.iter().any(|g| {
                    hull::dot(&g.normal, &refl_normal) > 1.0 - tol && (g.offset - refl_offset).abs() <= tol * scale
                })
            })
            .count()
    }
}

/// Images of all 2^n on/off rotor combinations, bit i of the index selecting rotor i.
pub fn enumerate_vertices(a: &ActuationMatrix, theta: &CapacityVector, omega_max: f64) -> Vec<[f64; 4]> {
    let n = a.rotors();
    let w2 = omega_max * omega_max;
    let cols: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            let c = a.column(i) * (theta.0[i] * w2);
            [c[0], c[1], c[2], c[3]]
        })
        .collect();
    (0..1usize << n)
        .map(|mask| {
            let mut v = [0.0; 4];
            for (i, c) in cols.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    for r in 0..4 {
                        v[r] += c[r];
                    }
                }
            }
            v
        })
        .collect()
}

/// H-representation of the convex hull of 4-D points.
///
/// Coordinates are rescaled per axis before hulling. Point clouds of lower
/// affine dimension produce facets inside their affine hull plus a pair of
/// opposite halfspaces for each missing direction.
pub fn hull_halfspaces(points: &[[f64; 4]]) -> Result<ControlPolytope, ManeuverError> {
    if points.is_empty() {
        return Err(ManeuverError::DegenerateHull);
    }
    let m = points.len() as f64;
    let mut center = [0.0; 4];
    for p in points {
        for k in 0..4 {
            center[k] += p[k] / m;
        }
    }
    let mut scale = [0.0_f64; 4];
    for p in points {
        for k in 0..4 {
            scale[k] = scale[k].max((p[k] - center[k]).abs());
        }
    }
    let global = scale.iter().cloned().fold(0.0, f64::max);
    for s in scale.iter_mut() {
        if *s <= 1e-12 * global || *s == 0.0 {
            *s = if global > 0.0 { global } else { 1.0 };
        }
    }
    let scaled: Vec<[f64; 4]> = points
        .iter()
        .map(|p| core::array::from_fn(|k| (p[k] - center[k]) / scale[k]))
        .collect();

    let cloud = DMatrix::from_fn(points.len(), 4, |i, k| scaled[i][k]);
    let svd = cloud.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let rank_idx: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > HULL_EPS * smax)
        .collect();
    let basis: Vec<Vec<f64>> = rank_idx.iter().map(|&i| vt.row(i).iter().copied().collect()).collect();
    let dim = basis.len();

    let mut raw: Vec<([f64; 4], f64)> = Vec::new();
    if dim >= 1 {
        let local: Vec<Vec<f64>> = scaled
            .iter()
            .map(|p| basis.iter().map(|b| hull::dot(p, b)).collect())
            .collect();
        let facets = hull::facets(&local, HULL_EPS).ok_or(ManeuverError::DegenerateHull)?;
        for f in facets {
            let mut n = [0.0; 4];
            for (j, b) in basis.iter().enumerate() {
                for k in 0..4 {
                    n[k] += f.normal[j] * b[k];
                }
            }
            raw.push((n, f.offset));
        }
    }
    for w in hull::complement(4, &basis) {
        let n: [f64; 4] = core::array::from_fn(|k| w[k]);
        raw.push((n, 0.0));
        raw.push((n.map(|x| -x), 0.0));
    }

    // map n·((u − c)/s) ≤ o back to unscaled coordinates
    let halfspaces = raw
        .into_iter()
        .map(|(n, o)| {
            let a: [f64; 4] = core::array::from_fn(|k| n[k] / scale[k]);
            let len = sqrt(hull::dot(&a, &a));
            let normal = a.map(|x| x / len);
            Halfspace {
                normal,
                offset: (o + hull::dot(&a, &center)) / len,
            }
        })
        .collect();
    Ok(ControlPolytope {
        vertices: points.to_vec(),
        halfspaces,
        dim,
        center,
    })
}

/// Membership with tolerance `tol·(1 + ‖u‖)`.
pub fn contains(poly: &ControlPolytope, u: &ControlInput, tol: f64) -> bool {
    let v = u.to_array();
    let band = tol * (1.0 + sqrt(hull::dot(&v, &v)));
    poly.halfspaces.iter().all(|h| h.margin(&v) <= band)
}

/// Boundary of the (τx, τy) shadow of the slice at thrust `level`, counterclockwise.
pub fn project_t_plane(poly: &ControlPolytope, level: f64) -> Result<Vec<[f64; 2]>, ManeuverError> {
    let tmin = poly.vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
    let tmax = poly.vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
    let band = 1e-12 * tmax.abs().max(1.0);
    if level < tmin - band || level > tmax + band {
        return Err(ManeuverError::EmptySlice {
            level,
            min: tmin,
            max: tmax,
        });
    }
    let vs = &poly.vertices;
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for (i, p) in vs.iter().enumerate() {
        if (p[0] - level).abs() <= band {
            pts.push([p[1], p[2]]);
        }
        for q in &vs[i + 1..] {
            let (a, b) = (p[0] - level, q[0] - level);
            if (a < -band && b > band) || (a > band && b < -band) {
                let t = a / (a - b);
                pts.push([p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])]);
            }
        }
    }
    Ok(convex_hull_2d(pts))
}

/// Andrew's monotone chain; counterclockwise without repeated endpoint.
pub fn convex_hull_2d(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let scale = pts.iter().flat_map(|p| p.iter()).fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= 1e-12 * scale && (a[1] - b[1]).abs() <= 1e-12 * scale);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let tol = 1e-12 * scale * scale;
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= tol {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= tol {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Controllability {
    Controllable,
    Stabilizable,
    Uncontrollable,
}

impl Controllability {
    pub fn as_str(self) -> &'static str {
        match self {
            Controllability::Controllable => "controllable",
            Controllability::Stabilizable => "stabilizable",
            Controllability::Uncontrollable => "uncontrollable",
        }
    }
}

impl fmt::Display for Controllability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoverVerdict {
    pub class: Controllability,
    /// Achieved minus requested (T, τx, τy, τz).
    pub e_p: [f64; 4],
    /// Residual of the re-solve without the yaw row.
    pub e_p_minus: Option<[f64; 3]>,
    pub omega_sq: Vec<f64>,
    pub kkt: f64,
}

impl HoverVerdict {
    pub fn speeds(&self) -> Vec<f64> {
        self.omega_sq.iter().map(|w| sqrt(w.max(0.0))).collect()
    }
}

fn box_lsq(b: &DMatrix<f64>, u: &[f64], w2: f64) -> (Vec<f64>, Vec<f64>, f64) {
    // unknowns scaled to [0, 1] so the columns are O(force)
    let a = b * w2;
    let rhs = DVector::from_row_slice(u);
    let n = a.ncols();
    let lo = alloc::vec![0.0; n];
    let hi = alloc::vec![1.0; n];
    let sol = bvls(&a, &rhs, &lo, &hi);
    let kkt = kkt_residual(&a, &rhs, &lo, &hi, &sol.x);
    let achieved = &a * &sol.x;
    let e: Vec<f64> = achieved.iter().zip(u).map(|(x, r)| x - r).collect();
    (sol.x.iter().map(|s| s * w2).collect(), e, kkt)
}

/// Hover reachability test with the default classification tolerance.
pub fn hover_feasibility(
    a: &ActuationMatrix,
    theta: &CapacityVector,
    u_ref: &ControlInput,
    omega_max: f64,
) -> Result<HoverVerdict, ManeuverError> {
    hover_feasibility_tol(a, theta, u_ref, omega_max, CLASS_TOL)
}

pub fn hover_feasibility_tol(
    a: &ActuationMatrix,
    theta: &CapacityVector,
    u_ref: &ControlInput,
    omega_max: f64,
    tol: f64,
) -> Result<HoverVerdict, ManeuverError> {
    let b = effective_matrix(a, theta)?;
    let u = u_ref.to_array();
    let (omega_sq, e, kkt) = box_lsq(&b, &u, omega_max * omega_max);
    let e_p = [e[0], e[1], e[2], e[3]];
    let inf = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if inf(&e_p) <= tol {
        return Ok(HoverVerdict {
            class: Controllability::Controllable,
            e_p,
            e_p_minus: None,
            omega_sq,
            kkt,
        });
    }
    let b3 = b.rows(0, 3).into_owned();
    let (_, em, _) = box_lsq(&b3, &u[..3], omega_max * omega_max);
    let e_p_minus = [em[0], em[1], em[2]];
    let class = if inf(&e_p_minus) <= tol {
        Controllability::Stabilizable
    } else {
        Controllability::Uncontrollable
    };
    Ok(HoverVerdict {
        class,
        e_p,
        e_p_minus: Some(e_p_minus),
        omega_sq,
        kkt,
    })
}

/// A set of failed rotors (0-based indices, ascending).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FaultCase {
    pub failed: Vec<usize>,
}

impl FaultCase {
    pub fn new(mut failed: Vec<usize>) -> Self {
        failed.sort_unstable();
        failed.dedup();
        FaultCase { failed }
    }

    pub fn capacity(&self, n: usize) -> CapacityVector {
        CapacityVector::with_failed(n, &self.failed)
    }

    /// Label such as `M1` or `M13` using 1-based motor numbers.
    pub fn label(&self) -> String {
        let mut s = String::from("M");
        for (k, i) in self.failed.iter().enumerate() {
            if k > 0 && i + 1 >= 10 {
                s.push('-');
            }
            s.push_str(&alloc::format!("{}", i + 1));
        }
        s
    }
}

/// Lexicographic k-subsets of 0..n.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<(FaultCase, HoverVerdict)>,
}

impl SweepReport {
    pub fn count(&self, class: Controllability) -> usize {
        self.rows.iter().filter(|(_, v)| v.class == class).count()
    }

    pub fn fraction(&self, class: Controllability) -> f64 {
        self.count(class) as f64 / self.rows.len().max(1) as f64
    }

    pub fn non_controllable(&self) -> Vec<&FaultCase> {
        self.rows
            .iter()
            .filter(|(_, v)| v.class != Controllability::Controllable)
            .map(|(c, _)| c)
            .collect()
    }
}

/// Hover verdicts for every k-rotor fault combination.
pub fn fault_sweep(params: &VehicleParams, k: usize) -> Result<SweepReport, ManeuverError> {
    let n = params.rotor_count();
    if k == 0 || k > n {
        return Err(ManeuverError::InvalidOrder);
    }
    let a = build_actuation_matrix(params)?;
    let u = ControlInput::hover(params);
    let rows = combinations(n, k)
        .into_iter()
        .map(|set| {
            let case = FaultCase::new(set);
            let v = hover_feasibility(&a, &case.capacity(n), &u, params.omega_max)?;
            Ok((case, v))
        })
        .collect::<Result<Vec<_>, ManeuverError>>()?;
    Ok(SweepReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn octo() -> (VehicleParams, ActuationMatrix) {
        let p = VehicleParams::stock_octo("PNPNPNPN");
        let a = build_actuation_matrix(&p).unwrap();
        (p, a)
    }

    #[test]
    fn vertex_enumeration_order() {
        let (p, a) = octo();
        let v = enumerate_vertices(&a, &CapacityVector::healthy(8), p.omega_max);
        assert_eq!(v.len(), 256);
        assert_eq!(v[0], [0.0; 4]);
        let w2 = p.omega_max * p.omega_max;
        assert_abs_diff_eq!(v[255][0], 8.0 * p.b * w2, epsilon = 1e-12);
        assert!(v[255][1..].iter().all(|x| x.abs() < 1e-12));
        assert_abs_diff_eq!(v[1][0], p.b * w2, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1][1], p.b * p.arm * w2, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1][3], -p.d * w2, epsilon = 1e-12);
    }

    #[test]
    fn box_hull() {
        let pts: Vec<[f64; 4]> = (0..16)
            .map(|m| core::array::from_fn(|k| if m >> k & 1 == 1 { 1.0 } else { -1.0 }))
            .collect();
        let poly = hull_halfspaces(&pts).unwrap();
        assert_eq!(poly.halfspaces.len(), 8);
        assert_eq!(poly.dim, 4);
        assert!(poly.halfspaces.iter().all(|h| (h.offset - 1.0).abs() < 1e-12));
    }

    #[test]
    fn segment_hull_uses_equalities() {
        let (p, a) = octo();
        let th = CapacityVector::with_failed(8, &[1, 2, 3, 4, 5, 6, 7]);
        let poly = ControlPolytope::for_capacity(&a, &th, p.omega_max).unwrap();
        assert_eq!(poly.dim, 1);
        assert_eq!(poly.halfspaces.len(), 2 + 6);
        let w2 = p.omega_max * p.omega_max;
        let col = a.column(0) * w2;
        let mid = ControlInput::new(col[0] * 0.5, col[1] * 0.5, col[2] * 0.5, col[3] * 0.5);
        assert!(poly.contains(&mid, 1e-9));
        let off = ControlInput::new(mid.thrust, mid.torque.x + 0.01, mid.torque.y, mid.torque.z);
        assert!(!poly.contains(&off, 1e-9));
        assert!(!poly.contains(&ControlInput::new(col[0] * 1.1, col[1] * 1.1, col[2] * 1.1, col[3] * 1.1), 1e-9));
    }

    #[test]
    fn healthy_octo_polytope() {
        let (p, a) = octo();
        let poly = ControlPolytope::for_capacity(&a, &CapacityVector::healthy(8), p.omega_max).unwrap();
        assert_eq!(poly.dim, 4);
        assert!(poly.contains(&ControlInput::hover(&p), 1e-9));
        assert!(poly.contains(&ControlInput::default(), 1e-9));
        let w2 = p.omega_max * p.omega_max;
        assert!(!poly.contains(&ControlInput::new(16.0 * p.b * w2, 0.0, 0.0, 0.0), 1e-9));
        for v in &poly.vertices {
            for h in &poly.halfspaces {
                assert!(h.margin(v) <= 1e-9 * (1.0 + v[0].abs()));
            }
        }
        assert_eq!(poly.asymmetric_facets(1e-7), 0);
    }

    #[test]
    fn slices() {
        let (p, a) = octo();
        let healthy = ControlPolytope::for_capacity(&a, &CapacityVector::healthy(8), p.omega_max).unwrap();
        let m1 = ControlPolytope::for_capacity(&a, &CapacityVector::with_failed(8, &[0]), p.omega_max).unwrap();
        let h = project_t_plane(&healthy, p.hover_thrust()).unwrap();
        assert!(h.len() >= 4);
        // central symmetry of the healthy slice about the origin
        for q in &h {
            assert!(h.iter().any(|r| (r[0] + q[0]).abs() < 1e-9 && (r[1] + q[1]).abs() < 1e-9));
        }
        let f = project_t_plane(&m1, p.hover_thrust()).unwrap();
        let hp = hull_2d_contains(&h);
        assert!(f.iter().all(hp));
        let w2 = p.omega_max * p.omega_max;
        let apex = project_t_plane(&healthy, 8.0 * p.b * w2).unwrap();
        assert_eq!(apex.len(), 1);
        assert!(apex[0][0].abs() < 1e-9 && apex[0][1].abs() < 1e-9);
        assert!(matches!(
            project_t_plane(&healthy, 100.0),
            Err(ManeuverError::EmptySlice { .. })
        ));
    }

    fn hull_2d_contains(poly: &[[f64; 2]]) -> impl Fn(&[f64; 2]) -> bool + '_ {
        move |q| {
            (0..poly.len()).all(|i| {
                let a = poly[i];
                let b = poly[(i + 1) % poly.len()];
                (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) >= -1e-9
            })
        }
    }

    #[test]
    fn quad_hover_and_m1() {
        let p = VehicleParams::stock_quad();
        let a = build_actuation_matrix(&p).unwrap();
        let u = ControlInput::hover(&p);
        let v = hover_feasibility(&a, &CapacityVector::healthy(4), &u, p.omega_max).unwrap();
        assert_eq!(v.class, Controllability::Controllable);
        for w in v.speeds() {
            assert_abs_diff_eq!(w, 569.35, epsilon = 0.01);
        }
        let v = hover_feasibility(&a, &CapacityVector::with_failed(4, &[0]), &u, p.omega_max).unwrap();
        assert_ne!(v.class, Controllability::Controllable);
        assert_abs_diff_eq!(v.e_p[1], -0.03, epsilon = 0.02);
        assert_abs_diff_eq!(v.e_p[3], 0.21, epsilon = 0.02);
        assert!(v.kkt < 1e-8);
    }

    #[test]
    fn hexa_m14_stabilizable() {
        let p = VehicleParams::stock_hexa("PNPNPN");
        let a = build_actuation_matrix(&p).unwrap();
        let v = hover_feasibility(&a, &CapacityVector::with_failed(6, &[0, 3]), &ControlInput::hover(&p), p.omega_max)
            .unwrap();
        assert_eq!(v.class, Controllability::Controllable);
        let v = hover_feasibility(&a, &CapacityVector::with_failed(6, &[0, 2]), &ControlInput::hover(&p), p.omega_max)
            .unwrap();
        assert_eq!(v.class, Controllability::Stabilizable);
        assert!(v.e_p_minus.unwrap().iter().all(|x| x.abs() < 1e-6));
    }

    #[test]
    fn sweep_counts() {
        let rep = fault_sweep(&VehicleParams::stock_octo("PNPNPNPN"), 1).unwrap();
        assert_eq!(rep.rows.len(), 8);
        assert_eq!(rep.count(Controllability::Controllable), 8);
        assert!(fault_sweep(&VehicleParams::stock_quad(), 0).is_err());
    }

    #[test]
    fn combos_and_labels() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(8, 2).len(), 28);
        assert_eq!(combinations(3, 3), alloc::vec![alloc::vec![0, 1, 2]]);
        assert_eq!(combinations(5, 1).len(), 5);
        assert_eq!(FaultCase::new(alloc::vec![2, 0]).label(), "M13");
    }
}
