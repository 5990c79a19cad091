//! Discretized trajectory planning with fault-dependent control-set constraints (RIP, RCP, RSP).

pub mod diff;
pub mod qp;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use thiserror::Error;

use crate::actuation::{build_actuation_matrix, CapacityVector};
use crate::control::FlatSample;
use crate::maneuverability::{ControlPolytope, FaultCase, Halfspace, ManeuverError};
use crate::vehicle::VehicleParams;

pub use diff::{centered_derivatives, finite_difference_operators, flat_control_map, DifferenceOperator, DifferenceOps, FlatModel};
pub use qp::{BandedQp, QpError, QpOptions, SparseRow};

/// Default interior samples per waypoint segment.
pub const DEFAULT_INTERIOR: usize = 10;
/// Maximum per-waypoint position deviation for a plan to count as feasible.
pub const WAYPOINT_TOL: f64 = 0.05;
/// Margin above which a sample violates a halfspace.
pub const VIOLATION_TOL: f64 = 1e-6;
/// Outer iterations of obstacle linearization.
pub const MAX_OBSTACLE_ITERATIONS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid mission: {0}")]
    InvalidMission(&'static str),
    #[error("constraint set is empty at T = {0} s")]
    Infeasible(f64),
    #[error("solver stalled at T = {duration} s: {source}")]
    SolverStalled { duration: f64, source: QpError },
    #[error("no grid time yields a feasible plan")]
    NoFeasibleTime,
    #[error("no polytope available for fault {0}")]
    MissingPolytope(String),
    #[error("fault mode list is empty")]
    EmptyFaultList,
    #[error(transparent)]
    Maneuver(#[from] ManeuverError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    /// (x, y, z, ψ)
    pub q: [f64; 4],
    pub weight: f64,
}

impl Waypoint {
    pub fn new(q: [f64; 4]) -> Self {
        Waypoint { q, weight: 1.0 }
    }
}

/// Per-component bounds on (x, y, z, ψ) or their rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: [f64; 4],
    pub max: [f64; 4],
}

impl Bounds {
    fn is_ordered(&self) -> bool {
        self.min.iter().zip(&self.max).all(|(a, b)| a <= b)
    }
}

/// Spherical keep-out region around `center` with radius `clearance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: [f64; 3],
    pub clearance: f64,
}

/// Axis-aligned box that every sample of waypoint segment `segment` must stay inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorridorBox {
    pub segment: usize,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mission {
    pub waypoints: Vec<Waypoint>,
    pub duration: f64,
    pub interior: usize,
    /// Start and end at rest (first and last three samples tied).
    pub rest: bool,
    pub position: Option<Bounds>,
    pub rate: Option<Bounds>,
    pub acceleration: Option<Bounds>,
    pub obstacles: Vec<Obstacle>,
    pub corridor: Vec<CorridorBox>,
    pub model: FlatModel,
    pub waypoint_tol: f64,
}

impl Mission {
    pub fn new(waypoints: Vec<Waypoint>, duration: f64, model: FlatModel) -> Self {
        Mission {
            waypoints,
            duration,
            interior: DEFAULT_INTERIOR,
            rest: true,
            position: None,
            rate: None,
            acceleration: None,
            obstacles: Vec::new(),
            corridor: Vec::new(),
            model,
            waypoint_tol: WAYPOINT_TOL,
        }
    }

    pub fn with_duration(&self, duration: f64) -> Self {
        Mission { duration, ..self.clone() }
    }

    pub fn sample_count(&self) -> usize {
        (self.waypoints.len() - 1) * (self.interior + 1) + 1
    }

    pub fn dt(&self) -> f64 {
        self.duration / (self.sample_count() - 1) as f64
    }

    pub fn waypoint_sample(&self, i: usize) -> usize {
        i * (self.interior + 1)
    }

    pub fn waypoint_time(&self, i: usize) -> f64 {
        self.waypoint_sample(i) as f64 * self.dt()
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.waypoints.len() < 2 {
            return Err(PlanError::InvalidMission("at least two waypoints are required"));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(PlanError::InvalidMission("duration must be positive"));
        }
        if self.sample_count() < if self.rest { 7 } else { 5 } {
            return Err(PlanError::InvalidMission("too few samples for the difference stencils"));
        }
        if self.waypoints.iter().any(|w| !(0.0..=1.0).contains(&w.weight) || w.q.iter().any(|v| !v.is_finite())) {
            return Err(PlanError::InvalidMission("waypoint weights must lie in [0, 1] and coordinates be finite"));
        }
        if [self.position, self.rate, self.acceleration].iter().flatten().any(|b| !b.is_ordered()) {
            return Err(PlanError::InvalidMission("bounds must be ordered"));
        }
        if self.obstacles.iter().any(|o| !(o.clearance > 0.0)) {
            return Err(PlanError::InvalidMission("obstacle clearance must be positive"));
        }
        if self.corridor.iter().any(|c| c.segment + 1 >= self.waypoints.len() || (0..3).any(|k| c.min[k] > c.max[k])) {
            return Err(PlanError::InvalidMission("corridor box references a missing segment or is unordered"));
        }
        if !(self.waypoint_tol > 0.0) {
            return Err(PlanError::InvalidMission("waypoint tolerance must be positive"));
        }
        Ok(())
    }

    /// Heading per sample, linear between waypoint headings.
    pub fn psi_reference(&self) -> Vec<f64> {
        let seg = self.interior + 1;
        (0..self.sample_count())
            .map(|k| {
                let i = (k / seg).min(self.waypoints.len() - 2);
                let w = (k - i * seg) as f64 / seg as f64;
                (1.0 - w) * self.waypoints[i].q[3] + w * self.waypoints[i + 1].q[3]
            })
            .collect()
    }
}

/// Admissible sets for the healthy vehicle and a list of fault cases.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeLibrary {
    pub healthy: ControlPolytope,
    pub faults: Vec<(FaultCase, ControlPolytope)>,
}

impl PolytopeLibrary {
    pub fn build(params: &VehicleParams, faults: &[FaultCase]) -> Result<Self, PlanError> {
        let a = build_actuation_matrix(params).map_err(ManeuverError::from)?;
        let n = params.rotor_count();
        let healthy = ControlPolytope::for_capacity(&a, &CapacityVector::healthy(n), params.omega_max)?;
        let mut lib = PolytopeLibrary { healthy, faults: Vec::new() };
        for f in faults {
            if lib.get(f).is_none() {
                let p = ControlPolytope::for_capacity(&a, &f.capacity(n), params.omega_max)?;
                lib.faults.push((f.clone(), p));
            }
        }
        Ok(lib)
    }

    pub fn get(&self, f: &FaultCase) -> Option<&ControlPolytope> {
        self.faults.iter().find(|(c, _)| c == f).map(|(_, p)| p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlannerMode {
    /// Healthy admissible set only.
    Rip,
    /// Every listed fault polytope at once.
    Rcp(Vec<FaultCase>),
    /// Healthy set plus selected halfspaces.
    Rsp(Vec<Halfspace>),
}

impl PlannerMode {
    pub fn halfspaces(&self, lib: &PolytopeLibrary) -> Result<Vec<Halfspace>, PlanError> {
        match self {
            PlannerMode::Rip => Ok(lib.healthy.halfspaces.clone()),
            PlannerMode::Rcp(faults) => {
                if faults.is_empty() {
                    return Err(PlanError::EmptyFaultList);
                }
                let mut out = Vec::new();
                for f in faults {
                    let p = lib.get(f).ok_or_else(|| PlanError::MissingPolytope(f.label()))?;
                    out.extend_from_slice(&p.halfspaces);
                }
                Ok(out)
            }
            PlannerMode::Rsp(extra) => {
                let mut out = lib.healthy.halfspaces.clone();
                out.extend_from_slice(extra);
                Ok(out)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PlannerMode::Rip => "RIP",
            PlannerMode::Rcp(_) => "RCP",
            PlannerMode::Rsp(_) => "RSP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// Index into the polytope list given to the scan.
    pub polytope: usize,
    pub halfspace: usize,
    pub sample: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub times: Vec<f64>,
    /// (x, y, z, ψ) per sample.
    pub q: Vec<[f64; 4]>,
    /// Flat-mapped (T, τx, τy, τz) per sample.
    pub controls: Vec<[f64; 4]>,
    pub psi_ref: Vec<f64>,
    pub objective: f64,
    /// Position deviation at each waypoint.
    pub waypoint_deviation: Vec<f64>,
    pub heading_deviation: Vec<f64>,
    /// All waypoints passed within the mission tolerance.
    pub feasible: bool,
    /// Own-constraint violations re-evaluated on the solution.
    pub violations: Vec<Violation>,
    pub iterations: usize,
    pub obstacle_iterations: usize,
}

impl PlanResult {
    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn duration(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn max_waypoint_deviation(&self) -> f64 {
        self.waypoint_deviation.iter().cloned().fold(0.0, f64::max)
    }

    /// Reference samples with centered finite-difference derivatives for tracking.
    pub fn flat_reference(&self) -> Vec<FlatSample> {
        let dt = self.dt();
        let col = |c: usize| -> Vec<f64> { self.q.iter().map(|r| r[c]).collect() };
        let (x, y, z, p) = (col(0), col(1), col(2), col(3));
        (0..self.q.len())
            .map(|k| {
                let (dx, dy, dz, dp) = (
                    centered_derivatives(&x, k, dt),
                    centered_derivatives(&y, k, dt),
                    centered_derivatives(&z, k, dt),
                    centered_derivatives(&p, k, dt),
                );
                FlatSample { t: self.times[k], x: dx, y: dy, z: [dz[0], dz[1], dz[2]], psi: [dp[0], dp[1], dp[2]] }
            })
            .collect()
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory { times: self.times.clone(), q: self.q.clone() }
    }
}

/// Maps samples to decision variables, tying rest samples to the end points.
struct Layout {
    var_of: Vec<usize>,
    vars: usize,
}

impl Layout {
    fn new(n: usize, rest: bool) -> Self {
        let mut var_of = Vec::with_capacity(n);
        let mut next = 0;
        for k in 0..n {
            if rest && (k == 1 || k == 2) {
                var_of.push(var_of[0]);
            } else if rest && (k == n - 2 || k == n - 3) {
                var_of.push(usize::MAX);
            } else {
                var_of.push(next);
                next += 1;
            }
        }
        if rest {
            let last = var_of[n - 1];
            var_of[n - 2] = last;
            var_of[n - 3] = last;
        }
        Layout { var_of, vars: next }
    }

    fn col(&self, sample: usize, comp: usize) -> usize {
        4 * self.var_of[sample] + comp
    }
}

fn stencil_terms(op: &DifferenceOperator, layout: &Layout, sample: usize, comp: usize, scale: f64, out: &mut Vec<(usize, f64)>) {
    let (start, w) = op.stencil(sample);
    for (j, c) in w.iter().enumerate() {
        out.push((layout.col(start + j, comp), scale * c));
    }
}

struct Problem<'a> {
    mission: &'a Mission,
    layout: Layout,
    psi: Vec<f64>,
    base: BandedQp,
}

impl<'a> Problem<'a> {
    fn new(mission: &'a Mission, halfspaces: &[Halfspace]) -> Result<Self, PlanError> {
        mission.validate()?;
        let n = mission.sample_count();
        let dt = mission.dt();
        let layout = Layout::new(n, mission.rest);
        let ops = finite_difference_operators(n, dt).ok_or(PlanError::InvalidMission("fewer than five samples"))?;
        let psi = mission.psi_reference();
        let nv = 4 * layout.vars;
        let mut qp = BandedQp::new(nv, 12);
        let hess_err = |_| PlanError::InvalidMission("hessian band overflow");

        // Σ‖Δ²q‖² over full second-difference stencils.
        let unit = DifferenceOperator { order: 2, len: n, dt: 1.0 };
        for k in 2..n {
            for comp in 0..4 {
                let mut t = Vec::new();
                stencil_terms(&unit, &layout, k, comp, 1.0, &mut t);
                let row = SparseRow::new(t, 0.0);
                for (a, (ca, va)) in row.cols.iter().zip(&row.vals).enumerate() {
                    for (cb, vb) in row.cols[..=a].iter().zip(&row.vals[..=a]) {
                        qp.hessian.add(*ca, *cb, 2.0 * va * vb).map_err(hess_err)?;
                    }
                }
            }
        }
        for (i, w) in mission.waypoints.iter().enumerate() {
            let s = mission.waypoint_sample(i);
            for comp in 0..4 {
                let c = layout.col(s, comp);
                qp.hessian.add(c, c, 2.0 * w.weight).map_err(hess_err)?;
                qp.linear[c] -= 2.0 * w.weight * w.q[comp];
            }
        }

        for k in 0..n {
            let jac = mission.model.jacobian(psi[k]);
            let mg = mission.model.mass * mission.model.g;
            for h in halfspaces {
                let coef: Vec<f64> = (0..4).map(|v| (0..4).map(|r| h.normal[r] * jac[r][v]).sum()).collect();
                let mut t = Vec::new();
                stencil_terms(&ops.d4, &layout, k, 0, coef[0], &mut t);
                stencil_terms(&ops.d4, &layout, k, 1, coef[1], &mut t);
                stencil_terms(&ops.d2, &layout, k, 2, coef[2], &mut t);
                stencil_terms(&ops.d2, &layout, k, 3, coef[3], &mut t);
                qp.rows.push(SparseRow::new(t, h.offset - h.normal[0] * mg));
            }
        }
        let mut bound_rows = |op: Option<&DifferenceOperator>, b: &Bounds, samples: core::ops::Range<usize>| {
            for k in samples {
                for comp in 0..4 {
                    for (sign, lim) in [(1.0, b.max[comp]), (-1.0, -b.min[comp])] {
                        if !lim.is_finite() {
                            continue;
                        }
                        let mut t = Vec::new();
                        match op {
                            Some(op) => stencil_terms(op, &layout, k, comp, sign, &mut t),
                            None => t.push((layout.col(k, comp), sign)),
                        }
                        qp.rows.push(SparseRow::new(t, lim));
                    }
                }
            }
        };
        if let Some(b) = &mission.position {
            bound_rows(None, b, 0..n);
        }
        if let Some(b) = &mission.rate {
            bound_rows(Some(&ops.d1), b, 1..n);
        }
        if let Some(b) = &mission.acceleration {
            bound_rows(Some(&ops.d2), b, 2..n);
        }
        for c in &mission.corridor {
            let b = Bounds {
                min: [c.min[0], c.min[1], c.min[2], f64::NEG_INFINITY],
                max: [c.max[0], c.max[1], c.max[2], f64::INFINITY],
            };
            bound_rows(None, &b, mission.waypoint_sample(c.segment)..mission.waypoint_sample(c.segment + 1) + 1);
        }
        Ok(Problem { mission, layout, psi, base: qp })
    }

    fn expand(&self, z: &[f64]) -> Vec<[f64; 4]> {
        (0..self.mission.sample_count())
            .map(|k| [0, 1, 2, 3].map(|c| z[self.layout.col(k, c)]))
            .collect()
    }

    fn solve(&self, opts: &QpOptions) -> Result<(Vec<[f64; 4]>, f64, usize, usize), PlanError> {
        let dur = self.mission.duration;
        let map = |e: QpError| match e {
            QpError::Infeasible => PlanError::Infeasible(dur),
            other => PlanError::SolverStalled { duration: dur, source: other },
        };
        let mut sol = self.base.solve(opts).map_err(map)?;
        let mut iterations = sol.iterations;
        let mut outer = 0;
        if self.mission.obstacles.is_empty() {
            return Ok((self.expand(&sol.z), sol.objective, iterations, outer));
        }
        for it in 0..MAX_OBSTACLE_ITERATIONS {
            outer = it + 1;
            let q = self.expand(&sol.z);
            let mut qp = self.base.clone();
            for ob in &self.mission.obstacles {
                for (k, qk) in q.iter().enumerate() {
                    let mut d = [qk[0] - ob.center[0], qk[1] - ob.center[1], qk[2] - ob.center[2]];
                    let norm = sqrt(d.iter().map(|v| v * v).sum());
                    if norm < 1e-9 {
                        d = [1.0, 0.0, 0.0];
                    } else {
                        d = d.map(|v| v / norm);
                    }
                    // n̂·(p − c) ≥ R  ⇔  −n̂·p ≤ −R − n̂·c
                    let t = (0..3).map(|c| (self.layout.col(k, c), -d[c])).collect();
                    let nc: f64 = (0..3).map(|c| d[c] * ob.center[c]).sum();
                    qp.rows.push(SparseRow::new(t, -ob.clearance - nc));
                }
            }
            let next = qp.solve(opts).map_err(map)?;
            iterations += next.iterations;
            let change = next.z.iter().zip(&sol.z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            sol = next;
            if change < 1e-6 {
                break;
            }
        }
        Ok((self.expand(&sol.z), sol.objective, iterations, outer))
    }
}

/// Solves the fixed-time trajectory QP under the halfspaces implied by `mode`.
pub fn solve_plan(mission: &Mission, mode: &PlannerMode, lib: &PolytopeLibrary) -> Result<PlanResult, PlanError> {
    let hs = mode.halfspaces(lib)?;
    solve_with_halfspaces(mission, &hs)
}

pub fn solve_with_halfspaces(mission: &Mission, halfspaces: &[Halfspace]) -> Result<PlanResult, PlanError> {
    let problem = Problem::new(mission, halfspaces)?;
    let (q, objective, iterations, obstacle_iterations) = problem.solve(&QpOptions::default())?;
    let n = q.len();
    let dt = mission.dt();
    let controls = flat_control_map(&q, &problem.psi, dt, &mission.model).ok_or(PlanError::InvalidMission("fewer than five samples"))?;
    let (mut dev, mut hdev) = (Vec::new(), Vec::new());
    for (i, w) in mission.waypoints.iter().enumerate() {
        let p = q[mission.waypoint_sample(i)];
        dev.push(sqrt((0..3).map(|c| (p[c] - w.q[c]) * (p[c] - w.q[c])).sum()));
        hdev.push(wrap_angle(p[3] - w.q[3]).abs());
    }
    let feasible = dev.iter().all(|d| *d <= mission.waypoint_tol);
    let own = ViolationScan::over(&controls, &[halfspaces]);
    Ok(PlanResult {
        times: (0..n).map(|k| k as f64 * dt).collect(),
        q,
        controls,
        psi_ref: problem.psi,
        objective: objective + mission.waypoints.iter().map(|w| w.weight * w.q.iter().map(|v| v * v).sum::<f64>()).sum::<f64>(),
        waypoint_deviation: dev,
        heading_deviation: hdev,
        feasible,
        violations: own.records,
        iterations,
        obstacle_iterations,
    })
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    let r = a - two_pi * libm::floor((a + core::f64::consts::PI) / two_pi);
    if r.is_finite() {
        r
    } else {
        a
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ViolationScan {
    /// Number of violated (halfspace, sample) pairs.
    pub count: usize,
    /// Number of distinct samples with at least one violation.
    pub samples: usize,
    /// Violation tallies per polytope and halfspace.
    pub per_halfspace: Vec<Vec<usize>>,
    pub records: Vec<Violation>,
}

impl ViolationScan {
    fn over(controls: &[[f64; 4]], sets: &[&[Halfspace]]) -> Self {
        let mut scan = ViolationScan { per_halfspace: sets.iter().map(|s| vec![0; s.len()]).collect(), ..Default::default() };
        let mut hit = BTreeSet::new();
        for (k, u) in controls.iter().enumerate() {
            for (p, set) in sets.iter().enumerate() {
                for (h, hs) in set.iter().enumerate() {
                    let m = hs.margin(u);
                    if m > VIOLATION_TOL {
                        scan.count += 1;
                        scan.per_halfspace[p][h] += 1;
                        scan.records.push(Violation { polytope: p, halfspace: h, sample: k, margin: m });
                        hit.insert(k);
                    }
                }
            }
        }
        scan.samples = hit.len();
        scan
    }

    /// Distinct violated (polytope, halfspace) pairs in ascending order.
    pub fn violated_halfspaces(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (p, tallies) in self.per_halfspace.iter().enumerate() {
            for (h, c) in tallies.iter().enumerate() {
                if *c > 0 {
                    out.push((p, h));
                }
            }
        }
        out
    }
}

/// Tests every sample of `plan` against every halfspace of every polytope.
pub fn scan_violations(plan: &PlanResult, polytopes: &[&ControlPolytope]) -> ViolationScan {
    let sets: Vec<&[Halfspace]> = polytopes.iter().map(|p| p.halfspaces.as_slice()).collect();
    ViolationScan::over(&plan.controls, &sets)
}

/// Integer-second grid from `lo` to `hi` inclusive.
pub fn time_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = libm::floor((hi - lo) / step + 1e-9) as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// Smallest grid time whose plan is feasible, scanning in ascending order.
pub fn min_feasible_time(mission: &Mission, mode: &PlannerMode, lib: &PolytopeLibrary, grid: &[f64]) -> Result<(f64, PlanResult), PlanError> {
    let hs = mode.halfspaces(lib)?;
    for &t in grid {
        match solve_with_halfspaces(&mission.with_duration(t), &hs) {
            Ok(plan) if plan.feasible => return Ok((t, plan)),
            Ok(_) | Err(PlanError::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(PlanError::NoFeasibleTime)
}

/// A fault-polytope halfspace collected for the risk-sensitive re-solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedHalfspace {
    pub fault: FaultCase,
    pub index: usize,
    pub halfspace: Halfspace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RspReport {
    pub faults: Vec<FaultCase>,
    pub t_rip: f64,
    pub t_rcp: Vec<f64>,
    pub t_mission: f64,
    pub rip: PlanResult,
    pub rip_violations: ViolationScan,
    pub selected: Vec<SelectedHalfspace>,
    pub rsp: PlanResult,
    pub rsp_violations: ViolationScan,
}

/// Runs RIP at `duration`, collects the fault halfspaces it violates, and re-solves with them.
pub fn rsp_at(mission: &Mission, faults: &[FaultCase], lib: &PolytopeLibrary, duration: f64) -> Result<(PlanResult, ViolationScan, Vec<SelectedHalfspace>, PlanResult, ViolationScan), PlanError> {
    if faults.is_empty() {
        return Err(PlanError::EmptyFaultList);
    }
    let polys: Vec<&ControlPolytope> = faults
        .iter()
        .map(|f| lib.get(f).ok_or_else(|| PlanError::MissingPolytope(f.label())))
        .collect::<Result<_, _>>()?;
    let m = mission.with_duration(duration);
    let rip = solve_plan(&m, &PlannerMode::Rip, lib)?;
    let rip_scan = scan_violations(&rip, &polys);
    let selected: Vec<SelectedHalfspace> = rip_scan
        .violated_halfspaces()
        .into_iter()
        .map(|(p, h)| SelectedHalfspace { fault: faults[p].clone(), index: h, halfspace: polys[p].halfspaces[h] })
        .collect();
    let rsp = solve_plan(&m, &PlannerMode::Rsp(selected.iter().map(|s| s.halfspace).collect()), lib)?;
    let rsp_scan = scan_violations(&rsp, &polys);
    Ok((rip, rip_scan, selected, rsp, rsp_scan))
}

/// Risk-sensitive planning: RIP and per-fault RCP minimum times, then an RSP re-solve at the larger time.
pub fn rsp_pipeline(mission: &Mission, faults: &[FaultCase], lib: &PolytopeLibrary, grid: &[f64]) -> Result<RspReport, PlanError> {
    if faults.is_empty() {
        return Err(PlanError::EmptyFaultList);
    }
    let (t_rip, _) = min_feasible_time(mission, &PlannerMode::Rip, lib, grid)?;
    let mut t_rcp = Vec::with_capacity(faults.len());
    for f in faults {
        t_rcp.push(min_feasible_time(mission, &PlannerMode::Rcp(vec![f.clone()]), lib, grid)?.0);
    }
    let t_mission = t_rcp.iter().cloned().fold(t_rip, f64::max);
    let (rip, rip_violations, selected, rsp, rsp_violations) = rsp_at(mission, faults, lib, t_mission)?;
    Ok(RspReport { faults: faults.to_vec(), t_rip, t_rcp, t_mission, rip, rip_violations, selected, rsp, rsp_violations })
}

/// Time-stamped (x, y, z, ψ) samples, linearly interpolated between stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub q: Vec<[f64; 4]>,
}

impl Trajectory {
    pub fn at(&self, t: f64) -> [f64; 4] {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.q[0];
        }
        if t >= self.times[n - 1] {
            return self.q[n - 1];
        }
        let k = self.times.partition_point(|s| *s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        [0, 1, 2, 3].map(|c| (1.0 - w) * self.q[k][c] + w * self.q[k + 1][c])
    }
}

/// Summed position and heading errors over a list of reference points.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathError {
    pub e_r: f64,
    pub e_psi: f64,
    pub e_r_mean: f64,
    pub e_psi_mean: f64,
}

pub fn path_error(actual: &[[f64; 4]], reference: &[[f64; 4]]) -> PathError {
    let n = actual.len().min(reference.len());
    let mut e = PathError::default();
    for (a, r) in actual.iter().zip(reference).take(n) {
        e.e_r += sqrt((0..3).map(|c| (a[c] - r[c]) * (a[c] - r[c])).sum());
        e.e_psi += wrap_angle(a[3] - r[3]).abs();
    }
    if n > 0 {
        e.e_r_mean = e.e_r / n as f64;
        e.e_psi_mean = e.e_psi / n as f64;
    }
    e
}

/// Errors of a flown or planned trajectory against waypoints, its own nominal plan and the RIP nominal plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseMetrics {
    pub waypoints: PathError,
    pub reference: PathError,
    pub rip: PathError,
}

/// Evaluates every trajectory at the mission's waypoint times.
pub fn plan_metrics(actual: &Trajectory, mission: &Mission, own: &Trajectory, rip: &Trajectory) -> CaseMetrics {
    let times: Vec<f64> = (0..mission.waypoints.len()).map(|i| mission.waypoint_time(i)).collect();
    let sample = |tr: &Trajectory| -> Vec<[f64; 4]> { times.iter().map(|t| tr.at(*t)).collect() };
    let a = sample(actual);
    let wp: Vec<[f64; 4]> = mission.waypoints.iter().map(|w| w.q).collect();
    CaseMetrics { waypoints: path_error(&a, &wp), reference: path_error(&a, &sample(own)), rip: path_error(&a, &sample(rip)) }
}
