//! Planner runs driven by a scenario configuration.

use ftmav_core::maneuverability::FaultCase;
use ftmav_core::planner::{
    min_feasible_time, rsp_at, rsp_pipeline, scan_violations, solve_plan, Mission, PlanResult, PlannerMode,
    PolytopeLibrary, RspReport,
};

use crate::config::{Mode, ScenarioConfig};
use crate::error::HarnessError;
use crate::format::{fmt_num, Table};

/// Mission, polytopes for the configured fault sets, and the fault sets themselves.
pub struct PlanningContext {
    pub mission: Mission,
    pub library: PolytopeLibrary,
    pub faults: Vec<FaultCase>,
}

impl PlanningContext {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, HarnessError> {
        let p = cfg.params()?;
        let faults = cfg.planner.fault_cases(p.rotor_count())?;
        let mission = cfg.mission.mission(&p)?;
        let library = PolytopeLibrary::build(&p, &faults)?;
        Ok(PlanningContext { mission, library, faults })
    }

    /// Plan in `mode` at the mission duration; RSP collects halfspaces from the RIP plan at that duration.
    pub fn plan(&self, mode: Mode) -> Result<PlanResult, HarnessError> {
        let plan = match mode {
            Mode::Rip => solve_plan(&self.mission, &PlannerMode::Rip, &self.library)?,
            Mode::Rcp => solve_plan(&self.mission, &PlannerMode::Rcp(self.faults.clone()), &self.library)?,
            Mode::Rsp => rsp_at(&self.mission, &self.faults, &self.library, self.mission.duration)?.3,
        };
        Ok(plan)
    }

    pub fn min_time(&self, mode: &PlannerMode, grid: &[f64]) -> Result<(f64, PlanResult), HarnessError> {
        Ok(min_feasible_time(&self.mission, mode, &self.library, grid)?)
    }

    pub fn pipeline(&self, grid: &[f64]) -> Result<RspReport, HarnessError> {
        Ok(rsp_pipeline(&self.mission, &self.faults, &self.library, grid)?)
    }

    /// Violations of `plan` against every configured fault polytope.
    pub fn violations(&self, plan: &PlanResult) -> usize {
        let polys: Vec<_> = self.library.faults.iter().map(|(_, p)| p).collect();
        scan_violations(plan, &polys).count
    }
}

/// Samples, flat-mapped controls and the per-waypoint deviation of a plan.
pub fn plan_table(plan: &PlanResult) -> Table {
    let mut t = Table::new(&["t", "x", "y", "z", "psi", "T", "tau_x", "tau_y", "tau_z"]);
    for k in 0..plan.q.len() {
        let mut row = vec![fmt_num(plan.times[k])];
        row.extend(plan.q[k].iter().map(|v| fmt_num(*v)));
        row.extend(plan.controls[k].iter().map(|v| fmt_num(*v)));
        t.push(row);
    }
    t
}

/// Step-by-step summary of the RSP pipeline.
pub fn pipeline_table(r: &RspReport) -> Table {
    let mut t = Table::new(&["item", "fault_set", "value"]);
    let mut push = |item: &str, fault: &str, v: String| t.push(vec![item.into(), fault.into(), v]);
    push("t_rip", "", fmt_num(r.t_rip));
    for (f, tr) in r.faults.iter().zip(&r.t_rcp) {
        push("t_rcp", &f.label(), fmt_num(*tr));
    }
    push("t_mission", "", fmt_num(r.t_mission));
    push("rip_violations", "", r.rip_violations.count.to_string());
    push("rip_violation_samples", "", r.rip_violations.samples.to_string());
    push("selected_halfspaces", "", r.selected.len().to_string());
    for s in &r.selected {
        push("selected", &s.fault.label(), s.index.to_string());
    }
    push("rsp_violations", "", r.rsp_violations.count.to_string());
    push("rsp_violation_samples", "", r.rsp_violations.samples.to_string());
    push("rip_max_waypoint_deviation", "", fmt_num(r.rip.max_waypoint_deviation()));
    push("rsp_max_waypoint_deviation", "", fmt_num(r.rsp.max_waypoint_deviation()));
    t
}
