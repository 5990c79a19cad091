//! Reproduction of the controllability, planner-time, violation and tracking tables.

use ftmav_core::maneuverability::{fault_sweep, FaultCase, HoverVerdict, SweepReport};
use ftmav_core::planner::{
    path_error, plan_metrics, scan_violations, solve_plan, CaseMetrics, PathError, PlanResult, PlannerMode,
};
use ftmav_core::vehicle::VehicleParams;

use crate::config::{Mode, ScenarioConfig};
use crate::error::HarnessError;
use crate::format::{fmt_num, Table};
use crate::metrics::metrics_table;
use crate::planning::PlanningContext;
use crate::scenarios::{planning_mission, simultaneous_fault};
use crate::sim::run_tracking;

pub const TABLE_IDS: &[&str] = &[
    "quad-single",
    "quad-double",
    "hexa-pnpnpn-single",
    "hexa-pnpnpn-double",
    "hexa-ppnnpn-single",
    "hexa-ppnnpn-double",
    "octo-pnpnpnpn-single",
    "octo-pnpnpnpn-double",
    "octo-ppnnppnn-single",
    "octo-ppnnppnn-double",
    "viviani-planner-times",
    "rsp-violations",
    "simultaneous-fault",
];

pub const CONTROLLABILITY_COLUMNS: [&str; 9] =
    ["fault_set", "class", "e_p_T", "e_p_x", "e_p_y", "e_p_z", "e_pminus_T", "e_pminus_x", "e_pminus_y"];

fn verdict_row(case: &FaultCase, v: &HoverVerdict) -> Vec<String> {
    let mut row = vec![case.label(), v.class.as_str().to_string()];
    row.extend(v.e_p.iter().map(|x| fmt_num(*x)));
    match v.e_p_minus {
        Some(m) => row.extend(m.iter().map(|x| fmt_num(*x))),
        None => row.extend(std::iter::repeat_n(String::new(), 3)),
    }
    row
}

pub fn sweep_table(report: &SweepReport) -> Table {
    let mut t = Table::new(&CONTROLLABILITY_COLUMNS);
    for (case, v) in &report.rows {
        t.push(verdict_row(case, v));
    }
    t
}

fn sweep_params(id: &str) -> Option<(VehicleParams, usize)> {
    let (frame, order) = id.rsplit_once('-')?;
    let k = match order {
        "single" => 1,
        "double" => 2,
        _ => return None,
    };
    let p = match frame {
        "quad" => VehicleParams::stock_quad(),
        "hexa-pnpnpn" => VehicleParams::stock_hexa("PNPNPN"),
        "hexa-ppnnpn" => VehicleParams::stock_hexa("PPNNPN"),
        "octo-pnpnpnpn" => VehicleParams::stock_octo("PNPNPNPN"),
        "octo-ppnnppnn" => VehicleParams::stock_octo("PPNNPPNN"),
        _ => return None,
    };
    Some((p, k))
}

/// Waypoint errors of a plan evaluated at the waypoint times.
pub fn plan_waypoint_error(ctx: &PlanningContext, plan: &PlanResult) -> PathError {
    let m = ctx.mission.with_duration(plan.duration());
    let tr = plan.trajectory();
    let actual: Vec<[f64; 4]> = (0..m.waypoints.len()).map(|i| tr.at(m.waypoint_time(i))).collect();
    let wp: Vec<[f64; 4]> = m.waypoints.iter().map(|w| w.q).collect();
    path_error(&actual, &wp)
}

/// Minimum times of RIP and of RCP for every single rotor fault on the planning mission.
pub fn planner_times() -> Result<Table, HarnessError> {
    let cfg = planning_mission(Mode::Rcp, (1..=8).map(|i| vec![i]).collect());
    let ctx = PlanningContext::new(&cfg)?;
    let grid = cfg.mission.grid();
    let mut t = Table::new(&["planner", "fault_set", "t_min", "e_R", "e_R_mean"]);
    let mut push = |planner: &str, fault: String, (tm, plan): (f64, PlanResult)| {
        let e = plan_waypoint_error(&ctx, &plan);
        t.push(vec![planner.into(), fault, fmt_num(tm), fmt_num(e.e_r), fmt_num(e.e_r_mean)]);
    };
    push("RIP", String::new(), ctx.min_time(&PlannerMode::Rip, &grid)?);
    for f in &ctx.faults {
        push("RCP", f.label(), ctx.min_time(&PlannerMode::Rcp(vec![f.clone()]), &grid)?);
    }
    Ok(t)
}

/// Per-fault violation counts for RIP, RSP and each fault's own RCP at the pipeline mission time.
pub fn rsp_violations() -> Result<Table, HarnessError> {
    let cfg = planning_mission(Mode::Rsp, (1..=8).map(|i| vec![i]).collect());
    let ctx = PlanningContext::new(&cfg)?;
    let report = ctx.pipeline(&cfg.mission.grid())?;
    let mission = ctx.mission.with_duration(report.t_mission);
    let mut t = Table::new(&["fault_set", "t_mission", "rip_violations", "rsp_violations", "rcp_own_violations"]);
    for (f, poly) in &ctx.library.faults {
        let rcp = solve_plan(&mission, &PlannerMode::Rcp(vec![f.clone()]), &ctx.library)?;
        t.push(vec![
            f.label(),
            fmt_num(report.t_mission),
            scan_violations(&report.rip, &[poly]).count.to_string(),
            scan_violations(&report.rsp, &[poly]).count.to_string(),
            scan_violations(&rcp, &[poly]).count.to_string(),
        ]);
    }
    t.push(vec![
        "all".into(),
        fmt_num(report.t_mission),
        report.rip_violations.count.to_string(),
        report.rsp_violations.count.to_string(),
        String::new(),
    ]);
    Ok(t)
}

/// Closed-loop tracking of the RIP and RSP plans with M1 failing at 8 s and M6 at 12 s.
pub fn simultaneous_fault_metrics() -> Result<Vec<(Mode, CaseMetrics)>, HarnessError> {
    let base: ScenarioConfig = simultaneous_fault(Mode::Rsp);
    let ctx = PlanningContext::new(&base)?;
    let rip = ctx.plan(Mode::Rip)?;
    let rsp = ctx.plan(Mode::Rsp)?;
    let mut out = Vec::new();
    for (mode, plan) in [(Mode::Rip, &rip), (Mode::Rsp, &rsp)] {
        let cfg = simultaneous_fault(mode);
        let log = run_tracking(&cfg, plan)?;
        if log.partial {
            return Err(HarnessError::Numerical(format!(
                "{} tracking aborted: {}",
                crate::scenarios::mode_name(mode),
                log.failure.unwrap_or_default()
            )));
        }
        let m = plan_metrics(&log.trajectory(), &ctx.mission, &plan.trajectory(), &rip.trajectory());
        out.push((mode, m));
    }
    Ok(out)
}

fn simultaneous_fault_table() -> Result<Table, HarnessError> {
    let mut t = Table::new(&["planner", "name", "value", "units"]);
    for (mode, m) in simultaneous_fault_metrics()? {
        for row in metrics_table(&m).rows {
            let mut r = vec![crate::scenarios::mode_name(mode).to_uppercase()];
            r.extend(row);
            t.push(r);
        }
    }
    Ok(t)
}

pub fn reproduce_table(id: &str) -> Result<Table, HarnessError> {
    if let Some((p, k)) = sweep_params(id) {
        return Ok(sweep_table(&fault_sweep(&p, k)?));
    }
    match id {
        "viviani-planner-times" => planner_times(),
        "rsp-violations" => rsp_violations(),
        "simultaneous-fault" => simultaneous_fault_table(),
        _ => Err(HarnessError::UnknownTable(id.to_string())),
    }
}
