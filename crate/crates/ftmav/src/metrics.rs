//! Path-error metrics exported as name/value/units CSV.

use ftmav_core::planner::{plan_metrics, CaseMetrics, Mission, PathError, Trajectory};

use crate::error::HarnessError;
use crate::format::{fmt_num, Table};

fn push_family(t: &mut Table, suffix: &str, e: &PathError) {
    t.push(vec![format!("e_R{suffix}"), fmt_num(e.e_r), "m".into()]);
    t.push(vec![format!("e_Psi{suffix}"), fmt_num(e.e_psi), "rad".into()]);
    t.push(vec![format!("e_R{suffix}_mean"), fmt_num(e.e_r_mean), "m".into()]);
    t.push(vec![format!("e_Psi{suffix}_mean"), fmt_num(e.e_psi_mean), "rad".into()]);
}

/// One row per metric: errors against the waypoints (`p`), the own plan (`Ref`) and the RIP plan (`RIP`).
pub fn metrics_table(m: &CaseMetrics) -> Table {
    let mut t = Table::new(&["name", "value", "units"]);
    push_family(&mut t, "p", &m.waypoints);
    push_family(&mut t, "Ref", &m.reference);
    push_family(&mut t, "RIP", &m.rip);
    t
}

pub fn export_metrics(actual: &Trajectory, mission: &Mission, own: &Trajectory, rip: &Trajectory) -> String {
    metrics_table(&plan_metrics(actual, mission, own, rip)).to_csv()
}

/// Flown and reference trajectories recovered from a simulation log CSV.
pub fn log_trajectories(log: &Table) -> Result<(Trajectory, Trajectory), HarnessError> {
    let col = |name: &str| {
        log.column(name).ok_or_else(|| HarnessError::Config(format!("log has no `{name}` column")))
    };
    let idx = [col("t")?, col("x")?, col("y")?, col("z")?, col("psi")?];
    let refs = [col("x_ref")?, col("y_ref")?, col("z_ref")?, col("psi_ref")?];
    let num = |s: &str| s.parse::<f64>().map_err(|_| HarnessError::Config(format!("bad number `{s}` in log")));
    let (mut times, mut flown, mut reference) = (Vec::new(), Vec::new(), Vec::new());
    for r in &log.rows {
        times.push(num(&r[idx[0]])?);
        flown.push([num(&r[idx[1]])?, num(&r[idx[2]])?, num(&r[idx[3]])?, num(&r[idx[4]])?]);
        reference.push([num(&r[refs[0]])?, num(&r[refs[1]])?, num(&r[refs[2]])?, num(&r[refs[3]])?]);
    }
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(HarnessError::Config("log times must be non-empty and increasing".into()));
    }
    Ok((Trajectory { times: times.clone(), q: flown }, Trajectory { times, q: reference }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ftmav_core::planner::{FlatModel, Waypoint};
    use ftmav_core::vehicle::VehicleParams;

    fn mission() -> Mission {
        let wp = vec![[0.0, 0.0, 1.0, 0.0], [1.0, 0.0, 1.0, 0.0], [2.0, 0.0, 1.0, 0.0]];
        let model = FlatModel::from_params(&VehicleParams::stock_octo("PNPNPNPN"));
        Mission::new(wp.into_iter().map(Waypoint::new).collect(), 10.0, model)
    }

    fn exact(m: &Mission) -> Trajectory {
        let times = (0..m.waypoints.len()).map(|i| m.waypoint_time(i)).collect();
        Trajectory { times, q: m.waypoints.iter().map(|w| w.q).collect() }
    }

    #[test]
    fn perfect_tracking_is_zero() {
        let m = mission();
        let tr = exact(&m);
        let t = Table::from_csv(&export_metrics(&tr, &m, &tr, &tr)).unwrap();
        assert_eq!(t.rows.len(), 12);
        assert!(t.rows.iter().all(|r| r[1] == "0"));
    }

    #[test]
    fn offset_waypoint_sums_to_hand_value() {
        let m = mission();
        let mut tr = exact(&m);
        tr.q[1][0] += 0.3;
        tr.q[1][1] += 0.4;
        let t = metrics_table(&plan_metrics(&tr, &m, &exact(&m), &exact(&m)));
        assert_eq!(t.rows[0], vec!["e_Rp".to_string(), "0.500000000".into(), "m".into()]);
    }
}
