//! Viviani mission geometry and stock scenario configurations.

use std::f64::consts::{FRAC_PI_2, PI};

use ftmav_core::control::FlatSample;

use crate::config::{
    FaultEvent, Frame, Mode, PathBlock, ReferenceSource, ScenarioConfig, VehicleBlock,
};

/// Uniform samples of the Viviani figure-eight over t ∈ [0, 4π(count−1)/count], ψ = 0.
pub fn viviani_waypoints(a: f64, count: usize, center: [f64; 2], z_offset: f64) -> Vec<[f64; 4]> {
    (0..count)
        .map(|k| {
            let t = 4.0 * PI * k as f64 / count as f64;
            [
                center[0] + a * (1.0 + t.cos()),
                center[1] + a * t.sin(),
                z_offset + 2.0 * a * (t / 2.0).sin(),
                0.0,
            ]
        })
        .collect()
}

/// Analytic Viviani reference traversed once every `period` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VivianiCurve {
    pub a: f64,
    pub z0: f64,
    pub center: [f64; 2],
    pub period: f64,
}

impl VivianiCurve {
    pub fn sample(&self, t: f64) -> FlatSample {
        let w = 4.0 * PI / self.period;
        let s = w * t;
        let mut x = [0.0; 5];
        let mut y = [0.0; 5];
        for k in 0..5 {
            let f = self.a * w.powi(k as i32);
            let phase = s + k as f64 * FRAC_PI_2;
            x[k] = f * phase.cos();
            y[k] = f * phase.sin();
        }
        x[0] += self.a + self.center[0];
        y[0] += self.center[1];
        let (h, wh) = (s / 2.0, w / 2.0);
        let z = [
            self.z0 + 2.0 * self.a * h.sin(),
            2.0 * self.a * wh * h.cos(),
            -2.0 * self.a * wh * wh * h.sin(),
        ];
        FlatSample { t, x, y, z, psi: [0.0; 3] }
    }

    pub fn from_path(path: &PathBlock) -> Option<Self> {
        match *path {
            PathBlock::Viviani { a, z0, center, period, .. } => Some(VivianiCurve { a, z0, center, period }),
            PathBlock::Waypoints { .. } => None,
        }
    }
}

/// Octocopter tracking the 1 m Viviani curve for 20 s with M3 failing at 5 s and fault isolation on.
pub fn fdi_recovery() -> ScenarioConfig {
    let mut c = ScenarioConfig::octo_viviani("fdi-recovery");
    c.faults = vec![FaultEvent { motor: 3, onset: 5.0, residual: 0.0 }];
    c
}

/// Healthy counterpart of [`fdi_recovery`].
pub fn healthy_tracking() -> ScenarioConfig {
    ScenarioConfig::octo_viviani("healthy-tracking")
}

/// M3 failed from the start with fault isolation off.
pub fn fault_ignorant() -> ScenarioConfig {
    let mut c = ScenarioConfig::octo_viviani("fault-ignorant");
    c.faults = vec![FaultEvent { motor: 3, onset: 0.0, residual: 0.0 }];
    c.fdi.enabled = false;
    c
}

/// Planning mission: 4 m Viviani figure-eight, 21 waypoints, grid 8..40 s.
pub fn planning_mission(mode: Mode, faults: Vec<Vec<usize>>) -> ScenarioConfig {
    let mut c = ScenarioConfig::octo_viviani("viviani-planning");
    c.vehicle = VehicleBlock::stock(Frame::Octo, "PNPNPNPN");
    c.mission.path = PathBlock::Viviani { a: 4.0, z0: 2.0, count: 21, center: [0.0, 0.0], period: 20.0 };
    c.planner.mode = mode;
    c.planner.faults = faults;
    c
}

/// Planned-reference tracking with M1 failing at 8 s and M6 at 12 s (T = 26 s).
pub fn simultaneous_fault(mode: Mode) -> ScenarioConfig {
    let mut c = planning_mission(mode, vec![vec![1, 6]]);
    c.name = format!("simultaneous-fault-{}", mode_name(mode));
    c.mission.duration = 26.0;
    c.sim.duration = 26.0;
    c.sim.reference = ReferenceSource::Plan;
    c.faults = vec![
        FaultEvent { motor: 1, onset: 8.0, residual: 0.0 },
        FaultEvent { motor: 6, onset: 12.0, residual: 0.0 },
    ];
    c
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Rip => "rip",
        Mode::Rcp => "rcp",
        Mode::Rsp => "rsp",
    }
}
