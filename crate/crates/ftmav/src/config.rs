//! Scenario configuration: a versioned JSON document.

use std::path::Path;

use ftmav_core::control::Gains;
use ftmav_core::fdi::{FdiConfig, Forgetting};
use ftmav_core::maneuverability::FaultCase;
use ftmav_core::planner::{
    Bounds, CorridorBox, FlatModel, Mission, Obstacle, Waypoint, DEFAULT_INTERIOR, WAYPOINT_TOL,
};
use ftmav_core::vehicle::{MotorConstants, VehicleParams};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::scenarios::viviani_waypoints;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Quad,
    Hexa,
    Octo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorBlock {
    pub ke: f64,
    pub km: f64,
    pub r: f64,
    pub v_max: f64,
}

/// Stock frame plus optional parameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleBlock {
    pub frame: Frame,
    pub pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ixx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iyy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub izz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub izzm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motor: Option<MotorBlock>,
}

impl VehicleBlock {
    pub fn stock(frame: Frame, pattern: &str) -> Self {
        VehicleBlock {
            frame,
            pattern: pattern.to_string(),
            mass: None,
            arm: None,
            ixx: None,
            iyy: None,
            izz: None,
            izzm: None,
            b: None,
            d: None,
            omega_max: None,
            motor: None,
        }
    }

    pub fn params(&self) -> Result<VehicleParams, HarnessError> {
        let expected = match self.frame {
            Frame::Quad => 4,
            Frame::Hexa => 6,
            Frame::Octo => 8,
        };
        if self.pattern.len() != expected || !self.pattern.chars().all(|c| c == 'P' || c == 'N') {
            return Err(HarnessError::Config(format!(
                "pattern `{}` must be {expected} characters of P/N",
                self.pattern
            )));
        }
        let mut p = match self.frame {
            Frame::Quad => VehicleParams::stock_quad(),
            Frame::Hexa => VehicleParams::stock_hexa(&self.pattern),
            Frame::Octo => VehicleParams::stock_octo(&self.pattern),
        };
        p.pattern = self.pattern.parse().map_err(|e| HarnessError::Config(format!("{e}")))?;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.mass, self.mass);
        set(&mut p.arm, self.arm);
        set(&mut p.ixx, self.ixx);
        set(&mut p.iyy, self.iyy);
        set(&mut p.izz, self.izz);
        set(&mut p.izzm, self.izzm);
        set(&mut p.b, self.b);
        set(&mut p.d, self.d);
        set(&mut p.omega_max, self.omega_max);
        if let Some(m) = &self.motor {
            p.motor = MotorConstants { ke: m.ke, km: m.km, r: m.r, v_max: m.v_max };
        }
        p.validate().map_err(|e| HarnessError::Config(format!("vehicle: {e}")))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsBlock {
    pub k_pz: f64,
    pub k_dz: f64,
    pub k_p: f64,
    pub k_d: f64,
    pub k_pxy: f64,
    pub k_dxy: f64,
    pub k_omega: f64,
}

impl Default for GainsBlock {
    fn default() -> Self {
        let g = Gains::default();
        GainsBlock {
            k_pz: g.k_pz,
            k_dz: g.k_dz,
            k_p: g.k_p,
            k_d: g.k_d,
            k_pxy: g.k_pxy,
            k_dxy: g.k_dxy,
            k_omega: g.k_omega,
        }
    }
}

impl GainsBlock {
    pub fn gains(&self) -> Result<Gains, HarnessError> {
        let g = Gains {
            k_pz: self.k_pz,
            k_dz: self.k_dz,
            k_p: self.k_p,
            k_d: self.k_d,
            k_pxy: self.k_pxy,
            k_dxy: self.k_dxy,
            k_omega: self.k_omega,
        };
        g.validate().map_err(|e| HarnessError::Config(format!("gains: {e}")))?;
        Ok(g)
    }
}

/// Path that defines the mission waypoints and, for Viviani, the analytic tracking curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PathBlock {
    Viviani {
        a: f64,
        z0: f64,
        count: usize,
        #[serde(default)]
        center: [f64; 2],
        /// Duration of one full figure-eight for the analytic curve, s.
        period: f64,
    },
    Waypoints {
        points: Vec<[f64; 4]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock { min: 8.0, max: 40.0, step: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsBlock {
    pub min: [f64; 4],
    pub max: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleBlock {
    pub center: [f64; 3],
    pub clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorridorBlock {
    /// 0-based segment index between waypoints.
    pub segment: usize,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionBlock {
    pub path: PathBlock,
    /// Planned execution time, s.
    pub duration: f64,
    #[serde(default = "default_interior")]
    pub interior: usize,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default = "default_true")]
    pub rest: bool,
    #[serde(default = "default_waypoint_tol")]
    pub waypoint_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<BoundsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<BoundsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceleration: Option<BoundsBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<ObstacleBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corridor: Vec<CorridorBlock>,
}

fn default_interior() -> usize {
    DEFAULT_INTERIOR
}

fn default_true() -> bool {
    true
}

fn default_waypoint_tol() -> f64 {
    WAYPOINT_TOL
}

impl Default for MissionBlock {
    fn default() -> Self {
        MissionBlock {
            path: PathBlock::Viviani { a: 1.0, z0: 2.0, count: 21, center: [0.0, 0.0], period: 20.0 },
            duration: 20.0,
            interior: DEFAULT_INTERIOR,
            grid: GridBlock::default(),
            rest: true,
            waypoint_tol: WAYPOINT_TOL,
            position: None,
            rate: None,
            acceleration: None,
            obstacles: Vec::new(),
            corridor: Vec::new(),
        }
    }
}

impl MissionBlock {
    pub fn waypoints(&self) -> Result<Vec<Waypoint>, HarnessError> {
        match &self.path {
            PathBlock::Viviani { a, z0, count, center, .. } => {
                if *count < 2 || !(*a > 0.0) {
                    return Err(HarnessError::Config("viviani needs count >= 2 and a > 0".into()));
                }
                Ok(viviani_waypoints(*a, *count, *center, *z0).into_iter().map(Waypoint::new).collect())
            }
            PathBlock::Waypoints { points, weights } => {
                if let Some(w) = weights {
                    if w.len() != points.len() || w.iter().any(|a| !(0.0..=1.0).contains(a)) {
                        return Err(HarnessError::Config("weights must match points and lie in [0, 1]".into()));
                    }
                }
                Ok(points
                    .iter()
                    .enumerate()
                    .map(|(i, q)| Waypoint { q: *q, weight: weights.as_ref().map_or(1.0, |w| w[i]) })
                    .collect())
            }
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        ftmav_core::planner::time_grid(self.grid.min, self.grid.max, self.grid.step)
    }

    pub fn mission(&self, params: &VehicleParams) -> Result<Mission, HarnessError> {
        let mut m = Mission::new(self.waypoints()?, self.duration, FlatModel::from_params(params));
        m.interior = self.interior;
        m.rest = self.rest;
        m.waypoint_tol = self.waypoint_tol;
        let bounds = |b: &Option<BoundsBlock>| b.as_ref().map(|b| Bounds { min: b.min, max: b.max });
        m.position = bounds(&self.position);
        m.rate = bounds(&self.rate);
        m.acceleration = bounds(&self.acceleration);
        m.obstacles = self.obstacles.iter().map(|o| Obstacle { center: o.center, clearance: o.clearance }).collect();
        m.corridor = self
            .corridor
            .iter()
            .map(|c| CorridorBox { segment: c.segment, min: c.min, max: c.max })
            .collect();
        m.validate().map_err(|e| HarnessError::Config(format!("mission: {e}")))?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Rip,
    Rcp,
    Rsp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PlannerBlock {
    #[serde(default)]
    pub mode: Mode,
    /// Fault sets of interest, 1-based motor numbers, e.g. `[[1], [1, 6]]`.
    #[serde(default)]
    pub faults: Vec<Vec<usize>>,
}

impl PlannerBlock {
    pub fn fault_cases(&self, rotors: usize) -> Result<Vec<FaultCase>, HarnessError> {
        self.faults.iter().map(|set| fault_case(set, rotors)).collect()
    }
}

/// Converts 1-based motor numbers to a fault case.
pub fn fault_case(set: &[usize], rotors: usize) -> Result<FaultCase, HarnessError> {
    if set.is_empty() || set.iter().any(|m| *m == 0 || *m > rotors) {
        return Err(HarnessError::Config(format!("fault set {set:?} must list motors 1..={rotors}")));
    }
    Ok(FaultCase::new(set.iter().map(|m| m - 1).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultEvent {
    /// 1-based motor number.
    pub motor: usize,
    pub onset: f64,
    /// Remaining capacity after onset, in [0, 1).
    #[serde(default)]
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdiBlock {
    pub enabled: bool,
    pub rate_hz: f64,
    pub window_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_hz: Option<f64>,
    /// Exponential forgetting factor per sample; absent means a uniform window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forgetting: Option<f64>,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reset_residual: Option<f64>,
    pub min_intervals: usize,
}

impl Default for FdiBlock {
    fn default() -> Self {
        let c = FdiConfig::default();
        FdiBlock {
            enabled: true,
            rate_hz: c.rate_hz,
            window_s: c.window_s,
            cutoff_hz: c.cutoff_hz,
            forgetting: None,
            threshold: c.threshold,
            reset_residual: c.reset_residual,
            min_intervals: c.min_intervals,
        }
    }
}

impl FdiBlock {
    pub fn config(&self) -> Result<FdiConfig, HarnessError> {
        let c = FdiConfig {
            rate_hz: self.rate_hz,
            window_s: self.window_s,
            cutoff_hz: self.cutoff_hz,
            forgetting: self.forgetting.map_or(Forgetting::Window, Forgetting::Exponential),
            threshold: self.threshold,
            reset_residual: self.reset_residual,
            min_intervals: self.min_intervals,
        };
        c.validate().map_err(|e| HarnessError::Config(format!("fdi: {e}")))?;
        Ok(c)
    }
}

/// What the simulated vehicle tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSource {
    /// Analytic Viviani curve.
    #[default]
    Curve,
    /// Plan from the planner block at the mission duration.
    Plan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    /// Control period, s.
    pub dt: f64,
    pub substeps: usize,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Standard deviation of gyro noise fed to fault isolation, rad/s.
    #[serde(default)]
    pub gyro_noise_std: f64,
    #[serde(default)]
    pub reference: ReferenceSource,
    /// Log every n-th control period.
    pub log_every: usize,
}

impl Default for SimBlock {
    fn default() -> Self {
        SimBlock {
            dt: 0.002,
            substeps: 2,
            duration: 20.0,
            seed: 0,
            gyro_noise_std: 0.0,
            reference: ReferenceSource::Curve,
            log_every: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub vehicle: VehicleBlock,
    #[serde(default)]
    pub gains: GainsBlock,
    #[serde(default)]
    pub mission: MissionBlock,
    #[serde(default)]
    pub planner: PlannerBlock,
    #[serde(default)]
    pub faults: Vec<FaultEvent>,
    #[serde(default)]
    pub fdi: FdiBlock,
    #[serde(default)]
    pub sim: SimBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

impl ScenarioConfig {
    /// Healthy octocopter tracking the default Viviani curve.
    pub fn octo_viviani(name: &str) -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            vehicle: VehicleBlock::stock(Frame::Octo, "PNPNPNPN"),
            gains: GainsBlock::default(),
            mission: MissionBlock::default(),
            planner: PlannerBlock::default(),
            faults: Vec::new(),
            fdi: FdiBlock::default(),
            sim: SimBlock::default(),
            output: OutputBlock::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<VehicleParams, HarnessError> {
        self.vehicle.params()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let p = self.params()?;
        self.gains.gains()?;
        self.fdi.config()?;
        let s = &self.sim;
        if !(s.dt > 0.0 && s.dt.is_finite()) || s.substeps == 0 || s.log_every == 0 {
            return Err(HarnessError::Config("sim: dt, substeps and log_every must be positive".into()));
        }
        if !(s.duration > 0.0 && s.duration.is_finite()) {
            return Err(HarnessError::Config("sim: duration must be positive".into()));
        }
        if !(s.gyro_noise_std >= 0.0 && s.gyro_noise_std.is_finite()) {
            return Err(HarnessError::Config("sim: gyro_noise_std must be >= 0".into()));
        }
        let n = p.rotor_count();
        let mut last = f64::NEG_INFINITY;
        for f in &self.faults {
            if f.motor == 0 || f.motor > n {
                return Err(HarnessError::Config(format!("fault motor {} outside 1..={n}", f.motor)));
            }
            if !(0.0..=s.duration).contains(&f.onset) {
                return Err(HarnessError::Config(format!("fault onset {} outside [0, duration]", f.onset)));
            }
            if !(0.0..1.0).contains(&f.residual) {
                return Err(HarnessError::Config(format!("fault residual {} outside [0, 1)", f.residual)));
            }
            if f.onset < last {
                return Err(HarnessError::Config("fault schedule must be sorted by onset".into()));
            }
            last = f.onset;
        }
        self.planner.fault_cases(n)?;
        if matches!(self.planner.mode, Mode::Rcp | Mode::Rsp) && self.planner.faults.is_empty() {
            return Err(HarnessError::Config("planner: rcp and rsp need at least one fault set".into()));
        }
        if let PathBlock::Viviani { period, .. } = &self.mission.path {
            if !(*period > 0.0) {
                return Err(HarnessError::Config("viviani period must be positive".into()));
            }
        }
        let g = &self.mission.grid;
        if !(g.step > 0.0 && g.min > 0.0 && g.max >= g.min) {
            return Err(HarnessError::Config("mission grid must satisfy 0 < min <= max and step > 0".into()));
        }
        self.mission.mission(&p)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let c = ScenarioConfig::octo_viviani("rt");
        c.validate().unwrap();
        let back = ScenarioConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn minimal_document_uses_defaults() {
        let text = r#"{"schema_version":1,"name":"m","vehicle":{"frame":"quad","pattern":"PNPN"}}"#;
        let c = ScenarioConfig::from_json(text).unwrap();
        assert_eq!(c.sim, SimBlock::default());
        assert_eq!(c.params().unwrap().rotor_count(), 4);
    }

    #[test]
    fn rejects_bad_documents() {
        let base = ScenarioConfig::octo_viviani("bad");
        let mut c = base.clone();
        c.schema_version = 7;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.faults = vec![FaultEvent { motor: 9, onset: 1.0, residual: 0.0 }];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.faults = vec![FaultEvent { motor: 3, onset: 1.0, residual: 1.0 }];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.faults = vec![
            FaultEvent { motor: 3, onset: 5.0, residual: 0.0 },
            FaultEvent { motor: 1, onset: 2.0, residual: 0.0 },
        ];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.vehicle.pattern = "PNPN".into();
        assert!(c.validate().is_err());
        let mut c = base;
        c.planner.mode = Mode::Rcp;
        assert!(c.validate().is_err());
        assert!(ScenarioConfig::from_json(r#"{"schema_version":1,"name":"x","vehicle":{"frame":"octo","pattern":"PNPNPNPN"},"typo":1}"#).is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut v = VehicleBlock::stock(Frame::Hexa, "PPNNPN");
        v.omega_max = Some(874.0);
        v.mass = Some(2.0);
        let p = v.params().unwrap();
        assert_eq!(p.omega_max, 874.0);
        assert_eq!(p.mass, 2.0);
        assert_eq!(p.pattern.to_string(), "PPNNPN");
    }
}
