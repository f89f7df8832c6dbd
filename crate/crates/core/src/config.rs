//! JSON run configuration.
//!
//! Every block is optional and falls back to the defaults below, which
//! describe a 0.34 m rectangular wing with 0.15 m chord flapping at 2 Hz in
//! 1 m/s forward flight. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aero::{DownwashMode, WagnerParams};
use crate::gait_opt::{DesignField, DesignParameter, DesignVector};
use crate::morphology::{BodyMode, GaitParams, WingGeometry};
use crate::wake::{AdvectMode, FieldGrid, DEFAULT_THRESHOLDS};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlightConfig {
    /// Prescribed forward speed along `+x` (m/s).
    pub forward_speed: f64,
    pub air_density: f64,
    pub body_mode: BodyMode,
    /// Used in point-mass mode (kg).
    pub body_mass: f64,
    /// Air velocity in the world frame (m/s).
    pub wind: [f64; 3],
}

impl Default for FlightConfig {
    fn default() -> Self {
        Self {
            forward_speed: 1.0,
            air_density: 1.225,
            body_mode: BodyMode::Prescribed,
            body_mass: 0.05,
            wind: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub dt_per_cycle: usize,
    pub n_cycles: usize,
    pub n_warmup: usize,
    pub n_keep_cycles: usize,
    /// Vortex core radius (m); 5% of the mean chord when omitted.
    pub core_radius: Option<f64>,
    pub downwash_mode: DownwashMode,
    pub wake_mode: AdvectMode,
    pub wagner: WagnerParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_per_cycle: 200,
            n_cycles: 2,
            n_warmup: 1,
            n_keep_cycles: 3,
            core_radius: None,
            downwash_mode: DownwashMode::Prandtl,
            wake_mode: AdvectMode::Free,
            wagner: WagnerParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub dims: [usize; 3],
    pub thresholds: [f64; 4],
    /// Streamwise stations of the sectional slices (m).
    pub slice_x: Vec<f64>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            lower: [-0.1, -0.3, -0.3],
            upper: [0.9, 0.3, 0.3],
            dims: [60, 40, 40],
            thresholds: DEFAULT_THRESHOLDS,
            slice_x: vec![0.2, 0.45, 0.7],
        }
    }
}

impl FieldConfig {
    pub fn grid(&self) -> Result<FieldGrid> {
        let mut g = FieldGrid::spanning(Vec3::from(self.lower), Vec3::from(self.upper), self.dims)?;
        g.thresholds = self.thresholds;
        Ok(g)
    }
}

/// Box bounds for one design field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSpec {
    pub field: DesignField,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    pub bounds: Vec<BoundSpec>,
    pub budget: usize,
    /// Initial simplex edge in normalized (unit-box) coordinates.
    pub initial_step: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            bounds: vec![
                BoundSpec {
                    field: DesignField::ChordProximal,
                    lower: 0.08,
                    upper: 0.25,
                },
                BoundSpec {
                    field: DesignField::SweepDistal,
                    lower: -0.2,
                    upper: 0.8,
                },
            ],
            budget: 200,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub wing: WingGeometry,
    pub gait: GaitParams,
    pub flight: FlightConfig,
    pub solver: SolverConfig,
    pub field: FieldConfig,
    pub optimize: OptimizeConfig,
    pub seeds: Vec<u64>,
    pub output_dir: String,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            wing: WingGeometry::default(),
            gait: GaitParams::default(),
            flight: FlightConfig::default(),
            solver: SolverConfig::default(),
            field: FieldConfig::default(),
            optimize: OptimizeConfig::default(),
            seeds: vec![0],
            output_dir: "out".into(),
        }
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive, got {value}")))
    }
}

impl SimConfig {
    /// Fill derived defaults in place.
    pub fn resolve(&mut self) {
        if self.solver.core_radius.is_none() {
            self.solver.core_radius = Some(0.05 * self.wing.mean_chord());
        }
    }

    pub fn core_radius(&self) -> f64 {
        self.solver
            .core_radius
            .unwrap_or_else(|| 0.05 * self.wing.mean_chord())
    }

    pub fn time_step(&self) -> f64 {
        self.gait.period() / self.solver.dt_per_cycle as f64
    }

    pub fn wind(&self) -> Vec3 {
        Vec3::from(self.flight.wind)
    }

    pub fn validate(&self) -> Result<()> {
        self.wing.validate()?;
        self.gait.validate()?;
        positive("forward_speed", self.flight.forward_speed)?;
        positive("air_density", self.flight.air_density)?;
        positive("body_mass", self.flight.body_mass)?;
        if !self.flight.wind.iter().all(|w| w.is_finite()) {
            return Err(Error::config("wind", "must be finite"));
        }
        let s = &self.solver;
        if s.dt_per_cycle < 50 {
            return Err(Error::config("dt_per_cycle", "must be at least 50"));
        }
        if s.n_cycles <= s.n_warmup {
            return Err(Error::config("n_cycles", "must exceed n_warmup"));
        }
        if s.n_keep_cycles == 0 {
            return Err(Error::config("n_keep_cycles", "must be at least 1"));
        }
        if let Some(r) = s.core_radius {
            positive("core_radius", r)?;
        }
        let w = &s.wagner;
        if !(w.eps[0] > 0.0 && w.eps[0] < w.eps[1]) {
            return Err(Error::config("wagner", "requires 0 < eps_1 < eps_2"));
        }
        if !(w.psi.iter().all(|p| *p >= 0.0) && w.phi0() > 0.0) {
            return Err(Error::config("wagner", "requires psi_k >= 0 and psi_1 + psi_2 < 1"));
        }
        let f = &self.field;
        for k in 0..3 {
            if f.dims[k] < 3 {
                return Err(Error::config("dims", "need at least 3 points per axis"));
            }
            if !(f.upper[k] > f.lower[k]) {
                return Err(Error::config("upper", "must exceed lower on every axis"));
            }
        }
        for b in &self.optimize.bounds {
            if !(b.lower.is_finite() && b.upper.is_finite() && b.upper > b.lower) {
                return Err(Error::config("bounds", format!("empty interval for {:?}", b.field)));
            }
        }
        if self.optimize.bounds.is_empty() {
            return Err(Error::config("bounds", "at least one design field is required"));
        }
        positive("initial_step", self.optimize.initial_step)?;
        Ok(())
    }

    /// Design vector at the configured values with the configured bounds.
    pub fn design_vector(&self) -> DesignVector {
        DesignVector {
            params: self
                .optimize
                .bounds
                .iter()
                .map(|b| DesignParameter {
                    field: b.field,
                    value: b.field.get(self),
                    lower: b.lower,
                    upper: b.upper,
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: SimConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SimConfig::from_json(&text, path)
}

pub fn save_config(config: &SimConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, config.to_json()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SimConfig> {
        SimConfig::from_json(text, Path::new("inline.json"))
    }

    #[test]
    fn empty_document_gets_defaults() {
        let cfg = parse("{}").unwrap();
        assert_eq!(cfg.solver.dt_per_cycle, 200);
        assert_eq!(cfg.solver.n_keep_cycles, 3);
        assert_eq!(cfg.flight.forward_speed, 1.0);
        assert_eq!(cfg.gait.frequency, 2.0);
        assert!((cfg.solver.core_radius.unwrap() - 0.0075).abs() < 1e-15);
        let cfg = parse(r#"{"solver": {}}"#).unwrap();
        assert_eq!(cfg.solver.dt_per_cycle, 200);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(r#"{"wing": {"chord_proximl": 0.1}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("chord_proximl"), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn negative_chord_names_the_field() {
        match parse(r#"{"wing": {"chord_proximal": -0.15}}"#) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "chord_proximal"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn solver_invariants() {
        assert!(parse(r#"{"solver": {"dt_per_cycle": 20}}"#).is_err());
        assert!(parse(r#"{"solver": {"n_cycles": 1, "n_warmup": 1}}"#).is_err());
        assert!(parse(r#"{"flight": {"forward_speed": 0.0}}"#).is_err());
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let cfg = parse(r#"{"gait": {"mode": "three_axes", "flap_amplitude": 0.7}}"#).unwrap();
        let once = cfg.to_json();
        let again = parse(&once).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_json(), once);
    }

    #[test]
    fn design_vector_reads_configured_values() {
        let cfg = SimConfig::default();
        let x = cfg.design_vector();
        assert_eq!(x.params.len(), 2);
        assert_eq!(x.params[0].value, 0.15);
        assert_eq!(x.params[1].value, 0.0);
    }
}
