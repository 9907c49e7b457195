//! Scenario files: TOML schema, bundled presets and `key=value` overrides.
//!
//! Every field has a default, so a scenario file only needs the values it
//! changes. Overrides are applied to the fully materialized document, which
//! lets them address any key and rejects keys that do not exist.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy_tank::TankConfig;
use crate::environment::{validate_schedule, CartParams, ContactModel, Pulse};
use crate::error::{Error, Result};
use crate::geometry::{Mat6, Rotation, Vec3, Vec6};
use crate::interaction_controller::{ErrorSign, ImpedanceGains, Reference, WrenchTracker};
use crate::power_valves::{Policy, PolicyConfig, SLOTS};
use crate::rigid_body::{InertiaParams, RigidBodyState, Wrench};

/// Names and sources of the bundled scenarios.
pub const PRESETS: [(&str, &str); 4] = [
    ("igs_push", include_str!("../presets/igs_push.toml")),
    ("wgs_push", include_str!("../presets/wgs_push.toml")),
    ("sga_push", include_str!("../presets/sga_push.toml")),
    (
        "obstacle_compare",
        include_str!("../presets/obstacle_compare.toml"),
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub name: String,
    pub sim: SimSection,
    pub vehicle: VehicleSection,
    pub reference: ReferenceSection,
    pub impedance: ImpedanceSection,
    pub tracking: TrackingSection,
    pub observer: ObserverSection,
    pub tank: TankSection,
    pub valves: ValveSection,
    pub environment: EnvironmentSection,
    pub disturbances: Vec<Pulse>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            sim: SimSection::default(),
            vehicle: VehicleSection::default(),
            reference: ReferenceSection::default(),
            impedance: ImpedanceSection::default(),
            tracking: TrackingSection::default(),
            observer: ObserverSection::default(),
            tank: TankSection::default(),
            valves: ValveSection::default(),
            environment: EnvironmentSection::default(),
            disturbances: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    /// Integration and control step (s).
    pub dt: f64,
    pub duration: f64,
    /// Recorded with the run; the simulation itself draws no random numbers.
    pub seed: u64,
    pub policy: Policy,
    /// Per-step bound on the storage residual (W).
    pub audit_tolerance: f64,
    /// Divergence thresholds on `‖v‖` (m/s) and `‖ω‖` (rad/s).
    pub max_speed: f64,
    pub max_rate: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 10.0,
            seed: 0,
            policy: Policy::Igs,
            audit_tolerance: 0.05,
            max_speed: 5.0,
            max_rate: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleSection {
    pub mass: f64,
    /// Principal moments of inertia (kg·m²).
    pub inertia: [f64; 3],
    pub position: [f64; 3],
    pub rotation_vector: [f64; 3],
    /// Initial body twist `[ω; v]`.
    pub twist: [f64; 6],
}

impl Default for VehicleSection {
    fn default() -> Self {
        Self {
            mass: 4.0,
            inertia: [0.08, 0.08, 0.14],
            position: [0.0, 0.0, 1.0],
            rotation_vector: [0.0; 3],
            twist: [0.0; 6],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceSection {
    pub position: [f64; 3],
    pub rotation_vector: [f64; 3],
    /// Force the end-effector should exert along body x (N).
    pub push_force: f64,
    /// Activation time of wrench tracking (s).
    pub tracking_start: f64,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        Self {
            position: [0.0, 0.0, 1.0],
            rotation_vector: [0.0; 3],
            push_force: 16.0,
            tracking_start: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImpedanceSection {
    /// `M_d = diag(ratio)·M`, per axis.
    pub inertia_ratio: [f64; 6],
    pub stiffness: [f64; 6],
    pub damping: [f64; 6],
}

impl Default for ImpedanceSection {
    fn default() -> Self {
        Self {
            inertia_ratio: [1.0; 6],
            stiffness: [25.0, 25.0, 25.0, 180.0, 180.0, 180.0],
            damping: [8.0, 8.0, 8.0, 60.0, 60.0, 60.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackingSection {
    pub proportional: f64,
    pub integral: f64,
    /// Per-axis bound on the integral term (N).
    pub anti_windup: f64,
    pub error_sign: ErrorSign,
}

impl Default for TrackingSection {
    fn default() -> Self {
        Self {
            proportional: 0.5,
            integral: 1.5,
            anti_windup: 20.0,
            error_sign: ErrorSign::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObserverSection {
    /// Diagonal of `K_o` (1/s).
    pub gain: [f64; 6],
    /// Feed the controller the true external wrench of the previous step
    /// instead of the observer estimate.
    pub ground_truth: bool,
}

impl Default for ObserverSection {
    fn default() -> Self {
        Self {
            gain: [10.0; 6],
            ground_truth: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TankSection {
    pub initial_energy: f64,
    pub lower: f64,
    pub upper: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub smoothing: f64,
}

impl Default for TankSection {
    fn default() -> Self {
        let c = TankConfig::default();
        Self {
            initial_energy: c.initial_energy,
            lower: c.lower,
            upper: c.upper,
            eta1: c.eta1,
            eta2: c.eta2,
            smoothing: c.smoothing,
        }
    }
}

impl From<&TankSection> for TankConfig {
    fn from(t: &TankSection) -> Self {
        TankConfig {
            initial_energy: t.initial_energy,
            lower: t.lower,
            upper: t.upper,
            eta1: t.eta1,
            eta2: t.eta2,
            smoothing: t.smoothing,
        }
    }
}

/// Valve tuning; slot arrays are ordered γ₁ … γ₅.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValveSection {
    pub cutoff_hz: f64,
    pub igs_limits: [f64; SLOTS],
    pub wgs_total: f64,
    pub wgs_weights: [f64; SLOTS],
    pub sga_total: f64,
    /// Gain numbers 1–5, highest priority first.
    pub sga_priority: [usize; SLOTS],
}

impl Default for ValveSection {
    fn default() -> Self {
        let p = PolicyConfig::default();
        Self {
            cutoff_hz: p.cutoff_hz,
            igs_limits: p.igs_limits,
            wgs_total: p.wgs_total,
            wgs_weights: p.wgs_weights,
            sga_total: p.sga_total,
            sga_priority: p.sga_priority.map(|s| s + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentSection {
    /// Without the cart the vehicle flies in free space.
    pub enabled: bool,
    /// Initial x of the cart face (m).
    pub cart_position: f64,
    pub cart: CartParams,
    pub contact: ContactModel,
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        Self {
            enabled: true,
            cart_position: 0.4,
            cart: CartParams::default(),
            contact: ContactModel::default(),
        }
    }
}

fn diag6(v: &[f64; 6]) -> Mat6 {
    Mat6::from_diagonal(&Vec6::from(*v))
}

fn finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} must be finite")))
    }
}

impl Scenario {
    /// Parses a TOML document; `source_name` is used in diagnostics.
    pub fn from_toml(text: &str, source_name: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| parse_error(&e, text, source_name))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn preset(name: &str) -> Option<Self> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(n, text)| Self::from_toml(text, n).expect("bundled preset parses"))
    }

    /// Loads a bundled preset by name or a scenario file by path, then
    /// validates it.
    pub fn load(name_or_path: &str) -> Result<Self> {
        let scenario = match Self::preset(name_or_path) {
            Some(s) => s,
            None => {
                let path = Path::new(name_or_path);
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Self::from_toml(&text, &path.display().to_string())?
            }
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Applies `key=value` overrides; the value is read as a TOML value and
    /// falls back to a plain string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut doc = toml::Table::try_from(self).expect("scenario serializes to a table");
        for raw in overrides {
            let raw = raw.as_ref();
            let (key, value) = raw.split_once('=').ok_or_else(|| {
                Error::validation(format!("override `{raw}` is not of the form key=value"))
            })?;
            set_path(&mut doc, key.trim(), parse_value(value.trim()))?;
        }
        let text = toml::to_string(&doc).expect("table serializes");
        let out = Self::from_toml(&text, "overrides")?;
        out.validate()?;
        Ok(out)
    }

    /// Checks the invariants of every component.
    pub fn validate(&self) -> Result<()> {
        let s = &self.sim;
        if !(s.dt > 0.0 && s.dt <= 0.01) {
            return Err(Error::validation(format!(
                "sim.dt must lie in (0, 0.01] s, got {}",
                s.dt
            )));
        }
        if !(s.duration >= 0.0 && s.duration.is_finite()) {
            return Err(Error::validation(format!(
                "sim.duration must be non-negative, got {}",
                s.duration
            )));
        }
        if !(s.audit_tolerance > 0.0 && s.max_speed > 0.0 && s.max_rate > 0.0) {
            return Err(Error::validation(
                "audit tolerance and divergence thresholds must be positive",
            ));
        }
        self.inertia()?;
        self.impedance_gains()?;
        self.tracker()?;
        finite(
            "vehicle state",
            &[self.vehicle.position, self.vehicle.rotation_vector].concat(),
        )?;
        finite("vehicle twist", &self.vehicle.twist)?;
        finite(
            "reference pose",
            &[self.reference.position, self.reference.rotation_vector].concat(),
        )?;
        if !(self.reference.push_force >= 0.0 && self.reference.tracking_start >= 0.0) {
            return Err(Error::validation(
                "push force and tracking start must be non-negative",
            ));
        }
        if self
            .observer
            .gain
            .iter()
            .any(|&k| !(k > 0.0 && k.is_finite()))
        {
            return Err(Error::validation("observer gains must be positive"));
        }
        self.tank_config().validate()?;
        self.policy_config().validate()?;
        self.environment.cart.validate()?;
        self.environment.contact.validate()?;
        finite("cart position", &[self.environment.cart_position])?;
        validate_schedule(&self.disturbances)
    }

    pub fn inertia(&self) -> Result<InertiaParams> {
        InertiaParams::diagonal(self.vehicle.mass, Vec3::from(self.vehicle.inertia))
    }

    pub fn impedance_gains(&self) -> Result<ImpedanceGains> {
        let im = &self.impedance;
        if im
            .inertia_ratio
            .iter()
            .any(|&r| !(r > 0.0 && r.is_finite()))
        {
            return Err(Error::validation(
                "impedance inertia ratios must be positive",
            ));
        }
        let m = self.inertia()?.generalized();
        ImpedanceGains::new(
            diag6(&im.inertia_ratio) * m,
            diag6(&im.stiffness),
            diag6(&im.damping),
        )
    }

    pub fn tracker(&self) -> Result<WrenchTracker> {
        let t = &self.tracking;
        WrenchTracker::new(
            Vec6::repeat(t.proportional),
            Vec6::repeat(t.integral),
            t.anti_windup,
            t.error_sign,
        )
    }

    pub fn tank_config(&self) -> TankConfig {
        (&self.tank).into()
    }

    pub fn policy_config(&self) -> PolicyConfig {
        let v = &self.valves;
        PolicyConfig {
            policy: self.sim.policy,
            igs_limits: v.igs_limits,
            wgs_total: v.wgs_total,
            wgs_weights: v.wgs_weights,
            sga_total: v.sga_total,
            // out-of-range numbers become invalid slots and fail validation
            sga_priority: v.sga_priority.map(|n| n.wrapping_sub(1)),
            cutoff_hz: v.cutoff_hz,
        }
    }

    /// Pose set-point; the desired interaction wrench is the reaction on the
    /// vehicle, `−push_force` along body x.
    pub fn reference(&self) -> Reference {
        let r = &self.reference;
        Reference {
            rotation: Rotation::from_rotation_vector(&Vec3::from(r.rotation_vector)),
            position: Vec3::from(r.position),
            interaction_wrench: Wrench::from_parts(
                &Vec3::zeros(),
                &Vec3::new(-r.push_force, 0.0, 0.0),
            ),
        }
    }

    pub fn initial_state(&self) -> RigidBodyState {
        let v = &self.vehicle;
        RigidBodyState {
            rotation: Rotation::from_rotation_vector(&Vec3::from(v.rotation_vector)),
            position: Vec3::from(v.position),
            twist: Vec6::from(v.twist),
        }
    }

    pub fn steps(&self) -> usize {
        (self.sim.duration / self.sim.dt).round() as usize
    }
}

fn parse_error(e: &toml::de::Error, text: &str, source_name: &str) -> Error {
    let line = e
        .span()
        .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1);
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        message: e.message().to_string(),
    }
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(doc: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let unknown = || Error::validation(format!("unknown scenario key `{key}`"));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().ok_or_else(unknown)?;
    let mut table = doc;
    for part in parts {
        table = table
            .get_mut(part)
            .and_then(|v| v.as_table_mut())
            .ok_or_else(unknown)?;
    }
    let slot = table.get_mut(last).ok_or_else(unknown)?;
    if slot.is_table() {
        return Err(Error::validation(format!(
            "`{key}` is a section, not a value"
        )));
    }
    *slot = match (&*slot, value) {
        // integers are accepted where floats are expected
        (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (_, v) => v,
    };
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load_and_validate() {
        for (name, _) in PRESETS {
            let s = Scenario::load(name).unwrap();
            assert_eq!(s.name, name);
        }
    }

    #[test]
    fn igs_preset_tank_efficiency() {
        let s = Scenario::load("igs_push").unwrap();
        assert_eq!((s.tank.eta1, s.tank.eta2), (0.4, 0.4));
        assert_eq!(s.valves.igs_limits, [1.0, 1.0, 1.0, 30.0, 3.0]);
    }

    #[test]
    fn bad_tank_bounds_rejected() {
        let s = Scenario::load("igs_push").unwrap();
        let err = s.with_overrides(&["tank.lower=150.0"]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn override_changes_only_that_field() {
        let s = Scenario::load("igs_push").unwrap();
        let o = s.with_overrides(&["tank.eta1=0.9"]).unwrap();
        assert_eq!(o.tank.eta1, 0.9);
        let mut expected = s.clone();
        expected.tank.eta1 = 0.9;
        assert_eq!(o, expected);
    }

    #[test]
    fn override_forms() {
        let s = Scenario::default();
        let o = s
            .with_overrides(&[
                "sim.policy=sga",
                "sim.duration=3",
                "impedance.stiffness=[1,1,1,2,2,2]",
            ])
            .unwrap();
        assert_eq!(o.sim.policy, Policy::Sga);
        assert_eq!(o.sim.duration, 3.0);
        assert_eq!(o.impedance.stiffness, [1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn unknown_override_key_rejected() {
        let s = Scenario::default();
        assert!(s.with_overrides(&["tank.etaX=0.1"]).is_err());
        assert!(s.with_overrides(&["nosuch.key=1"]).is_err());
        assert!(s.with_overrides(&["tank=1"]).is_err());
        assert!(s.with_overrides(&["tank.eta1"]).is_err());
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "name = \"x\"\n[sim]\ndt = \"fast\"\n";
        match Scenario::from_toml(text, "bad.toml") {
            Err(Error::Parse {
                line, source_name, ..
            }) => {
                assert_eq!(line, Some(3));
                assert_eq!(source_name, "bad.toml");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_a_parse_error() {
        let err = Scenario::from_toml("[tank]\nsize = 3\n", "x").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn round_trip() {
        for (name, _) in PRESETS {
            let s = Scenario::load(name).unwrap();
            let back = Scenario::from_toml(&s.to_toml(), "round-trip").unwrap();
            assert_eq!(s, back);
        }
        let mut s = Scenario::default();
        s.disturbances.push(Pulse {
            start: 1.0,
            end: 2.0,
            wrench: [0.0, 0.0, 0.0, 0.0, 5.0, 0.0],
        });
        assert_eq!(Scenario::from_toml(&s.to_toml(), "rt").unwrap(), s);
    }

    #[test]
    fn sga_priority_must_be_permutation() {
        let s = Scenario::default();
        assert!(s
            .with_overrides(&["valves.sga_priority=[5,4,3,2,2]"])
            .is_err());
        assert!(s
            .with_overrides(&["valves.sga_priority=[6,4,3,2,1]"])
            .is_err());
        assert!(s
            .with_overrides(&["valves.sga_priority=[0,4,3,2,1]"])
            .is_err());
        assert!(s
            .with_overrides(&["valves.sga_priority=[1,2,3,4,5]"])
            .is_ok());
    }

    #[test]
    fn non_spd_gains_rejected() {
        let s = Scenario::default();
        assert!(s
            .with_overrides(&["impedance.damping=[8,8,8,60,-1,60]"])
            .is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = Scenario::load("/nonexistent/dir/scn.toml").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/scn.toml"));
    }
}
