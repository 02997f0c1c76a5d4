//! Physical parameters of the three-bus model and scenario-file ingestion.
//!
//! Scenario files are flat JSON objects with snake_case keys. The only
//! angle-valued entry, `delta_max`, is written in degrees (either a bare
//! number or a string such as `"30 degrees"`); inside the library every
//! angle is in radians. This module is the only place that converts.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// The bundled reference scenario document.
pub const TABLE1_JSON: &str = include_str!("../scenarios/table1.json");

const KEYS: [&str; 15] = [
    "inertia",
    "damping",
    "internal_voltage",
    "transient_reactance",
    "mechanical_power",
    "line_reactance_pre",
    "line_reactance_fault",
    "line_reactance_post",
    "load_active",
    "load_reactive",
    "delta_max",
    "omega_max",
    "v_min",
    "v_max",
    "synchronous_speed",
];

/// Validated, immutable scenario parameters. All quantities are per-unit
/// except `inertia` (s), `delta_max` (rad), `omega_max` and
/// `synchronous_speed` (rad/s).
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioParameters {
    pub inertia: f64,
    pub damping: f64,
    pub internal_voltage: f64,
    pub transient_reactance: f64,
    pub mechanical_power: f64,
    pub line_reactance_pre: f64,
    pub line_reactance_fault: f64,
    pub line_reactance_post: f64,
    pub load_active: f64,
    pub load_reactive: f64,
    pub delta_max: f64,
    pub omega_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub synchronous_speed: f64,
}

/// On-disk representation; `delta_max` in degrees.
#[derive(Serialize)]
struct ScenarioDocument {
    inertia: f64,
    damping: f64,
    internal_voltage: f64,
    transient_reactance: f64,
    mechanical_power: f64,
    line_reactance_pre: f64,
    line_reactance_fault: f64,
    line_reactance_post: f64,
    load_active: f64,
    load_reactive: f64,
    delta_max: f64,
    omega_max: f64,
    v_min: f64,
    v_max: f64,
    synchronous_speed: f64,
}

impl ScenarioParameters {
    /// The bundled reference scenario.
    pub fn table1() -> Self {
        Self::from_json_str(TABLE1_JSON).expect("bundled scenario is valid")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(Error::Parse("top-level value must be an object".into()));
        };
        if let Some(unknown) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown key `{unknown}`")));
        }

        let params = Self {
            inertia: number(&map, "inertia")?,
            damping: number(&map, "damping")?,
            internal_voltage: number(&map, "internal_voltage")?,
            transient_reactance: number(&map, "transient_reactance")?,
            mechanical_power: number(&map, "mechanical_power")?,
            line_reactance_pre: number(&map, "line_reactance_pre")?,
            line_reactance_fault: number(&map, "line_reactance_fault")?,
            line_reactance_post: number(&map, "line_reactance_post")?,
            load_active: number(&map, "load_active")?,
            load_reactive: number(&map, "load_reactive")?,
            delta_max: angle_radians(&map, "delta_max")?,
            omega_max: number(&map, "omega_max")?,
            v_min: number(&map, "v_min")?,
            v_max: number(&map, "v_max")?,
            synchronous_speed: number(&map, "synchronous_speed")?,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let fields: [(&'static str, f64); 15] = [
            ("inertia", self.inertia),
            ("damping", self.damping),
            ("internal_voltage", self.internal_voltage),
            ("transient_reactance", self.transient_reactance),
            ("mechanical_power", self.mechanical_power),
            ("line_reactance_pre", self.line_reactance_pre),
            ("line_reactance_fault", self.line_reactance_fault),
            ("line_reactance_post", self.line_reactance_post),
            ("load_active", self.load_active),
            ("load_reactive", self.load_reactive),
            ("delta_max", self.delta_max),
            ("omega_max", self.omega_max),
            ("v_min", self.v_min),
            ("v_max", self.v_max),
            ("synchronous_speed", self.synchronous_speed),
        ];
        for (field, value) in fields {
            if !value.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        let positive = [
            ("inertia", self.inertia),
            ("internal_voltage", self.internal_voltage),
            ("transient_reactance", self.transient_reactance),
            ("line_reactance_pre", self.line_reactance_pre),
            ("line_reactance_fault", self.line_reactance_fault),
            ("line_reactance_post", self.line_reactance_post),
            ("delta_max", self.delta_max),
            ("omega_max", self.omega_max),
        ];
        for (field, value) in positive {
            if value <= 0.0 {
                return Err(invalid(field, "must be strictly positive"));
            }
        }
        if self.damping < 0.0 {
            return Err(invalid("damping", "must be non-negative"));
        }
        if self.v_min >= self.v_max {
            return Err(invalid("v_min", "must be below v_max"));
        }
        Ok(())
    }

    /// Serializes back to the file representation (degrees for `delta_max`).
    pub fn to_json_value(&self) -> Value {
        let doc = ScenarioDocument {
            inertia: self.inertia,
            damping: self.damping,
            internal_voltage: self.internal_voltage,
            transient_reactance: self.transient_reactance,
            mechanical_power: self.mechanical_power,
            line_reactance_pre: self.line_reactance_pre,
            line_reactance_fault: self.line_reactance_fault,
            line_reactance_post: self.line_reactance_post,
            load_active: self.load_active,
            load_reactive: self.load_reactive,
            delta_max: self.delta_max.to_degrees(),
            omega_max: self.omega_max,
            v_min: self.v_min,
            v_max: self.v_max,
            synchronous_speed: self.synchronous_speed,
        };
        serde_json::to_value(doc).expect("plain numeric document")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("plain numeric document")
    }

    /// Converts a speed deviation in rad/s to Hz.
    pub fn omega_to_hz(&self, omega: f64) -> f64 {
        omega / std::f64::consts::TAU
    }

    /// Synchronous frequency in Hz.
    pub fn nominal_frequency_hz(&self) -> f64 {
        self.synchronous_speed / std::f64::consts::TAU
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioParameters> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioParameters::from_json_str(&text)
}

/// Rotor state: angle (rad), speed deviation from synchronous (rad/s) and time (s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwingState {
    pub delta: f64,
    pub omega: f64,
    pub time: f64,
}

impl SwingState {
    pub fn new(delta: f64, omega: f64, time: f64) -> Self {
        Self { delta, omega, time }
    }

    pub fn is_finite(&self) -> bool {
        self.delta.is_finite() && self.omega.is_finite() && self.time.is_finite()
    }
}

fn invalid(field: &'static str, reason: &str) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.to_string(),
    }
}

fn field_name(key: &str) -> &'static str {
    KEYS.iter().find(|k| **k == key).copied().unwrap_or("?")
}

fn number(map: &Map<String, Value>, key: &str) -> Result<f64> {
    match map.get(key) {
        None => Err(Error::MissingKey(key.to_string())),
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| invalid(field_name(key), "not representable as f64")),
        Some(_) => Err(invalid(field_name(key), "expected a number")),
    }
}

/// Reads an angle in degrees, either as a number or as a string with an
/// optional unit suffix (`deg`, `degree(s)`, `°`, or `rad`).
fn angle_radians(map: &Map<String, Value>, key: &str) -> Result<f64> {
    match map.get(key) {
        None => Err(Error::MissingKey(key.to_string())),
        Some(Value::Number(n)) => n
            .as_f64()
            .map(f64::to_radians)
            .ok_or_else(|| invalid(field_name(key), "not representable as f64")),
        Some(Value::String(s)) => {
            parse_angle(s).ok_or_else(|| invalid(field_name(key), &format!("cannot parse angle {s:?}")))
        }
        Some(_) => Err(invalid(field_name(key), "expected a number of degrees")),
    }
}

fn parse_angle(text: &str) -> Option<f64> {
    let text = text.trim();
    let split = text
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num.trim().parse().ok()?;
    match unit.trim() {
        "" | "deg" | "degree" | "degrees" | "°" => Some(value.to_radians()),
        "rad" | "radian" | "radians" => Some(value),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_entry(key: &str, value: Value) -> String {
        let mut doc: Map<String, Value> = serde_json::from_str(TABLE1_JSON).unwrap();
        doc.insert(key.to_string(), value);
        serde_json::to_string(&doc).unwrap()
    }

    #[test]
    fn table1_values() {
        let p = ScenarioParameters::table1();
        assert_eq!(p.inertia, 0.0146);
        assert_eq!(p.damping, 0.05);
        assert_eq!(p.internal_voltage, 1.05);
        assert_eq!(p.transient_reactance, 0.3);
        assert_eq!(p.mechanical_power, 0.8);
        assert_eq!(p.line_reactance_pre, 0.4);
        assert_eq!(p.line_reactance_fault, 5.0);
        assert_eq!(p.line_reactance_post, 0.5);
        assert_eq!(p.load_active, 0.5);
        assert_eq!(p.load_reactive, 0.2);
        assert!((p.delta_max - std::f64::consts::FRAC_PI_6).abs() < 1e-15);
        assert_eq!(p.omega_max, 2.0);
        assert_eq!((p.v_min, p.v_max), (0.9, 1.1));
        assert!((p.nominal_frequency_hz() - 60.0).abs() < 1e-12);
    }

    #[test]
    fn zero_post_reactance_is_rejected_by_name() {
        let err = ScenarioParameters::from_json_str(&with_entry("line_reactance_post", 0.0.into())).unwrap_err();
        match err {
            Error::InvalidParameter { field, .. } => assert_eq!(field, "line_reactance_post"),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(err_text(&with_entry("line_reactance_post", 0.0.into())).contains("line_reactance_post"));
    }

    fn err_text(doc: &str) -> String {
        ScenarioParameters::from_json_str(doc).unwrap_err().to_string()
    }

    #[test]
    fn angle_strings_are_degrees() {
        let p = ScenarioParameters::from_json_str(&with_entry("delta_max", "30 degrees".into())).unwrap();
        assert!((p.delta_max - std::f64::consts::FRAC_PI_6).abs() < 1e-12);
        let p = ScenarioParameters::from_json_str(&with_entry("delta_max", "0.5 rad".into())).unwrap();
        assert_eq!(p.delta_max, 0.5);
        assert!(ScenarioParameters::from_json_str(&with_entry("delta_max", "thirty".into())).is_err());
    }

    #[test]
    fn missing_and_unknown_keys() {
        let mut doc: Map<String, Value> = serde_json::from_str(TABLE1_JSON).unwrap();
        doc.remove("damping");
        let err = ScenarioParameters::from_json_str(&serde_json::to_string(&doc).unwrap()).unwrap_err();
        assert!(matches!(err, Error::MissingKey(ref k) if k == "damping"));

        let err = ScenarioParameters::from_json_str(&with_entry("dampng", 0.1.into())).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(matches!(
            ScenarioParameters::from_json_str("{ nope"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            ScenarioParameters::from_json_str("[1, 2]"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn constraint_violations() {
        assert!(ScenarioParameters::from_json_str(&with_entry("damping", (-0.1).into())).is_err());
        assert!(ScenarioParameters::from_json_str(&with_entry("v_min", 1.2.into())).is_err());
        assert!(ScenarioParameters::from_json_str(&with_entry("inertia", 0.0.into())).is_err());
        assert!(ScenarioParameters::from_json_str(&with_entry("damping", 0.0.into())).is_ok());
    }

    #[test]
    fn load_from_missing_file() {
        let err = load_scenario("/definitely/not/here.json").unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here.json"));
    }
}
