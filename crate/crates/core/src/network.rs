//! Thevenin reduction of the three-bus network and the constant-PQ
//! load-bus algebra.
//!
//! Seen from the load bus, the generator (`e∠δ` behind `x'_d`) and the
//! infinite bus (`1∠0` behind the line reactance `x_l`) combine into one
//! source `ẽ_eq(δ)` behind `x_eq = x'_d x_l / (x'_d + x_l)`. With the load
//! drawing constant `(p, q)`, `u = v²` solves
//!
//! ```text
//! u² − (|ẽ_eq|² + 2 x_eq q) u + x_eq² (p² + q²) = 0
//! ```
//!
//! and the high root is the operating branch. The bus angle is
//! `φ = ∠ẽ_eq − ∠(v² + x_eq q + j x_eq p)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::ScenarioParameters;

/// Which line reactance sits between the load bus and the infinite bus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Pre,
    Fault,
    Post,
}

impl Topology {
    pub fn line_reactance(self, params: &ScenarioParameters) -> f64 {
        match self {
            Topology::Pre => params.line_reactance_pre,
            Topology::Fault => params.line_reactance_fault,
            Topology::Post => params.line_reactance_post,
        }
    }
}

/// Reduced two-bus equivalent seen from the load bus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheveninEquivalent {
    pub source_real: f64,
    pub source_imag: f64,
    pub x_eq: f64,
    pub source_angle: f64,
    pub source_mag_sq: f64,
}

impl TheveninEquivalent {
    pub fn source(&self) -> Complex64 {
        Complex64::new(self.source_real, self.source_imag)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BusVoltage {
    /// Magnitude, per-unit.
    pub v: f64,
    /// Angle relative to the infinite bus, radians.
    pub phi: f64,
}

/// Load-bus operating point. `voltage` is `None` exactly when the
/// discriminant is negative (no real solution for the requested load).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadBusSolution {
    pub discriminant: f64,
    pub voltage: Option<BusVoltage>,
}

impl LoadBusSolution {
    pub fn feasible(&self) -> bool {
        self.voltage.is_some()
    }

    pub fn v(&self) -> Option<f64> {
        self.voltage.map(|b| b.v)
    }

    pub fn phi(&self) -> Option<f64> {
        self.voltage.map(|b| b.phi)
    }
}

pub fn reduce_network(params: &ScenarioParameters, delta: f64, topology: Topology) -> TheveninEquivalent {
    let xd = params.transient_reactance;
    let xl = topology.line_reactance(params);
    let e = params.internal_voltage;
    let sum = xd + xl;
    let source = Complex64::new((xl * e * delta.cos() + xd) / sum, xl * e * delta.sin() / sum);
    TheveninEquivalent {
        source_real: source.re,
        source_imag: source.im,
        x_eq: xd * xl / sum,
        source_angle: source.arg(),
        source_mag_sq: source.norm_sqr(),
    }
}

pub fn solve_load_bus(thev: &TheveninEquivalent, p_dc: f64, q_dc: f64) -> LoadBusSolution {
    let x = thev.x_eq;
    let b = thev.source_mag_sq + 2.0 * x * q_dc;
    let discriminant = b * b - 4.0 * x * x * (p_dc * p_dc + q_dc * q_dc);
    if discriminant < 0.0 {
        return LoadBusSolution {
            discriminant,
            voltage: None,
        };
    }
    let u = 0.5 * (b + discriminant.sqrt());
    let v = u.sqrt();
    let phi = thev.source_angle - Complex64::new(u + x * q_dc, x * p_dc).arg();
    LoadBusSolution {
        discriminant,
        voltage: Some(BusVoltage { v, phi }),
    }
}

/// Load-bus voltage with the faulted line in service.
pub fn fault_state_voltage(params: &ScenarioParameters, delta: f64) -> LoadBusSolution {
    let thev = reduce_network(params, delta, Topology::Fault);
    solve_load_bus(&thev, params.load_active, params.load_reactive)
}

/// Load-bus voltage after reconnection (post-fault line, full load).
pub fn post_load_bus(params: &ScenarioParameters, delta: f64) -> LoadBusSolution {
    let thev = reduce_network(params, delta, Topology::Post);
    solve_load_bus(&thev, params.load_active, params.load_reactive)
}

/// Generator electrical power with the load connected on the post-fault
/// network, `e v / x'_d · sin(δ − φ)`.
pub fn electrical_power_post(params: &ScenarioParameters, delta: f64) -> Result<f64> {
    let sol = post_load_bus(params, delta);
    match sol.voltage {
        Some(BusVoltage { v, phi }) => {
            Ok(params.internal_voltage * v / params.transient_reactance * (delta - phi).sin())
        }
        None => Err(Error::LoadBusInfeasible {
            delta,
            discriminant: sol.discriminant,
        }),
    }
}

/// Peak power transferable over the post-fault path with the load
/// disconnected, `e / (x'_d + x_l_post)`.
pub fn no_load_transfer_limit(params: &ScenarioParameters) -> f64 {
    params.internal_voltage / (params.transient_reactance + params.line_reactance_post)
}

/// Generator electrical power with the load disconnected.
pub fn electrical_power_no_load(params: &ScenarioParameters, delta: f64) -> f64 {
    no_load_transfer_limit(params) * delta.sin()
}
