//! Swing dynamics for the two hybrid modes and a fixed-step RK4 integrator.
//!
//! Waiting mode (load disconnected, post-fault line):
//! `M ω̇ = p_g − e/(x'_d + x_l_post) · sin δ − D ω`.
//!
//! Reconnected mode: `M ω̇ = p_g − e v(δ)/x'_d · sin(δ − φ(δ)) − D ω`, with
//! `(v, φ)` re-solved from the load-bus algebra at every RK4 stage.

use serde::Serialize;

use crate::equilibria::load_connected_equilibrium;
use crate::error::{Error, Result};
use crate::network::{electrical_power_no_load, electrical_power_post, post_load_bus, BusVoltage};
use crate::numeric::rk4_step;
use crate::scenario::{ScenarioParameters, SwingState};

pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Waiting,
    Reconnected,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Waiting => "waiting",
            Mode::Reconnected => "reconnected",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derivative {
    pub d_delta: f64,
    pub d_omega: f64,
}

pub fn rhs_waiting(params: &ScenarioParameters, state: &SwingState) -> Derivative {
    let accel = params.mechanical_power - electrical_power_no_load(params, state.delta) - params.damping * state.omega;
    Derivative {
        d_delta: state.omega,
        d_omega: accel / params.inertia,
    }
}

pub fn rhs_reconnected(params: &ScenarioParameters, state: &SwingState) -> Result<Derivative> {
    let pe = electrical_power_post(params, state.delta)?;
    let accel = params.mechanical_power - pe - params.damping * state.omega;
    Ok(Derivative {
        d_delta: state.omega,
        d_omega: accel / params.inertia,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    AngleHigh,
    AngleLow,
    OmegaHigh,
    OmegaLow,
    VoltageHigh,
    VoltageLow,
}

/// Onset of a limit excursion: the first sample outside `kind`'s bound
/// after a sample inside it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub time: f64,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub mode: Mode,
    pub dt: f64,
    pub samples: Vec<SwingState>,
    /// Load-bus voltage per sample; empty in waiting mode.
    pub bus: Vec<BusVoltage>,
    pub violations: Vec<Violation>,
}

impl Trajectory {
    pub fn first(&self) -> &SwingState {
        &self.samples[0]
    }

    pub fn last(&self) -> &SwingState {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn min_omega(&self) -> f64 {
        self.samples.iter().map(|s| s.omega).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_omega(&self) -> f64 {
        self.samples.iter().map(|s| s.omega.abs()).fold(0.0, f64::max)
    }

    pub fn max_angle_deviation(&self, reference: f64) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.delta - reference).abs())
            .fold(0.0, f64::max)
    }

    pub fn violated(&self) -> bool {
        !self.violations.is_empty()
    }

    /// Sample nearest to `time`, if it lies within the trajectory span.
    pub fn sample_at(&self, time: f64) -> Option<&SwingState> {
        let t0 = self.first().time;
        let k = ((time - t0) / self.dt).round();
        if k < 0.0 {
            return None;
        }
        self.samples.get(k as usize)
    }
}

/// Scenario plus the load-connected equilibrium that centres the
/// protection limits.
#[derive(Clone, Debug)]
pub struct SwingModel {
    pub params: ScenarioParameters,
    pub delta_eq_load: f64,
}

impl SwingModel {
    pub fn new(params: &ScenarioParameters) -> Result<Self> {
        let eq = load_connected_equilibrium(params)?;
        Ok(Self {
            params: params.clone(),
            delta_eq_load: eq.delta_eq_load,
        })
    }

    pub fn field(&self, mode: Mode, delta: f64, omega: f64) -> Result<[f64; 2]> {
        let state = SwingState::new(delta, omega, 0.0);
        let d = match mode {
            Mode::Waiting => rhs_waiting(&self.params, &state),
            Mode::Reconnected => rhs_reconnected(&self.params, &state)?,
        };
        Ok([d.d_delta, d.d_omega])
    }

    /// Protection-limit kinds violated at a sample. Voltage is checked only
    /// when a bus solution is supplied.
    pub fn limit_violations(&self, state: &SwingState, bus: Option<&BusVoltage>) -> Vec<ViolationKind> {
        let p = &self.params;
        let mut out = Vec::new();
        let dev = state.delta - self.delta_eq_load;
        if dev > p.delta_max {
            out.push(ViolationKind::AngleHigh);
        } else if dev < -p.delta_max {
            out.push(ViolationKind::AngleLow);
        }
        if state.omega > p.omega_max {
            out.push(ViolationKind::OmegaHigh);
        } else if state.omega < -p.omega_max {
            out.push(ViolationKind::OmegaLow);
        }
        if let Some(b) = bus {
            if b.v > p.v_max {
                out.push(ViolationKind::VoltageHigh);
            } else if b.v < p.v_min {
                out.push(ViolationKind::VoltageLow);
            }
        }
        out
    }

    pub fn integrate(&self, initial: SwingState, mode: Mode, dt: f64, t_end: f64) -> Result<Trajectory> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if !initial.is_finite() || initial.time < 0.0 {
            return Err(Error::InvalidArgument(format!("invalid initial state {initial:?}")));
        }
        if !(t_end >= initial.time) {
            return Err(Error::InvalidArgument(format!(
                "t_end = {t_end} precedes the initial time {}",
                initial.time
            )));
        }
        let steps = ((t_end - initial.time) / dt).round() as usize;
        let mut traj = Trajectory {
            mode,
            dt,
            samples: Vec::with_capacity(steps + 1),
            bus: Vec::new(),
            violations: Vec::new(),
        };
        let mut active: Vec<ViolationKind> = Vec::new();
        let mut x = [initial.delta, initial.omega];
        for k in 0..=steps {
            if k > 0 {
                x = rk4_step(x, dt, |s| self.field(mode, s[0], s[1]))?;
            }
            let state = SwingState::new(x[0], x[1], initial.time + k as f64 * dt);
            if !state.is_finite() {
                return Err(Error::NonFinite { time: state.time });
            }
            let bus = match mode {
                Mode::Waiting => None,
                Mode::Reconnected => {
                    let sol = post_load_bus(&self.params, state.delta);
                    Some(sol.voltage.ok_or(Error::LoadBusInfeasible {
                        delta: state.delta,
                        discriminant: sol.discriminant,
                    })?)
                }
            };
            let now = self.limit_violations(&state, bus.as_ref());
            for kind in &now {
                if !active.contains(kind) {
                    traj.violations.push(Violation {
                        time: state.time,
                        kind: *kind,
                    });
                }
            }
            active = now;
            if let Some(b) = bus {
                traj.bus.push(b);
            }
            traj.samples.push(state);
        }
        Ok(traj)
    }
}

pub fn integrate(
    params: &ScenarioParameters,
    initial: SwingState,
    mode: Mode,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory> {
    SwingModel::new(params)?.integrate(initial, mode, dt, t_end)
}
