//! Operating points: pre-fault steady state (fixed-point iteration on the
//! load-bus voltage), no-load equilibrium (closed form) and the
//! load-connected post-fault equilibrium (bracketed root find).

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{electrical_power_no_load, electrical_power_post, post_load_bus};
use crate::numeric::find_root;
use crate::scenario::ScenarioParameters;

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITER: usize = 1000;
const BRACKET_MARGIN: f64 = 0.02;
const BRACKET_SUBDIVISIONS: usize = 200;
const ROOT_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prefault {
    pub delta_ss: f64,
    pub phi_ss: f64,
    pub v_ss: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LoadConnected {
    pub delta_eq_load: f64,
    pub phi_eq: f64,
    pub v_eq: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquilibriumSet {
    pub prefault: Prefault,
    pub delta_eq_noload: f64,
    pub load_connected: LoadConnected,
}

impl EquilibriumSet {
    pub fn compute(params: &ScenarioParameters) -> Result<Self> {
        Ok(Self {
            prefault: solve_prefault(params)?,
            delta_eq_noload: no_load_equilibrium(params)?,
            load_connected: load_connected_equilibrium(params)?,
        })
    }
}

/// Pre-fault steady state. Iterates
///
/// ```text
/// v ← x_l/(x'_d+x_l) √(e² − p_g² x'_d² / v²)
///   + x'_d/(x'_d+x_l) √(1 − (p_g − p_DC)² x_l² / v²)
///   − x'_d x_l/(x'_d+x_l) · q_DC / v
/// ```
///
/// from a flat start, then recovers the angles from the two sine relations
/// on principal arcsin branches.
pub fn solve_prefault(params: &ScenarioParameters) -> Result<Prefault> {
    let xd = params.transient_reactance;
    let xl = params.line_reactance_pre;
    let e = params.internal_voltage;
    let pg = params.mechanical_power;
    let line_flow = params.mechanical_power - params.load_active;
    let sum = xd + xl;

    let map = |v: f64| -> Result<f64> {
        let gen_arg = e * e - (pg * xd / v).powi(2);
        let line_arg = 1.0 - (line_flow * xl / v).powi(2);
        if gen_arg < 0.0 || line_arg < 0.0 || v <= 0.0 {
            return Err(Error::InfeasibleLoading { v });
        }
        Ok(xl / sum * gen_arg.sqrt() + xd / sum * line_arg.sqrt() - xd * xl / sum * params.load_reactive / v)
    };

    let mut v = 1.0;
    let mut step = f64::INFINITY;
    let mut iterations = 0;
    while iterations < FIXED_POINT_MAX_ITER {
        let next = map(v)?;
        iterations += 1;
        step = (next - v).abs();
        v = next;
        if step < FIXED_POINT_TOL {
            break;
        }
    }
    if step >= FIXED_POINT_TOL {
        return Err(Error::NoConvergence {
            iterations,
            last_step: step,
        });
    }

    let phi_ss = (line_flow * xl / v).asin();
    let delta_ss = phi_ss + (pg * xd / (e * v)).asin();
    Ok(Prefault {
        delta_ss,
        phi_ss,
        v_ss: v,
        iterations,
    })
}

/// Stable equilibrium of the waiting (load-disconnected) system,
/// `arcsin(p_g (x'_d + x_l_post) / e)`.
pub fn no_load_equilibrium(params: &ScenarioParameters) -> Result<f64> {
    let ratio =
        params.mechanical_power * (params.transient_reactance + params.line_reactance_post) / params.internal_voltage;
    if ratio.abs() > 1.0 {
        return Err(Error::NoLoadInfeasible { ratio });
    }
    Ok(ratio.asin())
}

/// Same equilibrium as [`no_load_equilibrium`], found by the root finder
/// used for the load-connected case.
pub fn no_load_equilibrium_by_root(params: &ScenarioParameters) -> Result<f64> {
    let (lo, hi) = (BRACKET_MARGIN, FRAC_PI_2 - BRACKET_MARGIN);
    find_root(
        |d| Some(electrical_power_no_load(params, d) - params.mechanical_power),
        lo,
        hi,
        BRACKET_SUBDIVISIONS,
        ROOT_RESIDUAL_TOL,
    )
    .map(|r| r.x)
    .ok_or(Error::NoBracket { lo, hi })
}

/// Stable equilibrium with the load reconnected on the post-fault network:
/// the first zero of `p_e_load(δ) − p_g` on `(0.02, π/2 − 0.02)`.
pub fn load_connected_equilibrium(params: &ScenarioParameters) -> Result<LoadConnected> {
    let (lo, hi) = (BRACKET_MARGIN, FRAC_PI_2 - BRACKET_MARGIN);
    let root = find_root(
        |d| {
            electrical_power_post(params, d)
                .ok()
                .map(|pe| pe - params.mechanical_power)
        },
        lo,
        hi,
        BRACKET_SUBDIVISIONS,
        ROOT_RESIDUAL_TOL,
    )
    .ok_or(Error::NoBracket { lo, hi })?;

    let sol = post_load_bus(params, root.x);
    let bus = sol.voltage.ok_or(Error::LoadBusInfeasible {
        delta: root.x,
        discriminant: sol.discriminant,
    })?;
    Ok(LoadConnected {
        delta_eq_load: root.x,
        phi_eq: bus.phi,
        v_eq: bus.v,
    })
}
