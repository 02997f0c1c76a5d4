//! Plain-text artifacts: trajectory, grid and sweep CSVs, and JSON
//! documents for the equilibria, the certificate and the decision. CSV
//! numbers use Rust's shortest round-trip formatting, so output does not
//! depend on locale. Every JSON document embeds the scenario it came from.

use std::io::{self, Write};

use serde_json::{json, Value};

use crate::dynamics::Trajectory;
use crate::equilibria::EquilibriumSet;
use crate::safe_set::{Certifier, ReconnectionDecision, SafeSetGrid, SweepRow};
use crate::scenario::ScenarioParameters;

pub const TRAJECTORY_HEADER: &str = "t,delta_deg,omega_rad_s,v_pu,phi_deg,mode,E_pre,E_post";
pub const GRID_HEADER: &str = "delta_deg,omega,in_pre,in_post,in_adm,in_safe";
pub const SWEEP_HEADER: &str = "t_reconnect,verdict,min_omega_rad_s,max_angle_deviation_deg";
pub const EQUILIBRIA_HEADER: &str = "condition,delta_deg,phi_deg,v_pu";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the header followed by one row per sample of each trajectory,
/// in order. Voltage columns are empty for waiting-mode rows.
pub fn write_trajectory_csv<W: Write>(
    mut out: W,
    certifier: &Certifier,
    trajectories: &[&Trajectory],
) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for traj in trajectories {
        for (k, s) in traj.samples.iter().enumerate() {
            let bus = traj.bus.get(k);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.time,
                s.delta.to_degrees(),
                s.omega,
                opt(bus.map(|b| b.v)),
                opt(bus.map(|b| b.phi.to_degrees())),
                traj.mode.as_str(),
                certifier.energy_pre(s.delta, s.omega),
                opt(certifier.energy_post(s.delta, s.omega).ok()),
            )?;
        }
    }
    Ok(())
}

pub fn write_grid_csv<W: Write>(mut out: W, grid: &SafeSetGrid) -> io::Result<()> {
    writeln!(out, "{GRID_HEADER}")?;
    let flag = |b: bool| if b { 1 } else { 0 };
    for (i, d) in grid.delta_axis.iter().enumerate() {
        for (j, w) in grid.omega_axis.iter().enumerate() {
            let c = grid.cell(i, j);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                d.to_degrees(),
                w,
                flag(c.in_pre),
                flag(c.in_post),
                flag(c.in_adm),
                flag(c.in_safe())
            )?;
        }
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.t_reconnect,
            r.verdict.as_str(),
            r.min_omega,
            r.max_angle_deviation.to_degrees()
        )?;
    }
    Ok(())
}

pub fn write_equilibria_csv<W: Write>(mut out: W, eq: &EquilibriumSet) -> io::Result<()> {
    writeln!(out, "{EQUILIBRIA_HEADER}")?;
    let pre = &eq.prefault;
    let load = &eq.load_connected;
    writeln!(
        out,
        "prefault,{},{},{}",
        pre.delta_ss.to_degrees(),
        pre.phi_ss.to_degrees(),
        pre.v_ss
    )?;
    writeln!(out, "no_load,{},,", eq.delta_eq_noload.to_degrees())?;
    writeln!(
        out,
        "load_connected,{},{},{}",
        load.delta_eq_load.to_degrees(),
        load.phi_eq.to_degrees(),
        load.v_eq
    )?;
    Ok(())
}

/// Operating points in degrees / per-unit, with the electrical power at each.
pub fn equilibria_json(params: &ScenarioParameters, eq: &EquilibriumSet) -> Value {
    let pre = &eq.prefault;
    let load = &eq.load_connected;
    json!({
        "scenario": params.to_json_value(),
        "prefault": {
            "delta_deg": pre.delta_ss.to_degrees(),
            "phi_deg": pre.phi_ss.to_degrees(),
            "v_pu": pre.v_ss,
            "iterations": pre.iterations,
        },
        "no_load": {
            "delta_deg": eq.delta_eq_noload.to_degrees(),
        },
        "load_connected": {
            "delta_deg": load.delta_eq_load.to_degrees(),
            "phi_deg": load.phi_eq.to_degrees(),
            "v_pu": load.v_eq,
        },
        "electrical_power_pu": params.mechanical_power,
    })
}

pub fn certificate_json(certifier: &Certifier) -> Value {
    let c = &certifier.certificate;
    let b = &c.bounds;
    json!({
        "scenario": certifier.params.to_json_value(),
        "e_crit_pre": c.e_crit_pre,
        "binding_faces": c.binding_faces,
        "face_barriers": c.face_barriers,
        "e_crit_post": c.e_crit_post,
        "binding_boundary_point": {
            "delta_deg": c.binding_boundary_point.delta.to_degrees(),
            "omega": c.binding_boundary_point.omega,
            "edge": c.binding_boundary_point.edge,
        },
        "box": {
            "delta_lo_deg": b.delta_lo.to_degrees(),
            "delta_hi_deg": b.delta_hi.to_degrees(),
            "omega_lo": b.omega_lo,
            "omega_hi": b.omega_hi,
        },
        "sampling": c.sampling,
    })
}

pub fn grid_summary_json(grid: &SafeSetGrid) -> Value {
    json!({
        "resolution": [grid.delta_axis.len(), grid.omega_axis.len()],
        "admissible_cells": grid.admissible_cells,
        "safe_cells": grid.safe_cells,
        "safe_fraction": grid.safe_fraction,
    })
}

pub fn decision_json(certifier: &Certifier, decision: &ReconnectionDecision, dt: f64, horizon: f64) -> Value {
    let switch = decision.switch_state.map(|s| {
        json!({
            "time": s.time,
            "delta_deg": s.delta.to_degrees(),
            "omega_rad_s": s.omega,
            "omega_hz": certifier.params.omega_to_hz(s.omega),
        })
    });
    json!({
        "scenario": certifier.params.to_json_value(),
        "entered_safe": decision.entered_safe,
        "t_star": decision.t_star,
        "switch_state": switch,
        "omega_at_switch": decision.omega_at_switch,
        "switch_membership": decision.switch_membership,
        "energy_pre_at_switch": decision.energy_pre_at_switch,
        "energy_post_at_switch": decision.energy_post_at_switch,
        "audit": {
            "samples": decision.audit.len(),
            "failures": decision.audit_failures,
            "first_failure_time": decision.audit.iter().find(|a| !a.in_safe).map(|a| a.time),
        },
        "dt": dt,
        "horizon": horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Mode;
    use crate::energy::SamplingDensity;
    use crate::scenario::SwingState;

    #[test]
    fn trajectory_csv_layout() {
        let p = ScenarioParameters::table1();
        let c = Certifier::new(&p, SamplingDensity::default()).unwrap();
        let s = SwingState::new(c.delta_eq_load(), 0.0, 0.0);
        let w = c.model.integrate(s, Mode::Waiting, 1e-3, 0.002).unwrap();
        let r = c.model.integrate(*w.last(), Mode::Reconnected, 1e-3, 0.004).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &c, &[&w, &r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER);
        assert_eq!(lines.len(), 1 + 3 + 3);
        let waiting: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(waiting.len(), 8);
        assert_eq!((waiting[3], waiting[4], waiting[5]), ("", "", "waiting"));
        let post: Vec<&str> = lines[4].split(',').collect();
        assert_eq!(post[5], "reconnected");
        assert!((post[3].parse::<f64>().unwrap() - 1.046).abs() < 1e-3);
        for line in &lines[1..] {
            assert!(!line.contains(';'));
        }
    }

    #[test]
    fn equilibria_csv_layout() {
        let p = ScenarioParameters::table1();
        let eq = EquilibriumSet::compute(&p).unwrap();
        let mut buf = Vec::new();
        write_equilibria_csv(&mut buf, &eq).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(2).unwrap().starts_with("no_load,37.55"));
        let v = equilibria_json(&p, &eq);
        assert!((v["load_connected"]["delta_deg"].as_f64().unwrap() - 21.78).abs() < 0.01);
        assert!((v["scenario"]["delta_max"].as_f64().unwrap() - 30.0).abs() < 1e-12);
    }
}
