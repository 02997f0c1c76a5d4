//! Energy functions for both hybrid modes and their critical energies.
//!
//! Pre-reconnection (load disconnected):
//!
//! ```text
//! E_pre(δ, ω) = ½ M ω² − K (cos δ − cos δ_nl) − p_g (δ − δ_nl),   K = e / (x'_d + x_l_post)
//! ```
//!
//! Post-reconnection, with the potential obtained by quadrature of the
//! accelerating power of the load-connected system:
//!
//! ```text
//! E_post(δ, ω) = ½ M ω² + ∫_{δ_load}^{δ} (p_e_load(θ) − p_g) dθ
//! ```
//!
//! `E_crit,pre` is the smallest energy on the outward-pointing part of the
//! protection box (minimized face by face). `E_crit,post` is the smallest
//! `E_post` over a dense sample of the outward-pointing admissible boundary.

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibria::{load_connected_equilibrium, no_load_equilibrium};
use crate::error::{Error, Result};
use crate::network::{electrical_power_post, no_load_transfer_limit, post_load_bus};
use crate::numeric::{adaptive_simpson, find_root, golden_section_min};
use crate::scenario::{ScenarioParameters, SwingState};

/// Node spacing of the cached post potential.
pub const POTENTIAL_STEP: f64 = 0.01 * std::f64::consts::PI / 180.0;
const QUADRATURE_TOL: f64 = 1e-8;
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplingDensity {
    /// Points per ω-face scan for the pre critical energy.
    pub face_samples: usize,
    /// Points per boundary edge for the post critical energy.
    pub boundary_samples: usize,
}

impl Default for SamplingDensity {
    fn default() -> Self {
        Self {
            face_samples: 2000,
            boundary_samples: 4000,
        }
    }
}

/// Protection rectangle in the (δ, ω) plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProtectionBox {
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
}

impl ProtectionBox {
    /// `[δ_load − δ_max, δ_load + δ_max] × [−ω_max, ω_max]`.
    pub fn centered(params: &ScenarioParameters, delta_eq_load: f64) -> Self {
        Self {
            delta_lo: delta_eq_load - params.delta_max,
            delta_hi: delta_eq_load + params.delta_max,
            omega_lo: -params.omega_max,
            omega_hi: params.omega_max,
        }
    }

    pub fn contains(&self, delta: f64, omega: f64) -> bool {
        (self.delta_lo..=self.delta_hi).contains(&delta) && (self.omega_lo..=self.omega_hi).contains(&omega)
    }
}

/// Closed-form pre-reconnection energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreEnergy {
    pub inertia: f64,
    pub damping: f64,
    pub mechanical_power: f64,
    pub transfer_limit: f64,
    pub delta_eq_noload: f64,
}

impl PreEnergy {
    pub fn new(params: &ScenarioParameters) -> Result<Self> {
        Ok(Self {
            inertia: params.inertia,
            damping: params.damping,
            mechanical_power: params.mechanical_power,
            transfer_limit: no_load_transfer_limit(params),
            delta_eq_noload: no_load_equilibrium(params)?,
        })
    }

    pub fn potential(&self, delta: f64) -> f64 {
        -self.transfer_limit * (delta.cos() - self.delta_eq_noload.cos())
            - self.mechanical_power * (delta - self.delta_eq_noload)
    }

    pub fn energy(&self, delta: f64, omega: f64) -> f64 {
        0.5 * self.inertia * omega * omega + self.potential(delta)
    }

    /// `M ω̇` of the waiting system.
    fn accelerating_power(&self, delta: f64, omega: f64) -> f64 {
        self.mechanical_power - self.transfer_limit * delta.sin() - self.damping * omega
    }
}

pub fn energy_pre(params: &ScenarioParameters, state: &SwingState) -> Result<f64> {
    Ok(PreEnergy::new(params)?.energy(state.delta, state.omega))
}

/// Post-reconnection potential with a cumulative cache on a uniform
/// δ-grid anchored at the load-connected equilibrium. Queries inside the
/// grid interpolate linearly; queries outside integrate from the nearest
/// grid end.
#[derive(Clone, Debug)]
pub struct PostPotential {
    params: ScenarioParameters,
    pub delta_eq_load: f64,
    step: f64,
    /// Node index of `delta_eq_load`.
    origin: usize,
    values: Vec<f64>,
}

impl PostPotential {
    pub fn new(params: &ScenarioParameters, delta_eq_load: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= delta_eq_load && delta_eq_load <= hi) {
            return Err(Error::InvalidArgument(format!(
                "potential range [{lo}, {hi}] must contain the equilibrium {delta_eq_load}"
            )));
        }
        let step = POTENTIAL_STEP;
        let below = ((delta_eq_load - lo) / step).ceil() as usize;
        let above = ((hi - delta_eq_load) / step).ceil() as usize;
        let node = |k: isize| delta_eq_load + k as f64 * step;
        let per_interval_tol = QUADRATURE_TOL / (below + above).max(1) as f64;
        let integrand = |t: f64| electrical_power_post(params, t).map(|pe| pe - params.mechanical_power);

        // integrate outward from the equilibrium; stop at the first infeasible node
        let mut upper = vec![0.0];
        for k in 0..above {
            match adaptive_simpson(integrand, node(k as isize), node(k as isize + 1), per_interval_tol) {
                Ok(piece) => upper.push(upper[k] + piece),
                Err(_) => break,
            }
        }
        let mut lower = vec![0.0];
        for k in 0..below {
            let (a, b) = (node(-(k as isize) - 1), node(-(k as isize)));
            match adaptive_simpson(integrand, a, b, per_interval_tol) {
                Ok(piece) => lower.push(lower[k] - piece),
                Err(_) => break,
            }
        }
        let origin = lower.len() - 1;
        let mut values: Vec<f64> = lower.into_iter().rev().collect();
        values.extend_from_slice(&upper[1..]);
        Ok(Self {
            params: params.clone(),
            delta_eq_load,
            step,
            origin,
            values,
        })
    }

    /// Grid spanning the protection angle range plus a 10° margin.
    pub fn for_scenario(params: &ScenarioParameters) -> Result<Self> {
        let eq = load_connected_equilibrium(params)?.delta_eq_load;
        let span = params.delta_max + 10f64.to_radians();
        Self::new(params, eq, eq - span, eq + span)
    }

    fn node(&self, index: usize) -> f64 {
        self.delta_eq_load + (index as f64 - self.origin as f64) * self.step
    }

    pub fn grid_range(&self) -> (f64, f64) {
        (self.node(0), self.node(self.values.len() - 1))
    }

    pub fn potential(&self, delta: f64) -> Result<f64> {
        let pos = (delta - self.delta_eq_load) / self.step + self.origin as f64;
        let last = self.values.len() - 1;
        if pos < 0.0 {
            return Ok(self.values[0] - self.integrate(delta, self.node(0))?);
        }
        if pos > last as f64 {
            return Ok(self.values[last] + self.integrate(self.node(last), delta)?);
        }
        let i = (pos.floor() as usize).min(last.saturating_sub(1));
        if last == 0 {
            return Ok(self.values[0]);
        }
        let frac = pos - i as f64;
        Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
    }

    /// Uncached quadrature from the equilibrium, for cross-checks.
    pub fn potential_direct(&self, delta: f64) -> Result<f64> {
        self.integrate(self.delta_eq_load, delta)
    }

    fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        let p = &self.params;
        adaptive_simpson(
            |t| electrical_power_post(p, t).map(|pe| pe - p.mechanical_power),
            a,
            b,
            QUADRATURE_TOL,
        )
    }

    pub fn energy(&self, delta: f64, omega: f64) -> Result<f64> {
        Ok(0.5 * self.params.inertia * omega * omega + self.potential(delta)?)
    }
}

pub fn energy_post(params: &ScenarioParameters, state: &SwingState) -> Result<f64> {
    let eq = load_connected_equilibrium(params)?.delta_eq_load;
    let lo = eq.min(state.delta);
    let hi = eq.max(state.delta);
    PostPotential::new(params, eq, lo, hi)?.energy(state.delta, state.omega)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    DeltaPlus,
    DeltaMinus,
    OmegaPlus,
    OmegaMinus,
}

/// Face barriers; `f64::INFINITY` marks a face with no outward points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FaceBarriers {
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
}

impl FaceBarriers {
    pub fn iter(&self) -> impl Iterator<Item = (Face, f64)> {
        [
            (Face::DeltaPlus, self.delta_plus),
            (Face::DeltaMinus, self.delta_minus),
            (Face::OmegaPlus, self.omega_plus),
            (Face::OmegaMinus, self.omega_minus),
        ]
        .into_iter()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreCritical {
    pub e_crit_pre: f64,
    pub face_barriers: FaceBarriers,
    /// Every face attaining the minimum; empty when no face has outward points.
    pub binding_faces: Vec<Face>,
}

pub fn critical_energy_pre(
    params: &ScenarioParameters,
    bounds: &ProtectionBox,
    face_samples: usize,
) -> Result<PreCritical> {
    let pre = PreEnergy::new(params)?;
    let kinetic = |w: f64| 0.5 * pre.inertia * w * w;

    // δ-faces: outward iff ω has the sign of the normal; the infimum sits at
    // the ω closest to zero within the face.
    let delta_plus = if bounds.omega_hi > 0.0 {
        pre.potential(bounds.delta_hi) + kinetic(bounds.omega_lo.max(0.0))
    } else {
        f64::INFINITY
    };
    let delta_minus = if bounds.omega_lo < 0.0 {
        pre.potential(bounds.delta_lo) + kinetic(bounds.omega_hi.min(0.0))
    } else {
        f64::INFINITY
    };

    let omega_plus = omega_face_barrier(&pre, bounds, bounds.omega_hi, 1.0, face_samples);
    let omega_minus = omega_face_barrier(&pre, bounds, bounds.omega_lo, -1.0, face_samples);

    let face_barriers = FaceBarriers {
        delta_plus,
        delta_minus,
        omega_plus,
        omega_minus,
    };
    let e_crit_pre = face_barriers.iter().map(|(_, e)| e).fold(f64::INFINITY, f64::min);
    let binding_faces = if e_crit_pre.is_finite() {
        face_barriers
            .iter()
            .filter(|(_, e)| (e - e_crit_pre).abs() <= TIE_TOL * e_crit_pre.abs().max(1.0))
            .map(|(f, _)| f)
            .collect()
    } else {
        Vec::new()
    };
    Ok(PreCritical {
        e_crit_pre,
        face_barriers,
        binding_faces,
    })
}

/// Minimum of `E_pre` on the face `ω = omega` over the closure of the set
/// where `sign · ω̇ > 0`: dense scan, bisection at sign changes of the
/// outward condition, then golden-section refinement around the best scan
/// point.
fn omega_face_barrier(pre: &PreEnergy, bounds: &ProtectionBox, omega: f64, sign: f64, samples: usize) -> f64 {
    let n = samples.max(2);
    let h = (bounds.delta_hi - bounds.delta_lo) / (n - 1) as f64;
    let outward = |d: f64| sign * pre.accelerating_power(d, omega);
    let kinetic = 0.5 * pre.inertia * omega * omega;

    let deltas: Vec<f64> = (0..n).map(|i| bounds.delta_lo + h * i as f64).collect();
    let conds: Vec<f64> = deltas.iter().map(|&d| outward(d)).collect();

    let mut best = f64::INFINITY;
    let mut best_sample = f64::INFINITY;
    let mut best_index: Option<usize> = None;
    for i in 0..n {
        if conds[i] > 0.0 {
            let phi = pre.potential(deltas[i]);
            if phi < best_sample {
                best_sample = phi;
                best_index = Some(i);
            }
            best = best.min(phi);
        }
        if i + 1 < n && (conds[i] > 0.0) != (conds[i + 1] > 0.0) {
            if let Some(root) = find_root(|d| Some(outward(d)), deltas[i], deltas[i + 1], 1, 1e-14) {
                best = best.min(pre.potential(root.x));
            }
        }
    }
    let Some(i) = best_index else {
        return f64::INFINITY;
    };
    let a = deltas[i.saturating_sub(1)];
    let b = deltas[(i + 1).min(n - 1)];
    if a < b {
        let penalized = |d: f64| {
            if outward(d) >= 0.0 {
                pre.potential(d)
            } else {
                f64::INFINITY
            }
        };
        let (_, refined) = golden_section_min(penalized, a, b, 1e-12);
        best = best.min(refined);
    }
    kinetic + best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryEdge {
    /// `ω = ω_max`.
    OmegaUpper,
    /// `ω = −ω_max`.
    OmegaLower,
    /// Right end of an admissible angle interval (box face or voltage limit).
    DeltaRight,
    /// Left end of an admissible angle interval.
    DeltaLeft,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub delta: f64,
    pub omega: f64,
    pub edge: BoundaryEdge,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PostCritical {
    pub e_crit_post: f64,
    pub binding_point: BoundaryPoint,
    pub sampled_points: usize,
    pub outward_points: usize,
    /// Admissible angle intervals whose union is the δ-extent of the admissible set.
    pub admissible_intervals: Vec<(f64, f64)>,
}

fn voltage_admissible(params: &ScenarioParameters, delta: f64) -> bool {
    post_load_bus(params, delta)
        .v()
        .is_some_and(|v| v >= params.v_min && v <= params.v_max)
}

/// Maximal δ-intervals inside the box on which the post-reconnection
/// voltage is feasible and within its band. Interval ends adjacent to an
/// inadmissible sample are located by bisection.
pub fn admissible_angle_intervals(
    params: &ScenarioParameters,
    bounds: &ProtectionBox,
    samples: usize,
) -> Vec<(f64, f64)> {
    let n = samples.max(2);
    let h = (bounds.delta_hi - bounds.delta_lo) / (n - 1) as f64;
    let deltas: Vec<f64> = (0..n).map(|i| bounds.delta_lo + h * i as f64).collect();
    let ok: Vec<bool> = deltas.iter().map(|&d| voltage_admissible(params, d)).collect();

    let edge = |mut inside: f64, mut outside: f64| {
        for _ in 0..60 {
            let m = 0.5 * (inside + outside);
            if voltage_admissible(params, m) {
                inside = m;
            } else {
                outside = m;
            }
        }
        inside
    };

    let mut intervals = Vec::new();
    let mut i = 0;
    while i < n {
        if !ok[i] {
            i += 1;
            continue;
        }
        let start = if i == 0 {
            deltas[0]
        } else {
            edge(deltas[i], deltas[i - 1])
        };
        let mut j = i;
        while j + 1 < n && ok[j + 1] {
            j += 1;
        }
        let end = if j == n - 1 {
            deltas[n - 1]
        } else {
            edge(deltas[j], deltas[j + 1])
        };
        intervals.push((start, end));
        i = j + 1;
    }
    intervals
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| {
        if i == n - 1 {
            b
        } else {
            a + (b - a) * i as f64 / (n - 1) as f64
        }
    })
}

pub fn critical_energy_post(
    params: &ScenarioParameters,
    bounds: &ProtectionBox,
    potential: &PostPotential,
    boundary_samples: usize,
) -> Result<PostCritical> {
    let intervals = admissible_angle_intervals(params, bounds, boundary_samples);
    if intervals.is_empty() {
        return Err(Error::NoOutwardBoundary("admissible set is empty".into()));
    }

    let mut points = Vec::new();
    for &(a, b) in &intervals {
        points.extend(linspace(a, b, boundary_samples).map(|d| (d, bounds.omega_hi, BoundaryEdge::OmegaUpper)));
        points.extend(linspace(a, b, boundary_samples).map(|d| (d, bounds.omega_lo, BoundaryEdge::OmegaLower)));
        points.extend(
            linspace(bounds.omega_lo, bounds.omega_hi, boundary_samples).map(|w| (b, w, BoundaryEdge::DeltaRight)),
        );
        points.extend(
            linspace(bounds.omega_lo, bounds.omega_hi, boundary_samples).map(|w| (a, w, BoundaryEdge::DeltaLeft)),
        );
    }

    let evaluated: Vec<Option<f64>> = points
        .par_iter()
        .map(|&(d, w, edge)| {
            let outward = match edge {
                BoundaryEdge::DeltaRight => w > 0.0,
                BoundaryEdge::DeltaLeft => w < 0.0,
                BoundaryEdge::OmegaUpper | BoundaryEdge::OmegaLower => {
                    let pe = electrical_power_post(params, d).ok()?;
                    let accel = params.mechanical_power - pe - params.damping * w;
                    if edge == BoundaryEdge::OmegaUpper {
                        accel > 0.0
                    } else {
                        accel < 0.0
                    }
                }
            };
            if !outward {
                return None;
            }
            potential.energy(d, w).ok()
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    let mut outward_points = 0;
    for (i, e) in evaluated.iter().enumerate() {
        if let Some(e) = *e {
            outward_points += 1;
            if best.is_none_or(|(_, b)| e < b) {
                best = Some((i, e));
            }
        }
    }
    let (index, e_crit_post) =
        best.ok_or_else(|| Error::NoOutwardBoundary("no sampled boundary point points outward".into()))?;
    let (delta, omega, edge) = points[index];
    Ok(PostCritical {
        e_crit_post,
        binding_point: BoundaryPoint { delta, omega, edge },
        sampled_points: points.len(),
        outward_points,
        admissible_intervals: intervals,
    })
}

/// Both critical energies for one scenario.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyCertificate {
    pub e_crit_pre: f64,
    pub binding_faces: Vec<Face>,
    pub face_barriers: FaceBarriers,
    pub e_crit_post: f64,
    pub binding_boundary_point: BoundaryPoint,
    #[serde(rename = "box")]
    pub bounds: ProtectionBox,
    pub sampling: SamplingDensity,
}

impl EnergyCertificate {
    pub fn compute(
        params: &ScenarioParameters,
        delta_eq_load: f64,
        potential: &PostPotential,
        sampling: SamplingDensity,
    ) -> Result<Self> {
        let bounds = ProtectionBox::centered(params, delta_eq_load);
        let pre = critical_energy_pre(params, &bounds, sampling.face_samples)?;
        let post = critical_energy_post(params, &bounds, potential, sampling.boundary_samples)?;
        Ok(Self {
            e_crit_pre: pre.e_crit_pre,
            binding_faces: pre.binding_faces,
            face_barriers: pre.face_barriers,
            e_crit_post: post.e_crit_post,
            binding_boundary_point: post.binding_point,
            bounds,
            sampling,
        })
    }
}
