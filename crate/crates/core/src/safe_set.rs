//! Admissible set, safe-set classification and the reconnection decision.
//!
//! A state is certified safe for reconnection when it is admissible
//! (protection band and post-reconnection voltage band), lies in the
//! pre-reconnection sublevel set `E_pre ≤ E_crit,pre` and in the strict
//! post-reconnection sublevel set `E_post < E_crit,post`. The earliest
//! reconnection time is the first sample of the waiting trajectory that
//! passes all three tests, evaluated directly at the sample (never read
//! off the raster grid).

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{Mode, SwingModel, Trajectory};
use crate::energy::{EnergyCertificate, PostPotential, PreEnergy, SamplingDensity};
use crate::equilibria::EquilibriumSet;
use crate::error::{Error, Result};
use crate::network::post_load_bus;
use crate::scenario::{ScenarioParameters, SwingState};

pub const DEFAULT_HORIZON: f64 = 10.0;
pub const AUDIT_WINDOW: f64 = 5.0;
pub const DEFAULT_GRID: usize = 140;

/// Protection band around the load-connected equilibrium plus the
/// post-reconnection voltage band. An infeasible load bus is inadmissible.
pub fn admissible(params: &ScenarioParameters, delta_eq_load: f64, state: &SwingState) -> bool {
    if (state.delta - delta_eq_load).abs() > params.delta_max || state.omega.abs() > params.omega_max {
        return false;
    }
    post_load_bus(params, state.delta)
        .v()
        .is_some_and(|v| params.v_min <= v && v <= params.v_max)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub in_pre: bool,
    pub in_post: bool,
    pub in_adm: bool,
}

impl Membership {
    pub fn in_safe(&self) -> bool {
        self.in_pre && self.in_post && self.in_adm
    }
}

/// Everything needed to test membership, computed once per scenario.
#[derive(Clone, Debug)]
pub struct Certifier {
    pub params: ScenarioParameters,
    pub equilibria: EquilibriumSet,
    pub model: SwingModel,
    pub pre_energy: PreEnergy,
    pub potential: PostPotential,
    pub certificate: EnergyCertificate,
}

impl Certifier {
    pub fn new(params: &ScenarioParameters, sampling: SamplingDensity) -> Result<Self> {
        let equilibria = EquilibriumSet::compute(params)?;
        let model = SwingModel::new(params)?;
        let pre_energy = PreEnergy::new(params)?;
        let potential = PostPotential::for_scenario(params)?;
        let certificate =
            EnergyCertificate::compute(params, equilibria.load_connected.delta_eq_load, &potential, sampling)?;
        Ok(Self {
            params: params.clone(),
            equilibria,
            model,
            pre_energy,
            potential,
            certificate,
        })
    }

    pub fn delta_eq_load(&self) -> f64 {
        self.equilibria.load_connected.delta_eq_load
    }

    pub fn energy_pre(&self, delta: f64, omega: f64) -> f64 {
        self.pre_energy.energy(delta, omega)
    }

    pub fn energy_post(&self, delta: f64, omega: f64) -> Result<f64> {
        self.potential.energy(delta, omega)
    }

    pub fn membership(&self, delta: f64, omega: f64) -> Membership {
        let state = SwingState::new(delta, omega, 0.0);
        let in_adm = admissible(&self.params, self.delta_eq_load(), &state);
        let in_pre = self.energy_pre(delta, omega) <= self.certificate.e_crit_pre;
        let in_post = self
            .energy_post(delta, omega)
            .is_ok_and(|e| e < self.certificate.e_crit_post);
        Membership {
            in_pre,
            in_post,
            in_adm,
        }
    }

    /// Waiting-mode start: pre-fault rotor angle at rest, t = 0.
    pub fn initial_waiting_state(&self) -> SwingState {
        SwingState::new(self.equilibria.prefault.delta_ss, 0.0, 0.0)
    }

    pub fn classify_grid(&self, resolution: usize) -> Result<SafeSetGrid> {
        if resolution == 0 {
            return Err(Error::InvalidArgument("grid resolution must be positive".into()));
        }
        let b = &self.certificate.bounds;
        let centers = |lo: f64, hi: f64| -> Vec<f64> {
            let h = (hi - lo) / resolution as f64;
            (0..resolution).map(|i| lo + h * (i as f64 + 0.5)).collect()
        };
        let delta_axis = centers(b.delta_lo, b.delta_hi);
        let omega_axis = centers(b.omega_lo, b.omega_hi);
        let cells: Vec<Membership> = delta_axis
            .par_iter()
            .flat_map_iter(|&d| omega_axis.iter().map(move |&w| (d, w)))
            .map(|(d, w)| self.membership(d, w))
            .collect();
        let admissible_cells = cells.iter().filter(|c| c.in_adm).count();
        let safe_cells = cells.iter().filter(|c| c.in_safe()).count();
        let safe_fraction = if admissible_cells == 0 {
            0.0
        } else {
            safe_cells as f64 / admissible_cells as f64
        };
        Ok(SafeSetGrid {
            delta_axis,
            omega_axis,
            cells,
            admissible_cells,
            safe_cells,
            safe_fraction,
            e_crit_pre: self.certificate.e_crit_pre,
            e_crit_post: self.certificate.e_crit_post,
        })
    }

    pub fn waiting_trajectory(&self, initial: SwingState, dt: f64, t_end: f64) -> Result<Trajectory> {
        self.model.integrate(initial, Mode::Waiting, dt, t_end)
    }

    /// First certified-safe sample of the waiting trajectory from the
    /// pre-fault state, searched over `horizon` seconds.
    pub fn earliest_reconnection(&self, dt: f64, horizon: f64) -> Result<ReconnectionDecision> {
        self.earliest_reconnection_from(self.initial_waiting_state(), dt, horizon)
    }

    pub fn earliest_reconnection_from(
        &self,
        initial: SwingState,
        dt: f64,
        horizon: f64,
    ) -> Result<ReconnectionDecision> {
        if !(horizon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be non-negative, got {horizon}"
            )));
        }
        let traj = self.waiting_trajectory(initial, dt, initial.time + horizon + AUDIT_WINDOW)?;
        let search_end = initial.time + horizon + 0.5 * dt;
        let hit = traj
            .samples
            .iter()
            .enumerate()
            .take_while(|(_, s)| s.time <= search_end)
            .find(|(_, s)| self.membership(s.delta, s.omega).in_safe());

        let Some((k, switch)) = hit else {
            return Ok(ReconnectionDecision {
                entered_safe: false,
                t_star: None,
                switch_state: None,
                omega_at_switch: None,
                switch_membership: None,
                energy_pre_at_switch: None,
                energy_post_at_switch: None,
                audit: Vec::new(),
                audit_failures: 0,
            });
        };
        let audit_end = switch.time + AUDIT_WINDOW + 0.5 * dt;
        let audit: Vec<AuditSample> = traj.samples[k..]
            .iter()
            .take_while(|s| s.time <= audit_end)
            .map(|s| AuditSample {
                time: s.time,
                in_safe: self.membership(s.delta, s.omega).in_safe(),
            })
            .collect();
        let audit_failures = audit.iter().filter(|a| !a.in_safe).count();
        Ok(ReconnectionDecision {
            entered_safe: true,
            t_star: Some(switch.time),
            switch_state: Some(*switch),
            omega_at_switch: Some(switch.omega),
            switch_membership: Some(self.membership(switch.delta, switch.omega)),
            energy_pre_at_switch: Some(self.energy_pre(switch.delta, switch.omega)),
            energy_post_at_switch: self.energy_post(switch.delta, switch.omega).ok(),
            audit,
            audit_failures,
        })
    }

    /// Waits from the pre-fault state until `t_reconnect`, then switches to
    /// the reconnected mode with the state carried over unchanged.
    pub fn simulate_reconnection(&self, t_reconnect: f64, t_end: f64, dt: f64) -> Result<ReconnectionRun> {
        if !(t_reconnect >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reconnection time must be non-negative, got {t_reconnect}"
            )));
        }
        if !(t_end >= t_reconnect) {
            return Err(Error::InvalidArgument(format!(
                "t_end = {t_end} precedes the reconnection time {t_reconnect}"
            )));
        }
        let waiting = self.waiting_trajectory(self.initial_waiting_state(), dt, t_reconnect)?;
        let switch = *waiting.last();
        let post = self.model.integrate(switch, Mode::Reconnected, dt, t_end)?;
        let flapped = post.violated();
        Ok(ReconnectionRun { waiting, post, flapped })
    }

    /// Brute-force time-domain classification of reconnection instants in
    /// `[from, to]`: each run switches on the shared waiting trajectory and
    /// integrates the reconnected mode for `post_duration` seconds.
    pub fn sweep(&self, from: f64, to: f64, step: f64, post_duration: f64, dt: f64) -> Result<Vec<SweepRow>> {
        if !(from >= 0.0 && from <= to) {
            return Err(Error::InvalidArgument(format!("empty sweep range [{from}, {to}]")));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sweep step must be positive, got {step}"
            )));
        }
        let count = ((to - from) / step + 1e-9).floor() as usize + 1;
        let times: Vec<f64> = (0..count).map(|k| from + step * k as f64).collect();
        let last = *times.last().expect("at least one sample");
        let waiting = self.waiting_trajectory(self.initial_waiting_state(), dt, last)?;
        let reference = self.delta_eq_load();

        let rows = times
            .par_iter()
            .map(|&t| {
                let switch = *waiting.sample_at(t).expect("sweep times lie on the waiting trajectory");
                match self
                    .model
                    .integrate(switch, Mode::Reconnected, dt, switch.time + post_duration)
                {
                    Ok(post) => SweepRow {
                        t_reconnect: switch.time,
                        verdict: if post.violated() {
                            Verdict::Flapped
                        } else {
                            Verdict::Safe
                        },
                        min_omega: post.min_omega(),
                        max_angle_deviation: post.max_angle_deviation(reference),
                    },
                    Err(_) => SweepRow {
                        t_reconnect: switch.time,
                        verdict: Verdict::Infeasible,
                        min_omega: f64::NAN,
                        max_angle_deviation: f64::NAN,
                    },
                }
            })
            .collect();
        Ok(rows)
    }
}

/// Raster classification at cell centres over the protection box.
/// `cells` is row-major with δ as the outer index.
#[derive(Clone, Debug)]
pub struct SafeSetGrid {
    pub delta_axis: Vec<f64>,
    pub omega_axis: Vec<f64>,
    pub cells: Vec<Membership>,
    pub admissible_cells: usize,
    pub safe_cells: usize,
    /// Safe cells over admissible cells.
    pub safe_fraction: f64,
    pub e_crit_pre: f64,
    pub e_crit_post: f64,
}

impl SafeSetGrid {
    pub fn cell(&self, delta_index: usize, omega_index: usize) -> &Membership {
        &self.cells[delta_index * self.omega_axis.len() + omega_index]
    }

    /// Indices of the cell containing `(delta, omega)`, if inside the grid.
    pub fn locate(&self, delta: f64, omega: f64) -> Option<(usize, usize)> {
        let index = |axis: &[f64], x: f64| -> Option<usize> {
            let h = if axis.len() > 1 {
                axis[1] - axis[0]
            } else {
                return Some(0);
            };
            let lo = axis[0] - 0.5 * h;
            let i = ((x - lo) / h).floor();
            (i >= 0.0 && (i as usize) < axis.len()).then_some(i as usize)
        };
        Some((index(&self.delta_axis, delta)?, index(&self.omega_axis, omega)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AuditSample {
    pub time: f64,
    pub in_safe: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconnectionDecision {
    pub entered_safe: bool,
    pub t_star: Option<f64>,
    #[serde(skip)]
    pub switch_state: Option<SwingState>,
    pub omega_at_switch: Option<f64>,
    pub switch_membership: Option<Membership>,
    pub energy_pre_at_switch: Option<f64>,
    pub energy_post_at_switch: Option<f64>,
    #[serde(skip)]
    pub audit: Vec<AuditSample>,
    /// Audited samples in `[t*, t* + 5 s]` that left the safe set.
    pub audit_failures: usize,
}

#[derive(Clone, Debug)]
pub struct ReconnectionRun {
    pub waiting: Trajectory,
    pub post: Trajectory,
    pub flapped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Safe,
    Flapped,
    /// The load-bus algebra lost its solution during the post run.
    Infeasible,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Safe => "safe",
            Verdict::Flapped => "flapped",
            Verdict::Infeasible => "infeasible",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub t_reconnect: f64,
    pub verdict: Verdict,
    pub min_omega: f64,
    pub max_angle_deviation: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn certifier() -> &'static Certifier {
        static C: OnceLock<Certifier> = OnceLock::new();
        C.get_or_init(|| Certifier::new(&ScenarioParameters::table1(), SamplingDensity::default()).unwrap())
    }

    #[test]
    fn admissibility_examples() {
        let c = certifier();
        let p = &c.params;
        let eq = c.delta_eq_load();
        assert!(admissible(p, eq, &SwingState::new(21.78f64.to_radians(), 0.0, 0.0)));
        assert!(!admissible(p, eq, &SwingState::new(21.78f64.to_radians(), 2.5, 0.0)));
        assert!(admissible(p, eq, &SwingState::new(eq + p.delta_max, 0.0, 0.0)));
        assert!(!admissible(p, eq, &SwingState::new(eq + p.delta_max + 1e-9, 0.0, 0.0)));
        let tight = ScenarioParameters {
            v_max: 1.0,
            ..p.clone()
        };
        assert!(!admissible(&tight, eq, &SwingState::new(eq, 0.0, 0.0)));
    }

    #[test]
    fn grid_flags_are_consistent() {
        let c = certifier();
        let grid = c.classify_grid(40).unwrap();
        assert_eq!(grid.cells.len(), 1600);
        for cell in &grid.cells {
            assert_eq!(cell.in_safe(), cell.in_pre && cell.in_post && cell.in_adm);
        }
        assert!((0.0..=1.0).contains(&grid.safe_fraction));
        assert!(c.classify_grid(0).is_err());
    }

    #[test]
    fn odd_grid_centre_cell_is_the_equilibrium() {
        let c = certifier();
        let grid = c.classify_grid(279).unwrap();
        let (i, j) = (139, 139);
        assert!((grid.delta_axis[i] - c.delta_eq_load()).abs() < 1e-12);
        assert!(grid.omega_axis[j].abs() < 1e-12);
        // the load equilibrium lies inside the post set but sits above the
        // pre barrier, since E_pre is measured from the no-load equilibrium
        let cell = grid.cell(i, j);
        assert!(cell.in_post && cell.in_adm);
        let e_pre = c.energy_pre(c.delta_eq_load(), 0.0);
        assert_eq!(cell.in_pre, e_pre <= c.certificate.e_crit_pre);
        assert!(!cell.in_pre);
        assert_eq!(grid.locate(c.delta_eq_load(), 0.0), Some((i, j)));
    }

    #[test]
    fn zero_post_critical_energy_empties_the_safe_set() {
        let mut c = certifier().clone();
        c.certificate.e_crit_post = 0.0;
        let grid = c.classify_grid(41).unwrap();
        assert_eq!(grid.safe_cells, 0);
        assert_eq!(grid.safe_fraction, 0.0);
    }

    #[test]
    fn short_horizon_finds_nothing() {
        let d = certifier().earliest_reconnection(1e-3, 0.1).unwrap();
        assert!(!d.entered_safe);
        assert!(d.t_star.is_none() && d.switch_state.is_none());
    }

    #[test]
    fn start_at_no_load_equilibrium() {
        let c = certifier();
        let start = SwingState::new(c.equilibria.delta_eq_noload, 0.0, 0.0);
        let direct = c.membership(start.delta, start.omega);
        let d = c.earliest_reconnection_from(start, 1e-3, 10.0).unwrap();
        // the no-load equilibrium is a rest point of the waiting system and
        // lies outside the post set, so the search never succeeds
        assert!(!direct.in_post && !direct.in_safe());
        assert!(!d.entered_safe);
        assert!(d.t_star.is_none());
    }

    #[test]
    fn decision_switch_state_passes_direct_tests() {
        let c = certifier();
        let d = c.earliest_reconnection(1e-3, DEFAULT_HORIZON).unwrap();
        assert!(d.entered_safe);
        let s = d.switch_state.unwrap();
        let m = Membership {
            in_pre: c.energy_pre(s.delta, s.omega) <= c.certificate.e_crit_pre,
            in_post: c.energy_post(s.delta, s.omega).unwrap() < c.certificate.e_crit_post,
            in_adm: admissible(&c.params, c.delta_eq_load(), &s),
        };
        assert!(m.in_safe());
        assert_eq!(d.switch_membership, Some(m));
        // the sample before t* is not safe
        let traj = c
            .waiting_trajectory(c.initial_waiting_state(), 1e-3, d.t_star.unwrap())
            .unwrap();
        let prev = traj.samples[traj.samples.len() - 2];
        assert!(!c.membership(prev.delta, prev.omega).in_safe());
        assert_eq!(d.audit[0].time, d.t_star.unwrap());
    }

    #[test]
    fn switch_is_continuous() {
        let run = certifier().simulate_reconnection(0.5, 1.0, 1e-3).unwrap();
        let (a, b) = (run.waiting.last(), run.post.first());
        assert_eq!((a.delta, a.omega, a.time), (b.delta, b.omega, b.time));
        assert_eq!(run.post.mode, Mode::Reconnected);
        assert!(certifier().simulate_reconnection(0.5, 0.4, 1e-3).is_err());
        assert!(certifier().simulate_reconnection(-1.0, 0.4, 1e-3).is_err());
    }

    #[test]
    fn degenerate_simulation() {
        let run = certifier().simulate_reconnection(0.0, 0.0, 1e-3).unwrap();
        assert_eq!(run.waiting.samples.len(), 1);
        assert_eq!(run.post.samples.len(), 1);
    }

    #[test]
    fn sweep_edge_cases() {
        let c = certifier();
        assert!(c.sweep(1.0, 0.5, 0.01, 1.0, 1e-3).is_err());
        assert!(c.sweep(0.0, 0.5, 0.0, 1.0, 1e-3).is_err());
        let rows = c.sweep(0.2, 0.25, 1.0, 0.5, 1e-3).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].t_reconnect, 0.2);
        let rows = c.sweep(0.2, 0.25, 0.01, 0.5, 1e-3).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.windows(2).all(|w| w[0].t_reconnect < w[1].t_reconnect));
    }
}
