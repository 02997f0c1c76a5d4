//! Certification of the earliest safe reconnection time of a large
//! constant-power load on a three-bus single-machine infinite-bus system.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! - [`scenario`]: validated physical parameters and scenario files
//! - [`network`]: Thevenin reductions and the constant-PQ load-bus solve
//! - [`equilibria`]: pre-fault, no-load and load-connected operating points
//! - [`dynamics`]: swing equations for both hybrid modes and an RK4 integrator
//! - [`energy`]: pre/post energy functions and their critical energies
//! - [`safe_set`]: admissible set, grid classification and the reconnection decision
//! - [`report`]: CSV/JSON writers for the artifacts above

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod energy;
pub mod equilibria;
pub mod error;
pub mod network;
pub mod numeric;
pub mod report;
pub mod safe_set;
pub mod scenario;

pub use dynamics::{integrate, rhs_reconnected, rhs_waiting, Mode, SwingModel, Trajectory, Violation, ViolationKind};
pub use energy::{
    critical_energy_post, critical_energy_pre, energy_post, energy_pre, BoundaryPoint, EnergyCertificate, Face,
    PostCritical, PostPotential, PreCritical, ProtectionBox, SamplingDensity,
};
pub use equilibria::{
    load_connected_equilibrium, no_load_equilibrium, solve_prefault, EquilibriumSet, LoadConnected, Prefault,
};
pub use error::{Error, Result};
pub use network::{fault_state_voltage, reduce_network, solve_load_bus, LoadBusSolution, TheveninEquivalent, Topology};
pub use safe_set::{
    admissible, Certifier, Membership, ReconnectionDecision, ReconnectionRun, SafeSetGrid, SweepRow, Verdict,
};
pub use scenario::{load_scenario, ScenarioParameters, SwingState};
