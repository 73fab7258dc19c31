//! Simulation core for local-to-global collaborative perception (LGCP).
//!
//! A road of interest is partitioned into grid areas; each occupied area is
//! assigned a CAV group whose leader collects and fuses the members'
//! area features, and the member-to-leader transmissions are scheduled on a
//! small set of sidelink subchannels under half-duplex and co-channel
//! interference constraints. The crate computes the resulting transmission
//! volume, the end-to-end latency decomposition, and the
//! confidence-per-latency objective, alongside two reference paradigms
//! (all-to-all vehicle exchange and edge-server aggregation).
//!
//! Everything is deterministic given a scenario seed: scenario generation,
//! synthetic confidence values, link shadowing, and all scheduling orders.
//!
//! Modules follow the pipeline order:
//!
//! * [`scenario`] — RoI grid, CAV states, generation and JSON persistence
//! * [`confidence`] — per-(area, CAV) confidence values and the
//!   collaborative/global confidence formulas
//! * [`assignment`] — greedy group selection and min-max leader assignment
//! * [`radio`] — channel model, link feasibility gate, interference predicate
//! * [`scheduler`] — priority-ordered slot/subchannel allocation with
//!   overlapped fusion accounting
//! * [`paradigms`] — end-to-end latency and volume for LGCP and the two
//!   comparison paradigms
//! * [`experiment`] — configuration, sweeps, oracle verification, and
//!   machine-readable result export

pub mod assignment;
pub mod confidence;
pub mod error;
pub mod experiment;
pub mod paradigms;
pub mod radio;
pub mod scenario;
pub mod scheduler;

pub use error::{Error, Result};
