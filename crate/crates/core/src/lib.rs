//! Post-denitrification biofilter simulation and model-free methanol dosing.
//!
//! The plant is a packed-bed biofilter in which a biofilm reduces nitrate to
//! nitrite and nitrite to nitrogen gas, consuming methanol. The bed is
//! discretized as a cascade of stirred cells ([`reactor`]) with double-Monod
//! kinetics ([`kinetics`]). A single input, the inlet methanol concentration,
//! is computed by a stoichiometric feedforward on influent nitrate plus an
//! intelligent proportional (iP) correction on effluent nitrite
//! ([`control`]), whose lumped term `F` is estimated online from a sliding
//! window of samples ([`estimation`]).
//!
//! [`harness`] ties these together: scenario files, influent generation,
//! backwash scheduling, the sampled simulation loop, metrics and file output.
//!
//! Time bookkeeping: the plant integrates in hours (velocities are in m/h,
//! growth rates in 1/h); scenarios, records and the controller run on the
//! day-denominated sampling grid. Conversions live in [`units`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod estimation;
pub mod harness;
pub mod kinetics;
pub mod reactor;
pub mod units;

pub use control::{ControlOutput, Controller, ControllerConfig, ReferenceSignal};
pub use estimation::{EstimatorKind, FEstimate, Sample, SampleWindow};
pub use harness::{run_scenario, HarnessError, Metrics, RunReport, Scenario, TrajectoryRecord};
pub use kinetics::{KineticParams, ReactionRates};
pub use reactor::{CellState, InfluentSample, PlantState, ReactorParams};
