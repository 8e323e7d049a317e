//! Simulation and analysis of randomized pairwise gossip for average
//! consensus, including privacy-motivated variants that only reveal a
//! binary comparison, an eps-gap indicator, or noised values.
//!
//! * [`graph`]: network construction and Laplacian spectrum.
//! * [`duality`]: primal/dual objectives and convergence measures.
//! * [`protocols`]: the four single-step protocols and a seeded runner.
//! * [`bounds`]: closed-form rates to overlay on empirical traces.

pub mod bounds;
pub mod duality;
pub mod error;
pub mod graph;
pub mod protocols;

pub use bounds::{BoundMeasure, BoundReport, RateBounds, ThresholdReport};
pub use duality::{ConsensusProblem, DualPoint, PrimalPoint, RelativeError};
pub use error::{Error, Result};
pub use graph::{Graph, SpectralSummary};
pub use protocols::{
    NoiseParams, Protocol, ProtocolState, RunOptions, Simulation, StepEffect, StepsizeSchedule,
    Trace, TraceRecord,
};
