//! Linear transformations of order statistics applied to `(n, k)` fork-join
//! queues.
//!
//! * [`coeffs`] computes the exact `A` and `W` coefficients that express the
//!   k-th order statistic of exchangeable variables as a signed integer
//!   combination of maxima, and persists them as text tables.
//! * [`oracle`] checks that transformation by brute-force enumeration of
//!   small discrete exchangeable distributions, dependent ones included.
//! * [`analytic`] gives closed-form expected sojourn times: Nelson's and
//!   Varma's approximations for basic `(i, i)` queues and their lifts to
//!   non-purging `(n, k)` queues.
//! * [`bounds`] bounds the expected sojourn time of purging `(n, k)` queues.
//! * [`sim`] is a deterministic discrete-event simulator for the basic,
//!   non-purging, purging and split-merge variants.

pub mod analytic;
pub mod bounds;
pub mod coeffs;
pub mod error;
pub mod oracle;
pub mod rate;
pub mod sim;

pub use analytic::{ApproxValue, Evaluation, Method, QueueSpec, ServiceDist, Variant};
pub use bounds::BoundSet;
pub use coeffs::WTable;
pub use error::{Error, Result};
pub use rate::Rate;
pub use sim::{SimConfig, SimResult};
