//! Hybrid quantum-classical regression models for AC power flow.
//!
//! The crate has five layers, each usable on its own:
//!
//! * [`powerflow`] — case files, admittance matrices, a Newton-Raphson
//!   solver, and renewable scenario sampling that turns a solved case
//!   into a regression dataset.
//! * [`quantum`] — exact statevector and density-matrix simulation of the
//!   small variational circuits used here, with bit-flip / phase-flip /
//!   depolarizing channels and parameter-shift gradients.
//! * [`model`] — the hybrid network (classical encoder, variational
//!   circuit, linear readout), a pure-classical MLP baseline, the
//!   composite training loss, and a deterministic gradient-descent trainer.
//! * [`bayes`] — mean-field variational inference over the same flat
//!   parameter vector: reparameterized ELBO, closed-form Gaussian KL, and
//!   posterior predictive ensembles.
//! * [`metrics`] — empirical Fisher information, effective dimension,
//!   VC-style generalization bounds, and the power-system accuracy report
//!   (voltage MSE, angle/flow deviation rates, epochs-to-target).
//!
//! [`checkpoint`] holds the JSON model/posterior checkpoint format shared
//! with the `qpflow` command-line tool.
//!
//! The long-form guide lives in `book/` (rendered with mdbook) and is
//! mirrored into [`guide`] so its examples compile and run as doc-tests.

pub mod bayes;
pub mod checkpoint;
pub mod metrics;
pub mod model;
pub mod powerflow;
pub mod quantum;

#[cfg(test)]
pub(crate) mod testkit;
