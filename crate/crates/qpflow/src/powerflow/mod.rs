//! AC power-flow ground truth.
//!
//! A [`PowerCase`] describes a network in per-unit on `base_mva`. From it we
//! build the complex admittance matrix, solve the nodal balance equations by
//! Newton-Raphson from a flat start, and evaluate per-branch flows. On top of
//! the solver, [`scenario`] samples renewable-uncertainty operating points
//! and packages them as a regression [`Dataset`].

pub mod case;
pub mod dataset;
pub mod scenario;
pub mod solve;
pub mod ybus;

pub use case::{Branch, Bus, BusKind, CaseError, Generator, PowerCase};
pub use dataset::{split_dataset, Dataset, DatasetError, DatasetMeta, Norms, Sample};
pub use scenario::{
    sample_scenarios, sample_scenarios_with_stats, ScenarioConfig, ScenarioError, ScenarioStats,
};
pub use solve::{
    branch_flow_sensitivities, branch_flows, bus_injections, solve_nr, BranchFlow,
    FlowSensitivity, PfSolution, SolveError, SolveOptions,
};
pub use ybus::{build_ybus, AdmittanceMatrix};
