//! Synthetic networks, demand simulation and the recovery experiment.

mod experiment;
mod metrics;
mod network;

pub use experiment::{fitted_uniform_prior, run_experiment, uniform_prior, write_trace, ExperimentOutcome, ExperimentReport, ExperimentSettings};
pub use metrics::{metrics, Metrics};
pub use network::{generate_network, SyntheticInstance, Topology, TopologySpec, MAX_GRAPH_ATTEMPTS};
