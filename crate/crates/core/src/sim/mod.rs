//! Seeded discrete-event simulation of revocation propagation.

pub mod engine;
pub mod graph;
pub mod sweep;

pub use engine::{
    derive_seed, revocation_hashes, run_once, run_simulation, transfer_time, Delivery,
    PropagationMode, SimConfig, SimError, SimResult, SimSummary, Simulation, UplinkModel,
};
pub use graph::{generate_regular_graph, GraphError, LatencyModel, WeightedGraph};
pub use sweep::{csv_string, render_svg, sweep, sweep_cell, write_csv, RowKind, SweepRow};
