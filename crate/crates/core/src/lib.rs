//! Simulation of random connection models over Poisson point processes.

mod error;

pub mod connection;
pub mod functionals;
pub mod graph;
pub mod io;
pub mod limits;
pub mod marking;
pub mod pattern;
pub mod percolation;
pub mod point_process;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod topology;

pub use connection::{ConnectionFunction, Profile};
pub use error::{Error, Result};
pub use graph::{build_graph, build_graph_with, build_with_origin, Boundary, Graph, SimpleGraph};
pub use marking::{edge_marking_t, MarkedEdgeSet};
pub use point_process::{add_origin, nested_windows, restrict, sample_poisson, Configuration, PointRecord, Window};
pub use rng::pair_uniform;
pub use stats::{
    clt_report, covariance_report, quenched_run, run_replications, variance_scaling, CltReport, CovarianceReport, Model,
    QuenchedReport, SampleSet,
};
pub use functionals::{
    add_one_cost, biggest_component, connected_components, count_components_isomorphic, count_induced_subgraphs,
    stabilization_trace, AddOneCostRecord, ComponentLabeling, Functional,
};
pub use pattern::{cross_polytope_graph, PatternGraph, PATTERN_CAP};
pub use percolation::{
    c_delta, estimate_beta_nu, estimate_crossing_theta, estimate_full_capture, estimate_kappa, g_delta, per_graph,
    AnnulusBox, PerGraph, Tessellation,
};
pub use topology::{clique_complex, BoundaryMatrix, SimplicialComplex};
pub use limits::{
    estimate_component_limit, estimate_h_a, estimate_mean_density, estimate_sigma_ab, psi_a_exact, ComponentLimit,
    LimitEstimate, Proposal,
};
