//! Regularized estimation of graph Laplacians via diffusion operators.
//!
//! The library builds small weighted graphs (lattices and their edge-swapped
//! variants), solves the trace-constrained regularized spectral program in
//! closed form for the log-determinant and entropy penalties, connects those
//! solutions to a Wishart/Dirichlet Bayesian model and to the PageRank
//! resolvent, and drives replicated Monte Carlo experiments measuring how
//! regularization improves estimation of the Laplacian pseudoinverse from
//! sampled edges.

pub mod bayes;
pub mod diffusion;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod matrix;
pub mod partition;
pub mod sampling;
pub mod sdp;
pub mod spectral;
pub mod stream;

pub use bayes::{theta_of, BayesModel, ThetaDecomp};
pub use error::{Error, Result};
pub use experiments::{
    relative_error, run_error_sweep, run_optimal_eta, run_prior_order_stats, run_theta_spectrum,
    ErrorNorm, ExperimentConfig, OptimalEtaRecord, SweepRecord,
};
pub use graph::{
    combinatorial_laplacian, edge_swap, generate_lattice, normalized_laplacian,
    normalized_laplacian_on_support, sqrt_degree_vector, Graph,
};
pub use matrix::SymMatrix;
pub use partition::{best_sweep_cut, conductance, local_partition, sweep_cut, sweep_cut_on, Cut};
pub use sampling::{sample_edges, sample_laplacian, SampleDraw};
pub use sdp::{
    gamma_for_nu, nu_for_gamma, pagerank_estimate, solve_entropy, solve_logdet,
    solve_numeric_oracle, solve_unregularized, Penalty, RegSolution,
};
pub use spectral::{
    complement_basis, eig_sym, frobenius_norm, matrix_exp_sym, norms, projector_complement,
    pseudodeterminant, pseudoinverse, spectral_norm, PseudoDet, Spectrum, DEFAULT_RANK_TOL,
};
