//! Multiclass classification with structured hyperplane arrangements.
//!
//! The library trains classifiers by optimally placing `m` hyperplanes via a
//! mixed-integer program solved with an embedded branch-and-bound engine.
//! Variants include a kernelized nonlinear model, a tree-structured model,
//! a prior MIP formulation kept for benchmarking, and a dynamic-clustering
//! matheuristic for larger datasets.

pub mod arrangement;
pub mod baselines;
pub mod bench;
pub mod classifier;
pub mod dataset;
pub mod heuristic;
pub mod kernel;
pub mod milp;
pub mod solver;

pub use classifier::{Classifier, FitConfig, FitMode};
pub use dataset::Dataset;
pub use milp::{AKind, MilpModel, SymmetryStrategy};
pub use solver::{SolveOptions, SolveResult, SolveStatus};
