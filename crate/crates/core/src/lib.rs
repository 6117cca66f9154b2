//! Weighted metric nearness in the l1, l2 and l-infinity norms.
//!
//! Given a dissimilarity matrix `X~` and positive weights `W`, find the
//! matrix `X` satisfying every triangle inequality that minimizes
//! `|W o (X - X~)|_p`. Unknowns are stored as `y = trivec(X - X~)`.
//!
//! The main entry point is [`dcgm_solve`]: constraint generation over a
//! working set of triangle rows, each reduced problem solved by a proximal
//! augmented Lagrangian method with semismooth Newton inner solves.
//! [`dykstra`] provides the cyclic projection baseline.

pub mod config;
pub mod constraint;
pub mod dcgm;
pub mod dykstra;
pub mod error;
pub mod index;
pub mod ingest;
pub mod palm;
pub mod prox;
pub mod report;
pub mod ssn;
pub mod triop;
pub mod types;

pub use config::{SolverConfig, SsnConfig};
pub use constraint::{ConstraintRecord, ConstraintSet};
pub use dcgm::{certify, dcgm_solve, Certificate, DcgmSolution};
pub use dykstra::{build_system, dykstra, dykstra_solve, DykstraOptions, DykstraReport, DykstraSolution, HalfSpaceSystem};
pub use error::{Error, Result};
pub use ingest::{build_instance, gen_random_instance, largest_component, load_edge_list, Graph, InstanceOptions};
pub use report::SolveReport;
pub use types::{Norm, ProblemInstance, SparseTriVec, TriVec};
