//! Approximate survivable network design without an external LP solver.
//!
//! The pipeline is iterative rounding ([`rounding`]) over residual covering LPs,
//! each solved by a multiplicative-weights method ([`covering`]) whose
//! shortest-row oracle ([`row_oracle`]) is built from Gomory-Hu trees
//! ([`ghtree`]). [`reference`] holds brute-force and exact-rational oracles
//! used to audit every stage.

pub mod audit;
pub mod covering;
pub mod error;
pub mod ghtree;
pub mod graph;
pub mod io;
pub mod numeric;
pub mod reference;
pub mod requirements;
pub mod rounding;
pub mod row_oracle;

pub use error::{Error, Result};
pub use graph::{Cut, Edge, EdgeId, EdgeWeights, Graph, VertexId};
pub use requirements::{ProperFunction, RequirementMatrix};
pub use rounding::{solve, SolveConfig, SolveReport};
