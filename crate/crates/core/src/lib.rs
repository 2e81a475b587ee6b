//! Box and observable distances between finite metric-measure spaces, with
//! the supporting tools: matrix distributions, isomorphism tests, Prokhorov
//! distance, almost-isometry witnesses and Lipschitz domination.
//!
//! ```
//! use mmbox::{box_distance, BoxOptions, FiniteMMSpace};
//!
//! let x = FiniteMMSpace::two_point(1.0, 0.5, 0.5).unwrap();
//! let y = FiniteMMSpace::two_point(2.0, 0.5, 0.5).unwrap();
//! let r = box_distance(&x, &y, 1.0, &BoxOptions::default()).unwrap();
//! assert_eq!(r.value, 0.5);
//! ```

pub mod box_distance;
pub mod clique;
pub mod coupling;
pub mod error;
pub mod flow;
pub mod io;
mod iso;
pub mod limits;
pub mod lipschitz;
pub mod matrix_dist;
pub mod random;
pub mod space;
pub mod suite;

/// Numerical tolerances.
pub mod tol {
    /// Metric invariants (symmetry, diagonal, triangle), relative to the
    /// largest distance when that exceeds one.
    pub const METRIC: f64 = 1e-12;
    /// Mass and marginal comparisons, relative to the total mass.
    pub const MASS: f64 = 1e-12;
    /// Ties between objective values.
    pub const VALUE: f64 = 1e-12;
    /// Deduplication of polytope vertices.
    pub const VERTEX: f64 = 1e-9;
}

pub use box_distance::{box_distance, box_pair, box_upper_from_witness, BoxMode, BoxOptions, BoxResult, SolveMode};
pub use coupling::{pullback_pair, Coupling, SemiDistancePair};
pub use error::{Error, Result};
pub use lipschitz::{hli_lambda, me_lambda, observable_distance, FunctionOnSpace, HMode, HlipOptions};
pub use matrix_dist::{exact_mu_r, isomorphism_search, reconstruction_check, MatrixDistribution};
pub use space::{DistMatrix, FiniteMMSpace, ValidationReport, Violation};
