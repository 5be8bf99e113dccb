//! Classical MDS and kernel embeddings of proximity data, with two ways of
//! adding new objects to an existing embedding:
//!
//! * **projection** ([`project`]) keeps the representation space and places
//!   the new object by least squares on its centered similarities;
//! * **restricted reconstruction** ([`restrict`]) re-solves the embedding
//!   problem for all objects with the original configuration held fixed,
//!   which adds a quartic term for the new object's own centered
//!   self-similarity `β`.
//!
//! A typical pipeline from squared dissimilarities:
//!
//! ```
//! use nalgebra::DVector;
//! use oosembed::prelude::*;
//!
//! let delta2 = DissimilarityMatrix::from_rows(&[
//!     vec![0.0, 100.0, 45.0, 45.0],
//!     vec![100.0, 0.0, 45.0, 45.0],
//!     vec![45.0, 45.0, 0.0, 64.0],
//!     vec![45.0, 45.0, 64.0, 0.0],
//! ])?;
//! let (x, _gram) = cmds_embed(&delta2, 2)?;
//! let a2 = DVector::from_vec(vec![386.0, 386.0, 457.0, 457.0]);
//! let (b, beta) = dissim_to_centered_sim(&delta2, &a2, 0.0)?;
//!
//! let projected = project_ols(&x, &b)?;
//! let restricted = solve_single(&OosProblem::new(x, b, beta)?, &SolveOptions::default())?;
//! assert!(projected.y_hat.norm() < 1e-8);
//! assert!((restricted.y_star.norm() - 368f64.sqrt()).abs() < 1e-8);
//! # Ok::<(), oosembed::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod oracle;
pub mod project;
pub mod proximity;
pub mod restrict;
pub mod spectral;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::project::{project_all, project_landmark, project_ols, project_spectral, Formula, ProjectionResult};
    pub use crate::proximity::{
        beta_shortcut, center_similarity, dissim_to_centered_sim, double_center, gamma_tilde_oos, tau_w,
        validate_dissimilarity, CenteredOosData, DissimilarityMatrix, OosRawBlock, SimilarityMatrix,
    };
    pub use crate::restrict::{
        arc, objective, objective_gradient, r_hat_squared, ridge_solve, solve_batch, solve_single, stress_oos,
        ArcTrace, BatchOptions, BatchProblem, EmbeddingResult, OosProblem, RidgePoint, SolveOptions, StressOptions,
    };
    pub use crate::spectral::{cmds_embed, symmetric_eigen, truncate_psd, Configuration, EigenSystem, TruncatedGram};
}
