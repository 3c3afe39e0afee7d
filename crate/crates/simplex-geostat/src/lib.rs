//! Compositional data analysis and geostatistics on the simplex:
//! log-ratio transforms, quasi-arithmetic and median-type means, block
//! covariance models, kriging of the mean with optional nonnegativity or
//! compositional constraints, and an empirical axiom-checking harness.

pub mod axioms;
pub mod cli;
pub mod covariance;
pub mod datagen;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod kriging;
pub mod means;
pub mod simplex;
pub mod transforms;

pub use covariance::{
    build_block_matrix, correlation_matrix, validate_model, BlockCovMatrix, CorrelationFamily,
    CorrelationFunction, CovModel, LmcTerm, ValidityReport,
};
pub use error::{Error, Result};
pub use kriging::{
    cokrige_means, kkt_residuals, krige_mean_single, nonneg_cokrige_means, nonneg_krige_mean,
    walvoort_compositional_krige, weights_equal_across_variables, CompositionalKrige,
    KrigingSolution, KrigingWeights,
};
pub use means::{MeanEstimate, MeanMethod};
pub use simplex::{
    amalgamate, closure, half_taxi_distance, Composition, CompositionalDataset, Grouping,
    RealSimplexPoint, SiteSet,
};
pub use transforms::{ilr, ilr_inv, quasi_arithmetic_mean, GeneratingFunction, IlrCoordinates};
