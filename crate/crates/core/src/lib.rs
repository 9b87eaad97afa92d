//! Multivariate generalized Pareto distributions.
pub mod analysis;
pub mod batch;
pub mod density;
pub mod error;
pub mod estimate;
pub mod ext;
pub mod family;
pub mod fit;
pub mod limits;
pub mod matrix;
pub mod optim;
pub mod oracle;
pub mod params;
pub mod quad;
pub mod repr;
pub mod rng;
pub mod stdf;

pub use error::{Error, Result};
pub use estimate::Estimate;
pub use matrix::Matrix;
pub use params::{GevParams, GpParams, MarginalEndpoints};
pub use stdf::{DNormGenerator, StdfModel};
pub use batch::SampleBatch;
pub use repr::{GeneratorKind, GeneratorLaw, ModelSpec, SpectralLaw};
pub use family::VectorFamily;
