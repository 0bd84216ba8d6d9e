pub mod bounds;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod neumann;
pub mod noise;
pub mod oracle;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, DenseVector};
pub use rng::RandomSource;
