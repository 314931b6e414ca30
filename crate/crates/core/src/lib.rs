pub mod diagnostics;
pub mod error;
pub mod profiles;
pub mod quadrature;
pub mod radial;
pub mod solenoidal;
pub mod snapshot;
pub mod sph;
pub mod stepper;
pub mod vsh;

pub use error::{DynamoError, Result};
