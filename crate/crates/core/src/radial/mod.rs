//! Three-element radial spectral-element space, exact radial profile algebra,
//! and the per-degree toroidal and poloidal systems.

pub mod basis;
pub mod profile;
pub mod system;

pub use basis::{dminus, dplus, lgl_quadrature, RadialBasis, RadialFunction};
pub use profile::RadialProfile;
pub use system::{
    assemble_poloidal, assemble_toroidal, l_operator, solve_mode, ComponentSamples, FactoredModeSystem, ModeRhs,
    PoloidalSystem, RadialQuadrature, ToroidalSystem,
};
