//! Spectral theory of the fourth-order periodic operator
//! H = d⁴/dt⁴ + (d/dt) p (d/dt) + q on the line with 1-periodic p, q.

pub mod asymptotics;
pub mod coeffs;
pub mod discriminants;
pub mod error;
pub mod monodromy;
pub mod quadrature;
pub mod reference;
pub mod spectrum;
pub mod zeros;
pub mod picard;
pub mod verify;
mod tableau;

pub use coeffs::{CoefficientSet, TrigSeries};
pub use discriminants::DiscriminantBundle;
pub use error::{Error, Result};
pub use monodromy::{integrate_monodromy, IntegratorOptions, MonodromyResult};
pub use reference::SpectralPoint;
