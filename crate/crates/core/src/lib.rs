//! Calabi-ansatz momentum profiles for complete negative-CSCK metrics on the
//! complement of the zero section in a projectivized line bundle, the fiber
//! Bergman integrals of the induced Kodaira embedding, and the diagonal of its
//! center of mass.
//!
//! The crate is organized bottom-up:
//!
//! * [`numerics`]: quadrature, root finding, golden section, finite differences.
//! * [`profile`]: the momentum profile, its completeness constant `c0` and the
//!   fiber area `tau0`.
//! * [`transforms`]: the coordinate chart `t(tau)`, its inverse, and the
//!   potential weight `g(tau)`.
//! * [`riemann_roch`]: dimensions, volumes, `sigma` and band multiplicities.
//! * [`fiber_integrals`]: per-band integrals `I_a`, Laplace approximations and
//!   neck-region moment expansions.
//! * [`center_of_mass`]: band sums, per-band center-of-mass entries and the
//!   balancing energy.

pub mod center_of_mass;
pub mod fiber_integrals;
pub mod numerics;
pub mod poly;
pub mod profile;
pub mod riemann_roch;
pub mod transforms;
pub mod verify;

pub use numerics::NumericsError;
pub use verify::VerificationRecord;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("{what} = {value} is outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },
    #[error("operation requires the profile at c = c0")]
    NotAtC0,
    #[error("{0}")]
    OutOfRegime(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, Error>;
