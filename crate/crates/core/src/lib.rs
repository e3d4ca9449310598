//! Bosonic rotation codes under loss and dephasing.
//!
//! Build rotation-symmetric codes (trivial, binomial, cat, random), push them
//! through a loss-dephasing channel, find the channel-fidelity-optimal recovery by
//! semidefinite programming, and sweep families over noise grids.
//!
//! ```
//! use rotcode::codes::binomial_code;
//! use rotcode::noise::NoisePoint;
//! use rotcode::sweep::evaluate_point;
//!
//! let kitten = binomial_code(2, 1, 5).unwrap();
//! let rec = evaluate_point(&kitten, NoisePoint::new(1e-2, 0.0).unwrap()).unwrap();
//! assert!(rec.infidelity < 1e-3);
//! ```

pub mod cli;
pub mod codefile;
pub mod codes;
pub mod error;
pub mod haar;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod recovery;
pub mod sdp;
pub mod sweep;
pub mod wigner;

pub use error::{Error, Result};
