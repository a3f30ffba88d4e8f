//! Certifier for the extreme-ray counting conditions that separate
//! finite-round LOCC from general separable measurements, together with the
//! protocol-tree machinery behind those conditions.
//!
//! ```
//! use locc_cert_core::{bounds::certify, generators::domino, Conclusion};
//!
//! let cert = certify(&domino()).unwrap();
//! assert_eq!(cert.sum_e, 14);
//! assert_eq!(cert.theorem2_bound, 13);
//! assert_eq!(cert.conclusion, Conclusion::NotFiniteRoundLocc);
//! ```

pub mod bounds;
pub mod cone;
pub mod error;
pub mod generators;
pub mod measurement;
pub mod operator;
pub mod tree;

pub use bounds::{certify, BoundCertificate, Conclusion};
pub use error::{Error, Result};
pub use measurement::{ProductPovmElement, SeparableMeasurement};
pub use operator::{HermitianOperator, Mode, Tolerances};
pub use tree::LoccTree;
