//! Finite relational structures, boundary-defined ages, lazily generated
//! homogeneous structures, and the partition machinery built on top of them:
//! a type/rank calculus, bundles, a labelling game on sort posets, an
//! indivisibility classifier and a monochromatic-copy game.
//!
//! Everything operates at desk scale: ages are handled through membership
//! oracles and size-bounded enumeration, ranks through bounded membership
//! vectors, and every verdict that approximates an infinite statement is
//! stamped with the bounds it was computed at.

pub mod age;
pub mod bundle;
pub mod canon;
pub mod error;
pub mod files;
pub mod form;
pub mod game;
pub mod generic;
pub mod mho;
pub mod oracle;
pub mod par;
pub mod partition;
pub mod report;
pub mod search;
pub mod structure;
pub mod types;

pub use error::{Error, Result};
pub use structure::{FinStructure, Instance, Mode, RelSymbol, Signature};

/// Version tag embedded in every report for replayability.
pub const VERSION_TAG: &str = concat!("homog-", env!("CARGO_PKG_VERSION"));
