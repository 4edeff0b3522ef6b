//! Finite-section laboratory for Smale spaces.
//!
//! Two exact backends (subshifts of finite type and hyperbolic toral
//! automorphisms) share one contract. On top of them sit the enlarged Markov
//! covers, Lipschitz partitions of unity, aperiodic homoclinic samples, the
//! regular representation of the stable and unstable groupoids, and the
//! averaging isometries into `ℓ²(X^h) ⊗ ℓ²(X^h)`.

pub mod axioms;
pub mod config;
pub mod cover;
pub mod dynamics;
pub mod error;
pub mod fredholm;
pub mod groupoid;
pub mod linalg;
pub mod markov;
pub mod points;
pub mod pou;
pub mod quad;
pub mod run;
pub mod sample;
pub mod sft;
pub mod torus;
pub mod verify;
pub mod word;

pub use dynamics::{Constants, HomoclinicSystem, SmaleSpace};
pub use error::{Error, Result};
pub use fredholm::IsometryFamily;
pub use groupoid::{Bisection, Orientation, ValueFn};
pub use linalg::{ColumnMap, SparseOperator, Vector};
pub use markov::{Cell, CellHit, Coding, CoveredSystem};
pub use pou::PartitionOfUnity;
pub use quad::QuadNumber;
pub use sample::AperiodicSample;
pub use sft::{PeriodicOrbit, Sft, SftModel};
pub use torus::{Torus, TorusCover, TorusModel, TorusPoint};
pub use word::BiSequence;
