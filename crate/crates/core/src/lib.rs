//! Online stochastic bin packing for scaled-Bernoulli items.
//!
//! An item `Ber(p, s)` occupies `s` of a unit bin with probability `p` and
//! nothing otherwise. A packing is *viable* when every bin overflows with
//! probability at most `alpha`. This crate provides:
//!
//! * [`prob`]: Poisson tails, lattice load distributions and overflow oracles;
//! * [`packers`]: RPAP (Poisson-approximation packing with proven ratio),
//!   FFR (First Fit on an ε-rounded lattice) and RPAPC (RPAP grouping with
//!   either fit test);
//! * [`analysis`]: viability verification, approximation-bound bookkeeping,
//!   metrics and the adversarial Any-Fit instance;
//! * [`instances`]: dataset generators, trace fitting and JSON I/O;
//! * [`experiment`]: the multi-seed sweep harness behind the CLI.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod instances;
pub mod packers;
pub mod prob;

pub use error::{Error, Result};
pub use instances::Instance;
pub use packers::{
    pack_ffr, pack_rpap, pack_rpapc, Algorithm, Bin, GroupKind, GroupTag, Packing, Params,
};
pub use prob::{Item, LatticeDist, OverflowEstimate};
