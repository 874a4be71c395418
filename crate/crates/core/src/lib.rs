//! Nearest-neighbour trees on spheres, tori and the constant metric, their
//! sibling statistics, and numerical evaluation of the limiting mean sibling
//! count `S_d`.
//!
//! * [`spaces`]: metric spaces and seeded uniform sampling.
//! * [`nnt`]: tree builders (reference and accelerated).
//! * [`stats`]: sibling and degree statistics.
//! * [`geomvol`]: ball volumes, the kernel `F`, the lens ratio and the
//!   inequality checkers built on them.
//! * [`quadrature`]: adaptive Gauss–Kronrod integration of `S_d`, `T₊`, `T₋`.
//! * [`locallimit`]: the Poisson nearest-older-neighbour tree.

pub mod error;
pub mod geomvol;
pub mod locallimit;
pub mod nnt;
pub mod quadrature;
pub mod spaces;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use geomvol::{DimConstants, LensGeometry};
pub use locallimit::{LocalEstimate, PoissonSample};
pub use nnt::LabelledTree;
pub use quadrature::QuadResult;
pub use spaces::{Point, Space};
pub use stats::TreeStats;
