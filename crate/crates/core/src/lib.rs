//! Exact dyadic multifractal toolkit.
//!
//! Geometry lives on `[0,1]^d` with the sup metric; all cube and ball
//! arithmetic is exact over big rationals. The crate is `no_std` and only
//! needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cantor;
pub mod constructions;
pub mod dyadic;
pub mod error;
pub mod measure;
pub mod num;
pub mod spectra;
pub mod transport;

pub use dyadic::{CubeIndex, Point, SupBall};
pub use error::{Error, Result};
pub use measure::{AtomicMeasure, Mass, MassMode, MassTree};
pub use num::Rational;
