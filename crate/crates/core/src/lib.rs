//! Relative train track maps and the objects built from them: Whitehead
//! graphs, lamination languages, relative currents and simplicial Grushko trees.

pub mod error;
pub mod freegroup;
pub mod graphmap;
pub mod whitehead;
pub mod lamination;
pub mod currents;
pub mod reltrees;

pub use error::{Error, Result};
