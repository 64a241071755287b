//! Lattices built from linear codes (Constructions A, D, π_A, π_D and A over
//! quadratic integers) and a compute-and-forward simulator on top of them.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod algebra;
pub mod cfsim;
pub mod cli;
pub mod codes;
pub mod lattices;
