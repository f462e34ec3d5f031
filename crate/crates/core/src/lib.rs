//! Exact group arithmetic, controlled algebra, flow-space numerics and
//! certificates for groups of the form Z^n ⋊_A Z.

pub mod certifier;
pub mod controlled;
pub mod flowspace;
pub mod group;
pub mod hyperelementary;
pub mod json;
pub mod simplicial;
pub mod transfer;
