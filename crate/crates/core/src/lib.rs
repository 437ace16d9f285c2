//! Simulation and Monte Carlo verification of renewal shot noise processes
//! `X(t) = Σ_{S_k ≤ t} h(t − S_k)` and of their scaling limits.

pub mod laws;
pub mod limits;
pub mod quad;
pub mod renewal;
pub mod rng;
pub mod shotnoise;
pub mod special;
pub mod stable;
pub mod verify;
