//! Fast-marching minimum-cost paths on 2D cost grids, with floating-point
//! precision audits of the solver.

pub mod eft;
pub mod rng;
pub mod scalar;
pub mod shadow;
pub mod grid;
pub mod fmm;
pub mod backtrace;
pub mod analysis;
