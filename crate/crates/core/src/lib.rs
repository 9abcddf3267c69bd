//! Outer approximations of minimal attractor sets of polynomial ODEs.
#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks
pub mod certify;
pub mod detmax;
pub mod dynsys;
pub mod geometry;
pub mod pipeline;
pub mod poly;
pub mod sdp;
pub mod sim;
pub mod soscomp;
