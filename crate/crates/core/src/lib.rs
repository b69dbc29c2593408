//! Overconvergent de Rham cohomology with exact coefficients.

pub mod arith;
pub mod cechalex;
pub mod dagalg;
pub mod derham;
pub mod descent;
pub mod diffcalc;
pub mod functor;
