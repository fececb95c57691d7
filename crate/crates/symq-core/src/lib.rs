//! Exact symbolic toolkit for second-order ODEs: Lie point symmetries,
//! Jacobi last multipliers, Lagrangian reconstruction, Noether analysis, and
//! quantization into linear parabolic PDEs with closed-form reductions.
//!
//! Everything runs over exact Gaussian-rational arithmetic; there is no
//! floating point anywhere in the pipeline, and all comparisons are
//! structural equalities of canonical forms.

pub mod expr;
pub mod gaussian;
pub mod integrate;
pub mod lagrange;
pub mod linsolve;
pub mod multiplier;
pub mod noether;
pub mod ode;
pub mod parse;
pub mod poly;
pub mod quantize;
