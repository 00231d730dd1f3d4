//! Hermitian Jacobi forms of degree 2 over the nine imaginary quadratic
//! orders of class number one.

pub mod arith;
pub mod characters;
pub mod cyclotomic;
pub mod elliptic;
pub mod io;
pub mod jacobi;
pub mod lattice;
pub mod pipeline;
pub mod ring;
