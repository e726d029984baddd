//! Riemannian proximal point methods for composite nonconvex problems
//! `f = g1 + g2 − h` on the manifold of symmetric positive definite
//! matrices.

pub mod harness;
pub mod manifold;
pub mod problems;
pub mod solvers;
