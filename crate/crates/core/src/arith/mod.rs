//! Exact arithmetic backends: integer factorization, finite fields and their
//! polynomial rings, and integer Hermite normal forms.

pub mod factor;
pub mod fpoly;
pub mod gf;
pub mod hnf;

pub use factor::{euler_phi, factor_biguint, factor_u64, is_prime_u64, mobius};
pub use fpoly::Poly;
pub use gf::FiniteField;
pub use hnf::Hnf;
