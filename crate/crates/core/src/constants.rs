//! Closed-form reference values used by reports and the self-test. Call
//! sites look values up here instead of inlining them.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;

#[derive(Clone, Copy, Debug)]
pub struct Reference {
    pub name: &'static str,
    pub value: f64,
    /// Where the value comes from.
    pub source: &'static str,
}

/// `h_FS(P^3) = 2 (1/2 + 1/3 + 1/4)`.
pub fn fs_height_p3() -> BigRational {
    BigRational::new(BigInt::from(13), BigInt::from(6))
}

/// `h_FS(P^3) / (4 * 1)`.
pub fn fs_normalized_height_p3() -> BigRational {
    BigRational::new(BigInt::from(13), BigInt::from(24))
}

pub const FS_HEIGHT_P3: Reference = Reference {
    name: "fs_height_p3",
    value: 13.0 / 6.0,
    source: "Fubini-Study height of P^3, (n+1)/2 * sum_{j=2}^{n+1} 1/j at n = 3",
};

pub const FS_NORMALIZED_HEIGHT_P3: Reference = Reference {
    name: "fs_normalized_height_p3",
    value: 13.0 / 24.0,
    source: "Fubini-Study height of P^3 divided by (dim + 1) * degree = 4",
};

pub const VERONESE_FS_HEIGHT: Reference = Reference {
    name: "veronese_fs_height",
    value: 1.5 + PI / 2.0,
    source: "Fubini-Study height of a torsion translate of the twisted cubic in P^3",
};

pub const VERONESE_FS_NORMALIZED_HEIGHT: Reference = Reference {
    name: "veronese_fs_normalized_height",
    value: 0.25 + PI / 12.0,
    source: "the twisted cubic height divided by (dim + 1) * degree = 6",
};

pub const TABLE: [Reference; 4] = [
    FS_HEIGHT_P3,
    FS_NORMALIZED_HEIGHT_P3,
    VERONESE_FS_HEIGHT,
    VERONESE_FS_NORMALIZED_HEIGHT,
];

/// The known Fubini-Study height of a monomial curve, if tabulated.
pub fn curve_reference(exponents: &[u64], fubini_study: bool) -> Option<Reference> {
    match (exponents, fubini_study) {
        ([0, 1, 2, 3], true) => Some(VERONESE_FS_HEIGHT),
        _ => None,
    }
}
