//! Quaternions as 2x2 complex matrices.
//!
//! A quaternion is stored by its two complex coordinates `(a, b)` and stands
//! for the matrix
//!
//! ```text
//!     [ a        i*conj(b) ]
//!     [ i*b      conj(a)   ]
//! ```
//!
//! Products, inverses and adjoints of such matrices stay in this form, so all
//! the Green's and Blue's function algebra can run on `(a, b)` pairs.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Determinants below this are treated as singular by [`Quaternion::inverse`].
pub const SINGULAR_DET: f64 = 1e-300;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub a: Complex64,
    pub b: Complex64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        a: Complex64::new(1.0, 0.0),
        b: Complex64::new(0.0, 0.0),
    };

    pub const fn new(a: Complex64, b: Complex64) -> Self {
        Self { a, b }
    }

    /// `diag(z, conj(z))`, the regulator-free point at which Green's functions are read off.
    pub const fn diag(z: Complex64) -> Self {
        Self {
            a: z,
            b: Complex64::new(0.0, 0.0),
        }
    }

    /// `|a|^2 + |b|^2`, the determinant of the embedded matrix.
    pub fn det(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }

    /// Matrix inverse `(conj(a), -b) / det`.
    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if !(det >= SINGULAR_DET) {
            return Err(Error::SingularQuaternion { det });
        }
        Ok(Self {
            a: self.a.conj() / det,
            b: -self.b / det,
        })
    }

    /// Hermitian adjoint; in coordinates `(conj(a), -b)`.
    pub fn adjoint(&self) -> Self {
        Self {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            a: self.a * s,
            b: self.b * s,
        }
    }

    /// The conjugate eigenvalue pair `Re(a) ± i sqrt(Im(a)^2 + |b|^2)`.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let im = (self.a.im * self.a.im + self.b.norm_sqr()).sqrt();
        (
            Complex64::new(self.a.re, im),
            Complex64::new(self.a.re, -im),
        )
    }

    /// Row-major entries of the embedded 2x2 matrix.
    pub fn to_matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.a, I * self.b.conj()], [I * self.b, self.a.conj()]]
    }

    /// Reads `(a, b)` off a 2x2 matrix, checking that it has quaternion form.
    pub fn from_matrix(m: [[Complex64; 2]; 2], tol: f64) -> Option<Self> {
        let a = m[0][0];
        let b = -I * m[1][0];
        let q = Self { a, b };
        let back = q.to_matrix();
        let ok = (0..2).all(|i| (0..2).all(|j| (back[i][j] - m[i][j]).norm() <= tol));
        ok.then_some(q)
    }

    /// Max-norm distance between the embedded matrices.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = *self - *other;
        // |a| and |b| are the entry moduli of the 2x2 form.
        d.a.norm().max(d.b.norm())
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            a: self.a + rhs.a,
            b: self.b + rhs.b,
        }
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            a: self.a - rhs.a,
            b: self.b - rhs.b,
        }
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            a: -self.a,
            b: -self.b,
        }
    }
}

impl Mul for Quaternion {
    type Output = Self;
    /// Matrix product in coordinates:
    /// `(a1 a2 - conj(b1) b2, b1 a2 + conj(a1) b2)`.
    fn mul(self, rhs: Self) -> Self {
        Self {
            a: self.a * rhs.a - self.b.conj() * rhs.b,
            b: self.b * rhs.a + self.a.conj() * rhs.b,
        }
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, rhs: Quaternion) -> Quaternion {
        rhs.scale(self)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a = {}, b = {})", self.a, self.b)
    }
}
