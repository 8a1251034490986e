//! Small dense complex linear algebra helpers and the JSON encodings used for
//! complex scalars (`[re, im]`) and complex matrices (rows of `[re, im]`).

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type CMatrix = DMatrix<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest singular value of a 2×2 complex matrix, in closed form. Goes
/// through the largest eigenvalue of `M*M`, which has no cancellation for
/// nearly unitary `M`.
pub fn spectral_norm(m: &Mat2) -> f64 {
    let col = |j: usize| [m[(0, j)], m[(1, j)]];
    let (c0, c1) = (col(0), col(1));
    let p = c0[0].norm_sqr() + c0[1].norm_sqr();
    let r = c1[0].norm_sqr() + c1[1].norm_sqr();
    let q = c0[0].conj() * c1[0] + c0[1].conj() * c1[1];
    ((p + r) / 2.0 + (((p - r) / 2.0).powi(2) + q.norm_sqr()).sqrt()).sqrt()
}

/// `max |(M M*)_ij - δ_ij|`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    if n != m.ncols() {
        return f64::INFINITY;
    }
    let prod = m * m.adjoint();
    max_abs(&(prod - CMatrix::identity(n, n)))
}

/// Shortest round-trip formatting, in exponent form for very small or large
/// magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Frobenius norm.
pub fn fro(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Serde adapter: complex number as `[re, im]`.
pub mod serde_c64 {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Pair([f64; 2]),
            Real(f64),
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Pair([re, im]) => C64::new(re, im),
            Repr::Real(re) => C64::new(re, 0.0),
        })
    }
}

/// Serde adapter: complex matrix as a list of rows of `[re, im]` entries.
pub mod serde_cmatrix {
    use super::{CMatrix, C64};
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| [m[(i, j)].re, m[(i, j)].im])
                    .collect()
            })
            .collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>], ncols_if_empty: usize) -> Result<CMatrix, String> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(ncols_if_empty, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("ragged matrix rows".into());
        }
        Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
            C64::new(rows[i][j][0], rows[i][j][1])
        }))
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows, 0).map_err(D::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(m: &Option<CMatrix>, s: S) -> Result<S::Ok, S::Error> {
            m.as_ref().map(to_rows).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CMatrix>, D::Error> {
            let rows = Option::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
            rows.map(|r| from_rows(&r, 0).map_err(D::Error::custom))
                .transpose()
        }
    }
}
