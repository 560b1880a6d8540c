//! Real orthonormal spherical harmonics.
//!
//! `Y_{l,0} = N_{l,0} P_l(cos θ)`, and for `m ≠ 0`
//! `Y_{l,m} = √2 N_{l,|m|} P_l^{|m|}(cos θ) · cos(mφ)` (m > 0) or `sin(|m|φ)` (m < 0).
//! The normalized Legendre functions `N_{l,m} P_l^m` are generated by the
//! standard three-term recurrence in `l` for fixed `m`, which never forms
//! the factorial ratios explicitly.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Eigenvalue `l(l+1)` of `−Δ` on the unit sphere.
pub fn eigenvalue(l: usize) -> f64 {
    let l = l as f64;
    l * (l + 1.0)
}

/// Position of `(l, m)` in a degree-ordered coefficient vector.
#[inline]
pub fn index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Real coefficients `a_{l,m}`, `0 ≤ l ≤ L`, `−l ≤ m ≤ l`, stored by degree.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoeffs {
    degree: usize,
    coeffs: Vec<f64>,
}

impl HarmonicCoeffs {
    pub fn new(degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let n = (degree + 1) * (degree + 1);
        if coeffs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "harmonic coefficients must be finite".into(),
            ));
        }
        Ok(HarmonicCoeffs { degree, coeffs })
    }

    pub fn zeros(degree: usize) -> Self {
        HarmonicCoeffs {
            degree,
            coeffs: vec![0.0; (degree + 1) * (degree + 1)],
        }
    }

    /// The single basis function `Y_{l,m}` as an expansion of degree `degree`.
    pub fn unit(degree: usize, l: usize, m: i64) -> Result<Self> {
        check_index(l, m)?;
        if l > degree {
            return Err(Error::InvalidParameter(format!(
                "degree {l} above cap {degree}"
            )));
        }
        let mut c = Self::zeros(degree);
        c.coeffs[index(l, m)] = 1.0;
        Ok(c)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.coeffs[index(l, m)]
    }

    /// Euclidean norm of the coefficient vector, equal to the L² norm of the
    /// expansion on the sphere.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Multiplies every degree-`l` block by `factor(l)`.
    pub fn map_degrees(&self, factor: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.degree {
            let f = factor(l);
            for c in &mut out.coeffs[l * l..(l + 1) * (l + 1)] {
                *c *= f;
            }
        }
        out
    }

    /// `alpha·self + beta·other` over the common degree range.
    pub fn axpby(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        let degree = self.degree.max(other.degree);
        let mut out = Self::zeros(degree);
        for (i, c) in self.coeffs.iter().enumerate() {
            out.coeffs[i] += alpha * c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out.coeffs[i] += beta * c;
        }
        out
    }

    /// Value of the expansion at a unit point, using a caller-provided
    /// scratch buffer of length `len()`.
    #[inline]
    pub fn eval_with(&self, x: Vec3, scratch: &mut [f64]) -> f64 {
        eval_all_into(self.degree, x, scratch);
        scratch.iter().zip(&self.coeffs).map(|(y, c)| y * c).sum()
    }
}

fn check_index(l: usize, m: i64) -> Result<()> {
    if m.unsigned_abs() as usize > l {
        return Err(Error::InvalidParameter(format!(
            "|m| = {} exceeds l = {l}",
            m.abs()
        )));
    }
    Ok(())
}

/// Writes `Y_{l,m}(x)` for all `l ≤ degree` into `out` (length `(degree+1)²`).
pub fn eval_all_into(degree: usize, x: Vec3, out: &mut [f64]) {
    debug_assert_eq!(out.len(), (degree + 1) * (degree + 1));
    let z = x[2].clamp(-1.0, 1.0);
    let s = x[0].hypot(x[1]);
    let (cos_phi, sin_phi) = if s > 0.0 {
        (x[0] / s, x[1] / s)
    } else {
        (1.0, 0.0)
    };
    let sqrt2 = std::f64::consts::SQRT_2;

    // q_mm = N_{m,m} P_m^m(z), advanced along the diagonal
    let mut q_mm = 1.0 / (4.0 * PI).sqrt();
    let (mut cos_m, mut sin_m) = (1.0, 0.0);
    for m in 0..=degree {
        if m > 0 {
            q_mm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
            let c = cos_m * cos_phi - sin_m * sin_phi;
            sin_m = sin_m * cos_phi + cos_m * sin_phi;
            cos_m = c;
        }
        let mf = m as f64;
        let mut put = |l: usize, q: f64| {
            if m == 0 {
                out[index(l, 0)] = q;
            } else {
                out[index(l, m as i64)] = sqrt2 * q * cos_m;
                out[index(l, -(m as i64))] = sqrt2 * q * sin_m;
            }
        };
        put(m, q_mm);
        if m == degree {
            break;
        }
        let mut q_prev = q_mm;
        let mut q = (2.0 * mf + 3.0).sqrt() * z * q_mm;
        put(m + 1, q);
        for l in m + 2..=degree {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            let next = a * (z * q - b * q_prev);
            q_prev = q;
            q = next;
            put(l, q);
        }
    }
}

/// All harmonics up to `degree` at `x`.
pub fn eval_all(degree: usize, x: Vec3) -> Vec<f64> {
    let mut out = vec![0.0; (degree + 1) * (degree + 1)];
    eval_all_into(degree, x, &mut out);
    out
}

/// Real orthonormal spherical harmonic `Y_{l,m}` at the unit point `x`.
pub fn eval_real_sh(l: usize, m: i64, x: Vec3) -> Result<f64> {
    check_index(l, m)?;
    let r = crate::vec3::norm(x);
    if (r - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!(
            "point {x:?} is not on the unit sphere"
        )));
    }
    Ok(eval_all(l, x)[index(l, m)])
}

/// Evaluates `Σ a_{l,m} Y_{l,m}` at each point.
pub fn eval_expansion(coeffs: &HarmonicCoeffs, points: &[Vec3]) -> Vec<f64> {
    let mut scratch = vec![0.0; coeffs.len()];
    points
        .iter()
        .map(|&x| coeffs.eval_with(x, &mut scratch))
        .collect()
}
