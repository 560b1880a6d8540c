//! Exact spectral solutions in the harmonic basis.
//!
//! Every `Y_{l,m}` is an eigenfunction of `κ² − Δ` with eigenvalue
//! `μ_l = κ² + l(l+1)`, so both the exact solution operator and its sinc
//! quadrature act degree by degree as scalar factors. The quadrature factor
//! is computed with the same recursion split and node arithmetic as the
//! finite element path, which isolates the quadrature error.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fractional::{sinc_nodes, BetaSplit};
use crate::harmonics::{eigenvalue, HarmonicCoeffs};

/// `μ^{-β}`
pub fn exact_factor(mu: f64, beta: f64) -> f64 {
    mu.powf(-beta)
}

/// Quadrature counterpart of [`exact_factor`]: `μ^{-⌊β⌋}` times the sinc
/// approximation of `μ^{-{β}}`; exact power for integer `β`.
pub fn sinc_factor(mu: f64, beta: f64, k: f64) -> Result<f64> {
    let split = BetaSplit::new(beta);
    if split.is_integer() {
        return Ok(mu.powi(-(split.integer as i32)));
    }
    let q = sinc_nodes(split.fraction, k)?;
    // κ is only used to split μ into c0 and c1; any split with κ² ≤ μ works.
    let kappa = mu.sqrt();
    Ok(mu.powi(-(split.integer as i32)) * q.scalar_factor(kappa, 0.0))
}

/// Exact solution coefficients `a_{l,m} (κ² + l(l+1))^{-β}`.
pub fn spectral_solution(coeffs: &HarmonicCoeffs, beta: f64, kappa: f64) -> HarmonicCoeffs {
    let kappa2 = kappa * kappa;
    coeffs.map_degrees(|l| exact_factor(kappa2 + eigenvalue(l), beta))
}

/// Coefficients of the quadrature-based solution.
pub fn spectral_sinc_apply(
    coeffs: &HarmonicCoeffs,
    beta: f64,
    kappa: f64,
    k: f64,
) -> Result<HarmonicCoeffs> {
    let kappa2 = kappa * kappa;
    let factors = (0..=coeffs.degree())
        .map(|l| sinc_factor(kappa2 + eigenvalue(l), beta, k))
        .collect::<Result<Vec<f64>>>()?;
    Ok(coeffs.map_degrees(|l| factors[l]))
}

/// For each step `k`, the largest relative factor error over `l ≤ degree`.
pub fn quadrature_error_curve(
    beta: f64,
    kappa: f64,
    degree: usize,
    ks: &[f64],
) -> Result<Vec<f64>> {
    if BetaSplit::new(beta).is_integer() {
        return Err(Error::InvalidParameter(format!(
            "beta = {beta} is an integer: the quadrature is bypassed and has no error"
        )));
    }
    let kappa2 = kappa * kappa;
    ks.iter()
        .map(|&k| {
            (0..=degree).try_fold(0.0f64, |worst, l| {
                let mu = kappa2 + eigenvalue(l);
                let exact = exact_factor(mu, beta);
                let approx = sinc_factor(mu, beta, k)?;
                Ok(worst.max((approx - exact).abs() / exact))
            })
        })
        .collect()
}

/// Writes `k,max_rel_error` rows.
pub fn write_quadrature_csv<W: Write>(mut w: W, ks: &[f64], errors: &[f64]) -> std::io::Result<()> {
    writeln!(w, "k,max_rel_error")?;
    for (k, e) in ks.iter().zip(errors) {
        writeln!(w, "{k},{e:e}")?;
    }
    Ok(())
}
