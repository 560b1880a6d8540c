//! Lifted L² errors, Monte Carlo strong error studies and rate fits.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fractional::{sample_noise, ModelParams, Sampler};
use crate::harmonics::HarmonicCoeffs;
use crate::lift::LiftedQuadrature;
use crate::mesh::{icosphere, TriangleMesh};
use crate::noise::{interpolate_noise, LiftedProjector};
use crate::sfem::{FemField, FemSpace};
use crate::spectral::spectral_solution;

/// Quadrature-based `‖reference − fem^ℓ‖_{L²(S²)}` on one mesh.
#[derive(Debug, Clone)]
pub struct ErrorMeter {
    mesh: Arc<TriangleMesh>,
    quadrature: LiftedQuadrature,
}

impl ErrorMeter {
    pub fn new(mesh: Arc<TriangleMesh>, order: u32) -> Result<Self> {
        let quadrature = LiftedQuadrature::new(&mesh, order)?;
        Ok(ErrorMeter { mesh, quadrature })
    }

    pub fn quadrature(&self) -> &LiftedQuadrature {
        &self.quadrature
    }

    fn check(&self, fem: &FemField) -> Result<()> {
        if Arc::ptr_eq(fem.mesh(), &self.mesh) || **fem.mesh() == *self.mesh {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    /// Squared lifted L² distance between the expansion and the field.
    pub fn squared_error(&self, fem: &FemField, reference: &HarmonicCoeffs) -> Result<f64> {
        self.check(fem)?;
        let mut scratch = vec![0.0; reference.len()];
        Ok(self
            .quadrature
            .points()
            .iter()
            .map(|q| {
                let d = reference.eval_with(q.sphere, &mut scratch)
                    - fem.eval_in_triangle(q.triangle, &q.bary);
                q.weight * d * d
            })
            .sum())
    }

    pub fn error(&self, fem: &FemField, reference: &HarmonicCoeffs) -> Result<f64> {
        self.squared_error(fem, reference).map(f64::sqrt)
    }

    /// Lifted L² norm of a FEM field.
    pub fn norm(&self, fem: &FemField) -> Result<f64> {
        self.error(fem, &HarmonicCoeffs::zeros(0))
    }

    /// Gram matrix `E_ij = ∫ (R_i − U_i^ℓ)(R_j − U_j^ℓ) dA` of the error
    /// responses, so that the squared error for coefficients `a` is `aᵀ E a`.
    pub fn error_gram(&self, responses: &[(HarmonicCoeffs, FemField)]) -> Result<Vec<Vec<f64>>> {
        for (_, u) in responses {
            self.check(u)?;
        }
        let n = responses.len();
        let mut gram = vec![vec![0.0; n]; n];
        let mut scratch: Vec<Vec<f64>> =
            responses.iter().map(|(r, _)| vec![0.0; r.len()]).collect();
        let mut d = vec![0.0; n];
        for q in self.quadrature.points() {
            for (j, (r, u)) in responses.iter().enumerate() {
                d[j] = r.eval_with(q.sphere, &mut scratch[j])
                    - u.eval_in_triangle(q.triangle, &q.bary);
            }
            for i in 0..n {
                let wi = q.weight * d[i];
                for j in 0..=i {
                    gram[i][j] += wi * d[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                gram[j][i] = gram[i][j];
            }
        }
        Ok(gram)
    }
}

/// Lifted L² error of `fem` against the spectral `reference`.
pub fn lifted_l2_error(
    mesh: &Arc<TriangleMesh>,
    fem: &FemField,
    reference: &HarmonicCoeffs,
    order: u32,
) -> Result<f64> {
    ErrorMeter::new(Arc::clone(mesh), order)?.error(fem, reference)
}

/// How per-sample errors are computed in a Monte Carlo study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Linear response when it needs fewer pipeline runs than samples.
    #[default]
    Auto,
    /// Runs the full pipeline for every sample.
    PerSample,
    /// Runs the pipeline once per noise basis function and evaluates each
    /// sample's error as a quadratic form in its coefficients. The pipeline
    /// is linear in the noise, so the per-sample errors coincide with the
    /// per-sample route up to rounding.
    LinearResponse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    /// Lifted quadrature order used to integrate errors.
    pub error_order: u32,
    pub strategy: Strategy,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            error_order: 5,
            strategy: Strategy::Auto,
        }
    }
}

/// One mesh level of a strong error study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub h_inball: f64,
    pub h_diam: f64,
    pub n_vertices: usize,
    /// Root mean square of the per-sample lifted L² errors.
    pub strong_error: f64,
    /// Standard error of the mean squared error, propagated to the root.
    pub standard_error: f64,
    /// `log₂(e_{i−1}/e_i)` relative to the previous row.
    pub pairwise_rate: Option<f64>,
    pub sample_errors: Vec<f64>,
}

/// Per-sample lifted errors on one level, in sample order.
pub fn level_sample_errors(
    space: &FemSpace,
    params: &ModelParams,
    n_samples: usize,
    base_seed: u64,
    options: &StudyOptions,
) -> Result<Vec<f64>> {
    let sampler = Sampler::new(space.clone(), *params)?;
    let meter = ErrorMeter::new(Arc::clone(space.mesh()), options.error_order)?;
    let n_basis = (params.degree + 1) * (params.degree + 1);
    let linear = match options.strategy {
        Strategy::Auto => n_basis < n_samples,
        Strategy::PerSample => false,
        Strategy::LinearResponse => true,
    };
    if linear {
        let responses = (0..n_basis)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; n_basis];
                e[j] = 1.0;
                let noise = HarmonicCoeffs::new(params.degree, e)?;
                let (_, fem) = sampler.solve(&noise)?;
                Ok((spectral_solution(&noise, params.beta, params.kappa), fem))
            })
            .collect::<Result<Vec<_>>>()?;
        let gram = meter.error_gram(&responses)?;
        Ok((0..n_samples as u64)
            .map(|i| {
                let a = sample_noise(params.degree, i, base_seed);
                let a = a.as_slice();
                let q: f64 = (0..n_basis)
                    .map(|r| a[r] * (0..n_basis).map(|c| gram[r][c] * a[c]).sum::<f64>())
                    .sum();
                q.max(0.0).sqrt()
            })
            .collect())
    } else {
        (0..n_samples as u64)
            .into_par_iter()
            .map(|i| {
                let s = sampler.sample(i, base_seed)?;
                meter.error(&s.fem, &s.spectral)
            })
            .collect()
    }
}

fn rms_with_standard_error(errors: &[f64]) -> (f64, f64) {
    let n = errors.len() as f64;
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let mean = sq.iter().sum::<f64>() / n;
    let se_mean = if errors.len() > 1 {
        let var = sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let rms = mean.sqrt();
    // d√m = dm / (2√m)
    let se = if rms > 0.0 {
        se_mean / (2.0 * rms)
    } else {
        0.0
    };
    (rms, se)
}

/// Strong error `√(mean of squared lifted errors)` per mesh level. Sample `i`
/// uses the same noise on every level.
pub fn monte_carlo_strong_error(
    params: &ModelParams,
    levels: &[u32],
    n_samples: usize,
    base_seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    monte_carlo_strong_error_with(
        params,
        levels,
        n_samples,
        base_seed,
        &StudyOptions::default(),
    )
}

pub fn monte_carlo_strong_error_with(
    params: &ModelParams,
    levels: &[u32],
    n_samples: usize,
    base_seed: u64,
    options: &StudyOptions,
) -> Result<Vec<ConvergenceRow>> {
    params.validate()?;
    check_levels(levels)?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter(
            "at least one sample is required".into(),
        ));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for &level in levels {
        let space = FemSpace::new(Arc::new(icosphere(level)?));
        let errors = level_sample_errors(&space, params, n_samples, base_seed, options)?;
        let (strong_error, standard_error) = rms_with_standard_error(&errors);
        let h = space.mesh().mesh_size();
        let pairwise_rate = rows
            .last()
            .map(|prev| (prev.strong_error / strong_error).log2());
        rows.push(ConvergenceRow {
            level,
            h_inball: h.h_inball,
            h_diam: h.h_diam,
            n_vertices: space.dim(),
            strong_error,
            standard_error,
            pairwise_rate,
            sample_errors: errors,
        });
    }
    Ok(rows)
}

fn check_levels(levels: &[u32]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidParameter("no mesh levels given".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "mesh levels must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidParameter(
            "a slope needs at least two points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameter(
            "abscissae are all identical".into(),
        ));
    }
    Ok(sxy / sxx)
}

/// Slope of `ln(error)` against `ln(h_inball)`.
pub fn fit_rate(rows: &[ConvergenceRow]) -> Result<f64> {
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.h_inball, r.strong_error)).collect();
    fit_loglog(&pairs)
}

/// Log-log slope through `(h, error)` pairs; repeated `h` values are rejected.
pub fn fit_loglog(pairs: &[(f64, f64)]) -> Result<f64> {
    for (i, a) in pairs.iter().enumerate() {
        if pairs[..i].iter().any(|b| b.0 == a.0) {
            return Err(Error::InvalidParameter(format!(
                "mesh size {} appears twice",
                a.0
            )));
        }
        if !(a.0 > 0.0 && a.1 > 0.0) {
            return Err(Error::InvalidParameter(
                "mesh sizes and errors must be positive".into(),
            ));
        }
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    least_squares_slope(&xs, &ys)
}

/// Writes the study table with one row per level.
pub fn write_convergence_csv<W: Write>(
    mut w: W,
    params: &ModelParams,
    n_samples: usize,
    rows: &[ConvergenceRow],
) -> std::io::Result<()> {
    writeln!(
        w,
        "level,h_inball,h_diam,n_vertices,beta,kappa,k,L,n_samples,strong_error,pairwise_rate"
    )?;
    for r in rows {
        let rate = r.pairwise_rate.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{:e},{}",
            r.level,
            r.h_inball,
            r.h_diam,
            r.n_vertices,
            params.beta,
            params.kappa,
            params.k,
            params.degree,
            n_samples,
            r.strong_error,
            rate
        )?;
    }
    Ok(())
}

/// Monte Carlo error of both noise transfer modes on one level.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStudyRow {
    pub level: u32,
    pub h_inball: f64,
    pub h_diam: f64,
    pub n_vertices: usize,
    pub interpolation_error: f64,
    pub projection_error: f64,
}

/// RMS lifted L² error of interpolated and projected noise against the
/// spectral noise, with common samples across levels.
pub fn noise_error_study(
    degree: usize,
    levels: &[u32],
    n_samples: usize,
    base_seed: u64,
    projection_order: u32,
    error_order: u32,
    solver: &crate::sparse::SolverConfig,
) -> Result<Vec<NoiseStudyRow>> {
    check_levels(levels)?;
    crate::noise::NoiseMode::Project(projection_order).validate()?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter(
            "at least one sample is required".into(),
        ));
    }
    levels
        .iter()
        .map(|&level| {
            let space = FemSpace::new(Arc::new(icosphere(level)?));
            let meter = ErrorMeter::new(Arc::clone(space.mesh()), error_order)?;
            let projector = LiftedProjector::new(&space, projection_order, *solver)?;
            let pairs = (0..n_samples as u64)
                .into_par_iter()
                .map(|i| {
                    let noise = sample_noise(degree, i, base_seed);
                    let interp = interpolate_noise(&noise, space.mesh());
                    let proj = projector.project(&noise)?;
                    Ok((
                        meter.squared_error(&interp, &noise)?,
                        meter.squared_error(&proj, &noise)?,
                    ))
                })
                .collect::<Result<Vec<(f64, f64)>>>()?;
            let n = n_samples as f64;
            let h = space.mesh().mesh_size();
            Ok(NoiseStudyRow {
                level,
                h_inball: h.h_inball,
                h_diam: h.h_diam,
                n_vertices: space.dim(),
                interpolation_error: (pairs.iter().map(|p| p.0).sum::<f64>() / n).sqrt(),
                projection_error: (pairs.iter().map(|p| p.1).sum::<f64>() / n).sqrt(),
            })
        })
        .collect()
}

pub fn write_noise_csv<W: Write>(
    mut w: W,
    degree: usize,
    n_samples: usize,
    rows: &[NoiseStudyRow],
) -> std::io::Result<()> {
    writeln!(
        w,
        "level,h_inball,h_diam,n_vertices,L,n_samples,interpolation_error,projection_error,interpolation_rate,projection_rate"
    )?;
    for (i, r) in rows.iter().enumerate() {
        let (ri, rp) = match i.checked_sub(1).map(|j| &rows[j]) {
            Some(p) => (
                (p.interpolation_error / r.interpolation_error)
                    .log2()
                    .to_string(),
                (p.projection_error / r.projection_error).log2().to_string(),
            ),
            None => (String::new(), String::new()),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{:e},{:e},{},{}",
            r.level,
            r.h_inball,
            r.h_diam,
            r.n_vertices,
            degree,
            n_samples,
            r.interpolation_error,
            r.projection_error,
            ri,
            rp
        )?;
    }
    Ok(())
}
