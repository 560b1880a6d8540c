//! Finite element pipeline for `(κ² − Δ)^β u = W_L`.
//!
//! The integer part of `β` is handled by repeated solves with `κ²M + S`.
//! The fractional part uses a sinc quadrature of the Dunford–Taylor integral
//!
//! ```text
//! L^{-{β}} ≈ (2k sin(π{β})/π) Σ_{l=-K⁻}^{K⁺} e^{2{β}y_l} (I + e^{2y_l} L)^{-1},   y_l = k·l
//! ```
//!
//! where every resolvent becomes one shifted SPD finite element solve.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harmonics::HarmonicCoeffs;
use crate::noise::{sample_white_noise, NoiseMode, NoiseTransfer};
use crate::sfem::{FemField, FemSpace};
use crate::sparse::SolverConfig;
use crate::spectral::spectral_solution;

/// Node solves held in memory at once before the ordered reduction.
const NODE_BATCH: usize = 64;

/// `|β − round(β)|` below which `β` is treated as an integer.
pub const INTEGER_BYPASS_TOL: f64 = 1e-12;

/// Integer and fractional parts of `β`, with near-integers snapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSplit {
    pub integer: u32,
    pub fraction: f64,
}

impl BetaSplit {
    pub fn new(beta: f64) -> Self {
        let r = beta.round();
        if (beta - r).abs() < INTEGER_BYPASS_TOL {
            BetaSplit {
                integer: r as u32,
                fraction: 0.0,
            }
        } else {
            let f = beta.floor();
            BetaSplit {
                integer: f as u32,
                fraction: beta - f,
            }
        }
    }

    pub fn is_integer(&self) -> bool {
        self.fraction == 0.0
    }
}

/// Sinc quadrature nodes `y_l = k·l`, `l = −K⁻..=K⁺`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SincQuadrature {
    pub step: f64,
    pub k_plus: u64,
    pub k_minus: u64,
    pub beta_frac: f64,
}

/// One node of the quadrature as a shifted linear system.
///
/// The resolvent term `w_l (I + e^{2y}L)^{-1} f` equals `scaled_weight · x`
/// where `(c0 M + c1 S) x = M f`. For `y > 0` the system is divided by
/// `e^{2y}`, which keeps all coefficients of order one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SincNode {
    pub index: i64,
    pub y: f64,
    /// `(2k sin(π{β})/π) e^{2{β}y}`
    pub weight: f64,
    pub scaled_weight: f64,
    pub c0: f64,
    pub c1: f64,
}

impl SincNode {
    /// Scalar resolvent contribution on an eigenspace with eigenvalue `μ` of
    /// `κ² − Δ`.
    #[inline]
    pub fn apply_scalar(&self, mu_minus_kappa2: f64) -> f64 {
        self.scaled_weight / (self.c0 + self.c1 * mu_minus_kappa2)
    }
}

/// Builds the node set for fractional part `beta_frac` and step `k`.
pub fn sinc_nodes(beta_frac: f64, k: f64) -> Result<SincQuadrature> {
    if !(beta_frac > 0.0 && beta_frac < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fractional part {beta_frac} must lie in (0, 1); integer exponents bypass the quadrature"
        )));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "quadrature step must be positive (got {k})"
        )));
    }
    let base = PI * PI / (4.0 * k * k);
    Ok(SincQuadrature {
        step: k,
        k_plus: (base / (1.0 - beta_frac)).ceil() as u64,
        k_minus: (base / beta_frac).ceil() as u64,
        beta_frac,
    })
}

impl SincQuadrature {
    pub fn len(&self) -> usize {
        (self.k_plus + self.k_minus + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `2k sin(π{β})/π`
    pub fn prefactor(&self) -> f64 {
        2.0 * self.step * (PI * self.beta_frac).sin() / PI
    }

    /// Nodes in increasing `y`, the fixed summation order.
    pub fn nodes(&self, kappa: f64) -> Vec<SincNode> {
        let pre = self.prefactor();
        let kappa2 = kappa * kappa;
        let lo = -(self.k_minus as i64);
        (lo..=self.k_plus as i64)
            .map(|l| {
                let y = self.step * l as f64;
                let weight = pre * (2.0 * self.beta_frac * y).exp();
                let (c0, c1, scaled_weight) = if y <= 0.0 {
                    let e = (2.0 * y).exp();
                    (1.0 + e * kappa2, e, weight)
                } else {
                    let e = (-2.0 * y).exp();
                    (
                        e + kappa2,
                        1.0,
                        pre * (2.0 * (self.beta_frac - 1.0) * y).exp(),
                    )
                };
                SincNode {
                    index: l,
                    y,
                    weight,
                    scaled_weight,
                    c0,
                    c1,
                }
            })
            .collect()
    }

    /// Quadrature approximation of `μ^{-{β}}` for `μ = κ² + λ`.
    pub fn scalar_factor(&self, kappa: f64, lambda: f64) -> f64 {
        self.nodes(kappa)
            .iter()
            .map(|n| n.apply_scalar(lambda))
            .sum()
    }
}

/// Model parameters of one sampling run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub beta: f64,
    pub kappa: f64,
    /// Noise truncation degree `L`.
    pub degree: usize,
    /// Sinc quadrature step `k`.
    pub k: f64,
    pub noise: NoiseMode,
    pub solver: SolverConfig,
}

impl ModelParams {
    pub fn new(beta: f64, kappa: f64, degree: usize, k: f64) -> Result<Self> {
        let p = ModelParams {
            beta,
            kappa,
            degree,
            k,
            noise: NoiseMode::default(),
            solver: SolverConfig::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.5) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must exceed 1/2 (got {})",
                self.beta
            )));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kappa must be positive (got {})",
                self.kappa
            )));
        }
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "k must be positive (got {})",
                self.k
            )));
        }
        self.noise.validate()?;
        self.solver.validate()
    }

    pub fn split(&self) -> BetaSplit {
        BetaSplit::new(self.beta)
    }

    /// Quadrature for the fractional part, `None` for integer `β`.
    pub fn quadrature(&self) -> Result<Option<SincQuadrature>> {
        let s = self.split();
        if s.is_integer() {
            Ok(None)
        } else {
            sinc_nodes(s.fraction, self.k).map(Some)
        }
    }

    /// Linear solves per sample: `K⁺ + K⁻ + 1 + ⌊β⌋`, or `β` for integers.
    pub fn solves_per_sample(&self) -> Result<usize> {
        let q = self.quadrature()?;
        Ok(self.split().integer as usize + q.map_or(0, |q| q.len()))
    }
}

/// Applies `(κ²M + S)^{-1} M` to the field `floor_beta` times.
pub fn solve_recursion(
    space: &FemSpace,
    field: &FemField,
    floor_beta: u32,
    kappa: f64,
    cfg: &SolverConfig,
) -> Result<FemField> {
    check_space(space, field)?;
    let mut current = field.values().to_vec();
    for i in 1..=floor_beta {
        current = space
            .solve_weak(kappa * kappa, 1.0, 1.0, &current, cfg)
            .map_err(|e| e.in_solve(format!("recursion step {i}")))?;
    }
    space.field(current)
}

/// Sinc-quadrature application of `L^{-{β}}` to a field; identity for
/// integer `β`. Node solves run in parallel and are summed in node order.
pub fn apply_fractional(
    space: &FemSpace,
    field: &FemField,
    params: &ModelParams,
) -> Result<FemField> {
    check_space(space, field)?;
    let Some(q) = params.quadrature()? else {
        return Ok(field.clone());
    };
    let nodes = q.nodes(params.kappa);
    let rhs = space.mass().mul_vec(field.values());
    let mut out = vec![0.0; space.dim()];
    for chunk in nodes.chunks(NODE_BATCH) {
        let solutions: Vec<Vec<f64>> = chunk
            .par_iter()
            .map(|node| {
                let a = space.helmholtz(node.c0, node.c1)?;
                crate::sparse::solve_spd(&a, &rhs, &params.solver)
                    .map_err(|e| e.in_solve(format!("sinc node l={}", node.index)))
            })
            .collect::<Result<_>>()?;
        for (node, x) in chunk.iter().zip(&solutions) {
            for (o, v) in out.iter_mut().zip(x) {
                *o += node.scaled_weight * v;
            }
        }
    }
    space.field(out)
}

/// Full discrete solution operator applied to an already transferred noise
/// field: recursion for `⌊β⌋`, then quadrature for `{β}`.
pub fn solve_pipeline(
    space: &FemSpace,
    noise: &FemField,
    params: &ModelParams,
) -> Result<FemField> {
    let split = params.split();
    let u = solve_recursion(space, noise, split.integer, params.kappa, &params.solver)?;
    apply_fractional(space, &u, params)
}

fn check_space(space: &FemSpace, field: &FemField) -> Result<()> {
    if Arc::ptr_eq(space.mesh(), field.mesh()) || **space.mesh() == **field.mesh() {
        Ok(())
    } else {
        Err(Error::MeshMismatch)
    }
}

/// Generator for sample `sample_index` of the stream rooted at `base_seed`.
pub fn sample_rng(base_seed: u64, sample_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(sample_index);
    rng
}

/// Noise coefficients of one Monte Carlo sample.
pub fn sample_noise(degree: usize, sample_index: u64, base_seed: u64) -> HarmonicCoeffs {
    sample_white_noise(degree, &mut sample_rng(base_seed, sample_index))
}

/// A finite element sample together with the exact spectral solution driven
/// by the same noise.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub noise: HarmonicCoeffs,
    pub noise_field: FemField,
    pub fem: FemField,
    pub spectral: HarmonicCoeffs,
}

/// Mesh-level state reused across samples.
#[derive(Debug, Clone)]
pub struct Sampler {
    space: FemSpace,
    transfer: NoiseTransfer,
    params: ModelParams,
}

impl Sampler {
    pub fn new(space: FemSpace, params: ModelParams) -> Result<Self> {
        params.validate()?;
        let transfer = NoiseTransfer::new(&space, params.noise, params.solver)?;
        Ok(Sampler {
            space,
            transfer,
            params,
        })
    }

    pub fn space(&self) -> &FemSpace {
        &self.space
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn transfer(&self) -> &NoiseTransfer {
        &self.transfer
    }

    /// FEM solution for given noise coefficients.
    pub fn solve(&self, noise: &HarmonicCoeffs) -> Result<(FemField, FemField)> {
        let noise_field = self.transfer.apply(noise)?;
        let fem = solve_pipeline(&self.space, &noise_field, &self.params)?;
        Ok((noise_field, fem))
    }

    pub fn sample(&self, sample_index: u64, base_seed: u64) -> Result<FieldSample> {
        let noise = sample_noise(self.params.degree, sample_index, base_seed);
        let (noise_field, fem) = self.solve(&noise)?;
        let spectral = spectral_solution(&noise, self.params.beta, self.params.kappa);
        Ok(FieldSample {
            noise,
            noise_field,
            fem,
            spectral,
        })
    }
}

/// Draws sample `sample_index` and runs the full pipeline on `space`.
pub fn sample_field(
    space: &FemSpace,
    params: &ModelParams,
    sample_index: u64,
    base_seed: u64,
) -> Result<FieldSample> {
    Sampler::new(space.clone(), *params)?.sample(sample_index, base_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;
    use crate::spectral::sinc_factor;

    fn space(level: u32) -> FemSpace {
        FemSpace::new(Arc::new(icosphere(level).unwrap()))
    }

    #[test]
    fn node_counts() {
        let q = sinc_nodes(0.5, 0.5).unwrap();
        assert_eq!((q.k_plus, q.k_minus), (20, 20));
        let q = sinc_nodes(0.75, 0.5).unwrap();
        assert_eq!((q.k_plus, q.k_minus), (40, 14));
        let q = sinc_nodes(0.5, 1.0).unwrap();
        assert_eq!((q.k_plus, q.k_minus), (5, 5));
        assert_eq!(q.len(), 11);
    }

    #[test]
    fn node_counts_reject_integer_fractions() {
        assert!(sinc_nodes(0.0, 0.5).is_err());
        assert!(sinc_nodes(1.0, 0.5).is_err());
        assert!(sinc_nodes(0.5, 0.0).is_err());
    }

    #[test]
    fn nodes_and_weights() {
        let q = sinc_nodes(0.3, 0.4).unwrap();
        let nodes = q.nodes(1.5);
        assert_eq!(nodes.len(), q.len());
        assert_eq!(nodes[0].index, -(q.k_minus as i64));
        for n in &nodes {
            assert!(n.weight > 0.0 && n.scaled_weight > 0.0);
            assert!((n.y - 0.4 * n.index as f64).abs() < 1e-15);
            let expected = q.prefactor() * (0.6 * n.y).exp();
            assert!((n.weight - expected).abs() <= 1e-14 * expected);
            // the scaled system solves the original resolvent
            let mu = 2.25 + 6.0;
            let direct = n.weight / (1.0 + (2.0 * n.y).exp() * mu);
            let scaled = n.apply_scalar(6.0);
            assert!((direct - scaled).abs() <= 1e-12 * direct.abs().max(1e-300));
        }
    }

    #[test]
    fn beta_split() {
        assert_eq!(
            BetaSplit::new(1.5),
            BetaSplit {
                integer: 1,
                fraction: 0.5
            }
        );
        assert_eq!(BetaSplit::new(0.75).integer, 0);
        assert!(BetaSplit::new(2.0).is_integer());
        assert!(BetaSplit::new(2.0 - 1e-13).is_integer());
        assert_eq!(BetaSplit::new(2.0 - 1e-13).integer, 2);
        assert!(!BetaSplit::new(2.0 - 1e-9).is_integer());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.4, 1.0, 1, 0.5).is_err());
        assert!(ModelParams::new(0.5, 1.0, 1, 0.5).is_err());
        assert!(ModelParams::new(0.75, 0.0, 1, 0.5).is_err());
        assert!(ModelParams::new(0.75, 1.0, 1, -0.5).is_err());
        assert!(ModelParams::new(0.75, 1.0, 1, 0.5).is_ok());
    }

    #[test]
    fn solve_counts() {
        let p = ModelParams::new(0.75, 1.0, 1, 0.5).unwrap();
        assert_eq!(p.solves_per_sample().unwrap(), 55);
        let p = ModelParams::new(1.5, 1.0, 1, 0.5).unwrap();
        assert_eq!(p.solves_per_sample().unwrap(), 42);
        let p = ModelParams::new(2.0, 1.0, 1, 0.5).unwrap();
        assert_eq!(p.solves_per_sample().unwrap(), 2);
    }

    #[test]
    fn recursion_identity_and_constants() {
        let s = space(2);
        let f = FemField::constant(Arc::clone(s.mesh()), 3.0);
        let cfg = SolverConfig::with_tolerance(1e-13);
        assert_eq!(solve_recursion(&s, &f, 0, 2.0, &cfg).unwrap(), f);
        let u = solve_recursion(&s, &f, 2, 2.0, &cfg).unwrap();
        assert!(u.values().iter().all(|v| (v - 3.0 / 16.0).abs() < 1e-11));
    }

    #[test]
    fn fractional_identity_for_integer_beta() {
        let s = space(1);
        let f = FemField::constant(Arc::clone(s.mesh()), 1.0);
        let p = ModelParams::new(2.0, 1.0, 1, 0.5).unwrap();
        assert_eq!(apply_fractional(&s, &f, &p).unwrap(), f);
    }

    #[test]
    fn constant_mode_matches_scalar_factor() {
        let s = space(2);
        let c = 0.7;
        let f = FemField::constant(Arc::clone(s.mesh()), c);
        for (beta, kappa, k) in [(0.75, 1.0, 0.5), (0.55, 0.5, 0.7), (0.9, 2.0, 1.0)] {
            let mut p = ModelParams::new(beta, kappa, 1, k).unwrap();
            p.solver = SolverConfig::with_tolerance(1e-12);
            let u = apply_fractional(&s, &f, &p).unwrap();
            let expected = c * sinc_factor(kappa * kappa, beta, k).unwrap();
            for v in u.values() {
                assert!(
                    (v - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                    "{v} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn pipeline_is_linear() {
        let s = space(2);
        let mut p = ModelParams::new(1.3, 1.0, 2, 0.8).unwrap();
        p.solver = SolverConfig::with_tolerance(1e-13);
        let sampler = Sampler::new(s, p).unwrap();
        let a = sample_noise(2, 0, 1);
        let b = sample_noise(2, 1, 1);
        let (_, ua) = sampler.solve(&a).unwrap();
        let (_, ub) = sampler.solve(&b).unwrap();
        let (_, uab) = sampler.solve(&a.axpby(1.0, &b, 3.0)).unwrap();
        let expected = ua.axpby(1.0, &ub, 3.0).unwrap();
        for (u, v) in uab.values().iter().zip(expected.values()) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = space(1);
        let p = ModelParams::new(0.75, 1.0, 1, 0.5).unwrap();
        let a = sample_field(&s, &p, 3, 42).unwrap();
        let b = sample_field(&s, &p, 3, 42).unwrap();
        assert_eq!(a.fem.values(), b.fem.values());
        assert_eq!(a.noise, b.noise);
        let c = sample_field(&s, &p, 4, 42).unwrap();
        assert_ne!(a.noise, c.noise);
        assert_eq!(a.spectral, spectral_solution(&a.noise, 0.75, 1.0));
    }

    #[test]
    fn mesh_mismatch_rejected() {
        let s = space(1);
        let f = FemField::constant(Arc::new(icosphere(2).unwrap()), 1.0);
        assert!(matches!(
            solve_recursion(&s, &f, 1, 1.0, &SolverConfig::default()),
            Err(Error::MeshMismatch)
        ));
    }
}
