//! Truncated white noise and its transfer into the finite element space.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::harmonics::HarmonicCoeffs;
use crate::lift::LiftedQuadrature;
use crate::mesh::TriangleMesh;
use crate::sfem::{FemField, FemSpace};
use crate::sparse::{self, SolverConfig, SparseSymmetricMatrix};

/// How the spectral noise enters the P1 space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Nodal interpolation at the mesh vertices.
    Interpolate,
    /// L²(S²) projection onto the lifted P1 space, integrated with a lifted
    /// triangle rule of the given order.
    Project(u32),
}

impl Default for NoiseMode {
    fn default() -> Self {
        NoiseMode::Project(5)
    }
}

impl NoiseMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseMode::Interpolate | NoiseMode::Project(2) | NoiseMode::Project(5) => Ok(()),
            NoiseMode::Project(order) => Err(Error::InvalidParameter(format!(
                "projection quadrature order must be 2 or 5 (got {order})"
            ))),
        }
    }
}

/// `(L+1)²` i.i.d. standard normal coefficients against the real basis.
pub fn sample_white_noise<R: Rng + ?Sized>(degree: usize, rng: &mut R) -> HarmonicCoeffs {
    let n = (degree + 1) * (degree + 1);
    let coeffs = (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    HarmonicCoeffs::new(degree, coeffs).expect("normal samples are finite")
}

/// Nodal interpolant of the expansion.
pub fn interpolate_noise(coeffs: &HarmonicCoeffs, mesh: &Arc<TriangleMesh>) -> FemField {
    let values = crate::harmonics::eval_expansion(coeffs, mesh.vertices());
    FemField::new(Arc::clone(mesh), values).expect("one value per vertex")
}

/// L²(S²) projection onto the lifted P1 space.
///
/// Holds the Gram matrix of the lifted hat functions so that repeated
/// projections on one mesh share it.
#[derive(Debug, Clone)]
pub struct LiftedProjector {
    mesh: Arc<TriangleMesh>,
    quadrature: LiftedQuadrature,
    gram: SparseSymmetricMatrix,
    solver: SolverConfig,
}

impl LiftedProjector {
    pub fn new(space: &FemSpace, order: u32, solver: SolverConfig) -> Result<Self> {
        let mesh = Arc::clone(space.mesh());
        let quadrature = LiftedQuadrature::new(&mesh, order)?;
        let mut gram = SparseSymmetricMatrix::zeros(Arc::clone(space.mass().pattern()));
        let triangles = mesh.triangles();
        for q in quadrature.points() {
            let tri = triangles[q.triangle];
            for a in 0..3 {
                for b in 0..3 {
                    gram.add_to(tri[a], tri[b], q.weight * q.bary[a] * q.bary[b]);
                }
            }
        }
        Ok(LiftedProjector {
            mesh,
            quadrature,
            gram,
            solver,
        })
    }

    pub fn gram(&self) -> &SparseSymmetricMatrix {
        &self.gram
    }

    pub fn quadrature(&self) -> &LiftedQuadrature {
        &self.quadrature
    }

    /// `b_i = ∫_{S²} W φ_i^ℓ dA` under the lifted rule.
    pub fn load_vector(&self, coeffs: &HarmonicCoeffs) -> Vec<f64> {
        let mut b = vec![0.0; self.mesh.n_vertices()];
        let mut scratch = vec![0.0; coeffs.len()];
        let triangles = self.mesh.triangles();
        for q in self.quadrature.points() {
            let w = q.weight * coeffs.eval_with(q.sphere, &mut scratch);
            let tri = triangles[q.triangle];
            for a in 0..3 {
                b[tri[a]] += w * q.bary[a];
            }
        }
        b
    }

    pub fn project(&self, coeffs: &HarmonicCoeffs) -> Result<FemField> {
        let b = self.load_vector(coeffs);
        let x = sparse::solve_spd(&self.gram, &b, &self.solver)
            .map_err(|e| e.in_solve("noise projection"))?;
        FemField::new(Arc::clone(&self.mesh), x)
    }
}

/// Projects the expansion onto the lifted P1 space.
pub fn project_noise(
    coeffs: &HarmonicCoeffs,
    space: &FemSpace,
    order: u32,
    solver: &SolverConfig,
) -> Result<FemField> {
    NoiseMode::Project(order).validate()?;
    LiftedProjector::new(space, order, *solver)?.project(coeffs)
}

/// Reusable transfer of spectral noise into one FEM space.
#[derive(Debug, Clone)]
pub enum NoiseTransfer {
    Interpolate(Arc<TriangleMesh>),
    Project(Box<LiftedProjector>),
}

impl NoiseTransfer {
    pub fn new(space: &FemSpace, mode: NoiseMode, solver: SolverConfig) -> Result<Self> {
        mode.validate()?;
        Ok(match mode {
            NoiseMode::Interpolate => NoiseTransfer::Interpolate(Arc::clone(space.mesh())),
            NoiseMode::Project(order) => {
                NoiseTransfer::Project(Box::new(LiftedProjector::new(space, order, solver)?))
            }
        })
    }

    pub fn apply(&self, coeffs: &HarmonicCoeffs) -> Result<FemField> {
        match self {
            NoiseTransfer::Interpolate(mesh) => Ok(interpolate_noise(coeffs, mesh)),
            NoiseTransfer::Project(p) => p.project(coeffs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn space(level: u32) -> FemSpace {
        FemSpace::new(Arc::new(icosphere(level).unwrap()))
    }

    #[test]
    fn noise_norm_statistic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1000;
        let mean: f64 = (0..n)
            .map(|_| sample_white_noise(1, &mut rng).norm().powi(2))
            .sum::<f64>()
            / n as f64;
        // chi-square with 4 degrees of freedom: mean 4, variance 8
        assert!(
            (mean - 4.0).abs() <= 3.0 * (8.0f64 / n as f64).sqrt(),
            "{mean}"
        );
    }

    #[test]
    fn degree_zero_is_single_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_white_noise(0, &mut rng).len(), 1);
    }

    #[test]
    fn fixed_seed_reproduces() {
        let a = sample_white_noise(5, &mut ChaCha8Rng::seed_from_u64(99));
        let b = sample_white_noise(5, &mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a, b);
    }

    #[test]
    fn interpolation_of_constant() {
        let mesh = Arc::new(icosphere(2).unwrap());
        let f = interpolate_noise(&HarmonicCoeffs::unit(2, 0, 0).unwrap(), &mesh);
        assert!(f
            .values()
            .iter()
            .all(|v| (v - 0.5 / PI.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn projection_of_constant() {
        let s = space(4);
        let c = HarmonicCoeffs::unit(1, 0, 0).unwrap();
        let f = project_noise(&c, &s, 5, &SolverConfig::with_tolerance(1e-12)).unwrap();
        assert!(f
            .values()
            .iter()
            .all(|v| (v - 0.5 / PI.sqrt()).abs() < 1e-6));
    }

    #[test]
    fn projection_residual_is_orthogonal() {
        let s = space(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs = sample_white_noise(3, &mut rng);
        let p = LiftedProjector::new(&s, 5, SolverConfig::with_tolerance(1e-12)).unwrap();
        let f = p.project(&coeffs).unwrap();
        let b = p.load_vector(&coeffs);
        let gf = p.gram().mul_vec(f.values());
        // (W − P W, φ_i^ℓ) = b_i − (G f)_i
        for i in [0, 17, 101, 333, 640] {
            assert!((b[i] - gf[i]).abs() <= 1e-6);
        }
    }

    #[test]
    fn transfers_are_linear() {
        let s = space(2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = sample_white_noise(2, &mut rng);
        let b = sample_white_noise(2, &mut rng);
        for mode in [
            NoiseMode::Interpolate,
            NoiseMode::Project(2),
            NoiseMode::Project(5),
        ] {
            let t = NoiseTransfer::new(&s, mode, SolverConfig::with_tolerance(1e-13)).unwrap();
            let lhs = t.apply(&a.axpby(2.0, &b, -1.0)).unwrap();
            let rhs = t
                .apply(&a)
                .unwrap()
                .axpby(2.0, &t.apply(&b).unwrap(), -1.0)
                .unwrap();
            for (u, v) in lhs.values().iter().zip(rhs.values()) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unsupported_projection_order() {
        assert!(NoiseMode::Project(1).validate().is_err());
        assert!(NoiseMode::Project(3).validate().is_err());
        let s = space(0);
        assert!(project_noise(&HarmonicCoeffs::zeros(0), &s, 1, &SolverConfig::default()).is_err());
    }
}
