//! P1 surface finite elements on the polyhedral sphere.
//!
//! Mass and stiffness matrices use exact integration on the flat triangles:
//! the local mass matrix is `|T|/12 · [[2,1,1],[1,2,1],[1,1,2]]` and the local
//! stiffness matrix is `|T| ∇φ_i·∇φ_j` with the in-plane hat gradients.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::sparse::{self, SolverConfig, SparseSymmetricMatrix, SparsityPattern};
use crate::vec3;

/// A function in the P1 space, stored by its nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct FemField {
    mesh: Arc<TriangleMesh>,
    values: Vec<f64>,
}

impl FemField {
    pub fn new(mesh: Arc<TriangleMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_vertices(),
                got: values.len(),
            });
        }
        Ok(FemField { mesh, values })
    }

    pub fn constant(mesh: Arc<TriangleMesh>, c: f64) -> Self {
        let values = vec![c; mesh.n_vertices()];
        FemField { mesh, values }
    }

    pub fn zeros(mesh: Arc<TriangleMesh>) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn mesh(&self) -> &Arc<TriangleMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at barycentric coordinates `bary` inside triangle `t`.
    #[inline]
    pub fn eval_in_triangle(&self, t: usize, bary: &[f64; 3]) -> f64 {
        let [a, b, c] = self.mesh.triangles()[t];
        bary[0] * self.values[a] + bary[1] * self.values[b] + bary[2] * self.values[c]
    }

    pub fn same_mesh(&self, other: &FemField) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh == other.mesh
    }

    fn check_same_mesh(&self, other: &FemField) -> Result<()> {
        if self.same_mesh(other) {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    /// `alpha·self + beta·other`
    pub fn axpby(&self, alpha: f64, other: &FemField, beta: f64) -> Result<FemField> {
        self.check_same_mesh(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(FemField {
            mesh: Arc::clone(&self.mesh),
            values,
        })
    }
}

/// Vertex adjacency pattern of the mesh (each vertex couples to itself and
/// its edge neighbours).
pub fn mesh_pattern(mesh: &TriangleMesh) -> SparsityPattern {
    let mut rows = vec![Vec::with_capacity(7); mesh.n_vertices()];
    for tri in mesh.triangles() {
        for &i in tri {
            rows[i].extend_from_slice(tri);
        }
    }
    SparsityPattern::from_rows(rows)
}

fn assemble_with<F>(
    mesh: &TriangleMesh,
    pattern: Arc<SparsityPattern>,
    local: F,
) -> SparseSymmetricMatrix
where
    F: Fn(usize) -> [[f64; 3]; 3],
{
    let mut m = SparseSymmetricMatrix::zeros(pattern);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let k = local(t);
        for a in 0..3 {
            for b in 0..3 {
                m.add_to(tri[a], tri[b], k[a][b]);
            }
        }
    }
    m
}

fn local_mass(area: f64) -> [[f64; 3]; 3] {
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

fn assemble_mass_on(mesh: &TriangleMesh, pattern: Arc<SparsityPattern>) -> SparseSymmetricMatrix {
    let geo = mesh.geometry();
    assemble_with(mesh, pattern, |t| local_mass(geo[t].area))
}

fn assemble_stiffness_on(
    mesh: &TriangleMesh,
    pattern: Arc<SparsityPattern>,
) -> SparseSymmetricMatrix {
    let geo = mesh.geometry();
    assemble_with(mesh, pattern, |t| {
        let g = &geo[t];
        let mut k = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                k[a][b] = g.area * vec3::dot(g.gradients[a], g.gradients[b]);
            }
        }
        k
    })
}

/// Consistent P1 mass matrix.
pub fn assemble_mass(mesh: &TriangleMesh) -> SparseSymmetricMatrix {
    assemble_mass_on(mesh, Arc::new(mesh_pattern(mesh)))
}

/// P1 stiffness matrix of the surface gradient pairing.
pub fn assemble_stiffness(mesh: &TriangleMesh) -> SparseSymmetricMatrix {
    assemble_stiffness_on(mesh, Arc::new(mesh_pattern(mesh)))
}

/// `c0·M + c1·S`.
pub fn helmholtz_matrix(
    mass: &SparseSymmetricMatrix,
    stiffness: &SparseSymmetricMatrix,
    c0: f64,
    c1: f64,
) -> Result<SparseSymmetricMatrix> {
    if !(c0 >= 0.0 && c1 >= 0.0) || !c0.is_finite() || !c1.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "helmholtz coefficients must be finite and nonnegative (got {c0}, {c1})"
        )));
    }
    if c0 == 0.0 && c1 == 0.0 {
        return Err(Error::InvalidParameter(
            "helmholtz coefficients are both zero".into(),
        ));
    }
    mass.linear_combination(c0, stiffness, c1)
}

/// Mesh together with its mass and stiffness matrices on one shared pattern.
#[derive(Debug, Clone)]
pub struct FemSpace {
    mesh: Arc<TriangleMesh>,
    mass: SparseSymmetricMatrix,
    stiffness: SparseSymmetricMatrix,
}

impl FemSpace {
    pub fn new(mesh: Arc<TriangleMesh>) -> Self {
        let pattern = Arc::new(mesh_pattern(&mesh));
        let mass = assemble_mass_on(&mesh, Arc::clone(&pattern));
        let stiffness = assemble_stiffness_on(&mesh, pattern);
        FemSpace {
            mesh,
            mass,
            stiffness,
        }
    }

    pub fn mesh(&self) -> &Arc<TriangleMesh> {
        &self.mesh
    }

    pub fn mass(&self) -> &SparseSymmetricMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseSymmetricMatrix {
        &self.stiffness
    }

    pub fn dim(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn helmholtz(&self, c0: f64, c1: f64) -> Result<SparseSymmetricMatrix> {
        helmholtz_matrix(&self.mass, &self.stiffness, c0, c1)
    }

    /// Solves `(c0 M + c1 S) x = rhs_scale · M f`.
    pub fn solve_weak(
        &self,
        c0: f64,
        c1: f64,
        rhs_scale: f64,
        f: &[f64],
        cfg: &SolverConfig,
    ) -> Result<Vec<f64>> {
        let a = self.helmholtz(c0, c1)?;
        let mut rhs = self.mass.mul_vec(f);
        rhs.iter_mut().for_each(|v| *v *= rhs_scale);
        sparse::solve_spd(&a, &rhs, cfg)
    }

    pub fn field(&self, values: Vec<f64>) -> Result<FemField> {
        FemField::new(Arc::clone(&self.mesh), values)
    }
}

/// Discrete L² pairing `fᵀ M g` over the flat surface.
pub fn l2_inner(mass: &SparseSymmetricMatrix, f: &FemField, g: &FemField) -> Result<f64> {
    f.check_same_mesh(g)?;
    if mass.dim() != f.values.len() {
        return Err(Error::DimensionMismatch {
            expected: f.values.len(),
            got: mass.dim(),
        });
    }
    Ok(mass.bilinear(&f.values, &g.values))
}
