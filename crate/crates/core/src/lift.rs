//! Quadrature on the sphere through the radial lift of a flat mesh.
//!
//! A point `x` of a flat triangle with outward normal `ν_h` maps to `x/‖x‖`,
//! and the sphere area element there is `(x·ν_h)/‖x‖³` times the flat one.
//! Functions in the P1 space are evaluated at the flat point and lifted
//! functions at the projected point, so the quadrature integrates
//! `∫_{S²} f^ℓ g dA` with no further geometric approximation.

use crate::error::Result;
use crate::mesh::TriangleMesh;
use crate::quadrature::triangle_quadrature;
use crate::vec3::{self, Vec3};

/// One quadrature point of the lifted rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedPoint {
    pub triangle: usize,
    pub bary: [f64; 3],
    /// Point on the unit sphere.
    pub sphere: Vec3,
    /// Weight including flat area and lift Jacobian.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedQuadrature {
    order: u32,
    points: Vec<LiftedPoint>,
}

impl LiftedQuadrature {
    pub fn new(mesh: &TriangleMesh, order: u32) -> Result<Self> {
        let rule = triangle_quadrature(order)?;
        let mut points = Vec::with_capacity(rule.len() * mesh.n_triangles());
        for (t, g) in mesh.geometry().iter().enumerate() {
            let corners = mesh.corners(t);
            for (bary, w) in rule.iter() {
                let x = vec3::barycentric(corners, *bary);
                let r = vec3::norm(x);
                let jacobian = vec3::dot(x, g.normal) / (r * r * r);
                points.push(LiftedPoint {
                    triangle: t,
                    bary: *bary,
                    sphere: vec3::scale(x, 1.0 / r),
                    weight: w * g.area * jacobian,
                });
            }
        }
        Ok(LiftedQuadrature { order, points })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn points(&self) -> &[LiftedPoint] {
        &self.points
    }

    /// Approximates the sphere area, 4π.
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}
