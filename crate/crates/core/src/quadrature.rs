//! Symmetric quadrature rules on the reference triangle.

use crate::error::{Error, Result};

/// Barycentric points and weights; weights sum to one so that
/// `area · Σ w f(x)` approximates the integral over a triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 3], f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

fn orbit3(a: f64, b: f64) -> [[f64; 3]; 3] {
    [[a, b, b], [b, a, b], [b, b, a]]
}

/// Rule exact for polynomials of total degree `order` (1, 2 or 5).
pub fn triangle_quadrature(order: u32) -> Result<TriangleRule> {
    match order {
        1 => Ok(TriangleRule {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
            degree: 1,
        }),
        2 => Ok(TriangleRule {
            points: orbit3(0.0, 0.5).to_vec(),
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }),
        5 => {
            // 7-point Radon rule
            let s = 15f64.sqrt();
            let mut points = vec![[1.0 / 3.0; 3]];
            points.extend(orbit3((9.0 - 2.0 * s) / 21.0, (6.0 + s) / 21.0));
            points.extend(orbit3((9.0 + 2.0 * s) / 21.0, (6.0 - s) / 21.0));
            let w1 = (155.0 + s) / 1200.0;
            let w2 = (155.0 - s) / 1200.0;
            Ok(TriangleRule {
                points,
                weights: vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
                degree: 5,
            })
        }
        other => Err(Error::UnsupportedQuadrature(other)),
    }
}
