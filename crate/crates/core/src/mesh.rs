//! Icosahedral triangulations of the unit sphere.
//!
//! Level 0 is the regular icosahedron inscribed in the unit sphere. Each
//! refinement splits every triangle into four through its edge midpoints and
//! pushes the new vertices radially onto the sphere, so every vertex of every
//! level lies on the sphere and the flat triangles form a closed polyhedron.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

/// Largest refinement level accepted by [`icosphere`] (20·4¹⁰ triangles).
pub const MAX_LEVEL: u32 = 10;

const UNIT_TOL: f64 = 1e-12;

/// Flat-triangle data used by assembly and quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleGeometry {
    pub area: f64,
    /// Outward unit normal of the flat triangle.
    pub normal: Vec3,
    /// Gradients of the three P1 hat functions, in the triangle plane.
    pub gradients: [Vec3; 3],
}

impl TriangleGeometry {
    /// Geometry of the triangle `(p0, p1, p2)`, counterclockwise seen from
    /// the side the normal points to. Returns `None` for degenerate input.
    pub fn new(p: [Vec3; 3]) -> Option<Self> {
        let n = vec3::cross(vec3::sub(p[1], p[0]), vec3::sub(p[2], p[0]));
        let twice_area = vec3::norm(n);
        if !(twice_area > 0.0) || !twice_area.is_finite() {
            return None;
        }
        let normal = vec3::scale(n, 1.0 / twice_area);
        // grad φ_i = ν × (p_{i+2} − p_{i+1}) / 2|T|
        let grad = |i: usize| {
            let e = vec3::sub(p[(i + 2) % 3], p[(i + 1) % 3]);
            vec3::scale(vec3::cross(normal, e), 1.0 / twice_area)
        };
        Some(TriangleGeometry {
            area: 0.5 * twice_area,
            normal,
            gradients: [grad(0), grad(1), grad(2)],
        })
    }
}

/// A closed triangulated polyhedron with all vertices on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    level: u32,
    geometry: Vec<TriangleGeometry>,
}

/// Mesh-size metrics over all flat triangles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSize {
    /// Largest in-circle radius.
    pub h_inball: f64,
    /// Longest edge.
    pub h_diam: f64,
}

impl TriangleMesh {
    /// Builds a mesh from raw parts, checking every structural invariant.
    pub fn from_parts(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, level: u32) -> Result<Self> {
        for (i, v) in vertices.iter().enumerate() {
            if (vec3::norm(*v) - 1.0).abs() > UNIT_TOL {
                return Err(Error::Domain(format!(
                    "vertex {i} is not on the unit sphere"
                )));
            }
        }
        let mut geometry = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Domain(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let g = TriangleGeometry::new(p)
                .ok_or_else(|| Error::Domain(format!("triangle {t} is degenerate")))?;
            let centroid = vec3::barycentric(p, [1.0 / 3.0; 3]);
            if vec3::dot(g.normal, centroid) <= 0.0 {
                return Err(Error::Domain(format!(
                    "triangle {t} is not oriented outward"
                )));
            }
            geometry.push(g);
        }
        let mesh = TriangleMesh {
            vertices,
            triangles,
            level,
            geometry,
        };
        mesh.check_manifold()?;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn geometry(&self) -> &[TriangleGeometry] {
        &self.geometry
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Number of distinct undirected edges.
    pub fn n_edges(&self) -> usize {
        self.directed_edges().len() / 2
    }

    /// Corner coordinates of triangle `t`.
    #[inline]
    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Sum of the flat triangle areas.
    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_triangles() as i64
    }

    pub fn mesh_size(&self) -> MeshSize {
        let mut h_inball: f64 = 0.0;
        let mut h_diam: f64 = 0.0;
        for (t, g) in self.geometry.iter().enumerate() {
            let p = self.corners(t);
            let edges = [
                vec3::norm(vec3::sub(p[1], p[0])),
                vec3::norm(vec3::sub(p[2], p[1])),
                vec3::norm(vec3::sub(p[0], p[2])),
            ];
            let perimeter: f64 = edges.iter().sum();
            h_inball = h_inball.max(2.0 * g.area / perimeter);
            h_diam = h_diam.max(edges.iter().cloned().fold(0.0, f64::max));
        }
        MeshSize { h_inball, h_diam }
    }

    /// One-line statistics: level, V, F, h_inball, h_diam.
    pub fn summary(&self) -> String {
        let h = self.mesh_size();
        format!(
            "level={} V={} F={} h_inball={:.6} h_diam={:.6}",
            self.level,
            self.n_vertices(),
            self.n_triangles(),
            h.h_inball,
            h.h_diam
        )
    }

    fn directed_edges(&self) -> HashMap<(usize, usize), usize> {
        let mut edges = HashMap::with_capacity(3 * self.triangles.len());
        for tri in &self.triangles {
            for k in 0..3 {
                *edges.entry((tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        edges
    }

    /// Every undirected edge must appear exactly once in each direction.
    fn check_manifold(&self) -> Result<()> {
        let edges = self.directed_edges();
        for (&(a, b), &count) in &edges {
            if count != 1 {
                return Err(Error::Domain(format!(
                    "edge ({a},{b}) traversed {count} times in the same direction"
                )));
            }
            if edges.get(&(b, a)) != Some(&1) {
                return Err(Error::Domain(format!(
                    "edge ({a},{b}) has no oppositely oriented twin"
                )));
            }
        }
        Ok(())
    }

    /// Edge-midpoint subdivision with radial projection of the new vertices.
    fn subdivide(&self) -> TriangleMesh {
        let mut vertices = self.vertices.clone();
        vertices.reserve(self.n_edges());
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::with_capacity(self.n_edges());
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let m = vec3::scale(vec3::add(vertices[a], vertices[b]), 0.5);
                // Midpoints of a chord are never near the origin.
                vertices.push(vec3::scale(m, 1.0 / vec3::norm(m)));
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([b, bc, ab]);
            triangles.push([c, ca, bc]);
            triangles.push([ab, bc, ca]);
        }
        let geometry = triangles
            .iter()
            .map(|&[a, b, c]| {
                TriangleGeometry::new([vertices[a], vertices[b], vertices[c]])
                    .expect("midpoint subdivision of a sphere mesh is non-degenerate")
            })
            .collect();
        TriangleMesh {
            vertices,
            triangles,
            level: self.level + 1,
            geometry,
        }
    }
}

impl fmt::Display for TriangleMesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary())
    }
}

/// Radial projection onto the unit sphere, `x / ‖x‖`.
pub fn project_to_sphere(x: Vec3) -> Result<Vec3> {
    let r = vec3::norm(x);
    if !(r > 1e-14) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "cannot project {x:?} onto the sphere"
        )));
    }
    Ok(vec3::scale(x, 1.0 / r))
}

fn icosahedron() -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw: [Vec3; 12] = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let vertices = raw
        .iter()
        .map(|&v| vec3::scale(v, 1.0 / vec3::norm(v)))
        .collect();
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriangleMesh::from_parts(vertices, triangles, 0).expect("icosahedron is a valid sphere mesh")
}

/// Icosahedral sphere mesh after `level` rounds of midpoint refinement.
pub fn icosphere(level: u32) -> Result<TriangleMesh> {
    if level > MAX_LEVEL {
        return Err(Error::MeshTooLarge {
            level,
            max: MAX_LEVEL,
        });
    }
    let mut mesh = icosahedron();
    for _ in 0..level {
        mesh = mesh.subdivide();
    }
    Ok(mesh)
}
