//! Triangulations of the built-in 2D domains.
//!
//! Every discretization level gets its own independently generated mesh, so
//! meshes of different levels share no vertex-subset relation. Fields are
//! moved between meshes by P1 interpolation with zero extension outside the
//! source mesh's polygonal support.

mod generate;
mod io;
mod locate;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub use generate::{generate_mesh, GeneratorLimits};
pub use io::{read_mesh, write_mesh, MeshFile};
pub use locate::{Location, Transfer, BARYCENTRIC_TOL};

pub type Point = [f64; 2];

/// Built-in convex domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// `{ x : |x| < 1 }`
    UnitDisk,
    /// `(0, 1)^2`
    UnitSquare,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::UnitDisk => "unit_disk",
            Domain::UnitSquare => "unit_square",
        }
    }

    pub fn area(self) -> f64 {
        match self {
            Domain::UnitDisk => std::f64::consts::PI,
            Domain::UnitSquare => 1.0,
        }
    }

    /// Bounding box `(min, max)`.
    pub fn bounds(self) -> (Point, Point) {
        match self {
            Domain::UnitDisk => ([-1.0, -1.0], [1.0, 1.0]),
            Domain::UnitSquare => ([0.0, 0.0], [1.0, 1.0]),
        }
    }

    pub fn contains(self, x: Point) -> bool {
        match self {
            Domain::UnitDisk => x[0] * x[0] + x[1] * x[1] <= 1.0,
            Domain::UnitSquare => (0.0..=1.0).contains(&x[0]) && (0.0..=1.0).contains(&x[1]),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unit_disk" => Ok(Domain::UnitDisk),
            "unit_square" => Ok(Domain::UnitSquare),
            other => Err(Error::InvalidArgument(format!("unknown domain '{other}'"))),
        }
    }
}

/// Shape statistics of a triangulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality {
    /// Largest circumradius / inradius over all triangles (2 for equilateral).
    pub max_radius_ratio: f64,
    pub min_edge: f64,
    pub max_edge: f64,
}

impl MeshQuality {
    pub fn edge_ratio(&self) -> f64 {
        self.max_edge / self.min_edge
    }
}

/// An immutable conforming triangulation with boundary flags.
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    level_hint: usize,
    h_measured: f64,
    locator: OnceLock<locate::Locator>,
}

impl fmt::Debug for Mesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mesh")
            .field("vertices", &self.vertices.len())
            .field("triangles", &self.triangles.len())
            .field("level_hint", &self.level_hint)
            .field("h_measured", &self.h_measured)
            .finish()
    }
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.triangles == other.triangles
            && self.boundary == other.boundary
    }
}

impl Mesh {
    /// Builds a mesh from raw parts, checking orientation, index bounds and
    /// that every edge on the mesh boundary has flagged endpoints.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
        level_hint: usize,
    ) -> Result<Mesh> {
        if boundary.len() != vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "{} boundary flags for {} vertices",
                boundary.len(),
                vertices.len()
            )));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t} has out-of-range vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has non-positive signed area {area:e}"
                )));
            }
        }

        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::with_capacity(triangles.len() * 2);
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &edge_count {
            if count > 2 {
                return Err(Error::InvalidMesh(format!("edge ({a}, {b}) shared by {count} triangles")));
            }
            if count == 1 && !(boundary[a] && boundary[b]) {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge ({a}, {b}) has an unflagged endpoint"
                )));
            }
        }

        let h_measured = triangles
            .iter()
            .flat_map(|tri| {
                let v = &vertices;
                (0..3).map(move |k| dist(v[tri[k]], v[tri[(k + 1) % 3]]))
            })
            .fold(0.0, f64::max);

        Ok(Mesh {
            vertices,
            triangles,
            boundary,
            level_hint,
            h_measured,
            locator: OnceLock::new(),
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_interior(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    pub fn level_hint(&self) -> usize {
        self.level_hint
    }

    /// Longest edge over all triangles.
    pub fn h_measured(&self) -> f64 {
        self.h_measured
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        crate::sum::compensated_sum((0..self.num_triangles()).map(|t| self.triangle_area(t)))
    }

    pub fn quality(&self) -> MeshQuality {
        let mut q = MeshQuality {
            max_radius_ratio: 0.0,
            min_edge: f64::INFINITY,
            max_edge: 0.0,
        };
        for t in 0..self.num_triangles() {
            let [a, b, c] = self.triangle_points(t);
            let (la, lb, lc) = (dist(b, c), dist(c, a), dist(a, b));
            let area = signed_area(a, b, c);
            let circumradius = la * lb * lc / (4.0 * area);
            let inradius = 2.0 * area / (la + lb + lc);
            q.max_radius_ratio = q.max_radius_ratio.max(circumradius / inradius);
            q.min_edge = q.min_edge.min(la.min(lb).min(lc));
            q.max_edge = q.max_edge.max(la.max(lb).max(lc));
        }
        q
    }

    /// Finds the triangle containing `x`; ties go to the lowest triangle index.
    pub fn locate_point(&self, x: Point) -> Option<Location> {
        self.locator
            .get_or_init(|| locate::Locator::build(self))
            .locate(self, x)
    }

    /// Edges shared by exactly one triangle.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut edges: Vec<_> = count.into_iter().filter(|(_, c)| *c == 1).map(|(e, _)| e).collect();
        edges.sort_unstable();
        edges
    }
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Four triangles meeting at the centre of the unit square.
    pub fn cross_mesh() -> Mesh {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let triangles = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
        let boundary = vec![true, true, true, true, false];
        Mesh::from_parts(vertices, triangles, boundary, 0).unwrap()
    }

    #[test]
    fn cross_mesh_is_valid() {
        let m = cross_mesh();
        assert_eq!(m.num_interior(), 1);
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        assert!((m.h_measured() - 1.0).abs() < 1e-15);
        assert_eq!(m.boundary_edges().len(), 4);
    }

    #[test]
    fn rejects_clockwise_triangle() {
        let err = Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
            vec![true; 3],
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn rejects_unflagged_boundary_edge() {
        let err = Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![true, true, false],
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn right_isoceles_radius_ratio() {
        let q = cross_mesh().quality();
        assert!((q.max_radius_ratio - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn domain_parse_roundtrip() {
        for d in [Domain::UnitDisk, Domain::UnitSquare] {
            assert_eq!(d.name().parse::<Domain>().unwrap(), d);
        }
        assert!("ball".parse::<Domain>().is_err());
    }
}
