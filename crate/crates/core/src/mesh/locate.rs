use super::{Mesh, Point};
use crate::error::{Error, Result};

/// Barycentric coordinates down to `-BARYCENTRIC_TOL` count as inside.
pub const BARYCENTRIC_TOL: f64 = 1e-10;

/// Below this many triangles location scans every triangle.
const BRUTE_FORCE_LIMIT: usize = 10_000;

/// Result of a successful point location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub barycentric: [f64; 3],
}

pub(crate) enum Locator {
    BruteForce,
    Grid(BucketGrid),
}

/// Uniform background grid; each cell lists (in ascending order) the
/// triangles whose padded bounding box overlaps it.
pub(crate) struct BucketGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    offsets: Vec<usize>,
    items: Vec<u32>,
}

impl Locator {
    pub(crate) fn build(mesh: &Mesh) -> Locator {
        if mesh.num_triangles() < BRUTE_FORCE_LIMIT {
            Locator::BruteForce
        } else {
            Locator::Grid(BucketGrid::build(mesh))
        }
    }

    pub(crate) fn locate(&self, mesh: &Mesh, x: Point) -> Option<Location> {
        match self {
            Locator::BruteForce => (0..mesh.num_triangles()).find_map(|t| try_triangle(mesh, t, x)),
            Locator::Grid(grid) => grid
                .candidates(x)
                .iter()
                .find_map(|&t| try_triangle(mesh, t as usize, x)),
        }
    }
}

impl BucketGrid {
    fn build(mesh: &Mesh) -> BucketGrid {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in mesh.vertices() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        let side = (mesh.num_triangles() as f64).sqrt().ceil().max(1.0);
        let cell = extent / side;
        let nx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / cell).floor() as usize + 1).max(1);
        let pad = 1e-9 * extent;

        let ranges: Vec<[usize; 4]> = (0..mesh.num_triangles())
            .map(|t| {
                let pts = mesh.triangle_points(t);
                let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                for p in pts {
                    for d in 0..2 {
                        a[d] = a[d].min(p[d]);
                        b[d] = b[d].max(p[d]);
                    }
                }
                let clamp = |v: f64, n: usize| ((v / cell).floor().max(0.0) as usize).min(n - 1);
                [
                    clamp(a[0] - pad - lo[0], nx),
                    clamp(b[0] + pad - lo[0], nx),
                    clamp(a[1] - pad - lo[1], ny),
                    clamp(b[1] + pad - lo[1], ny),
                ]
            })
            .collect();

        let mut counts = vec![0usize; nx * ny + 1];
        for r in &ranges {
            for j in r[2]..=r[3] {
                for i in r[0]..=r[1] {
                    counts[j * nx + i + 1] += 1;
                }
            }
        }
        for c in 1..counts.len() {
            counts[c] += counts[c - 1];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; offsets[nx * ny]];
        for (t, r) in ranges.iter().enumerate() {
            for j in r[2]..=r[3] {
                for i in r[0]..=r[1] {
                    let c = j * nx + i;
                    items[fill[c]] = t as u32;
                    fill[c] += 1;
                }
            }
        }
        BucketGrid {
            origin: lo,
            cell,
            nx,
            ny,
            offsets,
            items,
        }
    }

    fn candidates(&self, x: Point) -> &[u32] {
        let fx = (x[0] - self.origin[0]) / self.cell;
        let fy = (x[1] - self.origin[1]) / self.cell;
        if !(fx > -1e-6 && fy > -1e-6) || fx >= self.nx as f64 + 1e-6 || fy >= self.ny as f64 + 1e-6 {
            return &[];
        }
        let i = (fx.max(0.0) as usize).min(self.nx - 1);
        let j = (fy.max(0.0) as usize).min(self.ny - 1);
        let c = j * self.nx + i;
        &self.items[self.offsets[c]..self.offsets[c + 1]]
    }
}

fn try_triangle(mesh: &Mesh, t: usize, x: Point) -> Option<Location> {
    let [a, b, c] = mesh.triangle_points(t);
    let det = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
    let l0 = ((b[1] - c[1]) * (x[0] - c[0]) + (c[0] - b[0]) * (x[1] - c[1])) / det;
    let l1 = ((c[1] - a[1]) * (x[0] - c[0]) + (a[0] - c[0]) * (x[1] - c[1])) / det;
    let l2 = 1.0 - l0 - l1;
    if l0 >= -BARYCENTRIC_TOL && l1 >= -BARYCENTRIC_TOL && l2 >= -BARYCENTRIC_TOL {
        Some(Location {
            triangle: t,
            barycentric: [l0, l1, l2],
        })
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy)]
enum Stencil {
    Outside,
    Vertex(usize),
    Triangle([usize; 3], [f64; 3]),
}

/// Precomputed P1 interpolation from one mesh onto the vertices of another.
///
/// Target vertices outside the source triangulation receive zero. A target
/// vertex that coincides bit-for-bit with a source vertex copies its value.
#[derive(Debug, Clone)]
pub struct Transfer {
    source_len: usize,
    stencils: Vec<Stencil>,
}

impl Transfer {
    pub fn new(source: &Mesh, target: &Mesh) -> Transfer {
        let stencils = target
            .vertices()
            .iter()
            .map(|&x| match source.locate_point(x) {
                None => Stencil::Outside,
                Some(loc) => {
                    let tri = source.triangles()[loc.triangle];
                    match tri.iter().find(|&&v| source.vertices()[v] == x) {
                        Some(&v) => Stencil::Vertex(v),
                        None => Stencil::Triangle(tri, loc.barycentric),
                    }
                }
            })
            .collect();
        Transfer {
            source_len: source.num_vertices(),
            stencils,
        }
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn target_len(&self) -> usize {
        self.stencils.len()
    }

    /// Number of target vertices outside the source support.
    pub fn outside_count(&self) -> usize {
        self.stencils
            .iter()
            .filter(|s| matches!(s, Stencil::Outside))
            .count()
    }

    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.source_len {
            return Err(Error::FieldLength {
                expected: self.source_len,
                got: values.len(),
            });
        }
        Ok(self
            .stencils
            .iter()
            .map(|s| match *s {
                Stencil::Outside => 0.0,
                Stencil::Vertex(v) => values[v],
                Stencil::Triangle(tri, l) => l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]],
            })
            .collect())
    }
}
