use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

use super::{signed_area, Domain, Mesh, Point};
use crate::error::{Error, Result};

/// Bounds every generated mesh must satisfy.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorLimits {
    /// Circumradius / inradius bound per triangle.
    pub max_radius_ratio: f64,
    /// Longest / shortest edge bound over the whole mesh.
    pub max_edge_ratio: f64,
}

impl Default for GeneratorLimits {
    fn default() -> Self {
        Self {
            max_radius_ratio: 10.0,
            max_edge_ratio: 8.0,
        }
    }
}

/// Interior vertices move by at most this fraction of the local spacing.
const JITTER: f64 = 0.2;

/// Ratio between the spacing of the structured point set and the longest
/// edge of its Delaunay triangulation, calibrated so that `h_measured`
/// tracks `h_target`.
const DISK_SPACING: f64 = 1.35;
const SQUARE_SPACING: f64 = 1.45;

struct Site {
    position: Point2<f64>,
    index: usize,
}

impl HasPosition for Site {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.position
    }
}

/// Generates a quasi-uniform triangulation of `domain` with longest edge
/// close to `h_target`.
///
/// Points come from a structured layout (concentric rings for the disk, a
/// Cartesian grid for the square) whose interior points are jittered with a
/// generator keyed by `(seed, h_target)`, then Delaunay-triangulated. Boundary
/// points sit exactly on the domain boundary. Meshes for different seeds or
/// sizes are independent of each other.
pub fn generate_mesh(domain: Domain, h_target: f64, seed: u64) -> Result<Mesh> {
    generate_mesh_with_limits(domain, h_target, seed, GeneratorLimits::default())
}

pub(crate) fn generate_mesh_with_limits(
    domain: Domain,
    h_target: f64,
    seed: u64,
    limits: GeneratorLimits,
) -> Result<Mesh> {
    if !(h_target > 0.0 && h_target <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "h_target must lie in (0, 1], got {h_target}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, h_target));
    let (points, boundary) = match domain {
        Domain::UnitDisk => disk_points(h_target, &mut rng),
        Domain::UnitSquare => square_points(h_target, &mut rng),
    };
    let interior = boundary.iter().filter(|b| !**b).count();
    if interior < 3 {
        return Err(Error::MeshTooCoarse { h_target, interior });
    }

    let sites: Vec<Site> = points
        .iter()
        .enumerate()
        .map(|(index, p)| Site {
            position: Point2::new(p[0], p[1]),
            index,
        })
        .collect();
    let dt = DelaunayTriangulation::<Site>::bulk_load(sites)
        .map_err(|e| Error::InvalidMesh(format!("delaunay triangulation failed: {e:?}")))?;

    let mut triangles: Vec<[usize; 3]> = dt
        .inner_faces()
        .map(|face| {
            let [a, b, c] = face.vertices();
            let mut tri = [a.data().index, b.data().index, c.data().index];
            if signed_area(points[tri[0]], points[tri[1]], points[tri[2]]) < 0.0 {
                tri.swap(1, 2);
            }
            tri
        })
        .collect();
    // Canonical order: spade's face order is deterministic, but sorting makes
    // the triangle numbering independent of its internals.
    for tri in &mut triangles {
        let k = (0..3).min_by_key(|&k| tri[k]).unwrap();
        tri.rotate_left(k);
    }
    triangles.sort_unstable();

    let level_hint = (1.0 / h_target).log2().max(0.0).round() as usize;
    let mesh = Mesh::from_parts(points, triangles, boundary, level_hint)?;
    let q = mesh.quality();
    if q.max_radius_ratio > limits.max_radius_ratio || q.edge_ratio() > limits.max_edge_ratio {
        return Err(Error::InvalidMesh(format!(
            "generated mesh violates shape limits: radius ratio {:.3}, edge ratio {:.3}",
            q.max_radius_ratio,
            q.edge_ratio()
        )));
    }
    Ok(mesh)
}

fn mix_seed(seed: u64, h: f64) -> u64 {
    // splitmix64 finaliser over (seed, h bits)
    let mut z = seed ^ h.to_bits().rotate_left(17) ^ 0x9E37_79B9_7F4A_7C15;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn jitter(rng: &mut ChaCha8Rng, p: Point, radius: f64) -> Point {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.gen::<f64>();
    [p[0] + r * theta.cos(), p[1] + r * theta.sin()]
}

/// Concentric rings `r_k = k / K`; the outer ring is the boundary.
fn disk_points(h: f64, rng: &mut ChaCha8Rng) -> (Vec<Point>, Vec<bool>) {
    let rings = (DISK_SPACING / h).ceil().max(1.0) as usize;
    let dr = 1.0 / rings as f64;
    // arc spacing of an equilateral layout relative to the ring spacing
    let arc = dr * 2.0 / 3f64.sqrt();

    let mut points = vec![jitter(rng, [0.0, 0.0], JITTER * dr)];
    let mut boundary = vec![false];
    for k in 1..=rings {
        let radius = k as f64 * dr;
        let count = ((std::f64::consts::TAU * radius / arc).round() as usize).max(6);
        let step = std::f64::consts::TAU / count as f64;
        let phase = step * rng.gen::<f64>();
        let on_boundary = k == rings;
        for i in 0..count {
            let theta = phase + step * i as f64;
            if on_boundary {
                points.push([theta.cos(), theta.sin()]);
            } else {
                let p = [radius * theta.cos(), radius * theta.sin()];
                points.push(jitter(rng, p, JITTER * dr));
            }
            boundary.push(on_boundary);
        }
    }
    (points, boundary)
}

/// Cartesian grid with `n` cells per side; boundary points stay on the edges.
fn square_points(h: f64, rng: &mut ChaCha8Rng) -> (Vec<Point>, Vec<bool>) {
    let n = (SQUARE_SPACING / h).ceil().max(1.0) as usize;
    let a = 1.0 / n as f64;
    let mut points = Vec::with_capacity((n + 1) * (n + 1));
    let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let p = [i as f64 / n as f64, j as f64 / n as f64];
            let on_boundary = i == 0 || j == 0 || i == n || j == n;
            if on_boundary {
                points.push(p);
            } else {
                points.push(jitter(rng, p, JITTER * a));
            }
            boundary.push(on_boundary);
        }
    }
    (points, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn square_half_keeps_corners_on_boundary() {
        let m = generate_mesh(Domain::UnitSquare, 0.5, 1).unwrap();
        for corner in [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] {
            let v = m.vertices().iter().position(|p| *p == corner).expect("corner present");
            assert!(m.is_boundary(v));
        }
        let h = m.h_measured();
        assert!((0.25..=1.0).contains(&h), "h_measured = {h}");
        assert!((m.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coarse_disk_level_zero() {
        let m = generate_mesh(Domain::UnitDisk, 0.6, 7).unwrap();
        let h = m.h_measured();
        assert!((0.3..=1.2).contains(&h), "h_measured = {h}");
        assert!(m.num_interior() >= 3);
        for (v, p) in m.vertices().iter().enumerate() {
            if m.is_boundary(v) {
                assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn finer_disk_is_not_a_superset() {
        let coarse = generate_mesh(Domain::UnitDisk, 0.6, 7).unwrap();
        let fine = generate_mesh(Domain::UnitDisk, 0.3, 8).unwrap();
        let fine_set: HashSet<[u64; 2]> = fine
            .vertices()
            .iter()
            .map(|p| [p[0].to_bits(), p[1].to_bits()])
            .collect();
        let shared = coarse
            .vertices()
            .iter()
            .filter(|p| fine_set.contains(&[p[0].to_bits(), p[1].to_bits()]))
            .count();
        assert!(shared < coarse.num_vertices());
    }

    #[test]
    fn deterministic_for_fixed_inputs() {
        let a = generate_mesh(Domain::UnitDisk, 0.15, 42).unwrap();
        let b = generate_mesh(Domain::UnitDisk, 0.15, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_mesh(Domain::UnitDisk, 0.15, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_coarse_is_rejected() {
        let err = generate_mesh(Domain::UnitSquare, 1.0, 0).unwrap_err();
        assert!(matches!(err, Error::MeshTooCoarse { .. }), "{err}");
    }

    #[test]
    fn invalid_h_rejected() {
        assert!(generate_mesh(Domain::UnitSquare, 0.0, 0).is_err());
        assert!(generate_mesh(Domain::UnitSquare, 1.5, 0).is_err());
    }
}
