//! P1 Galerkin discretization of `-div(alpha(y) grad u) = f`, `u = 0` on
//! the boundary, with centroid quadrature for `alpha` and `f`.

mod cg;
mod field;

use std::sync::Arc;

use crate::coeff::{Coefficient, SpatialFn};
use crate::error::{Error, ParamDisplay, Result};
use crate::mesh::Mesh;

pub use cg::{conjugate_gradient, CgStats, CsrPattern};
pub use field::{h1_error_against, h1_norm, w11_norm, ScalarField};

const NO_DOF: usize = usize::MAX;

/// CG settings; the tolerance shrinks with the mesh level as
/// `base_tol · 2^{-level}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub base_tol: f64,
    pub jacobi: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            base_tol: 1e-2,
            jacobi: true,
        }
    }
}

impl SolverOptions {
    pub fn rel_tol(&self, level: usize) -> f64 {
        self.base_tol / 2f64.powi(level as i32)
    }
}

/// Gradients of the three barycentric coordinates of a triangle.
pub(crate) fn barycentric_gradients(p: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let [a, b, c] = p;
    let twice_area = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let g = [
        [(b[1] - c[1]) / twice_area, (c[0] - b[0]) / twice_area],
        [(c[1] - a[1]) / twice_area, (a[0] - c[0]) / twice_area],
        [(a[1] - b[1]) / twice_area, (b[0] - a[0]) / twice_area],
    ];
    (g, 0.5 * twice_area)
}

/// Centroid values of the coefficient pieces, so that assembling for a new
/// parameter costs one pass over the triangles.
#[derive(Debug, Clone)]
enum CoefficientTable {
    /// `m + 1` values per triangle: mean, then each term.
    Affine { stride: usize, values: Vec<f64> },
    ReciprocalProduct(crate::coeff::ReciprocalProductCoefficient),
}

/// Everything about a (mesh, problem) pair that does not depend on `y`.
#[derive(Debug)]
pub struct Discretization {
    mesh: Arc<Mesh>,
    vertex_of_dof: Arc<Vec<usize>>,
    pattern: Arc<CsrPattern>,
    /// `|T| ∇λ_a · ∇λ_b` for the 3x3 local block, row-major.
    local: Vec<[f64; 9]>,
    /// Value-array slot of each local entry (NO_DOF if a boundary vertex is involved).
    slots: Vec<[usize; 9]>,
    centroids: Vec<[f64; 2]>,
    table: CoefficientTable,
    dim: usize,
    load: Arc<Vec<f64>>,
}

impl Discretization {
    pub fn new(mesh: Arc<Mesh>, coefficient: &Coefficient, source: &SpatialFn) -> Self {
        let mut dof_of_vertex = vec![NO_DOF; mesh.num_vertices()];
        let mut vertex_of_dof = Vec::with_capacity(mesh.num_interior());
        for v in 0..mesh.num_vertices() {
            if !mesh.is_boundary(v) {
                dof_of_vertex[v] = vertex_of_dof.len();
                vertex_of_dof.push(v);
            }
        }
        let n = vertex_of_dof.len();

        let mut pairs = Vec::with_capacity(mesh.num_triangles() * 9);
        for tri in mesh.triangles() {
            for &a in tri {
                for &b in tri {
                    let (da, db) = (dof_of_vertex[a], dof_of_vertex[b]);
                    if da != NO_DOF && db != NO_DOF {
                        pairs.push((da, db));
                    }
                }
            }
        }
        let pattern = CsrPattern::from_pairs(n, pairs);

        let nt = mesh.num_triangles();
        let mut local = Vec::with_capacity(nt);
        let mut slots = Vec::with_capacity(nt);
        let mut centroids = Vec::with_capacity(nt);
        let mut load = vec![0.0; n];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let pts = mesh.triangle_points(t);
            let (g, area) = barycentric_gradients(pts);
            let mut k = [0.0; 9];
            let mut s = [NO_DOF; 9];
            for a in 0..3 {
                for b in 0..3 {
                    k[3 * a + b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    let (da, db) = (dof_of_vertex[tri[a]], dof_of_vertex[tri[b]]);
                    if da != NO_DOF && db != NO_DOF {
                        s[3 * a + b] = pattern.slot(da, db).expect("pattern covers element");
                    }
                }
            }
            local.push(k);
            slots.push(s);
            let c = [
                (pts[0][0] + pts[1][0] + pts[2][0]) / 3.0,
                (pts[0][1] + pts[1][1] + pts[2][1]) / 3.0,
            ];
            centroids.push(c);
            let f_share = source.eval(c) * area / 3.0;
            for &v in tri {
                if dof_of_vertex[v] != NO_DOF {
                    load[dof_of_vertex[v]] += f_share;
                }
            }
        }

        let table = match coefficient {
            Coefficient::Affine(a) => {
                let stride = a.dim() + 1;
                let mut values = Vec::with_capacity(nt * stride);
                for &c in &centroids {
                    values.push(a.mean.eval(c));
                    values.extend(a.terms.iter().map(|t| t.eval(c)));
                }
                CoefficientTable::Affine { stride, values }
            }
            Coefficient::ReciprocalProduct(r) => CoefficientTable::ReciprocalProduct(*r),
        };

        Self {
            mesh,
            vertex_of_dof: Arc::new(vertex_of_dof),
            pattern: Arc::new(pattern),
            local,
            slots,
            centroids,
            table,
            dim: coefficient.dim(),
            load: Arc::new(load),
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn num_unknowns(&self) -> usize {
        self.vertex_of_dof.len()
    }

    fn alpha_at(&self, t: usize, y: &[f64]) -> f64 {
        match &self.table {
            CoefficientTable::Affine { stride, values } => {
                let row = &values[t * stride..(t + 1) * stride];
                let mut alpha = row[0];
                for (tk, yk) in row[1..].iter().zip(y) {
                    alpha += tk * yk;
                }
                alpha
            }
            CoefficientTable::ReciprocalProduct(r) => r.eval(y),
        }
    }

    /// Assembles the reduced (Dirichlet-eliminated) system at parameter `y`.
    pub fn assemble(&self, y: &[f64]) -> Result<SparseSystem> {
        if y.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "parameter has {} entries, coefficient expects {}",
                y.len(),
                self.dim
            )));
        }
        let mut values = vec![0.0; self.pattern.nnz()];
        for t in 0..self.local.len() {
            let alpha = self.alpha_at(t, y);
            if !(alpha > 0.0) {
                let c = self.centroids[t];
                return Err(Error::Ellipticity {
                    value: alpha,
                    x: c[0],
                    y: c[1],
                    param: ParamDisplay(y.to_vec()),
                });
            }
            let (k, s) = (&self.local[t], &self.slots[t]);
            for e in 0..9 {
                if s[e] != NO_DOF {
                    values[s[e]] += alpha * k[e];
                }
            }
        }
        Ok(SparseSystem {
            mesh: Arc::clone(&self.mesh),
            vertex_of_dof: Arc::clone(&self.vertex_of_dof),
            pattern: Arc::clone(&self.pattern),
            values,
            load: Arc::clone(&self.load),
        })
    }

    /// Assembles and solves at `y`, returning the full nodal vector.
    pub fn solve(&self, y: &[f64], rel_tol: f64, jacobi: bool) -> Result<Vec<f64>> {
        let system = self.assemble(y)?;
        let (values, _) = system.solve_nodal(rel_tol, jacobi)?;
        Ok(values)
    }
}

/// Symmetric positive definite stiffness matrix and load vector over the
/// interior vertices.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    mesh: Arc<Mesh>,
    vertex_of_dof: Arc<Vec<usize>>,
    pattern: Arc<CsrPattern>,
    values: Vec<f64>,
    load: Arc<Vec<f64>>,
}

impl SparseSystem {
    pub fn num_unknowns(&self) -> usize {
        self.pattern.n()
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    /// Mesh vertex carried by each unknown.
    pub fn vertex_of_dof(&self) -> &[usize] {
        &self.vertex_of_dof
    }

    pub fn pattern(&self) -> &CsrPattern {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(row, col, value)` for every stored entry.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.pattern.n()).flat_map(move |r| {
            (self.pattern.row_ptr[r]..self.pattern.row_ptr[r + 1])
                .map(move |k| (r, self.pattern.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.slot(row, col).map(|k| self.values[k]).unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.num_unknowns();
        let mut a = vec![vec![0.0; n]; n];
        for (r, c, v) in self.triplets() {
            a[r][c] = v;
        }
        a
    }

    fn solve_nodal(&self, rel_tol: f64, jacobi: bool) -> Result<(Vec<f64>, CgStats)> {
        let n = self.num_unknowns();
        let (x, stats) = conjugate_gradient(&self.pattern, &self.values, &self.load, rel_tol, 10 * n.max(1), jacobi)?;
        let mut nodal = vec![0.0; self.mesh.num_vertices()];
        for (d, &v) in self.vertex_of_dof.iter().enumerate() {
            nodal[v] = x[d];
        }
        Ok((nodal, stats))
    }
}

/// Assembles the system for one parameter value.
pub fn assemble(mesh: &Arc<Mesh>, coefficient: &Coefficient, y: &[f64], source: &SpatialFn) -> Result<SparseSystem> {
    Discretization::new(Arc::clone(mesh), coefficient, source).assemble(y)
}

/// Jacobi-preconditioned CG solve; boundary values are zero.
pub fn solve(system: &SparseSystem, rel_tol: f64) -> Result<ScalarField> {
    let (nodal, stats) = system.solve_nodal(rel_tol, true)?;
    log::trace!("cg: {} iterations, residual {:e}", stats.iterations, stats.relative_residual);
    ScalarField::new(Arc::clone(&system.mesh), nodal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{AffineCoefficient, ProblemSpec};
    use crate::mesh::tests::cross_mesh;
    use crate::mesh::{generate_mesh, Domain};

    fn unit_coefficient() -> Coefficient {
        Coefficient::Affine(AffineCoefficient::new(SpatialFn::constant(1.0), vec![]))
    }

    #[test]
    fn cross_mesh_hand_assembly() {
        let mesh = Arc::new(cross_mesh());
        let sys = assemble(&mesh, &unit_coefficient(), &[], &SpatialFn::constant(1.0)).unwrap();
        assert_eq!(sys.num_unknowns(), 1);
        assert!((sys.get(0, 0) - 4.0).abs() < 1e-14);
        assert!((sys.load()[0] - 1.0 / 3.0).abs() < 1e-15);
        let u = solve(&sys, 1e-14).unwrap();
        assert!((u.values()[4] - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(&u.values()[..4], &[0.0; 4]);
    }

    #[test]
    fn doubling_alpha_doubles_stiffness() {
        let mesh = Arc::new(generate_mesh(Domain::UnitSquare, 0.2, 1).unwrap());
        let f = SpatialFn::constant(1.0);
        let one = assemble(&mesh, &unit_coefficient(), &[], &f).unwrap();
        let two = Coefficient::Affine(AffineCoefficient::new(SpatialFn::constant(2.0), vec![]));
        let two = assemble(&mesh, &two, &[], &f).unwrap();
        for ((_, _, a), (_, _, b)) in one.triplets().zip(two.triplets()) {
            assert_eq!(b, 2.0 * a);
        }
        assert_eq!(one.load(), two.load());
    }

    #[test]
    fn zero_parameter_equals_mean_field() {
        let mesh = Arc::new(generate_mesh(Domain::UnitSquare, 0.2, 1).unwrap());
        let spec = ProblemSpec::sinusoidal_square();
        let full = assemble(&mesh, &spec.coefficient, &[0.0; 6], &spec.source).unwrap();
        let mean_only = Coefficient::Affine(AffineCoefficient::new(SpatialFn::constant(1.0), vec![]));
        let mean_only = assemble(&mesh, &mean_only, &[], &spec.source).unwrap();
        assert_eq!(full.values(), mean_only.values());
    }

    #[test]
    fn stiffness_is_symmetric_with_positive_diagonal() {
        let mesh = Arc::new(generate_mesh(Domain::UnitDisk, 0.15, 3).unwrap());
        let spec = ProblemSpec::sinusoidal_square();
        let sys = assemble(&mesh, &spec.coefficient, &[0.9, -0.4, 0.3, -1.0, 1.0, 0.2], &spec.source).unwrap();
        let scale = sys.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (r, c, v) in sys.triplets() {
            assert!((v - sys.get(c, r)).abs() <= 1e-12 * scale);
            if r == c {
                assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn ellipticity_violation_names_location() {
        let mesh = Arc::new(generate_mesh(Domain::UnitSquare, 0.3, 1).unwrap());
        let bad = Coefficient::Affine(AffineCoefficient::new(
            SpatialFn::constant(1.0),
            vec![SpatialFn::constant(2.0)],
        ));
        let err = assemble(&mesh, &bad, &[-1.0], &SpatialFn::constant(1.0)).unwrap_err();
        match err {
            Error::Ellipticity { value, .. } => assert_eq!(value, -1.0),
            other => panic!("unexpected {other}"),
        }
        assert!(err_string(&mesh, &bad).contains("y = [-1.000000]"));
    }

    fn err_string(mesh: &Arc<Mesh>, c: &Coefficient) -> String {
        assemble(mesh, c, &[-1.0], &SpatialFn::constant(1.0)).unwrap_err().to_string()
    }

    #[test]
    fn wrong_parameter_length() {
        let mesh = Arc::new(generate_mesh(Domain::UnitSquare, 0.3, 1).unwrap());
        let spec = ProblemSpec::sinusoidal_square();
        assert!(assemble(&mesh, &spec.coefficient, &[0.0; 3], &spec.source).is_err());
    }

    #[test]
    fn tolerance_schedule() {
        let o = SolverOptions::default();
        assert_eq!(o.rel_tol(0), 1e-2);
        assert_eq!(o.rel_tol(3), 1e-2 / 8.0);
    }
}
