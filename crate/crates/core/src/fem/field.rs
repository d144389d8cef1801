use std::sync::Arc;

use super::barycentric_gradients;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Nodal P1 values on a mesh.
#[derive(Debug, Clone)]
pub struct ScalarField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::FieldLength {
                expected: mesh.num_vertices(),
                got: values.len(),
            });
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let values = vec![0.0; mesh.num_vertices()];
        Self { mesh, values }
    }

    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn(Point) -> f64) -> Self {
        let values = mesh.vertices().iter().map(|&x| f(x)).collect();
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn check_same_mesh(&self, other: &ScalarField) -> Result<()> {
        if Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.check_same_mesh(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self {
            mesh: Arc::clone(&self.mesh),
            values,
        })
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        Self {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    /// Interpolates onto another mesh (zero outside the source domain).
    pub fn interpolate_to(&self, target: &Arc<Mesh>) -> Result<ScalarField> {
        if Arc::ptr_eq(&self.mesh, target) {
            return Ok(self.clone());
        }
        let t = crate::mesh::Transfer::new(&self.mesh, target);
        ScalarField::new(Arc::clone(target), t.apply(&self.values)?)
    }

    pub fn h1_norm(&self) -> f64 {
        h1_norm(&self.mesh, &self.values)
    }

    pub fn w11_norm(&self) -> f64 {
        w11_norm(&self.mesh, &self.values)
    }
}

/// Per-triangle `(|T|, grad f, f at centroid)`.
fn triangle_data<'a>(mesh: &'a Mesh, values: &'a [f64]) -> impl Iterator<Item = (f64, [f64; 2], f64)> + 'a {
    mesh.triangles().iter().enumerate().map(move |(t, tri)| {
        let (g, area) = barycentric_gradients(mesh.triangle_points(t));
        let mut grad = [0.0; 2];
        let mut mean = 0.0;
        for a in 0..3 {
            let v = values[tri[a]];
            grad[0] += v * g[a][0];
            grad[1] += v * g[a][1];
            mean += v;
        }
        (area, grad, mean / 3.0)
    })
}

/// `sqrt(Σ_T |T| (|∇f|² + f(c_T)²))`.
pub fn h1_norm(mesh: &Mesh, values: &[f64]) -> f64 {
    crate::sum::compensated_sum(
        triangle_data(mesh, values).map(|(a, g, c)| a * (g[0] * g[0] + g[1] * g[1] + c * c)),
    )
    .sqrt()
}

/// `Σ_T |T| (|∇f| + |f(c_T)|)`.
pub fn w11_norm(mesh: &Mesh, values: &[f64]) -> f64 {
    crate::sum::compensated_sum(triangle_data(mesh, values).map(|(a, g, c)| a * (g[0].hypot(g[1]) + c.abs())))
}

// Symmetric 6-point rule, exact for degree 4 (weights sum to 1).
const QA: f64 = 0.445948490915965;
const QA_W: f64 = 0.223381589678011;
const QB: f64 = 0.091576213509771;
const QB_W: f64 = 0.109951743655322;

/// H1 error of a discrete field against an exact solution and gradient,
/// integrated with a degree-4 rule instead of the centroid.
pub fn h1_error_against(
    field: &ScalarField,
    u: impl Fn(Point) -> f64,
    grad_u: impl Fn(Point) -> [f64; 2],
) -> f64 {
    let mesh = field.mesh();
    let bary = [
        ([QA, QA, 1.0 - 2.0 * QA], QA_W),
        ([QA, 1.0 - 2.0 * QA, QA], QA_W),
        ([1.0 - 2.0 * QA, QA, QA], QA_W),
        ([QB, QB, 1.0 - 2.0 * QB], QB_W),
        ([QB, 1.0 - 2.0 * QB, QB], QB_W),
        ([1.0 - 2.0 * QB, QB, QB], QB_W),
    ];
    let mut acc = crate::sum::NeumaierSum::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let (g, area) = barycentric_gradients(p);
        let v = [field.values[tri[0]], field.values[tri[1]], field.values[tri[2]]];
        let gh = [
            v[0] * g[0][0] + v[1] * g[1][0] + v[2] * g[2][0],
            v[0] * g[0][1] + v[1] * g[1][1] + v[2] * g[2][1],
        ];
        let mut local = 0.0;
        for (l, w) in bary {
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            let uh = l[0] * v[0] + l[1] * v[1] + l[2] * v[2];
            let gu = grad_u(x);
            let (e0, e1, e) = (gh[0] - gu[0], gh[1] - gu[1], uh - u(x));
            local += w * (e0 * e0 + e1 * e1 + e * e);
        }
        acc.add(area * local);
    }
    acc.value().sqrt()
}
