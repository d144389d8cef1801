//! Parametric diffusion coefficients and the built-in test problems.

mod spatial;

use std::fmt;

use crate::error::{Error, Result};
use crate::mesh::{Domain, Point};

pub use spatial::{Builtin, SpatialFn};

/// `alpha(x, y) = phi0(x) + Σ_k t_k(x) y_k` with `t_k = sqrt(λ_k) φ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineCoefficient {
    pub mean: SpatialFn,
    pub terms: Vec<SpatialFn>,
}

impl AffineCoefficient {
    pub fn new(mean: SpatialFn, terms: Vec<SpatialFn>) -> Self {
        Self { mean, terms }
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    /// Six-term sinusoidal coefficient on the unit square, term magnitudes
    /// halving:
    /// `1 + exp(|x|²)/20 · (sin(2πx1) y1 + ½ sin(2πx2) y2
    ///  + ¼ sin(2πx1) sin(4πx2) y3 + ⅛ sin(4πx1) y4
    ///  + 1/16 sin(4πx1) sin(2πx2) y5 + 1/32 sin(4πx2) y6)`.
    pub fn sinusoidal() -> Self {
        use Builtin::{ExpSq, Sin};
        let s = |axis, k| Sin { axis, k };
        let base = 1.0 / 20.0;
        let terms = vec![
            SpatialFn::new(base, vec![ExpSq, s(1, 2.0)]),
            SpatialFn::new(base / 2.0, vec![ExpSq, s(2, 2.0)]),
            SpatialFn::new(base / 4.0, vec![ExpSq, s(1, 2.0), s(2, 4.0)]),
            SpatialFn::new(base / 8.0, vec![ExpSq, s(1, 4.0)]),
            SpatialFn::new(base / 16.0, vec![ExpSq, s(1, 4.0), s(2, 2.0)]),
            SpatialFn::new(base / 32.0, vec![ExpSq, s(2, 4.0)]),
        ];
        Self::new(SpatialFn::constant(1.0), terms)
    }

    #[inline]
    pub fn eval(&self, x: Point, y: &[f64]) -> f64 {
        let mut alpha = self.mean.eval(x);
        for (t, yk) in self.terms.iter().zip(y) {
            alpha += t.eval(x) * yk;
        }
        alpha
    }

    /// Parses `mean = ...` / `term = ...` lines (blank lines and `#`
    /// comments allowed). `mean` defaults to `1.0 * const()`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut mean = None;
        let mut terms = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected 'key = value'".into(),
            })?;
            let f: SpatialFn = value.trim().parse().map_err(|e: Error| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            match key.trim() {
                "mean" if mean.is_none() => mean = Some(f),
                "mean" => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "duplicate 'mean'".into(),
                    })
                }
                "term" => terms.push(f),
                other => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        Ok(Self::new(mean.unwrap_or_else(|| SpatialFn::constant(1.0)), terms))
    }
}

impl fmt::Display for AffineCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mean = {}", self.mean)?;
        for t in &self.terms {
            writeln!(f, "term = {t}")?;
        }
        Ok(())
    }
}

/// Spatially constant `alpha(y) = (Π_i (3/5)(2 - y_i²))^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocalProductCoefficient {
    pub dim: usize,
}

impl ReciprocalProductCoefficient {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    /// The product `Π (3/5)(2 - y_i²)`, i.e. `1 / alpha`.
    pub fn inverse(&self, y: &[f64]) -> f64 {
        y.iter().take(self.dim).map(|t| 0.6 * (2.0 - t * t)).product()
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        1.0 / self.inverse(y)
    }

    /// `[(5/6)^m, (5/3)^m]`.
    pub fn bounds(&self) -> (f64, f64) {
        let m = self.dim as i32;
        ((5.0f64 / 6.0).powi(m), (5.0f64 / 3.0).powi(m))
    }
}

/// Any supported diffusion coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Affine(AffineCoefficient),
    ReciprocalProduct(ReciprocalProductCoefficient),
}

impl Coefficient {
    pub fn dim(&self) -> usize {
        match self {
            Coefficient::Affine(a) => a.dim(),
            Coefficient::ReciprocalProduct(r) => r.dim,
        }
    }

    #[inline]
    pub fn eval(&self, x: Point, y: &[f64]) -> f64 {
        match self {
            Coefficient::Affine(a) => a.eval(x, y),
            Coefficient::ReciprocalProduct(r) => r.eval(y),
        }
    }

    pub fn is_spatially_constant(&self) -> bool {
        match self {
            Coefficient::Affine(a) => a.mean.is_constant() && a.terms.iter().all(SpatialFn::is_constant),
            Coefficient::ReciprocalProduct(_) => true,
        }
    }
}

/// Evaluates a coefficient at `(x, y)`.
pub fn eval_alpha(coeff: &Coefficient, x: Point, y: &[f64]) -> f64 {
    coeff.eval(x, y)
}

/// Sampled ellipticity bounds over domain × parameter cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityCertificate {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// False when the bounds come from grid sampling rather than a closed form.
    pub exact: bool,
}

/// Bounds `alpha` over `domain × [-1,1]^m`.
///
/// The affine form is linear in every `y_k`, so for fixed `x` its extrema
/// over the cube are `phi0(x) ∓ Σ |t_k(x)|`; these are sampled on a
/// `grid_resolution × grid_resolution` grid of points inside the domain.
/// The result is a sampled certificate, not a proof.
pub fn certify_ellipticity(
    coeff: &Coefficient,
    domain: Domain,
    grid_resolution: usize,
) -> Result<EllipticityCertificate> {
    let cert = match coeff {
        Coefficient::ReciprocalProduct(r) => {
            let (alpha_min, alpha_max) = r.bounds();
            EllipticityCertificate {
                alpha_min,
                alpha_max,
                exact: true,
            }
        }
        Coefficient::Affine(a) => {
            if grid_resolution < 2 {
                return Err(Error::InvalidArgument("grid_resolution must be at least 2".into()));
            }
            let (lo, hi) = domain.bounds();
            let mut alpha_min = f64::INFINITY;
            let mut alpha_max = f64::NEG_INFINITY;
            let n = grid_resolution - 1;
            for j in 0..=n {
                for i in 0..=n {
                    let x = [
                        lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64,
                        lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64,
                    ];
                    if !domain.contains(x) {
                        continue;
                    }
                    let centre = a.mean.eval(x);
                    let spread: f64 = a.terms.iter().map(|t| t.eval(x).abs()).sum();
                    alpha_min = alpha_min.min(centre - spread);
                    alpha_max = alpha_max.max(centre + spread);
                }
            }
            log::debug!(
                "sampled ellipticity certificate on a {grid_resolution}^2 grid: [{alpha_min}, {alpha_max}]"
            );
            EllipticityCertificate {
                alpha_min,
                alpha_max,
                exact: false,
            }
        }
    };
    if !(cert.alpha_min > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coefficient is not uniformly elliptic: sampled minimum {}",
            cert.alpha_min
        )));
    }
    Ok(cert)
}

/// Statistic targeted by a multilevel run: `F(u) = u^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Functional {
    /// p = 1, the mean.
    Identity,
    /// p = 2, the second moment.
    Square,
}

impl Functional {
    pub fn power(self) -> u32 {
        match self {
            Functional::Identity => 1,
            Functional::Square => 2,
        }
    }

    pub fn from_power(p: u32) -> Result<Self> {
        match p {
            1 => Ok(Functional::Identity),
            2 => Ok(Functional::Square),
            _ => Err(Error::InvalidArgument(format!("functional power must be 1 or 2, got {p}"))),
        }
    }

    #[inline]
    pub fn apply(self, u: f64) -> f64 {
        match self {
            Functional::Identity => u,
            Functional::Square => u * u,
        }
    }
}

/// Which built-in problem a [`ProblemSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    AnalyticDisk,
    SinusoidalSquare,
    Custom,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::AnalyticDisk => "analytic_disk",
            ProblemKind::SinusoidalSquare => "sinusoidal_square",
            ProblemKind::Custom => "custom",
        }
    }
}

/// A complete parametric model problem with uniform density `(1/2)^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub domain: Domain,
    pub coefficient: Coefficient,
    pub source: SpatialFn,
    /// Mesh size of level 0; level ℓ uses `h0 · 2^{-ℓ}`.
    pub h0: f64,
}

/// `E[((3/5)(2 - t²))²]` for `t ~ U[-1, 1]`, i.e. `(9/25)(43/15)`.
pub const RECIPROCAL_FACTOR_SECOND_MOMENT: f64 = 387.0 / 375.0;

impl ProblemSpec {
    /// `-div(alpha(y) grad u) = 1` on the unit disk with the six-parameter
    /// reciprocal-product coefficient.
    pub fn analytic_disk() -> Self {
        Self {
            kind: ProblemKind::AnalyticDisk,
            domain: Domain::UnitDisk,
            coefficient: Coefficient::ReciprocalProduct(ReciprocalProductCoefficient::new(6)),
            source: SpatialFn::constant(1.0),
            h0: 0.6,
        }
    }

    /// Sinusoidal six-term coefficient on the unit square with `f = 10`.
    pub fn sinusoidal_square() -> Self {
        Self {
            kind: ProblemKind::SinusoidalSquare,
            domain: Domain::UnitSquare,
            coefficient: Coefficient::Affine(AffineCoefficient::sinusoidal()),
            source: SpatialFn::constant(10.0),
            h0: 0.5,
        }
    }

    pub fn custom(domain: Domain, coefficient: AffineCoefficient, source: SpatialFn, h0: f64) -> Self {
        Self {
            kind: ProblemKind::Custom,
            domain,
            coefficient: Coefficient::Affine(coefficient),
            source,
            h0,
        }
    }

    pub fn dim(&self) -> usize {
        self.coefficient.dim()
    }

    /// Density of the uniform measure on `[-1, 1]^m`.
    pub fn density(&self) -> f64 {
        0.5f64.powi(self.dim() as i32)
    }

    pub fn h(&self, level: usize) -> f64 {
        self.h0 / 2f64.powi(level as i32)
    }

    /// Closed-form statistic, available for the analytic disk problem:
    /// the mean is `(1 - |x|²)/4` and the second moment is
    /// `(387/375)^6 · ((1 - |x|²)/4)²`.
    pub fn exact_statistic(&self, functional: Functional) -> Option<Box<dyn Fn(Point) -> f64 + Send + Sync>> {
        if self.kind != ProblemKind::AnalyticDisk {
            return None;
        }
        let factor = match functional {
            Functional::Identity => 1.0,
            Functional::Square => RECIPROCAL_FACTOR_SECOND_MOMENT.powi(self.dim() as i32),
        };
        Some(Box::new(move |x: Point| {
            let u0 = (1.0 - (x[0] * x[0] + x[1] * x[1])) / 4.0;
            factor * functional.apply(u0)
        }))
    }
}
