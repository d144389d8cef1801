//! Multilevel estimators of `E[u^p]` on a hierarchy of non-nested meshes.
//!
//! Two algebraically equal representations are provided:
//!
//! * `NestedQ`: `Σ_ℓ ΔQ_ℓ F(u_{j-ℓ})`, one solve per node of each
//!   difference rule;
//! * `NestedV`: `Σ_ℓ Q_{j-ℓ} (F(u_ℓ) - F(u_{ℓ-1}))`, two solves per node
//!   except on level 0.
//!
//! Per-level sums are formed on the level mesh and interpolated to the
//! reference mesh once; interpolation is linear, so this equals
//! interpolating every sample.

mod cost;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::coeff::{Functional, ProblemSpec};
use crate::error::{Error, Result};
use crate::fem::{Discretization, ScalarField, SolverOptions};
use crate::mesh::{generate_mesh, Mesh, Transfer};
use crate::quad::{self, DifferenceRule, Family, QuadratureRule};
use crate::sum::FieldAccumulator;

pub use cost::{compute_cost_model, CostModel};

/// Nodes solved per parallel batch; bounds the number of live solutions.
const BATCH: usize = 256;

/// Relative clamp for slightly negative variance values.
pub const VARIANCE_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    NestedQ,
    NestedV,
}

impl Representation {
    pub const ALL: [Representation; 2] = [Representation::NestedQ, Representation::NestedV];

    pub fn name(self) -> &'static str {
        match self {
            Representation::NestedQ => "nestedQ",
            Representation::NestedV => "nestedV",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nestedq" | "q" => Ok(Representation::NestedQ),
            "nestedv" | "v" => Ok(Representation::NestedV),
            other => Err(Error::InvalidArgument(format!(
                "unknown representation '{other}' (expected nestedQ or nestedV)"
            ))),
        }
    }
}

/// Meshes `0..=j_max`, their discretizations, and transfers onto a common
/// reference mesh. Level meshes do not depend on `j_max`.
pub struct Hierarchy {
    problem: ProblemSpec,
    levels: Vec<Level>,
    reference: Arc<Mesh>,
    reference_level: usize,
}

struct Level {
    disc: Discretization,
    to_reference: Transfer,
}

impl fmt::Debug for Hierarchy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hierarchy")
            .field("problem", &self.problem.kind)
            .field("levels", &self.levels.len())
            .field("reference_level", &self.reference_level)
            .finish()
    }
}

impl Hierarchy {
    /// Generates level meshes and a reference mesh at `reference_level`.
    pub fn new(problem: &ProblemSpec, j_max: usize, reference_level: usize, mesh_seed: u64) -> Result<Self> {
        if reference_level <= j_max {
            return Err(Error::InvalidArgument(format!(
                "reference level {reference_level} must exceed j_max = {j_max}"
            )));
        }
        let reference = Arc::new(generate_mesh(problem.domain, problem.h(reference_level), mesh_seed)?);
        Self::with_reference(problem, j_max, reference, reference_level, mesh_seed)
    }

    /// Like [`Hierarchy::new`] but with a given reference mesh.
    pub fn with_reference(
        problem: &ProblemSpec,
        j_max: usize,
        reference: Arc<Mesh>,
        reference_level: usize,
        mesh_seed: u64,
    ) -> Result<Self> {
        let levels = (0..=j_max)
            .into_par_iter()
            .map(|l| -> Result<Level> {
                let mesh = Arc::new(generate_mesh(problem.domain, problem.h(l), mesh_seed)?);
                let to_reference = Transfer::new(&mesh, &reference);
                let disc = Discretization::new(mesh, &problem.coefficient, &problem.source);
                Ok(Level { disc, to_reference })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            problem: problem.clone(),
            levels,
            reference,
            reference_level,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn j_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn mesh(&self, level: usize) -> &Arc<Mesh> {
        self.levels[level].disc.mesh()
    }

    pub fn unknowns(&self, level: usize) -> usize {
        self.levels[level].disc.num_unknowns()
    }

    pub fn discretization(&self, level: usize) -> &Discretization {
        &self.levels[level].disc
    }

    pub fn reference(&self) -> &Arc<Mesh> {
        &self.reference
    }

    pub fn reference_level(&self) -> usize {
        self.reference_level
    }

    /// Interpolates a nodal vector on mesh `level` to the reference mesh.
    pub fn to_reference(&self, level: usize, values: &[f64]) -> Result<Vec<f64>> {
        self.levels[level].to_reference.apply(values)
    }
}

/// One multilevel run.
#[derive(Debug, Clone, PartialEq)]
pub struct MlConfig {
    pub j: usize,
    pub family: Family,
    pub seed: u64,
    pub representation: Representation,
    pub solver: SolverOptions,
}

impl MlConfig {
    pub fn new(j: usize, family: Family, representation: Representation) -> Self {
        Self {
            j,
            family,
            seed: 0,
            representation,
            solver: SolverOptions::default(),
        }
    }
}

/// Work done for one term of the multilevel sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelTally {
    /// Index ℓ of the term.
    pub term: usize,
    /// Quadrature level used by the term.
    pub quad_level: usize,
    /// Finest mesh level used by the term.
    pub mesh_level: usize,
    /// Quadrature nodes visited.
    pub nodes: usize,
    pub solves: usize,
    /// Σ over solves of the number of unknowns.
    pub cost_units: usize,
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub config: MlConfig,
    pub functionals: Vec<Functional>,
    /// One field per functional, on the reference mesh.
    pub statistics: Vec<ScalarField>,
    pub per_level: Vec<LevelTally>,
    pub wall_seconds: f64,
}

impl EstimateReport {
    pub fn total_solves(&self) -> usize {
        self.per_level.iter().map(|t| t.solves).sum()
    }

    pub fn total_cost_units(&self) -> usize {
        self.per_level.iter().map(|t| t.cost_units).sum()
    }

    pub fn statistic(&self, functional: Functional) -> Option<&ScalarField> {
        self.functionals
            .iter()
            .position(|&f| f == functional)
            .map(|i| &self.statistics[i])
    }
}

/// Weighted sums `Σ_i w_i F(u(y_i))` on the mesh of `disc`, one per
/// functional, accumulated in node order. `term` labels errors.
fn weighted_sums(
    disc: &Discretization,
    rel_tol: f64,
    jacobi: bool,
    rule: &QuadratureRule,
    functionals: &[Functional],
    term: usize,
) -> Result<Vec<Vec<f64>>> {
    let nv = disc.mesh().num_vertices();
    let mut acc: Vec<FieldAccumulator> = functionals.iter().map(|_| FieldAccumulator::zeros(nv)).collect();
    let mut scratch = vec![0.0; nv];
    for start in (0..rule.len()).step_by(BATCH) {
        let end = (start + BATCH).min(rule.len());
        let solutions: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|i| disc.solve(rule.node(i), rel_tol, jacobi).map_err(|e| e.at_node(term, i)))
            .collect::<Result<_>>()?;
        for (offset, u) in solutions.iter().enumerate() {
            let w = rule.weight(start + offset);
            for (f, a) in functionals.iter().zip(acc.iter_mut()) {
                for (s, &v) in scratch.iter_mut().zip(u) {
                    *s = f.apply(v);
                }
                a.add_scaled(w, &scratch);
            }
        }
    }
    Ok(acc.iter().map(FieldAccumulator::values).collect())
}

fn level_sums(
    hierarchy: &Hierarchy,
    level: usize,
    rule: &QuadratureRule,
    functionals: &[Functional],
    solver: &SolverOptions,
    term: usize,
) -> Result<Vec<Vec<f64>>> {
    let disc = hierarchy.discretization(level);
    weighted_sums(disc, solver.rel_tol(level), solver.jacobi, rule, functionals, term)
}

fn check_config(hierarchy: &Hierarchy, config: &MlConfig, functionals: &[Functional]) -> Result<()> {
    if config.j > hierarchy.j_max() {
        return Err(Error::InvalidArgument(format!(
            "j = {} exceeds the hierarchy's j_max = {}",
            config.j,
            hierarchy.j_max()
        )));
    }
    if functionals.is_empty() {
        return Err(Error::InvalidArgument("no functional requested".into()));
    }
    Ok(())
}

/// Runs one estimator for several functionals; every solve feeds all of them.
pub fn estimate(hierarchy: &Hierarchy, config: &MlConfig, functionals: &[Functional]) -> Result<EstimateReport> {
    check_config(hierarchy, config, functionals)?;
    let started = Instant::now();
    let m = hierarchy.problem().dim();
    let nref = hierarchy.reference().num_vertices();
    let j = config.j;
    let mut total: Vec<FieldAccumulator> = functionals.iter().map(|_| FieldAccumulator::zeros(nref)).collect();
    let mut per_level = Vec::with_capacity(j + 1);

    let add = |total: &mut Vec<FieldAccumulator>, level: usize, sums: Vec<Vec<f64>>, sign: f64| -> Result<()> {
        for (acc, s) in total.iter_mut().zip(sums) {
            acc.add_scaled(sign, &hierarchy.to_reference(level, &s)?);
        }
        Ok(())
    };

    match config.representation {
        Representation::NestedQ => {
            for l in 0..=j {
                let level = j - l;
                let delta: DifferenceRule = quad::difference_rule(config.family, l, m, config.seed)?;
                log::debug!("nestedQ term {l}: {} nodes on mesh level {level}", delta.len());
                let sums = level_sums(hierarchy, level, delta.as_rule(), functionals, &config.solver, l)?;
                add(&mut total, level, sums, 1.0)?;
                let n = delta.len();
                per_level.push(LevelTally {
                    term: l,
                    quad_level: l,
                    mesh_level: level,
                    nodes: n,
                    solves: n,
                    cost_units: n * hierarchy.unknowns(level),
                });
            }
        }
        Representation::NestedV => {
            for l in 0..=j {
                let q = quad::rule(config.family, j - l, m, config.seed)?;
                log::debug!("nestedV term {l}: {} nodes on mesh levels {l}, {}", q.len(), l.saturating_sub(1));
                let sums = level_sums(hierarchy, l, &q, functionals, &config.solver, l)?;
                add(&mut total, l, sums, 1.0)?;
                let n = q.len();
                let mut tally = LevelTally {
                    term: l,
                    quad_level: j - l,
                    mesh_level: l,
                    nodes: n,
                    solves: n,
                    cost_units: n * hierarchy.unknowns(l),
                };
                if l > 0 {
                    let sums = level_sums(hierarchy, l - 1, &q, functionals, &config.solver, l)?;
                    add(&mut total, l - 1, sums, -1.0)?;
                    tally.solves += n;
                    tally.cost_units += n * hierarchy.unknowns(l - 1);
                }
                per_level.push(tally);
            }
        }
    }

    let statistics = total
        .iter()
        .map(|acc| ScalarField::new(Arc::clone(hierarchy.reference()), acc.values()))
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateReport {
        config: config.clone(),
        functionals: functionals.to_vec(),
        statistics,
        per_level,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// `Σ_ℓ ΔQ_ℓ F(u_{j-ℓ})`.
pub fn ml_estimate_nested_q(
    hierarchy: &Hierarchy,
    config: &MlConfig,
    functional: Functional,
) -> Result<EstimateReport> {
    let config = MlConfig {
        representation: Representation::NestedQ,
        ..config.clone()
    };
    estimate(hierarchy, &config, &[functional])
}

/// `Σ_ℓ Q_{j-ℓ} (F(u_ℓ) - F(u_{ℓ-1}))`.
pub fn ml_estimate_nested_v(
    hierarchy: &Hierarchy,
    config: &MlConfig,
    functional: Functional,
) -> Result<EstimateReport> {
    let config = MlConfig {
        representation: Representation::NestedV,
        ..config.clone()
    };
    estimate(hierarchy, &config, &[functional])
}

/// Solves predicted for a representation: `Σ N_ℓ` for nestedQ and
/// `Σ N_{j-ℓ}(2 - [ℓ=0])` for nestedV.
pub fn expected_solves(family: Family, representation: Representation, j: usize, m: usize) -> usize {
    match representation {
        Representation::NestedQ => (0..=j).map(|l| family.size(l, m)).sum(),
        Representation::NestedV => (0..=j)
            .map(|l| family.size(j - l, m) * if l == 0 { 1 } else { 2 })
            .sum(),
    }
}

/// `E[u²] - E[u]²` pointwise.
#[derive(Debug, Clone)]
pub struct VarianceEstimate {
    pub mean: ScalarField,
    pub second_moment: ScalarField,
    pub variance: ScalarField,
    /// Entries that were negative but within the clamp and set to zero.
    pub clamped: usize,
    pub report: EstimateReport,
}

/// Runs the mean and second moment off shared solves and forms the variance.
pub fn estimate_variance(hierarchy: &Hierarchy, config: &MlConfig) -> Result<VarianceEstimate> {
    let report = estimate(hierarchy, config, &[Functional::Identity, Functional::Square])?;
    let mean = report.statistics[0].clone();
    let second = report.statistics[1].clone();
    let (variance, clamped) = variance_from_moments(&mean, &second)?;
    Ok(VarianceEstimate {
        mean,
        second_moment: second,
        variance,
        clamped,
        report,
    })
}

/// Pointwise `E2 - E1²`, clamping values in `[-1e-10·max, 0)` to zero.
pub fn variance_from_moments(mean: &ScalarField, second: &ScalarField) -> Result<(ScalarField, usize)> {
    let raw = second.sub(&ScalarField::new(
        Arc::clone(mean.mesh()),
        mean.values().iter().map(|v| v * v).collect(),
    )?)?;
    let values = raw.values();
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = VARIANCE_CLAMP * max;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -threshold {
        return Err(Error::NegativeVariance { min, threshold });
    }
    let clamped = values.iter().filter(|v| **v < 0.0).count();
    let fixed = values.iter().map(|v| v.max(0.0)).collect();
    Ok((ScalarField::new(Arc::clone(mean.mesh()), fixed)?, clamped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    H1,
    W11,
}

/// Norm of `estimate - reference`; both must live on the same mesh.
pub fn measure_error(estimate: &ScalarField, reference: &ScalarField, norm: NormKind) -> Result<f64> {
    let diff = estimate.sub(reference)?;
    Ok(match norm {
        NormKind::H1 => diff.h1_norm(),
        NormKind::W11 => diff.w11_norm(),
    })
}

/// Plain quadrature `Q_level F(u_mesh_level)` on the reference mesh of a
/// hierarchy, used for self-references.
pub fn single_level_estimate(
    hierarchy: &Hierarchy,
    mesh_level: usize,
    rule: &QuadratureRule,
    functionals: &[Functional],
    solver: &SolverOptions,
) -> Result<Vec<ScalarField>> {
    let sums = level_sums(hierarchy, mesh_level, rule, functionals, solver, 0)?;
    sums.into_iter()
        .map(|s| ScalarField::new(Arc::clone(hierarchy.reference()), hierarchy.to_reference(mesh_level, &s)?))
        .collect()
}

/// Single-level estimate `Q F(u)` computed directly on the reference mesh,
/// which is treated as mesh level `reference_level` for the solver tolerance.
pub fn self_reference(
    problem: &ProblemSpec,
    reference: &Arc<Mesh>,
    reference_level: usize,
    rule: &QuadratureRule,
    functionals: &[Functional],
    solver: &SolverOptions,
) -> Result<Vec<ScalarField>> {
    let disc = Discretization::new(Arc::clone(reference), &problem.coefficient, &problem.source);
    let sums = weighted_sums(&disc, solver.rel_tol(reference_level), solver.jacobi, rule, functionals, 0)?;
    sums.into_iter()
        .map(|s| ScalarField::new(Arc::clone(reference), s))
        .collect()
}
