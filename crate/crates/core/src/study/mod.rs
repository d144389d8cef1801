//! Convergence studies and reference generation, with CSV output.
//!
//! Output directory contents:
//!
//! | file          | columns |
//! |---------------|---------|
//! | `errors.csv`  | j, family, representation, p, h_target, h_measured, solves, cost_units, error_h1, error_w11 |
//! | `cost.csv`    | j, family, representation, solves, expected_solves, cost_units |
//! | `samples.csv` | family, representation, term, quad_level, mesh_level, nodes, solves, unknowns, cost_units (finest j) |
//! | `meshes.csv`  | level, h_target, h_measured, vertices, triangles, unknowns |
//! | `timing.csv`  | j, family, representation, replicate, wall_seconds |
//! | `variance_<family>.csv` | x, y, mean, second_moment, variance (finest j, when p = 1 and 2 both run) |
//! | `study.log`   | failures and warnings |
//!
//! Everything except `timing.csv` is a deterministic function of the config.

mod config;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::coeff::Functional;
use crate::error::{Error, Result};
use crate::fem::ScalarField;
use crate::mesh::{generate_mesh, read_mesh, write_mesh, Mesh};
use crate::mlq::{
    estimate, expected_solves, measure_error, self_reference, variance_from_moments,
    EstimateReport, Hierarchy, MlConfig, NormKind, Representation,
};
use crate::quad::{self, Family};

pub use config::{parse_config, StudyConfig};

/// One line of `errors.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub j: usize,
    pub family: Family,
    pub representation: Representation,
    pub p: u32,
    pub h_target: f64,
    pub h_measured: f64,
    pub solves: usize,
    pub cost_units: usize,
    /// RMS over replicates for Monte Carlo.
    pub error_h1: f64,
    pub error_w11: f64,
}

/// Result of a variance check at one `(j, family, representation)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceCheck {
    pub j: usize,
    pub family: Family,
    pub representation: Representation,
    /// Smallest raw value of `E2 - E1²`.
    pub min_raw: f64,
    pub max_raw: f64,
    /// Whether every negative value fell within the clamp.
    pub within_clamp: bool,
}

#[derive(Debug, Clone, Default)]
pub struct StudySummary {
    pub rows: Vec<ErrorRow>,
    pub variance: Vec<VarianceCheck>,
    /// Cells that failed; the message is also in `study.log`.
    pub failures: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl StudySummary {
    /// Error rows for one family/representation/p, ordered by j.
    pub fn series(&self, family: Family, representation: Representation, p: u32) -> Vec<&ErrorRow> {
        self.rows
            .iter()
            .filter(|r| r.family == family && r.representation == representation && r.p == p)
            .collect()
    }
}

/// 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn reference_file(dir: &Path, f: Functional) -> PathBuf {
    dir.join(format!("reference_p{}.txt", f.power()))
}

/// Reference statistics for each functional, on one reference mesh.
struct References {
    mesh: Arc<Mesh>,
    fields: Vec<ScalarField>,
    provenance: String,
}

fn load_references(dir: &Path, functionals: &[Functional]) -> Result<References> {
    let mut mesh: Option<Arc<Mesh>> = None;
    let mut values = Vec::new();
    let mut provenance = String::new();
    for &f in functionals {
        let path = reference_file(dir, f);
        let file = read_mesh(BufReader::new(File::open(&path).map_err(|e| {
            Error::Config(format!("cannot open reference {}: {e}", path.display()))
        })?))?;
        let field = file
            .field
            .ok_or_else(|| Error::Config(format!("{} has no field section", path.display())))?;
        match &mesh {
            None => {
                provenance = file.comments.join("; ");
                mesh = Some(Arc::new(file.mesh));
            }
            Some(m) if **m == file.mesh => {}
            Some(_) => {
                return Err(Error::Config(format!(
                    "{} uses a different mesh than the other reference files",
                    path.display()
                )))
            }
        }
        values.push(field);
    }
    let mesh = mesh.expect("at least one functional");
    let fields = values
        .into_iter()
        .map(|v| ScalarField::new(Arc::clone(&mesh), v))
        .collect::<Result<_>>()?;
    Ok(References {
        mesh,
        fields,
        provenance: format!("loaded from {} ({provenance})", dir.display()),
    })
}

fn compute_references(cfg: &StudyConfig, mesh: Arc<Mesh>) -> Result<References> {
    let problem = &cfg.problem;
    let exact: Option<Vec<_>> = cfg.functionals.iter().map(|&f| problem.exact_statistic(f)).collect();
    if let Some(exact) = exact {
        let fields = exact
            .iter()
            .map(|g| ScalarField::from_fn(Arc::clone(&mesh), g))
            .collect();
        return Ok(References {
            mesh,
            fields,
            provenance: "closed-form statistic evaluated at the reference vertices".into(),
        });
    }
    let rule = quad::qmc_rule(cfg.reference_rule_level, problem.dim())?;
    log::info!(
        "self-reference: {} QMC samples on {} vertices",
        rule.len(),
        mesh.num_vertices()
    );
    let fields = self_reference(problem, &mesh, cfg.reference_level, &rule, &cfg.functionals, &cfg.solver)?;
    Ok(References {
        mesh,
        fields,
        provenance: format!(
            "single-level QMC, rule level {} ({} Halton points), solved on the reference mesh",
            cfg.reference_rule_level,
            rule.len()
        ),
    })
}

fn reference_mesh(cfg: &StudyConfig) -> Result<Mesh> {
    generate_mesh(cfg.problem.domain, cfg.problem.h(cfg.reference_level), cfg.mesh_seed)
}

/// Builds the reference mesh and statistics and writes
/// `reference_p{p}.txt` into `out`. Existing files are kept unless `force`.
pub fn generate_reference(cfg: &StudyConfig, out: &Path, force: bool) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let paths: Vec<PathBuf> = cfg.functionals.iter().map(|&f| reference_file(out, f)).collect();
    if !force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(Error::WouldOverwrite(p.display().to_string()));
        }
    }
    fs::create_dir_all(out)?;
    let mesh = Arc::new(reference_mesh(cfg)?);
    let refs = compute_references(cfg, mesh)?;
    for ((&f, field), path) in cfg.functionals.iter().zip(&refs.fields).zip(&paths) {
        let comments = vec![
            format!("reference statistic E[u^{}]", f.power()),
            format!("problem {}", cfg.problem.kind.name()),
            format!(
                "mesh level {} h_target {} mesh_seed {}",
                cfg.reference_level,
                fmt_real(cfg.problem.h(cfg.reference_level)),
                cfg.mesh_seed
            ),
            format!("solver base_tol {}", fmt_real(cfg.solver.base_tol)),
            format!("source {}", refs.provenance),
        ];
        let mut w = create(path)?;
        write_mesh(&mut w, &refs.mesh, Some(field.values()), &comments)?;
        w.flush()?;
    }
    Ok(paths)
}

fn write_meshes_csv(path: &Path, cfg: &StudyConfig, h: &Hierarchy) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "level,h_target,h_measured,vertices,triangles,unknowns")?;
    for l in 0..=h.j_max() {
        let m = h.mesh(l);
        writeln!(
            w,
            "{l},{},{},{},{},{}",
            fmt_real(cfg.problem.h(l)),
            fmt_real(m.h_measured()),
            m.num_vertices(),
            m.num_triangles(),
            h.unknowns(l)
        )?;
    }
    let r = h.reference();
    writeln!(
        w,
        "reference,{},{},{},{},{}",
        fmt_real(cfg.problem.h(cfg.reference_level)),
        fmt_real(r.h_measured()),
        r.num_vertices(),
        r.num_triangles(),
        r.num_interior()
    )?;
    w.flush()?;
    Ok(())
}

fn write_variance_csv(path: &Path, mean: &ScalarField, second: &ScalarField, variance: &ScalarField) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "x,y,mean,second_moment,variance")?;
    for (i, x) in mean.mesh().vertices().iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_real(x[0]),
            fmt_real(x[1]),
            fmt_real(mean.values()[i]),
            fmt_real(second.values()[i]),
            fmt_real(variance.values()[i])
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Raw `E2 - E1²` extrema, and the clamped field when negativity is within
/// tolerance.
fn check_variance(report: &EstimateReport) -> Option<(f64, f64, Result<ScalarField>)> {
    let mean = report.statistic(Functional::Identity)?;
    let second = report.statistic(Functional::Square)?;
    let raw: Vec<f64> = mean
        .values()
        .iter()
        .zip(second.values())
        .map(|(m, s)| s - m * m)
        .collect();
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((min, max, variance_from_moments(mean, second).map(|(v, _)| v)))
}

/// Runs every `(j, family, representation)` cell and writes the CSV tables
/// into `cfg.out`. Cells that fail are logged and skipped.
pub fn run_convergence_study(cfg: &StudyConfig) -> Result<StudySummary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let out = &cfg.out;
    let mut log_file = create(&out.join("study.log"))?;

    let refs = match &cfg.reference_dir {
        Some(dir) => load_references(dir, &cfg.functionals)?,
        None => compute_references(cfg, Arc::new(reference_mesh(cfg)?))?,
    };
    writeln!(log_file, "reference: {}", refs.provenance)?;
    let hierarchy = Hierarchy::with_reference(
        &cfg.problem,
        cfg.j_max,
        Arc::clone(&refs.mesh),
        cfg.reference_level,
        cfg.mesh_seed,
    )?;

    let mut summary = StudySummary::default();
    let file = |name: &str, summary: &mut StudySummary| {
        let p = out.join(name);
        summary.files.push(p.clone());
        p
    };
    write_meshes_csv(&file("meshes.csv", &mut summary), cfg, &hierarchy)?;
    let mut errors = create(&file("errors.csv", &mut summary))?;
    writeln!(
        errors,
        "j,family,representation,p,h_target,h_measured,solves,cost_units,error_h1,error_w11"
    )?;
    let mut cost = create(&file("cost.csv", &mut summary))?;
    writeln!(cost, "j,family,representation,solves,expected_solves,cost_units")?;
    let mut timing = create(&file("timing.csv", &mut summary))?;
    writeln!(timing, "j,family,representation,replicate,wall_seconds")?;
    let mut samples = Vec::new();
    let m = cfg.problem.dim();

    for j in 0..=cfg.j_max {
        for &family in &cfg.families {
            let replicates = if family == Family::MonteCarlo { cfg.replicates } else { 1 };
            for &representation in &cfg.representations {
                let mut sq = vec![[0.0f64; 2]; cfg.functionals.len()];
                let mut first: Option<EstimateReport> = None;
                let mut failed = None;
                for r in 0..replicates {
                    let ml = MlConfig {
                        j,
                        family,
                        seed: cfg.seed.wrapping_add(r as u64),
                        representation,
                        solver: cfg.solver,
                    };
                    match estimate(&hierarchy, &ml, &cfg.functionals) {
                        Ok(report) => {
                            writeln!(timing, "{j},{family},{representation},{r},{:.6}", report.wall_seconds)?;
                            for (k, stat) in report.statistics.iter().enumerate() {
                                let e1 = measure_error(stat, &refs.fields[k], NormKind::H1)?;
                                let e2 = measure_error(stat, &refs.fields[k], NormKind::W11)?;
                                sq[k][0] += e1 * e1;
                                sq[k][1] += e2 * e2;
                            }
                            if first.is_none() {
                                first = Some(report);
                            }
                        }
                        Err(e) => {
                            failed = Some(format!("j={j} {family} {representation} replicate {r}: {e}"));
                            break;
                        }
                    }
                }
                if let Some(msg) = failed {
                    writeln!(log_file, "failed: {msg}")?;
                    log::error!("{msg}");
                    summary.failures.push(msg);
                    continue;
                }
                let report = first.expect("at least one replicate");
                for (k, &f) in cfg.functionals.iter().enumerate() {
                    let row = ErrorRow {
                        j,
                        family,
                        representation,
                        p: f.power(),
                        h_target: cfg.problem.h(j),
                        h_measured: hierarchy.mesh(j).h_measured(),
                        solves: report.total_solves(),
                        cost_units: report.total_cost_units(),
                        error_h1: (sq[k][0] / replicates as f64).sqrt(),
                        error_w11: (sq[k][1] / replicates as f64).sqrt(),
                    };
                    writeln!(
                        errors,
                        "{j},{family},{representation},{},{},{},{},{},{},{}",
                        row.p,
                        fmt_real(row.h_target),
                        fmt_real(row.h_measured),
                        row.solves,
                        row.cost_units,
                        fmt_real(row.error_h1),
                        fmt_real(row.error_w11)
                    )?;
                    summary.rows.push(row);
                }
                writeln!(
                    cost,
                    "{j},{family},{representation},{},{},{}",
                    report.total_solves(),
                    expected_solves(family, representation, j, m),
                    report.total_cost_units()
                )?;
                if let Some((min_raw, max_raw, var)) = check_variance(&report) {
                    let within_clamp = var.is_ok();
                    if let Err(e) = &var {
                        writeln!(log_file, "warning: j={j} {family} {representation}: {e}")?;
                    }
                    if j == cfg.j_max && Some(&representation) == cfg.representations.first() {
                        if let Ok(v) = &var {
                            let path = file(&format!("variance_{family}.csv"), &mut summary);
                            let mean = report.statistic(Functional::Identity).expect("mean");
                            let second = report.statistic(Functional::Square).expect("second moment");
                            write_variance_csv(&path, mean, second, v)?;
                        }
                    }
                    summary.variance.push(VarianceCheck {
                        j,
                        family,
                        representation,
                        min_raw,
                        max_raw,
                        within_clamp,
                    });
                }
                if j == cfg.j_max {
                    samples.push((family, representation, report.per_level.clone()));
                }
            }
        }
        errors.flush()?;
        cost.flush()?;
        timing.flush()?;
        log_file.flush()?;
    }

    let mut w = create(&file("samples.csv", &mut summary))?;
    writeln!(
        w,
        "family,representation,term,quad_level,mesh_level,nodes,solves,unknowns,cost_units"
    )?;
    for (family, representation, levels) in samples {
        for t in levels {
            writeln!(
                w,
                "{family},{representation},{},{},{},{},{},{},{}",
                t.term,
                t.quad_level,
                t.mesh_level,
                t.nodes,
                t.solves,
                hierarchy.unknowns(t.mesh_level),
                t.cost_units
            )?;
        }
    }
    w.flush()?;
    summary.files.push(out.join("study.log"));
    Ok(summary)
}
