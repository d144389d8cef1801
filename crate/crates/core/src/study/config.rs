//! Study configuration: `[section]` headers followed by `key = value` lines.
//! `#` starts a comment. Unknown sections and keys are errors.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::coeff::{AffineCoefficient, Functional, ProblemSpec, SpatialFn};
use crate::error::{Error, Result};
use crate::fem::SolverOptions;
use crate::mesh::Domain;
use crate::mlq::Representation;
use crate::quad::Family;

/// A fully resolved convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub problem: ProblemSpec,
    pub families: Vec<Family>,
    pub representations: Vec<Representation>,
    pub functionals: Vec<Functional>,
    pub j_max: usize,
    /// Monte Carlo repetitions; errors are reported as RMS over them.
    pub replicates: usize,
    pub seed: u64,
    pub mesh_seed: u64,
    pub reference_level: usize,
    /// QMC level of the self-reference (unused when an exact statistic exists).
    pub reference_rule_level: usize,
    /// Directory holding `reference_p{1,2}.txt`, if a stored reference is used.
    pub reference_dir: Option<PathBuf>,
    pub solver: SolverOptions,
    pub out: PathBuf,
}

impl StudyConfig {
    /// Defaults for a problem: all families, both representations, the mean,
    /// `j_max = 4`, five replicates, reference two levels finer.
    pub fn new(problem: ProblemSpec) -> Self {
        let j_max = 4;
        Self {
            problem,
            families: Family::ALL.to_vec(),
            representations: Representation::ALL.to_vec(),
            functionals: vec![Functional::Identity],
            j_max,
            replicates: 5,
            seed: 1,
            mesh_seed: 1,
            reference_level: j_max + 2,
            reference_rule_level: j_max + 3,
            reference_dir: None,
            solver: SolverOptions::default(),
            out: PathBuf::from("out"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.replicates == 0 {
            return fail("replicates must be at least 1".into());
        }
        if self.reference_level <= self.j_max {
            return fail(format!(
                "reference_level ({}) must exceed j_max ({})",
                self.reference_level, self.j_max
            ));
        }
        if self.families.is_empty() || self.representations.is_empty() || self.functionals.is_empty() {
            return fail("families, representations and functionals must be non-empty".into());
        }
        if !(self.problem.h0 > 0.0) {
            return fail(format!("h0 must be positive, got {}", self.problem.h0));
        }
        if !(self.solver.base_tol > 0.0 && self.solver.base_tol < 1.0) {
            return fail(format!("solver tolerance must lie in (0, 1), got {}", self.solver.base_tol));
        }
        if self.families.contains(&Family::QmcHalton) && self.problem.dim() > crate::quad::MAX_HALTON_DIM {
            return fail(format!("qmc supports at most {} parameters", crate::quad::MAX_HALTON_DIM));
        }
        Ok(())
    }
}

type Section = BTreeMap<String, Vec<(usize, String)>>;

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("malformed section header '{line}'"),
                })?
                .trim()
                .to_string();
            if sections.contains_key(&name) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("section [{name}] appears twice"),
                });
            }
            sections.insert(name.clone(), Section::new());
            current = Some(name);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: "expected 'key = value'".into(),
        })?;
        let section = current.as_ref().ok_or_else(|| Error::Parse {
            line: line_no,
            message: "key outside of any [section]".into(),
        })?;
        sections
            .get_mut(section)
            .expect("section inserted")
            .entry(key.trim().to_string())
            .or_default()
            .push((line_no, value.trim().to_string()));
    }
    Ok(sections)
}

struct Reader {
    section: &'static str,
    entries: Section,
}

impl Reader {
    fn single(&mut self, key: &str) -> Result<Option<(usize, String)>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(mut v) if v.len() == 1 => Ok(v.pop()),
            Some(v) => Err(Error::Parse {
                line: v[1].0,
                message: format!("duplicate key '{key}' in [{}]", self.section),
            }),
        }
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.single(key)? {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| Error::Parse {
                line,
                message: format!("{key}: {e}"),
            }),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.single(key)? {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<T>().map_err(|e| Error::Parse {
                        line,
                        message: format!("{key}: {e}"),
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some((key, v)) = self.entries.into_iter().next() {
            return Err(Error::Parse {
                line: v[0].0,
                message: format!("unknown key '{key}' in [{}]", self.section),
            });
        }
        Ok(())
    }
}

struct Power(Functional);

impl FromStr for Power {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let p: u32 = s
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("'{s}' is not a functional power")))?;
        Functional::from_power(p).map(Power)
    }
}

fn parse_problem(mut r: Reader) -> Result<ProblemSpec> {
    let (name_line, name) = r.single("name")?.ok_or_else(|| Error::Config("[problem] needs 'name'".into()))?;
    let mut problem = match name.as_str() {
        "analytic_disk" => ProblemSpec::analytic_disk(),
        "sinusoidal_square" => ProblemSpec::sinusoidal_square(),
        "custom" => {
            let domain: Domain = r
                .parse("domain")?
                .ok_or_else(|| Error::Config("custom problem needs 'domain'".into()))?;
            let mean: SpatialFn = r.parse("mean")?.unwrap_or_else(|| SpatialFn::constant(1.0));
            let terms = r
                .entries
                .remove("term")
                .unwrap_or_default()
                .into_iter()
                .map(|(line, v)| {
                    v.parse::<SpatialFn>().map_err(|e| Error::Parse {
                        line,
                        message: format!("term: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if terms.is_empty() {
                return Err(Error::Config("custom problem needs at least one 'term'".into()));
            }
            let source: SpatialFn = r.parse("source")?.unwrap_or_else(|| SpatialFn::constant(1.0));
            let coefficient = AffineCoefficient::new(mean, terms);
            crate::coeff::certify_ellipticity(
                &crate::coeff::Coefficient::Affine(coefficient.clone()),
                domain,
                201,
            )
            .map_err(|e| Error::Config(e.to_string()))?;
            ProblemSpec::custom(domain, coefficient, source, 0.5)
        }
        other => {
            return Err(Error::Parse {
                line: name_line,
                message: format!("unknown problem '{other}' (analytic_disk, sinusoidal_square, custom)"),
            })
        }
    };
    if let Some(h0) = r.parse::<f64>("h0")? {
        problem.h0 = h0;
    }
    r.finish()?;
    Ok(problem)
}

/// Parses a study configuration.
pub fn parse_config(text: &str) -> Result<StudyConfig> {
    let mut sections = split_sections(text)?;
    let problem_section = sections
        .remove("problem")
        .ok_or_else(|| Error::Config("missing [problem] section".into()))?;
    let problem = parse_problem(Reader {
        section: "problem",
        entries: problem_section,
    })?;
    let mut cfg = StudyConfig::new(problem);

    let mut study = Reader {
        section: "study",
        entries: sections.remove("study").unwrap_or_default(),
    };
    if let Some(v) = study.list::<Family>("families")? {
        cfg.families = v;
    }
    if let Some(v) = study.list::<Representation>("representations")? {
        cfg.representations = v;
    }
    if let Some(v) = study.list::<Power>("functionals")? {
        cfg.functionals = v.into_iter().map(|p| p.0).collect();
        cfg.functionals.sort();
        cfg.functionals.dedup();
    }
    if let Some(v) = study.parse("j_max")? {
        cfg.j_max = v;
        cfg.reference_level = v + 2;
        cfg.reference_rule_level = v + 3;
    }
    if let Some(v) = study.parse("replicates")? {
        cfg.replicates = v;
    }
    if let Some(v) = study.parse("seed")? {
        cfg.seed = v;
        cfg.mesh_seed = v;
    }
    if let Some(v) = study.parse("mesh_seed")? {
        cfg.mesh_seed = v;
    }
    if let Some(v) = study.parse::<String>("out")? {
        cfg.out = PathBuf::from(v);
    }
    study.finish()?;

    let mut reference = Reader {
        section: "reference",
        entries: sections.remove("reference").unwrap_or_default(),
    };
    if let Some(v) = reference.parse("level")? {
        cfg.reference_level = v;
        cfg.reference_rule_level = v + 1;
    }
    if let Some(v) = reference.parse("rule_level")? {
        cfg.reference_rule_level = v;
    }
    if let Some(v) = reference.parse::<String>("dir")? {
        cfg.reference_dir = Some(PathBuf::from(v));
    }
    reference.finish()?;

    let mut solver = Reader {
        section: "solver",
        entries: sections.remove("solver").unwrap_or_default(),
    };
    if let Some(v) = solver.parse("base_tol")? {
        cfg.solver.base_tol = v;
    }
    if let Some(v) = solver.parse("jacobi")? {
        cfg.solver.jacobi = v;
    }
    solver.finish()?;

    if let Some(name) = sections.keys().next() {
        return Err(Error::Config(format!("unknown section [{name}]")));
    }
    cfg.validate()?;
    Ok(cfg)
}
