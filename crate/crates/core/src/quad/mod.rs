//! Quadrature rules on `[-1,1]^m` for the uniform density `(1/2)^m`.
//!
//! Weights are normalized against that density, so a rule approximates
//! `∫ v(y) ρ(y) dy` directly and integrates constants to 1.

mod sequences;
mod sparse;

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

pub use sequences::{halton_point, mc_point, radical_inverse};
pub use sparse::{cc_1d, cc_1d_size, smolyak, smolyak_size};

/// Largest dimension supported by the Halton family.
pub const MAX_HALTON_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    MonteCarlo,
    QmcHalton,
    CcSparse,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::MonteCarlo, Family::QmcHalton, Family::CcSparse];

    pub fn name(self) -> &'static str {
        match self {
            Family::MonteCarlo => "monte_carlo",
            Family::QmcHalton => "qmc_halton",
            Family::CcSparse => "cc_sparse",
        }
    }

    /// Number of nodes of the level-`level` rule.
    pub fn size(self, level: usize, m: usize) -> usize {
        match self {
            Family::MonteCarlo => 10 << (2 * level),
            Family::QmcHalton => 10 << level,
            Family::CcSparse => smolyak_size(level, m),
        }
    }

    /// Growth factor θ of the node count between levels (nominal for CC).
    pub fn theta(self) -> f64 {
        match self {
            Family::MonteCarlo => 4.0,
            Family::QmcHalton | Family::CcSparse => 2.0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" | "monte_carlo" | "montecarlo" => Ok(Family::MonteCarlo),
            "qmc" | "qmc_halton" | "halton" => Ok(Family::QmcHalton),
            "cc" | "cc_sparse" | "sparse" | "sparse_cc" => Ok(Family::CcSparse),
            other => Err(Error::InvalidArgument(format!(
                "unknown quadrature family '{other}' (expected mc, qmc or cc)"
            ))),
        }
    }
}

/// Node/weight list on `[-1,1]^m`. Nodes are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    pub level: usize,
    pub family: Family,
    /// Leading nodes shared bit-for-bit with the level-1 rule.
    pub nested_prefix: Option<usize>,
}

impl QuadratureRule {
    pub fn from_parts(dim: usize, nodes: Vec<Vec<f64>>, weights: Vec<f64>, level: usize, family: Family) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        let mut flat = Vec::with_capacity(nodes.len() * dim);
        for p in &nodes {
            if p.len() != dim {
                return Err(Error::InvalidArgument(format!("node of dimension {} in a {dim}-d rule", p.len())));
            }
            flat.extend_from_slice(p);
        }
        Ok(Self {
            dim,
            nodes: flat,
            weights,
            level,
            family,
            nested_prefix: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact on an empty dim would panic
        self.nodes.chunks_exact(self.dim.max(1)).take(self.weights.len())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `Σ w_i v(y_i)`, summed in node order with compensation.
    pub fn integrate(&self, v: impl Fn(&[f64]) -> f64) -> f64 {
        let mut acc = NeumaierSum::new();
        for (i, &w) in self.weights.iter().enumerate() {
            acc.add(w * v(self.node(i)));
        }
        acc.value()
    }

    /// CSV with columns `y_1..y_m,weight`.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|k| format!("y_{k}")).chain(["weight".into()]).collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let row: Vec<String> = self
                .node(i)
                .iter()
                .chain(std::iter::once(&self.weights[i]))
                .map(|v| format!("{v:.17e}"))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_dim(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("parameter dimension must be at least 1".into()));
    }
    Ok(())
}

/// `10·4^level` pseudo-random uniform nodes; lower levels are prefixes.
pub fn mc_rule(level: usize, m: usize, seed: u64) -> Result<QuadratureRule> {
    check_dim(m)?;
    let n = Family::MonteCarlo.size(level, m);
    let nodes = (0..n).map(|i| mc_point(i, m, seed)).collect();
    let mut rule = QuadratureRule::from_parts(m, nodes, vec![1.0 / n as f64; n], level, Family::MonteCarlo)?;
    rule.nested_prefix = (level > 0).then(|| Family::MonteCarlo.size(level - 1, m));
    Ok(rule)
}

/// First `10·2^level` Halton points with equal weights.
pub fn qmc_rule(level: usize, m: usize) -> Result<QuadratureRule> {
    check_dim(m)?;
    if m > MAX_HALTON_DIM {
        return Err(Error::InvalidArgument(format!(
            "Halton points need m <= {MAX_HALTON_DIM}, got {m}"
        )));
    }
    let n = Family::QmcHalton.size(level, m);
    let nodes = (0..n).map(|i| halton_point(i, m)).collect();
    let mut rule = QuadratureRule::from_parts(m, nodes, vec![1.0 / n as f64; n], level, Family::QmcHalton)?;
    rule.nested_prefix = (level > 0).then(|| Family::QmcHalton.size(level - 1, m));
    Ok(rule)
}

/// Smolyak Clenshaw-Curtis rule; sparse level equals `level`.
pub fn cc_sparse_rule(level: usize, m: usize) -> Result<QuadratureRule> {
    check_dim(m)?;
    let (nodes, weights) = smolyak(level, m);
    let scale = 0.5f64.powi(m as i32);
    let weights = weights.into_iter().map(|w| w * scale).collect();
    let mut rule = QuadratureRule::from_parts(m, nodes, weights, level, Family::CcSparse)?;
    rule.nested_prefix = (level > 0).then(|| smolyak_size(level - 1, m));
    Ok(rule)
}

/// Level-`level` rule of a family. `seed` only matters for Monte Carlo.
pub fn rule(family: Family, level: usize, m: usize, seed: u64) -> Result<QuadratureRule> {
    match family {
        Family::MonteCarlo => mc_rule(level, m, seed),
        Family::QmcHalton => qmc_rule(level, m),
        Family::CcSparse => cc_sparse_rule(level, m),
    }
}

/// Signed rule `Q_level - Q_{level-1}` with coincident nodes merged.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceRule {
    rule: QuadratureRule,
}

impl DifferenceRule {
    /// Merges `fine - coarse`, keeping the node order of `fine` and
    /// appending coarse-only nodes.
    pub fn from_pair(fine: &QuadratureRule, coarse: Option<&QuadratureRule>) -> Result<Self> {
        let Some(coarse) = coarse else {
            return Ok(Self { rule: fine.clone() });
        };
        if coarse.dim != fine.dim {
            return Err(Error::InvalidArgument("difference of rules with different dimensions".into()));
        }
        let key = |p: &[f64]| -> Vec<u64> { p.iter().map(|v| (v + 0.0).to_bits()).collect() };
        let mut nodes: Vec<Vec<f64>> = fine.nodes().map(<[f64]>::to_vec).collect();
        let mut weights = fine.weights.clone();
        let mut index: HashMap<Vec<u64>, usize> = HashMap::with_capacity(nodes.len());
        for (i, p) in nodes.iter().enumerate() {
            index.entry(key(p)).or_insert(i);
        }
        for (p, &w) in coarse.nodes().zip(&coarse.weights) {
            match index.get(&key(p)) {
                Some(&i) => weights[i] -= w,
                None => {
                    index.insert(key(p), nodes.len());
                    nodes.push(p.to_vec());
                    weights.push(-w);
                }
            }
        }
        let mut rule = QuadratureRule::from_parts(fine.dim, nodes, weights, fine.level, fine.family)?;
        rule.nested_prefix = fine.nested_prefix;
        Ok(Self { rule })
    }

    pub fn level(&self) -> usize {
        self.rule.level
    }

    pub fn family(&self) -> Family {
        self.rule.family
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        self.rule.node(i)
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.rule.weight(i)
    }

    pub fn weights(&self) -> &[f64] {
        self.rule.weights()
    }

    pub fn integrate(&self, v: impl Fn(&[f64]) -> f64) -> f64 {
        self.rule.integrate(v)
    }

    pub fn as_rule(&self) -> &QuadratureRule {
        &self.rule
    }
}

/// `ΔQ_level = Q_level - Q_{level-1}`, with `Q_{-1} = 0`.
pub fn difference_rule(family: Family, level: usize, m: usize, seed: u64) -> Result<DifferenceRule> {
    let fine = rule(family, level, m, seed)?;
    if level == 0 {
        return DifferenceRule::from_pair(&fine, None);
    }
    let coarse = rule(family, level - 1, m, seed)?;
    DifferenceRule::from_pair(&fine, Some(&coarse))
}
