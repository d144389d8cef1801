//! Clenshaw-Curtis rules and their Smolyak combination.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::sum::NeumaierSum;

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Number of 1D nodes at level `j >= 1`.
pub fn cc_1d_size(j: usize) -> usize {
    assert!(j >= 1, "Clenshaw-Curtis levels start at 1");
    if j == 1 {
        1
    } else {
        (1 << (j - 1)) + 1
    }
}

/// `cos(k π / n)`, computed from the reduced fraction so that a node has the
/// same bits at every level it appears on.
fn chebyshev_node(k: usize, n: usize) -> f64 {
    let g = gcd(k, n);
    let (a, b) = (k / g, n / g);
    (a as f64 * PI / b as f64).cos()
}

/// Nodes and weights (for the Lebesgue measure on `[-1,1]`) of the level-`j`
/// Clenshaw-Curtis rule. Nodes run from 1 down to -1.
pub fn cc_1d(j: usize) -> (Vec<f64>, Vec<f64>) {
    let n = cc_1d_size(j);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let big_n = n - 1;
    let mut nodes = vec![0.0; n];
    for k in 0..=big_n / 2 {
        nodes[k] = chebyshev_node(k, big_n);
        nodes[big_n - k] = -nodes[k];
    }
    nodes[big_n / 2] = 0.0;

    let mut weights = vec![0.0; n];
    for k in 0..=big_n / 2 {
        let c = if k == 0 { 1.0 } else { 2.0 };
        let mut s = 1.0;
        for jj in 1..=big_n / 2 {
            let b = if 2 * jj == big_n { 1.0 } else { 2.0 };
            s -= b / (4.0 * (jj * jj) as f64 - 1.0) * chebyshev_node((2 * jj * k) % (2 * big_n), big_n);
        }
        weights[k] = c / big_n as f64 * s;
        weights[big_n - k] = weights[k];
    }
    (nodes, weights)
}

/// 1D level at which a CC node first appears.
fn node_level(x: f64, levels: &[Vec<f64>]) -> usize {
    levels
        .iter()
        .position(|nodes| nodes.iter().any(|&v| v.to_bits() == x.to_bits()))
        .map(|p| p + 1)
        .expect("node belongs to the family")
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Visits every multi-index in `N^m` (entries >= 1) with `lo <= |j|_1 <= hi`.
fn for_each_multi_index(m: usize, lo: usize, hi: usize, mut visit: impl FnMut(&[usize])) {
    let mut j = vec![1usize; m];
    loop {
        let s: usize = j.iter().sum();
        if s >= lo && s <= hi {
            visit(&j);
        }
        // odometer increment, bounded by the total
        let mut d = 0;
        loop {
            if d == m {
                return;
            }
            j[d] += 1;
            if j.iter().sum::<usize>() <= hi {
                break;
            }
            j[d] = 1;
            d += 1;
        }
    }
}

/// Smolyak sparse grid at sparse level `level` in `m` dimensions, with
/// weights for the Lebesgue measure. Nodes are ordered by the sparse level
/// at which they first appear, so the level-1 grid is a prefix.
pub fn smolyak(level: usize, m: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    assert!(m >= 1);
    let q = level + m;
    let max_1d = level + 1;
    let rules: Vec<(Vec<f64>, Vec<f64>)> = (1..=max_1d).map(cc_1d).collect();
    let level_nodes: Vec<Vec<f64>> = rules.iter().map(|r| r.0.clone()).collect();

    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut nodes: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<NeumaierSum> = Vec::new();
    let lo = (q + 1).saturating_sub(m).max(m);
    for_each_multi_index(m, lo, q, |j| {
        let s: usize = j.iter().sum();
        let r = q - s;
        let coef = if r % 2 == 0 { 1.0 } else { -1.0 } * binomial(m - 1, r);
        let sizes: Vec<usize> = j.iter().map(|&jj| rules[jj - 1].0.len()).collect();
        let total: usize = sizes.iter().product();
        let mut digits = vec![0usize; m];
        let mut point = vec![0.0; m];
        for _ in 0..total {
            let mut w = coef;
            for d in 0..m {
                let (ref xs, ref ws) = rules[j[d] - 1];
                point[d] = xs[digits[d]];
                w *= ws[digits[d]];
            }
            let key: Vec<u64> = point.iter().map(|v| (v + 0.0).to_bits()).collect();
            match index.get(&key) {
                Some(&i) => weights[i].add(w),
                None => {
                    index.insert(key, nodes.len());
                    nodes.push(point.clone());
                    let mut acc = NeumaierSum::new();
                    acc.add(w);
                    weights.push(acc);
                }
            }
            for d in 0..m {
                digits[d] += 1;
                if digits[d] < sizes[d] {
                    break;
                }
                digits[d] = 0;
            }
        }
    });

    // Order by first appearance: sparse level of a node is Σ(l_d - 1).
    let mut order: Vec<(usize, usize)> = nodes
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().map(|&x| node_level(x, &level_nodes) - 1).sum(), i))
        .collect();
    order.sort_by(|a, b| {
        a.0.cmp(&b.0).then_with(|| {
            let (pa, pb) = (&nodes[a.1], &nodes[b.1]);
            pa.iter()
                .zip(pb)
                .map(|(x, y)| y.total_cmp(x))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let sorted_nodes = order.iter().map(|&(_, i)| nodes[i].clone()).collect();
    let sorted_weights = order.iter().map(|&(_, i)| weights[i].value()).collect();
    (sorted_nodes, sorted_weights)
}

/// Number of sparse-grid nodes whose sparse level is at most `level`.
pub fn smolyak_size(level: usize, m: usize) -> usize {
    // Points new at 1D level l: 1, 2, 2, 4, 8, ...
    let fresh = |l: usize| -> usize {
        match l {
            1 => 1,
            2 => 2,
            _ => 1 << (l - 2),
        }
    };
    let mut count = 0;
    for_each_multi_index(m, m, level + m, |j| {
        count += j.iter().map(|&l| fresh(l)).product::<usize>();
    });
    count
}
