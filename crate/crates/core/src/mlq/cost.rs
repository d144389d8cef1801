use crate::error::{Error, Result};

/// Closed-form work estimates when level ℓ uses `N_0 θ^ℓ` nodes and a solve
/// on mesh level ℓ costs `C_0 σ^ℓ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub nested_v: f64,
    pub nested_q: f64,
}

impl CostModel {
    pub fn ratio(&self) -> f64 {
        self.nested_v / self.nested_q
    }
}

/// `nestedQ = N_0 C_0 Σ_ℓ θ^{j-ℓ} σ^ℓ` and `nestedV = (1 + 1/σ)` times that.
pub fn compute_cost_model(j: usize, theta: f64, sigma: f64, n0: f64, c0: f64) -> Result<CostModel> {
    if !(theta > 1.0 && sigma > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "cost model needs theta > 1 and sigma > 1 (got {theta}, {sigma})"
        )));
    }
    let sum: f64 = (0..=j)
        .map(|l| theta.powi((j - l) as i32) * sigma.powi(l as i32))
        .sum();
    let nested_q = n0 * c0 * sum;
    Ok(CostModel {
        nested_v: (1.0 + 1.0 / sigma) * nested_q,
        nested_q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios() {
        assert_eq!(compute_cost_model(5, 2.0, 4.0, 10.0, 1.0).unwrap().ratio(), 1.25);
        assert_eq!(compute_cost_model(5, 2.0, 8.0, 10.0, 1.0).unwrap().ratio(), 1.125);
        let c = compute_cost_model(0, 2.0, 4.0, 10.0, 3.0).unwrap();
        assert_eq!(c.nested_q, 30.0);
        assert_eq!(c.nested_v, 37.5);
        assert!(compute_cost_model(1, 1.0, 4.0, 1.0, 1.0).is_err());
    }
}
