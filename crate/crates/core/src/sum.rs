//! Compensated (Neumaier) summation.

/// Running sum with a Neumaier correction term.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Vector of per-entry compensated sums.
#[derive(Debug, Clone)]
pub struct FieldAccumulator {
    entries: Vec<NeumaierSum>,
}

impl FieldAccumulator {
    pub fn zeros(len: usize) -> Self {
        Self {
            entries: vec![NeumaierSum::new(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `self += weight * values`, entry by entry.
    pub fn add_scaled(&mut self, weight: f64, values: &[f64]) {
        debug_assert_eq!(values.len(), self.entries.len());
        for (acc, v) in self.entries.iter_mut().zip(values) {
            acc.add(weight * v);
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(NeumaierSum::value).collect()
    }
}

/// Compensated sum of a slice.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let s = compensated_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn accumulator_matches_scalar_path() {
        let mut acc = FieldAccumulator::zeros(2);
        acc.add_scaled(0.1, &[1.0, 2.0]);
        acc.add_scaled(0.2, &[1.0, 2.0]);
        let v = acc.values();
        assert!((v[0] - 0.3).abs() < 1e-15);
        assert!((v[1] - 0.6).abs() < 1e-15);
    }
}
