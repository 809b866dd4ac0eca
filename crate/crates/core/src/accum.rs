//! Compensated (Neumaier) summation, used wherever a reduction must stay
//! deterministic and accurate at image scale.

/// Running sum with a first-order error term.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated sum of an iterator of values.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancellation() {
        // 1 + 1e16 - 1e16 loses the 1 under plain summation.
        let values = [1.0, 1e16, -1e16];
        let plain: f64 = values.iter().sum();
        assert_ne!(plain, 1.0);
        assert_eq!(compensated_sum(values), 1.0);
    }

    #[test]
    fn matches_exact_sum_of_many_small_terms() {
        let n = 100_000;
        let total = compensated_sum((0..n).map(|_| 0.1));
        assert!((total - 0.1 * n as f64).abs() < 1e-9);
    }
}
