//! Small numeric helpers shared by the scoring modules.

/// Min-max rescale to `[0, 1]`. A degenerate set (max == min) maps to all
/// zeros.
pub fn rescale_unit(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(hi > lo) {
        return vec![0.0; values.len()];
    }
    let span = hi - lo;
    values
        .iter()
        .map(|&v| ((v - lo) / span).clamp(0.0, 1.0))
        .collect()
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        iter.into_iter().for_each(|v| s.add(v));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_rescale() {
        assert_eq!(rescale_unit(&[-2.0, -1.0, 0.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(rescale_unit(&[3.0, 3.0]), vec![0.0, 0.0]);
        assert!(rescale_unit(&[]).is_empty());
    }

    #[test]
    fn compensation_recovers_small_terms() {
        let s: CompensatedSum = [1e16, 1.0, -1e16].into_iter().collect();
        assert_eq!(s.value(), 1.0);
    }
}
