use serde::Serialize;

/// Sample mean/variance summary. `variance` is the unbiased (n - 1) estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

/// Streaming mean/variance (Welford); accumulators over disjoint samples can
/// be merged in any grouping.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Accumulator) -> Accumulator {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Accumulator { n, mean, m2 }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn stats(&self) -> EstimatorStats {
        let variance = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        let std_error = if self.n > 0 {
            (variance / self.n as f64).sqrt()
        } else {
            0.0
        };
        EstimatorStats {
            n: self.n,
            mean: self.mean,
            variance,
            std_error,
        }
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Accumulator::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

impl EstimatorStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        samples.iter().copied().collect::<Accumulator>().stats()
    }

    /// `|mean - target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.mean - target).abs();
        if self.std_error == 0.0 {
            if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            gap / self.std_error
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        let s = EstimatorStats::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.n, 4);
        assert!((s.mean - 2.5).abs() < 1e-15);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_sizes() {
        assert_eq!(EstimatorStats::from_samples(&[]).std_error, 0.0);
        let one = EstimatorStats::from_samples(&[0.7]);
        assert_eq!((one.mean, one.variance), (0.7, 0.0));
        assert_eq!(one.z_score(0.7), 0.0);
        assert!(one.z_score(0.8).is_infinite());
    }

    proptest! {
        #[test]
        fn merge_matches_single_pass(
            xs in prop::collection::vec(-10.0f64..10.0, 0..60),
            split in 0usize..60,
        ) {
            let split = split.min(xs.len());
            let whole: Accumulator = xs.iter().copied().collect();
            let left: Accumulator = xs[..split].iter().copied().collect();
            let right: Accumulator = xs[split..].iter().copied().collect();
            let merged = left.merge(&right).stats();
            let direct = whole.stats();
            prop_assert_eq!(merged.n, direct.n);
            prop_assert!((merged.mean - direct.mean).abs() <= 1e-9);
            prop_assert!((merged.variance - direct.variance).abs() <= 1e-9);
        }

        #[test]
        fn std_error_is_sqrt_variance_over_n(xs in prop::collection::vec(-5.0f64..5.0, 1..40)) {
            let s = EstimatorStats::from_samples(&xs);
            prop_assert!((s.std_error - (s.variance / s.n as f64).sqrt()).abs() <= 1e-15);
        }
    }
}
