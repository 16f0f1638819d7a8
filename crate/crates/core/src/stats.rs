//! Streaming mean/variance of the correlator output.

use serde::{Deserialize, Serialize};

/// Running count, mean, and sum of squared deviations (Welford), mergeable
/// across independently accumulated sample streams.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    count: u64,
    mean: f64,
    m2: f64,
}

impl CorrelationEstimate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(count: u64, mean: f64, m2: f64) -> Self {
        CorrelationEstimate { count, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Unbiased sample variance; 0 with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.m2 / (self.count - 1) as f64
    }

    /// Standard error of the mean, `sqrt(m2 / (N (N - 1)))`. Infinite below two samples.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        let n = self.count as f64;
        (self.m2 / (n * (n - 1.0))).sqrt()
    }

    /// `mean / stderr`, with the zero-variance cases resolved by the sign of the mean.
    pub fn z_score(&self) -> f64 {
        let se = self.stderr();
        if se == 0.0 {
            if self.mean > 0.0 {
                f64::INFINITY
            } else if self.mean < 0.0 {
                f64::NEG_INFINITY
            } else {
                0.0
            }
        } else {
            self.mean / se
        }
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub fn accumulate(mut self, value: f64) -> Self {
        self.push(value);
        self
    }

    pub fn merge(&self, other: &Self) -> Self {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let delta = other.mean - self.mean;
        CorrelationEstimate {
            count,
            mean: self.mean + delta * (nb / n),
            m2: self.m2 + other.m2 + delta * delta * (na * nb / n),
        }
    }
}

impl Extend<f64> for CorrelationEstimate {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.push(v);
        }
    }
}

impl FromIterator<f64> for CorrelationEstimate {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut est = CorrelationEstimate::new();
        est.extend(iter);
        est
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn single_value() {
        let e = CorrelationEstimate::new().accumulate(3.5);
        assert_eq!(e, CorrelationEstimate::from_parts(1, 3.5, 0.0));
        let e = e.accumulate(3.5);
        assert_eq!(e, CorrelationEstimate::from_parts(2, 3.5, 0.0));
    }

    #[test]
    fn one_two_three() {
        let e: CorrelationEstimate = [1.0, 2.0, 3.0].into_iter().collect();
        assert_eq!(e.count(), 3);
        assert_eq!(e.mean(), 2.0);
        assert_eq!(e.m2(), 2.0);
        assert_eq!(e.variance(), 1.0);
    }

    #[test]
    fn merge_halves() {
        let a: CorrelationEstimate = [1.0, 2.0].into_iter().collect();
        let b: CorrelationEstimate = [3.0, 4.0].into_iter().collect();
        let m = a.merge(&b);
        assert_eq!(m.count(), 4);
        assert_eq!(m.mean(), 2.5);
        assert_eq!(m.m2(), 5.0);
        assert_eq!(a.merge(&b), b.merge(&a));
    }

    #[test]
    fn merge_identity() {
        let e: CorrelationEstimate = [1.0, -2.0, 7.0].into_iter().collect();
        assert_eq!(CorrelationEstimate::new().merge(&e), e);
        assert_eq!(e.merge(&CorrelationEstimate::new()), e);
    }

    #[test]
    fn stderr_edge_cases() {
        assert!(CorrelationEstimate::new().stderr().is_infinite());
        let flat: CorrelationEstimate = [2.0, 2.0].into_iter().collect();
        assert_eq!(flat.stderr(), 0.0);
        assert_eq!(flat.z_score(), f64::INFINITY);
    }

    #[test]
    fn stable_for_tiny_offset_values() {
        // values of the size the correlator produces for nm = 8
        let base = 4.65e-9;
        let e: CorrelationEstimate = (0..1_000_000)
            .map(|i| base + if i % 2 == 0 { 1e-7 } else { -1e-7 })
            .collect();
        assert!(close(e.mean(), base, 1e-6));
        assert!(close(e.variance(), 1e-14, 1e-5));
    }

    proptest! {
        #[test]
        fn merge_matches_concatenation(
            a in prop::collection::vec(-1e3f64..1e3, 0..60),
            b in prop::collection::vec(-1e3f64..1e3, 0..60),
        ) {
            let ea: CorrelationEstimate = a.iter().copied().collect();
            let eb: CorrelationEstimate = b.iter().copied().collect();
            let whole: CorrelationEstimate = a.iter().chain(b.iter()).copied().collect();
            let merged = ea.merge(&eb);
            prop_assert_eq!(merged.count(), whole.count());
            prop_assert!((merged.mean() - whole.mean()).abs() <= 1e-12 * whole.mean().abs().max(1.0));
            prop_assert!((merged.m2() - whole.m2()).abs() <= 1e-9 * whole.m2().abs().max(1.0));
            let swapped = eb.merge(&ea);
            prop_assert!((swapped.mean() - merged.mean()).abs() <= 1e-12 * merged.mean().abs().max(1.0));
        }

        #[test]
        fn merge_is_associative(
            a in prop::collection::vec(-10f64..10.0, 1..20),
            b in prop::collection::vec(-10f64..10.0, 1..20),
            c in prop::collection::vec(-10f64..10.0, 1..20),
        ) {
            let (ea, eb, ec): (CorrelationEstimate, CorrelationEstimate, CorrelationEstimate) =
                (a.into_iter().collect(), b.into_iter().collect(), c.into_iter().collect());
            let left = ea.merge(&eb).merge(&ec);
            let right = ea.merge(&eb.merge(&ec));
            prop_assert!((left.mean() - right.mean()).abs() <= 1e-12 * left.mean().abs().max(1.0));
            prop_assert!((left.m2() - right.m2()).abs() <= 1e-10 * left.m2().abs().max(1.0));
            prop_assert!(left.m2() >= 0.0);
        }
    }
}
