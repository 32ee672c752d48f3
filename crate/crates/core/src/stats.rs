//! Batch-means confidence intervals for time averages of a stationary series.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub const DEFAULT_BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Half-width of the 95% confidence interval.
    pub ci95: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Estimate { mean, ci95: 0.0, samples: 0 }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci95
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci95
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lower()..=self.upper()).contains(&x)
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }
}

/// Streaming batch-means accumulator for a series of known length.
/// Samples past the last full batch are folded into the mean but not into
/// the batch variance.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    batch_len: u64,
    batches: Vec<f64>,
    current: f64,
    in_current: u64,
    total: f64,
    samples: u64,
}

impl BatchMeans {
    pub fn new(expected_len: u64, batches: usize) -> Self {
        let batch_len = (expected_len / batches.max(1) as u64).max(1);
        BatchMeans { batch_len, batches: Vec::with_capacity(batches), current: 0.0, in_current: 0, total: 0.0, samples: 0 }
    }

    pub fn push(&mut self, x: f64) {
        self.total += x;
        self.samples += 1;
        self.current += x;
        self.in_current += 1;
        if self.in_current == self.batch_len {
            self.batches.push(self.current / self.batch_len as f64);
            self.current = 0.0;
            self.in_current = 0;
        }
    }

    pub fn finish(&self) -> Estimate {
        let mean = if self.samples == 0 { 0.0 } else { self.total / self.samples as f64 };
        let b = self.batches.len();
        if b < 2 {
            return Estimate { mean, ci95: f64::INFINITY, samples: self.samples };
        }
        let bm = self.batches.iter().sum::<f64>() / b as f64;
        let var = self.batches.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (b - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (b - 1) as f64).expect("valid dof").inverse_cdf(0.975);
        Estimate { mean, ci95: t * (var / b as f64).sqrt(), samples: self.samples }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_has_zero_width() {
        let mut bm = BatchMeans::new(1000, 20);
        for _ in 0..1000 {
            bm.push(0.5);
        }
        let e = bm.finish();
        assert_eq!(e.mean, 0.5);
        assert!(e.ci95.abs() < 1e-12);
    }

    #[test]
    fn iid_bernoulli_interval_covers_mean() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut bm = BatchMeans::new(200_000, 20);
        for _ in 0..200_000 {
            bm.push(rng.gen_bool(0.3) as u8 as f64);
        }
        let e = bm.finish();
        assert!(e.contains(0.3), "{e:?}");
        // sd of the mean is ~1e-3; the interval should be of that order.
        assert!(e.ci95 < 5e-3);
    }

    #[test]
    fn overlap_logic() {
        let a = Estimate { mean: 1.0, ci95: 0.1, samples: 1 };
        let b = Estimate { mean: 1.15, ci95: 0.1, samples: 1 };
        let c = Estimate { mean: 1.3, ci95: 0.1, samples: 1 };
        assert!(a.overlaps(&b));
        assert!(!a.overlaps(&c));
    }
}
