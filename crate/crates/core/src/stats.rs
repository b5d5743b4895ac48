//! Monte Carlo bookkeeping for correlated samples.
//!
//! Orbit and sliding-window samples are serially correlated, so standard
//! errors come from batch means: the stream is cut into consecutive batches
//! and the spread of batch averages gives the error of the overall mean.

use serde::{Deserialize, Serialize};

/// An estimate with its Monte Carlo standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    /// Distance from `target` in standard errors. Infinite if the error is
    /// zero and the values differ.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else if self.stderr == 0.0 {
            f64::INFINITY
        } else {
            d / self.stderr
        }
    }
}

/// Batch-means accumulator for a 0/1 or real-valued stream.
#[derive(Clone, Debug)]
pub struct BatchMeans {
    batch_len: usize,
    in_batch: usize,
    batch_sum: f64,
    batches: Vec<f64>,
    total: f64,
    count: usize,
}

impl BatchMeans {
    pub fn new(expected_samples: usize, batches: usize) -> Self {
        let batch_len = (expected_samples / batches.max(1)).max(1);
        Self { batch_len, in_batch: 0, batch_sum: 0.0, batches: Vec::new(), total: 0.0, count: 0 }
    }

    pub fn push(&mut self, value: f64) {
        self.total += value;
        self.count += 1;
        self.batch_sum += value;
        self.in_batch += 1;
        if self.in_batch == self.batch_len {
            self.batches.push(self.batch_sum / self.batch_len as f64);
            self.batch_sum = 0.0;
            self.in_batch = 0;
        }
    }

    pub fn estimate(&self) -> Estimate {
        let mean = if self.count == 0 { f64::NAN } else { self.total / self.count as f64 };
        Estimate { mean, stderr: batch_stderr(&self.batches), samples: self.count }
    }
}

/// Standard error of the mean of `batches` (sample sd / √k).
pub fn batch_stderr(batches: &[f64]) -> f64 {
    let k = batches.len();
    if k < 2 {
        return f64::NAN;
    }
    let mean = batches.iter().sum::<f64>() / k as f64;
    let var = batches.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (var / k as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_stream_has_zero_error() {
        let mut acc = BatchMeans::new(1000, 10);
        for _ in 0..1000 {
            acc.push(0.25);
        }
        let e = acc.estimate();
        assert_eq!(e.mean, 0.25);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.z_score(0.25), 0.0);
    }

    #[test]
    fn alternating_batches() {
        let b = [0.0, 1.0, 0.0, 1.0];
        let se = batch_stderr(&b);
        assert!((se - (1.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }
}
