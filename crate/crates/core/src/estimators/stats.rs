use serde::{Deserialize, Serialize};

/// Sample mean with its standard error `s/√m`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let m = xs.len();
        if m == 0 {
            return MeanEstimate { mean: f64::NAN, std_error: f64::NAN, count: 0 };
        }
        let mean = xs.iter().sum::<f64>() / m as f64;
        let std_error = if m > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1) as f64;
            (var / m as f64).sqrt()
        } else {
            0.0
        };
        MeanEstimate { mean, std_error, count: m }
    }
}

/// Median, averaging the two middle values for even counts.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        (v[m / 2 - 1] + v[m / 2]) / 2.0
    }
}

/// Standard error of the mean of a stationary sequence from `batches`
/// contiguous batch means.
pub fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let b = batches.min(xs.len()).max(1);
    let size = xs.len() / b;
    if size == 0 || b < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..b)
        .map(|i| xs[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    MeanEstimate::from_samples(&means).std_error
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_error() {
        let e = MeanEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        // s² = 5/3, s.e. = √(5/12)
        assert!((e.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn batch_means_of_iid_data_match_plain_error() {
        let xs: Vec<f64> = (0..10_000).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
        let plain = MeanEstimate::from_samples(&xs).std_error;
        let batched = batch_means_se(&xs, 50);
        assert!(batched > 0.0 && batched < 5.0 * plain);
    }
}
