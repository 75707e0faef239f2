//! Batch-means confidence intervals.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub const BATCHES: usize = 20;

/// Below this many samples the batches would be too small to be useful and
/// the samples are treated as independent instead.
const MIN_BATCHED_SAMPLES: usize = 2 * BATCHES;

fn t_quantile_975(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1").inverse_cdf(0.975)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Mean and 95% half-width of a sequence of (autocorrelated) observations.
///
/// The observations are split, in order, into 20 equal batches (the
/// remainder goes to the last batch) and the half-width is a Student-t
/// interval on the batch means.
pub fn batch_means(samples: &[f64]) -> (f64, f64) {
    match samples.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (samples[0], f64::INFINITY),
        len if len < MIN_BATCHED_SAMPLES => {
            (mean(samples), t_quantile_975(len - 1) * sample_sd(samples) / (len as f64).sqrt())
        }
        len => {
            let size = len / BATCHES;
            let batch_means: Vec<f64> = (0..BATCHES)
                .map(|b| {
                    let end = if b == BATCHES - 1 { len } else { (b + 1) * size };
                    mean(&samples[b * size..end])
                })
                .collect();
            let hw = t_quantile_975(BATCHES - 1) * sample_sd(&batch_means) / (BATCHES as f64).sqrt();
            (mean(samples), hw)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_quantile() {
        assert!((t_quantile_975(19) - 2.093_024_054_408_263).abs() < 1e-9);
    }

    #[test]
    fn constant_series_has_zero_width() {
        let (m, hw) = batch_means(&[3.0; 1000]);
        assert_eq!(m, 3.0);
        assert_eq!(hw, 0.0);
    }

    #[test]
    fn degenerate_lengths() {
        assert!(batch_means(&[]).0.is_nan());
        assert_eq!(batch_means(&[1.5]), (1.5, f64::INFINITY));
        let (m, hw) = batch_means(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!(hw > 0.0 && hw.is_finite());
    }

    #[test]
    fn alternating_batches() {
        // 20 batches of 5, batch means alternate 0 and 1.
        let xs: Vec<f64> = (0..100).map(|i| ((i / 5) % 2) as f64).collect();
        let (m, hw) = batch_means(&xs);
        assert_eq!(m, 0.5);
        let sd = (20.0 * 0.25 / 19.0f64).sqrt();
        assert!((hw - 2.093_024_054_408_263 * sd / 20f64.sqrt()).abs() < 1e-9);
    }
}
