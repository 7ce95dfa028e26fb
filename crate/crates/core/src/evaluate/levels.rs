use crate::error::{invalid, Error, Result};
use crate::sigproc::SampleBuffer;

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalLevels {
    /// Cluster means, ascending.
    pub levels: Vec<f64>,
    pub extinction_db: f64,
    /// Top minus bottom level, linear power.
    pub oma: f64,
}

/// One-dimensional k-means seeded at evenly spaced quantiles.
fn kmeans_1d(sorted: &[f64], k: usize) -> Vec<(f64, usize)> {
    let n = sorted.len();
    let mut centers: Vec<f64> = (0..k).map(|i| sorted[((2 * i + 1) * n) / (2 * k)]).collect();
    let mut counts = vec![0usize; k];
    for _ in 0..100 {
        let mut sums = vec![0.0; k];
        counts.iter_mut().for_each(|c| *c = 0);
        // sorted data: each cluster is a contiguous run between center midpoints
        let mut c = 0;
        for &v in sorted {
            while c + 1 < k && v > 0.5 * (centers[c] + centers[c + 1]) {
                c += 1;
            }
            sums[c] += v;
            counts[c] += 1;
        }
        let next: Vec<f64> = (0..k)
            .map(|i| if counts[i] > 0 { sums[i] / counts[i] as f64 } else { centers[i] })
            .collect();
        let moved = next.iter().zip(&centers).any(|(a, b)| a != b);
        centers = next;
        if !moved {
            break;
        }
    }
    centers.into_iter().zip(counts).collect()
}

/// Level means of an optical power waveform by clustering into `n_levels`
/// groups; extinction is `10·log10(top / bottom)`.
pub fn measure_extinction_and_oma(optical: &SampleBuffer, n_levels: usize) -> Result<OpticalLevels> {
    if n_levels < 2 {
        return Err(invalid("n_levels", "need at least two levels"));
    }
    let mut sorted = optical.samples().to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let spread = hi - lo;
    let clusters = kmeans_1d(&sorted, n_levels);
    let mut distinct: Vec<f64> = Vec::new();
    for (c, count) in &clusters {
        if *count > 0 && distinct.last().is_none_or(|d| c - d > 1e-9 * hi.abs().max(1e-300)) {
            distinct.push(*c);
        }
    }
    if spread <= 0.0 || distinct.len() < n_levels {
        return Err(Error::TooFewClusters {
            found: if spread <= 0.0 { 1 } else { distinct.len() },
            expected: n_levels,
        });
    }
    let bottom = distinct[0];
    let top = distinct[distinct.len() - 1];
    if !(bottom > 0.0) {
        return Err(invalid("optical", "bottom level must be positive power"));
    }
    Ok(OpticalLevels {
        extinction_db: 10.0 * (top / bottom).log10(),
        oma: top - bottom,
        levels: distinct,
    })
}
