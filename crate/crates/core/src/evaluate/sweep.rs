use rayon::prelude::*;

use super::ber::BerReport;

/// SplitMix64 finalizer.
pub fn mix_seed(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sweep point `index`: independent of evaluation order.
pub fn point_seed(base: u64, index: usize) -> u64 {
    mix_seed(base ^ index as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<P, T = BerReport> {
    pub index: usize,
    pub param: P,
    pub seed: u64,
    /// The failure message when the pipeline failed at this point.
    pub outcome: Result<T, String>,
}

/// Runs `job(param, seed)` for every point on up to `jobs` threads; results
/// come back in point order and do not depend on the thread count. Failed
/// points are recorded and the sweep continues.
pub fn run_sweep<P, T, F>(params: &[P], base_seed: u64, jobs: usize, job: F) -> Vec<SweepPoint<P, T>>
where
    P: Clone + Send + Sync,
    T: Send,
    F: Fn(&P, u64) -> crate::Result<T> + Sync,
{
    let work = |(index, param): (usize, &P)| {
        let seed = point_seed(base_seed, index);
        SweepPoint {
            index,
            param: param.clone(),
            seed,
            outcome: job(param, seed).map_err(|e| e.to_string()),
        }
    };
    if jobs <= 1 {
        return params.iter().enumerate().map(work).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| params.par_iter().enumerate().map(work).collect()),
        Err(_) => params.iter().enumerate().map(work).collect(),
    }
}
