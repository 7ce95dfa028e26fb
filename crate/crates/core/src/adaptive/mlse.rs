use crate::error::{invalid, Result};
use crate::sigproc::{SampleBuffer, SymbolSequence};

/// Largest supported memory (4^5 = 1024 states).
pub const MAX_MEMORY: usize = 5;

/// Trellis description for a 4-ary Viterbi detector with `memory` past symbols.
///
/// A state packs the last `memory` symbols, newest in the lowest base-4 digit,
/// so appending symbol `x` moves state `s` to `(4·s + x) mod 4^memory`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlseConfig {
    memory: usize,
    levels: [f64; 4],
    response: Vec<f64>,
    /// Known state before the first sample; `None` leaves every state open.
    initial_state: Option<usize>,
    traceback: usize,
    expected: Vec<f64>,
}

impl MlseConfig {
    /// Detector for a linear channel `y_k = Σ_j response[j] · level(x_{k−j})`,
    /// with `memory = response.len() − 1`.
    pub fn linear(levels: [f64; 4], response: Vec<f64>, traceback: usize) -> Result<Self> {
        if response.len() < 2 {
            return Err(invalid("memory", "response must span at least two symbols (memory >= 1)"));
        }
        let memory = response.len() - 1;
        if memory > MAX_MEMORY {
            return Err(invalid("memory", format!("{memory} exceeds the supported {MAX_MEMORY}")));
        }
        if traceback < 5 * memory {
            return Err(invalid(
                "traceback",
                format!("depth {traceback} below 5 x memory = {}", 5 * memory),
            ));
        }
        if levels.windows(2).any(|w| !(w[0] < w[1])) || response.iter().any(|h| !h.is_finite()) {
            return Err(invalid("levels", "levels must increase and the response be finite"));
        }
        let states = 4usize.pow(memory as u32);
        let mut expected = vec![0.0; states * 4];
        for s in 0..states {
            for x in 0..4 {
                let mut y = response[0] * levels[x];
                let mut past = s;
                for h in &response[1..] {
                    y += h * levels[past % 4];
                    past /= 4;
                }
                expected[s * 4 + x] = y;
            }
        }
        Ok(Self {
            memory,
            levels,
            response,
            initial_state: None,
            traceback,
            expected,
        })
    }

    /// Delay-and-add trellis: `y_k = level(x_k) + level(x_{k−1})`, starting
    /// from the lowest level.
    pub fn partial_response(levels: [f64; 4]) -> Result<Self> {
        Ok(Self::linear(levels, vec![1.0, 1.0], 32)?.with_initial_state(Some(0)))
    }

    pub fn with_initial_state(mut self, state: Option<usize>) -> Self {
        self.initial_state = state.map(|s| s % self.states());
        self
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn states(&self) -> usize {
        4usize.pow(self.memory as u32)
    }

    pub fn traceback(&self) -> usize {
        self.traceback
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn levels(&self) -> [f64; 4] {
        self.levels
    }

    /// Noiseless output when `input` follows `state`.
    pub fn expected_output(&self, state: usize, input: usize) -> f64 {
        self.expected[state * 4 + input]
    }
}

/// Viterbi detection with squared-Euclidean branch metrics.
///
/// Decisions are released `traceback` symbols behind the newest sample, from
/// the best surviving state (lowest index on ties); the tail is resolved from
/// the best final state.
pub fn mlse_detect(samples: &SampleBuffer, cfg: &MlseConfig) -> Result<SymbolSequence> {
    Ok(SymbolSequence::new(
        viterbi(samples.samples(), cfg),
        cfg.levels.to_vec(),
    )?)
}

pub(crate) fn viterbi(y: &[f64], cfg: &MlseConfig) -> Vec<usize> {
    let n = y.len();
    let states = cfg.states();
    let top = states / 4;
    let depth = cfg.traceback;
    let mut metric = vec![0.0f64; states];
    if let Some(s0) = cfg.initial_state {
        metric.iter_mut().enumerate().for_each(|(s, m)| {
            if s != s0 {
                *m = f64::INFINITY;
            }
        });
    }
    let mut next = vec![0.0f64; states];
    // survivor predecessor of each state at each step
    let mut back: Vec<u16> = vec![0; n * states];
    let mut out = vec![0usize; n];

    let best_state = |m: &[f64]| {
        let mut b = 0;
        for s in 1..m.len() {
            if m[s] < m[b] {
                b = s;
            }
        }
        b
    };
    let trace = |back: &[u16], from_step: usize, mut state: usize, until: usize, out: &mut [usize], write_all: bool| {
        let mut k = from_step;
        loop {
            if write_all || k == until {
                out[k] = state % 4;
            }
            if k == until {
                break;
            }
            state = back[k * states + state] as usize;
            k -= 1;
        }
    };

    for k in 0..n {
        for ns in 0..states {
            let x = ns % 4;
            let low = ns / 4;
            let mut best = f64::INFINITY;
            let mut arg = low;
            for j in 0..4 {
                let s = low + j * top;
                let e = y[k] - cfg.expected[s * 4 + x];
                let m = metric[s] + e * e;
                if m < best {
                    best = m;
                    arg = s;
                }
            }
            next[ns] = best;
            back[k * states + ns] = arg as u16;
        }
        std::mem::swap(&mut metric, &mut next);
        // keep metrics bounded
        let min = metric.iter().cloned().fold(f64::INFINITY, f64::min);
        metric.iter_mut().for_each(|m| *m -= min);
        if k >= depth {
            trace(&back, k, best_state(&metric), k - depth, &mut out, false);
        }
    }
    if n > 0 {
        let start = n.saturating_sub(depth);
        trace(&back, n - 1, best_state(&metric), start, &mut out, true);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    const PAM4: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];

    fn pr_line(x: &[usize]) -> Vec<f64> {
        let mut prev = 0;
        x.iter()
            .map(|&s| {
                let v = PAM4[s] + PAM4[prev];
                prev = s;
                v
            })
            .collect()
    }

    #[test]
    fn noiseless_pr_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<usize> = (0..5000).map(|_| rng.random_range(0..4)).collect();
        let cfg = MlseConfig::partial_response(PAM4).unwrap();
        assert_eq!(cfg.states(), 4);
        assert_eq!(viterbi(&pr_line(&x), &cfg), x);
    }

    #[test]
    fn higher_memory_on_noiseless_pr() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<usize> = (0..3000).map(|_| rng.random_range(0..4)).collect();
        let cfg = MlseConfig::linear(PAM4, vec![1.0, 1.0, 0.0, 0.0], 32)
            .unwrap()
            .with_initial_state(Some(0));
        assert_eq!(cfg.states(), 64);
        assert_eq!(viterbi(&pr_line(&x), &cfg), x);
    }

    #[test]
    fn rejects_short_traceback() {
        assert!(MlseConfig::linear(PAM4, vec![1.0, 0.5, 0.2], 9).is_err());
        assert!(MlseConfig::linear(PAM4, vec![1.0], 32).is_err());
    }

    fn brute_force(y: &[f64], cfg: &MlseConfig) -> Vec<usize> {
        let n = y.len();
        let m = cfg.memory();
        let starts: Vec<usize> = match cfg.initial_state {
            Some(s) => vec![s],
            None => (0..cfg.states()).collect(),
        };
        let mut best = (f64::INFINITY, vec![]);
        for &s0 in &starts {
            for code in 0..4usize.pow(n as u32) {
                let mut x = Vec::with_capacity(n);
                let mut c = code;
                for _ in 0..n {
                    x.push(c % 4);
                    c /= 4;
                }
                // direct convolution with the past symbols encoded in s0
                let mut hist: Vec<usize> = (0..m).map(|j| (s0 / 4usize.pow(j as u32)) % 4).rev().collect();
                hist.extend(&x);
                let mut d = 0.0;
                for k in 0..n {
                    let mut v = 0.0;
                    for (j, h) in cfg.response().iter().enumerate() {
                        v += h * PAM4[hist[k + m - j]];
                    }
                    d += (y[k] - v).powi(2);
                }
                if d < best.0 {
                    best = (d, x);
                }
            }
        }
        best.1
    }

    #[test]
    fn matches_brute_force_on_short_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfgs = [
            MlseConfig::partial_response(PAM4).unwrap(),
            MlseConfig::linear(PAM4, vec![1.0, 0.45], 5).unwrap(),
            MlseConfig::linear(PAM4, vec![0.9, 0.4, -0.2], 10).unwrap(),
        ];
        for trial in 0..60 {
            let cfg = &cfgs[trial % cfgs.len()];
            let n = if cfg.memory() == 2 { 5 } else { 7 };
            let x: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
            let y: Vec<f64> = brute_force_line(&x, cfg)
                .into_iter()
                .map(|v| v + 0.8 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            assert_eq!(viterbi(&y, cfg), brute_force(&y, cfg), "trial {trial}");
        }
    }

    fn brute_force_line(x: &[usize], cfg: &MlseConfig) -> Vec<f64> {
        let m = cfg.memory();
        let s0 = cfg.initial_state.unwrap_or(0);
        let mut hist: Vec<usize> = (0..m).map(|j| (s0 / 4usize.pow(j as u32)) % 4).rev().collect();
        hist.extend(x);
        (0..x.len())
            .map(|k| {
                cfg.response()
                    .iter()
                    .enumerate()
                    .map(|(j, h)| h * PAM4[hist[k + m - j]])
                    .sum()
            })
            .collect()
    }
}
