use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Processing assumptions of the ASIC latency estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatencyModel {
    /// Clock period in ns.
    pub clock_ns: i64,
    /// Symbols the FFE handles per clock in the parallel (best) case.
    pub ffe_symbols_per_clock: i64,
    /// Symbols the Viterbi handles per clock in the best case.
    pub mlse_symbols_per_clock: i64,
    /// Decoded symbols per MLSE block.
    pub mlse_block_symbols: i64,
    /// Overhead symbols per side of an MLSE block, per unit of memory.
    pub mlse_overhead_per_memory: i64,
    pub propagation_us_per_km: f64,
    pub fec_us: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            clock_ns: 1,
            ffe_symbols_per_clock: 56,
            mlse_symbols_per_clock: 4,
            mlse_block_symbols: 56,
            mlse_overhead_per_memory: 5,
            propagation_us_per_km: 5.0,
            fec_us: 10.0,
        }
    }
}

/// DSP blocks that add latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub tx_taps: usize,
    pub rx_taps: usize,
    pub mlse_memory: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageLatency {
    pub name: String,
    pub best_ns: Ratio<i64>,
    pub worst_ns: Ratio<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyBudget {
    pub stages: Vec<StageLatency>,
    pub propagation_us: f64,
    pub fec_us: f64,
}

impl LatencyBudget {
    pub fn dsp_best_ns(&self) -> Ratio<i64> {
        self.stages.iter().map(|s| s.best_ns).sum()
    }

    pub fn dsp_worst_ns(&self) -> Ratio<i64> {
        self.stages.iter().map(|s| s.worst_ns).sum()
    }

    /// Worst-case DSP plus propagation and FEC, in µs.
    pub fn total_us(&self) -> f64 {
        let dsp = self.dsp_worst_ns();
        *dsp.numer() as f64 / *dsp.denom() as f64 / 1000.0 + self.propagation_us + self.fec_us
    }

    pub fn total_best_us(&self) -> f64 {
        let dsp = self.dsp_best_ns();
        *dsp.numer() as f64 / *dsp.denom() as f64 / 1000.0 + self.propagation_us + self.fec_us
    }
}

fn ratio_str(r: Ratio<i64>) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{:.1}", *r.numer() as f64 / *r.denom() as f64)
    }
}

impl fmt::Display for LatencyBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stage,best_ns,worst_ns")?;
        for s in &self.stages {
            writeln!(f, "{},{},{}", s.name, ratio_str(s.best_ns), ratio_str(s.worst_ns))?;
        }
        writeln!(f, "dsp_total,{},{}", ratio_str(self.dsp_best_ns()), ratio_str(self.dsp_worst_ns()))?;
        writeln!(f, "propagation_us,{:.3}", self.propagation_us)?;
        writeln!(f, "fec_us,{:.3}", self.fec_us)?;
        writeln!(f, "total_best_us,{:.3}", self.total_best_us())?;
        writeln!(f, "total_worst_us,{:.3}", self.total_us())
    }
}

/// Additions in an N-input adder tree: `ceil(log2(N − 1))`.
fn adder_depth(taps: usize) -> i64 {
    if taps <= 2 {
        return (taps > 1) as i64;
    }
    (usize::BITS - (taps - 2).leading_zeros()) as i64
}

/// FFE latency: parallel hardware finishes the multiply and the adder tree in
/// one clock; serial hardware spends one clock per operation.
fn ffe(name: &str, taps: usize, m: &LatencyModel) -> StageLatency {
    StageLatency {
        name: name.to_string(),
        best_ns: Ratio::from_integer(m.clock_ns),
        worst_ns: Ratio::from_integer((1 + adder_depth(taps)) * m.clock_ns),
    }
}

/// Viterbi latency over one block of decoded symbols plus `5·m` overhead
/// symbols on each side.
fn mlse(memory: usize, m: &LatencyModel) -> StageLatency {
    let symbols = m.mlse_block_symbols + 2 * m.mlse_overhead_per_memory * memory as i64;
    StageLatency {
        name: format!("mlse{memory}"),
        best_ns: Ratio::new(symbols * m.clock_ns, m.mlse_symbols_per_clock),
        worst_ns: Ratio::from_integer(symbols * m.clock_ns),
    }
}

pub fn latency_budget(chain: &ChainSpec, distance_km: f64, model: &LatencyModel) -> Result<LatencyBudget> {
    if !(distance_km >= 0.0) {
        return Err(invalid("distance_km", "must be >= 0"));
    }
    if model.clock_ns <= 0 || model.mlse_symbols_per_clock <= 0 {
        return Err(invalid("latency", "clock and throughput must be > 0"));
    }
    let mut stages = Vec::new();
    if chain.tx_taps > 0 {
        stages.push(ffe("tx_ffe", chain.tx_taps, model));
    }
    if chain.rx_taps > 0 {
        stages.push(ffe("rx_ffe", chain.rx_taps, model));
    }
    if let Some(mem) = chain.mlse_memory {
        stages.push(mlse(mem, model));
    }
    Ok(LatencyBudget {
        stages,
        propagation_us: distance_km * model.propagation_us_per_km,
        fec_us: model.fec_us,
    })
}
