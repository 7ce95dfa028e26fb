//! Radix-2 iterative FFT, plus a chirp-z (Bluestein) wrapper for the
//! non-power-of-two block lengths that rate conversion produces internally.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::{ComplexSpectrum, SampleBuffer};
use crate::error::{Error, Result};

struct Radix2Plan {
    n: usize,
    bitrev: Vec<u32>,
    // e^{-2πik/n} for k < n/2
    twiddles: Vec<Complex64>,
}

impl Radix2Plan {
    fn new(n: usize) -> Self {
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        Self { n, bitrev, twiddles }
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false)
    }

    fn inverse_unscaled(&self, data: &mut [Complex64]) {
        self.run(data, true)
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.bitrev[i] as usize;
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

struct BluesteinPlan {
    n: usize,
    inner: Arc<Radix2Plan>,
    // e^{-iπk²/n}
    chirp: Vec<Complex64>,
    // FFT of the conjugate chirp, wrapped to the inner size
    kernel: Vec<Complex64>,
}

impl BluesteinPlan {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = radix2_plan(m);
        let two_n = 2 * n as u128;
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let k2 = (k as u128 * k as u128) % two_n;
                Complex64::from_polar(1.0, -PI * k2 as f64 / n as f64)
            })
            .collect();
        let mut kernel = vec![Complex64::default(); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        Self {
            n,
            inner,
            chirp,
            kernel,
        }
    }

    fn forward(&self, input: &[Complex64]) -> Vec<Complex64> {
        let m = self.inner.n;
        let mut work = vec![Complex64::default(); m];
        for (w, (x, c)) in work.iter_mut().zip(input.iter().zip(&self.chirp)) {
            *w = x * c;
        }
        self.inner.forward(&mut work);
        for (w, k) in work.iter_mut().zip(&self.kernel) {
            *w *= k;
        }
        self.inner.inverse_unscaled(&mut work);
        let scale = 1.0 / m as f64;
        (0..self.n)
            .map(|k| work[k] * self.chirp[k] * scale)
            .collect()
    }
}

type PlanCache<T> = Mutex<HashMap<usize, Arc<T>>>;

fn radix2_plan(n: usize) -> Arc<Radix2Plan> {
    static PLANS: OnceLock<PlanCache<Radix2Plan>> = OnceLock::new();
    let mut plans = PLANS
        .get_or_init(Default::default)
        .lock()
        .expect("plan cache poisoned");
    plans
        .entry(n)
        .or_insert_with(|| Arc::new(Radix2Plan::new(n)))
        .clone()
}

fn bluestein_plan(n: usize) -> Arc<BluesteinPlan> {
    static PLANS: OnceLock<PlanCache<BluesteinPlan>> = OnceLock::new();
    let plans = PLANS.get_or_init(Default::default);
    if let Some(p) = plans.lock().expect("plan cache poisoned").get(&n) {
        return p.clone();
    }
    // built outside the lock; construction takes the radix-2 cache lock
    let plan = Arc::new(BluesteinPlan::new(n));
    plans
        .lock()
        .expect("plan cache poisoned")
        .entry(n)
        .or_insert(plan)
        .clone()
}

fn check_pow2(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        Err(Error::NotPowerOfTwo(n))
    } else {
        Ok(())
    }
}

/// Forward DFT of a power-of-two length sequence.
pub fn fft(input: &[Complex64]) -> Result<Vec<Complex64>> {
    check_pow2(input.len())?;
    let mut data = input.to_vec();
    radix2_plan(input.len()).forward(&mut data);
    Ok(data)
}

/// Inverse DFT (scaled by 1/N) of a power-of-two length sequence.
pub fn ifft(input: &[Complex64]) -> Result<Vec<Complex64>> {
    check_pow2(input.len())?;
    let mut data = input.to_vec();
    radix2_plan(input.len()).inverse_unscaled(&mut data);
    let scale = 1.0 / input.len() as f64;
    data.iter_mut().for_each(|x| *x *= scale);
    Ok(data)
}

/// Spectrum of a real buffer; `size` must equal the buffer length and be a power of two.
pub fn fft_real(buffer: &SampleBuffer, size: usize) -> Result<ComplexSpectrum> {
    check_pow2(size)?;
    if buffer.len() != size {
        return Err(Error::LengthMismatch {
            expected: size,
            actual: buffer.len(),
        });
    }
    let data: Vec<Complex64> = buffer
        .samples()
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    Ok(ComplexSpectrum {
        bins: fft(&data)?,
        bin_spacing: buffer.sample_rate() / size as f64,
    })
}

/// Forward DFT of any length. Powers of two go straight to the radix-2 kernel.
pub fn dft(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len();
    if n <= 1 {
        return input.to_vec();
    }
    if n.is_power_of_two() {
        let mut data = input.to_vec();
        radix2_plan(n).forward(&mut data);
        data
    } else {
        bluestein_plan(n).forward(input)
    }
}

/// Inverse DFT of any length, scaled by 1/N.
pub fn idft(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len();
    let conj: Vec<Complex64> = input.iter().map(|x| x.conj()).collect();
    let scale = 1.0 / n.max(1) as f64;
    dft(&conj).into_iter().map(|x| x.conj() * scale).collect()
}

pub fn dft_real(input: &[f64]) -> Vec<Complex64> {
    let data: Vec<Complex64> = input.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    dft(&data)
}

/// Real part of the inverse DFT; callers guarantee Hermitian input.
pub fn idft_real(input: &[Complex64]) -> Vec<f64> {
    idft(input).into_iter().map(|x| x.re).collect()
}

/// Circular cross-correlation `r[lag] = Σ_n a[n + lag] · b[n]` for equal-length real inputs.
pub fn circular_xcorr(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len());
    let fa = dft_real(a);
    let fb = dft_real(b);
    let prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y.conj()).collect();
    idft_real(&prod)
}
