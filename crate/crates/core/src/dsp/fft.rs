use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

pub fn next_power_of_two(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Precomputed twiddles and bit-reversal table for one transform length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl FftPlan {
    pub fn new(len: usize) -> Result<Self> {
        if !is_power_of_two(len) {
            return Err(Error::Domain(format!(
                "FFT length {len} is not a power of two; pad the input first"
            )));
        }
        let bits = len.trailing_zeros();
        let bitrev = (0..len)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..len / 2)
            .map(|k| {
                let theta = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        Ok(Self { len, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform, X[k] = sum_n x[n] exp(-2 pi i k n / N).
    pub fn forward(&self, buf: &mut [Complex64]) -> Result<()> {
        if buf.len() != self.len {
            return Err(Error::Shape(format!(
                "buffer of length {} given to FFT plan of length {}",
                buf.len(),
                self.len
            )));
        }
        for i in 0..self.len {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut half = 1;
        while half < self.len {
            let stride = self.len / (2 * half);
            for start in (0..self.len).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
        Ok(())
    }

    /// In-place inverse transform including the 1/N factor.
    pub fn inverse(&self, buf: &mut [Complex64]) -> Result<()> {
        for x in buf.iter_mut() {
            *x = x.conj();
        }
        self.forward(buf)?;
        let scale = 1.0 / self.len as f64;
        for x in buf.iter_mut() {
            *x = x.conj() * scale;
        }
        Ok(())
    }
}

/// Forward DFT of a power-of-two-length sequence.
pub fn fft(signal: &[Complex64]) -> Result<Vec<Complex64>> {
    let plan = FftPlan::new(signal.len())?;
    let mut buf = signal.to_vec();
    plan.forward(&mut buf)?;
    Ok(buf)
}

/// Inverse DFT, so that `ifft(fft(x)) == x` up to rounding.
pub fn ifft(spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
    let plan = FftPlan::new(spectrum.len())?;
    let mut buf = spectrum.to_vec();
    plan.inverse(&mut buf)?;
    Ok(buf)
}
