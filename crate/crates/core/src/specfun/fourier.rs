use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// Fourier coefficients of a periodic sample vector, `c_k = (1/n) sum_j v_j e^{-2 pi i jk/n}`.
///
/// Stored in FFT order; [`FourierSeries::get`] indexes by signed `k` in `[-n/2, n/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    data: Vec<Complex64>,
}

impl FourierSeries {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, k: i64) -> Complex64 {
        let n = self.data.len() as i64;
        debug_assert!(-n / 2 <= k && k < n / 2 + (n % 2));
        self.data[k.rem_euclid(n) as usize]
    }

    pub fn as_fft_order(&self) -> &[Complex64] {
        &self.data
    }
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::Length { len, reason: "transform length must be a power of two" });
    }
    Ok(())
}

/// Forward transform with `1/n` normalization so a constant maps to itself at `k = 0`.
pub fn dft(samples: &[Complex64]) -> Result<FourierSeries> {
    check_len(samples.len())?;
    let n = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    Ok(FourierSeries { data: buf })
}

/// Inverse of [`dft`]: returns the samples `v_j = sum_k c_k e^{2 pi i jk/n}`.
pub fn idft(series: &FourierSeries) -> Vec<Complex64> {
    let n = series.data.len();
    let mut buf = series.data.clone();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_maps_to_zero_mode() {
        let c = Complex64::new(1.5, -0.25);
        let s = dft(&[c; 16]).unwrap();
        assert!((s.get(0) - c).norm() < 1e-15);
        for k in -8..8 {
            if k != 0 {
                assert!(s.get(k).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn single_harmonic() {
        let v: Vec<_> = (0..8).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / 8.0)).collect();
        let s = dft(&v).unwrap();
        for k in -4..4 {
            let expect = if k == 1 { 1.0 } else { 0.0 };
            assert!((s.get(k).norm() - expect).abs() < 1e-15, "k = {k}");
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(dft(&[Complex64::default(); 12]), Err(Error::Length { .. })));
        assert!(dft(&[]).is_err());
    }

    #[test]
    fn round_trip() {
        // Deterministic pseudo-random vector.
        let mut state = 0x2545_f491_4f6c_dd1d_u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let v: Vec<_> = (0..64).map(|_| Complex64::new(next(), next())).collect();
        let back = idft(&dft(&v).unwrap());
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
