//! Small 1-D signal helpers: FFT convolution, interpolation, Gaussian kernels.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Forward/inverse FFT pair of one length.
#[derive(Clone)]
pub(crate) struct FftPair<T: Real> {
    pub len: usize,
    pub forward: Arc<dyn Fft<T>>,
    pub inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> FftPair<T> {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { len, forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len) }
    }

    /// FFT length suitable for a linear convolution of `a` and `b` samples.
    pub fn for_linear(a: usize, b: usize) -> Self {
        Self::new((a + b - 1).next_power_of_two())
    }

    pub fn scratch(&self) -> Vec<Complex<T>> {
        let n = self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len());
        vec![Complex::new(T::zero(), T::zero()); n]
    }

    /// Zero-padded forward transform of a complex sequence.
    pub fn spectrum(&self, x: &[Complex<T>], scratch: &mut [Complex<T>]) -> Vec<Complex<T>> {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.len];
        buf[..x.len()].copy_from_slice(x);
        self.forward.process_with_scratch(&mut buf, scratch);
        buf
    }

    /// Zero-padded forward transform of a real sequence.
    pub fn spectrum_real(&self, x: &[T], scratch: &mut [Complex<T>]) -> Vec<Complex<T>> {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.len];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.forward.process_with_scratch(&mut buf, scratch);
        buf
    }

    /// Inverse transform in place, including the 1/N normalisation.
    pub fn inverse_in_place(&self, buf: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        self.inverse.process_with_scratch(buf, scratch);
        let scale = T::one() / T::from_usize_lossy(self.len);
        for v in buf.iter_mut() {
            *v = *v * scale;
        }
    }
}

/// Full linear convolution, length `a.len() + b.len() - 1`.
pub fn convolve<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        return convolve_direct(a, b);
    }
    let fft = FftPair::for_linear(a.len(), b.len());
    let mut scratch = fft.scratch();
    let fa = fft.spectrum(a, &mut scratch);
    let mut fb = fft.spectrum(b, &mut scratch);
    for (x, y) in fb.iter_mut().zip(&fa) {
        *x = *x * *y;
    }
    fft.inverse_in_place(&mut fb, &mut scratch);
    fb.truncate(out_len);
    fb
}

/// Direct O(n m) linear convolution.
pub fn convolve_direct<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex::new(T::zero(), T::zero()); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Linear convolution of a real signal with a complex kernel, direct form.
pub fn convolve_real_direct<T: Real>(signal: &[T], kernel: &[Complex<T>]) -> Vec<Complex<T>> {
    if signal.is_empty() || kernel.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex::new(T::zero(), T::zero()); signal.len() + kernel.len() - 1];
    for (i, &x) in signal.iter().enumerate() {
        if x == T::zero() {
            continue;
        }
        for (j, &k) in kernel.iter().enumerate() {
            out[i + j] += k * x;
        }
    }
    out
}

/// Linear interpolation at fractional index `f`; `None` outside `[0, len - 1]`.
#[inline]
pub fn sample_linear<T: Real>(series: &[Complex<T>], f: T) -> Option<Complex<T>> {
    let n = series.len();
    if n == 0 || !(f >= T::zero()) {
        return None;
    }
    let last = T::from_usize_lossy(n - 1);
    if f > last {
        return None;
    }
    let i = f.floor().to_usize()?;
    if i + 1 >= n {
        return Some(series[n - 1]);
    }
    let w = f - T::from_usize_lossy(i);
    Some(series[i] * (T::one() - w) + series[i + 1] * w)
}

/// Real-valued counterpart of [`sample_linear`].
#[inline]
pub fn sample_linear_real<T: Real>(series: &[T], f: T) -> Option<T> {
    let n = series.len();
    if n == 0 || !(f >= T::zero()) {
        return None;
    }
    let last = T::from_usize_lossy(n - 1);
    if f > last {
        return None;
    }
    let i = f.floor().to_usize()?;
    if i + 1 >= n {
        return Some(series[n - 1]);
    }
    let w = f - T::from_usize_lossy(i);
    Some(series[i] * (T::one() - w) + series[i + 1] * w)
}

/// FWHM to standard deviation for a Gaussian: `fwhm / (2 sqrt(2 ln 2))`.
pub fn fwhm_to_sigma<T: Real>(fwhm: T) -> T {
    fwhm / (T::lit(2.0) * (T::lit(2.0) * T::LN_2()).sqrt())
}

/// Unit-sum sampled Gaussian with standard deviation `sigma` samples, truncated at 4 sigma.
pub fn gaussian_kernel<T: Real>(sigma: T) -> Vec<T> {
    let half = (sigma * T::lit(4.0)).ceil().to_usize().unwrap_or(0).max(1);
    let mut k: Vec<T> = (0..=2 * half)
        .map(|i| {
            let x = T::from_usize_lossy(i) - T::from_usize_lossy(half);
            (-(x * x) / (T::lit(2.0) * sigma * sigma)).exp()
        })
        .collect();
    let s: T = k.iter().copied().sum();
    for v in k.iter_mut() {
        *v /= s;
    }
    k
}

/// Same-length convolution of `x` with an odd-length centred kernel, zero outside.
pub fn convolve_same_real<T: Real>(x: &[T], kernel: &[T]) -> Vec<T> {
    let half = kernel.len() / 2;
    let n = x.len();
    let mut out = vec![T::zero(); n];
    for (i, &v) in x.iter().enumerate() {
        if v == T::zero() {
            continue;
        }
        for (j, &k) in kernel.iter().enumerate() {
            let idx = i + j;
            if idx >= half && idx - half < n {
                out[idx - half] += v * k;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn fft_and_direct_convolution_agree() {
        let a: Vec<_> = (0..100).map(|i| c((i as f64 * 0.3).sin(), (i as f64 * 0.11).cos())).collect();
        let b: Vec<_> = (0..77).map(|i| c(1.0 / (1.0 + i as f64), -(i as f64) * 0.01)).collect();
        let f = convolve(&a, &b);
        let d = convolve_direct(&a, &b);
        assert_eq!(f.len(), 176);
        for (x, y) in f.iter().zip(&d) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn interpolation_bounds() {
        let s = vec![c(0.0, 0.0), c(2.0, 0.0), c(4.0, 2.0)];
        assert_eq!(sample_linear(&s, 0.5), Some(c(1.0, 0.0)));
        assert_eq!(sample_linear(&s, 2.0), Some(c(4.0, 2.0)));
        assert_eq!(sample_linear(&s, 2.01), None);
        assert_eq!(sample_linear(&s, -0.01), None);
        assert_eq!(sample_linear_real(&[1.0, 3.0], 0.25), Some(1.5));
    }

    #[test]
    fn gaussian_kernel_is_normalised() {
        let k = gaussian_kernel(2.5f64);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert_eq!(k.len() % 2, 1);
        let same = convolve_same_real(&[0.0, 0.0, 1.0, 0.0, 0.0], &[0.25, 0.5, 0.25]);
        assert_eq!(same, vec![0.0, 0.25, 0.5, 0.25, 0.0]);
        assert!((fwhm_to_sigma(2.354820045f64) - 1.0).abs() < 1e-9);
    }
}
