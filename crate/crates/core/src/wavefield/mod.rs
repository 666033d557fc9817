//! Wave propagation: scene transfer, Rayleigh-Sommerfeld diffraction, the ideal lens
//! and the Fresnel plane-to-plane approximation.

mod fresnel;
mod lens;
mod rsd;

use num_complex::Complex;
use rayon::prelude::*;

pub use fresnel::{fresnel_propagate, fresnel_validity, FresnelSupport, PlaneField};
pub use lens::{lens_at_points, lens_image, EvalTime};
pub use rsd::{rsd_amplitude_correction, rsd_propagate, rsd_propagate_broadband, RsdGamma};

use crate::error::{NlosError, Result};
use crate::forward::ResponseTensor;
use crate::geometry::{ApertureGrid, TimeBase};
use crate::phasor::{PhasorWaveform, WaveformData};
use crate::scalar::Real;
use crate::signal::{convolve, sample_linear, FftPair};

/// Storage of a camera-side field.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData<T> {
    /// `amplitude[c] * exp(i omega t)`.
    Tone { amplitudes: Vec<Complex<T>>, omega: T },
    /// `[c][bin]` samples on `timebase`.
    Sampled { samples: Vec<Complex<T>>, timebase: TimeBase<T> },
}

/// Phasor field arriving at the camera aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraField<T> {
    grid: ApertureGrid<T>,
    data: FieldData<T>,
}

impl<T: Real> CameraField<T> {
    pub fn tone(grid: ApertureGrid<T>, amplitudes: Vec<Complex<T>>, omega: T) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(NlosError::Shape(format!(
                "{} amplitudes for {} camera points",
                amplitudes.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data: FieldData::Tone { amplitudes, omega } })
    }

    pub fn sampled(grid: ApertureGrid<T>, timebase: TimeBase<T>, samples: Vec<Complex<T>>) -> Result<Self> {
        if samples.len() != grid.len() * timebase.n_bins {
            return Err(NlosError::Shape(format!(
                "{} samples for {} points x {} bins",
                samples.len(),
                grid.len(),
                timebase.n_bins
            )));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NlosError::Parameter("camera field holds non-finite samples".into()));
        }
        Ok(Self { grid, data: FieldData::Sampled { samples, timebase } })
    }

    /// Tone field from amplitudes computed by [`rsd_propagate`].
    ///
    /// The diffraction integral uses outgoing waves `exp(+i k r)`, which under the
    /// `exp(+i w t)` carrier used here is the complex conjugate.
    pub fn from_rsd(grid: ApertureGrid<T>, rsd_values: &[Complex<T>], omega: T) -> Result<Self> {
        Self::tone(grid, rsd_values.iter().map(|z| z.conj()).collect(), omega)
    }

    pub fn grid(&self) -> &ApertureGrid<T> {
        &self.grid
    }

    pub fn data(&self) -> &FieldData<T> {
        &self.data
    }

    pub fn timebase(&self) -> Option<&TimeBase<T>> {
        match &self.data {
            FieldData::Sampled { timebase, .. } => Some(timebase),
            FieldData::Tone { .. } => None,
        }
    }

    pub fn series(&self, c: usize) -> Option<&[Complex<T>]> {
        match &self.data {
            FieldData::Sampled { samples, timebase } => {
                let n = timebase.n_bins;
                Some(&samples[c * n..(c + 1) * n])
            }
            FieldData::Tone { .. } => None,
        }
    }

    /// Field at camera point `c` and time `t`; `None` outside a sampled record.
    #[inline]
    pub fn sample(&self, c: usize, t: T) -> Option<Complex<T>> {
        match &self.data {
            FieldData::Tone { amplitudes, omega } => Some(amplitudes[c] * Complex::from_polar(T::one(), *omega * t)),
            FieldData::Sampled { samples, timebase } => {
                let n = timebase.n_bins;
                sample_linear(&samples[c * n..(c + 1) * n], timebase.fractional_bin(t))
            }
        }
    }

    /// Full linear convolution of every sampled series with `kernel` (kernel bin 0 at delay 0).
    pub fn convolved_in_time(&self, kernel: &[Complex<T>]) -> Result<Self> {
        match &self.data {
            FieldData::Sampled { samples, timebase } => {
                let (samples, timebase) = convolve_rows(samples, timebase, kernel)?;
                Self::sampled(self.grid.clone(), timebase, samples)
            }
            FieldData::Tone { .. } => Err(NlosError::Shape("cannot time-convolve a tone field".into())),
        }
    }
}

fn convolve_rows<T: Real>(
    samples: &[Complex<T>],
    timebase: &TimeBase<T>,
    kernel: &[Complex<T>],
) -> Result<(Vec<Complex<T>>, TimeBase<T>)> {
    if kernel.is_empty() {
        return Err(NlosError::Parameter("empty convolution kernel".into()));
    }
    let out_tb = TimeBase::new(timebase.bin_width, timebase.n_bins + kernel.len() - 1, timebase.origin_offset)?;
    let out: Vec<Complex<T>> = samples.chunks(timebase.n_bins).flat_map(|row| convolve(row, kernel)).collect();
    Ok((out, out_tb))
}

/// Full linear convolution of every sampled projector series with `kernel`.
pub fn convolve_waveform_in_time<T: Real>(
    waveform: &PhasorWaveform<T>,
    kernel: &[Complex<T>],
    constants: &crate::geometry::PhysicalConstants<T>,
) -> Result<PhasorWaveform<T>> {
    match waveform.data() {
        WaveformData::Sampled { samples, timebase } => {
            let (samples, timebase) = convolve_rows(samples, timebase, kernel)?;
            PhasorWaveform::sampled(waveform.grid().clone(), timebase, samples, waveform.wavelength(), constants)
        }
        WaveformData::Monochromatic { .. } => {
            Err(NlosError::Shape("cannot time-convolve a monochromatic waveform".into()))
        }
    }
}

fn check_projector_grid<T: Real>(h: &ResponseTensor<T>, projector: &PhasorWaveform<T>) -> Result<()> {
    let hp = h.p_grid();
    let wp = projector.grid();
    if hp.len() != wp.len() {
        return Err(NlosError::Shape(format!(
            "projector has {} points, response has {}",
            wp.len(),
            hp.len()
        )));
    }
    let tol = T::lit(1e-9).max(hp.spacing() * T::lit(1e-6));
    if let Some(i) = hp.points().iter().zip(wp.points()).position(|(a, b)| a.distance(*b) > tol) {
        return Err(NlosError::Shape(format!("projector point {i} differs from the response's projector grid")));
    }
    Ok(())
}

/// Field at the camera aperture: `sum_p projector_p (*) H(p -> c, .)`.
///
/// A monochromatic projector uses the single-frequency shortcut
/// `A_c = sum_p a_p sum_j H[p, c, j] exp(-i w t_j)`; a sampled projector is convolved
/// in time, yielding `n_w + n_t - 1` bins starting at the sum of both time origins.
pub fn propagate_through_scene<T: Real>(
    h: &ResponseTensor<T>,
    projector: &PhasorWaveform<T>,
) -> Result<CameraField<T>> {
    check_projector_grid(h, projector)?;
    let [n_p, n_c, n_t] = h.shape();
    let htb = h.timebase();
    match projector.data() {
        WaveformData::Monochromatic { amplitudes } => {
            let omega = projector.omega();
            let phasors: Vec<Complex<T>> =
                (0..n_t).map(|j| Complex::from_polar(T::one(), -omega * htb.time_of(j))).collect();
            let out: Vec<Complex<T>> = (0..n_c)
                .into_par_iter()
                .map(|c| {
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for (p, a) in amplitudes.iter().enumerate() {
                        if a.norm_sqr() == T::zero() {
                            continue;
                        }
                        let coeff = h
                            .series(p, c)
                            .iter()
                            .zip(&phasors)
                            .fold(Complex::new(T::zero(), T::zero()), |s, (v, e)| s + *e * *v);
                        acc += *a * coeff;
                    }
                    acc
                })
                .collect();
            CameraField::tone(h.c_grid().clone(), out, omega)
        }
        WaveformData::Sampled { samples, timebase } => {
            if !timebase.compatible_with(htb) {
                return Err(NlosError::Shape(format!(
                    "projector bin width {} s differs from response bin width {} s",
                    timebase.bin_width, htb.bin_width
                )));
            }
            let n_w = timebase.n_bins;
            let out_len = n_w + n_t - 1;
            let out_tb = TimeBase::new(htb.bin_width, out_len, timebase.origin_offset + htb.origin_offset)?;
            let fft = FftPair::<T>::for_linear(n_w, n_t);
            let mut scratch = fft.scratch();
            let active: Vec<(usize, Vec<Complex<T>>)> = (0..n_p)
                .filter_map(|p| {
                    let s = &samples[p * n_w..(p + 1) * n_w];
                    s.iter().any(|z| z.norm_sqr() > T::zero()).then(|| (p, fft.spectrum(s, &mut scratch)))
                })
                .collect();
            let rows: Vec<Vec<Complex<T>>> = (0..n_c)
                .into_par_iter()
                .map(|c| {
                    let mut scratch = fft.scratch();
                    let mut acc = vec![Complex::new(T::zero(), T::zero()); fft.len];
                    for (p, spec) in &active {
                        let hs = fft.spectrum_real(h.series(*p, c), &mut scratch);
                        for ((a, x), y) in acc.iter_mut().zip(spec).zip(&hs) {
                            *a += *x * *y;
                        }
                    }
                    fft.inverse_in_place(&mut acc, &mut scratch);
                    acc.truncate(out_len);
                    acc
                })
                .collect();
            CameraField::sampled(h.c_grid().clone(), out_tb, rows.concat())
        }
    }
}
