//! Virtual illumination wavefronts and phasor extraction from intensity signals.
//!
//! Carrier convention: waveforms oscillate as `exp(+i w t)`, so delaying a waveform by
//! `tau` multiplies it by `exp(-i w tau)`.

use num_complex::Complex;

use crate::error::{NlosError, Result};
use crate::geometry::{ApertureGrid, PhysicalConstants, TimeBase, Vec3};
use crate::scalar::Real;
use crate::signal::FftPair;

/// Number of carrier cycles per envelope standard deviation used by [`PulseParams::with_cycles`].
pub const DEFAULT_PULSE_CYCLES: f64 = 6.0;

/// Default phasor wavelength in meters.
pub const DEFAULT_WAVELENGTH: f64 = 0.04;

/// Gaussian-enveloped phasor pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams<T> {
    /// Envelope standard deviation, seconds.
    pub sigma: T,
    /// Envelope centre, seconds.
    pub t0: T,
    /// Carrier wavelength, meters.
    pub center_wavelength: T,
}

impl<T: Real> PulseParams<T> {
    pub fn new(sigma: T, t0: T, center_wavelength: T) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(NlosError::Parameter(format!("pulse sigma must be > 0, got {sigma}")));
        }
        check_wavelength(center_wavelength)?;
        if !t0.is_finite() {
            return Err(NlosError::Parameter("pulse centre must be finite".into()));
        }
        Ok(Self { sigma, t0, center_wavelength })
    }

    /// Pulse whose envelope sigma spans `cycles` carrier periods: `sigma = cycles * lambda / c`.
    pub fn with_cycles(cycles: T, t0: T, center_wavelength: T, constants: &PhysicalConstants<T>) -> Result<Self> {
        Self::new(cycles * center_wavelength / constants.c, t0, center_wavelength)
    }

    /// Pulse with the default width of six carrier cycles.
    pub fn default_for(center_wavelength: T, t0: T, constants: &PhysicalConstants<T>) -> Result<Self> {
        Self::with_cycles(T::lit(DEFAULT_PULSE_CYCLES), t0, center_wavelength, constants)
    }

    pub fn omega(&self, constants: &PhysicalConstants<T>) -> T {
        angular_frequency(self.center_wavelength, constants)
    }

    /// `exp(i w t) * exp(-(t - t0)^2 / (2 sigma^2))`.
    #[inline]
    pub fn value(&self, omega: T, t: T) -> Complex<T> {
        let d = (t - self.t0) / self.sigma;
        Complex::from_polar((-(d * d) / T::lit(2.0)).exp(), omega * t)
    }

    /// Envelope only.
    #[inline]
    pub fn envelope(&self, t: T) -> T {
        let d = (t - self.t0) / self.sigma;
        (-(d * d) / T::lit(2.0)).exp()
    }
}

fn check_wavelength<T: Real>(wavelength: T) -> Result<()> {
    if !(wavelength > T::zero()) || !wavelength.is_finite() {
        return Err(NlosError::Parameter(format!("wavelength must be > 0, got {wavelength}")));
    }
    Ok(())
}

/// `w = 2 pi c / lambda`.
pub fn angular_frequency<T: Real>(wavelength: T, constants: &PhysicalConstants<T>) -> T {
    T::TAU() * constants.c / wavelength
}

/// `k = 2 pi / lambda`.
pub fn wavenumber<T: Real>(wavelength: T) -> T {
    T::TAU() / wavelength
}

/// Storage of a phasor waveform.
#[derive(Debug, Clone, PartialEq)]
pub enum WaveformData<T> {
    /// One complex amplitude per aperture point; the time dependence `exp(i w t)` is implicit.
    Monochromatic { amplitudes: Vec<Complex<T>> },
    /// `[point][bin]` samples on `timebase`.
    Sampled { samples: Vec<Complex<T>>, timebase: TimeBase<T> },
}

/// Virtual phasor field attached to the points of an aperture grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasorWaveform<T> {
    grid: ApertureGrid<T>,
    wavelength: T,
    omega: T,
    data: WaveformData<T>,
}

impl<T: Real> PhasorWaveform<T> {
    pub fn monochromatic(
        grid: ApertureGrid<T>,
        amplitudes: Vec<Complex<T>>,
        wavelength: T,
        constants: &PhysicalConstants<T>,
    ) -> Result<Self> {
        check_wavelength(wavelength)?;
        if amplitudes.len() != grid.len() {
            return Err(NlosError::Shape(format!(
                "{} amplitudes for {} aperture points",
                amplitudes.len(),
                grid.len()
            )));
        }
        check_finite(&amplitudes)?;
        let omega = angular_frequency(wavelength, constants);
        Ok(Self { grid, wavelength, omega, data: WaveformData::Monochromatic { amplitudes } })
    }

    pub fn sampled(
        grid: ApertureGrid<T>,
        timebase: TimeBase<T>,
        samples: Vec<Complex<T>>,
        wavelength: T,
        constants: &PhysicalConstants<T>,
    ) -> Result<Self> {
        check_wavelength(wavelength)?;
        if samples.len() != grid.len() * timebase.n_bins {
            return Err(NlosError::Shape(format!(
                "{} samples for {} points x {} bins",
                samples.len(),
                grid.len(),
                timebase.n_bins
            )));
        }
        check_finite(&samples)?;
        let omega = angular_frequency(wavelength, constants);
        Ok(Self { grid, wavelength, omega, data: WaveformData::Sampled { samples, timebase } })
    }

    pub fn grid(&self) -> &ApertureGrid<T> {
        &self.grid
    }

    pub fn wavelength(&self) -> T {
        self.wavelength
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn wavenumber(&self) -> T {
        wavenumber(self.wavelength)
    }

    pub fn data(&self) -> &WaveformData<T> {
        &self.data
    }

    pub fn timebase(&self) -> Option<&TimeBase<T>> {
        match &self.data {
            WaveformData::Sampled { timebase, .. } => Some(timebase),
            WaveformData::Monochromatic { .. } => None,
        }
    }

    /// Samples of point `p`; `None` for monochromatic waveforms.
    pub fn series(&self, p: usize) -> Option<&[Complex<T>]> {
        match &self.data {
            WaveformData::Sampled { samples, timebase } => {
                let n = timebase.n_bins;
                Some(&samples[p * n..(p + 1) * n])
            }
            WaveformData::Monochromatic { .. } => None,
        }
    }

    /// Complex amplitude of the `exp(i w t)` tone at point `p`; `None` for sampled waveforms.
    pub fn amplitude(&self, p: usize) -> Option<Complex<T>> {
        match &self.data {
            WaveformData::Monochromatic { amplitudes } => Some(amplitudes[p]),
            WaveformData::Sampled { .. } => None,
        }
    }
}

fn check_finite<T: Real>(v: &[Complex<T>]) -> Result<()> {
    if let Some(i) = v.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(NlosError::Parameter(format!("waveform sample {i} is not finite")));
    }
    Ok(())
}

/// Unit-amplitude, zero-phase monochromatic illumination of every aperture point.
pub fn make_photo_projector<T: Real>(
    wavelength: T,
    p_grid: &ApertureGrid<T>,
    constants: &PhysicalConstants<T>,
) -> Result<PhasorWaveform<T>> {
    let ones = vec![Complex::new(T::one(), T::zero()); p_grid.len()];
    PhasorWaveform::monochromatic(p_grid.clone(), ones, wavelength, constants)
}

fn warn_coverage<T: Real>(earliest: T, latest: T, timebase: &TimeBase<T>) {
    if earliest < timebase.time_of(0) || latest > timebase.time_of(timebase.n_bins - 1) {
        log::warn!(
            "pulse support [{earliest}, {latest}] s extends past the timebase [{}, {}] s",
            timebase.time_of(0),
            timebase.time_of(timebase.n_bins - 1)
        );
    }
}

/// Gaussian pulse emitted from a single aperture point; all other points are dark.
pub fn make_transient_projector<T: Real>(
    pulse: &PulseParams<T>,
    source_index: usize,
    p_grid: &ApertureGrid<T>,
    timebase: &TimeBase<T>,
    constants: &PhysicalConstants<T>,
) -> Result<PhasorWaveform<T>> {
    if source_index >= p_grid.len() {
        return Err(NlosError::Parameter(format!(
            "source index {source_index} outside aperture of {} points",
            p_grid.len()
        )));
    }
    let four = T::lit(4.0) * pulse.sigma;
    warn_coverage(pulse.t0 - four, pulse.t0 + four, timebase);
    let omega = pulse.omega(constants);
    let n = timebase.n_bins;
    let mut samples = vec![Complex::new(T::zero(), T::zero()); p_grid.len() * n];
    for (b, s) in samples[source_index * n..(source_index + 1) * n].iter_mut().enumerate() {
        *s = pulse.value(omega, timebase.time_of(b));
    }
    PhasorWaveform::sampled(p_grid.clone(), *timebase, samples, pulse.center_wavelength, constants)
}

/// How the confocal focusing delay is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConfocalForm {
    /// Evaluate `exp(i k r_p) * exp(i w t) * envelope(t + r_p / c)` directly.
    #[default]
    Phase,
    /// Sample the unfocused pulse, then advance each point's series by `r_p / c`
    /// with an FFT fractional delay.
    TimeShift,
}

/// Pulse emitted from every aperture point, advanced by `|x_v - x_p| / c` so that all
/// contributions reach `focus` together at `t0`.
pub fn make_confocal_projector<T: Real>(
    pulse: &PulseParams<T>,
    focus: Vec3<T>,
    p_grid: &ApertureGrid<T>,
    timebase: &TimeBase<T>,
    constants: &PhysicalConstants<T>,
    form: ConfocalForm,
) -> Result<PhasorWaveform<T>> {
    let omega = pulse.omega(constants);
    let k = wavenumber(pulse.center_wavelength);
    let n = timebase.n_bins;
    let advances: Vec<T> = p_grid.points().iter().map(|p| focus.distance(*p) / constants.c).collect();
    let four = T::lit(4.0) * pulse.sigma;
    let max_adv = advances.iter().fold(T::zero(), |m, a| m.max(*a));
    let min_adv = advances.iter().fold(T::infinity(), |m, a| m.min(*a));
    warn_coverage(pulse.t0 - max_adv - four, pulse.t0 - min_adv + four, timebase);

    let mut samples = Vec::with_capacity(p_grid.len() * n);
    match form {
        ConfocalForm::Phase => {
            for (p, &adv) in p_grid.points().iter().zip(&advances) {
                let focus_phase = Complex::from_polar(T::one(), k * focus.distance(*p));
                for b in 0..n {
                    let t = timebase.time_of(b);
                    let carrier = Complex::from_polar(pulse.envelope(t + adv), omega * t);
                    samples.push(carrier * focus_phase);
                }
            }
        }
        ConfocalForm::TimeShift => {
            let base: Vec<Complex<T>> = (0..n).map(|b| pulse.value(omega, timebase.time_of(b))).collect();
            let fft = FftPair::new(n);
            let mut scratch = fft.scratch();
            let spectrum = fft.spectrum(&base, &mut scratch);
            for &adv in &advances {
                samples.extend(fractional_advance(&fft, &spectrum, adv / timebase.bin_width, &mut scratch));
            }
        }
    }
    PhasorWaveform::sampled(p_grid.clone(), *timebase, samples, pulse.center_wavelength, constants)
}

/// Advances a sequence by `shift` samples (`x(n + shift)`) through a linear phase ramp.
fn fractional_advance<T: Real>(
    fft: &FftPair<T>,
    spectrum: &[Complex<T>],
    shift: T,
    scratch: &mut [Complex<T>],
) -> Vec<Complex<T>> {
    let n = fft.len;
    let mut buf: Vec<Complex<T>> = spectrum
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let f = signed_frequency(j, n);
            x * Complex::from_polar(T::one(), T::TAU() * f * shift)
        })
        .collect();
    fft.inverse_in_place(&mut buf, scratch);
    buf
}

/// Frequency of FFT bin `j` in cycles per sample, in `[-1/2, 1/2)`.
pub(crate) fn signed_frequency<T: Real>(j: usize, n: usize) -> T {
    let jj = if 2 * j >= n { j as f64 - n as f64 } else { j as f64 };
    T::lit(jj / n as f64)
}

/// Dominant tone of a phasor signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone<T> {
    /// Peak amplitude of the real sinusoid.
    pub amplitude: T,
    /// Angular frequency, rad/s.
    pub omega: T,
    /// Phase of the `exp(i w t)` component at bin 0.
    pub phase: T,
    /// Spectral bin index of the tone.
    pub bin: usize,
}

/// Output of [`extract_phasor`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhasorSignal<T> {
    /// Short-window integral minus the scaled long-window mean.
    pub real: Vec<T>,
    /// Analytic signal: `real + i * hilbert(real)`.
    pub analytic: Vec<Complex<T>>,
    pub tone: Tone<T>,
}

/// Extracts the phasor field from an intensity time series.
///
/// With `tau` and `window` rounded to whole bins, the real phasor at bin `n` is the
/// integral of the intensity over a `tau` window centred on `n` minus `tau` times the
/// mean over a `window`-long window centred on `n`. Windows are clamped to the record,
/// so `window` equal to the record length subtracts the global mean.
pub fn extract_phasor<T: Real>(intensity: &[T], bin_width: T, tau: T, window: T) -> Result<PhasorSignal<T>> {
    let n = intensity.len();
    if n < 2 {
        return Err(NlosError::Parameter("intensity record needs at least two samples".into()));
    }
    if !(bin_width > T::zero()) {
        return Err(NlosError::Parameter(format!("bin width must be > 0, got {bin_width}")));
    }
    if !(tau > T::zero()) || !(tau < window) {
        return Err(NlosError::Parameter(format!("need 0 < tau < T, got tau = {tau}, T = {window}")));
    }
    let to_bins = |x: T| (x / bin_width).round().to_usize().unwrap_or(0).max(1);
    let tau_bins = to_bins(tau);
    let long_bins = to_bins(window);
    if long_bins > n {
        return Err(NlosError::Parameter(format!(
            "long window of {long_bins} bins exceeds the record of {n} bins"
        )));
    }
    if tau_bins >= long_bins {
        return Err(NlosError::Parameter("tau and T round to overlapping window lengths".into()));
    }

    let mut prefix = vec![T::zero(); n + 1];
    for (i, &v) in intensity.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    let window_sum = |centre: usize, len: usize| {
        let start = (centre + 1).saturating_sub(len.div_ceil(2)).min(n - len);
        prefix[start + len] - prefix[start]
    };
    let tau_s = T::from_usize_lossy(tau_bins) * bin_width;
    let real: Vec<T> = (0..n)
        .map(|i| {
            let short = window_sum(i, tau_bins) * bin_width;
            let mean = window_sum(i, long_bins) / T::from_usize_lossy(long_bins);
            short - tau_s * mean
        })
        .collect();

    let fft = FftPair::new(n);
    let mut scratch = fft.scratch();
    let buf: Vec<Complex<T>> = real.iter().map(|&r| Complex::new(r, T::zero())).collect();
    let spectrum = fft.spectrum(&buf, &mut scratch);

    let half = n / 2;
    let (bin, peak) = (1..=half)
        .map(|j| (j, spectrum[j]))
        .fold((0, Complex::new(T::zero(), T::zero())), |best, cur| {
            if cur.1.norm() > best.1.norm() {
                cur
            } else {
                best
            }
        });
    let nyquist = n % 2 == 0 && bin == half;
    let scale = if nyquist { T::one() } else { T::lit(2.0) } / T::from_usize_lossy(n);
    let tone = Tone {
        amplitude: peak.norm() * scale,
        omega: T::TAU() * T::from_usize_lossy(bin) / (T::from_usize_lossy(n) * bin_width),
        phase: peak.arg(),
        bin,
    };

    let mut analytic = spectrum;
    for (j, x) in analytic.iter_mut().enumerate() {
        if j == 0 || (n % 2 == 0 && j == half) {
            continue;
        }
        if j <= (n - 1) / 2 {
            *x = *x * T::lit(2.0);
        } else {
            *x = Complex::new(T::zero(), T::zero());
        }
    }
    fft.inverse_in_place(&mut analytic, &mut scratch);

    Ok(PhasorSignal { real, analytic, tone })
}
