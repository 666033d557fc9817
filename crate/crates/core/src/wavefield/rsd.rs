use num_complex::Complex;
use rayon::prelude::*;

use super::CameraField;
use crate::error::{NlosError, Result};
use crate::geometry::{ApertureGrid, PhysicalConstants, TimeBase, Vec3};
use crate::phasor::{wavenumber, PulseParams};
use crate::scalar::Real;

/// Prefactor of the diffraction sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RsdGamma {
    /// `1 / (i lambda)`, the scalar-wave Rayleigh-Sommerfeld factor.
    #[default]
    Wave,
    /// `1 / |centroid(S) - x_d|`, the phasor-field amplitude factor that replaces one
    /// power of `1/r` in a `1/r^2` intensity falloff.
    PhasorCentroid,
}

/// `1 / |source_centroid - dest|`.
pub fn rsd_amplitude_correction<T: Real>(source_centroid: Vec3<T>, dest: Vec3<T>) -> Result<T> {
    let r = source_centroid.distance(dest);
    if !(r > T::zero()) {
        return Err(NlosError::Singularity { source_index: 0, dest_index: 0 });
    }
    Ok(T::one() / r)
}

/// Direct Rayleigh-Sommerfeld sum
/// `P(x_d) = gamma * sum_s P(x_s) exp(i k r) / r * dA`, `r = |x_d - x_s|`, `dA = spacing^2`.
pub fn rsd_propagate<T: Real>(
    source: &ApertureGrid<T>,
    values: &[Complex<T>],
    dest: &[Vec3<T>],
    wavelength: T,
    gamma: RsdGamma,
) -> Result<Vec<Complex<T>>> {
    if !(wavelength > T::zero()) || !wavelength.is_finite() {
        return Err(NlosError::Parameter(format!("wavelength must be > 0, got {wavelength}")));
    }
    if values.len() != source.len() {
        return Err(NlosError::Shape(format!(
            "{} source values for {} source points",
            values.len(),
            source.len()
        )));
    }
    for (d, x) in dest.iter().enumerate() {
        if let Some(s) = source.points().iter().position(|p| p.distance(*x) == T::zero()) {
            return Err(NlosError::Singularity { source_index: s, dest_index: d });
        }
    }
    let k = wavenumber(wavelength);
    let area = source.cell_area();
    let centroid = source.centroid();
    let wave_gamma = Complex::new(T::zero(), -T::one() / wavelength);
    dest.par_iter()
        .enumerate()
        .map(|(d, x)| {
            let g = match gamma {
                RsdGamma::Wave => wave_gamma,
                RsdGamma::PhasorCentroid => {
                    let inv = rsd_amplitude_correction(centroid, *x)
                        .map_err(|_| NlosError::Singularity { source_index: usize::MAX, dest_index: d })?;
                    Complex::new(inv, T::zero())
                }
            };
            let sum = source
                .points()
                .iter()
                .zip(values)
                .fold(Complex::new(T::zero(), T::zero()), |acc, (s, v)| {
                    let r = s.distance(*x);
                    acc + *v * Complex::from_polar(T::one() / r, k * r)
                });
            Ok(g * sum * area)
        })
        .collect()
}

/// Pulsed field at `dest` radiated by `source`, where source point `s` emits
/// `values[s] * pulse(t)`.
///
/// The pulse spectrum is sampled on a comb of frequencies, each component is carried by
/// [`rsd_propagate`] with [`RsdGamma::Wave`], and the field is resynthesised on
/// `timebase`. The comb spacing keeps periodic replicas out of the record.
pub fn rsd_propagate_broadband<T: Real>(
    source: &ApertureGrid<T>,
    values: &[Complex<T>],
    dest: &ApertureGrid<T>,
    pulse: &PulseParams<T>,
    timebase: &TimeBase<T>,
    constants: &PhysicalConstants<T>,
) -> Result<CameraField<T>> {
    let c = constants.c;
    let (mut r_min, mut r_max) = (T::infinity(), T::zero());
    for s in source.points() {
        for d in dest.points() {
            let r = s.distance(*d);
            r_min = r_min.min(r);
            r_max = r_max.max(r);
        }
    }
    let six = T::lit(6.0) * pulse.sigma;
    let lo = timebase.time_of(0).min(pulse.t0 + r_min / c - six);
    let hi = timebase.time_of(timebase.n_bins - 1).max(pulse.t0 + r_max / c + six);
    let period = T::lit(2.0) * (hi - lo);
    let d_omega = T::TAU() / period;
    let omega0 = pulse.omega(constants);
    let half_band = T::lit(6.0) / pulse.sigma;
    let j_max = (half_band / d_omega).ceil().to_i64().unwrap_or(0);

    let conj_values: Vec<Complex<T>> = values.iter().map(|v| v.conj()).collect();
    let n_c = dest.len();
    let n_t = timebase.n_bins;
    let mut out = vec![Complex::new(T::zero(), T::zero()); n_c * n_t];
    let norm = d_omega / T::TAU();
    for j in -j_max..=j_max {
        let omega = omega0 + d_omega * T::lit(j as f64);
        if !(omega > T::zero()) {
            continue;
        }
        let dw = omega - omega0;
        // spectrum of exp(i w0 t) exp(-(t - t0)^2 / 2 sigma^2)
        let spectrum = Complex::from_polar(
            pulse.sigma * T::TAU().sqrt() * (-(dw * dw) * pulse.sigma * pulse.sigma / T::lit(2.0)).exp(),
            -dw * pulse.t0,
        ) * norm;
        let wavelength = T::TAU() * c / omega;
        let field = rsd_propagate(source, &conj_values, dest.points(), wavelength, RsdGamma::Wave)?;
        let steps: Vec<Complex<T>> =
            (0..n_t).map(|b| Complex::from_polar(T::one(), omega * timebase.time_of(b))).collect();
        out.par_chunks_mut(n_t).zip(&field).for_each(|(row, g)| {
            let a = spectrum * g.conj();
            for (o, e) in row.iter_mut().zip(&steps) {
                *o += a * *e;
            }
        });
    }
    CameraField::sampled(dest.clone(), *timebase, out)
}
