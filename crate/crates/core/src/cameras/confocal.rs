use num_complex::Complex;
use rayon::prelude::*;

use super::{check_wavelength_resolvable, pulse_timebase, CameraConfig};
use crate::error::Result;
use crate::forward::ResponseTensor;
use crate::geometry::{PhysicalConstants, ReconVolume, VolumeGrid};
use crate::phasor::{make_confocal_projector, ConfocalForm};
use crate::scalar::Real;
use crate::signal::FftPair;
use crate::wavefield::{lens_at_points, propagate_through_scene};

/// Confocal camera: illumination and lens both focused on each voxel.
///
/// Voxel `x_v` receives `|sum_{p,c} G_pc(t0 + tau_p + tau_c)|` with
/// `tau = |x_v - x| / c` and `G_pc = pulse (*) H(p -> c, .)`, which equals building the
/// focused projector, propagating it through `H` and imaging at `t0`. `G` is stored
/// demodulated by the carrier and interpolated linearly, so the interpolation only has
/// to follow the envelope.
pub fn confocal_camera<T: Real>(
    h: &ResponseTensor<T>,
    config: &CameraConfig<T>,
    volume: &VolumeGrid<T>,
    constants: &PhysicalConstants<T>,
) -> Result<ReconVolume<T, T>> {
    config.validate()?;
    let pulse = *config.pulse()?;
    let htb = *h.timebase();
    check_wavelength_resolvable(pulse.center_wavelength, &htb, constants)?;
    let [n_p, n_c, n_t] = h.shape();
    let inv_c = T::one() / constants.c;
    let omega = pulse.omega(constants);
    let dt = htb.bin_width;
    let p_pts = h.p_grid().points();
    let c_pts = h.c_grid().points();

    // range of tau_p + tau_c over the volume decides which part of G is needed
    let (lo, hi) = (0..volume.len())
        .into_par_iter()
        .map(|l| {
            let x = volume.center_of(l);
            let (pmin, pmax) = min_max(p_pts.iter().map(|p| x.distance(*p) * inv_c));
            let (cmin, cmax) = min_max(c_pts.iter().map(|c| x.distance(*c) * inv_c));
            (pmin + cmin, pmax + cmax)
        })
        .reduce(|| (T::infinity(), T::neg_infinity()), |a, b| (a.0.min(b.0), a.1.max(b.1)));

    let wtb = pulse_timebase(&pulse, dt, T::zero(), T::zero())?;
    let n_w = wtb.n_bins;
    let g_origin = wtb.origin_offset + htb.origin_offset;
    let g_len = n_w + n_t - 1;
    // one bin of slack on each side absorbs rounding between the bound and per-pair sums
    let first = ((pulse.t0 + lo - g_origin) / dt - T::one()).floor().max(T::zero()).to_usize().unwrap_or(0).min(g_len);
    let last = ((pulse.t0 + hi - g_origin) / dt + T::one()).ceil().max(T::zero()).to_usize().unwrap_or(0).min(g_len - 1);
    let window = if last >= first { last - first + 1 } else { 0 };
    let window_origin = g_origin + T::from_usize_lossy(first) * dt;

    let fft = FftPair::<T>::for_linear(n_w, n_t);
    let mut scratch = fft.scratch();
    let w: Vec<Complex<T>> = (0..n_w).map(|b| pulse.value(omega, wtb.time_of(b))).collect();
    let w_spec = fft.spectrum(&w, &mut scratch);
    let demod: Vec<Complex<T>> = (first..first + window)
        .map(|m| Complex::from_polar(T::one(), -omega * (g_origin + T::from_usize_lossy(m) * dt)))
        .collect();
    let baseband: Vec<Vec<Complex<T>>> = (0..n_p * n_c)
        .into_par_iter()
        .map(|pc| {
            let series = h.series(pc / n_c, pc % n_c);
            if window == 0 || series.iter().all(|v| *v == T::zero()) {
                return Vec::new();
            }
            let mut scratch = fft.scratch();
            let mut g = fft.spectrum_real(series, &mut scratch);
            for (x, y) in g.iter_mut().zip(&w_spec) {
                *x = *x * *y;
            }
            fft.inverse_in_place(&mut g, &mut scratch);
            g[first..first + window].iter().zip(&demod).map(|(a, b)| *a * *b).collect()
        })
        .collect();

    let carrier0 = Complex::from_polar(T::one(), omega * pulse.t0);
    let (values, valid): (Vec<T>, Vec<bool>) = (0..volume.len())
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(n_p), Vec::with_capacity(n_c)),
            |(tp, tc), l| {
                let x = volume.center_of(l);
                tp.clear();
                tc.clear();
                tp.extend(p_pts.iter().map(|p| x.distance(*p) * inv_c));
                tc.extend(c_pts.iter().map(|c| x.distance(*c) * inv_c));
                let phase_p: Vec<Complex<T>> = tp.iter().map(|t| Complex::from_polar(T::one(), omega * *t)).collect();
                let phase_c: Vec<Complex<T>> = tc.iter().map(|t| Complex::from_polar(T::one(), omega * *t)).collect();
                let mut acc = Complex::new(T::zero(), T::zero());
                for p in 0..n_p {
                    let mut row = Complex::new(T::zero(), T::zero());
                    let base = pulse.t0 + tp[p] - window_origin;
                    for c in 0..n_c {
                        let b = &baseband[p * n_c + c];
                        if b.is_empty() {
                            continue;
                        }
                        let f = (base + tc[c]) / dt;
                        if !(f >= T::zero()) || f > T::from_usize_lossy(window - 1) {
                            return (T::zero(), false);
                        }
                        let i = f.floor().to_usize().unwrap_or(0).min(window - 1);
                        let frac = f - T::from_usize_lossy(i);
                        let z = if i + 1 < window { b[i] + (b[i + 1] - b[i]) * frac } else { b[i] };
                        row += z * phase_c[c];
                    }
                    acc += row * phase_p[p];
                }
                ((acc * carrier0).norm(), true)
            },
        )
        .unzip();
    ReconVolume::from_values(*volume, values, valid)
}

fn min_max<T: Real>(it: impl Iterator<Item = T>) -> (T, T) {
    it.fold((T::infinity(), T::neg_infinity()), |(a, b), v| (a.min(v), b.max(v)))
}

/// Reference confocal camera that follows the definition voxel by voxel: build the
/// focused projector, propagate it through `H`, lens-image the voxel at `t0`.
/// Costs a full propagation per voxel; intended for cross-checks on small volumes.
pub fn confocal_camera_literal<T: Real>(
    h: &ResponseTensor<T>,
    config: &CameraConfig<T>,
    volume: &VolumeGrid<T>,
    constants: &PhysicalConstants<T>,
) -> Result<ReconVolume<T, T>> {
    config.validate()?;
    let pulse = *config.pulse()?;
    check_wavelength_resolvable(pulse.center_wavelength, h.timebase(), constants)?;
    let mut values = Vec::with_capacity(volume.len());
    let mut valid = Vec::with_capacity(volume.len());
    for l in 0..volume.len() {
        let x = volume.center_of(l);
        let (tmin, tmax) = min_max(h.p_grid().points().iter().map(|p| x.distance(*p) / constants.c));
        let tb = pulse_timebase(&pulse, h.timebase().bin_width, tmin, tmax)?;
        let projector = make_confocal_projector(&pulse, x, h.p_grid(), &tb, constants, ConfocalForm::Phase)?;
        let field = propagate_through_scene(h, &projector)?;
        let z = lens_at_points(&field, &[x], &[pulse.t0], constants)?[0];
        values.push(z.map_or(T::zero(), |z| z.norm()));
        valid.push(z.is_some());
    }
    ReconVolume::from_values(*volume, values, valid)
}
