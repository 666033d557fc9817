use rayon::prelude::*;

use crate::error::{NlosError, Result};
use crate::forward::ResponseTensor;
use crate::geometry::{PhysicalConstants, ReconVolume, VolumeGrid};
use crate::scalar::Real;
use crate::signal::sample_linear_real;

/// Incoherent backprojection: `sum_{p,c} H(p -> c, (|x_p - x_v| + |x_v - x_c|) / c)`,
/// linearly interpolated. Voxels whose flight times leave the record are flagged invalid.
pub fn backproject<T: Real>(
    h: &ResponseTensor<T>,
    volume: &VolumeGrid<T>,
    constants: &PhysicalConstants<T>,
) -> Result<ReconVolume<T, T>> {
    let [n_p, n_c, _] = h.shape();
    let tb = *h.timebase();
    let inv = T::one() / constants.c;
    let p_pts = h.p_grid().points();
    let c_pts = h.c_grid().points();
    let (values, valid): (Vec<T>, Vec<bool>) = (0..volume.len())
        .into_par_iter()
        .map(|l| {
            let x = volume.center_of(l);
            let tc: Vec<T> = c_pts.iter().map(|c| x.distance(*c) * inv).collect();
            let mut acc = T::zero();
            for p in 0..n_p {
                let tp = x.distance(p_pts[p]) * inv;
                for c in 0..n_c {
                    match sample_linear_real(h.series(p, c), tb.fractional_bin(tp + tc[c])) {
                        Some(v) => acc += v,
                        None => return (T::zero(), false),
                    }
                }
            }
            (acc, true)
        })
        .unzip();
    ReconVolume::from_values(*volume, values, valid)
}

/// Sampled Gaussian (unit sum) and its second derivative adjusted to zero sum, both
/// truncated at `4 sigma`.
fn log_kernels<T: Real>(sigma: T) -> (Vec<T>, Vec<T>) {
    let half = (sigma * T::lit(4.0)).ceil().to_usize().unwrap_or(1).max(1);
    let s2 = sigma * sigma;
    let xs: Vec<T> = (0..=2 * half).map(|i| T::from_usize_lossy(i) - T::from_usize_lossy(half)).collect();
    let mut g: Vec<T> = xs.iter().map(|x| (-(*x * *x) / (T::lit(2.0) * s2)).exp()).collect();
    let gs: T = g.iter().copied().sum();
    g.iter_mut().for_each(|v| *v /= gs);
    let mut d2: Vec<T> = xs.iter().zip(&g).map(|(x, gv)| *gv * (*x * *x - s2) / (s2 * s2)).collect();
    let ds: T = d2.iter().copied().sum();
    d2.iter_mut().zip(&g).for_each(|(d, gv)| *d -= ds * *gv);
    (g, d2)
}

/// 1-D convolution along one axis with edge samples replicated.
fn convolve_axis<T: Real>(data: &[T], dims: (usize, usize, usize), axis: usize, kernel: &[T]) -> Vec<T> {
    let (nx, ny, nz) = dims;
    let half = (kernel.len() / 2) as i64;
    let (len, stride) = match axis {
        0 => (nx, 1),
        1 => (ny, nx),
        _ => (nz, nx * ny),
    };
    let mut out = vec![T::zero(); data.len()];
    out.par_iter_mut().enumerate().for_each(|(l, o)| {
        let pos = match axis {
            0 => l % nx,
            1 => (l / nx) % ny,
            _ => l / (nx * ny),
        } as i64;
        let base = l - pos as usize * stride;
        let mut acc = T::zero();
        for (t, k) in kernel.iter().enumerate() {
            let q = (pos + t as i64 - half).clamp(0, len as i64 - 1) as usize;
            acc += *k * data[base + q * stride];
        }
        *o = acc;
    });
    out
}

/// Negative Laplacian of Gaussian, positive at blob centres. Sums of separable
/// products whose derivative factor has zero sum, so constant volumes map to zero.
pub fn log_filter<T: Real>(values: &[T], dims: (usize, usize, usize), sigma: T) -> Result<Vec<T>> {
    if !(sigma > T::zero()) {
        return Err(NlosError::Parameter(format!("LoG sigma must be > 0 voxels, got {sigma}")));
    }
    if values.len() != dims.0 * dims.1 * dims.2 {
        return Err(NlosError::Shape("LoG input does not match its dims".into()));
    }
    let (g, d2) = log_kernels(sigma);
    let mut total = vec![T::zero(); values.len()];
    for deriv_axis in 0..3 {
        let mut cur = values.to_vec();
        for axis in 0..3 {
            let k = if axis == deriv_axis { &d2 } else { &g };
            cur = convolve_axis(&cur, dims, axis, k);
        }
        total.iter_mut().zip(&cur).for_each(|(t, v)| *t -= *v);
    }
    Ok(total)
}

/// Backprojection followed by the negative LoG, signed. Invalid voxels enter the filter as zero.
pub fn fbp_log_signed<T: Real>(
    h: &ResponseTensor<T>,
    volume: &VolumeGrid<T>,
    log_sigma: T,
    constants: &PhysicalConstants<T>,
) -> Result<ReconVolume<T, T>> {
    let bp = backproject(h, volume, constants)?;
    let filtered = log_filter(&bp.values, volume.dims, log_sigma)?;
    ReconVolume::from_values(*volume, filtered, bp.valid)
}

/// LoG-filtered backprojection with negative values clamped to zero.
pub fn fbp_log_reconstruct<T: Real>(
    h: &ResponseTensor<T>,
    volume: &VolumeGrid<T>,
    log_sigma: T,
    constants: &PhysicalConstants<T>,
) -> Result<ReconVolume<T, T>> {
    Ok(fbp_log_signed(h, volume, log_sigma, constants)?.map(|v| v.max(T::zero())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_annihilates_constants_and_peaks_on_blobs() {
        let dims = (9, 9, 9);
        let flat = vec![3.5f64; 729];
        let out = log_filter(&flat, dims, 1.0).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-12));
        let mut blob = vec![0.0f64; 729];
        blob[(4 * 9 + 4) * 9 + 4] = 1.0;
        let out = log_filter(&blob, dims, 1.0).unwrap();
        let arg = (0..729).max_by(|a, b| out[*a].partial_cmp(&out[*b]).unwrap()).unwrap();
        assert_eq!(arg, (4 * 9 + 4) * 9 + 4);
        assert!(log_filter(&blob, dims, 0.0).is_err());
    }
}
