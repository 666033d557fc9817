//! Point-spread measurements on reconstructed volumes.

use crate::geometry::ReconVolume;
use crate::scalar::Real;

/// Full width at half maximum of the main lobe of `profile`, with linearly interpolated
/// crossings. `None` when the lobe does not fall to half height on both sides.
pub fn fwhm<T: Real>(profile: &[T], spacing: T) -> Option<T> {
    let (peak, &max) = profile.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
    if !(max > T::zero()) {
        return None;
    }
    let half = max / T::lit(2.0);
    let mut left = None;
    for i in (0..peak).rev() {
        if profile[i] <= half {
            let f = (half - profile[i]) / (profile[i + 1] - profile[i]);
            left = Some(T::from_usize_lossy(i) + f);
            break;
        }
    }
    let mut right = None;
    for i in peak + 1..profile.len() {
        if profile[i] <= half {
            let f = (profile[i - 1] - half) / (profile[i - 1] - profile[i]);
            right = Some(T::from_usize_lossy(i - 1) + f);
            break;
        }
    }
    Some((right? - left?) * spacing)
}

/// Indices of strict interior local maxima of a 1-D profile exceeding `floor`.
pub fn profile_maxima<T: Real>(profile: &[T], floor: T) -> Vec<usize> {
    (1..profile.len().saturating_sub(1))
        .filter(|&i| profile[i] > floor && profile[i] > profile[i - 1] && profile[i] >= profile[i + 1])
        .collect()
}

/// Ratio of the deepest point between the two largest maxima to the smaller of them.
/// `None` when the profile has fewer than two maxima above `floor`.
pub fn valley_ratio<T: Real>(profile: &[T], floor: T) -> Option<T> {
    let mut peaks = profile_maxima(profile, floor);
    if peaks.len() < 2 {
        return None;
    }
    peaks.sort_by(|a, b| profile[*b].partial_cmp(&profile[*a]).unwrap());
    let (a, b) = (peaks[0].min(peaks[1]), peaks[0].max(peaks[1]));
    let valley = profile[a..=b].iter().fold(T::infinity(), |m, v| m.min(*v));
    Some(valley / profile[a].min(profile[b]))
}

/// Values along x at fixed `(j, k)`.
pub fn profile_x<T: Real, V: Copy>(volume: &ReconVolume<T, V>, j: usize, k: usize) -> Vec<V> {
    (0..volume.grid.dims.0).map(|i| *volume.get(i, j, k).expect("profile inside volume")).collect()
}

/// Values along y at fixed `(i, k)`.
pub fn profile_y<T: Real, V: Copy>(volume: &ReconVolume<T, V>, i: usize, k: usize) -> Vec<V> {
    (0..volume.grid.dims.1).map(|j| *volume.get(i, j, k).expect("profile inside volume")).collect()
}

/// Chebyshev distance between voxel indices.
pub fn voxel_distance(a: (usize, usize, usize), b: (usize, usize, usize)) -> usize {
    a.0.abs_diff(b.0).max(a.1.abs_diff(b.1)).max(a.2.abs_diff(b.2))
}

/// Valid voxels not smaller than any valid 26-neighbour and above `floor`, largest first.
pub fn local_maxima<T: Real>(volume: &ReconVolume<T, T>, floor: T) -> Vec<((usize, usize, usize), T)> {
    let (nx, ny, nz) = volume.grid.dims;
    let mut out = Vec::new();
    for l in 0..volume.grid.len() {
        let v = volume.values[l];
        if !volume.valid[l] || !(v > floor) {
            continue;
        }
        let (i, j, k) = volume.grid.coords(l);
        let mut is_max = true;
        'scan: for dk in -1i64..=1 {
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (a, b, c) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                    if (di, dj, dk) == (0, 0, 0) || a < 0 || b < 0 || c < 0 {
                        continue;
                    }
                    let (a, b, c) = (a as usize, b as usize, c as usize);
                    if a >= nx || b >= ny || c >= nz {
                        continue;
                    }
                    let m = (c * ny + b) * nx + a;
                    if volume.valid[m] && volume.values[m] > v {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
        }
        if is_max {
            out.push(((i, j, k), v));
        }
    }
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    out
}
