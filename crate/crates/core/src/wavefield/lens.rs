use num_complex::Complex;
use rayon::prelude::*;

use super::CameraField;
use crate::error::{NlosError, Result};
use crate::geometry::{PhysicalConstants, ReconVolume, Vec3, VolumeGrid};
use crate::scalar::Real;

/// Time at which each voxel is imaged.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalTime<T> {
    Uniform(T),
    /// One time per voxel in linear order.
    PerVoxel(Vec<T>),
}

impl<T: Real> EvalTime<T> {
    #[inline]
    fn at(&self, linear: usize) -> T {
        match self {
            EvalTime::Uniform(t) => *t,
            EvalTime::PerVoxel(v) => v[linear],
        }
    }
}

/// Ideal lens focused on every voxel: `sum_c field(x_c, t_v + |x_v - x_c| / c)`.
///
/// The field at the aperture lags the voxel by the flight time, so sampling it that much
/// later aligns every camera point on the wave emitted from `x_v` at `t_v`. No `1/r`
/// compensation is applied. A voxel whose sample times leave the record is flagged
/// invalid and set to zero.
pub fn lens_image<T: Real>(
    field: &CameraField<T>,
    volume: &VolumeGrid<T>,
    eval_time: &EvalTime<T>,
    constants: &PhysicalConstants<T>,
) -> Result<ReconVolume<T, Complex<T>>> {
    if let EvalTime::PerVoxel(v) = eval_time {
        if v.len() != volume.len() {
            return Err(NlosError::Shape(format!("{} evaluation times for {} voxels", v.len(), volume.len())));
        }
    }
    let points = field.grid().points();
    let inv_c = T::one() / constants.c;
    let (values, valid): (Vec<Complex<T>>, Vec<bool>) = (0..volume.len())
        .into_par_iter()
        .map(|l| match lens_sum(field, points, volume.center_of(l), eval_time.at(l), inv_c) {
            Some(z) => (z, true),
            None => (Complex::new(T::zero(), T::zero()), false),
        })
        .unzip();
    ReconVolume::from_values(*volume, values, valid)
}

/// Lens sum at arbitrary points: `result[i] = sum_c field(x_c, times[i] + |x_i - x_c| / c)`,
/// `None` where a sample leaves the record.
pub fn lens_at_points<T: Real>(
    field: &CameraField<T>,
    targets: &[Vec3<T>],
    times: &[T],
    constants: &PhysicalConstants<T>,
) -> Result<Vec<Option<Complex<T>>>> {
    if targets.len() != times.len() {
        return Err(NlosError::Shape(format!("{} points but {} times", targets.len(), times.len())));
    }
    let points = field.grid().points();
    let inv_c = T::one() / constants.c;
    Ok(targets.par_iter().zip(times).map(|(x, t)| lens_sum(field, points, *x, *t, inv_c)).collect())
}

#[inline]
fn lens_sum<T: Real>(field: &CameraField<T>, points: &[Vec3<T>], x: Vec3<T>, t: T, inv_c: T) -> Option<Complex<T>> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for (c, p) in points.iter().enumerate() {
        acc += field.sample(c, t + x.distance(*p) * inv_c)?;
    }
    Some(acc)
}
