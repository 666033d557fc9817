//! Virtual cameras built on the wave machinery, plus the filtered-backprojection baseline.

mod backprojection;
mod confocal;

use num_complex::Complex;

pub use backprojection::{backproject, fbp_log_reconstruct, fbp_log_signed, log_filter};
pub use confocal::{confocal_camera, confocal_camera_literal};

use crate::error::{NlosError, Result};
use crate::forward::ResponseTensor;
use crate::geometry::{PhysicalConstants, ReconVolume, TimeBase, VolumeGrid};
use crate::phasor::{make_photo_projector, make_transient_projector, PulseParams};
use crate::scalar::Real;
use crate::wavefield::{lens_at_points, lens_image, propagate_through_scene, CameraField, EvalTime};

/// Reconstruction front-end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CameraKind {
    Photo,
    Transient,
    TransientCorrected,
    Confocal,
    FbpLog,
}

/// Parameters shared by the camera front-ends.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraConfig<T> {
    pub kind: CameraKind,
    pub wavelength: T,
    /// Required by the transient and confocal cameras.
    pub pulse: Option<PulseParams<T>>,
    /// Frame times of the transient cameras, seconds.
    pub frame_times: Vec<T>,
    /// LoG standard deviation in voxels.
    pub log_sigma: T,
    /// Projector point lit by the transient cameras; defaults to the point nearest the
    /// projector centroid.
    pub source_index: Option<usize>,
}

impl<T: Real> CameraConfig<T> {
    pub fn new(kind: CameraKind, wavelength: T) -> Self {
        Self { kind, wavelength, pulse: None, frame_times: Vec::new(), log_sigma: T::one(), source_index: None }
    }

    pub fn with_pulse(mut self, pulse: PulseParams<T>) -> Self {
        self.pulse = Some(pulse);
        self
    }

    pub fn with_frames(mut self, frame_times: Vec<T>) -> Self {
        self.frame_times = frame_times;
        self
    }

    pub fn with_source(mut self, index: usize) -> Self {
        self.source_index = Some(index);
        self
    }

    pub fn with_log_sigma(mut self, sigma: T) -> Self {
        self.log_sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > T::zero()) || !self.wavelength.is_finite() {
            return Err(NlosError::Parameter(format!("wavelength must be > 0, got {}", self.wavelength)));
        }
        let pulsed = matches!(self.kind, CameraKind::Transient | CameraKind::TransientCorrected | CameraKind::Confocal);
        if pulsed && self.pulse.is_none() {
            return Err(NlosError::Parameter(format!("{:?} camera needs pulse parameters", self.kind)));
        }
        if matches!(self.kind, CameraKind::Transient | CameraKind::TransientCorrected) && self.frame_times.is_empty() {
            return Err(NlosError::Parameter("transient cameras need at least one frame time".into()));
        }
        if self.kind == CameraKind::FbpLog && !(self.log_sigma > T::zero()) {
            return Err(NlosError::Parameter(format!("LoG sigma must be > 0 voxels, got {}", self.log_sigma)));
        }
        Ok(())
    }

    fn pulse(&self) -> Result<&PulseParams<T>> {
        self.pulse.as_ref().ok_or_else(|| NlosError::Parameter("camera needs pulse parameters".into()))
    }
}

/// `0.61 * lambda * L / d`.
pub fn resolution_limit<T: Real>(aperture_diameter: T, wavelength: T, distance: T) -> T {
    T::lit(0.61) * wavelength * distance / aperture_diameter
}

/// Rejects wavelengths whose tone cannot be represented in the response's time sampling.
pub fn check_wavelength_resolvable<T: Real>(
    wavelength: T,
    timebase: &TimeBase<T>,
    constants: &PhysicalConstants<T>,
) -> Result<()> {
    let min = T::lit(2.0) * constants.c * timebase.bin_width;
    if wavelength < min {
        return Err(NlosError::Aliasing {
            wavelength: wavelength.as_f64(),
            bin_width: timebase.bin_width.as_f64(),
            min_wavelength: min.as_f64(),
        });
    }
    Ok(())
}

fn magnitudes<T: Real>(v: &ReconVolume<T, Complex<T>>) -> ReconVolume<T, T> {
    v.map(|z| z.norm())
}

/// Photo camera imaged at time `t`; the magnitude does not depend on `t`.
pub fn photo_camera_at<T: Real>(
    h: &ResponseTensor<T>,
    wavelength: T,
    volume: &VolumeGrid<T>,
    t: T,
    constants: &PhysicalConstants<T>,
) -> Result<ReconVolume<T, T>> {
    check_wavelength_resolvable(wavelength, h.timebase(), constants)?;
    let projector = make_photo_projector(wavelength, h.p_grid(), constants)?;
    let field = propagate_through_scene(h, &projector)?;
    Ok(magnitudes(&lens_image(&field, volume, &EvalTime::Uniform(t), constants)?))
}

/// Monochromatic illumination of the whole projector aperture, imaged by a lens
/// focused on every voxel.
pub fn photo_camera<T: Real>(
    h: &ResponseTensor<T>,
    wavelength: T,
    volume: &VolumeGrid<T>,
    constants: &PhysicalConstants<T>,
) -> Result<ReconVolume<T, T>> {
    photo_camera_at(h, wavelength, volume, T::zero(), constants)
}

/// One reconstructed frame. `values` follow the stack's layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientFrame<T> {
    pub time: T,
    pub values: Vec<T>,
    pub valid: Vec<bool>,
}

impl<T: Real> TransientFrame<T> {
    /// Sum of squared valid values.
    pub fn energy(&self) -> T {
        self.values.iter().zip(&self.valid).filter(|(_, ok)| **ok).map(|(v, _)| *v * *v).sum()
    }

    /// False when any voxel needed samples outside the record.
    pub fn is_valid(&self) -> bool {
        self.valid.iter().all(|v| *v)
    }
}

/// Time-ordered frames over a volume, or over one depth per `(x, y)` column.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientStack<T> {
    pub grid: VolumeGrid<T>,
    /// For corrected stacks, the selected depth index of each `(i, j)` column (`j * nx + i`);
    /// frame values then hold one entry per column.
    pub surface: Option<Vec<usize>>,
    pub frames: Vec<TransientFrame<T>>,
}

impl<T: Real> TransientStack<T> {
    pub fn new(grid: VolumeGrid<T>, surface: Option<Vec<usize>>, frames: Vec<TransientFrame<T>>) -> Result<Self> {
        if frames.windows(2).any(|w| !(w[0].time < w[1].time)) {
            return Err(NlosError::Parameter("frame times must be strictly increasing".into()));
        }
        Ok(Self { grid, surface, frames })
    }

    /// Number of voxels evaluated per frame.
    pub fn evaluated_voxels(&self) -> usize {
        self.frames.first().map_or(0, |f| f.values.len())
    }

    /// Time of the frame with the largest energy.
    pub fn peak_time(&self) -> Option<T> {
        self.frames
            .iter()
            .max_by(|a, b| a.energy().partial_cmp(&b.energy()).unwrap())
            .map(|f| f.time)
    }
}

fn sorted_frames<T: Real>(frame_times: &[T]) -> Result<Vec<T>> {
    let mut times = frame_times.to_vec();
    if times.iter().any(|t| !t.is_finite()) {
        return Err(NlosError::Parameter("frame times must be finite".into()));
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if times.windows(2).any(|w| w[0] == w[1]) {
        return Err(NlosError::Parameter("frame times must be distinct".into()));
    }
    Ok(times)
}

/// Sampling window holding a pulse's `+-6 sigma` support, on the response's bin grid.
pub(crate) fn pulse_timebase<T: Real>(
    pulse: &PulseParams<T>,
    bin_width: T,
    earliest_shift: T,
    latest_shift: T,
) -> Result<TimeBase<T>> {
    let six = T::lit(6.0) * pulse.sigma;
    let start_bin = ((pulse.t0 - latest_shift - six) / bin_width).floor();
    let end_bin = ((pulse.t0 - earliest_shift + six) / bin_width).ceil();
    let n = (end_bin - start_bin).to_usize().unwrap_or(0) + 1;
    TimeBase::new(bin_width, n, start_bin * bin_width)
}

fn default_source<T: Real>(h: &ResponseTensor<T>) -> usize {
    let centroid = h.p_grid().centroid();
    h.p_grid()
        .points()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.distance(centroid).partial_cmp(&b.1.distance(centroid)).unwrap())
        .map_or(0, |(i, _)| i)
}

fn transient_field<T: Real>(
    h: &ResponseTensor<T>,
    config: &CameraConfig<T>,
    constants: &PhysicalConstants<T>,
) -> Result<CameraField<T>> {
    config.validate()?;
    check_wavelength_resolvable(config.wavelength, h.timebase(), constants)?;
    let pulse = config.pulse()?;
    let source = config.source_index.unwrap_or_else(|| default_source(h));
    let tb = pulse_timebase(pulse, h.timebase().bin_width, T::zero(), T::zero())?;
    let projector = make_transient_projector(pulse, source, h.p_grid(), &tb, constants)?;
    propagate_through_scene(h, &projector)
}

/// Pulse from one projector point; frame `t_f` images every voxel at `t_f`.
///
/// A scatterer at distance `r` from the lit point appears in the frame `t_f = t0 + r / c`.
pub fn transient_camera<T: Real>(
    h: &ResponseTensor<T>,
    config: &CameraConfig<T>,
    volume: &VolumeGrid<T>,
    constants: &PhysicalConstants<T>,
) -> Result<TransientStack<T>> {
    let field = transient_field(h, config, constants)?;
    let frames = sorted_frames(&config.frame_times)?
        .into_iter()
        .map(|t| {
            let img = lens_image(&field, volume, &EvalTime::Uniform(t), constants)?;
            Ok(TransientFrame { time: t, values: img.values.iter().map(|z| z.norm()).collect(), valid: img.valid })
        })
        .collect::<Result<Vec<_>>>()?;
    TransientStack::new(*volume, None, frames)
}

/// Transient camera restricted to the brightest depth of every `(x, y)` column of the
/// confocal volume; evaluates `n_x * n_y` voxels per frame instead of the full volume.
pub fn transient_camera_corrected<T: Real>(
    h: &ResponseTensor<T>,
    config: &CameraConfig<T>,
    volume: &VolumeGrid<T>,
    constants: &PhysicalConstants<T>,
) -> Result<TransientStack<T>> {
    config.validate()?;
    let confocal = confocal_camera(h, config, volume, constants)?;
    let (nx, ny, nz) = volume.dims;
    let mut surface = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let mut best = (0, T::neg_infinity());
            for k in 0..nz {
                let l = volume.linear_index(i, j, k)?;
                if confocal.valid[l] && confocal.values[l] > best.1 {
                    best = (k, confocal.values[l]);
                }
            }
            surface.push(best.0);
        }
    }
    let targets: Vec<_> = surface
        .iter()
        .enumerate()
        .map(|(col, &k)| volume.voxel_center(col % nx, col / nx, k))
        .collect::<Result<_>>()?;
    let field = transient_field(h, config, constants)?;
    let frames = sorted_frames(&config.frame_times)?
        .into_iter()
        .map(|t| {
            let vals = lens_at_points(&field, &targets, &vec![t; targets.len()], constants)?;
            Ok(TransientFrame {
                time: t,
                values: vals.iter().map(|z| z.map_or(T::zero(), |z| z.norm())).collect(),
                valid: vals.iter().map(|z| z.is_some()).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TransientStack::new(*volume, Some(surface), frames)
}

/// Dispatches the volume-producing cameras (photo, confocal, LoG-filtered backprojection).
pub fn reconstruct<T: Real>(
    h: &ResponseTensor<T>,
    config: &CameraConfig<T>,
    volume: &VolumeGrid<T>,
    constants: &PhysicalConstants<T>,
) -> Result<ReconVolume<T, T>> {
    config.validate()?;
    match config.kind {
        CameraKind::Photo => photo_camera(h, config.wavelength, volume, constants),
        CameraKind::Confocal => confocal_camera(h, config, volume, constants),
        CameraKind::FbpLog => fbp_log_reconstruct(h, volume, config.log_sigma, constants),
        CameraKind::Transient | CameraKind::TransientCorrected => Err(NlosError::Parameter(
            "transient cameras produce frame stacks; use transient_camera".into(),
        )),
    }
}
