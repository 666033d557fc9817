mod common;

use std::sync::OnceLock;

use common::*;
use nlos_core::analysis::{fwhm, profile_x, voxel_distance};
use nlos_core::cameras::*;
use nlos_core::forward::{ResponseTensor, ScenePoint};
use nlos_core::geometry::{ReconVolume, TimeBase, Vec3, VolumeGrid};
use nlos_core::phasor::PulseParams;
use nlos_core::NlosError;

const X0: Vec3<f64> = Vec3 { x: 0.0, y: 0.0, z: 1.0 };
const CENTER: (usize, usize, usize) = (8, 8, 8);

fn scatterer_h() -> &'static ResponseTensor<f64> {
    static H: OnceLock<ResponseTensor<f64>> = OnceLock::new();
    H.get_or_init(|| single_scatterer(X0, 640))
}

fn fine_volume() -> VolumeGrid<f64> {
    volume_around(X0, 0.005, 16)
}

fn photo_volume() -> &'static (VolumeGrid<f64>, Vec<f64>) {
    static V: OnceLock<(VolumeGrid<f64>, Vec<f64>)> = OnceLock::new();
    V.get_or_init(|| {
        let vol = fine_volume();
        let img = photo_camera(scatterer_h(), LAMBDA, &vol, &consts()).unwrap();
        (vol, img.values)
    })
}

#[test]
fn photo_camera_finds_the_scatterer() {
    let (vol, values) = photo_volume();
    let img = ReconVolume::from_values(*vol, values.clone(), vec![true; values.len()]).unwrap();
    assert_eq!(img.argmax(), Some(CENTER));
}

#[test]
fn photo_magnitude_does_not_depend_on_evaluation_time() {
    let (vol, base) = photo_volume();
    let period = LAMBDA / consts().c;
    let later = photo_camera_at(scatterer_h(), LAMBDA, vol, 0.37 * period, &consts()).unwrap();
    for (a, b) in base.iter().zip(&later.values) {
        assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
    }
}

#[test]
fn photo_camera_without_source_knowledge() {
    let collapsed = scatterer_h().collapse_projectors().unwrap();
    let img = photo_camera(&collapsed, LAMBDA, &fine_volume(), &consts()).unwrap();
    assert!(voxel_distance(img.argmax().unwrap(), CENTER) <= 1);
}

#[test]
fn photo_camera_ignores_global_delay() {
    let (vol, base) = photo_volume();
    let shifted = photo_camera(&scatterer_h().delayed_bins(37), LAMBDA, vol, &consts()).unwrap();
    for (a, b) in base.iter().zip(&shifted.values) {
        assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
    }
}

#[test]
fn unresolvable_wavelength_is_rejected() {
    let h = scatterer_h().with_timebase(TimeBase::new(LAMBDA / (1.5 * consts().c), 640, 0.0).unwrap()).unwrap();
    let err = photo_camera(&h, LAMBDA, &fine_volume(), &consts()).unwrap_err();
    assert!(matches!(err, NlosError::Aliasing { .. }), "{err}");
    let err = confocal_camera(&h, &confocal_config(LAMBDA), &fine_volume(), &consts()).unwrap_err();
    assert!(matches!(err, NlosError::Aliasing { .. }), "{err}");
}

fn confocal_volume() -> &'static ReconVolume<f64, f64> {
    static V: OnceLock<ReconVolume<f64, f64>> = OnceLock::new();
    V.get_or_init(|| confocal_camera(scatterer_h(), &confocal_config(LAMBDA), &fine_volume(), &consts()).unwrap())
}

#[test]
fn confocal_camera_localises_and_resolves() {
    let v = confocal_volume();
    assert_eq!(v.invalid_count(), 0);
    assert_eq!(v.argmax(), Some(CENTER));
    let intensity: Vec<f64> = profile_x(v, CENTER.1, CENTER.2).iter().map(|m| m * m).collect();
    let width = fwhm(&intensity, 0.005).unwrap();
    let limit = resolution_limit(1.0, LAMBDA, 1.0);
    assert!((0.5 * limit..=1.5 * limit).contains(&width), "fwhm {width} vs {limit}");
}

#[test]
fn confocal_ignores_uniform_background() {
    let h = scatterer_h();
    let noisy = h.with_background(10.0 * h.max_value()).unwrap();
    let v = confocal_camera(&noisy, &confocal_config(LAMBDA), &fine_volume(), &consts()).unwrap();
    assert_eq!(v.argmax(), Some(CENTER));
}

#[test]
fn confocal_matches_per_voxel_definition() {
    // the per-voxel path interpolates the raw carrier, so sample it finely
    let tb = TimeBase::new(LAMBDA / (32.0 * consts().c), 2560, 0.0).unwrap();
    let h = simulate(vec![ScenePoint::facing_wall(X0, 1.0).unwrap()], 1, 5, 1.0, &tb);
    let vol = volume_around(X0, 0.01, 3);
    let cfg = confocal_config(LAMBDA);
    let fast = confocal_camera(&h, &cfg, &vol, &consts()).unwrap();
    let slow = confocal_camera_literal(&h, &cfg, &vol, &consts()).unwrap();
    assert_eq!(fast.valid, slow.valid);
    let err = rel_rms(&fast.values, &slow.values);
    assert!(err < 0.02, "relative rms {err}");
}

#[test]
fn long_pulse_confocal_agrees_with_photo() {
    let c = consts();
    let pulse = PulseParams::new(30e-9, 0.0, LAMBDA).unwrap();
    let cfg = CameraConfig::new(CameraKind::Confocal, LAMBDA).with_pulse(pulse);
    let v = confocal_camera(scatterer_h(), &cfg, &fine_volume(), &c).unwrap();
    let (vol, photo) = photo_volume();
    let photo = ReconVolume::from_values(*vol, photo.clone(), vec![true; photo.len()]).unwrap();
    assert_eq!(v.argmax(), photo.argmax());
}

#[test]
fn filtered_backprojection_localises() {
    let v = fbp_log_reconstruct(scatterer_h(), &fine_volume(), 1.0, &consts()).unwrap();
    let peak = v.argmax().unwrap();
    assert!(voxel_distance(peak, CENTER) <= 1);
    assert!(voxel_distance(peak, confocal_volume().argmax().unwrap()) <= 1);
}

#[test]
fn filtered_backprojection_of_zero_and_constant_inputs() {
    let h = scatterer_h();
    let vol = volume_around(X0, 0.01, 12);
    let zero = h.scaled(0.0).unwrap();
    let v = fbp_log_reconstruct(&zero, &vol, 1.0, &consts()).unwrap();
    assert!(v.values.iter().all(|x| *x == 0.0));

    let flat = zero.with_background(3.0).unwrap();
    let bp = backproject(&flat, &vol, &consts()).unwrap();
    let scale = bp.max_value();
    let signed = fbp_log_signed(&flat, &vol, 1.0, &consts()).unwrap();
    let (nx, ny, nz) = vol.dims;
    for k in 3..nz - 3 {
        for j in 3..ny - 3 {
            for i in 3..nx - 3 {
                let x = *signed.get(i, j, k).unwrap();
                assert!(x.abs() < 1e-6 * scale, "{x} at ({i}, {j}, {k})");
            }
        }
    }
}

fn transient_config(lambda: f64, frames: Vec<f64>) -> CameraConfig<f64> {
    let pulse = PulseParams::default_for(lambda, 0.0, &consts()).unwrap();
    CameraConfig::new(CameraKind::Transient, lambda).with_pulse(pulse).with_frames(frames)
}

/// Frames every two bins over `center +- span`.
fn frames_around(center: f64, span: f64) -> Vec<f64> {
    let step = 2.0 * default_timebase(1).bin_width;
    let n = (2.0 * span / step).round() as usize;
    (0..=n).map(|i| center - span + i as f64 * step).collect()
}

#[test]
fn transient_frame_energy_peaks_at_arrival() {
    let c = consts();
    let sigma = PulseParams::default_for(LAMBDA, 0.0, &c).unwrap().sigma;
    let arrival = 1.0 / c.c;
    let cfg = transient_config(LAMBDA, frames_around(arrival, 4.0 * sigma));
    let vol = volume_around(X0, 0.01, 8);
    let stack = transient_camera(scatterer_h(), &cfg, &vol, &c).unwrap();
    assert!(stack.frames.iter().all(|f| f.is_valid()));
    assert!(stack.frames.windows(2).all(|w| w[0].time < w[1].time));
    let peak = stack.peak_time().unwrap();
    assert!((peak - arrival).abs() <= sigma, "peak {peak} vs {arrival}");

    let early = transient_camera(scatterer_h(), &transient_config(LAMBDA, vec![arrival - 5.0 * sigma]), &vol, &c).unwrap();
    let peak_energy = stack.frames.iter().map(|f| f.energy()).fold(0.0, f64::max);
    assert!(early.frames[0].is_valid());
    assert!(early.frames[0].energy() < 0.01 * peak_energy);
}

#[test]
fn transient_peaks_separate_by_flight_time() {
    let c = consts();
    let sigma = PulseParams::default_for(LAMBDA, 0.0, &c).unwrap().sigma;
    let peak_for = |depth: f64| {
        let at = Vec3::new(0.0, 0.0, depth);
        let h = single_scatterer(at, 1000);
        let cfg = transient_config(LAMBDA, frames_around(depth / c.c, 3.0 * sigma));
        transient_camera(&h, &cfg, &volume_around(at, 0.02, 6), &c).unwrap().peak_time().unwrap()
    };
    let gap = peak_for(2.0) - peak_for(1.0);
    assert!((gap - 3.336e-9).abs() <= sigma, "gap {gap}");
}

#[test]
fn corrected_transient_restricts_to_brightest_surface() {
    let c = consts();
    let vol = volume_around(X0, 0.01, 8);
    let truth = vol.voxel_of(X0).unwrap();
    let frames = frames_around(1.0 / c.c, 1e-9);
    let mut cfg = confocal_config(LAMBDA).with_frames(frames.clone());
    cfg.kind = CameraKind::TransientCorrected;
    let corrected = transient_camera_corrected(scatterer_h(), &cfg, &vol, &c).unwrap();
    let surface = corrected.surface.clone().unwrap();
    let (nx, ny, _) = vol.dims;
    assert_eq!(corrected.evaluated_voxels(), nx * ny);
    assert_eq!(surface[truth.1 * nx + truth.0], truth.2);

    let full = transient_camera(scatterer_h(), &transient_config(LAMBDA, frames), &vol, &c).unwrap();
    for (fc, ff) in corrected.frames.iter().zip(&full.frames) {
        for (col, &k) in surface.iter().enumerate() {
            let l = vol.linear_index(col % nx, col / nx, k).unwrap();
            assert_eq!(fc.values[col], ff.values[l]);
        }
    }
}

#[test]
fn frames_outside_the_record_are_flagged() {
    let c = consts();
    let vol = volume_around(X0, 0.01, 4);
    let stack = transient_camera(scatterer_h(), &transient_config(LAMBDA, vec![1e-6]), &vol, &c).unwrap();
    assert!(!stack.frames[0].is_valid());
}

#[test]
fn resolution_limit_values() {
    assert!((resolution_limit(1.0, 0.04, 1.0) - 0.0244f64).abs() < 1e-15);
    assert!((resolution_limit(2.0, 0.04, 1.0) - 0.0122f64).abs() < 1e-15);
}

#[test]
fn dispatch_refuses_transient_kinds() {
    let cfg = transient_config(LAMBDA, vec![0.0]);
    assert!(reconstruct(scatterer_h(), &cfg, &volume_around(X0, 0.01, 2), &consts()).is_err());
}
