#![allow(dead_code)]

use nlos_core::cameras::{CameraConfig, CameraKind};
use nlos_core::forward::{simulate_response, ResponseTensor, Scene, ScenePoint};
use nlos_core::geometry::{make_grid, ApertureGrid, GridLabel, PhysicalConstants, TimeBase, Vec3, VolumeGrid};
use nlos_core::phasor::PulseParams;

pub const LAMBDA: f64 = 0.04;

pub fn consts() -> PhysicalConstants<f64> {
    PhysicalConstants::default()
}

/// `n x n` lattice spanning `[-side/2, side/2]^2` on the wall.
pub fn wall_grid(n: usize, side: f64, label: GridLabel) -> ApertureGrid<f64> {
    let step = side / (n - 1) as f64;
    make_grid(
        Vec3::new(-side / 2.0, -side / 2.0, 0.0),
        Vec3::new(step, 0.0, 0.0),
        Vec3::new(0.0, step, 0.0),
        (n, n),
        label,
    )
    .unwrap()
}

/// Bin width of an eighth of the default wavelength's period.
pub fn default_timebase(n_bins: usize) -> TimeBase<f64> {
    TimeBase::new(LAMBDA / (8.0 * consts().c), n_bins, 0.0).unwrap()
}

/// `n^3` volume whose voxel `(n/2, n/2, n/2)` is centred on `center`.
pub fn volume_around(center: Vec3<f64>, pitch: f64, n: usize) -> VolumeGrid<f64> {
    let half = n as f64 / 2.0 + 0.5;
    VolumeGrid::new(center - Vec3::new(half, half, half) * pitch, pitch, (n, n, n)).unwrap()
}

pub fn simulate(points: Vec<ScenePoint<f64>>, max_bounces: usize, n: usize, side: f64, tb: &TimeBase<f64>) -> ResponseTensor<f64> {
    let scene = Scene::new(points, max_bounces, vec![]).unwrap();
    simulate_response(&scene, &wall_grid(n, side, GridLabel::Projector), &wall_grid(n, side, GridLabel::Camera), tb, &consts())
        .unwrap()
        .response
}

/// Scatterer facing the wall at `x0`, seen through 9 x 9 apertures spanning 1 m.
pub fn single_scatterer(x0: Vec3<f64>, n_bins: usize) -> ResponseTensor<f64> {
    simulate(vec![ScenePoint::facing_wall(x0, 1.0).unwrap()], 1, 9, 1.0, &default_timebase(n_bins))
}

pub fn confocal_config(lambda: f64) -> CameraConfig<f64> {
    let pulse = PulseParams::default_for(lambda, 0.0, &consts()).unwrap();
    CameraConfig::new(CameraKind::Confocal, lambda).with_pulse(pulse)
}

pub fn rel_rms(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
