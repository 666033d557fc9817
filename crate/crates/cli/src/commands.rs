//! Command implementations shared by the binary and the tests.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex;

use nlos_core::analysis::voxel_distance;
use nlos_core::cameras::{
    confocal_camera, fbp_log_reconstruct, photo_camera, transient_camera, CameraConfig, CameraKind,
};
use nlos_core::forward::{apply_spad_noise, simulate_response, ResponseTensor};
use nlos_core::geometry::{PhysicalConstants, ReconVolume, Vec3, VolumeGrid};
use nlos_core::phasor::{make_photo_projector, PulseParams};
use nlos_core::wavefield::{
    fresnel_propagate, fresnel_validity, propagate_through_scene, FieldData, FresnelSupport, PlaneField,
};

use crate::bench::{bench_scaling, BenchMethod, BenchOptions, BenchReport};
use crate::config::parse_scene_config;
use crate::dataset::{load_dataset, save_dataset, DatasetHeader};
use crate::error::{CliError, CliResult};
use crate::output::{atomic_write, decode_volume, encode_volume, write_pgm};
use crate::rectify::rectify_timebase;

fn constants() -> PhysicalConstants<f64> {
    PhysicalConstants::default()
}

fn load(path: &Path) -> CliResult<(DatasetHeader, ResponseTensor<f64>)> {
    Ok(load_dataset(path)?)
}

/// Outcome of [`cmd_simulate`].
#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub dropped_paths: usize,
    pub nonzero_bins: usize,
    pub total: f64,
}

/// Simulates the scene described by the config at `scene` and writes the dataset to `out`.
pub fn cmd_simulate(scene: &Path, out: &Path) -> CliResult<SimulateSummary> {
    let cfg = parse_scene_config(&std::fs::read_to_string(scene)?)?;
    let sim = simulate_response(&cfg.scene, &cfg.p_grid(), &cfg.c_grid(), &cfg.timebase, &constants())?;
    let mut h = sim.response;
    if let Some(noise) = &cfg.noise {
        h = apply_spad_noise(&h, noise)?;
    }
    let provenance = if cfg.provenance.is_empty() { format!("simulated from {}", scene.display()) } else { cfg.provenance.clone() };
    let header = DatasetHeader::describe(&h, &provenance)?.with_noise(cfg.noise);
    save_dataset(&h, &header, out)?;
    Ok(SimulateSummary {
        dropped_paths: sim.dropped_paths,
        nonzero_bins: h.values().iter().filter(|v| **v > 0.0).count(),
        total: h.total(),
    })
}

/// Volume-producing camera selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CameraChoice {
    Photo,
    Confocal,
    Fbp,
}

impl FromStr for CameraChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "photo" => Ok(Self::Photo),
            "confocal" => Ok(Self::Confocal),
            "fbp" => Ok(Self::Fbp),
            other => Err(format!("unknown camera `{other}` (photo | confocal | fbp)")),
        }
    }
}

impl fmt::Display for CameraChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Photo => "photo",
            Self::Confocal => "confocal",
            Self::Fbp => "fbp",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructArgs {
    pub data: PathBuf,
    pub camera: CameraChoice,
    pub volume: VolumeGrid<f64>,
    pub out: PathBuf,
    pub wavelength: f64,
    pub log_sigma: f64,
}

/// Reconstructs a volume and writes `volume.nlv` plus one `slice_KKK.pgm` per depth.
pub fn cmd_reconstruct(args: &ReconstructArgs) -> CliResult<ReconVolume<f64, f64>> {
    let (_, h) = load(&args.data)?;
    let c = constants();
    let vol = match args.camera {
        CameraChoice::Photo => photo_camera(&h, args.wavelength, &args.volume, &c)?,
        CameraChoice::Confocal => {
            let pulse = PulseParams::default_for(args.wavelength, 0.0, &c)?;
            let cfg = CameraConfig::new(CameraKind::Confocal, args.wavelength).with_pulse(pulse);
            confocal_camera(&h, &cfg, &args.volume, &c)?
        }
        CameraChoice::Fbp => fbp_log_reconstruct(&h, &args.volume, args.log_sigma, &c)?,
    };
    std::fs::create_dir_all(&args.out)?;
    atomic_write(&args.out.join("volume.nlv"), &encode_volume(&vol, &args.camera.to_string()))?;
    let (nx, ny, nz) = vol.grid.dims;
    for k in 0..nz {
        let slice = &vol.values[k * nx * ny..(k + 1) * nx * ny];
        let z = vol.grid.voxel_center(0, 0, k)?.z;
        write_pgm(&args.out.join(format!("slice_{k:03}.pgm")), slice, nx, ny, &[("z", format!("{z:e}"))])?;
    }
    Ok(vol)
}

/// Refocusing path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefocusMethod {
    /// Exact lens integral.
    Rsd,
    /// Plane-to-plane Fresnel propagation of the camera-aperture field.
    Fresnel,
}

impl FromStr for RefocusMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rsd" => Ok(Self::Rsd),
            "fresnel" => Ok(Self::Fresnel),
            other => Err(format!("unknown refocus method `{other}` (rsd | fresnel)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefocusArgs {
    pub data: PathBuf,
    pub depths: Vec<f64>,
    pub method: RefocusMethod,
    pub force: bool,
    pub out: PathBuf,
    pub wavelength: f64,
    /// Half width of the RSD image plane, meters. The Fresnel path images on the camera lattice.
    pub half_width: f64,
    /// Samples per side of the RSD image plane.
    pub samples: usize,
}

/// One refocused plane; `values[j * nx + i]` sits at `(xs[i], ys[j], depth)`.
#[derive(Debug, Clone)]
pub struct FocalPlane {
    pub depth: f64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl FocalPlane {
    /// Value at the sample nearest to `(x, y)`.
    pub fn value_near(&self, x: f64, y: f64) -> f64 {
        let nearest = |axis: &[f64], v: f64| {
            axis.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - v).abs().partial_cmp(&(b.1 - v).abs()).unwrap())
                .map_or(0, |(i, _)| i)
        };
        self.values[nearest(&self.ys, y) * self.xs.len() + nearest(&self.xs, x)]
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(*v))
    }
}

fn camera_plane(h: &ResponseTensor<f64>) -> CliResult<(PlaneField<f64>, f64)> {
    let grid = h.c_grid();
    let l = grid
        .lattice()
        .ok_or_else(|| CliError::Usage("the Fresnel path needs a lattice camera grid".into()))?;
    let aligned = l.axis_u.y == 0.0 && l.axis_u.z == 0.0 && l.axis_v.x == 0.0 && l.axis_v.z == 0.0;
    if !aligned || l.axis_u.x <= 0.0 || l.axis_u.x != l.axis_v.y || l.corner.z != 0.0 {
        return Err(CliError::Usage("the Fresnel path needs a square, axis-aligned camera lattice at z = 0".into()));
    }
    let radius = 0.5 * l.axis_u.x * (l.n_u.max(l.n_v) - 1) as f64;
    let centroid = grid.centroid();
    let plane = PlaneField::new(
        vec![Complex::new(0.0, 0.0); l.n_u * l.n_v],
        (l.n_u, l.n_v),
        l.axis_u.x,
        (centroid.x, centroid.y),
        0.0,
        1.0,
    )?;
    Ok((plane, radius))
}

/// Focal stack of the photo camera at the given depths, one `focus_III.pgm` per depth.
pub fn cmd_refocus(args: &RefocusArgs) -> CliResult<Vec<FocalPlane>> {
    if args.depths.is_empty() || args.depths.iter().any(|d| !(*d > 0.0)) {
        return Err(CliError::Usage("refocus depths must be positive".into()));
    }
    let (_, h) = load(&args.data)?;
    let c = constants();
    let planes = match args.method {
        RefocusMethod::Rsd => {
            let n = args.samples.max(1);
            let pitch = if n > 1 { 2.0 * args.half_width / (n - 1) as f64 } else { 1e-3 };
            let axis: Vec<f64> = (0..n).map(|i| -args.half_width + i as f64 * pitch).collect();
            args.depths
                .iter()
                .map(|&depth| {
                    let origin = Vec3::new(axis[0] - pitch / 2.0, axis[0] - pitch / 2.0, depth - pitch / 2.0);
                    let grid = VolumeGrid::new(origin, pitch, (n, n, 1))?;
                    let img = photo_camera(&h, args.wavelength, &grid, &c)?;
                    Ok(FocalPlane { depth, xs: axis.clone(), ys: axis.clone(), values: img.values })
                })
                .collect::<CliResult<Vec<_>>>()?
        }
        RefocusMethod::Fresnel => {
            let (mut plane, radius) = camera_plane(&h)?;
            if !args.force {
                if let Some(v) = args
                    .depths
                    .iter()
                    .map(|&d| fresnel_validity(radius, d, args.wavelength))
                    .find(|v| *v >= 1.0)
                {
                    return Err(CliError::FresnelRefused { validity: v });
                }
            }
            let projector = make_photo_projector(args.wavelength, h.p_grid(), &c)?;
            match propagate_through_scene(&h, &projector)?.data() {
                FieldData::Tone { amplitudes, .. } => plane.values = amplitudes.clone(),
                FieldData::Sampled { .. } => unreachable!("monochromatic projectors give tone fields"),
            }
            plane.wavelength = args.wavelength;
            let xs: Vec<f64> = (0..plane.nx).map(|i| plane.position(i, 0).x).collect();
            let ys: Vec<f64> = (0..plane.ny).map(|j| plane.position(0, j).y).collect();
            args.depths
                .iter()
                .map(|&depth| {
                    let f = fresnel_propagate(&plane, depth, FresnelSupport::Full)?;
                    Ok(FocalPlane { depth, xs: xs.clone(), ys: ys.clone(), values: f.values.iter().map(|z| z.norm()).collect() })
                })
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    std::fs::create_dir_all(&args.out)?;
    let method = match args.method {
        RefocusMethod::Rsd => "rsd",
        RefocusMethod::Fresnel => "fresnel",
    };
    for (i, p) in planes.iter().enumerate() {
        write_pgm(
            &args.out.join(format!("focus_{i:03}.pgm")),
            &p.values,
            p.xs.len(),
            p.ys.len(),
            &[("depth", format!("{:e}", p.depth)), ("method", method.to_string())],
        )?;
    }
    Ok(planes)
}

#[derive(Debug, Clone)]
pub struct TransientArgs {
    pub data: PathBuf,
    pub frames: Vec<f64>,
    pub volume: VolumeGrid<f64>,
    pub out: PathBuf,
    pub wavelength: f64,
    pub source: Option<usize>,
}

/// Writes `frame_NNNN.pgm` (depth maximum projection) per frame time, in time order, and
/// an index `frames.txt` of `index time file` lines.
pub fn cmd_transient_video(args: &TransientArgs) -> CliResult<Vec<(f64, PathBuf)>> {
    let (_, h) = load(&args.data)?;
    let c = constants();
    let pulse = PulseParams::default_for(args.wavelength, 0.0, &c)?;
    let mut cfg = CameraConfig::new(CameraKind::Transient, args.wavelength).with_pulse(pulse).with_frames(args.frames.clone());
    cfg.source_index = args.source;
    let stack = transient_camera(&h, &cfg, &args.volume, &c)?;
    std::fs::create_dir_all(&args.out)?;
    let (nx, ny, nz) = args.volume.dims;
    let mut written = Vec::new();
    let mut index = String::new();
    for (i, frame) in stack.frames.iter().enumerate() {
        let image: Vec<f64> = (0..nx * ny)
            .map(|col| (0..nz).map(|k| frame.values[k * nx * ny + col]).fold(0.0, f64::max))
            .collect();
        let name = format!("frame_{i:04}.pgm");
        let path = args.out.join(&name);
        write_pgm(&path, &image, nx, ny, &[("time", format!("{:e}", frame.time))])?;
        index += &format!("{i} {:e} {name}\n", frame.time);
        written.push((frame.time, path));
    }
    atomic_write(&args.out.join("frames.txt"), index.as_bytes())?;
    Ok(written)
}

pub fn cmd_bench(method: BenchMethod, sizes: &[usize]) -> CliResult<BenchReport> {
    bench_scaling(method, sizes, &BenchOptions::default())
}

/// Rectifies the dataset at `data` and writes it to `out`; returns the dropped fraction.
pub fn cmd_rectify(data: &Path, out: &Path, t0: f64, t1: f64, t4: f64) -> CliResult<f64> {
    let (header, h) = load(data)?;
    let r = rectify_timebase(&h, t0, t1, t4)?;
    if r.dropped_fraction > 0.0 {
        log::warn!("rectification shifted {:.3e} of the signal out of the record", r.dropped_fraction);
    }
    let provenance = format!("{}; rectified by t0 = {t0:e}, t1 = {t1:e}, t4 = {t4:e}", header.provenance);
    let out_header = DatasetHeader::describe(&r.response, &provenance)?.with_noise(header.noise);
    save_dataset(&r.response, &out_header, out)?;
    Ok(r.dropped_fraction)
}

/// Differences between two volume files on the same grid.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub relative_rms: f64,
    pub argmax_a: Option<(usize, usize, usize)>,
    pub argmax_b: Option<(usize, usize, usize)>,
    pub argmax_distance: Option<usize>,
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "relative rms = {:.6e}", self.relative_rms)?;
        writeln!(f, "argmax a = {:?}", self.argmax_a)?;
        writeln!(f, "argmax b = {:?}", self.argmax_b)?;
        write!(f, "argmax distance (voxels) = {:?}", self.argmax_distance)
    }
}

pub fn cmd_compare(a: &Path, b: &Path) -> CliResult<CompareReport> {
    let va = decode_volume(&std::fs::read(a)?)?;
    let vb = decode_volume(&std::fs::read(b)?)?;
    if va.grid != vb.grid {
        return Err(CliError::Usage("volumes are on different grids".into()));
    }
    let num: f64 = va.values.iter().zip(&vb.values).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = vb.values.iter().map(|y| y * y).sum();
    let (argmax_a, argmax_b) = (va.argmax(), vb.argmax());
    Ok(CompareReport {
        relative_rms: if den > 0.0 { (num / den).sqrt() } else { num.sqrt() },
        argmax_a,
        argmax_b,
        argmax_distance: argmax_a.zip(argmax_b).map(|(x, y)| voxel_distance(x, y)),
    })
}
