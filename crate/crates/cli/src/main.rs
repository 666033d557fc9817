use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use nlos_cli::bench::BenchMethod;
use nlos_cli::commands::*;
use nlos_cli::config::{parse_list, parse_volume_spec};
use nlos_core::phasor::DEFAULT_WAVELENGTH;

#[derive(Parser)]
#[command(name = "nlos", version, about = "Phasor-field non-line-of-sight imaging toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scene config into a dataset.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct a volume; writes volume.nlv and per-depth slice images.
    Reconstruct {
        #[arg(long)]
        data: PathBuf,
        /// photo | confocal | fbp
        #[arg(long)]
        camera: CameraChoice,
        /// cx,cy,cz,pitch,n or cx,cy,cz,pitch,nx,ny,nz (meters, centred)
        #[arg(long)]
        volume: String,
        #[arg(long)]
        out: PathBuf,
        /// Virtual wavelength, meters.
        #[arg(long, default_value_t = DEFAULT_WAVELENGTH)]
        wavelength: f64,
        /// LoG width in voxels (fbp only).
        #[arg(long, default_value_t = 1.0)]
        log_sigma: f64,
    },
    /// Focal stack of the photo camera at chosen depths.
    Refocus {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated depths, meters.
        #[arg(long)]
        depths: String,
        /// rsd | fresnel
        #[arg(long, default_value = "rsd")]
        method: RefocusMethod,
        /// Use the Fresnel path even where its validity measure is >= 1.
        #[arg(long)]
        force: bool,
        #[arg(long, default_value = "refocus")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WAVELENGTH)]
        wavelength: f64,
        /// Half width of the RSD image plane, meters.
        #[arg(long, default_value_t = 0.5)]
        half_width: f64,
        /// Samples per side of the RSD image plane.
        #[arg(long, default_value_t = 65)]
        samples: usize,
    },
    /// Transient frames as numbered images with time stamps.
    TransientVideo {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated frame times, seconds.
        #[arg(long)]
        frames: String,
        #[arg(long)]
        volume: String,
        #[arg(long, default_value = "frames")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WAVELENGTH)]
        wavelength: f64,
        /// Projector point index of the virtual pulse.
        #[arg(long)]
        source: Option<usize>,
    },
    /// Measure the scaling exponent of a reconstruction stage.
    Bench {
        /// naive_bp | camera_pipeline
        #[arg(long)]
        method: BenchMethod,
        /// Comma-separated grid sizes N.
        #[arg(long, default_value = "8,12,16,24,32")]
        sizes: String,
    },
    /// Shift every time series earlier by t0 + t1 + t4.
    Rectify {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        t4: f64,
    },
    /// Compare two volume files.
    Compare {
        a: PathBuf,
        b: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Simulate { scene, out } => {
            let s = cmd_simulate(&scene, &out)?;
            println!(
                "wrote {}: {} nonzero bins, total {:.6e}, {} paths outside the record",
                out.display(),
                s.nonzero_bins,
                s.total,
                s.dropped_paths
            );
        }
        Command::Reconstruct { data, camera, volume, out, wavelength, log_sigma } => {
            let args = ReconstructArgs { data, camera, volume: parse_volume_spec(&volume)?, out, wavelength, log_sigma };
            let v = cmd_reconstruct(&args)?;
            println!("argmax voxel {:?}, peak {:.6e}, {} invalid voxels", v.argmax(), v.max_value(), v.invalid_count());
        }
        Command::Refocus { data, depths, method, force, out, wavelength, half_width, samples } => {
            let args = RefocusArgs { data, depths: parse_list("depths", &depths)?, method, force, out, wavelength, half_width, samples };
            for p in cmd_refocus(&args)? {
                println!("depth {:.4} m: peak {:.6e}", p.depth, p.peak());
            }
        }
        Command::TransientVideo { data, frames, volume, out, wavelength, source } => {
            let args = TransientArgs {
                data,
                frames: parse_list("frames", &frames)?,
                volume: parse_volume_spec(&volume)?,
                out,
                wavelength,
                source,
            };
            for (t, path) in cmd_transient_video(&args)? {
                println!("{t:e} {}", path.display());
            }
        }
        Command::Bench { method, sizes } => {
            println!("{}", cmd_bench(method, &parse_list("sizes", &sizes)?)?);
        }
        Command::Rectify { data, out, t0, t1, t4 } => {
            let dropped = cmd_rectify(&data, &out, t0, t1, t4)?;
            println!("wrote {}; dropped fraction {dropped:.6e}", out.display());
        }
        Command::Compare { a, b } => println!("{}", cmd_compare(&a, &b)?),
    }
    Ok(())
}
