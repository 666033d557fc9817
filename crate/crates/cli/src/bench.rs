//! Empirical scaling of the reconstruction stages.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nlos_core::cameras::backproject;
use nlos_core::forward::ResponseTensor;
use nlos_core::geometry::{make_grid, GridLabel, PhysicalConstants, TimeBase, Vec3, VolumeGrid};
use nlos_core::signal::convolve_real_direct;

use crate::error::{CliError, CliResult};

/// Stage whose cost is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    /// Incoherent backprojection, `O(N_p N_c N_v)`.
    NaiveBp,
    /// Projector-through-response convolution, `O(|H| * taps)`.
    CameraPipeline,
}

impl FromStr for BenchMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive_bp" => Ok(Self::NaiveBp),
            "camera_pipeline" => Ok(Self::CameraPipeline),
            other => Err(format!("unknown bench method `{other}` (naive_bp | camera_pipeline)")),
        }
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NaiveBp => "naive_bp",
            Self::CameraPipeline => "camera_pipeline",
        })
    }
}

/// Timing controls.
#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    /// Each measurement repeats the stage until at least this much time has passed.
    pub min_total: Duration,
    /// Measurements per size; the fastest is kept.
    pub trials: usize,
    /// Time bins per unit of `N`.
    pub bins_per_n: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { min_total: Duration::from_millis(60), trials: 3, bins_per_n: 8 }
    }
}

/// Timings, fitted exponent and the problem structure that was measured.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub method: BenchMethod,
    pub timings: Vec<(usize, f64)>,
    pub rejected: Vec<usize>,
    pub exponent: f64,
    pub structure: String,
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method = {}", self.method)?;
        writeln!(f, "structure = {}", self.structure)?;
        for (n, t) in &self.timings {
            writeln!(f, "N = {n:>4}  seconds = {t:.6e}")?;
        }
        if !self.rejected.is_empty() {
            writeln!(f, "rejected (below clock resolution) = {:?}", self.rejected)?;
        }
        write!(f, "fitted exponent = {:.3}", self.exponent)
    }
}

/// Smallest nonzero step observed on the monotonic clock.
pub fn clock_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..64 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        best = best.min(b - a);
    }
    best
}

/// Seconds per call of `stage`: best of `trials` batches, each at least `min_total` long.
/// Returns `None` if a single call is not measurable above `resolution`.
pub fn time_stage(mut stage: impl FnMut(), opts: &BenchOptions, resolution: Duration) -> Option<f64> {
    let start = Instant::now();
    stage();
    if start.elapsed() < resolution {
        return None;
    }
    let mut best = f64::INFINITY;
    for _ in 0..opts.trials.max(1) {
        let start = Instant::now();
        let mut reps = 0u32;
        while reps == 0 || start.elapsed() < opts.min_total {
            stage();
            reps += 1;
        }
        best = best.min(start.elapsed().as_secs_f64() / reps as f64);
    }
    Some(best)
}

/// Least-squares slope of `ln t` against `ln N`.
pub fn fit_exponent(timings: &[(usize, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = timings.iter().map(|(n, t)| ((*n as f64).ln(), t.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Random response on two `N`-point lines of the wall.
fn synthetic_response(n: usize, n_t: usize, seed: u64) -> ResponseTensor<f64> {
    let c = PhysicalConstants::<f64>::default();
    let step = 1.0 / n as f64;
    let line = |y: f64, label| {
        make_grid(Vec3::new(-0.5, y, 0.0), Vec3::new(step, 0.0, 0.0), Vec3::new(0.0, step, 0.0), (n, 1), label).unwrap()
    };
    // covers round trips up to 4 m
    let tb = TimeBase::new(4.0 / c.c / n_t as f64, n_t, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * n * n_t).map(|_| rng.random::<f64>()).collect();
    ResponseTensor::new(values, tb, line(-0.1, GridLabel::Projector), line(0.1, GridLabel::Camera)).unwrap()
}

const TAPS: usize = 16;

fn convolution_stage(h: &ResponseTensor<f64>, kernels: &[Vec<Complex<f64>>]) -> Vec<Complex<f64>> {
    let [n_p, n_c, n_t] = h.shape();
    let mut field = vec![Complex::new(0.0, 0.0); n_c * (n_t + TAPS - 1)];
    for (c, out) in field.chunks_mut(n_t + TAPS - 1).enumerate() {
        for (p, kernel) in kernels.iter().enumerate().take(n_p) {
            for (o, v) in out.iter_mut().zip(convolve_real_direct(h.series(p, c), kernel)) {
                *o += v;
            }
        }
    }
    field
}

fn kernels(n: usize, seed: u64) -> Vec<Vec<Complex<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..TAPS).map(|_| Complex::new(rng.random(), rng.random())).collect()).collect()
}

/// Seconds per convolution stage for `N` projector and camera points and `n_t` bins.
pub fn convolution_seconds(n: usize, n_t: usize, opts: &BenchOptions) -> Option<f64> {
    let h = synthetic_response(n, n_t, 11);
    let k = kernels(n, 12);
    time_stage(|| drop(std::hint::black_box(convolution_stage(&h, &k))), opts, clock_resolution())
}

fn naive_bp_seconds(n: usize, opts: &BenchOptions, resolution: Duration) -> Option<f64> {
    let h = synthetic_response(n, opts.bins_per_n * n, 7);
    let pitch = 0.5 / n as f64;
    let vol = VolumeGrid::new(Vec3::new(-0.25, -0.25, 0.75), pitch, (n, n, n)).unwrap();
    let c = PhysicalConstants::default();
    time_stage(|| drop(std::hint::black_box(backproject(&h, &vol, &c).unwrap())), opts, resolution)
}

/// Times `method` at every size and fits the growth exponent.
///
/// Sizes use `N_p = N_c = N` wall points and `N_t = bins_per_n * N`; backprojection
/// reconstructs `N^3` voxels, so its cost grows as `N^5`, and the convolution stage is linear
/// in `|H| = N^3`.
pub fn bench_scaling(method: BenchMethod, sizes: &[usize], opts: &BenchOptions) -> CliResult<BenchReport> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) || sizes.contains(&0) {
        return Err(CliError::Usage("bench sizes must be positive and strictly increasing".into()));
    }
    let resolution = clock_resolution();
    let mut timings = Vec::new();
    let mut rejected = Vec::new();
    for &n in sizes {
        let t = match method {
            BenchMethod::NaiveBp => naive_bp_seconds(n, opts, resolution),
            BenchMethod::CameraPipeline => {
                let h = synthetic_response(n, opts.bins_per_n * n, 11);
                let k = kernels(n, 12);
                time_stage(|| drop(std::hint::black_box(convolution_stage(&h, &k))), opts, resolution)
            }
        };
        match t {
            Some(t) => timings.push((n, t)),
            None => rejected.push(n),
        }
        log::info!("{method} N = {n}: {t:?} s");
    }
    if timings.len() < 3 {
        return Err(CliError::TooFewSizes { usable: timings.len(), rejected });
    }
    let structure = match method {
        BenchMethod::NaiveBp => format!(
            "incoherent backprojection; N_p = N_c = N points, N^3 voxels, N_t = {}N; theory N^5",
            opts.bins_per_n
        ),
        BenchMethod::CameraPipeline => format!(
            "projector-through-response convolution, direct {TAPS}-tap kernels; |H| = N * N * {}N; theory N^3",
            opts.bins_per_n
        ),
    };
    Ok(BenchReport { method, exponent: fit_exponent(&timings), timings, rejected, structure })
}
