use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{NlosError, Result};
use crate::geometry::{ApertureGrid, GridLabel, Vec3};
use crate::phasor::wavenumber;
use crate::scalar::Real;

/// Complex field sampled on a regular `nx x ny` lattice in the plane `z`, facing +z.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneField<T> {
    /// Row-major, x fastest.
    pub values: Vec<Complex<T>>,
    pub nx: usize,
    pub ny: usize,
    pub pitch: T,
    /// Lattice centre in x and y.
    pub center: (T, T),
    pub z: T,
    pub wavelength: T,
}

impl<T: Real> PlaneField<T> {
    pub fn new(
        values: Vec<Complex<T>>,
        (nx, ny): (usize, usize),
        pitch: T,
        center: (T, T),
        z: T,
        wavelength: T,
    ) -> Result<Self> {
        if !(pitch > T::zero()) || !pitch.is_finite() {
            return Err(NlosError::Parameter(format!("plane pitch must be > 0, got {pitch}")));
        }
        if !(wavelength > T::zero()) || !wavelength.is_finite() {
            return Err(NlosError::Parameter(format!("wavelength must be > 0, got {wavelength}")));
        }
        if nx == 0 || ny == 0 || values.len() != nx * ny {
            return Err(NlosError::Shape(format!("{} values for a {nx} x {ny} plane", values.len())));
        }
        Ok(Self { values, nx, ny, pitch, center, z, wavelength })
    }

    /// Coordinates of sample `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> Vec3<T> {
        let half = T::lit(0.5);
        let x = (T::from_usize_lossy(i) - T::from_usize_lossy(self.nx - 1) * half) * self.pitch + self.center.0;
        let y = (T::from_usize_lossy(j) - T::from_usize_lossy(self.ny - 1) * half) * self.pitch + self.center.1;
        Vec3::new(x, y, self.z)
    }

    /// Sample positions in storage order.
    pub fn points(&self) -> Vec<Vec3<T>> {
        (0..self.ny).flat_map(|j| (0..self.nx).map(move |i| (i, j))).map(|(i, j)| self.position(i, j)).collect()
    }

    /// The lattice as an aperture grid, for use with [`super::rsd_propagate`].
    pub fn to_grid(&self, label: GridLabel) -> Result<ApertureGrid<T>> {
        ApertureGrid::new(self.points(), self.pitch, Vec3::new(T::zero(), T::zero(), T::one()), label)
    }
}

/// Support of the sampled Fresnel kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FresnelSupport {
    /// Every lattice offset.
    #[default]
    Full,
    /// Offsets with `rho <= lambda |z| / (2 pitch)`, where the quadratic phase is sampled
    /// at no less than two samples per fringe.
    AliasLimited,
}

/// `d^4 / (4 L^3 lambda)`; the Fresnel approximation needs this well below 1.
pub fn fresnel_validity<T: Real>(aperture_radius: T, distance: T, wavelength: T) -> T {
    aperture_radius.powi(4) / (T::lit(4.0) * distance.powi(3) * wavelength)
}

/// Propagates `field` by `dz` with the Fresnel kernel
/// `exp(i k dz) / (i lambda dz) * exp(i k rho^2 / (2 dz)) * pitch^2`,
/// as a zero-padded linear convolution evaluated with 2-D FFTs.
pub fn fresnel_propagate<T: Real>(field: &PlaneField<T>, dz: T, support: FresnelSupport) -> Result<PlaneField<T>> {
    if dz == T::zero() || !dz.is_finite() {
        return Err(NlosError::Parameter(format!("propagation distance must be finite and nonzero, got {dz}")));
    }
    let (nx, ny) = (field.nx, field.ny);
    let (mx, my) = (2 * nx - 1, 2 * ny - 1);
    let lambda = field.wavelength;
    let k = wavenumber(lambda);
    let zero = Complex::new(T::zero(), T::zero());
    let prefactor = Complex::from_polar(T::one(), k * dz) / Complex::new(T::zero(), lambda * dz)
        * (field.pitch * field.pitch);
    let r_max = lambda * dz.abs() / (T::lit(2.0) * field.pitch);

    let mut kernel = vec![zero; mx * my];
    for b in 0..my {
        let y = T::lit(b as f64 - (ny as f64 - 1.0)) * field.pitch;
        for a in 0..mx {
            let x = T::lit(a as f64 - (nx as f64 - 1.0)) * field.pitch;
            let rho2 = x * x + y * y;
            if support == FresnelSupport::AliasLimited && rho2 > r_max * r_max {
                continue;
            }
            kernel[b * mx + a] = prefactor * Complex::from_polar(T::one(), k * rho2 / (T::lit(2.0) * dz));
        }
    }
    let mut input = vec![zero; mx * my];
    for j in 0..ny {
        input[j * mx..j * mx + nx].copy_from_slice(&field.values[j * nx..(j + 1) * nx]);
    }

    let mut planner = FftPlanner::new();
    let fft2 = |buf: &mut [Complex<T>], inverse: bool, planner: &mut FftPlanner<T>| {
        let (row, col) = if inverse {
            (planner.plan_fft_inverse(mx), planner.plan_fft_inverse(my))
        } else {
            (planner.plan_fft_forward(mx), planner.plan_fft_forward(my))
        };
        row.process(buf);
        let mut column = vec![zero; my];
        for a in 0..mx {
            for b in 0..my {
                column[b] = buf[b * mx + a];
            }
            col.process(&mut column);
            for b in 0..my {
                buf[b * mx + a] = column[b];
            }
        }
    };
    fft2(&mut kernel, false, &mut planner);
    fft2(&mut input, false, &mut planner);
    for (x, h) in input.iter_mut().zip(&kernel) {
        *x = *x * *h;
    }
    fft2(&mut input, true, &mut planner);
    let norm = T::one() / T::from_usize_lossy(mx * my);

    // output sample i sits at full-convolution index i + n - 1, which the circular
    // transform of length 2n - 1 stores at i + n - 1 - (2n - 1) = i - n  (mod 2n - 1)
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let bj = (j + ny - 1) % my;
        for i in 0..nx {
            let ai = (i + nx - 1) % mx;
            values.push(input[bj * mx + ai] * norm);
        }
    }
    PlaneField::new(values, (nx, ny), field.pitch, field.center, field.z + dz, lambda)
}
