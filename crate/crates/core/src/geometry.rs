//! Geometry, sampling grids and voxel containers shared by every stage.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::error::{NlosError, Result};
use crate::scalar::Real;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Point or direction in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_f64(x: f64, y: f64, z: f64) -> Self {
        Self::new(T::lit(x), T::lit(y), T::lit(z))
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Unit vector along `self`, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Propagation constants. `c` is injectable so tests can work in units where c = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants<T> {
    pub c: T,
}

impl<T: Real> PhysicalConstants<T> {
    pub fn new(c: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(NlosError::Parameter(format!("propagation speed must be > 0, got {c}")));
        }
        Ok(Self { c })
    }
}

impl<T: Real> Default for PhysicalConstants<T> {
    fn default() -> Self {
        Self { c: T::lit(SPEED_OF_LIGHT) }
    }
}

/// Travel time between two points, `|a - b| / c`.
pub fn time_of_flight<T: Real>(a: Vec3<T>, b: Vec3<T>, constants: &PhysicalConstants<T>) -> T {
    a.distance(b) / constants.c
}

/// Which side of the virtual system a grid samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridLabel {
    Projector,
    Camera,
}

impl GridLabel {
    pub fn swapped(self) -> Self {
        match self {
            GridLabel::Projector => GridLabel::Camera,
            GridLabel::Camera => GridLabel::Projector,
        }
    }
}

/// Parameters of a rectangular lattice: `corner + i*axis_u + j*axis_v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice<T> {
    pub corner: Vec3<T>,
    pub axis_u: Vec3<T>,
    pub axis_v: Vec3<T>,
    pub n_u: usize,
    pub n_v: usize,
}

/// Ordered, coplanar set of sample points on the relay wall.
#[derive(Debug, Clone, PartialEq)]
pub struct ApertureGrid<T> {
    points: Vec<Vec3<T>>,
    spacing: T,
    normal: Vec3<T>,
    label: GridLabel,
    lattice: Option<Lattice<T>>,
}

fn plane_tolerance<T: Real>(scale: T) -> T {
    let eps = T::epsilon() * T::lit(64.0) * (T::one() + scale);
    eps.max(T::lit(1e-9))
}

impl<T: Real> ApertureGrid<T> {
    /// Builds a grid from explicit points, checking the planarity invariants.
    pub fn new(points: Vec<Vec3<T>>, spacing: T, normal: Vec3<T>, label: GridLabel) -> Result<Self> {
        let grid = Self { points, spacing, normal, label, lattice: None };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(NlosError::Geometry("aperture grid needs at least one point".into()));
        }
        if !(self.spacing > T::zero()) || !self.spacing.is_finite() {
            return Err(NlosError::Geometry(format!("grid spacing must be > 0, got {}", self.spacing)));
        }
        let unit_tol = (T::epsilon() * T::lit(64.0)).max(T::lit(1e-12));
        if !self.normal.is_finite() || (self.normal.norm() - T::one()).abs() > unit_tol {
            return Err(NlosError::Geometry("grid normal must have unit length".into()));
        }
        let p0 = self.points[0];
        for (i, p) in self.points.iter().enumerate() {
            if !p.is_finite() {
                return Err(NlosError::Geometry(format!("grid point {i} is not finite")));
            }
            let scale = p.norm().max(p0.norm());
            let off = (*p - p0).dot(self.normal).abs();
            if off > plane_tolerance(scale) {
                return Err(NlosError::Geometry(format!(
                    "grid point {i} lies {off} m off the aperture plane"
                )));
            }
        }
        Ok(())
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    /// Per-point quadrature area, `spacing^2`.
    pub fn cell_area(&self) -> T {
        self.spacing * self.spacing
    }

    pub fn normal(&self) -> Vec3<T> {
        self.normal
    }

    pub fn label(&self) -> GridLabel {
        self.label
    }

    pub fn lattice(&self) -> Option<&Lattice<T>> {
        self.lattice.as_ref()
    }

    pub fn with_label(mut self, label: GridLabel) -> Self {
        self.label = label;
        self
    }

    pub fn centroid(&self) -> Vec3<T> {
        let n = T::from_usize_lossy(self.points.len());
        self.points.iter().fold(Vec3::zero(), |acc, p| acc + *p) / n
    }

    /// Largest distance between two grid points.
    pub fn extent(&self) -> T {
        let mut best = T::zero();
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.max(a.distance(*b));
            }
        }
        best
    }

    /// Reorders points; `order[k]` is the old index that moves to slot `k`.
    /// The lattice description is dropped since the ordering is no longer row-major.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.points.len() {
            return Err(NlosError::Shape(format!(
                "permutation of length {} for grid of {} points",
                order.len(),
                self.points.len()
            )));
        }
        let mut seen = vec![false; order.len()];
        let mut points = Vec::with_capacity(order.len());
        for &o in order {
            if o >= order.len() || seen[o] {
                return Err(NlosError::Shape("order is not a permutation".into()));
            }
            seen[o] = true;
            points.push(self.points[o]);
        }
        Ok(Self { points, spacing: self.spacing, normal: self.normal, label: self.label, lattice: None })
    }
}

/// Row-major lattice on the relay wall: `u` varies fastest.
///
/// The spacing is the longer of the two axis steps and the normal is `axis_u x axis_v`.
pub fn make_grid<T: Real>(
    corner: Vec3<T>,
    axis_u: Vec3<T>,
    axis_v: Vec3<T>,
    counts: (usize, usize),
    label: GridLabel,
) -> Result<ApertureGrid<T>> {
    let (n_u, n_v) = counts;
    if n_u == 0 || n_v == 0 {
        return Err(NlosError::Geometry(format!("lattice counts must be >= 1, got {n_u}x{n_v}")));
    }
    let normal = axis_u
        .cross(axis_v)
        .normalized()
        .filter(|_| axis_u.norm() > T::zero() && axis_v.norm() > T::zero());
    let normal = match normal {
        Some(n) if axis_u.cross(axis_v).norm() > T::epsilon() * axis_u.norm() * axis_v.norm() * T::lit(16.0) => n,
        _ => return Err(NlosError::Geometry("lattice axes are parallel or degenerate".into())),
    };
    let mut points = Vec::with_capacity(n_u * n_v);
    for j in 0..n_v {
        for i in 0..n_u {
            points.push(corner + axis_u * T::from_usize_lossy(i) + axis_v * T::from_usize_lossy(j));
        }
    }
    let spacing = axis_u.norm().max(axis_v.norm());
    let mut grid = ApertureGrid::new(points, spacing, normal, label)?;
    grid.lattice = Some(Lattice { corner, axis_u, axis_v, n_u, n_v });
    Ok(grid)
}

/// Square lattice in the z = 0 plane centred on the origin, facing +z.
pub fn centered_square_grid<T: Real>(side: T, count: usize, label: GridLabel) -> Result<ApertureGrid<T>> {
    if count == 0 {
        return Err(NlosError::Geometry("lattice count must be >= 1".into()));
    }
    let step = if count > 1 { side / T::from_usize_lossy(count - 1) } else { side.max(T::lit(1e-3)) };
    let half = if count > 1 { side / T::lit(2.0) } else { T::zero() };
    make_grid(
        Vec3::new(-half, -half, T::zero()),
        Vec3::new(step, T::zero(), T::zero()),
        Vec3::new(T::zero(), step, T::zero()),
        (count, count),
        label,
    )
}

/// Temporal sampling of a response or waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBase<T> {
    pub bin_width: T,
    pub n_bins: usize,
    /// Time of bin 0 relative to the pulse leaving the relay wall.
    pub origin_offset: T,
}

impl<T: Real> TimeBase<T> {
    pub fn new(bin_width: T, n_bins: usize, origin_offset: T) -> Result<Self> {
        if !(bin_width > T::zero()) || !bin_width.is_finite() {
            return Err(NlosError::Parameter(format!("bin width must be > 0, got {bin_width}")));
        }
        if n_bins == 0 {
            return Err(NlosError::Parameter("timebase needs at least one bin".into()));
        }
        if !origin_offset.is_finite() {
            return Err(NlosError::Parameter("timebase origin must be finite".into()));
        }
        Ok(Self { bin_width, n_bins, origin_offset })
    }

    pub fn time_of(&self, bin: usize) -> T {
        self.origin_offset + self.bin_width * T::from_usize_lossy(bin)
    }

    /// Continuous bin coordinate of time `t`.
    pub fn fractional_bin(&self, t: T) -> T {
        (t - self.origin_offset) / self.bin_width
    }

    /// Time just past the last sample.
    pub fn end(&self) -> T {
        self.time_of(self.n_bins)
    }

    pub fn duration(&self) -> T {
        self.bin_width * T::from_usize_lossy(self.n_bins)
    }

    /// True when `other` uses the same bin width up to rounding.
    pub fn compatible_with(&self, other: &TimeBase<T>) -> bool {
        (self.bin_width - other.bin_width).abs() <= T::epsilon() * T::lit(16.0) * self.bin_width
    }
}

/// Regular voxel lattice over the hidden region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeGrid<T> {
    pub origin: Vec3<T>,
    pub pitch: T,
    pub dims: (usize, usize, usize),
}

impl<T: Real> VolumeGrid<T> {
    pub fn new(origin: Vec3<T>, pitch: T, dims: (usize, usize, usize)) -> Result<Self> {
        if !(pitch > T::zero()) || !pitch.is_finite() {
            return Err(NlosError::Parameter(format!("voxel pitch must be > 0, got {pitch}")));
        }
        if dims.0 == 0 || dims.1 == 0 || dims.2 == 0 {
            return Err(NlosError::Parameter(format!("volume dims must be >= 1, got {dims:?}")));
        }
        if !origin.is_finite() {
            return Err(NlosError::Parameter("volume origin must be finite".into()));
        }
        Ok(Self { origin, pitch, dims })
    }

    /// Cube of `n^3` voxels whose centre is `center`.
    pub fn centered_cube(center: Vec3<T>, pitch: T, n: usize) -> Result<Self> {
        let half = pitch * T::from_usize_lossy(n) / T::lit(2.0);
        Self::new(center - Vec3::new(half, half, half), pitch, (n, n, n))
    }

    pub fn len(&self) -> usize {
        self.dims.0 * self.dims.1 * self.dims.2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index with `i` (x) fastest and `k` (z) slowest.
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> Result<usize> {
        let (nx, ny, nz) = self.dims;
        if i >= nx || j >= ny || k >= nz {
            return Err(NlosError::Index { i, j, k, nx, ny, nz });
        }
        Ok((k * ny + j) * nx + i)
    }

    pub fn coords(&self, linear: usize) -> (usize, usize, usize) {
        let (nx, ny, _) = self.dims;
        (linear % nx, (linear / nx) % ny, linear / (nx * ny))
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Result<Vec3<T>> {
        self.linear_index(i, j, k)?;
        Ok(self.center_unchecked(i, j, k))
    }

    pub(crate) fn center_unchecked(&self, i: usize, j: usize, k: usize) -> Vec3<T> {
        let half = T::lit(0.5);
        self.origin
            + Vec3::new(
                (T::from_usize_lossy(i) + half) * self.pitch,
                (T::from_usize_lossy(j) + half) * self.pitch,
                (T::from_usize_lossy(k) + half) * self.pitch,
            )
    }

    pub fn center_of(&self, linear: usize) -> Vec3<T> {
        let (i, j, k) = self.coords(linear);
        self.center_unchecked(i, j, k)
    }

    /// All voxel centres in linear order.
    pub fn centers(&self) -> Vec<Vec3<T>> {
        (0..self.len()).map(|l| self.center_of(l)).collect()
    }

    /// Voxel containing point `p`, if inside.
    pub fn voxel_of(&self, p: Vec3<T>) -> Option<(usize, usize, usize)> {
        let rel = (p - self.origin) / self.pitch;
        let to_idx = |v: T, n: usize| -> Option<usize> {
            let f = v.floor();
            if f < T::zero() {
                return None;
            }
            let idx = f.to_usize()?;
            (idx < n).then_some(idx)
        };
        Some((to_idx(rel.x, self.dims.0)?, to_idx(rel.y, self.dims.1)?, to_idx(rel.z, self.dims.2)?))
    }
}

/// Values on a voxel lattice, with a per-voxel validity flag.
///
/// A voxel is invalid when its reconstruction needed samples outside the recorded time window.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconVolume<T, V> {
    pub grid: VolumeGrid<T>,
    pub values: Vec<V>,
    pub valid: Vec<bool>,
}

impl<T: Real, V: Clone> ReconVolume<T, V> {
    pub fn filled(grid: VolumeGrid<T>, fill: V) -> Self {
        Self { grid, values: vec![fill; grid.len()], valid: vec![true; grid.len()] }
    }

    pub fn from_values(grid: VolumeGrid<T>, values: Vec<V>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || valid.len() != grid.len() {
            return Err(NlosError::Shape(format!(
                "volume of {} voxels given {} values and {} flags",
                grid.len(),
                values.len(),
                valid.len()
            )));
        }
        Ok(Self { grid, values, valid })
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Result<&V> {
        Ok(&self.values[self.grid.linear_index(i, j, k)?])
    }

    pub fn invalid_count(&self) -> usize {
        self.valid.iter().filter(|v| !**v).count()
    }

    pub fn map<W, F: Fn(&V) -> W>(&self, f: F) -> ReconVolume<T, W> {
        ReconVolume { grid: self.grid, values: self.values.iter().map(f).collect(), valid: self.valid.clone() }
    }
}

impl<T: Real> ReconVolume<T, T> {
    /// Voxel coordinates of the largest valid value.
    pub fn argmax(&self) -> Option<(usize, usize, usize)> {
        let mut best: Option<(usize, T)> = None;
        for (l, (&v, &ok)) in self.values.iter().zip(&self.valid).enumerate() {
            if ok && v.is_finite() && best.map_or(true, |(_, b)| v > b) {
                best = Some((l, v));
            }
        }
        best.map(|(l, _)| self.grid.coords(l))
    }

    pub fn max_value(&self) -> T {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, ok)| **ok)
            .fold(T::neg_infinity(), |m, (v, _)| m.max(*v))
    }
}

/// Centre of voxel `(i, j, k)`.
pub fn voxel_center<T: Real>(grid: &VolumeGrid<T>, index: (usize, usize, usize)) -> Result<Vec3<T>> {
    grid.voxel_center(index.0, index.1, index.2)
}
