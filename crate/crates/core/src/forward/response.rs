use crate::error::{NlosError, Result};
use crate::geometry::{ApertureGrid, TimeBase};
use crate::scalar::Real;

/// Scene response `H(x_p -> x_c, t)`: shape `[n_p][n_c][n_t]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTensor<T> {
    values: Vec<T>,
    timebase: TimeBase<T>,
    p_grid: ApertureGrid<T>,
    c_grid: ApertureGrid<T>,
}

impl<T: Real> ResponseTensor<T> {
    pub fn new(
        values: Vec<T>,
        timebase: TimeBase<T>,
        p_grid: ApertureGrid<T>,
        c_grid: ApertureGrid<T>,
    ) -> Result<Self> {
        let expected = p_grid.len() * c_grid.len() * timebase.n_bins;
        if values.len() != expected {
            return Err(NlosError::Shape(format!(
                "response holds {} values, grids and timebase need {expected}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < T::zero()) {
            return Err(NlosError::Parameter(format!(
                "response value {i} is {} (must be finite and >= 0)",
                values[i]
            )));
        }
        Ok(Self { values, timebase, p_grid, c_grid })
    }

    pub fn zeros(timebase: TimeBase<T>, p_grid: ApertureGrid<T>, c_grid: ApertureGrid<T>) -> Self {
        let n = p_grid.len() * c_grid.len() * timebase.n_bins;
        Self { values: vec![T::zero(); n], timebase, p_grid, c_grid }
    }

    pub(crate) fn from_parts_unchecked(
        values: Vec<T>,
        timebase: TimeBase<T>,
        p_grid: ApertureGrid<T>,
        c_grid: ApertureGrid<T>,
    ) -> Self {
        debug_assert_eq!(values.len(), p_grid.len() * c_grid.len() * timebase.n_bins);
        Self { values, timebase, p_grid, c_grid }
    }

    /// `[n_p, n_c, n_t]`.
    pub fn shape(&self) -> [usize; 3] {
        [self.p_grid.len(), self.c_grid.len(), self.timebase.n_bins]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn timebase(&self) -> &TimeBase<T> {
        &self.timebase
    }

    pub fn p_grid(&self) -> &ApertureGrid<T> {
        &self.p_grid
    }

    pub fn c_grid(&self) -> &ApertureGrid<T> {
        &self.c_grid
    }

    /// Time series for one projector/camera pair.
    pub fn series(&self, p: usize, c: usize) -> &[T] {
        let n_t = self.timebase.n_bins;
        let start = (p * self.c_grid.len() + c) * n_t;
        &self.values[start..start + n_t]
    }

    pub fn series_mut(&mut self, p: usize, c: usize) -> &mut [T] {
        let n_t = self.timebase.n_bins;
        let start = (p * self.c_grid.len() + c) * n_t;
        &mut self.values[start..start + n_t]
    }

    pub fn total(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn max_value(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(*v))
    }

    /// Multiplies every bin by `k >= 0`.
    pub fn scaled(&self, k: T) -> Result<Self> {
        if !(k >= T::zero()) {
            return Err(NlosError::Parameter(format!("scale must be >= 0, got {k}")));
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= k);
        Ok(out)
    }

    /// Adds a constant to every bin.
    pub fn with_background(&self, level: T) -> Result<Self> {
        if !(level >= T::zero()) {
            return Err(NlosError::Parameter(format!("background must be >= 0, got {level}")));
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v += level);
        Ok(out)
    }

    /// Element-wise sum with a tensor of identical shape and time axis.
    pub fn sum_with(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() || self.timebase != other.timebase {
            return Err(NlosError::Shape("cannot add responses with different shapes".into()));
        }
        let mut out = self.clone();
        out.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += *b);
        Ok(out)
    }

    /// Moves every series `bins` samples later, filling the start with zeros.
    pub fn delayed_bins(&self, bins: usize) -> Self {
        let n_t = self.timebase.n_bins;
        let mut out = self.clone();
        for chunk in out.values.chunks_mut(n_t) {
            chunk.rotate_right(bins.min(n_t));
            chunk[..bins.min(n_t)].iter_mut().for_each(|v| *v = T::zero());
        }
        out
    }

    /// Sums over the projector axis, modelling a capture where the source position is unknown.
    ///
    /// The resulting projector grid is a single point at the old grid's centroid.
    pub fn collapse_projectors(&self) -> Result<Self> {
        let [n_p, n_c, n_t] = self.shape();
        let mut values = vec![T::zero(); n_c * n_t];
        for p in 0..n_p {
            for c in 0..n_c {
                for (acc, v) in values[c * n_t..(c + 1) * n_t].iter_mut().zip(self.series(p, c)) {
                    *acc += *v;
                }
            }
        }
        let p_grid = ApertureGrid::new(
            vec![self.p_grid.centroid()],
            self.p_grid.spacing(),
            self.p_grid.normal(),
            self.p_grid.label(),
        )?;
        Ok(Self { values, timebase: self.timebase, p_grid, c_grid: self.c_grid.clone() })
    }

    /// Reorders both apertures; see [`ApertureGrid::permuted`].
    pub fn permuted(&self, p_order: &[usize], c_order: &[usize]) -> Result<Self> {
        let p_grid = self.p_grid.permuted(p_order)?;
        let c_grid = self.c_grid.permuted(c_order)?;
        let n_t = self.timebase.n_bins;
        let mut values = Vec::with_capacity(self.values.len());
        for &p in p_order {
            for &c in c_order {
                values.extend_from_slice(self.series(p, c));
            }
        }
        debug_assert_eq!(values.len(), p_grid.len() * c_grid.len() * n_t);
        Ok(Self { values, timebase: self.timebase, p_grid, c_grid })
    }

    /// Replaces the time axis metadata, keeping the samples.
    pub fn with_timebase(&self, timebase: TimeBase<T>) -> Result<Self> {
        if timebase.n_bins != self.timebase.n_bins {
            return Err(NlosError::Shape("new timebase changes the bin count".into()));
        }
        Ok(Self { timebase, ..self.clone() })
    }

    pub fn cast<U: Real>(&self) -> Result<ResponseTensor<U>> {
        let cast_grid = |g: &ApertureGrid<T>| {
            ApertureGrid::new(
                g.points().iter().map(|p| p.cast()).collect(),
                U::lit(g.spacing().as_f64()),
                g.normal().cast(),
                g.label(),
            )
        };
        ResponseTensor::new(
            self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
            TimeBase::new(
                U::lit(self.timebase.bin_width.as_f64()),
                self.timebase.n_bins,
                U::lit(self.timebase.origin_offset.as_f64()),
            )?,
            cast_grid(&self.p_grid)?,
            cast_grid(&self.c_grid)?,
        )
    }
}

/// Swaps the projector and camera axes (Helmholtz reciprocity).
pub fn transpose_response<T: Real>(h: &ResponseTensor<T>) -> ResponseTensor<T> {
    let [n_p, n_c, _] = h.shape();
    let mut values = Vec::with_capacity(h.values.len());
    for c in 0..n_c {
        for p in 0..n_p {
            values.extend_from_slice(h.series(p, c));
        }
    }
    ResponseTensor {
        values,
        timebase: h.timebase,
        p_grid: h.c_grid.clone().with_label(h.c_grid.label().swapped()),
        c_grid: h.p_grid.clone().with_label(h.p_grid.label().swapped()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{centered_square_grid, GridLabel};

    fn random_tensor(n_p: usize, n_c: usize, n_t: usize) -> ResponseTensor<f64> {
        let p = centered_square_grid(1.0, 1, GridLabel::Projector).unwrap();
        let p = if n_p == 1 { p } else { crate::geometry::make_grid(
            crate::geometry::Vec3::new(0.0, 0.0, 0.0),
            crate::geometry::Vec3::new(0.1, 0.0, 0.0),
            crate::geometry::Vec3::new(0.0, 0.1, 0.0),
            (n_p, 1),
            GridLabel::Projector,
        ).unwrap() };
        let c = crate::geometry::make_grid(
            crate::geometry::Vec3::new(0.0, 0.5, 0.0),
            crate::geometry::Vec3::new(0.1, 0.0, 0.0),
            crate::geometry::Vec3::new(0.0, 0.1, 0.0),
            (n_c, 1),
            GridLabel::Camera,
        ).unwrap();
        let tb = TimeBase::new(1e-11, n_t, 0.0).unwrap();
        let values = (0..n_p * n_c * n_t).map(|i| ((i * 7919) % 101) as f64).collect();
        ResponseTensor::new(values, tb, p, c).unwrap()
    }

    #[test]
    fn transpose_is_an_involution() {
        let h = random_tensor(4, 9, 128);
        let t = transpose_response(&h);
        assert_eq!(t.shape(), [9, 4, 128]);
        assert_eq!(t.series(3, 1), h.series(1, 3));
        assert_eq!(t.p_grid().label(), GridLabel::Projector);
        assert_eq!(transpose_response(&t), h);
    }

    #[test]
    fn rejects_negative_and_misshaped() {
        let h = random_tensor(2, 2, 4);
        let mut v = h.values().to_vec();
        v[3] = -1.0;
        assert!(ResponseTensor::new(v, *h.timebase(), h.p_grid().clone(), h.c_grid().clone()).is_err());
        assert!(ResponseTensor::new(vec![0.0; 3], *h.timebase(), h.p_grid().clone(), h.c_grid().clone()).is_err());
    }

    #[test]
    fn collapse_sums_projectors() {
        let h = random_tensor(3, 2, 5);
        let c = h.collapse_projectors().unwrap();
        assert_eq!(c.shape(), [1, 2, 5]);
        for t in 0..5 {
            let expect: f64 = (0..3).map(|p| h.series(p, 1)[t]).sum();
            assert_eq!(c.series(0, 1)[t], expect);
        }
    }

    #[test]
    fn delay_shifts_samples() {
        let h = random_tensor(1, 1, 6);
        let d = h.delayed_bins(2);
        assert_eq!(&d.series(0, 0)[2..], &h.series(0, 0)[..4]);
        assert_eq!(&d.series(0, 0)[..2], &[0.0, 0.0]);
    }
}
