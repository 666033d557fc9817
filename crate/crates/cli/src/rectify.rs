use nlos_core::forward::ResponseTensor;
use nlos_core::{NlosError, Real, Result};

/// Rectified response and the fraction of its total signal shifted out of the record.
#[derive(Debug, Clone)]
pub struct Rectified<T> {
    pub response: ResponseTensor<T>,
    pub dropped_fraction: T,
}

/// Moves every time series earlier by the instrument delay `t0` plus the laser-to-wall and
/// wall-to-detector flight times `t1` and `t4`, so that bin 0 refers to the pulse leaving the
/// relay wall. Fractional shifts interpolate linearly; samples past the end count as zero.
pub fn rectify_timebase<T: Real>(h: &ResponseTensor<T>, t0: T, t1: T, t4: T) -> Result<Rectified<T>> {
    let tb = *h.timebase();
    let shift = (t0 + t1 + t4) / tb.bin_width;
    if !shift.is_finite() || shift < T::zero() {
        return Err(NlosError::Parameter(format!("total delay must be finite and >= 0, got {} bins", shift)));
    }
    let total = h.total();
    let dropped_of = |kept: T| if total > T::zero() { T::one() - kept / total } else { T::zero() };
    if shift >= T::from_usize_lossy(tb.n_bins) {
        return Err(NlosError::Truncation {
            shift_bins: shift.as_f64(),
            n_bins: tb.n_bins,
            dropped_fraction: dropped_of(T::zero()).as_f64(),
        });
    }
    let whole = shift.floor().to_usize().unwrap_or(0);
    let frac = shift - shift.floor();
    let n_t = tb.n_bins;
    let mut values = Vec::with_capacity(h.values().len());
    for series in h.values().chunks(n_t) {
        let at = |i: usize| series.get(i).copied().unwrap_or(T::zero());
        values.extend((0..n_t).map(|j| (T::one() - frac) * at(j + whole) + frac * at(j + whole + 1)));
    }
    let response = ResponseTensor::new(values, tb, h.p_grid().clone(), h.c_grid().clone())?;
    let dropped_fraction = dropped_of(response.total()).max(T::zero());
    Ok(Rectified { response, dropped_fraction })
}
