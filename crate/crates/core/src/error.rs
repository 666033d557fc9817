use thiserror::Error;

/// Errors raised by the reconstruction toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NlosError {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("index ({i}, {j}, {k}) outside volume of dims ({nx}, {ny}, {nz})")]
    Index {
        i: usize,
        j: usize,
        k: usize,
        nx: usize,
        ny: usize,
        nz: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular propagator: source {source_index} and destination {dest_index} coincide")]
    Singularity {
        source_index: usize,
        dest_index: usize,
    },

    #[error("wavelength {wavelength} m is not resolvable with bin width {bin_width} s (needs wavelength >= {min_wavelength} m)")]
    Aliasing {
        wavelength: f64,
        bin_width: f64,
        min_wavelength: f64,
    },

    #[error("time shift of {shift_bins} bins exceeds the record of {n_bins} bins (dropped energy fraction {dropped_fraction})")]
    Truncation {
        shift_bins: f64,
        n_bins: usize,
        dropped_fraction: f64,
    },
}

pub type Result<T> = std::result::Result<T, NlosError>;
