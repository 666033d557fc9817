use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::ResponseTensor;
use crate::error::{NlosError, Result};
use crate::scalar::Real;
use crate::signal::{convolve_same_real, fwhm_to_sigma, gaussian_kernel};

/// SPAD capture model: Gaussian timing jitter, uniform background and Poisson counting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpadNoiseParams<T> {
    /// Full width at half maximum of the timing jitter, seconds.
    pub jitter_fwhm: T,
    /// Expected background counts per bin.
    pub background_rate: T,
    /// Expected counts per unit of response intensity.
    pub exposure_scale: T,
    pub seed: u64,
}

impl<T: Real> SpadNoiseParams<T> {
    pub fn new(jitter_fwhm: T, background_rate: T, exposure_scale: T, seed: u64) -> Result<Self> {
        let p = Self { jitter_fwhm, background_rate, exposure_scale, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_fwhm >= T::zero()) || !self.jitter_fwhm.is_finite() {
            return Err(NlosError::Parameter(format!("jitter FWHM must be >= 0, got {}", self.jitter_fwhm)));
        }
        if !(self.background_rate >= T::zero()) || !self.background_rate.is_finite() {
            return Err(NlosError::Parameter(format!(
                "background rate must be >= 0, got {}",
                self.background_rate
            )));
        }
        if !(self.exposure_scale > T::zero()) || !self.exposure_scale.is_finite() {
            return Err(NlosError::Parameter(format!(
                "exposure scale must be > 0, got {}",
                self.exposure_scale
            )));
        }
        Ok(())
    }
}

/// Draws photon counts `Poisson(exposure * (h * jitter) + background)` for every bin.
///
/// Each `(p, c)` series owns its own ChaCha stream derived from the seed, so the result
/// does not depend on how the work is split across threads.
pub fn apply_spad_noise<T: Real>(h: &ResponseTensor<T>, params: &SpadNoiseParams<T>) -> Result<ResponseTensor<T>> {
    params.validate()?;
    let n_t = h.timebase().n_bins;
    let sigma_bins = fwhm_to_sigma(params.jitter_fwhm) / h.timebase().bin_width;
    let kernel = (sigma_bins > T::zero()).then(|| gaussian_kernel(sigma_bins));
    let exposure = params.exposure_scale.as_f64();
    let background = params.background_rate.as_f64();

    let mut values = vec![T::zero(); h.values().len()];
    values.par_chunks_mut(n_t).zip(h.values().par_chunks(n_t)).enumerate().for_each(|(idx, (out, src))| {
        let blurred = match &kernel {
            Some(k) => convolve_same_real(src, k),
            None => src.to_vec(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(idx as u64);
        for (o, x) in out.iter_mut().zip(blurred) {
            let rate = exposure * x.as_f64().max(0.0) + background;
            let count = if rate > 0.0 {
                Poisson::new(rate).expect("positive finite rate").sample(&mut rng)
            } else {
                0.0
            };
            *o = T::lit(count);
        }
    });
    ResponseTensor::new(values, *h.timebase(), h.p_grid().clone(), h.c_grid().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_grid, GridLabel, TimeBase, Vec3};

    fn tensor(series: Vec<f64>, n_c: usize) -> ResponseTensor<f64> {
        let n_t = series.len() / n_c;
        let c_grid =
            make_grid(Vec3::zero(), Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.0, 0.1, 0.0), (n_c, 1), GridLabel::Camera)
                .unwrap();
        ResponseTensor::new(
            series,
            TimeBase::new(1e-11, n_t, 0.0).unwrap(),
            make_grid(Vec3::zero(), Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.0, 0.1, 0.0), (1, 1), GridLabel::Projector)
                .unwrap(),
            c_grid,
        )
        .unwrap()
    }

    #[test]
    fn high_exposure_recovers_signal() {
        let h = tensor((0..64).map(|i| 1.0 + (i as f64 * 0.2).sin().abs()).collect(), 1);
        let p = SpadNoiseParams::new(0.0, 0.0, 1e6, 7).unwrap();
        let n = apply_spad_noise(&h, &p).unwrap();
        for (a, b) in n.values().iter().zip(h.values()) {
            assert!((a / 1e6 - b).abs() / b < 0.01);
            assert_eq!(a.fract(), 0.0);
        }
    }

    #[test]
    fn background_mean() {
        let h = tensor(vec![0.0; 20_000], 4);
        let p = SpadNoiseParams::new(0.0, 5.0, 1.0, 11).unwrap();
        let n = apply_spad_noise(&h, &p).unwrap();
        let mean = n.total() / 20_000.0;
        // standard error of the mean is sqrt(5 / 20000)
        assert!((mean - 5.0).abs() < 3.0 * (5.0f64 / 20_000.0).sqrt(), "mean {mean}");
    }

    #[test]
    fn jitter_second_moment() {
        let mut s = vec![0.0; 256];
        s[128] = 1.0;
        let h = tensor(s, 1);
        let fwhm = 6.0 * 1e-11;
        let p = SpadNoiseParams::new(fwhm, 0.0, 1e7, 3).unwrap();
        let n = apply_spad_noise(&h, &p).unwrap();
        let total: f64 = n.values().iter().sum();
        let m2: f64 = n.values().iter().enumerate().map(|(i, v)| v * (i as f64 - 128.0).powi(2)).sum::<f64>() / total;
        let sigma = 6.0 / 2.355;
        assert!((m2.sqrt() - sigma).abs() / sigma < 0.10, "sigma {} vs {sigma}", m2.sqrt());
    }

    #[test]
    fn seed_reproducible_and_distinct() {
        let h = tensor((0..512).map(|i| (i % 7) as f64).collect(), 4);
        let a = apply_spad_noise(&h, &SpadNoiseParams::new(2e-11, 1.0, 3.0, 42).unwrap()).unwrap();
        let b = apply_spad_noise(&h, &SpadNoiseParams::new(2e-11, 1.0, 3.0, 42).unwrap()).unwrap();
        let c = apply_spad_noise(&h, &SpadNoiseParams::new(2e-11, 1.0, 3.0, 43).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let d = single.install(|| apply_spad_noise(&h, &SpadNoiseParams::new(2e-11, 1.0, 3.0, 42).unwrap()).unwrap());
        assert_eq!(a, d);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(SpadNoiseParams::new(-1.0, 0.0, 1.0, 0).is_err());
        assert!(SpadNoiseParams::new(0.0, -1.0, 1.0, 0).is_err());
        assert!(SpadNoiseParams::new(0.0, 0.0, 0.0, 0).is_err());
    }
}
