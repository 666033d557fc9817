//! Deterministic transient simulator for desk-scale hidden scenes and a SPAD noise model.

mod noise;
mod response;
mod scene;

use std::cmp::Ordering;

use rayon::prelude::*;

pub use noise::{apply_spad_noise, SpadNoiseParams};
pub use response::{transpose_response, ResponseTensor};
pub use scene::{Occluder, Scene, ScenePoint, MAX_BOUNCES};

use crate::error::Result;
use crate::geometry::{ApertureGrid, PhysicalConstants, TimeBase, Vec3};
use crate::scalar::Real;

/// Output of [`simulate_response`].
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation<T> {
    pub response: ResponseTensor<T>,
    /// Paths whose arrival fell outside the time record.
    pub dropped_paths: usize,
}

/// Surface node of a light path.
#[derive(Clone, Copy)]
struct Node<T> {
    position: Vec3<T>,
    normal: Vec3<T>,
    scatterer: Option<usize>,
}

fn lexicographic<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Ordering {
    a.x.partial_cmp(&b.x)
        .unwrap_or(Ordering::Equal)
        .then(a.y.partial_cmp(&b.y).unwrap_or(Ordering::Equal))
        .then(a.z.partial_cmp(&b.z).unwrap_or(Ordering::Equal))
}

/// Amplitude and geometric length of `start -> chain -> end`, or `None` when the path
/// carries no energy (back-facing, occluded or degenerate).
fn path_contribution<T: Real>(
    start: Node<T>,
    end: Node<T>,
    chain: &[usize],
    scene: &Scene<T>,
) -> Option<(T, T)> {
    let mut nodes = Vec::with_capacity(chain.len() + 2);
    nodes.push(start);
    for &i in chain {
        let p = &scene.points[i];
        nodes.push(Node { position: p.position, normal: p.normal, scatterer: Some(i) });
    }
    nodes.push(end);

    let mut amplitude = T::one();
    let mut length = T::zero();
    let mut directions = Vec::with_capacity(nodes.len() - 1);
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let delta = b.position - a.position;
        let r = delta.norm();
        if !(r > T::zero()) {
            return None;
        }
        let dir = delta / r;
        let cos_a = a.normal.dot(dir);
        let cos_b = -b.normal.dot(dir);
        if cos_a <= T::zero() || cos_b <= T::zero() {
            return None;
        }
        if scene.occluders.iter().any(|o| o.blocks(a.position, b.position)) {
            return None;
        }
        amplitude *= cos_a * cos_b / (r * r);
        length += r;
        directions.push(dir);
    }
    for (k, node) in nodes.iter().enumerate().skip(1).take(chain.len()) {
        let s = &scene.points[node.scatterer.expect("interior node is a scatterer")];
        amplitude *= s.reflectance(directions[k - 1], directions[k]);
    }
    (amplitude > T::zero()).then_some((amplitude, length))
}

/// Linear split of `amount` between the two bins bracketing `frac_bin`.
/// Returns false when either bin falls outside the record.
fn deposit<T: Real>(series: &mut [T], frac_bin: T, amount: T) -> bool {
    if !(frac_bin >= T::zero()) {
        return false;
    }
    let Some(i) = frac_bin.floor().to_usize() else { return false };
    let w = frac_bin - T::from_usize_lossy(i);
    if i >= series.len() || (w > T::zero() && i + 1 >= series.len()) {
        return false;
    }
    series[i] += amount * (T::one() - w);
    if w > T::zero() {
        series[i + 1] += amount * w;
    }
    true
}

/// Impulse response `H(x_p -> x_c, t)` of `scene` by exhaustive path enumeration.
///
/// Every chain `x_p -> s_1 -> ... -> s_b -> x_c` with `b <= max_bounces` deposits
/// `prod(reflectance) * prod(cos_out * cos_in / r^2)` at its total flight time, split
/// linearly between the two nearest bins. Aperture points use their grid normal.
/// Each path is evaluated from the lexicographically smaller endpoint so that swapping
/// the apertures reproduces the transposed tensor bit for bit.
pub fn simulate_response<T: Real>(
    scene: &Scene<T>,
    p_grid: &ApertureGrid<T>,
    c_grid: &ApertureGrid<T>,
    timebase: &TimeBase<T>,
    constants: &PhysicalConstants<T>,
) -> Result<Simulation<T>> {
    let n_c = c_grid.len();
    let n_t = timebase.n_bins;
    let chains = scene.chains();
    let mut values = vec![T::zero(); p_grid.len() * n_c * n_t];

    let dropped: usize = values
        .par_chunks_mut(n_c * n_t)
        .enumerate()
        .map(|(p, block)| {
            let mut dropped = 0usize;
            let xp = Node { position: p_grid.points()[p], normal: p_grid.normal(), scatterer: None };
            for (c, series) in block.chunks_mut(n_t).enumerate() {
                let xc = Node { position: c_grid.points()[c], normal: c_grid.normal(), scatterer: None };
                let (start, end) = match lexicographic(xp.position, xc.position) {
                    Ordering::Greater => (xc, xp),
                    _ => (xp, xc),
                };
                for chain in &chains {
                    if let Some((amp, len)) = path_contribution(start, end, chain, scene) {
                        let t = len / constants.c;
                        if !deposit(series, timebase.fractional_bin(t), amp) {
                            dropped += 1;
                        }
                    }
                }
            }
            dropped
        })
        .sum();

    if dropped > 0 {
        log::warn!("{dropped} light paths fell outside the {n_t}-bin record and were dropped");
    }
    let response = ResponseTensor::from_parts_unchecked(values, *timebase, p_grid.clone(), c_grid.clone());
    Ok(Simulation { response, dropped_paths: dropped })
}
