//! File outputs: atomic writes, graymap images with min/max sidecars, volume files.

use std::io::Write;
use std::path::{Path, PathBuf};

use nlos_core::geometry::{ReconVolume, Vec3, VolumeGrid};

use crate::error::{CliError, CliResult};

/// Writes through a temporary file in the target directory, then renames over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Path of the min/max record written next to an image.
pub fn sidecar_path(image: &Path) -> PathBuf {
    let mut s = image.as_os_str().to_owned();
    s.push(".minmax");
    PathBuf::from(s)
}

/// Writes an 8-bit binary graymap scaled linearly from the data range, plus a sidecar
/// holding the range and any extra `key = value` lines. Row `j` of the image is `values[j * nx ..]`.
pub fn write_pgm(path: &Path, values: &[f64], nx: usize, ny: usize, extra: &[(&str, String)]) -> CliResult<()> {
    if values.len() != nx * ny || nx == 0 || ny == 0 {
        return Err(CliError::Usage(format!("{} values for a {nx} x {ny} image", values.len())));
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let mut bytes = b"P5\n".to_vec();
    for (k, v) in extra {
        bytes.extend_from_slice(format!("# {k} = {v}\n").as_bytes());
    }
    bytes.extend_from_slice(format!("{nx} {ny}\n255\n").as_bytes());
    let span = hi - lo;
    bytes.extend(values.iter().map(|v| if span > 0.0 { ((v - lo) / span * 255.0).round() as u8 } else { 0 }));
    atomic_write(path, &bytes)?;
    let mut side = format!("min = {lo:e}\nmax = {hi:e}\n");
    for (k, v) in extra {
        side += &format!("{k} = {v}\n");
    }
    atomic_write(&sidecar_path(path), side.as_bytes())?;
    Ok(())
}

/// Reads the `key = value` lines of a sidecar.
pub fn read_sidecar(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
        .collect())
}

const VOLUME_MAGIC: &str = "nlos-volume";

/// Volume file: text header, blank line, little-endian `f32` voxels with x fastest.
pub fn encode_volume(v: &ReconVolume<f64, f64>, label: &str) -> Vec<u8> {
    let g = &v.grid;
    let mut out = format!(
        "{VOLUME_MAGIC}\nformat_version = 1\ndims = {} {} {}\norigin = {:?} {:?} {:?}\npitch = {:?}\ncamera = {label}\n\n",
        g.dims.0, g.dims.1, g.dims.2, g.origin.x, g.origin.y, g.origin.z, g.pitch
    )
    .into_bytes();
    for x in &v.values {
        out.extend_from_slice(&(*x as f32).to_le_bytes());
    }
    out
}

pub fn decode_volume(bytes: &[u8]) -> CliResult<ReconVolume<f64, f64>> {
    let bad = |m: &str| CliError::Usage(format!("malformed volume file: {m}"));
    let end = bytes.windows(2).position(|w| w == b"\n\n").ok_or_else(|| bad("no header terminator"))?;
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8"))?;
    let mut lines = text.lines();
    if lines.next() != Some(VOLUME_MAGIC) {
        return Err(bad("missing signature"));
    }
    let (mut dims, mut origin, mut pitch) = (None, None, None);
    for line in lines {
        let (k, v) = line.split_once('=').ok_or_else(|| bad(line))?;
        let nums: Vec<f64> = v.split_whitespace().filter_map(|t| t.parse().ok()).collect();
        match (k.trim(), nums.len()) {
            ("dims", 3) => dims = Some((nums[0] as usize, nums[1] as usize, nums[2] as usize)),
            ("origin", 3) => origin = Some(Vec3::new(nums[0], nums[1], nums[2])),
            ("pitch", 1) => pitch = Some(nums[0]),
            ("format_version" | "camera", _) => {}
            _ => return Err(bad(line)),
        }
    }
    let grid = VolumeGrid::new(origin.ok_or_else(|| bad("origin"))?, pitch.ok_or_else(|| bad("pitch"))?, dims.ok_or_else(|| bad("dims"))?)?;
    let payload = &bytes[end + 2..];
    if payload.len() != 4 * grid.len() {
        return Err(bad(&format!("expected {} payload bytes, found {}", 4 * grid.len(), payload.len())));
    }
    let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
    Ok(ReconVolume::from_values(grid, values, vec![true; grid.len()])?)
}
