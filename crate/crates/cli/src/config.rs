//! Line-oriented scene configuration.
//!
//! One `key = value` per line; `#` starts a comment. Units are SI. Keys:
//!
//! | key | value |
//! |---|---|
//! | `p_grid`, `c_grid` | `side count`: centred square lattice on the wall (z = 0) |
//! | `p_lattice`, `c_lattice` | `corner_xyz axis_u_xyz axis_v_xyz n_u n_v` |
//! | `bin_width` | seconds |
//! | `n_bins` | count |
//! | `origin_offset` | seconds, default 0 |
//! | `max_bounces` | 1..=3, default 1 |
//! | `point` | `x y z albedo [nx ny nz [gloss_weight gloss_exponent]]`, repeatable |
//! | `occluder` | `corner_xyz edge_u_xyz edge_v_xyz`, repeatable |
//! | `noise` | `jitter_fwhm background_rate exposure_scale seed` |
//! | `provenance` | free text |

use nlos_core::forward::{Occluder, Scene, ScenePoint, SpadNoiseParams};
use nlos_core::geometry::{centered_square_grid, ApertureGrid, GridLabel, Lattice, TimeBase, Vec3};

use crate::dataset::{lattice_grid, parse_lattice, parse_noise};
use crate::error::ConfigError;

/// A parsed scene configuration.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub p_lattice: Lattice<f64>,
    pub c_lattice: Lattice<f64>,
    pub timebase: TimeBase<f64>,
    pub scene: Scene<f64>,
    pub noise: Option<SpadNoiseParams<f64>>,
    pub provenance: String,
}

impl SceneConfig {
    pub fn p_grid(&self) -> ApertureGrid<f64> {
        lattice_grid(&self.p_lattice, GridLabel::Projector).expect("validated lattice")
    }

    pub fn c_grid(&self) -> ApertureGrid<f64> {
        lattice_grid(&self.c_lattice, GridLabel::Camera).expect("validated lattice")
    }
}

fn numbers(line: usize, field: &str, value: &str, counts: &[usize]) -> Result<Vec<f64>, ConfigError> {
    let parsed: Vec<f64> = value
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| ConfigError::new(line, field, format!("`{t}` is not a number"))))
        .collect::<Result<_, _>>()?;
    if !counts.contains(&parsed.len()) {
        return Err(ConfigError::new(line, field, format!("expected {counts:?} numbers, got {}", parsed.len())));
    }
    if parsed.iter().any(|v| !v.is_finite()) {
        return Err(ConfigError::new(line, field, "values must be finite"));
    }
    Ok(parsed)
}

fn square_lattice(line: usize, field: &str, value: &str) -> Result<Lattice<f64>, ConfigError> {
    let v = numbers(line, field, value, &[2])?;
    if v[1] < 1.0 || v[1].fract() != 0.0 {
        return Err(ConfigError::new(line, field, "count must be a positive integer"));
    }
    let grid = centered_square_grid(v[0], v[1] as usize, GridLabel::Projector)
        .map_err(|e| ConfigError::new(line, field, e.to_string()))?;
    Ok(*grid.lattice().expect("square grids carry a lattice"))
}

fn explicit_lattice(line: usize, field: &str, value: &str) -> Result<Lattice<f64>, ConfigError> {
    let l = parse_lattice(value).ok_or_else(|| ConfigError::new(line, field, "expected 9 numbers and 2 counts"))?;
    lattice_grid::<f64>(&l, GridLabel::Projector).map_err(|e| ConfigError::new(line, field, e.to_string()))?;
    Ok(l)
}

fn scene_point(line: usize, value: &str) -> Result<ScenePoint<f64>, ConfigError> {
    let v = numbers(line, "point", value, &[4, 7, 9])?;
    let pos = Vec3::new(v[0], v[1], v[2]);
    let res = match v.len() {
        4 => ScenePoint::facing_wall(pos, v[3]),
        7 => Vec3::new(v[4], v[5], v[6])
            .normalized()
            .ok_or_else(|| nlos_core::NlosError::Parameter("normal has zero length".into()))
            .and_then(|n| ScenePoint::new(pos, v[3], n, 0.0, 1.0)),
        _ => Vec3::new(v[4], v[5], v[6])
            .normalized()
            .ok_or_else(|| nlos_core::NlosError::Parameter("normal has zero length".into()))
            .and_then(|n| ScenePoint::new(pos, v[3], n, v[7], v[8])),
    };
    res.map_err(|e| ConfigError::new(line, "point", e.to_string()))
}

/// Parses a scene configuration.
pub fn parse_scene_config(text: &str) -> Result<SceneConfig, ConfigError> {
    let (mut p, mut c) = (None, None);
    let (mut bin_width, mut n_bins, mut origin) = (None, None, 0.0);
    let mut bounces = (0, 1usize);
    let mut points = Vec::new();
    let mut occluders = Vec::new();
    let mut noise = None;
    let mut provenance = String::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| ConfigError::new(no, line, "expected `key = value`"))?;
        match key {
            "p_grid" => p = Some(square_lattice(no, key, value)?),
            "c_grid" => c = Some(square_lattice(no, key, value)?),
            "p_lattice" => p = Some(explicit_lattice(no, key, value)?),
            "c_lattice" => c = Some(explicit_lattice(no, key, value)?),
            "bin_width" => bin_width = Some((no, numbers(no, key, value, &[1])?[0])),
            "n_bins" => {
                n_bins = Some((no, value.parse::<usize>().map_err(|_| ConfigError::new(no, key, "expected a count"))?))
            }
            "origin_offset" => origin = numbers(no, key, value, &[1])?[0],
            "max_bounces" => {
                bounces = (no, value.parse::<usize>().map_err(|_| ConfigError::new(no, key, "expected a count"))?)
            }
            "point" => points.push(scene_point(no, value)?),
            "occluder" => {
                let v = numbers(no, key, value, &[9])?;
                let o = Occluder::new(
                    Vec3::new(v[0], v[1], v[2]),
                    Vec3::new(v[3], v[4], v[5]),
                    Vec3::new(v[6], v[7], v[8]),
                )
                .map_err(|e| ConfigError::new(no, key, e.to_string()))?;
                occluders.push(o);
            }
            "noise" => {
                noise = Some(
                    parse_noise(value)
                        .ok_or_else(|| ConfigError::new(no, key, "expected `jitter_fwhm background exposure seed`"))?
                        .map_err(|e| ConfigError::new(no, key, e.to_string()))?,
                )
            }
            "provenance" => provenance = value.to_string(),
            other => return Err(ConfigError::new(no, other, "unknown key")),
        }
    }
    let end = text.lines().count().max(1);
    let missing = |k: &str| ConfigError::new(end, k, "required key is missing");
    let (bw_line, bw) = bin_width.ok_or_else(|| missing("bin_width"))?;
    let (nb_line, nb) = n_bins.ok_or_else(|| missing("n_bins"))?;
    let timebase = TimeBase::new(bw, nb, origin).map_err(|e| ConfigError::new(bw_line.max(nb_line), "timebase", e.to_string()))?;
    let scene = Scene::new(points, bounces.1, occluders).map_err(|e| ConfigError::new(bounces.0.max(1), "scene", e.to_string()))?;
    Ok(SceneConfig {
        p_lattice: p.ok_or_else(|| missing("p_grid"))?,
        c_lattice: c.ok_or_else(|| missing("c_grid"))?,
        timebase,
        scene,
        noise,
        provenance,
    })
}

/// Reconstruction volume given as `cx,cy,cz,pitch,n` or `cx,cy,cz,pitch,nx,ny,nz`, centred on
/// `(cx, cy, cz)`.
pub fn parse_volume_spec(spec: &str) -> Result<nlos_core::geometry::VolumeGrid<f64>, ConfigError> {
    let err = |m: String| ConfigError::new(1, "volume", m);
    let f: Vec<&str> = spec.split(',').map(str::trim).collect();
    if f.len() != 5 && f.len() != 7 {
        return Err(err(format!("expected 5 or 7 comma-separated fields, got {}", f.len())));
    }
    let x: Vec<f64> = f[..4].iter().map(|t| t.parse().map_err(|_| err(format!("`{t}` is not a number")))).collect::<Result<_, _>>()?;
    let n: Vec<usize> = f[4..].iter().map(|t| t.parse().map_err(|_| err(format!("`{t}` is not a count")))).collect::<Result<_, _>>()?;
    let dims = if n.len() == 1 { (n[0], n[0], n[0]) } else { (n[0], n[1], n[2]) };
    let pitch = x[3];
    let half = |k: usize| k as f64 / 2.0 * pitch;
    let origin = Vec3::new(x[0] - half(dims.0), x[1] - half(dims.1), x[2] - half(dims.2));
    nlos_core::geometry::VolumeGrid::new(origin, pitch, dims).map_err(|e| err(e.to_string()))
}

/// Comma-separated list of numbers.
pub fn parse_list<F: std::str::FromStr>(field: &str, s: &str) -> Result<Vec<F>, ConfigError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<F>().map_err(|_| ConfigError::new(1, field, format!("`{t}` is not a valid entry"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
# single scatterer
p_grid = 1.0 3
c_grid = 1.0 3
bin_width = 1e-11
n_bins = 100
point = 0 0 1 0.5
point = 0.1 0 1.2 1.0 0 0 -1
noise = 6.5e-11 0.1 10 7
";

    #[test]
    fn parses_documented_keys() {
        let cfg = parse_scene_config(GOOD).unwrap();
        assert_eq!(cfg.scene.points.len(), 2);
        assert_eq!(cfg.p_grid().len(), 9);
        assert_eq!(cfg.timebase.n_bins, 100);
        assert_eq!(cfg.noise.unwrap().seed, 7);
        assert_eq!(cfg.scene.max_bounces, 1);
    }

    #[test]
    fn errors_name_line_and_field() {
        let bad = GOOD.replace("point = 0 0 1 0.5", "point = 0 0 one 0.5");
        let e = parse_scene_config(&bad).unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (6, "point"));

        let e = parse_scene_config(&GOOD.replace("n_bins = 100", "n_bins = many")).unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (5, "n_bins"));

        let e = parse_scene_config(&format!("{GOOD}colour = red\n")).unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (9, "colour"));

        let e = parse_scene_config(&GOOD.replace("point = 0 0 1 0.5", "point = 0 0 1 1.5")).unwrap_err();
        assert_eq!(e.line, 6);

        let e = parse_scene_config(&GOOD.replace("bin_width = 1e-11\n", "")).unwrap_err();
        assert_eq!(e.field, "bin_width");
    }

    #[test]
    fn volume_spec_is_centred() {
        let v = parse_volume_spec("0,0,1,0.01,4").unwrap();
        assert_eq!(v.dims, (4, 4, 4));
        let c = v.voxel_center(2, 2, 2).unwrap();
        assert!((c.z - 1.005).abs() < 1e-12 && (c.x - 0.005).abs() < 1e-12);
        assert!(parse_volume_spec("0,0,1,0.01").is_err());
        assert!(parse_volume_spec("0,0,1,x,4").is_err());
    }
}
