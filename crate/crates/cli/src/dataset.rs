//! Self-describing container for response tensors: a `key = value` text header ended by a
//! blank line, then little-endian `f32` samples in `[p][c][t]` order.

use std::io::Read;
use std::path::Path;

use nlos_core::forward::{ResponseTensor, SpadNoiseParams};
use nlos_core::geometry::{make_grid, ApertureGrid, GridLabel, Lattice, TimeBase, Vec3};
use nlos_core::Real;

use crate::error::DatasetError;
use crate::output::atomic_write;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "nlos-dataset";

/// Everything but the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub p_lattice: Lattice<f64>,
    pub c_lattice: Lattice<f64>,
    pub timebase: TimeBase<f64>,
    pub noise: Option<SpadNoiseParams<f64>>,
    pub provenance: String,
}

impl DatasetHeader {
    pub fn describe<T: Real>(h: &ResponseTensor<T>, provenance: &str) -> Result<Self, DatasetError> {
        let lattice = |g: &ApertureGrid<T>, name: &str| {
            g.lattice().map(cast_lattice).ok_or_else(|| DatasetError::Header {
                line: 0,
                message: format!("{name} grid has no lattice description and cannot be stored"),
            })
        };
        let tb = h.timebase();
        Ok(Self {
            format_version: FORMAT_VERSION,
            p_lattice: lattice(h.p_grid(), "projector")?,
            c_lattice: lattice(h.c_grid(), "camera")?,
            timebase: TimeBase::new(tb.bin_width.as_f64(), tb.n_bins, tb.origin_offset.as_f64())?,
            noise: None,
            provenance: provenance.replace('\n', " "),
        })
    }

    pub fn with_noise(mut self, noise: Option<SpadNoiseParams<f64>>) -> Self {
        self.noise = noise;
        self
    }

    /// Payload size in samples.
    pub fn sample_count(&self) -> usize {
        self.p_lattice.n_u * self.p_lattice.n_v * self.c_lattice.n_u * self.c_lattice.n_v * self.timebase.n_bins
    }

    fn render(&self) -> String {
        let mut s = format!("{MAGIC}\nformat_version = {}\n", self.format_version);
        s += &format!("p_lattice = {}\n", render_lattice(&self.p_lattice));
        s += &format!("c_lattice = {}\n", render_lattice(&self.c_lattice));
        s += &format!("bin_width = {:?}\n", self.timebase.bin_width);
        s += &format!("n_bins = {}\n", self.timebase.n_bins);
        s += &format!("origin_offset = {:?}\n", self.timebase.origin_offset);
        if let Some(n) = &self.noise {
            s += &format!(
                "noise = {:?} {:?} {:?} {}\n",
                n.jitter_fwhm, n.background_rate, n.exposure_scale, n.seed
            );
        }
        s += &format!("provenance = {}\n\n", self.provenance);
        s
    }

    fn parse(text: &str) -> Result<Self, DatasetError> {
        let err = |line: usize, message: String| DatasetError::Header { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, MAGIC)) => {}
            _ => return Err(err(1, format!("missing `{MAGIC}` signature"))),
        }
        let mut version = None;
        let (mut p, mut c) = (None, None);
        let (mut bin_width, mut n_bins, mut origin) = (None, None, None);
        let mut noise = None;
        let mut provenance = String::new();
        for (no, line) in lines {
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(no, format!("expected `key = value`, got `{line}`")))?;
            let bad = |what: &str| err(no, format!("invalid {what} `{value}`"));
            match key {
                "format_version" => version = Some(value.parse::<u32>().map_err(|_| bad("version"))?),
                "p_lattice" => p = Some(parse_lattice(value).ok_or_else(|| bad("lattice"))?),
                "c_lattice" => c = Some(parse_lattice(value).ok_or_else(|| bad("lattice"))?),
                "bin_width" => bin_width = Some(value.parse::<f64>().map_err(|_| bad("bin width"))?),
                "n_bins" => n_bins = Some(value.parse::<usize>().map_err(|_| bad("bin count"))?),
                "origin_offset" => origin = Some(value.parse::<f64>().map_err(|_| bad("origin offset"))?),
                "noise" => noise = Some(parse_noise(value).ok_or_else(|| bad("noise record"))?),
                "provenance" => provenance = value.to_string(),
                other => return Err(err(no, format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| err(0, format!("missing key `{k}`"));
        let format_version = version.ok_or_else(|| missing("format_version"))?;
        if format_version != FORMAT_VERSION {
            return Err(DatasetError::Version { found: format_version, expected: FORMAT_VERSION });
        }
        let timebase = TimeBase::new(
            bin_width.ok_or_else(|| missing("bin_width"))?,
            n_bins.ok_or_else(|| missing("n_bins"))?,
            origin.unwrap_or(0.0),
        )?;
        Ok(Self {
            format_version,
            p_lattice: p.ok_or_else(|| missing("p_lattice"))?,
            c_lattice: c.ok_or_else(|| missing("c_lattice"))?,
            timebase,
            noise: noise.map(|n| n.map_err(DatasetError::Core)).transpose()?,
            provenance,
        })
    }
}

fn cast_lattice<T: Real>(l: &Lattice<T>) -> Lattice<f64> {
    Lattice { corner: l.corner.cast(), axis_u: l.axis_u.cast(), axis_v: l.axis_v.cast(), n_u: l.n_u, n_v: l.n_v }
}

fn render_lattice(l: &Lattice<f64>) -> String {
    let v = |p: Vec3<f64>| format!("{:?} {:?} {:?}", p.x, p.y, p.z);
    format!("{} {} {} {} {}", v(l.corner), v(l.axis_u), v(l.axis_v), l.n_u, l.n_v)
}

/// `corner_xyz axis_u_xyz axis_v_xyz n_u n_v`.
pub(crate) fn parse_lattice(s: &str) -> Option<Lattice<f64>> {
    let f: Vec<&str> = s.split_whitespace().collect();
    if f.len() != 11 {
        return None;
    }
    let x: Vec<f64> = f[..9].iter().map(|t| t.parse().ok()).collect::<Option<_>>()?;
    Some(Lattice {
        corner: Vec3::new(x[0], x[1], x[2]),
        axis_u: Vec3::new(x[3], x[4], x[5]),
        axis_v: Vec3::new(x[6], x[7], x[8]),
        n_u: f[9].parse().ok()?,
        n_v: f[10].parse().ok()?,
    })
}

/// `jitter_fwhm background_rate exposure_scale seed`.
pub(crate) fn parse_noise(s: &str) -> Option<nlos_core::Result<SpadNoiseParams<f64>>> {
    let f: Vec<&str> = s.split_whitespace().collect();
    if f.len() != 4 {
        return None;
    }
    Some(SpadNoiseParams::new(f[0].parse().ok()?, f[1].parse().ok()?, f[2].parse().ok()?, f[3].parse().ok()?))
}

pub(crate) fn lattice_grid<T: Real>(l: &Lattice<f64>, label: GridLabel) -> nlos_core::Result<ApertureGrid<T>> {
    make_grid(l.corner.cast(), l.axis_u.cast(), l.axis_v.cast(), (l.n_u, l.n_v), label)
}

/// Serialises `h` to bytes. Samples are narrowed to `f32`.
pub fn encode_dataset<T: Real>(h: &ResponseTensor<T>, header: &DatasetHeader) -> Result<Vec<u8>, DatasetError> {
    let text = header.render();
    let mut out = Vec::with_capacity(text.len() + 4 * h.values().len());
    out.extend_from_slice(text.as_bytes());
    let expected = header.sample_count();
    if expected != h.values().len() {
        return Err(DatasetError::Size { expected: 4 * expected, actual: 4 * h.values().len() });
    }
    for v in h.values() {
        let x = v.to_f32().filter(|x| x.is_finite()).ok_or(DatasetError::NonFinite { offset: out.len() })?;
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

/// Parses a dataset from bytes.
pub fn decode_dataset<T: Real>(bytes: &[u8]) -> Result<(DatasetHeader, ResponseTensor<T>), DatasetError> {
    let end = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or(DatasetError::Header { line: 0, message: "header is not terminated by a blank line".into() })?;
    let text = std::str::from_utf8(&bytes[..end])
        .map_err(|e| DatasetError::Header { line: 0, message: format!("header is not UTF-8: {e}") })?;
    let header = DatasetHeader::parse(text)?;
    let start = end + 2;
    let payload = &bytes[start..];
    let expected = 4 * header.sample_count();
    if payload.len() != expected {
        return Err(DatasetError::Size { expected, actual: payload.len() });
    }
    let mut values = Vec::with_capacity(header.sample_count());
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let x = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !x.is_finite() {
            return Err(DatasetError::NonFinite { offset: start + 4 * i });
        }
        values.push(T::from_f32(x).ok_or(DatasetError::NonFinite { offset: start + 4 * i })?);
    }
    let tb = &header.timebase;
    let timebase = TimeBase::new(T::lit(tb.bin_width), tb.n_bins, T::lit(tb.origin_offset))?;
    let h = ResponseTensor::new(
        values,
        timebase,
        lattice_grid(&header.p_lattice, GridLabel::Projector)?,
        lattice_grid(&header.c_lattice, GridLabel::Camera)?,
    )?;
    Ok((header, h))
}

pub fn save_dataset<T: Real>(h: &ResponseTensor<T>, header: &DatasetHeader, path: &Path) -> Result<(), DatasetError> {
    atomic_write(path, &encode_dataset(h, header)?)?;
    Ok(())
}

pub fn load_dataset<T: Real>(path: &Path) -> Result<(DatasetHeader, ResponseTensor<T>), DatasetError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_dataset(&bytes)
}
