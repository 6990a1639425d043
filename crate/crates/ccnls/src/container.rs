//! Flat binary container for fields and space-time samples.
//!
//! Layout: magic `CCNF`, version `u32`, then the header
//! `{d: u32, M: u32, Q: u32, ncomp: u32, L: f64, dt: f64}` (little endian),
//! followed by the complex values as little-endian `(re, im)` pairs of `f64`
//! in row-major `(t, x_1, ..., x_d, component)` order. A JSON sidecar carries
//! the remaining metadata (representation, snapshot time, window descriptor).

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Representation};
use crate::spacetime::SpaceTimeSample;

const MAGIC: &[u8; 4] = b"CCNF";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarMeta {
    pub kind: String,
    pub representation: Option<Representation>,
    pub time: Option<f64>,
    pub t0: Option<f64>,
    pub window_center: Option<f64>,
    pub window_width: Option<f64>,
}

struct Header {
    d: u32,
    m: u32,
    q: u32,
    ncomp: u32,
    len: f64,
    dt: f64,
}

fn write_header(out: &mut Vec<u8>, h: &Header) {
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&h.d.to_le_bytes());
    out.extend_from_slice(&h.m.to_le_bytes());
    out.extend_from_slice(&h.q.to_le_bytes());
    out.extend_from_slice(&h.ncomp.to_le_bytes());
    out.extend_from_slice(&h.len.to_le_bytes());
    out.extend_from_slice(&h.dt.to_le_bytes());
}

fn read_header(bytes: &[u8]) -> Result<(Header, usize)> {
    if bytes.len() < 4 + 4 + 4 * 4 + 8 * 2 {
        return Err(Error::Container("truncated header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Container("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Container(format!("unsupported version {version}")));
    }
    Ok((
        Header {
            d: u32_at(8),
            m: u32_at(12),
            q: u32_at(16),
            ncomp: u32_at(20),
            len: f64_at(24),
            dt: f64_at(32),
        },
        40,
    ))
}

/// Serializes a field (one time slab: `Q = 1`, `dt = 0`).
pub fn field_to_bytes(f: &Field) -> Vec<u8> {
    let grid = f.grid;
    let mut out = Vec::with_capacity(40 + 16 * grid.points() * f.n_components());
    write_header(
        &mut out,
        &Header {
            d: grid.d as u32,
            m: grid.m as u32,
            q: 1,
            ncomp: f.n_components() as u32,
            len: grid.len,
            dt: 0.0,
        },
    );
    for x in 0..grid.points() {
        for c in 0..f.n_components() {
            let v = f.component(c)[x];
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

pub fn field_from_bytes(bytes: &[u8], repr: Representation) -> Result<Field> {
    let (h, mut off) = read_header(bytes)?;
    if h.q != 1 {
        return Err(Error::Container("expected a single-slab field container".into()));
    }
    let grid = Grid::new(h.d as usize, h.len, h.m as usize)?;
    let points = grid.points();
    let ncomp = h.ncomp as usize;
    if bytes.len() != off + 16 * points * ncomp {
        return Err(Error::Container("payload length mismatch".into()));
    }
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); points]; ncomp];
    for x in 0..points {
        for comp in comps.iter_mut() {
            let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
            comp[x] = Complex64::new(re, im);
            off += 16;
        }
    }
    Field::from_components(grid, repr, comps)
}

/// Serializes a scalar space-time sample.
pub fn sample_to_bytes(s: &SpaceTimeSample) -> Vec<u8> {
    let grid = s.grid;
    let mut out = Vec::with_capacity(40 + 16 * s.values.len());
    write_header(
        &mut out,
        &Header {
            d: grid.d as u32,
            m: grid.m as u32,
            q: s.q as u32,
            ncomp: 1,
            len: grid.len,
            dt: s.dt,
        },
    );
    for v in &s.values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn sample_from_bytes(bytes: &[u8], t0: f64) -> Result<SpaceTimeSample> {
    let (h, mut off) = read_header(bytes)?;
    let grid = Grid::new(h.d as usize, h.len, h.m as usize)?;
    let count = grid.points() * h.q as usize;
    if h.ncomp != 1 {
        return Err(Error::Container("samples carry one component".into()));
    }
    if bytes.len() != off + 16 * count {
        return Err(Error::Container("payload length mismatch".into()));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
        values.push(Complex64::new(re, im));
        off += 16;
    }
    SpaceTimeSample::new(grid, t0, h.dt, h.q as usize, values)
}

/// Writes the container plus its JSON sidecar (`<path>.json`).
pub fn write_field(path: &Path, f: &Field, time: Option<f64>) -> Result<()> {
    let bytes = field_to_bytes(f);
    let mut out = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    out.write_all(&bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
    let meta = SidecarMeta {
        kind: "field".into(),
        representation: Some(f.repr),
        time,
        t0: None,
        window_center: None,
        window_width: None,
    };
    let side = path.with_extension("json");
    std::fs::write(&side, serde_json::to_string_pretty(&meta)?)
        .map_err(|e| Error::io(side.display().to_string(), e))
}

pub fn read_field(path: &Path) -> Result<Field> {
    let mut bytes = vec![];
    std::fs::File::open(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let side = path.with_extension("json");
    let meta: SidecarMeta = serde_json::from_str(
        &std::fs::read_to_string(&side).map_err(|e| Error::io(side.display().to_string(), e))?,
    )?;
    field_from_bytes(&bytes, meta.representation.unwrap_or(Representation::Physical))
}
