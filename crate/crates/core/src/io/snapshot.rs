//! Binary snapshots of a simulation state.
//!
//! Layout (little-endian throughout):
//!
//! | bytes | field |
//! |---|---|
//! | 8 | magic `VOIGTFLD` |
//! | 4 | `u32` format version |
//! | 4 | `u32` dim |
//! | 4 | `u32` n |
//! | 8 | `f64` time |
//! | 8 | `f64` alpha |
//! | 8 | `f64` alpha_m |
//! | 4 | `u32` field count (1 = u, 2 = u and 𝓑) |
//! | 4 | `u32` layout code (1 = half spectrum, see below) |
//! | 4 | `u32` components per field |
//!
//! followed by, for each field and each component, the stored spectral
//! coefficients as interleaved `(re, im)` `f64` pairs in storage order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex;
use thiserror::Error;

use crate::dynamics::{SimState, VoigtParams};
use crate::scalar::Real;
use crate::spectral::{GridSpec, SpectralField};

pub const MAGIC: &[u8; 8] = b"VOIGTFLD";
pub const FORMAT_VERSION: u32 = 1;
/// Half-spectrum storage order of [`GridSpec`].
pub const LAYOUT_HALF_SPECTRUM: u32 = 1;
pub const HEADER_LEN: usize = 8 + 4 * 3 + 8 * 3 + 4 * 3;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a snapshot: bad magic bytes")]
    BadMagic,
    #[error("unsupported snapshot version {found} (this build reads {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("truncated snapshot: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("invalid snapshot header: {0}")]
    Invalid(String),
    #[error("snapshot I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Header fields of a snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub dim: u32,
    pub n: u32,
    pub time: f64,
    pub alpha: f64,
    pub alpha_m: f64,
    pub field_count: u32,
    pub layout: u32,
    pub components: u32,
}

impl SnapshotHeader {
    fn body_len(&self) -> u64 {
        let h = self.n as u64 / 2 + 1;
        let len = (self.n as u64).pow(self.dim - 1) * h;
        len * 16 * self.components as u64 * self.field_count as u64
    }
}

/// A state together with the parameters it was produced with.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub state: SimState<f64>,
    pub params: VoigtParams<f64>,
}

fn write_field<T: Real, W: Write>(w: &mut W, f: &SpectralField<T>) -> std::io::Result<()> {
    for c in f.components() {
        for z in c {
            w.write_f64::<LittleEndian>(z.re.to_f64())?;
            w.write_f64::<LittleEndian>(z.im.to_f64())?;
        }
    }
    Ok(())
}

/// Writes `state` and `params` to `path`.
pub fn write_snapshot<T: Real>(state: &SimState<T>, params: &VoigtParams<T>, path: &Path) -> Result<(), SnapshotError> {
    let g = state.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    w.write_u32::<LittleEndian>(g.dim() as u32)?;
    w.write_u32::<LittleEndian>(g.n() as u32)?;
    w.write_f64::<LittleEndian>(state.time)?;
    w.write_f64::<LittleEndian>(params.alpha.to_f64())?;
    w.write_f64::<LittleEndian>(params.alpha_m.to_f64())?;
    w.write_u32::<LittleEndian>(if state.b.is_some() { 2 } else { 1 })?;
    w.write_u32::<LittleEndian>(LAYOUT_HALF_SPECTRUM)?;
    w.write_u32::<LittleEndian>(state.u.ncomp() as u32)?;
    write_field(&mut w, &state.u)?;
    if let Some(b) = &state.b {
        write_field(&mut w, b)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads and validates the header only.
pub fn read_header(r: &mut impl Read) -> Result<SnapshotHeader, SnapshotError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| SnapshotError::BadMagic)?;
    if &magic != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let mut rest = [0u8; HEADER_LEN - 8];
    r.read_exact(&mut rest).map_err(|_| SnapshotError::Truncated {
        expected: HEADER_LEN as u64,
        found: 8,
    })?;
    let mut c = &rest[..];
    let version = c.read_u32::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(SnapshotError::UnsupportedVersion { found: version });
    }
    let h = SnapshotHeader {
        version,
        dim: c.read_u32::<LittleEndian>()?,
        n: c.read_u32::<LittleEndian>()?,
        time: c.read_f64::<LittleEndian>()?,
        alpha: c.read_f64::<LittleEndian>()?,
        alpha_m: c.read_f64::<LittleEndian>()?,
        field_count: c.read_u32::<LittleEndian>()?,
        layout: c.read_u32::<LittleEndian>()?,
        components: c.read_u32::<LittleEndian>()?,
    };
    if h.layout != LAYOUT_HALF_SPECTRUM {
        return Err(SnapshotError::Invalid(format!("unknown layout code {}", h.layout)));
    }
    if !(1..=2).contains(&h.field_count) {
        return Err(SnapshotError::Invalid(format!("field count {}", h.field_count)));
    }
    if h.components != h.dim {
        return Err(SnapshotError::Invalid(format!("{} components for dim {}", h.components, h.dim)));
    }
    GridSpec::new(h.dim as usize, h.n as usize).map_err(|e| SnapshotError::Invalid(e.to_string()))?;
    Ok(h)
}

/// Reads a snapshot written by [`write_snapshot`].
pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let file = File::open(path)?;
    let size = file.metadata()?.len();
    let mut r = BufReader::new(file);
    let h = read_header(&mut r)?;
    let expected = HEADER_LEN as u64 + h.body_len();
    if size != expected {
        return Err(SnapshotError::Truncated { expected, found: size });
    }
    let grid = GridSpec::new(h.dim as usize, h.n as usize).expect("checked in header");
    let mut fields = Vec::new();
    for _ in 0..h.field_count {
        let mut comps = Vec::with_capacity(h.components as usize);
        for _ in 0..h.components {
            let mut c = Vec::with_capacity(grid.spectral_len());
            for _ in 0..grid.spectral_len() {
                let re = r.read_f64::<LittleEndian>()?;
                let im = r.read_f64::<LittleEndian>()?;
                c.push(Complex::new(re, im));
            }
            comps.push(c);
        }
        fields.push(SpectralField::from_components(grid, comps).map_err(|e| SnapshotError::Invalid(e.to_string()))?);
    }
    let b = if fields.len() == 2 { fields.pop() } else { None };
    let u = fields.pop().expect("at least one field");
    let params = VoigtParams::new(h.alpha, h.alpha_m).map_err(|e| SnapshotError::Invalid(e.to_string()))?;
    Ok(Snapshot {
        state: SimState { time: h.time, u, b },
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::random_analytic;

    fn sample() -> (SimState<f64>, VoigtParams<f64>) {
        let g = GridSpec::new(3, 8).unwrap();
        let u = random_analytic::<f64>(g, 3, 0.1, 0.5).unwrap();
        let b = random_analytic::<f64>(g, 4, 0.1, 0.25).unwrap();
        let mut s = SimState::with_magnetic(u, b);
        s.time = 0.123456789;
        (s, VoigtParams::new(0.1, 0.05).unwrap())
    }

    fn bits(f: &SpectralField<f64>) -> Vec<(u64, u64)> {
        f.components()
            .iter()
            .flatten()
            .map(|z| (z.re.to_bits(), z.im.to_bits()))
            .collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.bin");
        let (s, params) = sample();
        write_snapshot(&s, &params, &p).unwrap();
        let back = read_snapshot(&p).unwrap();
        assert_eq!(back.state.time.to_bits(), s.time.to_bits());
        assert_eq!(bits(&back.state.u), bits(&s.u));
        assert_eq!(bits(back.state.b.as_ref().unwrap()), bits(s.b.as_ref().unwrap()));
        assert_eq!(back.params, params);
        assert_eq!(
            std::fs::metadata(&p).unwrap().len(),
            HEADER_LEN as u64 + 2 * 3 * 8 * 8 * 5 * 16
        );
    }

    #[test]
    fn corrupt_files_give_typed_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.bin");
        let (s, params) = sample();
        write_snapshot(&s, &params, &p).unwrap();
        let good = std::fs::read(&p).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(read_snapshot(&p), Err(SnapshotError::BadMagic)));

        let mut bad = good.clone();
        bad[8..12].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(read_snapshot(&p), Err(SnapshotError::UnsupportedVersion { found: 2 })));

        std::fs::write(&p, &good[..good.len() - 5]).unwrap();
        assert!(matches!(read_snapshot(&p), Err(SnapshotError::Truncated { .. })));
        std::fs::write(&p, &good[..20]).unwrap();
        assert!(matches!(read_snapshot(&p), Err(SnapshotError::Truncated { .. })));
    }
}
