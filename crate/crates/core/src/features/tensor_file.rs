//! Binary feature tensor file.
//!
//! Layout (little-endian): magic `PBF1`; u32 schema_version, n_samples,
//! max_T, dim; then per sample: u64 game_id, u8 profile index, u32 T and a
//! row-major `T × dim` block of f32.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::taxonomy::Profile;

use super::SequenceSample;

pub const MAGIC: &[u8; 4] = b"PBF1";

pub struct TensorFile {
    pub schema_version: u32,
    pub dim: usize,
    pub samples: Vec<SequenceSample>,
}

pub fn write_tensor_file<W: Write>(mut w: W, schema_version: u32, dim: usize, samples: &[SequenceSample]) -> Result<()> {
    let max_t = samples.iter().map(|s| s.rows).max().unwrap_or(0);
    w.write_all(MAGIC)?;
    for v in [schema_version, samples.len() as u32, max_t as u32, dim as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    for s in samples {
        if s.dim != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: s.dim });
        }
        w.write_all(&s.game_id.to_le_bytes())?;
        w.write_all(&[s.profile.index() as u8])?;
        w.write_all(&(s.rows as u32).to_le_bytes())?;
        for &x in &s.data {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_tensor_file<R: Read>(mut r: R) -> Result<TensorFile> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a PBF1 feature file".into()));
    }
    let schema_version = read_u32(&mut r)?;
    let n = read_u32(&mut r)? as usize;
    let max_t = read_u32(&mut r)? as usize;
    let dim = read_u32(&mut r)? as usize;
    let mut samples = Vec::with_capacity(n);
    let mut buf = Vec::new();
    for _ in 0..n {
        let mut id = [0u8; 8];
        r.read_exact(&mut id)?;
        let mut p = [0u8; 1];
        r.read_exact(&mut p)?;
        let rows = read_u32(&mut r)? as usize;
        if rows > max_t {
            return Err(Error::Format(format!("sample length {rows} exceeds max_T {max_t}")));
        }
        let profile = Profile::from_index(p[0] as usize)
            .ok_or_else(|| Error::Format(format!("bad profile index {}", p[0])))?;
        buf.resize(rows * dim * 4, 0);
        r.read_exact(&mut buf)?;
        let data = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        samples.push(SequenceSample {
            game_id: u64::from_le_bytes(id),
            profile,
            window_start: None,
            rows,
            dim,
            data,
        });
    }
    Ok(TensorFile { schema_version, dim, samples })
}

pub fn save(path: &Path, schema_version: u32, dim: usize, samples: &[SequenceSample]) -> Result<()> {
    write_tensor_file(BufWriter::new(File::create(path)?), schema_version, dim, samples)
}

pub fn load(path: &Path) -> Result<TensorFile> {
    read_tensor_file(BufReader::new(File::open(path)?))
}
