//! Checkpoint snapshot and its binary file.
//!
//! Layout (little-endian): magic `PBCK`; u32 format version; u8 label-space
//! tag; u8 readout tag; u32 D, H, P, A; u32 feature schema version; 32-byte
//! SHA-256 config digest; u64 parameter count; parameters as f32 in
//! [`Layout`](super::network::Layout) block order; Adam first and second
//! moments as f32 in the same order; u64 Adam step.
//!
//! Input weight blocks are stored input-major (`D × 4H`), recurrent blocks
//! hidden-major (`H × 4H`), head blocks class-major (`K × F`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SequenceSample;
use crate::taxonomy::LabelSpace;

use super::network::{Logits, Network, NetworkSpec, Readout};
use super::train::EpochRecord;

pub const MAGIC: &[u8; 4] = b"PBCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: Network,
    pub schema_version: u32,
    /// Hex SHA-256 of the training configuration.
    pub config_digest: String,
    pub adam: AdamState,
}

impl Checkpoint {
    pub fn new(network: Network, schema_version: u32, config_digest: String) -> Self {
        let adam = AdamState::new(network.param_count());
        Checkpoint { network, schema_version, config_digest, adam }
    }

    pub fn space(&self) -> LabelSpace {
        self.network.spec.space
    }

    /// Inference on one sample produced by a featurizer with
    /// `schema_version`.
    pub fn forward(&self, sample: &SequenceSample, schema_version: u32) -> Result<Logits> {
        if schema_version != self.schema_version {
            return Err(Error::SchemaMismatch { checkpoint: self.schema_version, features: schema_version });
        }
        self.network.forward(&sample.data, sample.rows)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let spec = &self.network.spec;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&[spec.space.tag(), spec.readout.tag()])?;
        for v in [spec.input_dim, spec.hidden, spec.classes(), spec.attention, self.schema_version as usize] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        w.write_all(&digest_bytes(&self.config_digest)?)?;
        w.write_all(&(self.network.param_count() as u64).to_le_bytes())?;
        for block in [&self.network.params, &self.adam.m, &self.adam.v] {
            for &x in block.iter() {
                w.write_all(&(x as f32).to_le_bytes())?;
            }
        }
        w.write_all(&self.adam.t.to_le_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a PBCK checkpoint".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let mut tags = [0u8; 2];
        r.read_exact(&mut tags)?;
        let space = LabelSpace::from_tag(tags[0]).ok_or_else(|| Error::Format(format!("bad label space tag {}", tags[0])))?;
        let readout = Readout::from_tag(tags[1]).ok_or_else(|| Error::Format(format!("bad readout tag {}", tags[1])))?;
        let input_dim = read_u32(&mut r)? as usize;
        let hidden = read_u32(&mut r)? as usize;
        let classes = read_u32(&mut r)? as usize;
        let attention = read_u32(&mut r)? as usize;
        let schema_version = read_u32(&mut r)?;
        if classes != space.cardinality() {
            return Err(Error::Format(format!("head size {classes} does not match {space:?}")));
        }
        let mut digest = [0u8; 32];
        r.read_exact(&mut digest)?;
        let config_digest: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let mut n = [0u8; 8];
        r.read_exact(&mut n)?;
        let n = u64::from_le_bytes(n) as usize;
        let spec = NetworkSpec { input_dim, hidden, attention, readout, space };
        let expected = Network::zeros(spec)?.param_count();
        if n != expected {
            return Err(Error::DimensionMismatch { expected, got: n });
        }
        let params = read_f32s(&mut r, n)?;
        let m = read_f32s(&mut r, n)?;
        let v = read_f32s(&mut r, n)?;
        let mut t = [0u8; 8];
        r.read_exact(&mut t)?;
        Ok(Checkpoint {
            network: Network::from_params(spec, params)?,
            schema_version,
            config_digest,
            adam: AdamState { m, v, t: u64::from_le_bytes(t) },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

fn digest_bytes(hex: &str) -> Result<[u8; 32]> {
    let mut out = [0u8; 32];
    if hex.len() != 64 {
        return Err(Error::Format(format!("config digest must be 64 hex chars, got {}", hex.len())));
    }
    for (i, byte) in out.iter_mut().enumerate() {
        *byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
            .map_err(|_| Error::Format("config digest is not hex".into()))?;
    }
    Ok(out)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect())
}

/// JSON sidecar written next to a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub label_space: LabelSpace,
    pub readout: Readout,
    pub input_dim: usize,
    pub hidden: usize,
    pub classes: usize,
    pub attention: usize,
    pub schema_version: u32,
    pub config_digest: String,
    pub param_count: usize,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

impl CheckpointMeta {
    pub fn new(ckpt: &Checkpoint, history: &[EpochRecord], best_epoch: usize) -> Self {
        let spec = &ckpt.network.spec;
        CheckpointMeta {
            format_version: FORMAT_VERSION,
            label_space: spec.space,
            readout: spec.readout,
            input_dim: spec.input_dim,
            hidden: spec.hidden,
            classes: spec.classes(),
            attention: spec.attention,
            schema_version: ckpt.schema_version,
            config_digest: ckpt.config_digest.clone(),
            param_count: ckpt.network.param_count(),
            best_epoch,
            history: history.to_vec(),
        }
    }
}
