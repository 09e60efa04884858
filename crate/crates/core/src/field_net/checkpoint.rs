//! Binary checkpoint of a field-net (and optionally its optimizer state).
//!
//! Layout, all little-endian:
//!
//! ```text
//! b"ISNG" | version u32
//! num_layers u32 | hidden_dim u32 | input_dim u32 | alpha f64 | theta_id f64 | flags u32
//! num_arrays u32, then per array: rank u32 | dims u32 x rank | f64 payload (column-major)
//! has_training u8, then if 1: epoch u64 | best_val f64 | adam_step u64 | 2 x num_arrays arrays (m, v)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{FieldNetConfig, FieldNetParams};
use crate::error::{Error, Result};
use crate::trainer::AdamState;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"ISNG";
pub const CHECKPOINT_VERSION: u32 = 1;

const FLAG_SHARING: u32 = 1;
const FLAG_CENTER: u32 = 2;
const FLAG_ZERO_SUM: u32 = 4;

/// Everything needed to resume training.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingState {
    /// Epochs completed.
    pub epoch: u64,
    pub best_validation: f64,
    pub adam: AdamState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: FieldNetConfig,
    pub params: FieldNetParams,
    pub training: Option<TrainingState>,
}

impl Checkpoint {
    pub fn new(config: FieldNetConfig, params: FieldNetParams) -> Self {
        Self {
            config,
            params,
            training: None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(&mut &bytes[..])
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let c = &self.config;
        w.write_all(&CHECKPOINT_MAGIC)?;
        put_u32(w, CHECKPOINT_VERSION)?;
        put_u32(w, dim(c.num_layers)?)?;
        put_u32(w, dim(c.hidden_dim)?)?;
        put_u32(w, dim(c.input_dim)?)?;
        put_f64(w, c.alpha)?;
        put_f64(w, c.theta_id)?;
        let mut flags = 0;
        if c.weight_sharing {
            flags |= FLAG_SHARING;
        }
        if c.center_features {
            flags |= FLAG_CENTER;
        }
        if c.zero_sum_output {
            flags |= FLAG_ZERO_SUM;
        }
        put_u32(w, flags)?;
        write_params(w, &self.params)?;
        match &self.training {
            None => w.write_all(&[0])?,
            Some(t) => {
                w.write_all(&[1])?;
                put_u64(w, t.epoch)?;
                put_f64(w, t.best_validation)?;
                put_u64(w, t.adam.step)?;
                write_params(w, &t.adam.m)?;
                write_params(w, &t.adam.v)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::InvalidData("not a field-net checkpoint (bad magic)".into()));
        }
        let version = get_u32(r)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::InvalidData(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let num_layers = get_u32(r)? as usize;
        let hidden_dim = get_u32(r)? as usize;
        let input_dim = get_u32(r)? as usize;
        let alpha = get_f64(r)?;
        let theta_id = get_f64(r)?;
        let flags = get_u32(r)?;
        let config = FieldNetConfig {
            num_layers,
            hidden_dim,
            alpha,
            theta_id,
            weight_sharing: flags & FLAG_SHARING != 0,
            input_dim,
            center_features: flags & FLAG_CENTER != 0,
            zero_sum_output: flags & FLAG_ZERO_SUM != 0,
        };
        config
            .validate()
            .map_err(|e| Error::InvalidData(format!("checkpoint config: {e}")))?;
        let params = read_params(r, &config)?;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag).map_err(truncated)?;
        let training = match flag[0] {
            0 => None,
            1 => {
                let epoch = get_u64(r)?;
                let best_validation = get_f64(r)?;
                let step = get_u64(r)?;
                let m = read_params(r, &config)?;
                let v = read_params(r, &config)?;
                Some(TrainingState {
                    epoch,
                    best_validation,
                    adam: AdamState { step, m, v },
                })
            }
            other => {
                return Err(Error::InvalidData(format!(
                    "bad training-state flag {other}"
                )))
            }
        };
        Ok(Self {
            config,
            params,
            training,
        })
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    ckpt.write_to(&mut f)?;
    f.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    Checkpoint::read_from(&mut f)
}

fn dim(x: usize) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::InvalidParameter(format!("dimension {x} exceeds u32")))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::InvalidData("checkpoint is truncated".into())
    } else {
        Error::Io(e)
    }
}

fn put_u32<W: Write>(w: &mut W, x: u32) -> Result<()> {
    Ok(w.write_all(&x.to_le_bytes())?)
}

fn put_u64<W: Write>(w: &mut W, x: u64) -> Result<()> {
    Ok(w.write_all(&x.to_le_bytes())?)
}

fn put_f64<W: Write>(w: &mut W, x: f64) -> Result<()> {
    Ok(w.write_all(&x.to_le_bytes())?)
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

fn write_array<W: Write>(w: &mut W, dims: &[usize], data: &[f64]) -> Result<()> {
    put_u32(w, dims.len() as u32)?;
    for &d in dims {
        put_u32(w, dim(d)?)?;
    }
    for &x in data {
        put_f64(w, x)?;
    }
    Ok(())
}

fn read_array<R: Read>(r: &mut R, expected: &[usize]) -> Result<Vec<f64>> {
    let rank = get_u32(r)? as usize;
    let mut dims = Vec::with_capacity(rank.min(8));
    for _ in 0..rank {
        dims.push(get_u32(r)? as usize);
    }
    if dims != expected {
        return Err(Error::InvalidData(format!(
            "checkpoint array has dims {dims:?}, expected {expected:?}"
        )));
    }
    let len: usize = dims.iter().product();
    (0..len).map(|_| get_f64(r)).collect()
}

fn write_params<W: Write>(w: &mut W, p: &FieldNetParams) -> Result<()> {
    put_u32(w, (4 + p.layer_weights.len()) as u32)?;
    let e = &p.embed_weight;
    write_array(w, &[e.nrows(), e.ncols()], e.as_slice())?;
    write_array(w, &[p.embed_bias.len()], p.embed_bias.as_slice())?;
    for lw in &p.layer_weights {
        write_array(w, &[lw.nrows(), lw.ncols()], lw.as_slice())?;
    }
    write_array(w, &[p.head_weight.len()], p.head_weight.as_slice())?;
    write_array(w, &[], &[p.head_bias])
}

fn read_params<R: Read>(r: &mut R, config: &FieldNetConfig) -> Result<FieldNetParams> {
    let template = FieldNetParams::zeros(config);
    let count = get_u32(r)? as usize;
    if count != 4 + template.layer_weights.len() {
        return Err(Error::InvalidData(format!(
            "checkpoint holds {count} arrays, config needs {}",
            4 + template.layer_weights.len()
        )));
    }
    let (hd, id) = (config.hidden_dim, config.input_dim);
    let embed_weight = DMatrix::from_vec(hd, id, read_array(r, &[hd, id])?);
    let embed_bias = DVector::from_vec(read_array(r, &[hd])?);
    let layer_weights = (0..template.layer_weights.len())
        .map(|_| Ok(DMatrix::from_vec(hd, hd, read_array(r, &[hd, hd])?)))
        .collect::<Result<_>>()?;
    let head_weight = DVector::from_vec(read_array(r, &[hd])?);
    let head_bias = read_array(r, &[])?[0];
    Ok(FieldNetParams {
        embed_weight,
        embed_bias,
        layer_weights,
        head_weight,
        head_bias,
    })
}
