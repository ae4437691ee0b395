//! Flat little-endian parameter checkpoint.
//!
//! ```text
//! magic      8 bytes  "RXFNCKPT"
//! version    u32      (currently 1)
//! layers     u32
//! per layer:
//!   name_len u32, name (UTF-8)
//!   tensors  u32
//!   per tensor:
//!     ndim   u32, dims u64 * ndim
//!     values f64 * product(dims)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"RXFNCKPT";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct LayerBlock {
    pub name: String,
    pub tensors: Vec<Tensor>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub layers: Vec<LayerBlock>,
}

impl Checkpoint {
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.tensors.iter())
            .map(Tensor::len)
            .sum()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.layers.len() as u32).to_le_bytes())?;
        for layer in &self.layers {
            w.write_all(&(layer.name.len() as u32).to_le_bytes())?;
            w.write_all(layer.name.as_bytes())?;
            w.write_all(&(layer.tensors.len() as u32).to_le_bytes())?;
            for t in &layer.tensors {
                w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
                for d in t.shape() {
                    w.write_all(&(*d as u64).to_le_bytes())?;
                }
                for v in t.data() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let n_layers = read_u32(&mut r)? as usize;
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let name_len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::Checkpoint("layer name is not UTF-8".into()))?;
            let n_tensors = read_u32(&mut r)? as usize;
            let mut tensors = Vec::with_capacity(n_tensors);
            for _ in 0..n_tensors {
                let ndim = read_u32(&mut r)? as usize;
                let mut shape = Vec::with_capacity(ndim);
                for _ in 0..ndim {
                    let mut b = [0u8; 8];
                    r.read_exact(&mut b)?;
                    shape.push(u64::from_le_bytes(b) as usize);
                }
                let n: usize = shape.iter().product();
                let mut data = Vec::with_capacity(n);
                let mut b = [0u8; 8];
                for _ in 0..n {
                    r.read_exact(&mut b)?;
                    data.push(f64::from_le_bytes(b));
                }
                tensors.push(Tensor::new(shape, data)?);
            }
            layers.push(LayerBlock { name, tensors });
        }
        Ok(Self { layers })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
