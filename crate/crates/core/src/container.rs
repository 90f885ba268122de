//! `VTCF` binary container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! b"VTCF" | u32 version (=1) | u32 dim[0] | ... | u32 dim[rank-1]
//!         | f32 values, row-major, product(dims) entries
//!         | u32 label length | UTF-8 label bytes
//!         | optional trailer bytes
//! ```
//!
//! The rank is not stored; each reader knows the rank of what it reads
//! (frame matrices and feature tables are rank 2, VTC tensors rank 3).

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"VTCF";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub dims: Vec<u32>,
    pub values: Vec<f32>,
    pub label: String,
    pub trailer: Vec<u8>,
}

impl Container {
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let expected: usize = self.dims.iter().map(|&d| d as usize).product();
        assert_eq!(expected, self.values.len(), "dims do not match value count");
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for d in &self.dims {
            w.write_all(&d.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(self.label.len() as u32).to_le_bytes())?;
        w.write_all(self.label.as_bytes())?;
        w.write_all(&self.trailer)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(r: &mut R, rank: usize) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::io("<vtcf stream>", e))?;
        Self::from_bytes(&bytes, rank)
    }

    pub fn from_bytes(bytes: &[u8], rank: usize) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(Error::Format("missing VTCF magic".into()));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported VTCF version {version}")));
        }
        let dims = (0..rank).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
            .ok_or_else(|| Error::Format("VTCF dims overflow".into()))?;
        let raw = cur.take(
            count
                .checked_mul(4)
                .ok_or_else(|| Error::Format("VTCF dims overflow".into()))?,
        )?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let label_len = cur.u32()? as usize;
        let label = String::from_utf8(cur.take(label_len)?.to_vec())
            .map_err(|_| Error::Format("VTCF label is not UTF-8".into()))?;
        let trailer = bytes[cur.pos..].to_vec();
        Ok(Container {
            dims,
            values,
            label,
            trailer,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Format("truncated VTCF container".into())),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
