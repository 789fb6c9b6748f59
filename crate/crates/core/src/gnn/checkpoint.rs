//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! b"CGCK"  u8 version (1)  u8 kind (0 graphsage, 1 gcn)
//! u8 head flags (bit 0: ReLU head, bit 1: neighbor sum)  u32 hidden width
//! then for W1, W2, W3: u32 rows, u32 cols, rows*cols f64 row-major
//! ```

use std::fs;
use std::path::Path;

use super::matrix::DenseMatrix;
use super::model::{HeadOptions, ModelKind, ModelParameters};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CGCK";
const VERSION: u8 = 1;

pub fn write_checkpoint(params: &ModelParameters) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(match params.kind {
        ModelKind::GraphSage => 0,
        ModelKind::Gcn => 1,
    });
    out.push(u8::from(params.head.relu) | (u8::from(params.head.neighbor_sum) << 1));
    out.extend_from_slice(&(params.hidden as u32).to_le_bytes());
    for w in params.weights() {
        out.extend_from_slice(&(w.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(w.cols() as u32).to_le_bytes());
        for v in w.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        if self.bytes.len() < n {
            return Err("truncated checkpoint".into());
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u8(&mut self) -> std::result::Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_checkpoint(bytes: &[u8]) -> std::result::Result<ModelParameters, String> {
    let mut r = Reader { bytes };
    if r.take(4)? != MAGIC {
        return Err("bad magic bytes".into());
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let kind = match r.u8()? {
        0 => ModelKind::GraphSage,
        1 => ModelKind::Gcn,
        k => return Err(format!("unknown model kind {k}")),
    };
    let flags = r.u8()?;
    let head = HeadOptions {
        relu: flags & 1 != 0,
        neighbor_sum: flags & 2 != 0,
    };
    let hidden = r.u32()? as usize;
    let mut mats = Vec::with_capacity(3);
    for _ in 0..3 {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let n = rows.checked_mul(cols).ok_or("matrix dims overflow")?;
        if r.bytes.len() < n * 8 {
            return Err("truncated checkpoint".into());
        }
        let data = (0..n)
            .map(|_| r.f64())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        mats.push(DenseMatrix::from_vec(rows, cols, data).map_err(|e| e.to_string())?);
    }
    if !r.bytes.is_empty() {
        return Err(format!("{} trailing bytes", r.bytes.len()));
    }
    let w3 = mats.pop().unwrap();
    let w2 = mats.pop().unwrap();
    let w1 = mats.pop().unwrap();
    let params = ModelParameters {
        kind,
        hidden,
        head,
        w1,
        w2,
        w3,
    };
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

pub fn save_checkpoint(params: &ModelParameters, path: &Path) -> Result<()> {
    fs::write(path, write_checkpoint(params)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParameters> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes).map_err(|msg| Error::Format {
        path: path.into(),
        msg,
    })
}
