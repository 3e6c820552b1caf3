//! TCNM checkpoints (little-endian): `b"TCNM"`, version `u32`, then
//! length-prefixed (`u64`) architecture tag and config text, class count
//! `u64`, input dims `u64`, training fps `f64`, tensor count `u64`, and per
//! tensor a length-prefixed name, rank `u32`, `u64` dims and `f64` values.

use super::model::{ModelParams, NamedTensor};
use super::{ArchConfig, ArchTag, TcnError};
use crate::keyval::KeyValFile;
use std::io::{Read, Write};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"TCNM";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u64).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

pub fn save_model(params: &ModelParams, mut out: impl Write) -> Result<(), TcnError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    put_str(&mut buf, params.config.tag().as_str());
    put_str(&mut buf, &params.config.to_text());
    buf.extend_from_slice(&(params.n_classes as u64).to_le_bytes());
    buf.extend_from_slice(&(params.input_dims as u64).to_le_bytes());
    buf.extend_from_slice(&params.fps_at_train.to_le_bytes());
    buf.extend_from_slice(&(params.tensors.len() as u64).to_le_bytes());
    for t in &params.tensors {
        put_str(&mut buf, &t.name);
        buf.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &t.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], TcnError> {
        if n > self.bytes.len() {
            return Err(TcnError::Checkpoint("truncated".into()));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, TcnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<usize, TcnError> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| TcnError::Checkpoint(format!("size {v} overflows")))
    }

    fn f64(&mut self) -> Result<f64, TcnError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, TcnError> {
        let n = self.u64()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| TcnError::Checkpoint("string is not UTF-8".into()))
    }
}

pub fn load_model(mut input: impl Read) -> Result<ModelParams, TcnError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut r = Reader { bytes: &bytes };
    if r.take(4).map_err(|_| TcnError::Checkpoint("not a TCNM file".into()))? != CHECKPOINT_MAGIC {
        return Err(TcnError::Checkpoint("not a TCNM file".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(TcnError::Checkpoint(format!("version {version} is not supported")));
    }
    let tag_name = r.string()?;
    let tag = ArchTag::parse(&tag_name).ok_or_else(|| TcnError::Checkpoint(format!("unknown arch `{tag_name}`")))?;
    let text = r.string()?;
    let file = KeyValFile::parse(&text).map_err(|e| TcnError::Checkpoint(e.to_string()))?;
    let config = ArchConfig::from_keyval(&file, "", Some(tag))?;
    let n_classes = r.u64()?;
    let input_dims = r.u64()?;
    let fps_at_train = r.f64()?;
    let count = r.u64()?;
    let mut tensors = Vec::new();
    for _ in 0..count {
        let name = r.string()?;
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .filter(|n| n.checked_mul(8).is_some_and(|b| b <= r.bytes.len()))
            .ok_or_else(|| TcnError::Checkpoint(format!("tensor `{name}` is truncated")))?;
        let data = r.take(n * 8)?.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        tensors.push(NamedTensor { name, shape, data });
    }
    if !r.bytes.is_empty() {
        return Err(TcnError::Checkpoint(format!("{} trailing bytes", r.bytes.len())));
    }
    let params = ModelParams { config, n_classes, input_dims, fps_at_train, tensors };
    params.validate()?;
    Ok(params)
}
