//! Binary checkpoint container.
//!
//! ```text
//! "GTCK" u8:version
//! u32 header_len, header_len bytes of JSON
//! u32 param_count
//! per parameter: u16 name_len, name, u8 ndim, ndim × u64 dims, f64 values
//! ```
//! All integers and floats are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::{Array, ParamStore};

const MAGIC: &[u8; 4] = b"GTCK";
const VERSION: u8 = 1;

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub header: serde_json::Value,
    pub params: ParamStore,
}

pub fn encode_checkpoint(header: &serde_json::Value, params: &ParamStore) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    let json = serde_json::to_vec(header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in params.iter() {
        let name = p.name.as_bytes();
        let len = u16::try_from(name.len()).map_err(|_| Error::Checkpoint(format!("name too long: {}", p.name)))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name);
        out.push(p.value.ndim() as u8);
        for &d in p.value.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = bytes;
    let mut magic = [0u8; 5];
    read_exact(&mut r, &mut magic)?;
    if &magic[..4] != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    if magic[4] != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", magic[4])));
    }
    let hlen = read_u32(&mut r)? as usize;
    let mut json = vec![0u8; hlen];
    read_exact(&mut r, &mut json)?;
    let header = serde_json::from_slice(&json).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let count = read_u32(&mut r)?;
    let mut params = ParamStore::new();
    for _ in 0..count {
        let mut b2 = [0u8; 2];
        read_exact(&mut r, &mut b2)?;
        let mut name = vec![0u8; u16::from_le_bytes(b2) as usize];
        read_exact(&mut r, &mut name)?;
        let name = String::from_utf8(name).map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?;
        let mut b1 = [0u8; 1];
        read_exact(&mut r, &mut b1)?;
        let mut shape = Vec::with_capacity(b1[0] as usize);
        for _ in 0..b1[0] {
            let mut b8 = [0u8; 8];
            read_exact(&mut r, &mut b8)?;
            shape.push(u64::from_le_bytes(b8) as usize);
        }
        let n: usize = shape.iter().product();
        if n.saturating_mul(8) > r.len() {
            return Err(Error::Checkpoint(format!("truncated values for {name}")));
        }
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let mut b8 = [0u8; 8];
            read_exact(&mut r, &mut b8)?;
            data.push(f64::from_le_bytes(b8));
        }
        params
            .add(name, Array::new(shape, data)?)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
    }
    if !r.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", r.len())));
    }
    Ok(Checkpoint { header, params })
}

pub fn save_checkpoint(path: &Path, header: &serde_json::Value, params: &ParamStore) -> Result<String> {
    let bytes = encode_checkpoint(header, params)?;
    std::fs::File::create(path)?.write_all(&bytes)?;
    Ok(sha256_hex(&bytes))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_checkpoint(&bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    if r.len() < buf.len() {
        return Err(Error::Checkpoint("unexpected end of checkpoint".into()));
    }
    buf.copy_from_slice(&r[..buf.len()]);
    *r = &r[buf.len()..];
    Ok(())
}

fn read_u32(r: &mut &[u8]) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> ParamStore {
        let mut s = ParamStore::new();
        s.add("a.w", Array::matrix(2, 3, vec![1.0, -2.5, 3.25, 0.0, f64::MIN_POSITIVE, 1e300]).unwrap())
            .unwrap();
        s.add("scalar", Array::scalar(7.0)).unwrap();
        s
    }

    #[test]
    fn round_trip_is_exact() {
        let header = serde_json::json!({"d": 8, "layers": 2});
        let bytes = encode_checkpoint(&header, &store()).unwrap();
        let ck = decode_checkpoint(&bytes).unwrap();
        assert_eq!(ck.header, header);
        let names: Vec<_> = ck.params.iter().map(|p| p.name.clone()).collect();
        assert_eq!(names, vec!["a.w", "scalar"]);
        for (a, b) in ck.params.iter().zip(store().iter()) {
            assert_eq!(a.value.shape(), b.value.shape());
            assert_eq!(a.value.data(), b.value.data());
        }
        assert_eq!(encode_checkpoint(&ck.header, &ck.params).unwrap(), bytes);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let bytes = encode_checkpoint(&serde_json::json!({}), &store()).unwrap();
        assert!(decode_checkpoint(&bytes[..bytes.len() - 3]).is_err());
        assert!(decode_checkpoint(b"nope").is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_checkpoint(&extra).is_err());
    }
}
