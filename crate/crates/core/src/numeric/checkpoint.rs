use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::Tensor;

const MAGIC: &[u8; 4] = b"MFCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

/// Write a named-tensor container: magic, version, config echo, then each
/// tensor as (name, rank, dims, f32 little-endian payload). The encoding is
/// fully explicit so files are bit-exact across platforms.
pub fn write_checkpoint(
    path: &Path,
    config_echo: &str,
    tensors: &BTreeMap<String, Tensor>,
) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    let echo = config_echo.as_bytes();
    w.write_all(&(echo.len() as u32).to_le_bytes())?;
    w.write_all(echo)?;
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, tensor) in tensors {
        let nb = name.as_bytes();
        w.write_all(&(nb.len() as u32).to_le_bytes())?;
        w.write_all(nb)?;
        w.write_all(&(tensor.shape().len() as u32).to_le_bytes())?;
        for &dim in tensor.shape() {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        for &v in tensor.data() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(String, BTreeMap<String, Tensor>), CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let echo_len = read_u32(&mut r)? as usize;
    let mut echo = vec![0u8; echo_len];
    r.read_exact(&mut echo)?;
    let echo = String::from_utf8(echo)
        .map_err(|_| CheckpointError::Corrupt("config echo is not utf-8".into()))?;
    let count = read_u32(&mut r)? as usize;
    let mut tensors = BTreeMap::new();
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| CheckpointError::Corrupt("tensor name is not utf-8".into()))?;
        let rank = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut r)? as usize);
        }
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut buf = [0u8; 4];
        for _ in 0..len {
            r.read_exact(&mut buf)?;
            data.push(f32::from_le_bytes(buf) as f64);
        }
        let tensor = Tensor::new(shape, data)
            .map_err(|e| CheckpointError::Corrupt(format!("tensor {name}: {e}")))?;
        tensors.insert(name, tensor);
    }
    Ok((echo, tensors))
}

fn read_u32(r: &mut impl Read) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_f32_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ckpt");
        let mut tensors = BTreeMap::new();
        tensors.insert(
            "w".to_string(),
            Tensor::from_rows(&[vec![1.5, -2.25], vec![0.0, 3.75]]).unwrap(),
        );
        tensors.insert("b".to_string(), Tensor::new(vec![2], vec![0.5, -0.5]).unwrap());
        write_checkpoint(&path, "k = v\n", &tensors).unwrap();
        let (echo, loaded) = read_checkpoint(&path).unwrap();
        assert_eq!(echo, "k = v\n");
        assert!(loaded["w"].bit_eq(&tensors["w"]));
        assert!(loaded["b"].bit_eq(&tensors["b"]));
    }

    #[test]
    fn rejects_non_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk");
        std::fs::write(&path, b"not a checkpoint").unwrap();
        assert!(matches!(
            read_checkpoint(&path),
            Err(CheckpointError::BadMagic)
        ));
    }
}
