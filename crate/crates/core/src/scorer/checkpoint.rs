//! Binary checkpoints.
//!
//! Layout (little-endian): magic `SIMRELCK`, format version `u32`, config
//! JSON length `u64` and bytes, parameter count `u64`, parameters as `f32`
//! in tensor order, CRC32 of everything before it.

use std::fs;
use std::path::Path;

use super::features::FeatureVariant;
use super::model::{ModelConfig, Params, ScorerModel};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SIMRELCK";
pub const FORMAT_VERSION: u32 = 1;

pub fn to_bytes(model: &ScorerModel) -> Result<Vec<u8>> {
    let config = serde_json::to_vec(&model.config)?;
    let mut buf = Vec::with_capacity(32 + config.len() + 4 * model.params.count());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(config.len() as u64).to_le_bytes());
    buf.extend_from_slice(&config);
    buf.extend_from_slice(&(model.params.count() as u64).to_le_bytes());
    for t in model.params.tensors() {
        for &v in t {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Checkpoint("unexpected end of file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<ScorerModel> {
    if buf.len() < MAGIC.len() + 4 || &buf[..8] != MAGIC {
        return Err(Error::Checkpoint("not a scorer checkpoint (bad magic)".into()));
    }
    let body_len = buf.len() - 4;
    let stored = u32::from_le_bytes(buf[body_len..].try_into().unwrap());
    if crc32fast::hash(&buf[..body_len]) != stored {
        return Err(Error::Checkpoint("checksum mismatch (file truncated or corrupted)".into()));
    }
    let mut r = Reader {
        buf: &buf[..body_len],
        pos: 8,
    };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let config_len = r.u64()? as usize;
    let config: ModelConfig = serde_json::from_slice(r.take(config_len)?)?;
    let count = r.u64()? as usize;
    let expected = config.architecture.param_count();
    if count != expected {
        return Err(Error::Checkpoint(format!(
            "parameter count {count} does not match architecture ({expected})"
        )));
    }
    let mut params = Params::zeros(&config.architecture);
    for t in params.tensors_mut() {
        for v in t.iter_mut() {
            *v = f32::from_le_bytes(r.take(4)?.try_into().unwrap()) as f64;
        }
    }
    if r.pos != body_len {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    Ok(ScorerModel { config, params })
}

pub fn save_checkpoint(model: &ScorerModel, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ScorerModel> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&buf)
}

/// Loads a checkpoint and insists that it was trained with `variant`.
pub fn load_checkpoint_expecting(path: &Path, variant: FeatureVariant) -> Result<ScorerModel> {
    let model = load_checkpoint(path)?;
    if model.config.variant != variant {
        return Err(Error::ConfigMismatch(format!(
            "checkpoint uses feature variant {}, configuration asks for {variant}",
            model.config.variant
        )));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::super::model::Mode;
    use super::*;

    fn model(variant: FeatureVariant) -> ScorerModel {
        ScorerModel::init(ModelConfig::new("glove-test", 3, variant, true, 42), 42)
    }

    #[test]
    fn round_trip_is_bitwise() {
        let m = model(FeatureVariant::Appendix);
        let back = from_bytes(&to_bytes(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        let x: Vec<f64> = (0..m.input_dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = m.forward(&x, Mode::Eval).unwrap();
        let b = back.forward(&x, Mode::Eval).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }

    #[test]
    fn truncated_file_fails_checksum() {
        let bytes = to_bytes(&model(FeatureVariant::Appendix)).unwrap();
        let err = from_bytes(&bytes[..bytes.len() - 9]).unwrap_err();
        assert!(matches!(err, Error::Checkpoint(ref m) if m.contains("checksum")), "{err}");
    }

    #[test]
    fn version_mismatch_is_reported() {
        let mut bytes = to_bytes(&model(FeatureVariant::Appendix)).unwrap();
        bytes[8] = 9;
        let n = bytes.len() - 4;
        let crc = crc32fast::hash(&bytes[..n]);
        bytes[n..].copy_from_slice(&crc.to_le_bytes());
        let err = from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("version 9"), "{err}");
    }

    #[test]
    fn cross_variant_load_is_config_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&model(FeatureVariant::Maintext), &path).unwrap();
        assert!(matches!(
            load_checkpoint_expecting(&path, FeatureVariant::Appendix),
            Err(Error::ConfigMismatch(_))
        ));
        assert!(load_checkpoint_expecting(&path, FeatureVariant::Maintext).is_ok());
    }
}
