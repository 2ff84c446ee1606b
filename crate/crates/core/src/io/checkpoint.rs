//! Checkpoint files: 8-byte magic, u32 header length, JSON header, then the
//! parameters as little-endian f32 in manifest order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sample_file::{read_f32s, read_u32};
use crate::error::{Error, Result};
use crate::nn::{ModelParams, NetworkConfig, ParamSpec, ParamTensor};
use crate::train::{Checkpoint, Standardization};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SARCKPT1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    network: NetworkConfig,
    parameters: Vec<ParamSpec>,
    standardization: Standardization,
    epoch: usize,
    val_loss: f64,
}

pub fn encode_checkpoint(c: &Checkpoint) -> Result<Vec<u8>> {
    c.params.check_layout(&c.network)?;
    let header = Header {
        format_version: CHECKPOINT_VERSION,
        network: c.network,
        parameters: c.params.specs(),
        standardization: c.standardization.clone(),
        epoch: c.epoch,
        val_loss: c.val_loss,
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(12 + json.len() + 4 * c.params.count());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for t in &c.params.tensors {
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 12 {
        return Err(Error::Truncated {
            expected: 12,
            actual: bytes.len(),
        });
    }
    if &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a checkpoint file".into()));
    }
    let hlen = read_u32(bytes, 8) as usize;
    if bytes.len() < 12 + hlen {
        return Err(Error::Truncated {
            expected: 12 + hlen,
            actual: bytes.len(),
        });
    }
    let header: Header = serde_json::from_slice(&bytes[12..12 + hlen])?;
    if header.format_version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch {
            expected: CHECKPOINT_VERSION,
            found: header.format_version,
        });
    }
    let total: usize = header.parameters.iter().map(ParamSpec::len).sum();
    let expected = 12 + hlen + 4 * total;
    if bytes.len() != expected {
        if bytes.len() < expected {
            return Err(Error::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        return Err(Error::Format(
            "trailing bytes after checkpoint payload".into(),
        ));
    }
    let mut values = read_f32s(&bytes[12 + hlen..]).into_iter();
    let tensors = header
        .parameters
        .iter()
        .map(|s| ParamTensor {
            name: s.name.clone(),
            shape: s.shape.clone(),
            data: values.by_ref().take(s.len()).collect(),
        })
        .collect();
    let params = ModelParams { tensors };
    params.check_layout(&header.network)?;
    Ok(Checkpoint {
        network: header.network,
        params,
        standardization: header.standardization,
        epoch: header.epoch,
        val_loss: header.val_loss,
    })
}

pub fn write_checkpoint(path: &Path, c: &Checkpoint) -> Result<()> {
    std::fs::write(path, encode_checkpoint(c)?)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Variant;
    use crate::scene::METADATA_DIM;
    use crate::train::ChannelStats;

    fn ckpt() -> Checkpoint {
        let network = crate::nn::micro_config(Variant::MetaSe);
        let s = |m: f64| ChannelStats {
            mean: m,
            std: 0.5 + m.abs(),
        };
        Checkpoint {
            network,
            params: ModelParams::init(&network, 3).unwrap(),
            standardization: Standardization {
                amplitude: s(1.0),
                real: s(0.0),
                imag: s(-0.1),
                target: s(2.2),
                metadata: [s(0.3); METADATA_DIM],
            },
            epoch: 4,
            val_loss: 0.125,
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let c = ckpt();
        let bytes = encode_checkpoint(&c).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(encode_checkpoint(&back).unwrap(), bytes);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let bytes = encode_checkpoint(&ckpt()).unwrap();
        assert!(matches!(
            decode_checkpoint(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_checkpoint(&bad), Err(Error::Format(_))));
    }
}
