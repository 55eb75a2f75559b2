//! Probe checkpoint: one JSON header line, a newline, then `B` as raw
//! little-endian `f32`, row-major `[rank, hidden_dim]`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ProbeError, StructuralProbe, TrainConfig};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "gpprobe-structural-probe-v1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    k: usize,
    layer: usize,
    hidden_dim: usize,
    seed: u64,
    config: TrainConfig,
}

pub fn write_checkpoint(probe: &StructuralProbe, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let header = Header {
        format: CHECKPOINT_FORMAT.into(),
        k: probe.rank(),
        layer: probe.layer(),
        hidden_dim: probe.hidden_dim(),
        seed: probe.config().seed,
        config: probe.config().clone(),
    };
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    for w in probe.weights() {
        bytes.extend_from_slice(&(*w as f32).to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<StructuralProbe> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_checkpoint(&bytes)?)
}

fn parse_checkpoint(bytes: &[u8]) -> Result<StructuralProbe, ProbeError> {
    let bad = |m: String| ProbeError::Checkpoint(m);
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header line".into()))?;
    let header: Header =
        serde_json::from_slice(&bytes[..newline]).map_err(|e| bad(format!("header: {e}")))?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(bad(format!("unknown format {:?}", header.format)));
    }
    if header.config.rank != header.k {
        return Err(bad(format!(
            "header k {} disagrees with config rank {}",
            header.k, header.config.rank
        )));
    }
    let payload = &bytes[newline + 1..];
    let expected = header.k * header.hidden_dim * 4;
    if payload.len() != expected {
        return Err(bad(format!("{} weight bytes, expected {expected}", payload.len())));
    }
    let weights = crate::tensor::f32_from_le_bytes(payload)
        .into_iter()
        .map(f64::from)
        .collect();
    StructuralProbe::new(header.k, header.hidden_dim, header.layer, header.config, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let cfg = TrainConfig {
            rank: 2,
            seed: 5,
            ..TrainConfig::default()
        };
        let probe = StructuralProbe::new(2, 3, 4, cfg, vec![0.5, -1.25, 2.0, 0.0, 3.5, -0.125]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("probe.bin");
        write_checkpoint(&probe, &path).unwrap();
        assert_eq!(read_checkpoint(&path).unwrap(), probe);

        let mut bytes = std::fs::read(&path).unwrap();
        bytes.pop();
        assert!(matches!(parse_checkpoint(&bytes), Err(ProbeError::Checkpoint(_))));
        assert!(parse_checkpoint(b"{}").is_err());
    }
}
