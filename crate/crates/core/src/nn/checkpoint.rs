//! Checkpoint layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "RLXNCKPT"
//! version  u32
//! hlen     u64      length of the JSON header
//! header   hlen bytes of JSON (CheckpointHeader)
//! payload  3 * n_params f64: parameters, Adam m, Adam v
//! digest   32 bytes SHA-256 of everything above
//! ```
//!
//! Files are written to a temporary sibling and renamed into place.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::{Adam, AdamConfig, DuelingNet, Topology};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"RLXNCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub topology: Topology,
    pub input_scale: Vec<f64>,
    pub output_scale: f64,
    pub n_params: usize,
    pub adam: AdamConfig,
    pub adam_step: u64,
    /// Free-form run metadata (episode counter, seeds, ...).
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn save_checkpoint(net: &DuelingNet, opt: &Adam, meta: serde_json::Value, path: &Path) -> Result<()> {
    let n = net.n_params();
    if opt.m.len() != n || opt.v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: opt.m.len(),
        });
    }
    let header = CheckpointHeader {
        topology: net.topology.clone(),
        input_scale: net.input_scale.clone(),
        output_scale: net.output_scale,
        n_params: n,
        adam: opt.config,
        adam_step: opt.step,
        meta,
    };
    let header = serde_json::to_vec(&header)?;
    let mut buf = Vec::with_capacity(8 + 4 + 8 + header.len() + 24 * n + 32);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
    buf.extend_from_slice(&header);
    for x in net.params().iter().chain(&opt.m).chain(&opt.v) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);

    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &buf).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Load and verify a checkpoint. Returns the header alongside the network
/// and optimizer so callers can inspect the metadata.
pub fn load_checkpoint(path: &Path) -> Result<(DuelingNet, Adam, CheckpointHeader)> {
    let bad = |reason: String| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 + 4 + 8 + 32 {
        return Err(bad("file too short".into()));
    }
    if &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}, expected {CHECKPOINT_VERSION}")));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(bad("checksum mismatch (truncated or corrupt)".into()));
    }
    let hlen = u64::from_le_bytes(body[12..20].try_into().expect("8 bytes")) as usize;
    let header_bytes = body.get(20..20 + hlen).ok_or_else(|| bad("header truncated".into()))?;
    let header: CheckpointHeader =
        serde_json::from_slice(header_bytes).map_err(|e| bad(format!("bad header: {e}")))?;
    let payload = &body[20 + hlen..];
    let n = header.n_params;
    if payload.len() != 24 * n {
        return Err(bad(format!("payload holds {} bytes, expected {}", payload.len(), 24 * n)));
    }
    let floats: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut net = DuelingNet::new(header.topology.clone(), 0)
        .map_err(|e| bad(format!("bad topology: {e}")))?
        .with_scaling(header.input_scale.clone(), header.output_scale)
        .map_err(|e| bad(format!("bad scaling: {e}")))?;
    if net.n_params() != n {
        return Err(bad(format!("topology has {} parameters, header says {n}", net.n_params())));
    }
    net.set_params(&floats[..n])?;
    net.validate().map_err(|e| bad(e.to_string()))?;
    let opt = Adam {
        config: header.adam,
        m: floats[n..2 * n].to_vec(),
        v: floats[2 * n..].to_vec(),
        step: header.adam_step,
    };
    Ok((net, opt, header))
}

/// Load a checkpoint and insist on the given state and action dimensions.
pub fn load_checkpoint_for(path: &Path, input: usize, actions: usize) -> Result<(DuelingNet, Adam, CheckpointHeader)> {
    let loaded = load_checkpoint(path)?;
    let t = &loaded.0.topology;
    if t.input != input || t.actions != actions {
        return Err(Error::Checkpoint {
            path: path.to_path_buf(),
            reason: format!(
                "network maps {} inputs to {} actions, expected {input} to {actions}",
                t.input, t.actions
            ),
        });
    }
    Ok(loaded)
}
