//! Binary model container.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `PGMODEL\0` |
//! | 4     | format version (u32) |
//! | 8     | format tag, NUL padded (`MPNN`, `LOGREG`) |
//! | 4 + n | header length (u32) and JSON header |
//! | 8     | parameter count (u64) |
//! | 8·k   | parameters as f64 |
//! | 32    | SHA-256 of every preceding byte |

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{LogRegModel, LOGREG_FEATURES};
use crate::geometry::GeometryConfig;
use crate::mpnn::{MpnnConfig, MpnnModel, MpnnParams};
use crate::optim::Parameters;
use crate::pitch::PitchSpec;

pub const MAGIC: &[u8; 8] = b"PGMODEL\0";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatTag {
    Mpnn,
    LogReg,
}

impl FormatTag {
    fn bytes(self) -> [u8; 8] {
        match self {
            FormatTag::Mpnn => *b"MPNN\0\0\0\0",
            FormatTag::LogReg => *b"LOGREG\0\0",
        }
    }

    fn parse(b: &[u8]) -> Option<Self> {
        [FormatTag::Mpnn, FormatTag::LogReg]
            .into_iter()
            .find(|t| t.bytes() == b)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelIoError {
    #[error("cannot access model file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("model format version {found} unsupported (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("checksum does not match file contents")]
    ChecksumFailure,
    #[error("expected a {expected:?} model, file holds {found}")]
    FormatMismatch { expected: FormatTag, found: String },
    #[error("file truncated or malformed: {0}")]
    Malformed(String),
    #[error("parameter payload does not fit the stored config: {0}")]
    ShapeMismatch(String),
    #[error("stored config differs from the expected one: {0}")]
    ConfigMismatch(String),
}

/// Context saved next to the parameters so inference rebuilds identical features.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureContext {
    pub geometry: GeometryConfig,
    pub pitch: PitchSpec,
}

#[derive(Serialize, Deserialize)]
struct Header<C> {
    config: C,
    features: FeatureContext,
}

fn encode<C: Serialize>(
    tag: FormatTag,
    config: &C,
    features: &FeatureContext,
    params: &[f64],
) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        config,
        features: features.clone(),
    })
    .expect("header serializes");
    let mut buf = Vec::with_capacity(64 + header.len() + 8 * params.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&tag.bytes());
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header);
    buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for v in params {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

struct Decoded<C> {
    config: C,
    features: FeatureContext,
    params: Vec<f64>,
}

fn take<'a>(b: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8], ModelIoError> {
    if b.len() < n {
        return Err(ModelIoError::Malformed(format!("missing {what}")));
    }
    let (head, rest) = b.split_at(n);
    *b = rest;
    Ok(head)
}

fn decode<C: DeserializeOwned>(
    bytes: &[u8],
    expected: FormatTag,
) -> Result<Decoded<C>, ModelIoError> {
    if bytes.len() < MAGIC.len() + CHECKSUM_LEN || !bytes.starts_with(MAGIC) {
        return Err(ModelIoError::BadMagic);
    }
    let (body, digest) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(ModelIoError::ChecksumFailure);
    }
    let mut b = &body[MAGIC.len()..];
    let version = u32::from_le_bytes(take(&mut b, 4, "version")?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(ModelIoError::VersionMismatch { found: version });
    }
    let tag = take(&mut b, 8, "format tag")?;
    match FormatTag::parse(tag) {
        Some(t) if t == expected => {}
        _ => {
            return Err(ModelIoError::FormatMismatch {
                expected,
                found: String::from_utf8_lossy(tag)
                    .trim_end_matches('\0')
                    .to_string(),
            })
        }
    }
    let hlen = u32::from_le_bytes(take(&mut b, 4, "header length")?.try_into().unwrap()) as usize;
    let header: Header<C> = serde_json::from_slice(take(&mut b, hlen, "header")?)
        .map_err(|e| ModelIoError::Malformed(format!("header: {e}")))?;
    let count =
        u64::from_le_bytes(take(&mut b, 8, "parameter count")?.try_into().unwrap()) as usize;
    if b.len() != count.saturating_mul(8) {
        return Err(ModelIoError::Malformed(format!(
            "payload holds {} bytes, header announces {count} parameters",
            b.len()
        )));
    }
    let params = b
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Decoded {
        config: header.config,
        features: header.features,
        params,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ModelIoError> {
    std::fs::write(path, bytes).map_err(|source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>, ModelIoError> {
    std::fs::read(path).map_err(|source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn mpnn_to_bytes(model: &MpnnModel, features: &FeatureContext) -> Vec<u8> {
    encode(
        FormatTag::Mpnn,
        &model.config,
        features,
        &model.params.flatten(),
    )
}

pub fn mpnn_from_bytes(bytes: &[u8]) -> Result<(MpnnModel, FeatureContext), ModelIoError> {
    let d: Decoded<MpnnConfig> = decode(bytes, FormatTag::Mpnn)?;
    d.config
        .validate()
        .map_err(|e| ModelIoError::Malformed(e.to_string()))?;
    let params = MpnnParams::from_flat(&d.config, &d.params)
        .map_err(|e| ModelIoError::ShapeMismatch(e.to_string()))?;
    let model = MpnnModel::from_parts(d.config, params)
        .map_err(|e| ModelIoError::ShapeMismatch(e.to_string()))?;
    Ok((model, d.features))
}

pub fn save_model(
    model: &MpnnModel,
    features: &FeatureContext,
    path: &Path,
) -> Result<(), ModelIoError> {
    write_file(path, &mpnn_to_bytes(model, features))
}

pub fn load_model(path: &Path) -> Result<(MpnnModel, FeatureContext), ModelIoError> {
    mpnn_from_bytes(&read_file(path)?)
}

/// Loads and insists the stored architecture matches `expected` (seed aside).
pub fn load_model_expecting(
    path: &Path,
    expected: &MpnnConfig,
) -> Result<(MpnnModel, FeatureContext), ModelIoError> {
    let (model, features) = load_model(path)?;
    let c = &model.config;
    if (
        c.hidden_dim,
        c.num_layers,
        c.mlp_depth,
        c.aggregator,
        c.activation,
    ) != (
        expected.hidden_dim,
        expected.num_layers,
        expected.mlp_depth,
        expected.aggregator,
        expected.activation,
    ) {
        return Err(ModelIoError::ConfigMismatch(format!(
            "file has hidden_dim {} / num_layers {} / {} aggregation, expected {} / {} / {}",
            c.hidden_dim,
            c.num_layers,
            c.aggregator.as_str(),
            expected.hidden_dim,
            expected.num_layers,
            expected.aggregator.as_str()
        )));
    }
    Ok((model, features))
}

pub fn save_logreg(
    model: &LogRegModel,
    features: &FeatureContext,
    path: &Path,
) -> Result<(), ModelIoError> {
    let cfg = serde_json::json!({ "features": LOGREG_FEATURES });
    write_file(
        path,
        &encode(FormatTag::LogReg, &cfg, features, &model.flatten()),
    )
}

pub fn load_logreg(path: &Path) -> Result<(LogRegModel, FeatureContext), ModelIoError> {
    let d: Decoded<serde_json::Value> = decode(&read_file(path)?, FormatTag::LogReg)?;
    if d.params.len() != LOGREG_FEATURES + 1 {
        return Err(ModelIoError::ShapeMismatch(format!(
            "{} parameters, expected {}",
            d.params.len(),
            LOGREG_FEATURES + 1
        )));
    }
    let model = LogRegModel {
        weights: d.params[..LOGREG_FEATURES].to_vec(),
        bias: d.params[LOGREG_FEATURES],
    };
    Ok((model, d.features))
}
