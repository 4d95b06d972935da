//! JSON-lines snapshot files: a header line carrying the schema version,
//! then one pass per line.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::pitch::PitchSpec;
use crate::state::{GameState, PassLabel, PlayerId, PlayerState, Role, StateError};

pub const SCHEMA_VERSION: u32 = 1;

/// Ingestion aborts when more than this fraction of data lines is invalid.
pub const MAX_ERROR_FRACTION: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing or unreadable header line")]
    MissingHeader,
    #[error("schema version {found} unsupported (expected {SCHEMA_VERSION})")]
    SchemaVersionUnsupported { found: u64 },
    #[error("{bad} of {total} lines invalid, first at line {}: {}", first.line, first.reason)]
    TooManyErrors {
        bad: usize,
        total: usize,
        first: LineError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineError {
    /// 1-based, counting the header.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackDirection {
    #[default]
    LeftToRight,
    RightToLeft,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Header {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch: Option<PitchSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlayerRecord {
    id: PlayerId,
    x: f64,
    y: f64,
    #[serde(default)]
    vx: f64,
    #[serde(default)]
    vy: f64,
    #[serde(default)]
    ax: f64,
    #[serde(default)]
    ay: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    role: Option<Role>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Point {
    x: f64,
    y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PassRecord {
    frame_id: u64,
    timestamp: f64,
    passer_id: PlayerId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    receiver_id: Option<PlayerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pass_successful: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pass_label: Option<PassLabel>,
    #[serde(default, skip_serializing_if = "is_default_direction")]
    attack_direction: AttackDirection,
    attackers: Vec<PlayerRecord>,
    defenders: Vec<PlayerRecord>,
    ball: Point,
}

fn is_default_direction(d: &AttackDirection) -> bool {
    *d == AttackDirection::LeftToRight
}

const PASS_KEYS: &[&str] = &[
    "frame_id",
    "timestamp",
    "passer_id",
    "receiver_id",
    "pass_successful",
    "pass_label",
    "attack_direction",
    "attackers",
    "defenders",
    "ball",
];
const PLAYER_KEYS: &[&str] = &["id", "x", "y", "vx", "vy", "ax", "ay", "role"];
const POINT_KEYS: &[&str] = &["x", "y"];

fn unknown_keys(v: &Value) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut check = |obj: &Value, known: &[&str], prefix: &str| {
        if let Some(map) = obj.as_object() {
            for k in map.keys() {
                if !known.contains(&k.as_str()) {
                    out.insert(format!("{prefix}{k}"));
                }
            }
        }
    };
    check(v, PASS_KEYS, "");
    for side in ["attackers", "defenders"] {
        if let Some(list) = v.get(side).and_then(Value::as_array) {
            for p in list {
                check(p, PLAYER_KEYS, &format!("{side}[]."));
            }
        }
    }
    if let Some(b) = v.get("ball") {
        check(b, POINT_KEYS, "ball.");
    }
    out
}

impl PlayerRecord {
    fn from_state(p: &PlayerState, with_role: bool) -> Self {
        Self {
            id: p.id,
            x: p.pos[0],
            y: p.pos[1],
            vx: p.vel[0],
            vy: p.vel[1],
            ax: p.acc[0],
            ay: p.acc[1],
            role: with_role.then_some(p.role),
        }
    }

    fn into_state(self) -> PlayerState {
        PlayerState {
            id: self.id,
            pos: [self.x, self.y],
            vel: [self.vx, self.vy],
            acc: [self.ax, self.ay],
            role: self.role.unwrap_or_default(),
        }
    }
}

impl PassRecord {
    fn from_state(s: &GameState) -> Self {
        Self {
            frame_id: s.frame_id,
            timestamp: s.timestamp,
            passer_id: s.passer_id,
            receiver_id: s.receiver_id,
            pass_successful: s.pass_successful,
            pass_label: s.pass_label,
            attack_direction: AttackDirection::LeftToRight,
            attackers: s
                .attackers
                .iter()
                .map(|p| PlayerRecord::from_state(p, true))
                .collect(),
            defenders: s
                .defenders
                .iter()
                .map(|p| PlayerRecord::from_state(p, false))
                .collect(),
            ball: Point {
                x: s.ball[0],
                y: s.ball[1],
            },
        }
    }

    fn into_state(self, pitch: &PitchSpec) -> Result<GameState, StateError> {
        let mut s = GameState {
            frame_id: self.frame_id,
            timestamp: self.timestamp,
            attackers: self
                .attackers
                .into_iter()
                .map(PlayerRecord::into_state)
                .collect(),
            defenders: self
                .defenders
                .into_iter()
                .map(PlayerRecord::into_state)
                .collect(),
            ball: [self.ball.x, self.ball.y],
            passer_id: self.passer_id,
            receiver_id: self.receiver_id,
            pass_successful: self.pass_successful,
            pass_label: self.pass_label,
        };
        if self.attack_direction == AttackDirection::RightToLeft {
            s = s.rotated_half_turn(pitch);
        }
        s.clamp_kinematics();
        s.validate(pitch)?;
        Ok(s)
    }
}

/// Outcome of a successful ingest. Invalid lines below the abort threshold
/// are skipped and listed in `errors`.
#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub states: Vec<GameState>,
    pub errors: Vec<LineError>,
    pub warnings: Vec<String>,
    pub data_lines: usize,
}

pub fn ingest(path: &Path, pitch: &PitchSpec) -> Result<Ingested, SnapshotError> {
    let file = File::open(path).map_err(|source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_reader(BufReader::new(file), pitch).map_err(|e| match e {
        SnapshotError::Io { source, .. } => SnapshotError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

pub fn ingest_reader<R: BufRead>(reader: R, pitch: &PitchSpec) -> Result<Ingested, SnapshotError> {
    let io = |source| SnapshotError::Io {
        path: "<reader>".into(),
        source,
    };
    let mut lines = reader.lines();
    let header_line = match lines.next() {
        Some(l) => l.map_err(io)?,
        None => return Err(SnapshotError::MissingHeader),
    };
    let header: Value =
        serde_json::from_str(&header_line).map_err(|_| SnapshotError::MissingHeader)?;
    let found = header
        .get("schema_version")
        .and_then(Value::as_u64)
        .ok_or(SnapshotError::MissingHeader)?;
    if found != SCHEMA_VERSION as u64 {
        return Err(SnapshotError::SchemaVersionUnsupported { found });
    }

    let mut out = Ingested::default();
    let mut unknown = BTreeSet::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.data_lines += 1;
        let parsed = serde_json::from_str::<Value>(&line)
            .map_err(|e| e.to_string())
            .and_then(|v| {
                unknown.extend(unknown_keys(&v));
                serde_json::from_value::<PassRecord>(v).map_err(|e| e.to_string())
            })
            .and_then(|r| r.into_state(pitch).map_err(|e| e.to_string()));
        match parsed {
            Ok(s) => out.states.push(s),
            Err(reason) => out.errors.push(LineError {
                line: line_no,
                reason,
            }),
        }
    }
    if !out.errors.is_empty()
        && out.errors.len() as f64 > MAX_ERROR_FRACTION * out.data_lines as f64
    {
        return Err(SnapshotError::TooManyErrors {
            bad: out.errors.len(),
            total: out.data_lines,
            first: out.errors[0].clone(),
        });
    }
    if !unknown.is_empty() {
        let keys: Vec<_> = unknown.into_iter().collect();
        out.warnings
            .push(format!("ignored unknown fields: {}", keys.join(", ")));
    }
    if out.data_lines == 0 {
        out.warnings.push("file contains no passes".into());
    }
    if !out.errors.is_empty() {
        out.warnings.push(format!(
            "skipped {} invalid line(s) of {}",
            out.errors.len(),
            out.data_lines
        ));
    }
    for w in &out.warnings {
        log::warn!("{w}");
    }
    Ok(out)
}

pub fn write_snapshots<W: Write>(
    mut w: W,
    states: &[GameState],
    pitch: &PitchSpec,
) -> std::io::Result<()> {
    let header = Header {
        schema_version: SCHEMA_VERSION,
        pitch: Some(*pitch),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for s in states {
        serde_json::to_writer(&mut w, &PassRecord::from_state(s))?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_snapshot_file(
    path: &Path,
    states: &[GameState],
    pitch: &PitchSpec,
) -> std::io::Result<()> {
    write_snapshots(BufWriter::new(File::create(path)?), states, pitch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometryConfig;
    use crate::synth::{generate_dataset, GeneratorConfig};

    fn roundtrip(text: &str) -> Result<Ingested, SnapshotError> {
        ingest_reader(text.as_bytes(), &PitchSpec::default())
    }

    fn sample_file(n: usize) -> (Vec<GameState>, String) {
        let cfg = GeneratorConfig {
            n_passes: n,
            ..Default::default()
        };
        let ds = generate_dataset(&cfg, &GeometryConfig::default(), &PitchSpec::default()).unwrap();
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &ds.states, &PitchSpec::default()).unwrap();
        (ds.states, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn generator_output_roundtrips() {
        let (states, text) = sample_file(50);
        let got = roundtrip(&text).unwrap();
        assert_eq!(got.states, states);
        assert!(got.errors.is_empty());
        assert!(got.warnings.is_empty());
    }

    #[test]
    fn header_only_is_empty_with_warning() {
        let got = roundtrip("{\"schema_version\":1}\n").unwrap();
        assert!(got.states.is_empty());
        assert_eq!(got.warnings.len(), 1);
    }

    #[test]
    fn wrong_version_rejected() {
        assert!(matches!(
            roundtrip("{\"schema_version\":9}\n"),
            Err(SnapshotError::SchemaVersionUnsupported { found: 9 })
        ));
        assert!(matches!(roundtrip(""), Err(SnapshotError::MissingHeader)));
    }

    #[test]
    fn bad_line_reported_with_number() {
        let (_, text) = sample_file(200);
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut v: Value = serde_json::from_str(&lines[5]).unwrap();
        v["receiver_id"] = v["passer_id"].clone();
        lines[5] = v.to_string();
        let got = roundtrip(&lines.join("\n")).unwrap();
        assert_eq!(got.states.len(), 199);
        assert_eq!(got.errors.len(), 1);
        assert_eq!(got.errors[0].line, 6);
    }

    #[test]
    fn too_many_errors_abort() {
        let (_, text) = sample_file(50);
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[3] = "{not json".into();
        assert!(matches!(
            roundtrip(&lines.join("\n")),
            Err(SnapshotError::TooManyErrors {
                bad: 1,
                total: 50,
                ..
            })
        ));
    }

    #[test]
    fn unknown_fields_warn() {
        let (states, text) = sample_file(3);
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut v: Value = serde_json::from_str(&lines[1]).unwrap();
        v["video_ref"] = "clip-7".into();
        v["attackers"][0]["jersey"] = 10.into();
        lines[1] = v.to_string();
        let got = roundtrip(&lines.join("\n")).unwrap();
        assert_eq!(got.states, states);
        assert!(got.warnings[0].contains("video_ref"));
        assert!(got.warnings[0].contains("attackers[].jersey"));
    }

    #[test]
    fn right_to_left_is_canonicalized() {
        let (states, text) = sample_file(1);
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let flipped = states[0].rotated_half_turn(&PitchSpec::default());
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &[flipped], &PitchSpec::default()).unwrap();
        let mut v: Value =
            serde_json::from_str(String::from_utf8(buf).unwrap().lines().nth(1).unwrap()).unwrap();
        v["attack_direction"] = "right_to_left".into();
        lines[1] = v.to_string();
        let got = roundtrip(&lines.join("\n")).unwrap();
        let a = &got.states[0];
        for (p, q) in a.attackers.iter().zip(&states[0].attackers) {
            assert!((p.pos[0] - q.pos[0]).abs() < 1e-9 && (p.pos[1] - q.pos[1]).abs() < 1e-9);
        }
    }
}
