//! On-disk recording container: one gzip-compressed packet log per stream
//! plus a JSON metadata document. The layout is internal and versioned with
//! the protocol byte; only the packet encoding inside the logs is the pinned
//! wire format.

use crate::ingest::codec::{decode_packet, encode_packet_into, Packet};
use crate::labels::LabelStream;
use crate::sample::{CameraId, ImuSample, SensorGeometry, TactileFrame};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const CONTAINER_VERSION: u8 = 1;

/// The three logical sensor streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    Imu,
    CamTop,
    CamBottom,
}

impl StreamKind {
    pub const ALL: [StreamKind; 3] = [StreamKind::Imu, StreamKind::CamTop, StreamKind::CamBottom];

    pub fn log_file_name(self) -> &'static str {
        match self {
            StreamKind::Imu => "imu.bin.gz",
            StreamKind::CamTop => "cam_top.bin.gz",
            StreamKind::CamBottom => "cam_bottom.bin.gz",
        }
    }

    pub fn wire_byte(self) -> u8 {
        match self {
            StreamKind::Imu => 0,
            StreamKind::CamTop => 1,
            StreamKind::CamBottom => 2,
        }
    }

    pub fn from_wire_byte(b: u8) -> Option<StreamKind> {
        match b {
            0 => Some(StreamKind::Imu),
            1 => Some(StreamKind::CamTop),
            2 => Some(StreamKind::CamBottom),
            _ => None,
        }
    }
}

impl std::fmt::Display for StreamKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StreamKind::Imu => write!(f, "imu"),
            StreamKind::CamTop => write!(f, "cam_top"),
            StreamKind::CamBottom => write!(f, "cam_bottom"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

/// Recording metadata, stored as `metadata.json` in the container directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub container_version: u8,
    pub protocol_version: u8,
    pub subject_id: String,
    pub hand: Hand,
    pub geometry: SensorGeometry,
    pub start_us: u64,
    pub end_us: u64,
    /// Ground-truth labels, when the recording carries them.
    pub labels: Option<LabelStream>,
}

/// A complete recording: metadata plus the three per-sensor packet logs.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub meta: RecordingMeta,
    pub imu: Vec<ImuSample>,
    pub top: Vec<TactileFrame>,
    pub bottom: Vec<TactileFrame>,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("metadata error: {0}")]
    Meta(#[from] serde_json::Error),
    #[error("unsupported container version {0}")]
    ContainerVersion(u8),
    #[error("corrupt {stream} log at record {index}: {source}")]
    CorruptRecord {
        stream: StreamKind,
        index: usize,
        #[source]
        source: crate::ingest::codec::CodecError,
    },
    #[error("{stream} log record {index} is a packet of the wrong kind")]
    WrongKind { stream: StreamKind, index: usize },
    #[error("{stream} timestamps decrease at record {index}: {prev} then {next}")]
    NonMonotonic {
        stream: StreamKind,
        index: usize,
        prev: u64,
        next: u64,
    },
    #[error("label stream does not span the recording: {0}")]
    LabelSpan(String),
    #[error("invalid label stream: {0}")]
    Labels(#[from] crate::labels::LabelStreamError),
    #[error("stream {stream} disconnected: {reason}")]
    Disconnected { stream: StreamKind, reason: String },
    #[error("bad stream handshake byte {0}")]
    BadHandshake(u8),
    #[error("frame on {stream} carries camera id {found:?}")]
    CameraMismatch { stream: StreamKind, found: CameraId },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Recording {
    /// Per-log nondecreasing timestamps; labels (if any) must span the
    /// recording interval.
    pub fn validate(&self) -> Result<(), IngestError> {
        let check = |stream: StreamKind, ts: &mut dyn Iterator<Item = u64>| {
            let mut prev: Option<u64> = None;
            for (index, t) in ts.enumerate() {
                if let Some(p) = prev {
                    if t < p {
                        return Err(IngestError::NonMonotonic {
                            stream,
                            index,
                            prev: p,
                            next: t,
                        });
                    }
                }
                prev = Some(t);
            }
            Ok(())
        };
        check(StreamKind::Imu, &mut self.imu.iter().map(|s| s.timestamp_us))?;
        check(StreamKind::CamTop, &mut self.top.iter().map(|f| f.timestamp_us))?;
        check(
            StreamKind::CamBottom,
            &mut self.bottom.iter().map(|f| f.timestamp_us),
        )?;
        if let Some(labels) = &self.meta.labels {
            labels.validate()?;
            let first = labels.entries.first().map(|e| e.0).unwrap_or(0);
            if first > self.meta.start_us || labels.end_us < self.meta.end_us {
                return Err(IngestError::LabelSpan(format!(
                    "labels cover [{first}, {}) but recording spans [{}, {})",
                    labels.end_us, self.meta.start_us, self.meta.end_us
                )));
            }
        }
        Ok(())
    }

    /// All packets of one stream in log order.
    pub fn packets(&self, kind: StreamKind) -> Vec<Packet> {
        match kind {
            StreamKind::Imu => self.imu.iter().cloned().map(Packet::Imu).collect(),
            StreamKind::CamTop => self.top.iter().cloned().map(Packet::Frame).collect(),
            StreamKind::CamBottom => self.bottom.iter().cloned().map(Packet::Frame).collect(),
        }
    }

    pub fn duration_us(&self) -> u64 {
        self.meta.end_us.saturating_sub(self.meta.start_us)
    }

    /// Write the container directory (metadata + three compressed logs).
    pub fn save(&self, dir: &Path) -> Result<(), IngestError> {
        self.validate()?;
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;

        let meta_path = dir.join("metadata.json");
        let meta_file = File::create(&meta_path).map_err(io_err(&meta_path))?;
        serde_json::to_writer_pretty(BufWriter::new(meta_file), &self.meta)?;

        for kind in StreamKind::ALL {
            let path = dir.join(kind.log_file_name());
            let file = File::create(&path).map_err(io_err(&path))?;
            let mut enc = GzEncoder::new(BufWriter::new(file), Compression::fast());
            let mut buf = Vec::new();
            for packet in self.packets(kind) {
                buf.clear();
                encode_packet_into(&packet, &mut buf);
                enc.write_all(&buf).map_err(io_err(&path))?;
            }
            enc.finish().map_err(io_err(&path))?;
        }
        Ok(())
    }

    /// Load and validate a container directory.
    pub fn load(dir: &Path) -> Result<Recording, IngestError> {
        let meta_path = dir.join("metadata.json");
        let meta_file = File::open(&meta_path).map_err(io_err(&meta_path))?;
        let meta: RecordingMeta = serde_json::from_reader(BufReader::new(meta_file))?;
        if meta.container_version != CONTAINER_VERSION {
            return Err(IngestError::ContainerVersion(meta.container_version));
        }

        let mut recording = Recording {
            meta,
            imu: Vec::new(),
            top: Vec::new(),
            bottom: Vec::new(),
        };
        for kind in StreamKind::ALL {
            let path = dir.join(kind.log_file_name());
            let file = File::open(&path).map_err(io_err(&path))?;
            let mut bytes = Vec::new();
            GzDecoder::new(BufReader::new(file))
                .read_to_end(&mut bytes)
                .map_err(io_err(&path))?;

            let mut at = 0usize;
            let mut index = 0usize;
            while at < bytes.len() {
                let (packet, consumed) =
                    decode_packet(&bytes[at..]).map_err(|source| IngestError::CorruptRecord {
                        stream: kind,
                        index,
                        source,
                    })?;
                match (kind, packet) {
                    (StreamKind::Imu, Packet::Imu(s)) => recording.imu.push(s),
                    (StreamKind::CamTop, Packet::Frame(f)) if f.camera_id == CameraId::Top => {
                        recording.top.push(f)
                    }
                    (StreamKind::CamBottom, Packet::Frame(f))
                        if f.camera_id == CameraId::Bottom =>
                    {
                        recording.bottom.push(f)
                    }
                    _ => return Err(IngestError::WrongKind { stream: kind, index }),
                }
                at += consumed;
                index += 1;
            }
        }
        recording.validate()?;
        Ok(recording)
    }
}
