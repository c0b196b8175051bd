//! Binary wire codec for sensor packets.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! offset 0   magic 0xA7
//! offset 1   version 0x01
//! offset 2   kind: 0x01 = IMU, 0x02 = frame
//! offset 3.. body
//!   IMU body:   u8 module_id, u64 timestamp_us, 9 x f32 channels   (45 bytes)
//!   frame body: u8 camera_id, u64 timestamp_us, u16 width, u16 height,
//!               width*height intensity bytes
//! ```
//!
//! Decoding is total: every byte sequence yields either a valid packet or a
//! structured error carrying the offset of the violation.

use crate::sample::{CameraId, ImuSample, TactileFrame, IMU_CHANNELS};

pub const MAGIC: u8 = 0xA7;
pub const VERSION: u8 = 0x01;
pub const KIND_IMU: u8 = 0x01;
pub const KIND_FRAME: u8 = 0x02;

/// Fixed encoded size of an IMU packet.
pub const IMU_PACKET_LEN: usize = 3 + 1 + 8 + 4 * IMU_CHANNELS;
/// Encoded size of a frame packet before its pixel payload.
pub const FRAME_HEADER_LEN: usize = 3 + 1 + 8 + 2 + 2;

/// One wire packet: a sample from one of the three sensor streams.
#[derive(Debug, Clone, PartialEq)]
pub enum Packet {
    Imu(ImuSample),
    Frame(TactileFrame),
}

impl Packet {
    pub fn timestamp_us(&self) -> u64 {
        match self {
            Packet::Imu(s) => s.timestamp_us,
            Packet::Frame(f) => f.timestamp_us,
        }
    }

    pub fn encoded_len(&self) -> usize {
        match self {
            Packet::Imu(_) => IMU_PACKET_LEN,
            Packet::Frame(f) => FRAME_HEADER_LEN + f.pixels.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("bad magic byte 0x{found:02X} at offset {offset} (expected 0x{expected:02X})")]
    BadMagic { offset: usize, found: u8, expected: u8 },
    #[error("unsupported protocol version 0x{found:02X} at offset {offset}")]
    BadVersion { offset: usize, found: u8 },
    #[error("unknown packet kind 0x{found:02X} at offset {offset}")]
    UnknownKind { offset: usize, found: u8 },
    #[error("truncated packet: needed {needed} bytes, got {available} (missing data at offset {offset})")]
    Truncated { offset: usize, needed: usize, available: usize },
    #[error("invalid module id {found} at offset {offset} (must be < 8)")]
    BadModuleId { offset: usize, found: u8 },
    #[error("invalid camera id {found} at offset {offset}")]
    BadCameraId { offset: usize, found: u8 },
    #[error("non-finite channel value at offset {offset}")]
    NonFiniteChannel { offset: usize },
}

/// Encode a packet into `out`. The payload is assumed to satisfy its type
/// invariants (encode is the inverse of a successful decode).
pub fn encode_packet_into(p: &Packet, out: &mut Vec<u8>) {
    out.reserve(p.encoded_len());
    out.push(MAGIC);
    out.push(VERSION);
    match p {
        Packet::Imu(s) => {
            out.push(KIND_IMU);
            out.push(s.module_id);
            out.extend_from_slice(&s.timestamp_us.to_le_bytes());
            for v in s.channels() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Packet::Frame(f) => {
            out.push(KIND_FRAME);
            out.push(f.camera_id.wire_byte());
            out.extend_from_slice(&f.timestamp_us.to_le_bytes());
            out.extend_from_slice(&f.width.to_le_bytes());
            out.extend_from_slice(&f.height.to_le_bytes());
            out.extend_from_slice(&f.pixels);
        }
    }
}

pub fn encode_packet(p: &Packet) -> Vec<u8> {
    let mut out = Vec::with_capacity(p.encoded_len());
    encode_packet_into(p, &mut out);
    out
}

fn need(bytes: &[u8], upto: usize) -> Result<(), CodecError> {
    if bytes.len() < upto {
        Err(CodecError::Truncated {
            offset: bytes.len(),
            needed: upto,
            available: bytes.len(),
        })
    } else {
        Ok(())
    }
}

fn read_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes(bytes[at..at + 2].try_into().unwrap())
}

fn read_f32(bytes: &[u8], at: usize) -> f32 {
    f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Decode one packet from the front of `bytes`; returns the packet and the
/// number of bytes consumed.
pub fn decode_packet(bytes: &[u8]) -> Result<(Packet, usize), CodecError> {
    need(bytes, 3)?;
    if bytes[0] != MAGIC {
        return Err(CodecError::BadMagic {
            offset: 0,
            found: bytes[0],
            expected: MAGIC,
        });
    }
    if bytes[1] != VERSION {
        return Err(CodecError::BadVersion {
            offset: 1,
            found: bytes[1],
        });
    }
    match bytes[2] {
        KIND_IMU => {
            need(bytes, IMU_PACKET_LEN)?;
            let module_id = bytes[3];
            if module_id >= crate::sample::IMU_MODULES as u8 {
                return Err(CodecError::BadModuleId {
                    offset: 3,
                    found: module_id,
                });
            }
            let timestamp_us = read_u64(bytes, 4);
            let mut ch = [0f32; IMU_CHANNELS];
            for (i, v) in ch.iter_mut().enumerate() {
                let at = 12 + 4 * i;
                *v = read_f32(bytes, at);
                if !v.is_finite() {
                    return Err(CodecError::NonFiniteChannel { offset: at });
                }
            }
            Ok((
                Packet::Imu(ImuSample::from_channels(module_id, timestamp_us, ch)),
                IMU_PACKET_LEN,
            ))
        }
        KIND_FRAME => {
            need(bytes, FRAME_HEADER_LEN)?;
            let camera_id = CameraId::from_wire_byte(bytes[3]).ok_or(CodecError::BadCameraId {
                offset: 3,
                found: bytes[3],
            })?;
            let timestamp_us = read_u64(bytes, 4);
            let width = read_u16(bytes, 12);
            let height = read_u16(bytes, 14);
            let total = FRAME_HEADER_LEN + width as usize * height as usize;
            need(bytes, total)?;
            let pixels = bytes[FRAME_HEADER_LEN..total].to_vec();
            Ok((
                Packet::Frame(TactileFrame {
                    camera_id,
                    timestamp_us,
                    width,
                    height,
                    pixels,
                }),
                total,
            ))
        }
        other => Err(CodecError::UnknownKind {
            offset: 2,
            found: other,
        }),
    }
}
