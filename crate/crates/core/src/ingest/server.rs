//! TCP stream server and client for the three sensor streams.
//!
//! One logical channel per sensor: a client opens one connection per stream
//! and sends a single handshake byte naming the stream it wants. The server
//! replies with that stream's packets in order, closed by an explicit FIN
//! control header. A connection that ends without FIN is reported as a
//! disconnect, never as silent truncation.

use crate::ingest::codec::{
    decode_packet, encode_packet, CodecError, Packet, FRAME_HEADER_LEN, IMU_PACKET_LEN, KIND_FRAME,
    KIND_IMU, MAGIC, VERSION,
};
use crate::ingest::recording::{IngestError, Recording, StreamKind};
use crate::sample::TactileFrame;
use crossbeam_channel::{bounded, Receiver};
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

/// Control kind byte closing a stream cleanly.
pub const KIND_FIN: u8 = 0x7F;

/// Pacing policy for served packets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pace {
    /// As fast as the socket accepts (the speed-0 sentinel).
    Unpaced,
    /// Original inter-arrival times divided by this factor.
    Speed(f64),
}

impl Pace {
    pub fn from_speed(speed: f64) -> Pace {
        if speed == 0.0 {
            Pace::Unpaced
        } else {
            Pace::Speed(speed)
        }
    }
}

/// Sleeps until each packet's scheduled emission time. Hybrid sleep/spin to
/// keep per-packet pacing error within a couple of milliseconds.
struct Pacer {
    start: Instant,
    first_ts_us: Option<u64>,
    speed: f64,
}

impl Pacer {
    fn new(speed: f64) -> Pacer {
        Pacer {
            start: Instant::now(),
            first_ts_us: None,
            speed,
        }
    }

    fn wait_for(&mut self, ts_us: u64) {
        let first = *self.first_ts_us.get_or_insert(ts_us);
        let offset_us = (ts_us.saturating_sub(first)) as f64 / self.speed;
        let target = self.start + Duration::from_micros(offset_us as u64);
        loop {
            let now = Instant::now();
            if now >= target {
                return;
            }
            let remaining = target - now;
            if remaining > Duration::from_micros(700) {
                std::thread::sleep(remaining - Duration::from_micros(500));
            } else {
                std::hint::spin_loop();
            }
        }
    }
}

/// A handle to a running stream server. Dropping it stops the listener.
pub struct StreamServer {
    addr: std::net::SocketAddr,
    stop: Arc<AtomicBool>,
    accept_handle: Option<JoinHandle<()>>,
}

impl StreamServer {
    /// Serve a recording's three packet logs at `endpoint` (host:port;
    /// port 0 picks a free port). Each client connection is handshaked and
    /// fed the requested stream, paced per `pace`.
    pub fn serve_recording(
        endpoint: &str,
        recording: Arc<Recording>,
        pace: Pace,
    ) -> Result<StreamServer, IngestError> {
        Self::serve_with(endpoint, move |kind| recording.packets(kind), pace)
    }

    /// Serve packets produced by `source(kind)` per accepted stream request.
    pub fn serve_with<F>(endpoint: &str, source: F, pace: Pace) -> Result<StreamServer, IngestError>
    where
        F: Fn(StreamKind) -> Vec<Packet> + Send + Sync + 'static,
    {
        let listener = bind(endpoint)?;
        let addr = listener.local_addr().map_err(|e| IngestError::Io {
            path: endpoint.into(),
            source: e,
        })?;
        listener.set_nonblocking(true).map_err(|e| IngestError::Io {
            path: endpoint.into(),
            source: e,
        })?;

        let stop = Arc::new(AtomicBool::new(false));
        let stop_accept = Arc::clone(&stop);
        let source = Arc::new(source);

        let accept_handle = std::thread::spawn(move || {
            let mut workers: Vec<JoinHandle<()>> = Vec::new();
            while !stop_accept.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let source = Arc::clone(&source);
                        let stop = Arc::clone(&stop_accept);
                        workers.push(std::thread::spawn(move || {
                            let _ = handle_client(stream, source.as_ref(), pace, &stop);
                        }));
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(Duration::from_millis(2));
                    }
                    Err(_) => break,
                }
            }
            for w in workers {
                let _ = w.join();
            }
        });

        Ok(StreamServer {
            addr,
            stop,
            accept_handle: Some(accept_handle),
        })
    }

    pub fn local_addr(&self) -> std::net::SocketAddr {
        self.addr
    }

    /// Stop accepting and terminate stream workers (mid-stream if needed).
    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.accept_handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for StreamServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn bind(endpoint: &str) -> Result<TcpListener, IngestError> {
    TcpListener::bind(endpoint).map_err(|e| IngestError::Io {
        path: endpoint.into(),
        source: e,
    })
}

fn handle_client<F>(
    mut stream: TcpStream,
    source: &F,
    pace: Pace,
    stop: &AtomicBool,
) -> std::io::Result<()>
where
    F: Fn(StreamKind) -> Vec<Packet>,
{
    let mut handshake = [0u8; 1];
    stream.read_exact(&mut handshake)?;
    let Some(kind) = StreamKind::from_wire_byte(handshake[0]) else {
        return Ok(()); // bad handshake: just close
    };
    let packets = source(kind);
    stream.set_nodelay(true)?;

    let mut pacer = match pace {
        Pace::Unpaced => None,
        Pace::Speed(s) => Some(Pacer::new(s)),
    };
    for packet in &packets {
        if stop.load(Ordering::Relaxed) {
            // Simulated hard stop: close without FIN.
            return Ok(());
        }
        if let Some(p) = pacer.as_mut() {
            p.wait_for(packet.timestamp_us());
        }
        stream.write_all(&encode_packet(packet))?;
    }
    stream.write_all(&[MAGIC, VERSION, KIND_FIN])?;
    stream.flush()?;
    Ok(())
}

/// Receiving side of one connected sensor stream.
pub struct PacketReceiver {
    pub kind: StreamKind,
    pub rx: Receiver<Result<Packet, IngestError>>,
    handle: Option<JoinHandle<()>>,
}

impl PacketReceiver {
    /// Collect the remaining packets, failing on disconnect.
    pub fn collect(self) -> Result<Vec<Packet>, IngestError> {
        let mut out = Vec::new();
        for item in self.rx.iter() {
            out.push(item?);
        }
        Ok(out)
    }
}

impl Drop for PacketReceiver {
    fn drop(&mut self) {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// A client connected to all three sensor streams.
pub struct StreamClient {
    pub imu: PacketReceiver,
    pub top: PacketReceiver,
    pub bottom: PacketReceiver,
}

/// Read one packet (or FIN) off a socket. Returns `Ok(None)` on clean FIN.
fn read_packet(stream: &mut TcpStream) -> Result<Option<Packet>, IngestError> {
    let kind = StreamKind::CamTop; // placeholder for error paths below
    let io = |e: std::io::Error| IngestError::Disconnected {
        stream: kind,
        reason: e.to_string(),
    };

    let mut head = [0u8; 3];
    stream.read_exact(&mut head).map_err(io)?;
    if head[2] == KIND_FIN && head[0] == MAGIC && head[1] == VERSION {
        return Ok(None);
    }
    let total = match head[2] {
        KIND_IMU => IMU_PACKET_LEN,
        KIND_FRAME => {
            let mut rest = [0u8; FRAME_HEADER_LEN - 3];
            stream.read_exact(&mut rest).map_err(io)?;
            let width = u16::from_le_bytes([rest[9], rest[10]]) as usize;
            let height = u16::from_le_bytes([rest[11], rest[12]]) as usize;
            let mut bytes = Vec::with_capacity(FRAME_HEADER_LEN + width * height);
            bytes.extend_from_slice(&head);
            bytes.extend_from_slice(&rest);
            bytes.resize(FRAME_HEADER_LEN + width * height, 0);
            stream
                .read_exact(&mut bytes[FRAME_HEADER_LEN..])
                .map_err(io)?;
            let (packet, _) = decode_packet(&bytes).map_err(codec_err)?;
            return Ok(Some(packet));
        }
        _ => {
            // Delegate to the codec for a structured error.
            return decode_packet(&head).map(|_| None).map_err(codec_err);
        }
    };
    let mut bytes = vec![0u8; total];
    bytes[..3].copy_from_slice(&head);
    stream.read_exact(&mut bytes[3..]).map_err(io)?;
    let (packet, _) = decode_packet(&bytes).map_err(codec_err)?;
    Ok(Some(packet))
}

fn codec_err(e: CodecError) -> IngestError {
    IngestError::CorruptRecord {
        stream: StreamKind::Imu,
        index: 0,
        source: e,
    }
}

/// Connect one stream: handshake then spawn a reader thread feeding a
/// bounded channel (backpressure blocks the socket, not memory).
pub fn connect_stream(
    endpoint: &str,
    kind: StreamKind,
    queue_capacity: usize,
) -> Result<PacketReceiver, IngestError> {
    let addr = endpoint
        .to_socket_addrs()
        .map_err(|e| IngestError::Io {
            path: endpoint.into(),
            source: e,
        })?
        .next()
        .ok_or_else(|| IngestError::Io {
            path: endpoint.into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no address"),
        })?;
    let mut stream = TcpStream::connect(addr).map_err(|e| IngestError::Io {
        path: endpoint.into(),
        source: e,
    })?;
    stream
        .write_all(&[kind.wire_byte()])
        .map_err(|e| IngestError::Io {
            path: endpoint.into(),
            source: e,
        })?;

    let (tx, rx) = bounded(queue_capacity);
    let handle = std::thread::spawn(move || loop {
        match read_packet(&mut stream) {
            Ok(Some(packet)) => {
                if tx.send(Ok(packet)).is_err() {
                    return; // receiver dropped
                }
            }
            Ok(None) => return, // clean FIN
            Err(mut e) => {
                if let IngestError::Disconnected { stream, .. }
                | IngestError::CorruptRecord { stream, .. } = &mut e
                {
                    *stream = kind;
                }
                let _ = tx.send(Err(e));
                return;
            }
        }
    });

    Ok(PacketReceiver {
        kind,
        rx,
        handle: Some(handle),
    })
}

/// Connect all three sensor streams at `endpoint`.
pub fn connect(endpoint: &str, queue_capacity: usize) -> Result<StreamClient, IngestError> {
    Ok(StreamClient {
        imu: connect_stream(endpoint, StreamKind::Imu, queue_capacity)?,
        top: connect_stream(endpoint, StreamKind::CamTop, queue_capacity)?,
        bottom: connect_stream(endpoint, StreamKind::CamBottom, queue_capacity)?,
    })
}

/// Receive all three streams to completion and assemble a recording around
/// the provided metadata. Sensor timestamps are authoritative; nothing is
/// re-stamped here.
pub fn record(
    client: StreamClient,
    mut meta: crate::ingest::recording::RecordingMeta,
) -> Result<Recording, IngestError> {
    let mut recording = Recording {
        meta: meta.clone(),
        imu: Vec::new(),
        top: Vec::new(),
        bottom: Vec::new(),
    };
    let collect_frames = |rx: PacketReceiver, want: StreamKind| -> Result<Vec<TactileFrame>, IngestError> {
        rx.collect()?
            .into_iter()
            .enumerate()
            .map(|(index, p)| match p {
                Packet::Frame(f) => Ok(f),
                Packet::Imu(_) => Err(IngestError::WrongKind { stream: want, index }),
            })
            .collect()
    };

    recording.imu = client
        .imu
        .collect()?
        .into_iter()
        .enumerate()
        .map(|(index, p)| match p {
            Packet::Imu(s) => Ok(s),
            Packet::Frame(_) => Err(IngestError::WrongKind {
                stream: StreamKind::Imu,
                index,
            }),
        })
        .collect::<Result<_, _>>()?;
    recording.top = collect_frames(client.top, StreamKind::CamTop)?;
    recording.bottom = collect_frames(client.bottom, StreamKind::CamBottom)?;

    // Fill the observed span if the caller passed zeros.
    if meta.end_us == 0 {
        let last = recording
            .imu
            .iter()
            .map(|s| s.timestamp_us)
            .chain(recording.top.iter().map(|f| f.timestamp_us))
            .chain(recording.bottom.iter().map(|f| f.timestamp_us))
            .max()
            .unwrap_or(0);
        meta.end_us = last + 1;
        recording.meta.end_us = meta.end_us;
    }
    recording.validate()?;
    Ok(recording)
}

/// In-process replay: walk the packet logs merged by timestamp, optionally
/// paced, invoking `emit` at each packet's scheduled time. Timestamps are
/// the recorded ones, unmodified.
pub fn replay_each(
    recording: &Recording,
    pace: Pace,
    mut emit: impl FnMut(StreamKind, &Packet),
) {
    let mut pacer = match pace {
        Pace::Unpaced => None,
        Pace::Speed(s) => Some(Pacer::new(s)),
    };
    let mut streams: Vec<(StreamKind, Vec<Packet>, usize)> = StreamKind::ALL
        .iter()
        .map(|&k| (k, recording.packets(k), 0usize))
        .collect();
    loop {
        // Merge by timestamp across the three logs.
        let next = streams
            .iter()
            .enumerate()
            .filter_map(|(i, (_, packets, at))| {
                packets.get(*at).map(|p| (i, p.timestamp_us()))
            })
            .min_by_key(|&(_, ts)| ts);
        let Some((i, ts)) = next else { break };
        if let Some(p) = pacer.as_mut() {
            p.wait_for(ts);
        }
        let (kind, packets, at) = &mut streams[i];
        emit(*kind, &packets[*at]);
        *at += 1;
    }
}

/// Replay into a vector (see `replay_each`).
pub fn replay_collect(recording: &Recording, pace: Pace) -> Vec<(StreamKind, Packet)> {
    let mut out = Vec::new();
    replay_each(recording, pace, |kind, packet| {
        out.push((kind, packet.clone()));
    });
    out
}
