//! Wire protocol, stream server/client, and on-disk recording/replay for
//! the three sensor streams.

pub mod codec;
pub mod recording;
pub mod server;

pub use codec::{decode_packet, encode_packet, CodecError, Packet};
pub use recording::{Hand, IngestError, Recording, RecordingMeta, StreamKind, CONTAINER_VERSION};
pub use server::{
    connect, connect_stream, record, replay_collect, replay_each, Pace, StreamClient, StreamServer,
};
