//! Keyframe persistence: the `.ekv` container, transcoder manifests and the
//! cluster sidecar used for decoder-side label propagation.

mod container;
mod manifest;
mod sidecar;
mod source;

pub use container::{
    encode_store, open_store, read_store_stream, write_store, Codec, IndexRecord, StoreHandle,
    StoreHeader, StoreSummary, StoredFrame, HEADER_LEN, INDEX_RECORD_LEN, MAX_FRAME_BYTES, VERSION,
};
pub use manifest::{emit_manifest, render_transcode_args, KeyframeManifest};
pub use sidecar::{label_sidecar, write_label_sidecar, ClusterRun, LabelSidecar};
#[cfg(feature = "mmap")]
pub use source::MmapSource;
pub use source::{ByteSource, CountingSource, FileSource};
