//! Adaptive keyframe sampling for video analytics.
//!
//! The engine turns a frame sequence into per-frame feature vectors, clusters
//! them with Ward linkage restricted to temporally connected clusters, picks
//! one representative frame per cluster and stores the representatives in a
//! container that can be read selectively. Labels computed on the
//! representatives are propagated back to every frame of their cluster and
//! scored against ground truth.
//!
//! The offline path is [`features`] → [`clustering`] → [`sampler`] →
//! [`storage`]; the online path is [`storage`] → [`propagation`].

pub mod clustering;
pub mod error;
pub mod features;
pub(crate) mod par;
pub mod propagation;
pub mod sampler;
pub mod storage;

pub use clustering::{
    agglomerate, cluster_stats, cut, default_k_grid, optimal_k, silhouette_score, ClusterStats,
    Clustering, Connectivity, Dendrogram, Merge,
};
pub use error::{Error, Result};
pub use features::{
    append_temporal_channel, extract_pixel_features, load_feature_file, write_feature_file,
    FeatureMatrix, FramePayload, FrameSequence,
};
pub use propagation::{
    evaluate, propagate, render_frames, synthesize_stream, LabelVector, Metrics, StreamSpec,
};
pub use sampler::{
    clustering_from_intervals, gop_baseline, samples_for_budget, select_frames, uniform_baseline,
    Policy, SampleEntry, SampleOrigin, SampleSet,
};
