mod common;

use std::collections::BTreeSet;

use eko_core::storage::{
    encode_store, label_sidecar, open_store, read_store_stream, write_store, Codec, CountingSource,
    LabelSidecar, StoreHandle, HEADER_LEN, INDEX_RECORD_LEN,
};
use eko_core::*;
use proptest::prelude::*;

fn store(
    seed: u64,
    n: usize,
    k: usize,
    codec: Codec,
) -> (FrameSequence, SampleSet, Clustering, Vec<u8>) {
    let (f, _) = synthesize_stream(&StreamSpec::new(seed, n, (n / 8).max(1), 0.0, 0.1)).unwrap();
    let seq = render_frames(&f, 3, 30.0).unwrap();
    let d = agglomerate(&f, Connectivity::Tight).unwrap();
    let (s, cl) = samples_for_budget(&d, &f, k, Policy::Middle).unwrap();
    let mut buf = Vec::new();
    write_store(&seq, &s, &cl, codec, &mut buf).unwrap();
    (seq, s, cl, buf)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Opening reads exactly header and index; each frame read adds exactly its payload.
    #[test]
    fn reads_touch_only_requested_payloads(
        seed in 0u64..1000,
        n in 8usize..120,
        frac in 0.05f64..1.0,
        pick in proptest::collection::vec(any::<prop::sample::Index>(), 0..12),
        lossless in any::<bool>(),
    ) {
        let k = ((n as f64 * frac) as usize).max(1);
        let codec = if lossless { Codec::Lossless } else { Codec::Raw };
        let (_, s, _, buf) = store(seed, n, k, codec);
        let h = StoreHandle::open(CountingSource::new(buf)).unwrap();
        let meta = HEADER_LEN + INDEX_RECORD_LEN * k as u64;
        prop_assert_eq!(h.source().bytes_read(), meta);
        let ids = s.frame_ids();
        let chosen: BTreeSet<u32> = pick.iter().map(|i| ids[i.index(ids.len())]).collect();
        let chosen: Vec<u32> = chosen.into_iter().collect();
        h.read_frames(&chosen).unwrap();
        let want: u64 = h
            .index()
            .iter()
            .filter(|r| chosen.contains(&r.frame_id))
            .map(|r| r.len)
            .sum();
        prop_assert_eq!(h.source().bytes_read(), meta + want);
    }
}

#[test]
fn file_map_and_stream_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.ekv");
    for codec in [Codec::Raw, Codec::Lossless] {
        let (f, _) = synthesize_stream(&StreamSpec::new(5, 300, 20, 0.0, 0.1)).unwrap();
        let seq = render_frames(&f, 2, 25.0).unwrap();
        let d = agglomerate(&f, Connectivity::Medium).unwrap();
        let (s, cl) = samples_for_budget(&d, &f, 30, Policy::Mean).unwrap();
        let summary = encode_store(&seq, &s, &cl, codec, &path).unwrap();
        assert_eq!(summary.file_bytes, std::fs::metadata(&path).unwrap().len());

        let ids = s.frame_ids();
        let by_file = open_store(&path).unwrap().read_frames(&ids).unwrap();
        let (_, streamed) = read_store_stream(std::fs::File::open(&path).unwrap()).unwrap();
        #[cfg(feature = "mmap")]
        {
            use eko_core::storage::ByteSource;
            let map =
                StoreHandle::open(eko_core::storage::MmapSource::open(&path).unwrap()).unwrap();
            assert_eq!(map.source().len(), summary.file_bytes);
            assert_eq!(map.read_frames(&ids).unwrap(), by_file);
        }
        assert_eq!(
            by_file,
            streamed.into_iter().map(|(_, p)| p).collect::<Vec<_>>()
        );
        for (id, px) in ids.iter().zip(&by_file) {
            assert_eq!(px, &seq.frames[*id as usize].pixels);
        }
    }
}

#[test]
fn decoder_side_propagation_needs_only_store_and_sidecar() {
    let (f, truth) = synthesize_stream(&StreamSpec::new(8, 4000, 40, 0.1, 0.1)).unwrap();
    let f = common::with_time(&f);
    let d = agglomerate(&f, Connectivity::Loose).unwrap();
    let (s, cl) = samples_for_budget(&d, &f, 60, Policy::Middle).unwrap();
    let direct = propagate(&s, &cl, &truth.at(&s.frame_ids()).unwrap()).unwrap();

    let mut text = Vec::new();
    label_sidecar(&cl, &s)
        .unwrap()
        .write_text(&mut text)
        .unwrap();
    let rebuilt = LabelSidecar::read_text(&text[..])
        .unwrap()
        .to_clustering()
        .unwrap();
    let mut samples = Vec::new();
    s.write_text(&mut samples).unwrap();
    let s2 = SampleSet::read_text(&samples[..]).unwrap();
    let via_files = propagate(&s2, &rebuilt, &truth.at(&s2.frame_ids()).unwrap()).unwrap();
    assert_eq!(direct, via_files);
}

#[test]
fn loose_extents_overlap_but_round_trip() {
    // span 100 lets similar segments on either side of a short one merge
    let mut rows = Vec::new();
    for (len, v) in [(150, 0.0f32), (20, 5.0), (150, 0.0)] {
        rows.extend(std::iter::repeat_n([v, v], len));
    }
    let f = FeatureMatrix::from_rows(&rows).unwrap();
    let d = agglomerate(&f, Connectivity::Loose).unwrap();
    let cl = cut(&d, 2).unwrap();
    assert!(!cl.is_contiguous());
    let (s, cl) = select_frames(&cl, &f, Policy::Middle).unwrap();
    let seq = render_frames(&f, 1, 25.0).unwrap();
    let mut buf = Vec::new();
    write_store(&seq, &s, &cl, Codec::Raw, &mut buf).unwrap();
    let h = StoreHandle::open(buf).unwrap();
    assert!(!h.intervals_partition());
    let sc = label_sidecar(&cl, &s).unwrap();
    assert_eq!(sc.runs.len(), 3);
    assert_eq!(sc.to_clustering().unwrap(), cl);
}
