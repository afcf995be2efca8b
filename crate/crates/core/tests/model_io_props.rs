mod common;

use std::collections::BTreeMap;
use std::fs;

use proptest::prelude::*;
use rand::Rng;

use common::{random_box, rng};
use tubeloc::io::{
    load_collection, read_graph, read_tubes, save_collection, write_graph, write_tubes, TubeSet,
};
use tubeloc::model::{interpolate_tube, key_frames};
use tubeloc::synth::{generate_collection, SynthSpec};
use tubeloc::{Error, Tube, TubeRegion};

fn small_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        seed,
        classes: 2,
        videos_per_class: 2,
        frames_per_video: 45,
        descriptor_dim: 16,
        signature_dim: 8,
        parts: 2,
        distractors: 3,
        tracks_per_background_cluster: 6,
        ..SynthSpec::default()
    }
}

proptest! {
    #[test]
    fn key_frames_increase_and_stay_in_range(n in 1usize..500, stride in 0usize..60) {
        let ks = key_frames(n, stride);
        prop_assert_eq!(ks[0], 0);
        prop_assert!(ks.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(ks.iter().all(|&k| k < n));
    }

    #[test]
    fn interpolation_hits_key_boxes_exactly(seed in any::<u64>(), n in 2usize..200, stride in 1usize..40) {
        let mut r = rng(seed);
        let regions: BTreeMap<usize, TubeRegion> = key_frames(n, stride)
            .into_iter()
            .map(|k| (k, TubeRegion { proposal_id: Some(r.random_range(0..50)), bbox: random_box(&mut r, 320.0, 240.0) }))
            .collect();
        let tube = Tube { video_id: "v".into(), regions: regions.clone(), score: 1.0 };
        let all = interpolate_tube(&tube, n);
        prop_assert_eq!(all.len(), n);
        for (k, reg) in regions {
            prop_assert_eq!(all[&k], reg.bbox);
        }
    }

    #[test]
    fn tube_set_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut tubes: TubeSet = BTreeMap::new();
        for v in 0..r.random_range(0..4) {
            let id = format!("vid{v}");
            let ranked = (0..r.random_range(1..4))
                .map(|_| Tube {
                    video_id: id.clone(),
                    regions: key_frames(60, 20)
                        .into_iter()
                        .map(|k| {
                            let pid = if r.random_bool(0.8) { Some(r.random_range(0..100)) } else { None };
                            (k, TubeRegion { proposal_id: pid, bbox: random_box(&mut r, 320.0, 240.0) })
                        })
                        .collect(),
                    score: r.random_range(-10.0..10.0),
                })
                .collect();
            tubes.insert(id, ranked);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tubes.jsonl");
        write_tubes(&path, &tubes).unwrap();
        prop_assert_eq!(read_tubes(&path).unwrap(), tubes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn collection_round_trip(seed in any::<u64>()) {
        let synth = generate_collection(&small_spec(seed)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_collection(&synth.collection, dir.path()).unwrap();
        prop_assert_eq!(load_collection(&manifest).unwrap(), synth.collection);
    }
}

#[test]
fn graph_round_trip() {
    let synth = generate_collection(&small_spec(1)).unwrap();
    let out = tubeloc::run_discovery(
        &synth.collection,
        &tubeloc::Config {
            iterations: 2,
            k_neighbors: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("graph.jsonl");
    write_graph(&path, &out.graph).unwrap();
    assert_eq!(read_graph(&path).unwrap(), out.graph);
}

#[test]
fn generator_output_is_byte_identical() {
    let read_tree = |root: &std::path::Path| -> BTreeMap<String, Vec<u8>> {
        let mut out = BTreeMap::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in fs::read_dir(&d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                    out.insert(rel, fs::read(&p).unwrap());
                }
            }
        }
        out
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    save_collection(
        &generate_collection(&small_spec(9)).unwrap().collection,
        a.path(),
    )
    .unwrap();
    save_collection(
        &generate_collection(&small_spec(9)).unwrap().collection,
        b.path(),
    )
    .unwrap();
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);
}

/// Corrupting a valid collection in any of these ways must be rejected with
/// a located diagnostic.
#[test]
fn validation_rejects_corruptions() {
    let synth = generate_collection(&small_spec(2)).unwrap();
    let video = synth.collection.videos[0].id.clone();
    let cases: [(&str, &str, &str); 5] = [
        ("frames.jsonl", "\"descriptor\":[", "\"descriptor\":[0.5,"),
        ("frames.jsonl", "\"box\":[", "\"box\":[-50,"),
        ("tracks.jsonl", "\"points\":[[", "\"points\":[[1e9,"),
        (
            "frames.jsonl",
            "\"kind\":\"proposal\"",
            "\"kind\":\"proposal\",\"extra\":1",
        ),
        (
            "ground_truth.jsonl",
            "\"class_label\"",
            "\"class\":1,\"class_label\"",
        ),
    ];
    for (file, from, to) in cases {
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_collection(&synth.collection, dir.path()).unwrap();
        let path = dir.path().join(&video).join(file);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains(from), "{file} lacks {from}");
        fs::write(&path, text.replacen(from, to, 1)).unwrap();
        match load_collection(&manifest) {
            Err(Error::Invalid { path: p, .. }) => {
                assert!(p.ends_with(file), "{file}: located at {p:?}")
            }
            Err(Error::DimensionMismatch { .. }) => {}
            other => panic!("{file} {to}: expected a diagnostic, got {other:?}"),
        }
    }
}
