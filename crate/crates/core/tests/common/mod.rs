#![allow(dead_code)]

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tubeloc::consistency::TransitionScores;
use tubeloc::discovery::{FrameRef, Neighbor, NeighborGraph};
use tubeloc::io::TubeSet;
use tubeloc::solver::{Candidate, Trellis, TrellisFrame};
use tubeloc::{BBox, Descriptor, Frame, GroundTruth, Proposal, Tube, TubeRegion};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random chain trellis: `1..=max_frames` frames, `1..=max_candidates`
/// candidates with distinct shuffled ids, unary in `[0, 1]`, pairwise
/// consistency in `[-2, 1]`.
pub fn random_trellis(rng: &mut ChaCha8Rng, max_frames: usize, max_candidates: usize) -> Trellis {
    let n = rng.random_range(1..=max_frames);
    let frames: Vec<TrellisFrame> = (0..n)
        .map(|t| {
            let c = rng.random_range(1..=max_candidates);
            let mut ids: Vec<u32> = (0..40).collect();
            ids.shuffle(rng);
            TrellisFrame {
                key_frame: t * 20,
                candidates: ids[..c]
                    .iter()
                    .map(|&proposal_id| Candidate {
                        proposal_id,
                        unary: rng.random::<f64>(),
                    })
                    .collect(),
            }
        })
        .collect();
    let transitions = frames
        .windows(2)
        .map(|w| {
            let (r, c) = (w[0].candidates.len(), w[1].candidates.len());
            TransitionScores {
                rows: r,
                cols: c,
                appearance: (0..r * c).map(|_| rng.random_range(-2.0..=1.0)).collect(),
                motion: vec![0.0; r * c],
            }
        })
        .collect();
    Trellis::new(frames, transitions).unwrap()
}

pub fn random_lambda(rng: &mut ChaCha8Rng) -> f64 {
    *[0.0, 0.5, 2.0].choose(rng).unwrap()
}

pub fn random_box(rng: &mut ChaCha8Rng, w: f64, h: f64) -> BBox {
    let bw = rng.random_range(0.05..=1.0) * w;
    let bh = rng.random_range(0.05..=1.0) * h;
    BBox::new(
        rng.random_range(0.0..=w - bw),
        rng.random_range(0.0..=h - bh),
        bw,
        bh,
    )
    .unwrap()
}

pub fn random_descriptor(rng: &mut ChaCha8Rng, dim: usize) -> Descriptor {
    Descriptor::normalized(
        (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )
    .unwrap()
}

/// Frame with `n` random proposals and unit descriptors of dimension `dim`.
pub fn random_frame(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Frame {
    let (w, h) = (
        rng.random_range(100.0..=640.0),
        rng.random_range(100.0..=480.0),
    );
    Frame {
        frame_index: 0,
        width: w,
        height: h,
        proposals: (0..n as u32)
            .map(|id| Proposal {
                id,
                bbox: random_box(rng, w, h),
                descriptor: random_descriptor(rng, dim),
            })
            .collect(),
        signature: random_descriptor(rng, 4),
    }
}

/// `a` and `b` agree to `rel` relative error.
pub fn close_rel(a: f64, b: f64, rel: f64) -> bool {
    let scale = a.abs().max(b.abs());
    scale < 1e-250 || (a - b).abs() <= rel * scale
}

/// Random graph over `videos` videos with 3 key frames each; videos with
/// an index divisible by 5 are unlabeled.
pub fn random_setup(r: &mut ChaCha8Rng) -> (NeighborGraph, Vec<GroundTruth>, TubeSet) {
    let videos = r.random_range(2..12);
    let classes = r.random_range(1..5);
    let ids: Vec<String> = (0..videos).map(|v| format!("v{v:02}")).collect();
    let mut graph = NeighborGraph::default();
    let mut gt = Vec::new();
    let mut tubes = TubeSet::new();
    for (v, id) in ids.iter().enumerate() {
        for t in [0, 20, 40] {
            let k = r.random_range(0..6);
            let ns = (0..k)
                .map(|_| {
                    let mut w = r.random_range(0..videos);
                    if w == v {
                        w = (w + 1) % videos;
                    }
                    Neighbor {
                        frame: FrameRef {
                            video_id: ids[w].clone(),
                            frame_index: 20 * r.random_range(0..3),
                        },
                        similarity: r.random_range(0.0..5.0),
                    }
                })
                .collect();
            graph.entries.insert(
                FrameRef {
                    video_id: id.clone(),
                    frame_index: t,
                },
                ns,
            );
        }
        let b = random_box(r, 320.0, 240.0);
        tubes.insert(
            id.clone(),
            vec![Tube {
                video_id: id.clone(),
                regions: [(
                    0,
                    TubeRegion {
                        proposal_id: Some(0),
                        bbox: b,
                    },
                )]
                .into(),
                score: 0.0,
            }],
        );
        if v % 5 != 0 {
            gt.push(GroundTruth {
                video_id: id.clone(),
                frame_index: r.random_range(0..60),
                bbox: random_box(r, 320.0, 240.0),
                class_label: format!("c{}", r.random_range(0..classes)),
            });
        }
    }
    (graph, gt, tubes)
}
