//! Synthetic collections with planted objects, and brute-force oracles.
//!
//! Every video holds one object of its class moving along a piecewise-linear
//! path through the key frames. Each key frame carries:
//!
//! * the planted proposal (the object's box) with a noisy class prototype
//!   descriptor;
//! * part proposals nested inside it, with class-specific part descriptors;
//! * context proposals strictly containing it, with random descriptors;
//! * distractor proposals with random geometry and descriptors.
//!
//! Point tracks form one rigid object cluster that follows the box plus
//! static background clusters, occluded while the object covers them.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::appearance::{HoughGrid, MatchScoreTable, PhmResult, RegionSet};
use crate::config::Config;
use crate::discovery::{initialize, score_video, FrameRef, Neighbor, NeighborGraph};
use crate::error::{Error, Result};
use crate::evaluation::iou;
use crate::model::{
    key_frames, BBox, Collection, Descriptor, Frame, GroundTruth, Proposal, Track, Video,
};
use crate::solver::{Trellis, TubeSolution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub classes: usize,
    pub videos_per_class: usize,
    pub frames_per_video: usize,
    pub keyframe_stride: usize,
    pub frame_width: f64,
    pub frame_height: f64,
    pub descriptor_dim: usize,
    pub signature_dim: usize,
    /// Angle between class prototypes, degrees in `[0, 90]`.
    pub class_angle_deg: f64,
    /// Per-entry Gaussian noise added to class descriptors before
    /// normalization.
    pub descriptor_noise: f64,
    pub signature_noise: f64,
    pub parts: usize,
    pub context_boxes: usize,
    pub distractors: usize,
    /// Object width and height as fractions of the frame, `[min, max]`.
    pub object_size: [f64; 2],
    /// Object tracks form a `n x n` lattice inside the box.
    pub object_track_lattice: usize,
    pub background_clusters: usize,
    pub tracks_per_background_cluster: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 7,
            classes: 2,
            videos_per_class: 4,
            frames_per_video: 100,
            keyframe_stride: 20,
            frame_width: 320.0,
            frame_height: 240.0,
            descriptor_dim: 64,
            signature_dim: 32,
            class_angle_deg: 90.0,
            descriptor_noise: 0.0,
            signature_noise: 0.25,
            parts: 3,
            context_boxes: 1,
            distractors: 5,
            object_size: [0.25, 0.4],
            object_track_lattice: 6,
            background_clusters: 3,
            tracks_per_background_cluster: 24,
        }
    }
}

impl SynthSpec {
    pub fn proposals_per_frame(&self) -> usize {
        1 + self.parts + self.context_boxes + self.distractors
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Synth(m));
        if self.classes == 0 || self.videos_per_class == 0 || self.frames_per_video == 0 {
            return fail("class, video and frame counts must be >= 1".into());
        }
        if self.keyframe_stride == 0 || self.descriptor_dim == 0 || self.signature_dim == 0 {
            return fail("stride and dimensions must be >= 1".into());
        }
        if !(self.frame_width > 0.0 && self.frame_height > 0.0) {
            return fail("frame size must be positive".into());
        }
        if !(self.descriptor_noise >= 0.0 && self.signature_noise >= 0.0) {
            return fail("noise levels must be >= 0".into());
        }
        if !(0.0..=90.0).contains(&self.class_angle_deg) {
            return fail("class_angle_deg must be within [0, 90]".into());
        }
        let [lo, hi] = self.object_size;
        if !(lo > 0.0 && lo <= hi) {
            return fail(format!(
                "object_size {:?} must satisfy 0 < min <= max",
                self.object_size
            ));
        }
        if hi > 0.9 {
            return fail(format!(
                "object of size {hi} does not fit inside the frame with margin"
            ));
        }
        if self.object_track_lattice < 2 {
            return fail("object_track_lattice must be >= 2".into());
        }
        let needed = 1 + self.classes * (1 + self.parts);
        if needed > self.descriptor_dim {
            return fail(format!(
                "descriptor_dim {} too small for {needed} orthogonal prototypes",
                self.descriptor_dim
            ));
        }
        if self.classes > self.signature_dim {
            return fail("signature_dim must be >= classes".into());
        }
        Ok(())
    }
}

/// Planted tube of one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedVideo {
    pub class_label: String,
    /// Planted proposal id per key frame.
    pub proposal_ids: BTreeMap<usize, u32>,
    /// Planted box per key frame.
    pub boxes: BTreeMap<usize, BBox>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub videos: BTreeMap<String, PlantedVideo>,
}

impl PlantedTruth {
    /// Mean IoU of `tube` against the planted boxes of `video_id` over the
    /// planted key frames; frames the tube misses count as 0.
    pub fn tube_iou(&self, video_id: &str, tube: Option<&crate::model::Tube>) -> f64 {
        let Some(planted) = self.videos.get(video_id) else {
            return 0.0;
        };
        if planted.boxes.is_empty() {
            return 0.0;
        }
        let total: f64 = planted
            .boxes
            .iter()
            .map(|(t, b)| {
                tube.and_then(|tube| tube.regions.get(t))
                    .map_or(0.0, |r| iou(&r.bbox, b))
            })
            .sum();
        total / planted.boxes.len() as f64
    }

    /// Mean IoU of the best tube per video against the planted key-frame
    /// boxes.
    pub fn mean_iou(&self, tubes: &crate::io::TubeSet) -> f64 {
        if self.videos.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .videos
            .keys()
            .map(|id| self.tube_iou(id, tubes.get(id).and_then(|r| r.first())))
            .sum();
        total / self.videos.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCollection {
    pub collection: Collection,
    pub planted: PlantedTruth,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn orthonormal(rng: &mut ChaCha8Rng, dim: usize, count: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v = gaussian(rng, dim);
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

fn noisy(rng: &mut ChaCha8Rng, proto: &[f64], noise: f64) -> Result<Descriptor> {
    let v = if noise > 0.0 {
        proto
            .iter()
            .map(|p| p + noise * rng.sample::<f64, _>(StandardNormal))
            .collect()
    } else {
        proto.to_vec()
    };
    Descriptor::normalized(v)
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Result<Descriptor> {
    Descriptor::normalized(gaussian(rng, dim))
}

fn random_box(rng: &mut ChaCha8Rng, w: f64, h: f64, size: [f64; 2]) -> BBox {
    let bw = rng.random_range(size[0]..=size[1]) * w;
    let bh = rng.random_range(size[0]..=size[1]) * h;
    BBox {
        x_min: rng.random_range(0.0..=(w - bw)),
        y_min: rng.random_range(0.0..=(h - bh)),
        width: bw,
        height: bh,
    }
}

/// Box of `rel` (unit-square coordinates) inside `outer`.
fn sub_box(outer: &BBox, rel: &[f64; 4]) -> BBox {
    BBox {
        x_min: outer.x_min + rel[0] * outer.width,
        y_min: outer.y_min + rel[1] * outer.height,
        width: rel[2] * outer.width,
        height: rel[3] * outer.height,
    }
}

/// Generate a collection from `spec`. Deterministic in `spec.seed`.
pub fn generate_collection(spec: &SynthSpec) -> Result<SynthCollection> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.frame_width, spec.frame_height);

    let basis = orthonormal(
        &mut rng,
        spec.descriptor_dim,
        1 + spec.classes * (1 + spec.parts),
    );
    let cos = spec.class_angle_deg.to_radians().cos().max(0.0);
    let class_proto: Vec<Vec<f64>> = (0..spec.classes)
        .map(|c| {
            basis[0]
                .iter()
                .zip(&basis[1 + c])
                .map(|(s, e)| cos.sqrt() * s + (1.0 - cos).sqrt() * e)
                .collect()
        })
        .collect();
    let part_proto = |c: usize, k: usize| &basis[1 + spec.classes + c * spec.parts + k];
    let sig_proto = orthonormal(&mut rng, spec.signature_dim, spec.classes);
    let part_layout: Vec<Vec<[f64; 4]>> = (0..spec.classes)
        .map(|_| {
            (0..spec.parts)
                .map(|_| {
                    let sw = rng.random_range(0.3..=0.5);
                    let sh = rng.random_range(0.3..=0.5);
                    [
                        rng.random_range(0.0..=1.0 - sw),
                        rng.random_range(0.0..=1.0 - sh),
                        sw,
                        sh,
                    ]
                })
                .collect()
        })
        .collect();

    let n_videos = spec.classes * spec.videos_per_class;
    let mut classes: Vec<usize> = (0..n_videos).map(|i| i % spec.classes).collect();
    classes.shuffle(&mut rng);
    let keys = key_frames(spec.frames_per_video, spec.keyframe_stride);

    let mut videos = Vec::with_capacity(n_videos);
    let mut ground_truth = Vec::with_capacity(n_videos);
    let mut planted = PlantedTruth::default();
    for (vi, &class) in classes.iter().enumerate() {
        let id = format!("v{vi:03}");
        let label = format!("class{class}");
        let ow = rng.random_range(spec.object_size[0]..=spec.object_size[1]) * w;
        let oh = rng.random_range(spec.object_size[0]..=spec.object_size[1]) * h;
        let waypoints: Vec<BBox> = keys
            .iter()
            .map(|_| BBox {
                x_min: rng.random_range(0.0..=(w - ow)),
                y_min: rng.random_range(0.0..=(h - oh)),
                width: ow,
                height: oh,
            })
            .collect();
        let object_at = |f: usize| -> BBox {
            let seg = keys.iter().rposition(|&k| k <= f).unwrap_or(0);
            if seg + 1 >= keys.len() {
                waypoints[seg]
            } else {
                let t = (f - keys[seg]) as f64 / (keys[seg + 1] - keys[seg]) as f64;
                waypoints[seg].lerp(&waypoints[seg + 1], t)
            }
        };

        let mut frames = BTreeMap::new();
        let mut pv = PlantedVideo {
            class_label: label.clone(),
            proposal_ids: BTreeMap::new(),
            boxes: BTreeMap::new(),
        };
        for (ki, &t) in keys.iter().enumerate() {
            let obj = waypoints[ki];
            let mut boxes: Vec<(BBox, Descriptor)> = Vec::with_capacity(spec.proposals_per_frame());
            boxes.push((
                obj,
                noisy(&mut rng, &class_proto[class], spec.descriptor_noise)?,
            ));
            for (k, rel) in part_layout[class].iter().enumerate() {
                let d = noisy(&mut rng, part_proto(class, k), spec.descriptor_noise)?;
                boxes.push((sub_box(&obj, rel), d));
            }
            for _ in 0..spec.context_boxes {
                let x0 = (obj.x_min - rng.random_range(0.1..=0.5) * ow).max(0.0);
                let y0 = (obj.y_min - rng.random_range(0.1..=0.5) * oh).max(0.0);
                let x1 = (obj.x_max() + rng.random_range(0.1..=0.5) * ow).min(w);
                let y1 = (obj.y_max() + rng.random_range(0.1..=0.5) * oh).min(h);
                let ctx = BBox {
                    x_min: x0,
                    y_min: y0,
                    width: x1 - x0,
                    height: y1 - y0,
                };
                boxes.push((ctx, random_unit(&mut rng, spec.descriptor_dim)?));
            }
            for _ in 0..spec.distractors {
                let b = loop {
                    let b = random_box(&mut rng, w, h, [0.1, 0.45]);
                    if iou(&b, &obj) <= 0.3 {
                        break b;
                    }
                };
                boxes.push((b, random_unit(&mut rng, spec.descriptor_dim)?));
            }
            let mut ids: Vec<u32> = (0..boxes.len() as u32).collect();
            ids.shuffle(&mut rng);
            let mut proposals: Vec<Proposal> = boxes
                .into_iter()
                .zip(&ids)
                .map(|((bbox, descriptor), &id)| Proposal {
                    id,
                    bbox,
                    descriptor,
                })
                .collect();
            proposals.sort_by_key(|p| p.id);
            pv.proposal_ids.insert(t, ids[0]);
            pv.boxes.insert(t, obj);
            let signature = noisy(&mut rng, &sig_proto[class], spec.signature_noise)?;
            frames.insert(
                t,
                Frame {
                    frame_index: t,
                    width: w,
                    height: h,
                    proposals,
                    signature,
                },
            );
        }

        let mut tracks = Vec::new();
        let n = spec.object_track_lattice;
        for i in 0..n {
            for j in 0..n {
                let (u, v) = ((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                tracks.push(Track {
                    id: tracks.len() as u32,
                    cluster: 0,
                    start: 0,
                    points: (0..spec.frames_per_video)
                        .map(|f| {
                            let b = object_at(f);
                            (b.x_min + u * b.width, b.y_min + v * b.height)
                        })
                        .collect(),
                });
            }
        }
        for c in 0..spec.background_clusters {
            let region = random_box(&mut rng, w, h, [0.3, 0.6]);
            for _ in 0..spec.tracks_per_background_cluster {
                let x = region.x_min + rng.random::<f64>() * region.width;
                let y = region.y_min + rng.random::<f64>() * region.height;
                // split into visible runs around the occluding object
                let mut run: Vec<(f64, f64)> = Vec::new();
                let mut start = 0;
                for f in 0..=spec.frames_per_video {
                    let visible = f < spec.frames_per_video && {
                        let o = object_at(f);
                        !(x >= o.x_min - 1.0
                            && x <= o.x_max() + 1.0
                            && y >= o.y_min - 1.0
                            && y <= o.y_max() + 1.0)
                    };
                    if visible {
                        if run.is_empty() {
                            start = f;
                        }
                        run.push((x, y));
                    } else if !run.is_empty() {
                        let points = std::mem::take(&mut run);
                        if points.len() >= 2 {
                            tracks.push(Track {
                                id: tracks.len() as u32,
                                cluster: 1 + c as u32,
                                start,
                                points,
                            });
                        }
                    }
                }
            }
        }

        let annotated = rng.random_range(0..spec.frames_per_video);
        ground_truth.push(GroundTruth {
            video_id: id.clone(),
            frame_index: annotated,
            bbox: object_at(annotated),
            class_label: label,
        });
        planted.videos.insert(id.clone(), pv);
        videos.push(Video {
            id,
            num_frames: spec.frames_per_video,
            width: w,
            height: h,
            frames,
            tracks,
        });
    }
    Ok(SynthCollection {
        collection: Collection {
            descriptor_dim: spec.descriptor_dim,
            signature_dim: spec.signature_dim,
            videos,
            ground_truth,
        },
        planted,
    })
}

/// Mean affinity between planted descriptors of the same class minus that
/// between planted descriptors of different classes.
pub fn affinity_margin(synth: &SynthCollection, gamma: f64) -> f64 {
    let mut planted: Vec<(&str, &[f64])> = Vec::new();
    for v in &synth.collection.videos {
        let pv = &synth.planted.videos[&v.id];
        for (t, id) in &pv.proposal_ids {
            let p = v.frames[t].proposal(*id).expect("planted proposal exists");
            planted.push((pv.class_label.as_str(), p.descriptor.as_slice()));
        }
    }
    let (mut same, mut ns, mut cross, mut nc) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..planted.len() {
        for j in i + 1..planted.len() {
            let d2: f64 = planted[i]
                .1
                .iter()
                .zip(planted[j].1)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let a = (-gamma * d2).exp();
            if planted[i].0 == planted[j].0 {
                same += a;
                ns += 1;
            } else {
                cross += a;
                nc += 1;
            }
        }
    }
    let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    mean(same, ns) - mean(cross, nc)
}

/// Descriptor noise at which the affinity margin drops to `ratio` times
/// its noise-free value, found by bisection on generated collections.
pub fn noise_for_margin_ratio(spec: &SynthSpec, ratio: f64, gamma: f64) -> Result<f64> {
    let margin_at = |noise: f64| -> Result<f64> {
        let s = SynthSpec {
            descriptor_noise: noise,
            ..spec.clone()
        };
        Ok(affinity_margin(&generate_collection(&s)?, gamma))
    };
    let target = ratio * margin_at(0.0)?;
    let (mut lo, mut hi) = (0.0, 1.0);
    while margin_at(hi)? > target {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Synth("margin never drops to the target".into()));
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if margin_at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

const BRUTE_MAX_FRAMES: usize = 8;
const BRUTE_MAX_CANDIDATES: usize = 10;

/// Visit every candidate sequence in lexicographic proposal-id order with
/// its plainly summed objective.
fn enumerate_tubes(
    trellis: &Trellis,
    lambda: f64,
    mut visit: impl FnMut(&[usize], f64),
) -> Result<()> {
    let n = trellis.frames.len();
    if n > BRUTE_MAX_FRAMES
        || trellis
            .frames
            .iter()
            .any(|f| f.candidates.len() > BRUTE_MAX_CANDIDATES)
    {
        return Err(Error::OracleGuard(format!(
            "brute force limited to {BRUTE_MAX_FRAMES} frames x {BRUTE_MAX_CANDIDATES} candidates"
        )));
    }
    let orders: Vec<Vec<usize>> = trellis
        .frames
        .iter()
        .map(|f| {
            let mut o: Vec<usize> = (0..f.candidates.len()).collect();
            o.sort_by_key(|&i| f.candidates[i].proposal_id);
            o
        })
        .collect();
    let mut digits = vec![0usize; n];
    let mut choice = vec![0usize; n];
    loop {
        for ((c, order), &d) in choice.iter_mut().zip(&orders).zip(&digits) {
            *c = order[d];
        }
        let mut score = 0.0;
        for (frame, &c) in trellis.frames.iter().zip(&choice) {
            score += frame.candidates[c].unary;
        }
        for t in 0..n.saturating_sub(1) {
            let tr = &trellis.transitions[t];
            let k = choice[t] * tr.cols + choice[t + 1];
            score += lambda * (tr.appearance[k] + tr.motion[k]);
        }
        visit(&choice, score);
        // odometer, last frame fastest
        let mut t = n;
        loop {
            if t == 0 {
                return Ok(());
            }
            t -= 1;
            digits[t] += 1;
            if digits[t] < orders[t].len() {
                break;
            }
            digits[t] = 0;
        }
    }
}

/// Exhaustive maximizer of the tube objective, ties to the smallest
/// proposal-id sequence. Guarded to 8 frames x 10 candidates.
pub fn brute_force_tube(trellis: &Trellis, lambda: f64) -> Result<TubeSolution> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    enumerate_tubes(trellis, lambda, |c, s| {
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((c.to_vec(), s));
        }
    })?;
    let (choice, objective) = best.expect("trellis has at least one sequence");
    Ok(TubeSolution {
        key_frames: trellis.frames.iter().map(|f| f.key_frame).collect(),
        proposal_ids: trellis
            .frames
            .iter()
            .zip(&choice)
            .map(|(f, &c)| f.candidates[c].proposal_id)
            .collect(),
        choice,
        objective,
    })
}

/// Best and runner-up objective over all sequences.
fn brute_force_top2(trellis: &Trellis, lambda: f64) -> Result<(TubeSolution, f64)> {
    let best = brute_force_tube(trellis, lambda)?;
    let mut second = f64::NEG_INFINITY;
    enumerate_tubes(trellis, lambda, |c, s| {
        if c != best.choice.as_slice() && s > second {
            second = s;
        }
    })?;
    Ok((best, second))
}

/// Naive PHM: every bin, every pair, full Gaussian per evaluation.
pub fn brute_force_phm(rt: &RegionSet, ru: &RegionSet, config: &Config) -> Result<PhmResult> {
    if rt.is_empty() || ru.is_empty() {
        return Err(Error::EmptyProposals("brute-force PHM".into()));
    }
    if rt.len() * ru.len() > 10_000 {
        return Err(Error::OracleGuard(
            "brute-force PHM limited to 10^4 pairs".into(),
        ));
    }
    let loc = |s: &RegionSet, p: &Proposal| {
        let cx = p.bbox.x_min + p.bbox.width / 2.0;
        let cy = p.bbox.y_min + p.bbox.height / 2.0;
        [
            cx / s.width,
            cy / s.height,
            (p.bbox.width * p.bbox.height / (s.width * s.height))
                .sqrt()
                .ln(),
        ]
    };
    let mut pairs: Vec<(f64, [f64; 3])> = Vec::with_capacity(rt.len() * ru.len());
    for a in &rt.proposals {
        for b in &ru.proposals {
            let fa = a.descriptor.as_slice();
            let fb = b.descriptor.as_slice();
            if fa.len() != fb.len() {
                return Err(Error::DimensionMismatch {
                    expected: fa.len(),
                    actual: fb.len(),
                });
            }
            let d2: f64 = fa.iter().zip(fb).map(|(x, y)| (x - y).powi(2)).sum();
            let (la, lb) = (loc(rt, a), loc(ru, b));
            pairs.push((
                (-config.affinity_gamma * d2).exp(),
                [la[0] - lb[0], la[1] - lb[1], la[2] - lb[2]],
            ));
        }
    }
    let params = config.hough;
    let centers = params.axis_centers();
    let bw = params.bandwidth();
    let mut bins: Vec<[f64; 3]> = Vec::with_capacity(params.num_bins());
    for &cu in &centers[0] {
        for &cv in &centers[1] {
            for &cs in &centers[2] {
                bins.push([cu, cv, cs]);
            }
        }
    }
    let lik = |off: &[f64; 3], x: &[f64; 3]| -> f64 {
        let q: f64 = (0..3).map(|a| ((off[a] - x[a]) / bw[a]).powi(2)).sum();
        (-0.5 * q).exp()
    };
    let mut grid = HoughGrid::zeros(params);
    for (bin, x) in bins.iter().enumerate() {
        for (a, off) in &pairs {
            grid.votes[bin] += a * lik(off, x);
        }
    }
    let scores = pairs
        .iter()
        .map(|(a, off)| {
            let s: f64 = bins
                .iter()
                .enumerate()
                .map(|(bin, x)| lik(off, x) * grid.votes[bin])
                .sum();
            a * s
        })
        .collect();
    Ok(PhmResult {
        grid,
        table: MatchScoreTable {
            rows: rt.len(),
            cols: ru.len(),
            scores,
        },
    })
}

/// Outcome of [`verify_planted_optimal`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCheck {
    pub optimal: bool,
    pub counterexample: Option<String>,
}

/// Neighbor graph linking each key frame to key frames of other videos of
/// the same class, ordered by (video id, frame index), capped at `k`.
pub fn ideal_neighbors(synth: &SynthCollection, stride: usize, k: usize) -> NeighborGraph {
    let labels: BTreeMap<&str, &str> = synth
        .planted
        .videos
        .iter()
        .map(|(id, p)| (id.as_str(), p.class_label.as_str()))
        .collect();
    let mut graph = NeighborGraph::default();
    for v in &synth.collection.videos {
        for t in v.key_frames(stride) {
            let ns: Vec<Neighbor> = synth
                .collection
                .videos
                .iter()
                .filter(|w| w.id != v.id && labels.get(w.id.as_str()) == labels.get(v.id.as_str()))
                .flat_map(|w| {
                    w.key_frames(stride).into_iter().map(|u| Neighbor {
                        frame: FrameRef {
                            video_id: w.id.clone(),
                            frame_index: u,
                        },
                        similarity: 1.0,
                    })
                })
                .take(k)
                .collect();
            graph.entries.insert(
                FrameRef {
                    video_id: v.id.clone(),
                    frame_index: t,
                },
                ns,
            );
        }
    }
    graph
}

/// Check by exhaustive enumeration that, with same-class neighbors and
/// whole-frame neighbor regions, every video's planted tube is the unique
/// maximizer of the tube objective.
pub fn verify_planted_optimal(synth: &SynthCollection, config: &Config) -> Result<PlantedCheck> {
    let state = initialize(&synth.collection, config)?;
    let graph = ideal_neighbors(synth, config.keyframe_stride, config.k_neighbors);
    for (v, video) in synth.collection.videos.iter().enumerate() {
        let scores = score_video(&synth.collection, v, &graph, &state, config)?;
        let (best, second) = brute_force_top2(&scores.trellis, config.lambda)?;
        let planted: Vec<u32> = synth.planted.videos[&video.id]
            .proposal_ids
            .values()
            .copied()
            .collect();
        if best.proposal_ids != planted {
            return Ok(PlantedCheck {
                optimal: false,
                counterexample: Some(format!(
                    "video {}: optimum {:?} differs from planted {:?}",
                    video.id, best.proposal_ids, planted
                )),
            });
        }
        if !(best.objective > second) {
            return Ok(PlantedCheck {
                optimal: false,
                counterexample: Some(format!(
                    "video {}: planted tube ties with another tube",
                    video.id
                )),
            });
        }
    }
    Ok(PlantedCheck {
        optimal: true,
        counterexample: None,
    })
}
