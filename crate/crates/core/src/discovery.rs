//! The discovery-and-tracking loop.
//!
//! Each iteration first rebuilds the cross-video neighbor graph from the
//! current tubes (frame signatures on the first pass, region matching
//! afterwards), then relocalizes every video's tubes against that graph.
//! Both phases read a frozen state and may run in parallel across frames
//! or videos; the new state replaces the old one between phases.

use std::collections::BTreeMap;

use crate::appearance::{match_confidence, phi_appearance, AppearanceScores, RegionSet};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::io::TubeSet;
use crate::model::{BBox, Collection, Frame, Tube, TubeRegion, Video};
use crate::motion::{motion_coherence, FrameTracks};
use crate::solver::{build_trellis, solve_p_best, Trellis, TubeSolution};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameRef {
    pub video_id: String,
    pub frame_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub frame: FrameRef,
    pub similarity: f64,
}

/// Per key frame, its neighbors in other videos by descending similarity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighborGraph {
    pub entries: BTreeMap<FrameRef, Vec<Neighbor>>,
}

impl NeighborGraph {
    pub fn neighbors(&self, video_id: &str, frame_index: usize) -> &[Neighbor] {
        self.entries
            .get(&FrameRef {
                video_id: video_id.to_string(),
                frame_index,
            })
            .map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub iteration: usize,
    /// Key frames per video, in collection order.
    pub key_frames: Vec<Vec<usize>>,
    /// Ranked tubes per video from the last relocalization.
    pub tubes: Vec<Vec<Tube>>,
    /// Region saliency per video and key frame, in the frame's proposal
    /// order. Empty before the first relocalization.
    pub saliency: Vec<BTreeMap<usize, Vec<f64>>>,
    /// The graph the tubes were relocalized against.
    pub graph: NeighborGraph,
}

impl IterationState {
    /// Localized boxes of video `v` at key frame `t`, one per tube.
    pub fn localized(&self, v: usize, t: usize) -> Vec<BBox> {
        self.tubes[v]
            .iter()
            .filter_map(|tube| tube.regions.get(&t).map(|r| r.bbox))
            .collect()
    }

    pub fn tube_set(&self, collection: &Collection) -> TubeSet {
        collection
            .videos
            .iter()
            .zip(&self.tubes)
            .map(|(v, t)| (v.id.clone(), t.clone()))
            .collect()
    }
}

/// Tubes and graph after one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub iteration: usize,
    pub tubes: TubeSet,
    pub graph: NeighborGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryOutput {
    /// The best tube per video.
    pub tubes: TubeSet,
    pub graph: NeighborGraph,
    pub snapshots: Vec<Snapshot>,
}

fn try_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

fn key_frame(video: &Video, t: usize) -> Result<&Frame> {
    let frame = video.frame(t).ok_or_else(|| Error::MissingKeyFrame {
        video: video.id.clone(),
        frame: t,
    })?;
    if frame.proposals.is_empty() {
        return Err(Error::EmptyProposals(format!(
            "video {} key frame {t}",
            video.id
        )));
    }
    Ok(frame)
}

/// Whole-frame tubes for every video.
pub fn initialize(collection: &Collection, config: &Config) -> Result<IterationState> {
    if collection.videos.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let mut key_frames = Vec::new();
    let mut tubes = Vec::new();
    for v in &collection.videos {
        let ks = v.key_frames(config.keyframe_stride);
        for &t in &ks {
            key_frame(v, t)?;
        }
        tubes.push(vec![Tube::whole_frames(v, &ks)]);
        key_frames.push(ks);
    }
    Ok(IterationState {
        iteration: 0,
        saliency: vec![BTreeMap::new(); tubes.len()],
        key_frames,
        tubes,
        graph: NeighborGraph::default(),
    })
}

/// All key frames as `(video index, frame index)`.
fn all_key_frames(state: &IterationState) -> Vec<(usize, usize)> {
    state
        .key_frames
        .iter()
        .enumerate()
        .flat_map(|(v, ks)| ks.iter().map(move |&t| (v, t)))
        .collect()
}

fn signature_distance(
    collection: &Collection,
    a: (usize, usize),
    b: (usize, usize),
) -> Result<f64> {
    let fa = key_frame(&collection.videos[a.0], a.1)?;
    let fb = key_frame(&collection.videos[b.0], b.1)?;
    fa.signature.distance(&fb.signature)
}

/// Sort `(similarity, (video, frame))` by similarity descending, ties by
/// video then frame ascending, and keep `k`.
fn top_k(
    collection: &Collection,
    mut scored: Vec<(f64, (usize, usize))>,
    k: usize,
) -> Vec<Neighbor> {
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored
        .into_iter()
        .take(k)
        .map(|(similarity, (w, u))| Neighbor {
            frame: FrameRef {
                video_id: collection.videos[w].id.clone(),
                frame_index: u,
            },
            similarity,
        })
        .collect()
}

fn frame_ref(collection: &Collection, (v, t): (usize, usize)) -> FrameRef {
    FrameRef {
        video_id: collection.videos[v].id.clone(),
        frame_index: t,
    }
}

/// Signature-based neighbors: the `k` key frames of other videos with the
/// smallest signature distance. Similarity is the negated distance.
pub fn bootstrap_neighbors(
    collection: &Collection,
    state: &IterationState,
    k: usize,
) -> Result<NeighborGraph> {
    let frames = all_key_frames(state);
    let lists = try_map(&frames, |&q| {
        let scored = frames
            .iter()
            .filter(|c| c.0 != q.0)
            .map(|&c| Ok((-signature_distance(collection, q, c)?, c)))
            .collect::<Result<Vec<_>>>()?;
        Ok((frame_ref(collection, q), top_k(collection, scored, k)))
    })?;
    Ok(NeighborGraph {
        entries: lists.into_iter().collect(),
    })
}

/// The proposals of `frame` used to represent it in retrieval: those
/// contained in one of its localized regions, ranked by saliency (ties by
/// id) and capped at `config.retrieval_proposals`.
pub fn retrieval_subset<'a>(
    frame: &'a Frame,
    regions: &[BBox],
    saliency: &[f64],
    config: &Config,
) -> RegionSet<'a> {
    let mut idx: Vec<usize> = (0..frame.proposals.len())
        .filter(|&i| contained_in_any(&frame.proposals[i].bbox, regions, config))
        .collect();
    let sal = |i: usize| saliency.get(i).copied().unwrap_or(0.0);
    idx.sort_by(|&a, &b| {
        sal(b)
            .total_cmp(&sal(a))
            .then(frame.proposals[a].id.cmp(&frame.proposals[b].id))
    });
    idx.truncate(config.retrieval_proposals);
    RegionSet {
        width: frame.width,
        height: frame.height,
        proposals: idx.into_iter().map(|i| &frame.proposals[i]).collect(),
    }
}

/// Proposals of a neighbor frame allowed to support a match: those
/// contained in one of the regions localized in that frame.
pub fn neighbor_pool<'a>(frame: &'a Frame, regions: &[BBox], config: &Config) -> RegionSet<'a> {
    RegionSet::filtered(frame, |p| contained_in_any(&p.bbox, regions, config))
}

fn contained_in_any(b: &BBox, regions: &[BBox], config: &Config) -> bool {
    regions
        .iter()
        .any(|r| b.coverage_by(r) >= config.region_containment)
}

/// Retrieval similarity of two frames represented by their retrieval
/// subsets: the summed region saliency of the query subset matched against
/// the candidate subset. Zero when either side is empty.
pub fn subset_similarity(query: &RegionSet, candidate: &RegionSet, config: &Config) -> Result<f64> {
    if query.is_empty() || candidate.is_empty() {
        return Ok(0.0);
    }
    Ok(match_confidence(query, candidate, config)?
        .row_max()
        .iter()
        .sum())
}

/// A frame, its localized regions and its last region saliencies.
#[derive(Debug, Clone)]
pub struct RetrievalView<'a> {
    pub frame: &'a Frame,
    pub regions: Vec<BBox>,
    pub saliency: &'a [f64],
}

pub fn phm_frame_similarity(
    query: &RetrievalView,
    candidate: &RetrievalView,
    config: &Config,
) -> Result<f64> {
    let q = retrieval_subset(query.frame, &query.regions, query.saliency, config);
    let c = retrieval_subset(
        candidate.frame,
        &candidate.regions,
        candidate.saliency,
        config,
    );
    subset_similarity(&q, &c, config)
}

/// Rebuild the neighbor graph from the current state.
pub fn update_network(
    state: &IterationState,
    collection: &Collection,
    config: &Config,
) -> Result<NeighborGraph> {
    if state.iteration == 0 {
        return bootstrap_neighbors(collection, state, config.k_neighbors);
    }
    let frames = all_key_frames(state);
    let empty: Vec<f64> = Vec::new();
    let subsets: Vec<RegionSet> = frames
        .iter()
        .map(|&(v, t)| {
            let frame = key_frame(&collection.videos[v], t)?;
            let sal = state.saliency[v].get(&t).unwrap_or(&empty);
            Ok(retrieval_subset(frame, &state.localized(v, t), sal, config))
        })
        .collect::<Result<_>>()?;
    let positions: Vec<usize> = (0..frames.len()).collect();
    let lists = try_map(&positions, |&qi| {
        let q = frames[qi];
        let mut candidates: Vec<usize> =
            (0..frames.len()).filter(|&c| frames[c].0 != q.0).collect();
        if let Some(limit) = config.retrieval_shortlist {
            let mut by_sig = candidates
                .iter()
                .map(|&c| Ok((signature_distance(collection, q, frames[c])?, frames[c], c)))
                .collect::<Result<Vec<_>>>()?;
            by_sig.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            candidates = by_sig.into_iter().take(limit).map(|x| x.2).collect();
        }
        let scored = candidates
            .into_iter()
            .map(|c| {
                Ok((
                    subset_similarity(&subsets[qi], &subsets[c], config)?,
                    frames[c],
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((
            frame_ref(collection, q),
            top_k(collection, scored, config.k_neighbors),
        ))
    })?;
    Ok(NeighborGraph {
        entries: lists.into_iter().collect(),
    })
}

/// Scores of every proposal in one key frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameScores {
    pub frame_index: usize,
    pub proposal_ids: Vec<u32>,
    pub appearance: AppearanceScores,
    pub motion: Vec<f64>,
    /// `phi_a + alpha * phi_m`.
    pub unary: Vec<f64>,
}

/// Unary scores of all key frames of one video plus its trellis.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoScores {
    pub frames: Vec<FrameScores>,
    pub trellis: Trellis,
}

/// Score every key-frame proposal of video `v` against its neighbors, whose
/// proposal pools are confined to the regions localized in them.
pub fn score_video(
    collection: &Collection,
    v: usize,
    graph: &NeighborGraph,
    state: &IterationState,
    config: &Config,
) -> Result<VideoScores> {
    let video = &collection.videos[v];
    let mut frames = Vec::new();
    for &t in &state.key_frames[v] {
        let frame = key_frame(video, t)?;
        let query = RegionSet::whole(frame);
        let mut pools = Vec::new();
        for n in graph.neighbors(&video.id, t) {
            let w = collection
                .video_index(&n.frame.video_id)
                .ok_or_else(|| Error::UnknownVideo(n.frame.video_id.clone()))?;
            let nf = key_frame(&collection.videos[w], n.frame.frame_index)?;
            let regions = state.localized(w, n.frame.frame_index);
            let pool = neighbor_pool(nf, &regions, config);
            if !pool.is_empty() {
                pools.push(pool);
            }
        }
        let appearance = if pools.is_empty() {
            let zeros = vec![0.0; query.len()];
            AppearanceScores {
                saliency: zeros.clone(),
                standout: zeros.clone(),
                phi: zeros,
            }
        } else {
            phi_appearance(&query, &pools, config)?
        };
        let tracks = FrameTracks::at(video, t);
        let motion: Vec<f64> = frame
            .proposals
            .iter()
            .map(|p| motion_coherence(&p.bbox, &tracks))
            .collect();
        let unary = appearance
            .phi
            .iter()
            .zip(&motion)
            .map(|(a, m)| a + config.alpha * m)
            .collect();
        frames.push(FrameScores {
            frame_index: t,
            proposal_ids: frame.proposals.iter().map(|p| p.id).collect(),
            appearance,
            motion,
            unary,
        });
    }
    let unary: Vec<Vec<(u32, f64)>> = frames
        .iter()
        .map(|f| {
            f.proposal_ids
                .iter()
                .copied()
                .zip(f.unary.iter().copied())
                .collect()
        })
        .collect();
    let trellis = build_trellis(video, &state.key_frames[v], &unary, config)?;
    Ok(VideoScores { frames, trellis })
}

/// New tubes and saliencies for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct Relocalization {
    pub tubes: Vec<Tube>,
    pub saliency: BTreeMap<usize, Vec<f64>>,
}

fn solution_tube(video: &Video, sol: &TubeSolution) -> Tube {
    let regions = sol
        .key_frames
        .iter()
        .zip(&sol.proposal_ids)
        .map(|(&t, &id)| {
            let bbox = video.frames[&t]
                .proposal(id)
                .expect("trellis ids come from the frame")
                .bbox;
            (
                t,
                TubeRegion {
                    proposal_id: Some(id),
                    bbox,
                },
            )
        })
        .collect();
    Tube {
        video_id: video.id.clone(),
        regions,
        score: sol.objective,
    }
}

/// Relocalize video `v`: `p` tubes, or a single one on the final pass.
pub fn relocalize_video(
    collection: &Collection,
    v: usize,
    graph: &NeighborGraph,
    state: &IterationState,
    config: &Config,
    final_pass: bool,
) -> Result<Relocalization> {
    let scores = score_video(collection, v, graph, state, config)?;
    let p = if final_pass { 1 } else { config.p_tubes };
    let video = &collection.videos[v];
    let tubes = solve_p_best(&scores.trellis, p, config.lambda)
        .iter()
        .map(|s| solution_tube(video, s))
        .collect();
    let saliency = scores
        .frames
        .into_iter()
        .map(|f| (f.frame_index, f.appearance.saliency))
        .collect();
    Ok(Relocalization { tubes, saliency })
}

/// One full alternation: update the graph, then relocalize every video.
pub fn step(
    collection: &Collection,
    state: &IterationState,
    config: &Config,
    final_pass: bool,
) -> Result<IterationState> {
    let graph = update_network(state, collection, config)?;
    let videos: Vec<usize> = (0..collection.videos.len()).collect();
    let results = try_map(&videos, |&v| {
        relocalize_video(collection, v, &graph, state, config, final_pass)
    })?;
    let (tubes, saliency) = results.into_iter().map(|r| (r.tubes, r.saliency)).unzip();
    Ok(IterationState {
        iteration: state.iteration + 1,
        key_frames: state.key_frames.clone(),
        tubes,
        saliency,
        graph,
    })
}

/// Run `config.iterations` alternations and keep the best tube per video.
pub fn run_discovery(collection: &Collection, config: &Config) -> Result<DiscoveryOutput> {
    config.validate()?;
    let mut state = initialize(collection, config)?;
    let mut snapshots = Vec::with_capacity(config.iterations);
    for it in 1..=config.iterations {
        state = step(collection, &state, config, it == config.iterations)?;
        snapshots.push(Snapshot {
            iteration: it,
            tubes: state.tube_set(collection),
            graph: state.graph.clone(),
        });
    }
    let tubes = state
        .tube_set(collection)
        .into_iter()
        .map(|(id, mut ranked)| {
            ranked.truncate(1);
            (id, ranked)
        })
        .collect();
    Ok(DiscoveryOutput {
        tubes,
        graph: state.graph,
        snapshots,
    })
}
