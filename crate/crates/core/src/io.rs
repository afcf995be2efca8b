//! Line-delimited JSON files: collection manifests, per-video feature
//! sidecars, and result files.
//!
//! Layout of a collection directory:
//!
//! ```text
//! collection.jsonl          {"kind":"collection",...} then one {"kind":"video",...} per video
//! <video>/frames.jsonl      {"kind":"frame",...} and {"kind":"proposal",...} records
//! <video>/tracks.jsonl      {"kind":"track",...} records
//! <video>/ground_truth.jsonl {"kind":"ground_truth",...} (optional)
//! ```
//!
//! Floats are written in shortest round-trip form so a save/load cycle
//! reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::appearance::HoughGrid;
use crate::discovery::{FrameRef, Neighbor, NeighborGraph, Snapshot};
use crate::error::{Error, Result};
use crate::model::{
    BBox, Collection, Descriptor, Frame, GroundTruth, Proposal, Track, Tube, TubeRegion, Video,
};
use crate::solver::Trellis;

pub const FORMAT: &str = "tubeloc/1";
pub const MANIFEST_FILE: &str = "collection.jsonl";
pub const TUBES_FILE: &str = "tubes.jsonl";
pub const GRAPH_FILE: &str = "graph.jsonl";

/// Slack in pixels when checking that geometry lies inside the frame.
const BOUNDS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ManifestRecord {
    Collection {
        format: String,
        descriptor_dim: usize,
        signature_dim: usize,
    },
    Video {
        id: String,
        num_frames: usize,
        width: f64,
        height: f64,
        frames: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tracks: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ground_truth: Option<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FrameRecord {
    Frame {
        frame_index: usize,
        signature: Vec<f64>,
    },
    Proposal {
        frame_index: usize,
        id: u32,
        #[serde(rename = "box")]
        bbox: [f64; 4],
        descriptor: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TrackRecord {
    Track {
        id: u32,
        cluster: u32,
        start: usize,
        points: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum GroundTruthRecord {
    GroundTruth {
        video_id: String,
        frame_index: usize,
        #[serde(rename = "box")]
        bbox: [f64; 4],
        class_label: String,
    },
}

/// One key-frame region of a ranked tube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeRecord {
    pub video_id: String,
    pub rank: usize,
    pub frame_index: usize,
    pub proposal_id: Option<u32>,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborRecord {
    pub video_id: String,
    pub frame_index: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRecord {
    pub video_id: String,
    pub frame_index: usize,
    pub neighbors: Vec<NeighborRecord>,
}

/// Ranked tubes per video id; index 0 is the best tube.
pub type TubeSet = BTreeMap<String, Vec<Tube>>;

fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec =
            serde_json::from_str(&line).map_err(|e| Error::invalid(path, i + 1, e.to_string()))?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

fn write_records<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, &r).map_err(|e| Error::invalid(path, 0, e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn valid_video_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && id != "."
        && id != ".."
}

/// The manifest followed by every sidecar file it references, in manifest
/// order.
pub fn collection_files(manifest: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let manifest = manifest.as_ref();
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut files = vec![manifest.to_path_buf()];
    for (_, rec) in read_records::<ManifestRecord>(manifest)? {
        if let ManifestRecord::Video {
            frames,
            tracks,
            ground_truth,
            ..
        } = rec
        {
            files.extend(
                [Some(frames), tracks, ground_truth]
                    .into_iter()
                    .flatten()
                    .map(|f| base.join(f)),
            );
        }
    }
    Ok(files)
}

/// Load and validate a collection from its manifest file.
pub fn load_collection(manifest: impl AsRef<Path>) -> Result<Collection> {
    let manifest = manifest.as_ref();
    let base = manifest.parent().unwrap_or(Path::new("."));
    let records: Vec<(usize, ManifestRecord)> = read_records(manifest)?;
    let mut iter = records.into_iter();
    let (descriptor_dim, signature_dim) = match iter.next() {
        Some((
            _,
            ManifestRecord::Collection {
                format,
                descriptor_dim,
                signature_dim,
            },
        )) => {
            if format != FORMAT {
                return Err(Error::invalid(
                    manifest,
                    1,
                    format!("unsupported format {format:?}"),
                ));
            }
            if descriptor_dim == 0 || signature_dim == 0 {
                return Err(Error::invalid(manifest, 1, "dimensions must be >= 1"));
            }
            (descriptor_dim, signature_dim)
        }
        Some((line, _)) => {
            return Err(Error::invalid(
                manifest,
                line,
                "first record must be the collection header",
            ))
        }
        None => return Err(Error::invalid(manifest, 1, "empty manifest")),
    };

    let mut videos = Vec::new();
    let mut ground_truth = Vec::new();
    for (line, rec) in iter {
        let ManifestRecord::Video {
            id,
            num_frames,
            width,
            height,
            frames,
            tracks,
            ground_truth: gt,
        } = rec
        else {
            return Err(Error::invalid(
                manifest,
                line,
                "duplicate collection header",
            ));
        };
        if !valid_video_id(&id) {
            return Err(Error::invalid(
                manifest,
                line,
                format!("invalid video id {id:?}"),
            ));
        }
        if videos.iter().any(|v: &Video| v.id == id) {
            return Err(Error::invalid(
                manifest,
                line,
                format!("duplicate video id {id:?}"),
            ));
        }
        if num_frames == 0
            || !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite())
        {
            return Err(Error::invalid(
                manifest,
                line,
                format!("video {id}: bad frame count or size"),
            ));
        }
        let mut video = Video {
            id: id.clone(),
            num_frames,
            width,
            height,
            frames: BTreeMap::new(),
            tracks: Vec::new(),
        };
        load_frames(
            &base.join(&frames),
            &mut video,
            descriptor_dim,
            signature_dim,
        )?;
        if let Some(t) = tracks {
            video.tracks = load_tracks(&base.join(&t), &video)?;
        }
        if let Some(g) = gt {
            ground_truth.extend(load_ground_truth(&base.join(&g), &video)?);
        }
        videos.push(video);
    }
    videos.sort_by(|a, b| a.id.cmp(&b.id));
    ground_truth.sort_by(|a: &GroundTruth, b| a.video_id.cmp(&b.video_id));
    Ok(Collection {
        descriptor_dim,
        signature_dim,
        videos,
        ground_truth,
    })
}

fn descriptor(
    path: &Path,
    line: usize,
    what: &str,
    values: Vec<f64>,
    dim: usize,
) -> Result<Descriptor> {
    if values.len() != dim {
        return Err(Error::invalid(
            path,
            line,
            format!(
                "{what}: dimension mismatch, expected {dim}, got {}",
                values.len()
            ),
        ));
    }
    Descriptor::normalized(values).map_err(|e| Error::invalid(path, line, format!("{what}: {e}")))
}

fn load_frames(path: &Path, video: &mut Video, dim: usize, sig_dim: usize) -> Result<()> {
    let mut proposals: Vec<(usize, usize, Proposal)> = Vec::new();
    for (line, rec) in read_records::<FrameRecord>(path)? {
        match rec {
            FrameRecord::Frame {
                frame_index,
                signature,
            } => {
                if frame_index >= video.num_frames {
                    return Err(Error::invalid(
                        path,
                        line,
                        format!("frame {frame_index} beyond video length"),
                    ));
                }
                let signature = descriptor(
                    path,
                    line,
                    &format!("frame {frame_index} signature"),
                    signature,
                    sig_dim,
                )?;
                let prev = video.frames.insert(
                    frame_index,
                    Frame {
                        frame_index,
                        width: video.width,
                        height: video.height,
                        proposals: Vec::new(),
                        signature,
                    },
                );
                if prev.is_some() {
                    return Err(Error::invalid(
                        path,
                        line,
                        format!("duplicate frame {frame_index}"),
                    ));
                }
            }
            FrameRecord::Proposal {
                frame_index,
                id,
                bbox,
                descriptor: d,
            } => {
                let what = format!("frame {frame_index} proposal {id}");
                let bbox = BBox::try_from(bbox)
                    .map_err(|e| Error::invalid(path, line, format!("{what}: {e}")))?;
                if !bbox.within_frame(video.width, video.height, BOUNDS_TOL) {
                    return Err(Error::invalid(
                        path,
                        line,
                        format!("{what}: box outside frame bounds"),
                    ));
                }
                let descriptor = descriptor(path, line, &what, d, dim)?;
                proposals.push((
                    line,
                    frame_index,
                    Proposal {
                        id,
                        bbox,
                        descriptor,
                    },
                ));
            }
        }
    }
    for (line, frame_index, p) in proposals {
        let Some(frame) = video.frames.get_mut(&frame_index) else {
            return Err(Error::invalid(
                path,
                line,
                format!("proposal {} references missing frame {frame_index}", p.id),
            ));
        };
        if frame.proposals.iter().any(|q| q.id == p.id) {
            return Err(Error::invalid(
                path,
                line,
                format!("frame {frame_index}: duplicate proposal id {}", p.id),
            ));
        }
        frame.proposals.push(p);
    }
    for f in video.frames.values_mut() {
        f.proposals.sort_by_key(|p| p.id);
    }
    Ok(())
}

fn load_tracks(path: &Path, video: &Video) -> Result<Vec<Track>> {
    let mut tracks: Vec<Track> = Vec::new();
    for (
        line,
        TrackRecord::Track {
            id,
            cluster,
            start,
            points,
        },
    ) in read_records(path)?
    {
        if points.len() < 2 {
            return Err(Error::invalid(
                path,
                line,
                format!("track {id}: needs at least 2 points"),
            ));
        }
        if start + points.len() > video.num_frames {
            return Err(Error::invalid(
                path,
                line,
                format!("track {id}: extends past the last frame"),
            ));
        }
        if let Some(p) = points.iter().find(|[x, y]| {
            !(x.is_finite() && y.is_finite())
                || *x < -BOUNDS_TOL
                || *y < -BOUNDS_TOL
                || *x > video.width + BOUNDS_TOL
                || *y > video.height + BOUNDS_TOL
        }) {
            return Err(Error::invalid(
                path,
                line,
                format!("track {id}: point {p:?} outside frame"),
            ));
        }
        if tracks.iter().any(|t| t.id == id) {
            return Err(Error::invalid(
                path,
                line,
                format!("duplicate track id {id}"),
            ));
        }
        tracks.push(Track {
            id,
            cluster,
            start,
            points: points.into_iter().map(|[x, y]| (x, y)).collect(),
        });
    }
    tracks.sort_by_key(|t| t.id);
    Ok(tracks)
}

fn load_ground_truth(path: &Path, video: &Video) -> Result<Vec<GroundTruth>> {
    let mut out = Vec::new();
    for (
        line,
        GroundTruthRecord::GroundTruth {
            video_id,
            frame_index,
            bbox,
            class_label,
        },
    ) in read_records(path)?
    {
        if video_id != video.id {
            return Err(Error::invalid(
                path,
                line,
                format!(
                    "ground truth for {video_id:?} in file of video {:?}",
                    video.id
                ),
            ));
        }
        if frame_index >= video.num_frames {
            return Err(Error::invalid(
                path,
                line,
                format!("annotated frame {frame_index} beyond video length"),
            ));
        }
        if !out.is_empty() {
            return Err(Error::invalid(
                path,
                line,
                "only one annotated frame per video is supported",
            ));
        }
        let bbox = BBox::try_from(bbox).map_err(|e| Error::invalid(path, line, e.to_string()))?;
        out.push(GroundTruth {
            video_id,
            frame_index,
            bbox,
            class_label,
        });
    }
    Ok(out)
}

/// Write a collection in the layout read by [`load_collection`]. Returns the
/// manifest path.
pub fn save_collection(collection: &Collection, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let mut manifest = vec![ManifestRecord::Collection {
        format: FORMAT.into(),
        descriptor_dim: collection.descriptor_dim,
        signature_dim: collection.signature_dim,
    }];
    for v in &collection.videos {
        if !valid_video_id(&v.id) {
            return Err(Error::UnknownVideo(v.id.clone()));
        }
        let gt: Vec<&GroundTruth> = collection
            .ground_truth
            .iter()
            .filter(|g| g.video_id == v.id)
            .collect();
        let frames = format!("{}/frames.jsonl", v.id);
        let tracks = format!("{}/tracks.jsonl", v.id);
        let gt_file = format!("{}/ground_truth.jsonl", v.id);
        let mut records = Vec::new();
        for f in v.frames.values() {
            records.push(FrameRecord::Frame {
                frame_index: f.frame_index,
                signature: f.signature.as_slice().to_vec(),
            });
            for p in &f.proposals {
                records.push(FrameRecord::Proposal {
                    frame_index: f.frame_index,
                    id: p.id,
                    bbox: p.bbox.into(),
                    descriptor: p.descriptor.as_slice().to_vec(),
                });
            }
        }
        write_records(&dir.join(&frames), records)?;
        write_records(
            &dir.join(&tracks),
            v.tracks.iter().map(|t| TrackRecord::Track {
                id: t.id,
                cluster: t.cluster,
                start: t.start,
                points: t.points.iter().map(|&(x, y)| [x, y]).collect(),
            }),
        )?;
        if !gt.is_empty() {
            write_records(
                &dir.join(&gt_file),
                gt.iter().map(|g| GroundTruthRecord::GroundTruth {
                    video_id: g.video_id.clone(),
                    frame_index: g.frame_index,
                    bbox: g.bbox.into(),
                    class_label: g.class_label.clone(),
                }),
            )?;
        }
        manifest.push(ManifestRecord::Video {
            id: v.id.clone(),
            num_frames: v.num_frames,
            width: v.width,
            height: v.height,
            frames,
            tracks: Some(tracks),
            ground_truth: (!gt.is_empty()).then_some(gt_file),
        });
    }
    let path = dir.join(MANIFEST_FILE);
    write_records(&path, manifest)?;
    Ok(path)
}

pub fn tube_records(tubes: &TubeSet) -> Vec<TubeRecord> {
    let mut out = Vec::new();
    for (video_id, ranked) in tubes {
        for (rank, tube) in ranked.iter().enumerate() {
            for (&frame_index, region) in &tube.regions {
                out.push(TubeRecord {
                    video_id: video_id.clone(),
                    rank,
                    frame_index,
                    proposal_id: region.proposal_id,
                    bbox: region.bbox,
                    score: tube.score,
                });
            }
        }
    }
    out
}

pub fn write_tubes(path: impl AsRef<Path>, tubes: &TubeSet) -> Result<()> {
    write_records(path.as_ref(), tube_records(tubes))
}

pub fn read_tubes(path: impl AsRef<Path>) -> Result<TubeSet> {
    let path = path.as_ref();
    let mut out: TubeSet = BTreeMap::new();
    for (line, r) in read_records::<TubeRecord>(path)? {
        let ranked = out.entry(r.video_id.clone()).or_default();
        if r.rank > ranked.len() {
            return Err(Error::invalid(
                path,
                line,
                format!("tube rank {} out of sequence", r.rank),
            ));
        }
        if r.rank == ranked.len() {
            ranked.push(Tube {
                video_id: r.video_id.clone(),
                regions: BTreeMap::new(),
                score: r.score,
            });
        }
        let tube = &mut ranked[r.rank];
        let region = TubeRegion {
            proposal_id: r.proposal_id,
            bbox: r.bbox,
        };
        if tube.regions.insert(r.frame_index, region).is_some() {
            return Err(Error::invalid(
                path,
                line,
                format!("duplicate region at frame {}", r.frame_index),
            ));
        }
    }
    Ok(out)
}

pub fn graph_records(graph: &NeighborGraph) -> Vec<GraphRecord> {
    graph
        .entries
        .iter()
        .map(|(q, ns)| GraphRecord {
            video_id: q.video_id.clone(),
            frame_index: q.frame_index,
            neighbors: ns
                .iter()
                .map(|n| NeighborRecord {
                    video_id: n.frame.video_id.clone(),
                    frame_index: n.frame.frame_index,
                    similarity: n.similarity,
                })
                .collect(),
        })
        .collect()
}

pub fn write_graph(path: impl AsRef<Path>, graph: &NeighborGraph) -> Result<()> {
    write_records(path.as_ref(), graph_records(graph))
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<NeighborGraph> {
    let path = path.as_ref();
    let mut graph = NeighborGraph::default();
    for (line, r) in read_records::<GraphRecord>(path)? {
        let key = FrameRef {
            video_id: r.video_id,
            frame_index: r.frame_index,
        };
        let ns = r
            .neighbors
            .into_iter()
            .map(|n| Neighbor {
                frame: FrameRef {
                    video_id: n.video_id,
                    frame_index: n.frame_index,
                },
                similarity: n.similarity,
            })
            .collect();
        if graph.entries.insert(key, ns).is_some() {
            return Err(Error::invalid(path, line, "duplicate query frame"));
        }
    }
    Ok(graph)
}

/// Write final tubes and graph into `out_dir`.
pub fn save_results(
    tubes: &TubeSet,
    graph: &NeighborGraph,
    out_dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = out_dir.as_ref();
    write_tubes(dir.join(TUBES_FILE), tubes)?;
    write_graph(dir.join(GRAPH_FILE), graph)
}

pub fn snapshot_dir(out_dir: impl AsRef<Path>, iteration: usize) -> PathBuf {
    out_dir
        .as_ref()
        .join("iterations")
        .join(format!("iter_{iteration:02}"))
}

pub fn save_snapshot(snapshot: &Snapshot, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = snapshot_dir(out_dir, snapshot.iteration);
    save_results(&snapshot.tubes, &snapshot.graph, &dir)?;
    Ok(dir)
}

/// Snapshots previously written under `out_dir`, in iteration order.
pub fn load_snapshots(out_dir: impl AsRef<Path>) -> Result<Vec<Snapshot>> {
    let root = out_dir.as_ref().join("iterations");
    let mut dirs: Vec<(usize, PathBuf)> = Vec::new();
    let entries = fs::read_dir(&root).map_err(|e| Error::io(&root, e))?;
    for e in entries {
        let e = e.map_err(|e| Error::io(&root, e))?;
        let name = e.file_name().to_string_lossy().into_owned();
        if let Some(n) = name.strip_prefix("iter_").and_then(|n| n.parse().ok()) {
            dirs.push((n, e.path()));
        }
    }
    dirs.sort();
    dirs.into_iter()
        .map(|(iteration, d)| {
            Ok(Snapshot {
                iteration,
                tubes: read_tubes(d.join(TUBES_FILE))?,
                graph: read_graph(d.join(GRAPH_FILE))?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct TrellisRecord<'a> {
    frame_index: usize,
    candidates: Vec<(u32, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi_to_next: Option<&'a [f64]>,
}

/// Debug dump of per-frame candidate scores and combined pair consistency.
pub fn write_trellis(path: impl AsRef<Path>, trellis: &Trellis) -> Result<()> {
    let totals: Vec<Vec<f64>> = trellis
        .transitions
        .iter()
        .map(|t| {
            (0..t.rows * t.cols)
                .map(|k| t.total(k / t.cols, k % t.cols))
                .collect()
        })
        .collect();
    write_records(
        path.as_ref(),
        trellis
            .frames
            .iter()
            .enumerate()
            .map(|(t, f)| TrellisRecord {
                frame_index: f.key_frame,
                candidates: f
                    .candidates
                    .iter()
                    .map(|c| (c.proposal_id, c.unary))
                    .collect(),
                psi_to_next: totals.get(t).map(Vec::as_slice),
            }),
    )
}

#[derive(Serialize)]
struct GridRecord<'a> {
    dims: [usize; 3],
    votes: &'a [f64],
}

/// Debug dump of a Hough grid as a single dense record.
pub fn write_hough_grid(path: impl AsRef<Path>, grid: &HoughGrid) -> Result<()> {
    write_records(
        path.as_ref(),
        [GridRecord {
            dims: grid.dims(),
            votes: &grid.votes,
        }],
    )
}
