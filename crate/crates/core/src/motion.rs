//! Motion coherence of a box from cluster-labeled point tracks.
//!
//! The box is split into a 5x5 cell grid; each of the 16 perimeter cells is
//! labeled by the majority cluster among the track points falling in it.
//! Every label is weighted by the share of that cluster's tracks the box
//! contains, and each box edge contributes its best-weighted cell.

use std::collections::BTreeMap;

use crate::model::{BBox, Video};

const GRID: usize = 5;

/// Perimeter cells as `(row, col)`: top row, bottom row, then the inner
/// cells of the left and right columns.
pub const PERIMETER: [(usize, usize); 16] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (0, 4),
    (4, 0),
    (4, 1),
    (4, 2),
    (4, 3),
    (4, 4),
    (1, 0),
    (2, 0),
    (3, 0),
    (1, 4),
    (2, 4),
    (3, 4),
];

/// Perimeter-bin indices of each edge in order left, right, top, bottom.
/// Corner cells are shared by their two edges.
pub const EDGE_BINS: [[usize; 5]; 4] = [
    [0, 10, 11, 12, 5],
    [4, 13, 14, 15, 9],
    [0, 1, 2, 3, 4],
    [5, 6, 7, 8, 9],
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub track_id: u32,
    pub cluster: u32,
    pub x: f64,
    pub y: f64,
}

/// Tracks alive at one frame, with live-track totals per cluster.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameTracks {
    pub points: Vec<TrackPoint>,
    pub cluster_totals: BTreeMap<u32, usize>,
}

impl FrameTracks {
    pub fn new(points: Vec<TrackPoint>) -> Self {
        let mut cluster_totals = BTreeMap::new();
        for p in &points {
            *cluster_totals.entry(p.cluster).or_insert(0) += 1;
        }
        FrameTracks {
            points,
            cluster_totals,
        }
    }

    pub fn at(video: &Video, frame_index: usize) -> Self {
        FrameTracks::new(
            video
                .tracks
                .iter()
                .filter_map(|t| {
                    t.point_at(frame_index).map(|(x, y)| TrackPoint {
                        track_id: t.id,
                        cluster: t.cluster,
                        x,
                        y,
                    })
                })
                .collect(),
        )
    }

    fn inside<'a>(&'a self, bbox: &'a BBox) -> impl Iterator<Item = &'a TrackPoint> + 'a {
        self.points
            .iter()
            .filter(move |p| bbox.contains_point(p.x, p.y))
    }
}

/// Majority cluster label of each perimeter bin, `None` when empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeBinning {
    pub labels: [Option<u32>; 16],
}

impl EdgeBinning {
    pub fn edge(&self, edge: usize) -> impl Iterator<Item = u32> + '_ {
        EDGE_BINS[edge].iter().filter_map(|&b| self.labels[b])
    }
}

fn cell_of(bbox: &BBox, x: f64, y: f64) -> (usize, usize) {
    let idx = |v: f64, lo: f64, len: f64| {
        (((v - lo) / len * GRID as f64).floor().max(0.0) as usize).min(GRID - 1)
    };
    (
        idx(y, bbox.y_min, bbox.height),
        idx(x, bbox.x_min, bbox.width),
    )
}

pub fn edge_bin_labels(bbox: &BBox, tracks: &FrameTracks) -> EdgeBinning {
    let mut votes: [BTreeMap<u32, usize>; 16] = Default::default();
    for p in tracks.inside(bbox) {
        let cell = cell_of(bbox, p.x, p.y);
        if let Some(b) = PERIMETER.iter().position(|&c| c == cell) {
            *votes[b].entry(p.cluster).or_insert(0) += 1;
        }
    }
    // BTreeMap iterates labels ascending; keeping the first maximum breaks
    // ties toward the smaller label.
    let labels = votes.map(|v| {
        v.into_iter()
            .fold(None, |best: Option<(u32, usize)>, (l, n)| match best {
                Some((_, bn)) if bn >= n => best,
                _ => Some((l, n)),
            })
            .map(|(l, _)| l)
    });
    EdgeBinning { labels }
}

/// Fraction of the cluster's live tracks whose point lies inside the box;
/// 0 for a cluster absent from the frame.
pub fn cluster_weight(label: u32, bbox: &BBox, tracks: &FrameTracks) -> f64 {
    match tracks.cluster_totals.get(&label) {
        Some(&total) if total > 0 => {
            tracks.inside(bbox).filter(|p| p.cluster == label).count() as f64 / total as f64
        }
        _ => 0.0,
    }
}

/// Motion coherence score in `[0, 4]`.
pub fn motion_coherence(bbox: &BBox, tracks: &FrameTracks) -> f64 {
    let bins = edge_bin_labels(bbox, tracks);
    let mut inside: BTreeMap<u32, usize> = BTreeMap::new();
    for p in tracks.inside(bbox) {
        *inside.entry(p.cluster).or_insert(0) += 1;
    }
    let weight =
        |l: u32| inside.get(&l).copied().unwrap_or(0) as f64 / tracks.cluster_totals[&l] as f64;
    (0..4)
        .map(|e| bins.edge(e).map(weight).fold(0.0, f64::max))
        .sum()
}
