//! Data model: boxes, descriptors, proposals, frames, point tracks, videos
//! and tubes, plus key-frame selection and tube interpolation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box stored as corner plus size, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub width: f64,
    pub height: f64,
}

/// Length of the overlap of two intervals; exact when one contains the other.
fn overlap(a: f64, a_len: f64, b: f64, b_len: f64) -> f64 {
    let (lo, hi) = (a.max(b), (a + a_len).min(b + b_len));
    if lo == a && hi == a + a_len {
        a_len
    } else if lo == b && hi == b + b_len {
        b_len
    } else {
        hi - lo
    }
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, width: f64, height: f64) -> Result<Self> {
        let b = BBox {
            x_min,
            y_min,
            width,
            height,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.x_min, self.y_min, self.width, self.height]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidBox(format!(
                "non-finite coordinate in {self:?}"
            )));
        }
        if self.width <= 0.0 || self.height <= 0.0 {
            return Err(Error::InvalidBox(format!(
                "width and height must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// The box covering a whole `width` x `height` frame.
    pub fn frame(width: f64, height: f64) -> Self {
        BBox {
            x_min: 0.0,
            y_min: 0.0,
            width,
            height,
        }
    }

    #[inline]
    pub fn x_max(&self) -> f64 {
        self.x_min + self.width
    }

    #[inline]
    pub fn y_max(&self) -> f64 {
        self.y_min + self.height
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    #[inline]
    pub fn center(&self) -> (f64, f64) {
        (
            self.x_min + 0.5 * self.width,
            self.y_min + 0.5 * self.height,
        )
    }

    /// Inclusive point test.
    #[inline]
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max() && y >= self.y_min && y <= self.y_max()
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = overlap(self.x_min, self.width, other.x_min, other.width);
        let h = overlap(self.y_min, self.height, other.y_min, other.height);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Fraction of this box's area lying inside `other`.
    pub fn coverage_by(&self, other: &BBox) -> f64 {
        self.intersection_area(other) / self.area()
    }

    /// Whether the box lies inside a `width` x `height` frame, allowing
    /// `tol` pixels of slack for serialized rounding.
    pub fn within_frame(&self, width: f64, height: f64, tol: f64) -> bool {
        self.x_min >= -tol
            && self.y_min >= -tol
            && self.x_max() <= width + tol
            && self.y_max() <= height + tol
    }

    /// Component-wise linear interpolation; `t = 0` gives `self`, `t = 1` gives `other`.
    pub fn lerp(&self, other: &BBox, t: f64) -> BBox {
        let mix = |a: f64, b: f64| a + (b - a) * t;
        BBox {
            x_min: mix(self.x_min, other.x_min),
            y_min: mix(self.y_min, other.y_min),
            width: mix(self.width, other.width),
            height: mix(self.height, other.height),
        }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.width, b.height]
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

/// Unit-norm feature vector. Treated as opaque by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Descriptor(Vec<f64>);

/// Norm deviation below which a vector is accepted as already normalized.
/// Keeps load/save round trips bit-exact.
const NORM_SLACK: f64 = 1e-12;

impl Descriptor {
    /// L2-normalizes `values`. Fails on empty, non-finite or zero vectors.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidBox(
                "descriptor has non-finite entries".into(),
            ));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidBox("descriptor has zero norm".into()));
        }
        if (norm - 1.0).abs() > NORM_SLACK {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(Descriptor(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn distance(&self, other: &Descriptor) -> Result<f64> {
        l2_distance(&self.0, &other.0)
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    squared_distance(a, b).map(f64::sqrt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub id: u32,
    pub bbox: BBox,
    pub descriptor: Descriptor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_index: usize,
    pub width: f64,
    pub height: f64,
    pub proposals: Vec<Proposal>,
    /// Frame-level descriptor used for bootstrap retrieval.
    pub signature: Descriptor,
}

impl Frame {
    pub fn bounds(&self) -> BBox {
        BBox::frame(self.width, self.height)
    }

    pub fn proposal(&self, id: u32) -> Option<&Proposal> {
        self.proposals.iter().find(|p| p.id == id)
    }
}

/// A long-term point track: consecutive points starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u32,
    pub cluster: u32,
    pub start: usize,
    pub points: Vec<(f64, f64)>,
}

impl Track {
    /// Last frame index (inclusive) covered by the track.
    pub fn end(&self) -> usize {
        self.start + self.points.len() - 1
    }

    pub fn point_at(&self, frame_index: usize) -> Option<(f64, f64)> {
        frame_index
            .checked_sub(self.start)
            .and_then(|i| self.points.get(i))
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    pub id: String,
    pub num_frames: usize,
    pub width: f64,
    pub height: f64,
    /// Frames carrying features, keyed by frame index.
    pub frames: BTreeMap<usize, Frame>,
    pub tracks: Vec<Track>,
}

impl Video {
    pub fn key_frames(&self, stride: usize) -> Vec<usize> {
        key_frames(self.num_frames, stride)
    }

    pub fn frame(&self, frame_index: usize) -> Option<&Frame> {
        self.frames.get(&frame_index)
    }

    pub fn bounds(&self) -> BBox {
        BBox::frame(self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub video_id: String,
    pub frame_index: usize,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub class_label: String,
}

/// A validated video collection. Videos are kept sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    pub descriptor_dim: usize,
    pub signature_dim: usize,
    pub videos: Vec<Video>,
    pub ground_truth: Vec<GroundTruth>,
}

impl Collection {
    pub fn video_index(&self, id: &str) -> Option<usize> {
        self.videos.binary_search_by(|v| v.id.as_str().cmp(id)).ok()
    }

    pub fn video(&self, id: &str) -> Option<&Video> {
        self.video_index(id).map(|i| &self.videos[i])
    }

    /// Class label per video id, taken from the ground-truth annotations.
    pub fn class_labels(&self) -> BTreeMap<String, String> {
        self.ground_truth
            .iter()
            .map(|g| (g.video_id.clone(), g.class_label.clone()))
            .collect()
    }
}

/// One localized region of a tube. `proposal_id` is `None` for the
/// whole-frame region used before the first relocalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeRegion {
    pub proposal_id: Option<u32>,
    pub bbox: BBox,
}

/// One region per key frame of a video, with its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    pub video_id: String,
    pub regions: BTreeMap<usize, TubeRegion>,
    pub score: f64,
}

impl Tube {
    pub fn whole_frames(video: &Video, key_frames: &[usize]) -> Self {
        let bbox = video.bounds();
        Tube {
            video_id: video.id.clone(),
            regions: key_frames
                .iter()
                .map(|&t| {
                    (
                        t,
                        TubeRegion {
                            proposal_id: None,
                            bbox,
                        },
                    )
                })
                .collect(),
            score: 0.0,
        }
    }

    pub fn boxes(&self) -> BTreeMap<usize, BBox> {
        self.regions.iter().map(|(&t, r)| (t, r.bbox)).collect()
    }
}

/// Key-frame indices `0, stride, 2*stride, ...` below `num_frames`.
/// Index 0 is always included; a zero stride is treated as 1.
pub fn key_frames(num_frames: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut out: Vec<usize> = (0..num_frames).step_by(stride).collect();
    if out.is_empty() {
        out.push(0);
    }
    out
}

/// Dense per-frame boxes for a tube over frames `0..num_frames`.
///
/// Frames between two key frames get the linear blend of the two key-frame
/// boxes; frames after the last key frame copy its box, frames before the
/// first copy the first box.
pub fn interpolate_tube(tube: &Tube, num_frames: usize) -> BTreeMap<usize, BBox> {
    let keys: Vec<(usize, BBox)> = tube.regions.iter().map(|(&t, r)| (t, r.bbox)).collect();
    let mut out = BTreeMap::new();
    if keys.is_empty() {
        return out;
    }
    let mut seg = 0;
    for frame in 0..num_frames.max(keys.last().unwrap().0 + 1) {
        while seg + 1 < keys.len() && keys[seg + 1].0 <= frame {
            seg += 1;
        }
        let (t0, b0) = keys[seg];
        let bbox = if frame <= t0 || seg + 1 == keys.len() {
            b0
        } else {
            let (t1, b1) = keys[seg + 1];
            b0.lerp(&b1, (frame - t0) as f64 / (t1 - t0) as f64)
        };
        out.insert(frame, bbox);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tube(boxes: &[(usize, BBox)]) -> Tube {
        Tube {
            video_id: "v".into(),
            regions: boxes
                .iter()
                .map(|&(t, bbox)| {
                    (
                        t,
                        TubeRegion {
                            proposal_id: Some(0),
                            bbox,
                        },
                    )
                })
                .collect(),
            score: 0.0,
        }
    }

    #[test]
    fn key_frame_arithmetic() {
        assert_eq!(key_frames(100, 20), vec![0, 20, 40, 60, 80]);
        assert_eq!(key_frames(5, 20), vec![0]);
        assert_eq!(key_frames(41, 20), vec![0, 20, 40]);
        assert_eq!(key_frames(0, 20), vec![0]);
    }

    #[test]
    fn interpolation_midpoint() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let b = BBox::new(20.0, 0.0, 10.0, 10.0).unwrap();
        let dense = interpolate_tube(&tube(&[(0, a), (20, b)]), 21);
        assert_eq!(dense[&10], BBox::new(10.0, 0.0, 10.0, 10.0).unwrap());
        assert_eq!(dense[&0], a);
        assert_eq!(dense[&20], b);
    }

    #[test]
    fn interpolation_constant_and_tail() {
        let a = BBox::new(3.0, 4.0, 10.0, 12.0).unwrap();
        let dense = interpolate_tube(&tube(&[(0, a), (20, a)]), 30);
        assert!(dense.values().all(|b| *b == a));
        assert_eq!(dense.len(), 30);

        let single = interpolate_tube(&tube(&[(0, a)]), 7);
        assert_eq!(single.len(), 7);
        assert!(single.values().all(|b| *b == a));
    }

    #[test]
    fn box_validation() {
        assert!(BBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BBox::new(0.0, f64::NAN, 1.0, 1.0).is_err());
        assert!(serde_json::from_str::<BBox>("[0,0,-1,2]").is_err());
    }

    #[test]
    fn descriptor_normalization() {
        let d = Descriptor::normalized(vec![3.0, 4.0]).unwrap();
        assert_eq!(d.as_slice(), &[0.6, 0.8]);
        assert!(Descriptor::normalized(vec![0.0, 0.0]).is_err());
        let again = Descriptor::normalized(d.as_slice().to_vec()).unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn track_lookup() {
        let t = Track {
            id: 1,
            cluster: 0,
            start: 5,
            points: vec![(1.0, 1.0), (2.0, 2.0)],
        };
        assert_eq!(t.end(), 6);
        assert_eq!(t.point_at(4), None);
        assert_eq!(t.point_at(6), Some((2.0, 2.0)));
        assert_eq!(t.point_at(7), None);
    }
}
