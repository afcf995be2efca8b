//! Temporal consistency between regions of consecutive key frames:
//! descriptor similarity plus agreement of shared point-track
//! configurations.

use crate::error::Result;
use crate::model::{BBox, Proposal, Video};
use crate::scores::rescale_unit;

/// A point expressed in the unit square of its box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSquarePoint {
    pub u: f64,
    pub v: f64,
}

pub fn tau(point: (f64, f64), bbox: &BBox) -> UnitSquarePoint {
    UnitSquarePoint {
        u: (point.0 - bbox.x_min) / bbox.width,
        v: (point.1 - bbox.y_min) / bbox.height,
    }
}

/// `-||f_t - f_next||_2`, before per-transition rescaling.
pub fn psi_appearance_raw(a: &Proposal, b: &Proposal) -> Result<f64> {
    a.descriptor.distance(&b.descriptor).map(|d| -d)
}

/// Rescale raw appearance consistencies of one transition to `[0, 1]`.
pub fn psi_appearance(raw: &[f64]) -> Vec<f64> {
    rescale_unit(raw)
}

/// Positions of tracks alive at both ends of a key-frame transition.
#[derive(Debug, Clone, Default)]
pub struct TrackPairs {
    pub pairs: Vec<((f64, f64), (f64, f64))>,
}

impl TrackPairs {
    pub fn between(video: &Video, t: usize, t_next: usize) -> Self {
        TrackPairs {
            pairs: video
                .tracks
                .iter()
                .filter_map(|tr| Some((tr.point_at(t)?, tr.point_at(t_next)?)))
                .collect(),
        }
    }

    /// Pairs whose first point lies in `a` and second point in `b`.
    pub fn shared<'a>(
        &'a self,
        a: &'a BBox,
        b: &'a BBox,
    ) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + 'a {
        self.pairs
            .iter()
            .copied()
            .filter(move |(p, q)| a.contains_point(p.0, p.1) && b.contains_point(q.0, q.1))
    }
}

/// Motion consistency of two regions given their shared tracks: the negated
/// mean half-L1 distance between unit-square positions, in `[-1, 0]`, or
/// `theta` when no track is shared.
pub fn psi_motion(
    a: &BBox,
    b: &BBox,
    shared: impl IntoIterator<Item = ((f64, f64), (f64, f64))>,
    theta: f64,
) -> f64 {
    let mut n = 0usize;
    let mut total = 0.0;
    for (p, q) in shared {
        let (ta, tb) = (tau(p, a), tau(q, b));
        total += (ta.u - tb.u).abs() + (ta.v - tb.v).abs();
        n += 1;
    }
    if n == 0 {
        theta
    } else {
        -total / (2.0 * n as f64)
    }
}

pub fn psi_total(appearance: f64, motion: f64) -> f64 {
    appearance + motion
}

/// Consistency of every candidate pair of one transition, row-major
/// `[from][to]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionScores {
    pub rows: usize,
    pub cols: usize,
    /// Rescaled appearance term.
    pub appearance: Vec<f64>,
    pub motion: Vec<f64>,
}

impl TransitionScores {
    #[inline]
    pub fn total(&self, i: usize, j: usize) -> f64 {
        let k = i * self.cols + j;
        psi_total(self.appearance[k], self.motion[k])
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> TransitionScores {
        let pick = |v: &[f64]| {
            rows.iter()
                .flat_map(|&i| cols.iter().map(move |&j| v[i * self.cols + j]))
                .collect()
        };
        TransitionScores {
            rows: rows.len(),
            cols: cols.len(),
            appearance: pick(&self.appearance),
            motion: pick(&self.motion),
        }
    }
}

/// Score all pairs between candidate regions `from` (at key frame `t`) and
/// `to` (at `t_next`).
pub fn transition_scores(
    video: &Video,
    (t, from): (usize, &[&Proposal]),
    (t_next, to): (usize, &[&Proposal]),
    theta: f64,
) -> Result<TransitionScores> {
    let tracks = TrackPairs::between(video, t, t_next);
    let mut raw = Vec::with_capacity(from.len() * to.len());
    let mut motion = Vec::with_capacity(from.len() * to.len());
    for a in from {
        for b in to {
            raw.push(psi_appearance_raw(a, b)?);
            motion.push(psi_motion(
                &a.bbox,
                &b.bbox,
                tracks.shared(&a.bbox, &b.bbox),
                theta,
            ));
        }
    }
    Ok(TransitionScores {
        rows: from.len(),
        cols: to.len(),
        appearance: psi_appearance(&raw),
        motion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn unit_square_mapping() {
        let b = bx(10.0, 20.0, 4.0, 8.0);
        assert_eq!(tau((10.0, 20.0), &b), UnitSquarePoint { u: 0.0, v: 0.0 });
        assert_eq!(tau((12.0, 24.0), &b), UnitSquarePoint { u: 0.5, v: 0.5 });
        assert_eq!(tau((14.0, 28.0), &b), UnitSquarePoint { u: 1.0, v: 1.0 });
    }

    #[test]
    fn appearance_rescale_cases() {
        assert_eq!(psi_appearance(&[-2.0, -1.0, 0.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(psi_appearance(&[-0.3, -0.3]), vec![0.0, 0.0]);
        assert_eq!(psi_appearance(&[0.0, -1.4])[0], 1.0);
    }

    #[test]
    fn motion_cases() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let shared = [((2.0, 3.0), (2.0, 3.0)), ((7.0, 1.0), (7.0, 1.0))];
        assert_eq!(psi_motion(&b, &b, shared, -2.0), 0.0);
        assert_eq!(psi_motion(&b, &b, [], -2.0), -2.0);
        let c = bx(50.0, 50.0, 10.0, 10.0);
        assert_eq!(psi_motion(&b, &c, [((0.0, 0.0), (60.0, 60.0))], -2.0), -1.0);
    }

    #[test]
    fn totals() {
        assert_eq!(psi_total(1.0, 0.0), 1.0);
        assert_eq!(psi_total(0.0, -2.0), -2.0);
        assert_eq!(psi_total(0.5, -1.0), -0.5);
    }
}
