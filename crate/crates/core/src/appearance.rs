//! Probabilistic Hough matching (PHM) between the region proposals of two
//! frames, and the appearance-based foreground confidence built on it.
//!
//! A match `m = (r_t, r_u)` is scored by its appearance affinity times the
//! Hough support for its geometric offset:
//!
//! ```text
//! h(x)  = Σ_m  p(m_a) · p(m_g | x)
//! c(m)  = p(m_a) · Σ_x p(m_g | x) · h(x)
//! ```
//!
//! where `x` ranges over the bin centers of a discretized offset space and
//! `p(m_g | x)` is an unnormalized Gaussian of the offset around `x`. The
//! Gaussian is separable over the three offset axes, so both sums are
//! evaluated as per-axis weight vectors contracted against the grid.

use crate::config::{Config, HoughParams};
use crate::error::{Error, Result};
use crate::model::{squared_distance, BBox, Frame, Proposal};
use crate::scores::rescale_unit;

/// Proposals of one frame together with the frame size used to normalize
/// their locations.
#[derive(Debug, Clone)]
pub struct RegionSet<'a> {
    pub width: f64,
    pub height: f64,
    pub proposals: Vec<&'a Proposal>,
}

impl<'a> RegionSet<'a> {
    pub fn whole(frame: &'a Frame) -> Self {
        RegionSet {
            width: frame.width,
            height: frame.height,
            proposals: frame.proposals.iter().collect(),
        }
    }

    pub fn filtered(frame: &'a Frame, mut keep: impl FnMut(&Proposal) -> bool) -> Self {
        RegionSet {
            width: frame.width,
            height: frame.height,
            proposals: frame.proposals.iter().filter(|p| keep(p)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    pub fn locations(&self) -> Vec<Location> {
        self.proposals
            .iter()
            .map(|p| Location::of(&p.bbox, self.width, self.height))
            .collect()
    }
}

/// Position and scale of a box relative to its frame: center over frame
/// size, and `ln sqrt(box area / frame area)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub u: f64,
    pub v: f64,
    pub s: f64,
}

impl Location {
    pub fn of(bbox: &BBox, width: f64, height: f64) -> Self {
        let (cx, cy) = bbox.center();
        Location {
            u: cx / width,
            v: cy / height,
            s: 0.5 * (bbox.area() / (width * height)).ln(),
        }
    }

    /// Offset of the match `(self, other)`.
    pub fn offset_to(&self, other: &Location) -> Offset {
        Offset {
            du: self.u - other.u,
            dv: self.v - other.v,
            ds: self.s - other.s,
        }
    }
}

/// A point of the offset space: translation and log-scale ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offset {
    pub du: f64,
    pub dv: f64,
    pub ds: f64,
}

impl Offset {
    fn axes(&self) -> [f64; 3] {
        [self.du, self.dv, self.ds]
    }
}

/// `exp(-gamma * ||a - b||^2)`.
pub fn appearance_affinity(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    Ok((-gamma * squared_distance(a, b)?).exp())
}

/// Unnormalized diagonal Gaussian of `offset - center`; 1 at the center.
pub fn geometry_likelihood(offset: Offset, center: Offset, bandwidth: [f64; 3]) -> f64 {
    let q: f64 = offset
        .axes()
        .iter()
        .zip(center.axes())
        .zip(bandwidth)
        .map(|((o, c), s)| {
            let z = (o - c) / s;
            z * z
        })
        .sum();
    (-0.5 * q).exp()
}

/// Accumulated votes over the offset grid, laid out `[u][v][s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoughGrid {
    pub params: HoughParams,
    pub votes: Vec<f64>,
}

impl HoughGrid {
    pub fn zeros(params: HoughParams) -> Self {
        HoughGrid {
            params,
            votes: vec![0.0; params.num_bins()],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        let p = &self.params;
        [p.translation_bins, p.translation_bins, p.scale_bins]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let [_, nv, ns] = self.dims();
        (i * nv + j) * ns + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.votes[self.index(i, j, k)]
    }

    pub fn bin_center(&self, i: usize, j: usize, k: usize) -> Offset {
        let c = self.params.axis_centers();
        Offset {
            du: c[0][i],
            dv: c[1][j],
            ds: c[2][k],
        }
    }

    /// Bin with the largest vote (first in layout order on ties).
    pub fn argmax(&self) -> (usize, usize, usize) {
        let [_, nv, ns] = self.dims();
        let best = self
            .votes
            .iter()
            .enumerate()
            .fold(0, |b, (i, &v)| if v > self.votes[b] { i } else { b });
        (best / (nv * ns), (best / ns) % nv, best % ns)
    }

    /// Votes summed over the scale axis, `[u][v]`.
    pub fn translation_marginal(&self) -> Vec<f64> {
        let [nu, nv, ns] = self.dims();
        (0..nu * nv)
            .map(|ij| self.votes[ij * ns..(ij + 1) * ns].iter().sum())
            .collect()
    }
}

/// Match confidences `c((r_i, r_j))` for all proposal pairs of two frames.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchScoreTable {
    pub rows: usize,
    pub cols: usize,
    pub scores: Vec<f64>,
}

impl MatchScoreTable {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.cols..(i + 1) * self.cols]
    }

    /// Best confidence per row: each query region's max-pooled match score.
    pub fn row_max(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().copied().fold(0.0, f64::max))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct PhmResult {
    pub grid: HoughGrid,
    pub table: MatchScoreTable,
}

/// Per-pair affinity and per-axis Gaussian weights.
struct PairTerms {
    affinity: Vec<f64>,
    weights: Vec<[Vec<f64>; 3]>,
}

fn pair_terms(rt: &RegionSet, ru: &RegionSet, config: &Config) -> Result<PairTerms> {
    if rt.is_empty() || ru.is_empty() {
        return Err(Error::EmptyProposals(format!(
            "PHM needs non-empty proposal sets, got {}x{}",
            rt.len(),
            ru.len()
        )));
    }
    let centers = config.hough.axis_centers();
    let bw = config.hough.bandwidth();
    let lt = rt.locations();
    let lu = ru.locations();
    let n = rt.len() * ru.len();
    let mut affinity = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (pa, la) in rt.proposals.iter().zip(&lt) {
        for (pb, lb) in ru.proposals.iter().zip(&lu) {
            affinity.push(appearance_affinity(
                pa.descriptor.as_slice(),
                pb.descriptor.as_slice(),
                config.affinity_gamma,
            )?);
            let off = la.offset_to(lb).axes();
            weights.push(std::array::from_fn(|a| {
                centers[a]
                    .iter()
                    .map(|c| {
                        let z = (off[a] - c) / bw[a];
                        (-0.5 * z * z).exp()
                    })
                    .collect()
            }));
        }
    }
    Ok(PairTerms { affinity, weights })
}

fn accumulate(terms: &PairTerms, params: HoughParams) -> HoughGrid {
    let mut grid = HoughGrid::zeros(params);
    let [_, nv, ns] = grid.dims();
    for (a, [wu, wv, ws]) in terms.affinity.iter().zip(&terms.weights) {
        if *a == 0.0 {
            continue;
        }
        for (i, gu) in wu.iter().enumerate() {
            let au = a * gu;
            for (j, gv) in wv.iter().enumerate() {
                let w = au * gv;
                let base = (i * nv + j) * ns;
                for (cell, gs) in grid.votes[base..base + ns].iter_mut().zip(ws) {
                    *cell += w * gs;
                }
            }
        }
    }
    grid
}

fn contract(grid: &HoughGrid, w: &[Vec<f64>; 3]) -> f64 {
    let [_, nv, ns] = grid.dims();
    let mut total = 0.0;
    for (i, gu) in w[0].iter().enumerate() {
        let mut row = 0.0;
        for (j, gv) in w[1].iter().enumerate() {
            let base = (i * nv + j) * ns;
            let cell: f64 = grid.votes[base..base + ns]
                .iter()
                .zip(&w[2])
                .map(|(h, g)| h * g)
                .sum();
            row += gv * cell;
        }
        total += gu * row;
    }
    total
}

/// Bottom-up Hough voting over all proposal pairs of two frames.
pub fn hough_vote(rt: &RegionSet, ru: &RegionSet, config: &Config) -> Result<HoughGrid> {
    let terms = pair_terms(rt, ru, config)?;
    Ok(accumulate(&terms, config.hough))
}

/// Hough grid and the full match-confidence table for two frames.
pub fn phm(rt: &RegionSet, ru: &RegionSet, config: &Config) -> Result<PhmResult> {
    let terms = pair_terms(rt, ru, config)?;
    let grid = accumulate(&terms, config.hough);
    let scores = terms
        .affinity
        .iter()
        .zip(&terms.weights)
        .map(|(a, w)| {
            if *a == 0.0 {
                0.0
            } else {
                a * contract(&grid, w)
            }
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

pub fn match_confidence(
    rt: &RegionSet,
    ru: &RegionSet,
    config: &Config,
) -> Result<MatchScoreTable> {
    phm(rt, ru, config).map(|r| r.table)
}

/// Region saliency of every proposal in `query`: the sum over neighbor
/// frames of the best match confidence within each neighbor's allowed
/// proposals.
pub fn region_saliency(
    query: &RegionSet,
    neighbors: &[RegionSet],
    config: &Config,
) -> Result<Vec<f64>> {
    if neighbors.is_empty() {
        return Err(Error::NoNeighbors);
    }
    let mut g = vec![0.0; query.len()];
    for nb in neighbors {
        let table = match_confidence(query, nb, config)?;
        for (acc, best) in g.iter_mut().zip(table.row_max()) {
            *acc += best;
        }
    }
    Ok(g)
}

/// `inner ⊊ outer` up to the configured tolerances.
pub fn strictly_contained(inner: &BBox, outer: &BBox, config: &Config) -> bool {
    inner.coverage_by(outer) >= config.strict_coverage
        && outer.area() > inner.area() * config.strict_area_ratio
}

/// Raw standout scores: each region's saliency minus the best saliency
/// among regions strictly containing it (0 when none does).
pub fn standout(boxes: &[BBox], saliency: &[f64], config: &Config) -> Vec<f64> {
    boxes
        .iter()
        .zip(saliency)
        .enumerate()
        .map(|(i, (b, &g))| {
            let background = boxes
                .iter()
                .zip(saliency)
                .enumerate()
                .filter(|&(j, (outer, _))| j != i && strictly_contained(b, outer, config))
                .map(|(_, (_, &gb))| gb)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
            g - background.unwrap_or(0.0)
        })
        .collect()
}

/// Appearance scores of every proposal in a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceScores {
    pub saliency: Vec<f64>,
    pub standout: Vec<f64>,
    /// Standout rescaled to `[0, 1]` over the frame.
    pub phi: Vec<f64>,
}

/// Appearance-based foreground confidence of every proposal in `query`.
pub fn phi_appearance(
    query: &RegionSet,
    neighbors: &[RegionSet],
    config: &Config,
) -> Result<AppearanceScores> {
    let saliency = region_saliency(query, neighbors, config)?;
    let boxes: Vec<BBox> = query.proposals.iter().map(|p| p.bbox).collect();
    let standout = standout(&boxes, &saliency, config);
    let phi = rescale_unit(&standout);
    Ok(AppearanceScores {
        saliency,
        standout,
        phi,
    })
}
