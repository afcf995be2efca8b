use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization of the Hough offset space.
///
/// Offsets are `(du, dv, ds)`: translation in frame-normalized units and the
/// log ratio of box scales. Bins cover `[-translation_range, translation_range]`
/// on both translation axes and `[-scale_range, scale_range]` on the scale axis.
/// The Gaussian bandwidth on each axis is `bandwidth_bins` bin widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoughParams {
    pub translation_bins: usize,
    pub scale_bins: usize,
    pub translation_range: f64,
    pub scale_range: f64,
    pub bandwidth_bins: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        HoughParams {
            translation_bins: 16,
            scale_bins: 7,
            translation_range: 1.0,
            scale_range: 4f64.ln(),
            bandwidth_bins: 1.0,
        }
    }
}

impl HoughParams {
    pub fn num_bins(&self) -> usize {
        self.translation_bins * self.translation_bins * self.scale_bins
    }

    pub fn bin_width(&self) -> [f64; 3] {
        let t = 2.0 * self.translation_range / self.translation_bins as f64;
        let s = 2.0 * self.scale_range / self.scale_bins as f64;
        [t, t, s]
    }

    pub fn bandwidth(&self) -> [f64; 3] {
        self.bin_width().map(|w| w * self.bandwidth_bins)
    }

    /// Bin centers along each axis.
    pub fn axis_centers(&self) -> [Vec<f64>; 3] {
        let centers = |n: usize, range: f64| -> Vec<f64> {
            let w = 2.0 * range / n as f64;
            (0..n).map(|i| -range + (i as f64 + 0.5) * w).collect()
        };
        let t = centers(self.translation_bins, self.translation_range);
        [t.clone(), t, centers(self.scale_bins, self.scale_range)]
    }

    fn validate(&self) -> Result<()> {
        if self.translation_bins == 0 || self.scale_bins == 0 {
            return Err(Error::Config("hough bin counts must be >= 1".into()));
        }
        if !(self.translation_range > 0.0 && self.scale_range > 0.0 && self.bandwidth_bins > 0.0) {
            return Err(Error::Config(
                "hough ranges and bandwidth must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Run parameters. Defaults are the published settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Weight of motion coherence in the foreground confidence.
    pub alpha: f64,
    /// Weight of temporal consistency in the tube objective.
    pub lambda: f64,
    /// Motion consistency assigned to region pairs sharing no point track.
    pub theta: f64,
    pub k_neighbors: usize,
    pub p_tubes: usize,
    pub iterations: usize,
    pub keyframe_stride: usize,
    /// Candidates kept per key frame before dynamic programming.
    pub top_candidates: usize,
    /// Proposals per frame used for retrieval matching.
    pub retrieval_proposals: usize,
    pub affinity_gamma: f64,
    pub hough: HoughParams,
    /// Minimum fraction of a proposal's area inside a localized box for it
    /// to count as contained in that region.
    pub region_containment: f64,
    /// Strict containment `a ⊊ b`: `b` covers at least this fraction of `a`...
    pub strict_coverage: f64,
    /// ...and `area(b) > area(a) * strict_area_ratio`.
    pub strict_area_ratio: f64,
    /// Optional signature-distance shortlist size for retrieval. `None`
    /// scores every candidate key frame.
    pub retrieval_shortlist: Option<usize>,
    pub rng_seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            alpha: 0.5,
            lambda: 2.0,
            theta: -2.0,
            k_neighbors: 10,
            p_tubes: 5,
            iterations: 5,
            keyframe_stride: 20,
            top_candidates: 100,
            retrieval_proposals: 20,
            affinity_gamma: 1.0,
            hough: HoughParams::default(),
            region_containment: 0.9,
            strict_coverage: 0.99,
            strict_area_ratio: 1.01,
            retrieval_shortlist: None,
            rng_seed: 0,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.into()));
        if !(self.alpha >= 0.0) {
            return fail("alpha must be >= 0");
        }
        if !(self.lambda >= 0.0) {
            return fail("lambda must be >= 0");
        }
        if !(self.theta < -1.0) {
            return fail("theta must be < -1");
        }
        if self.k_neighbors == 0 || self.p_tubes == 0 || self.iterations == 0 {
            return fail("k_neighbors, p_tubes and iterations must be >= 1");
        }
        if self.keyframe_stride == 0 || self.top_candidates == 0 || self.retrieval_proposals == 0 {
            return fail("keyframe_stride, top_candidates and retrieval_proposals must be >= 1");
        }
        if !(self.affinity_gamma >= 0.0) {
            return fail("affinity_gamma must be >= 0");
        }
        if !(self.region_containment > 0.0 && self.region_containment <= 1.0) {
            return fail("region_containment must be in (0, 1]");
        }
        if !(self.strict_coverage > 0.0
            && self.strict_coverage <= 1.0
            && self.strict_area_ratio >= 1.0)
        {
            return fail("strict containment parameters out of range");
        }
        if self.retrieval_shortlist == Some(0) {
            return fail("retrieval_shortlist must be >= 1");
        }
        self.hough.validate()
    }
}
