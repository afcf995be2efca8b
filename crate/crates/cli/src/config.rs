use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use serde::de::DeserializeOwned;
use tubeloc::Config;

/// Config file plus per-field overrides. Flags win over the file.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// Run parameters (TOML or JSON); missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, visible_alias = "k")]
    pub k_neighbors: Option<usize>,
    #[arg(long, visible_alias = "p")]
    pub p_tubes: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub keyframe_stride: Option<usize>,
    #[arg(long)]
    pub top_candidates: Option<usize>,
    #[arg(long)]
    pub retrieval_proposals: Option<usize>,
    #[arg(long)]
    pub affinity_gamma: Option<f64>,
    #[arg(long)]
    pub region_containment: Option<f64>,
    #[arg(long)]
    pub strict_coverage: Option<f64>,
    #[arg(long)]
    pub strict_area_ratio: Option<f64>,
    #[arg(long)]
    pub retrieval_shortlist: Option<usize>,
    #[arg(long)]
    pub rng_seed: Option<u64>,
    #[arg(long)]
    pub translation_bins: Option<usize>,
    #[arg(long)]
    pub scale_bins: Option<usize>,
    #[arg(long)]
    pub translation_range: Option<f64>,
    #[arg(long)]
    pub scale_range: Option<f64>,
    #[arg(long)]
    pub bandwidth_bins: Option<f64>,
}

/// Parse a TOML or JSON file, chosen by extension.
pub fn read_settings<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        }
        Some("toml") => {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        }
        _ => bail!("{}: expected a .toml or .json file", path.display()),
    }
}

impl ConfigArgs {
    pub fn resolve(&self) -> anyhow::Result<Config> {
        let mut c: Config = match &self.config {
            Some(p) => read_settings(p)?,
            None => Config::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { c.$field = v; })* };
        }
        macro_rules! set_hough {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { c.hough.$field = v; })* };
        }
        set!(
            alpha,
            lambda,
            theta,
            k_neighbors,
            p_tubes,
            iterations,
            keyframe_stride,
            top_candidates,
            retrieval_proposals,
            affinity_gamma,
            region_containment,
            strict_coverage,
            strict_area_ratio,
            rng_seed
        );
        set_hough!(
            translation_bins,
            scale_bins,
            translation_range,
            scale_range,
            bandwidth_bins
        );
        if self.retrieval_shortlist.is_some() {
            c.retrieval_shortlist = self.retrieval_shortlist;
        }
        c.validate()?;
        Ok(c)
    }
}
