//! WebAssembly bindings for an interactive tubeloc demo. Every export
//! returns a JSON string for the page script to draw.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use tubeloc::appearance::{hough_vote, RegionSet};
use tubeloc::motion::{motion_coherence, FrameTracks};
use tubeloc::synth::{generate_collection, SynthCollection, SynthSpec};
use tubeloc::{run_discovery, BBox, Config, Error};

#[derive(Debug, Serialize)]
pub struct ProposalView {
    pub id: u32,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub planted: bool,
}

#[derive(Debug, Serialize)]
pub struct PointView {
    pub x: f64,
    pub y: f64,
    pub cluster: u32,
}

#[derive(Debug, Serialize)]
pub struct SceneView {
    pub video_id: String,
    pub class_label: String,
    pub frame_index: usize,
    pub width: f64,
    pub height: f64,
    pub proposals: Vec<ProposalView>,
    pub points: Vec<PointView>,
}

/// Best tube boxes of one video after one iteration.
#[derive(Debug, Serialize)]
pub struct TubeView {
    pub video_id: String,
    pub boxes: Vec<(usize, BBox)>,
    pub iou: f64,
}

#[derive(Debug, Serialize)]
pub struct IterationView {
    pub iteration: usize,
    pub mean_iou: f64,
    pub tubes: Vec<TubeView>,
}

#[derive(Debug, Serialize)]
pub struct HeatMap {
    pub cols: usize,
    pub rows: usize,
    pub box_width: f64,
    pub box_height: f64,
    /// Row-major `phi_m` for boxes whose top-left corner sits on the grid.
    pub values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct HoughView {
    pub bins: usize,
    pub range: f64,
    /// Row-major over `(du, dv)`, summed over scale.
    pub marginal: Vec<f64>,
    pub peak: (f64, f64, f64),
}

/// A generated collection the page can query.
#[wasm_bindgen]
pub struct Demo {
    synth: SynthCollection,
}

fn js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json(v: &impl Serialize) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(js)
}

impl Demo {
    pub fn from_spec(spec: &SynthSpec) -> Result<Demo, Error> {
        Ok(Demo {
            synth: generate_collection(spec)?,
        })
    }

    fn video(&self, v: usize) -> Result<&tubeloc::Video, Error> {
        self.synth
            .collection
            .videos
            .get(v)
            .ok_or_else(|| Error::UnknownVideo(v.to_string()))
    }

    fn frame(&self, v: usize, t: usize) -> Result<&tubeloc::Frame, Error> {
        let video = self.video(v)?;
        video.frame(t).ok_or_else(|| Error::MissingKeyFrame {
            video: video.id.clone(),
            frame: t,
        })
    }

    pub fn scene_view(&self, v: usize, t: usize) -> Result<SceneView, Error> {
        let video = self.video(v)?;
        let frame = self.frame(v, t)?;
        let planted = &self.synth.planted.videos[&video.id];
        let tracks = FrameTracks::at(video, t);
        Ok(SceneView {
            video_id: video.id.clone(),
            class_label: planted.class_label.clone(),
            frame_index: t,
            width: frame.width,
            height: frame.height,
            proposals: frame
                .proposals
                .iter()
                .map(|p| ProposalView {
                    id: p.id,
                    bbox: p.bbox,
                    planted: planted.proposal_ids.get(&t) == Some(&p.id),
                })
                .collect(),
            points: tracks
                .points
                .iter()
                .map(|p| PointView {
                    x: p.x,
                    y: p.y,
                    cluster: p.cluster,
                })
                .collect(),
        })
    }

    pub fn discovery_view(&self, config: &Config) -> Result<Vec<IterationView>, Error> {
        let out = run_discovery(&self.synth.collection, config)?;
        Ok(out
            .snapshots
            .iter()
            .map(|s| IterationView {
                iteration: s.iteration,
                mean_iou: self.synth.planted.mean_iou(&s.tubes),
                tubes: s
                    .tubes
                    .iter()
                    .map(|(id, ranked)| TubeView {
                        video_id: id.clone(),
                        boxes: ranked
                            .first()
                            .map(|t| t.boxes().into_iter().collect())
                            .unwrap_or_default(),
                        iou: self.synth.planted.tube_iou(id, ranked.first()),
                    })
                    .collect(),
            })
            .collect())
    }

    pub fn heat_map(
        &self,
        v: usize,
        t: usize,
        box_width: f64,
        box_height: f64,
        steps: usize,
    ) -> Result<HeatMap, Error> {
        let video = self.video(v)?;
        let frame = self.frame(v, t)?;
        let bw = box_width.clamp(1.0, frame.width);
        let bh = box_height.clamp(1.0, frame.height);
        let steps = steps.clamp(2, 200);
        let tracks = FrameTracks::at(video, t);
        let mut values = Vec::with_capacity(steps * steps);
        for r in 0..steps {
            for c in 0..steps {
                let x = (frame.width - bw) * c as f64 / (steps - 1) as f64;
                let y = (frame.height - bh) * r as f64 / (steps - 1) as f64;
                values.push(motion_coherence(&BBox::new(x, y, bw, bh)?, &tracks));
            }
        }
        Ok(HeatMap {
            cols: steps,
            rows: steps,
            box_width: bw,
            box_height: bh,
            values,
        })
    }

    pub fn hough_view(
        &self,
        va: usize,
        ta: usize,
        vb: usize,
        tb: usize,
    ) -> Result<HoughView, Error> {
        let config = Config::default();
        let (fa, fb) = (self.frame(va, ta)?, self.frame(vb, tb)?);
        let grid = hough_vote(&RegionSet::whole(fa), &RegionSet::whole(fb), &config)?;
        let (i, j, k) = grid.argmax();
        let peak = grid.bin_center(i, j, k);
        Ok(HoughView {
            bins: config.hough.translation_bins,
            range: config.hough.translation_range,
            marginal: grid.translation_marginal(),
            peak: (peak.du, peak.dv, peak.ds),
        })
    }
}

#[wasm_bindgen]
impl Demo {
    /// Generate a collection from a JSON generator spec (`"{}"` for the
    /// defaults).
    #[wasm_bindgen(constructor)]
    pub fn new(spec_json: &str) -> Result<Demo, JsValue> {
        let spec: SynthSpec = serde_json::from_str(spec_json).map_err(js)?;
        Demo::from_spec(&spec).map_err(js)
    }

    #[wasm_bindgen(js_name = videoCount)]
    pub fn video_count(&self) -> usize {
        self.synth.collection.videos.len()
    }

    #[wasm_bindgen(js_name = keyFrames)]
    pub fn key_frames(&self, v: usize) -> Vec<usize> {
        self.synth
            .collection
            .videos
            .get(v)
            .map(|video| video.frames.keys().copied().collect())
            .unwrap_or_default()
    }

    /// Proposals and live track points of one key frame.
    pub fn scene(&self, v: usize, t: usize) -> Result<String, JsValue> {
        to_json(&self.scene_view(v, t).map_err(js)?)
    }

    /// Run discovery with a JSON config and return the best tube per video
    /// after every iteration.
    pub fn discover(&self, config_json: &str) -> Result<String, JsValue> {
        let config: Config = serde_json::from_str(config_json).map_err(js)?;
        to_json(&self.discovery_view(&config).map_err(js)?)
    }

    /// Motion coherence of a sliding box over one key frame.
    #[wasm_bindgen(js_name = motionHeatMap)]
    pub fn motion_heat_map(
        &self,
        v: usize,
        t: usize,
        box_width: f64,
        box_height: f64,
        steps: usize,
    ) -> Result<String, JsValue> {
        to_json(
            &self
                .heat_map(v, t, box_width, box_height, steps)
                .map_err(js)?,
        )
    }

    /// Translation marginal of the Hough vote between two key frames.
    #[wasm_bindgen(js_name = houghMarginal)]
    pub fn hough_marginal(
        &self,
        va: usize,
        ta: usize,
        vb: usize,
        tb: usize,
    ) -> Result<String, JsValue> {
        to_json(&self.hough_view(va, ta, vb, tb).map_err(js)?)
    }
}
