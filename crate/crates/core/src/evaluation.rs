//! Localization and retrieval metrics: CorLoc, CorRet, top-k error and the
//! retrieval confusion matrix. All values are percentages; class averages
//! are unweighted means over classes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::discovery::NeighborGraph;
use crate::error::{Error, Result};
use crate::io::TubeSet;
use crate::model::{interpolate_tube, BBox, GroundTruth};

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Per-class percentages and their unweighted mean.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub per_class: BTreeMap<String, f64>,
    pub average: f64,
}

impl ClassScores {
    fn from_fractions(groups: BTreeMap<String, Vec<f64>>) -> Self {
        let per_class: BTreeMap<String, f64> = groups
            .into_iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(c, v)| {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                (c, 100.0 * mean)
            })
            .collect();
        let average = if per_class.is_empty() {
            0.0
        } else {
            per_class.values().sum::<f64>() / per_class.len() as f64
        };
        ClassScores { per_class, average }
    }
}

/// Predicted box of the best tube at the annotated frame.
pub fn predicted_box(tubes: &TubeSet, gt: &GroundTruth) -> Result<BBox> {
    let tube = tubes
        .get(&gt.video_id)
        .and_then(|r| r.first())
        .ok_or_else(|| Error::MissingPrediction(gt.video_id.clone()))?;
    interpolate_tube(tube, gt.frame_index + 1)
        .get(&gt.frame_index)
        .copied()
        .ok_or_else(|| Error::MissingPrediction(gt.video_id.clone()))
}

/// Share of annotated videos whose predicted box overlaps the ground truth
/// with IoU strictly above 0.5.
pub fn corloc(tubes: &TubeSet, ground_truth: &[GroundTruth]) -> Result<ClassScores> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for gt in ground_truth {
        let hit = iou(&predicted_box(tubes, gt)?, &gt.bbox) > 0.5;
        groups
            .entry(gt.class_label.clone())
            .or_default()
            .push(if hit { 1.0 } else { 0.0 });
    }
    Ok(ClassScores::from_fractions(groups))
}

/// Mean IoU between the best tube and the ground truth over annotated videos.
pub fn mean_overlap(tubes: &TubeSet, ground_truth: &[GroundTruth]) -> Result<f64> {
    if ground_truth.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for gt in ground_truth {
        total += iou(&predicted_box(tubes, gt)?, &gt.bbox);
    }
    Ok(total / ground_truth.len() as f64)
}

/// Share of each key frame's neighbors from the query's class, averaged
/// over frames of a class, then over classes. Frames of unlabeled videos
/// and frames without neighbors are skipped.
pub fn corret(graph: &NeighborGraph, labels: &BTreeMap<String, String>) -> ClassScores {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (q, ns) in &graph.entries {
        let Some(class) = labels.get(&q.video_id) else {
            continue;
        };
        if ns.is_empty() {
            continue;
        }
        let same = ns
            .iter()
            .filter(|n| labels.get(&n.frame.video_id) == Some(class))
            .count();
        groups
            .entry(class.clone())
            .or_default()
            .push(same as f64 / ns.len() as f64);
    }
    ClassScores::from_fractions(groups)
}

/// Share of labeled videos whose class is not among the `k_labels` most
/// frequent classes of their key frames' neighbors. Classes are ranked by
/// neighbor count, then by summed similarity, then by name.
pub fn topk_error(
    graph: &NeighborGraph,
    labels: &BTreeMap<String, String>,
    k_labels: usize,
) -> ClassScores {
    let mut tallies: BTreeMap<&str, BTreeMap<&str, (usize, f64)>> = BTreeMap::new();
    for (q, ns) in &graph.entries {
        if !labels.contains_key(&q.video_id) {
            continue;
        }
        let tally = tallies.entry(q.video_id.as_str()).or_default();
        for n in ns {
            if let Some(l) = labels.get(&n.frame.video_id) {
                let e = tally.entry(l.as_str()).or_insert((0, 0.0));
                e.0 += 1;
                e.1 += n.similarity;
            }
        }
    }
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (video, class) in labels {
        let Some(tally) = tallies.get(video.as_str()) else {
            continue;
        };
        let mut ranked: Vec<(&str, usize, f64)> =
            tally.iter().map(|(l, &(n, s))| (*l, n, s)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(b.2.total_cmp(&a.2)).then(a.0.cmp(b.0)));
        let hit = ranked.iter().take(k_labels).any(|(l, _, _)| *l == class);
        groups
            .entry(class.clone())
            .or_default()
            .push(if hit { 0.0 } else { 1.0 });
    }
    ClassScores::from_fractions(groups)
}

/// Query class x retrieved class, row-normalized percentages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Per row, the share of neighbors from unlabeled videos.
    pub unlabeled: Vec<f64>,
}

pub fn confusion_matrix(
    graph: &NeighborGraph,
    labels: &BTreeMap<String, String>,
) -> ConfusionMatrix {
    let classes: Vec<String> = labels
        .values()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let col = |l: &String| classes.binary_search(l).ok();
    let n = classes.len();
    let mut sums = vec![vec![0.0; n + 1]; n];
    let mut frames = vec![0usize; n];
    for (q, ns) in &graph.entries {
        let Some(row) = labels.get(&q.video_id).and_then(col) else {
            continue;
        };
        if ns.is_empty() {
            continue;
        }
        let share = 1.0 / ns.len() as f64;
        for nb in ns {
            let c = labels.get(&nb.frame.video_id).and_then(col).unwrap_or(n);
            sums[row][c] += share;
        }
        frames[row] += 1;
    }
    let mut rows = Vec::with_capacity(n);
    let mut unlabeled = Vec::with_capacity(n);
    for (mut r, f) in sums.into_iter().zip(frames) {
        let scale = if f == 0 { 0.0 } else { 100.0 / f as f64 };
        r.iter_mut().for_each(|v| *v *= scale);
        unlabeled.push(r.pop().unwrap());
        rows.push(r);
    }
    ConfusionMatrix {
        classes,
        rows,
        unlabeled,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub corloc: ClassScores,
    pub mean_overlap: f64,
    pub corret: ClassScores,
    pub top1_error: ClassScores,
    pub top2_error: ClassScores,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate(
    tubes: &TubeSet,
    graph: &NeighborGraph,
    ground_truth: &[GroundTruth],
) -> Result<EvalReport> {
    let labels: BTreeMap<String, String> = ground_truth
        .iter()
        .map(|g| (g.video_id.clone(), g.class_label.clone()))
        .collect();
    Ok(EvalReport {
        corloc: corloc(tubes, ground_truth)?,
        mean_overlap: mean_overlap(tubes, ground_truth)?,
        corret: corret(graph, &labels),
        top1_error: topk_error(graph, &labels, 1),
        top2_error: topk_error(graph, &labels, 2),
        confusion: confusion_matrix(graph, &labels),
    })
}

/// Aligned text table: one row per metric, one column per class plus the
/// average, followed by the confusion matrix.
pub fn render_table(report: &EvalReport) -> String {
    let classes = &report.confusion.classes;
    let width = classes.iter().map(String::len).max().unwrap_or(0).max(7);
    let mut out = String::new();
    let _ = write!(out, "{:<12}", "metric");
    for c in classes {
        let _ = write!(out, " {c:>width$}");
    }
    let _ = writeln!(out, " {:>width$}", "Avg.");
    let rows = [
        ("CorLoc", &report.corloc),
        ("CorRet", &report.corret),
        ("top-1 err", &report.top1_error),
        ("top-2 err", &report.top2_error),
    ];
    for (name, scores) in rows {
        let _ = write!(out, "{name:<12}");
        for c in classes {
            match scores.per_class.get(c) {
                Some(v) => {
                    let _ = write!(out, " {v:>width$.1}");
                }
                None => {
                    let _ = write!(out, " {:>width$}", "-");
                }
            }
        }
        let _ = writeln!(out, " {:>width$.1}", scores.average);
    }
    let _ = writeln!(out, "{:<12} {:.3}", "mean IoU", report.mean_overlap);
    if !classes.is_empty() {
        let _ = writeln!(out, "\nconfusion (query \\ retrieved, %)");
        let _ = write!(out, "{:<12}", "");
        for c in classes {
            let _ = write!(out, " {c:>width$}");
        }
        let _ = writeln!(out);
        for (c, row) in classes.iter().zip(&report.confusion.rows) {
            let _ = write!(out, "{c:<12}");
            for v in row {
                let _ = write!(out, " {v:>width$.1}");
            }
            let _ = writeln!(out);
        }
    }
    out
}
