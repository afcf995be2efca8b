//! Chain trellis over key-frame candidates and its dynamic-programming
//! solvers.
//!
//! A tube picks one candidate per key frame and scores
//! `Σ_t φ(r_t) + λ Σ_t ψ(r_t, r_{t+1})`.

use std::cmp::Ordering;

use crate::config::Config;
use crate::consistency::{transition_scores, TransitionScores};
use crate::error::{Error, Result};
use crate::model::{Proposal, Video};
use crate::scores::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub proposal_id: u32,
    pub unary: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrellisFrame {
    pub key_frame: usize,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trellis {
    pub frames: Vec<TrellisFrame>,
    /// `transitions[t]` scores pairs between `frames[t]` and `frames[t + 1]`.
    pub transitions: Vec<TransitionScores>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeSolution {
    pub key_frames: Vec<usize>,
    /// Candidate index per frame.
    pub choice: Vec<usize>,
    pub proposal_ids: Vec<u32>,
    pub objective: f64,
}

impl Trellis {
    pub fn new(frames: Vec<TrellisFrame>, transitions: Vec<TransitionScores>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::EmptyProposals("trellis has no frames".into()));
        }
        if let Some(f) = frames.iter().find(|f| f.candidates.is_empty()) {
            return Err(Error::EmptyProposals(format!(
                "key frame {} has no candidates",
                f.key_frame
            )));
        }
        if transitions.len() + 1 != frames.len() {
            return Err(Error::Config(format!(
                "{} frames need {} transitions, got {}",
                frames.len(),
                frames.len() - 1,
                transitions.len()
            )));
        }
        for (t, tr) in transitions.iter().enumerate() {
            let (r, c) = (frames[t].candidates.len(), frames[t + 1].candidates.len());
            if tr.rows != r
                || tr.cols != c
                || tr.appearance.len() != r * c
                || tr.motion.len() != r * c
            {
                return Err(Error::Config(format!("transition {t} has wrong shape")));
            }
        }
        Ok(Trellis {
            frames,
            transitions,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Objective of a candidate sequence, summed with compensation.
    pub fn objective(&self, choice: &[usize], lambda: f64) -> f64 {
        let mut s = CompensatedSum::default();
        for (f, &c) in self.frames.iter().zip(choice) {
            s.add(f.candidates[c].unary);
        }
        for (t, tr) in self.transitions.iter().enumerate() {
            s.add(lambda * tr.total(choice[t], choice[t + 1]));
        }
        s.value()
    }

    pub fn solution(&self, choice: Vec<usize>, lambda: f64) -> TubeSolution {
        TubeSolution {
            key_frames: self.frames.iter().map(|f| f.key_frame).collect(),
            proposal_ids: self
                .frames
                .iter()
                .zip(&choice)
                .map(|(f, &c)| f.candidates[c].proposal_id)
                .collect(),
            objective: self.objective(&choice, lambda),
            choice,
        }
    }

    /// The trellis with candidate `choice[t]` removed from every frame `t`,
    /// or `None` if a frame would be left empty.
    pub fn without(&self, choice: &[usize]) -> Option<Trellis> {
        let keep: Vec<Vec<usize>> = self
            .frames
            .iter()
            .zip(choice)
            .map(|(f, &c)| (0..f.candidates.len()).filter(|&i| i != c).collect())
            .collect();
        if keep.iter().any(Vec::is_empty) {
            return None;
        }
        let frames = self
            .frames
            .iter()
            .zip(&keep)
            .map(|(f, k)| TrellisFrame {
                key_frame: f.key_frame,
                candidates: k.iter().map(|&i| f.candidates[i]).collect(),
            })
            .collect();
        let transitions = self
            .transitions
            .iter()
            .enumerate()
            .map(|(t, tr)| tr.select(&keep[t], &keep[t + 1]))
            .collect();
        Some(Trellis {
            frames,
            transitions,
        })
    }

    /// Candidate indices of frame `t` in ascending proposal-id order.
    pub(crate) fn id_order(&self, t: usize) -> Vec<usize> {
        let c = &self.frames[t].candidates;
        let mut order: Vec<usize> = (0..c.len()).collect();
        order.sort_by_key(|&i| c[i].proposal_id);
        order
    }
}

/// Sort by score descending, ties by proposal id ascending, and keep the
/// first `top`.
pub fn rank_candidates(scores: impl IntoIterator<Item = (u32, f64)>, top: usize) -> Vec<Candidate> {
    let mut c: Vec<Candidate> = scores
        .into_iter()
        .map(|(proposal_id, unary)| Candidate { proposal_id, unary })
        .collect();
    c.sort_by(|a, b| {
        b.unary
            .partial_cmp(&a.unary)
            .unwrap_or(Ordering::Equal)
            .then(a.proposal_id.cmp(&b.proposal_id))
    });
    c.truncate(top);
    c
}

/// Build a video's trellis from per-key-frame unary scores `(proposal id, φ)`.
pub fn build_trellis(
    video: &Video,
    key_frames: &[usize],
    unary: &[Vec<(u32, f64)>],
    config: &Config,
) -> Result<Trellis> {
    let mut frames = Vec::with_capacity(key_frames.len());
    let mut regions: Vec<Vec<&Proposal>> = Vec::with_capacity(key_frames.len());
    for (&t, scores) in key_frames.iter().zip(unary) {
        let frame = video.frame(t).ok_or_else(|| Error::MissingKeyFrame {
            video: video.id.clone(),
            frame: t,
        })?;
        if scores.is_empty() {
            return Err(Error::EmptyProposals(format!(
                "video {} key frame {t}",
                video.id
            )));
        }
        let candidates = rank_candidates(scores.iter().copied(), config.top_candidates);
        regions.push(
            candidates
                .iter()
                .map(|c| {
                    frame.proposal(c.proposal_id).ok_or_else(|| {
                        Error::EmptyProposals(format!(
                            "video {} frame {t}: unknown proposal {}",
                            video.id, c.proposal_id
                        ))
                    })
                })
                .collect::<Result<_>>()?,
        );
        frames.push(TrellisFrame {
            key_frame: t,
            candidates,
        });
    }
    let transitions = (0..frames.len().saturating_sub(1))
        .map(|t| {
            transition_scores(
                video,
                (frames[t].key_frame, &regions[t]),
                (frames[t + 1].key_frame, &regions[t + 1]),
                config.theta,
            )
        })
        .collect::<Result<_>>()?;
    Trellis::new(frames, transitions)
}

/// Global maximizer of the chain objective; ties resolve to the
/// lexicographically smallest proposal-id sequence.
pub fn solve_best_tube(trellis: &Trellis, lambda: f64) -> TubeSolution {
    let n = trellis.len();
    let orders: Vec<Vec<usize>> = (0..n).map(|t| trellis.id_order(t)).collect();
    let last = &trellis.frames[n - 1].candidates;
    let mut value: Vec<f64> = last.iter().map(|c| c.unary).collect();
    let mut next: Vec<Vec<usize>> = vec![Vec::new(); n];

    // Backward pass: value[i] is the best score of a suffix starting at
    // candidate i; successors are scanned in id order so the first strict
    // maximum is the smallest id.
    for t in (0..n - 1).rev() {
        let frame = &trellis.frames[t].candidates;
        let tr = &trellis.transitions[t];
        let mut v = vec![0.0; frame.len()];
        let mut nx = vec![0; frame.len()];
        for (i, cand) in frame.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            let mut arg = orders[t + 1][0];
            for &j in &orders[t + 1] {
                let s = lambda * tr.total(i, j) + value[j];
                if s > best {
                    best = s;
                    arg = j;
                }
            }
            v[i] = cand.unary + best;
            nx[i] = arg;
        }
        value = v;
        next[t] = nx;
    }

    let mut start = orders[0][0];
    for &i in &orders[0] {
        if value[i] > value[start] {
            start = i;
        }
    }
    let mut choice = vec![start];
    for nx in next.iter().take(n - 1) {
        let cur = *choice.last().unwrap();
        choice.push(nx[cur]);
    }
    trellis.solution(choice, lambda)
}

/// Up to `p` region-disjoint tubes by repeatedly solving and removing the
/// chosen candidate from every frame.
pub fn solve_p_best(trellis: &Trellis, p: usize, lambda: f64) -> Vec<TubeSolution> {
    let mut out: Vec<TubeSolution> = Vec::with_capacity(p);
    let mut current = Some(trellis.clone());
    while out.len() < p {
        let Some(t) = current.take() else { break };
        let sol = solve_best_tube(&t, lambda);
        current = t.without(&sol.choice);
        out.push(sol);
    }
    // Candidate indices refer to the residual trellises; remap them to the
    // input trellis.
    for sol in &mut out {
        sol.choice = trellis
            .frames
            .iter()
            .zip(&sol.proposal_ids)
            .map(|(f, id)| {
                f.candidates
                    .iter()
                    .position(|c| c.proposal_id == *id)
                    .unwrap()
            })
            .collect();
    }
    out
}
