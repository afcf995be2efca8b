//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use common::{close_rel, random_frame, random_lambda, random_setup, random_trellis, rng};
use tubeloc::appearance::{hough_vote, match_confidence, RegionSet};
use tubeloc::consistency::TrackPairs;
use tubeloc::discovery::{initialize, score_video, step};
use tubeloc::evaluation::{confusion_matrix, corloc, corret, evaluate, iou, topk_error};
use tubeloc::io::{save_collection, save_results, save_snapshot};
use tubeloc::solver::{solve_best_tube, solve_p_best, Trellis};
use tubeloc::synth::{
    brute_force_phm, brute_force_tube, generate_collection, noise_for_margin_ratio,
    verify_planted_optimal, SynthCollection, SynthSpec,
};
use tubeloc::{run_discovery, BBox, Collection, Config, GroundTruth, Tube, TubeRegion};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn instances() -> Vec<(Trellis, f64)> {
    let mut r = rng(2024);
    (0..200)
        .map(|_| {
            let t = random_trellis(&mut r, 6, 8);
            let lambda = random_lambda(&mut r);
            (t, lambda)
        })
        .collect()
}

fn dp_optimality() -> Outcome {
    let cases = instances();
    let start = Instant::now();
    for (i, (t, lambda)) in cases.iter().enumerate() {
        let dp = solve_best_tube(t, *lambda);
        let bf = brute_force_tube(t, *lambda).map_err(|e| e.to_string())?;
        ensure(dp.proposal_ids == bf.proposal_ids, || {
            format!(
                "instance {i}: {:?} vs {:?}",
                dp.proposal_ids, bf.proposal_ids
            )
        })?;
        ensure((dp.objective - bf.objective).abs() <= 1e-9, || {
            format!("instance {i}: score {} vs {}", dp.objective, bf.objective)
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("200 instances agree, {elapsed:.2?}"))
}

fn sequential_dp() -> Outcome {
    for (i, (t, lambda)) in instances().iter().enumerate() {
        let tubes = solve_p_best(t, 3, *lambda);
        let mut residual = Some(t.clone());
        for (k, tube) in tubes.iter().enumerate() {
            let res = residual
                .take()
                .ok_or_else(|| format!("instance {i}: tube {k} from an exhausted trellis"))?;
            let bf = brute_force_tube(&res, *lambda).map_err(|e| e.to_string())?;
            ensure(bf.proposal_ids == tube.proposal_ids, || {
                format!(
                    "instance {i} tube {k}: {:?} vs residual optimum {:?}",
                    tube.proposal_ids, bf.proposal_ids
                )
            })?;
            residual = res.without(&bf.choice);
        }
        let achievable = t
            .frames
            .iter()
            .map(|f| f.candidates.len())
            .min()
            .unwrap_or(0);
        ensure(tubes.len() == achievable.min(3), || {
            format!("instance {i}: {} tubes", tubes.len())
        })?;
        for f in 0..t.len() {
            for a in 0..tubes.len() {
                for b in a + 1..tubes.len() {
                    ensure(tubes[a].proposal_ids[f] != tubes[b].proposal_ids[f], || {
                        format!("instance {i}: tubes {a} and {b} share a region at frame {f}")
                    })?;
                }
            }
        }
    }
    Ok("200 instances, p = 3".into())
}

fn phm_equivalence() -> Outcome {
    let mut r = rng(77);
    let config = Config::default();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let (nt, nu) = (r.random_range(1..=20), r.random_range(1..=20));
        let ft = random_frame(&mut r, nt, 16);
        let fu = random_frame(&mut r, nu, 16);
        let (rt, ru) = (RegionSet::whole(&ft), RegionSet::whole(&fu));
        let oracle = brute_force_phm(&rt, &ru, &config).map_err(|e| e.to_string())?;
        let grid = hough_vote(&rt, &ru, &config).map_err(|e| e.to_string())?;
        let table = match_confidence(&rt, &ru, &config).map_err(|e| e.to_string())?;
        let pairs = grid
            .votes
            .iter()
            .zip(&oracle.grid.votes)
            .chain(table.scores.iter().zip(&oracle.table.scores));
        for (a, b) in pairs {
            ensure(close_rel(*a, *b, 1e-12), || format!("pair {i}: {a} vs {b}"))?;
            if a.abs().max(b.abs()) > 1e-250 {
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
            }
        }
    }
    Ok(format!(
        "100 frame pairs, max relative deviation {worst:.1e}"
    ))
}

fn score_ranges_on(collection: &Collection, config: &Config) -> Result<usize, String> {
    let err = |e: tubeloc::Error| e.to_string();
    let mut checked = 0;
    let mut state = initialize(collection, config).map_err(err)?;
    for it in 1..=config.iterations {
        let next = step(collection, &state, config, it == config.iterations).map_err(err)?;
        for (v, video) in collection.videos.iter().enumerate() {
            let scores = score_video(collection, v, &next.graph, &state, config).map_err(err)?;
            for f in &scores.frames {
                let phi = &f.appearance.phi;
                let (lo, hi) = phi
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| {
                        (l.min(x), h.max(x))
                    });
                let degenerate = f
                    .appearance
                    .standout
                    .iter()
                    .all(|s| *s == f.appearance.standout[0]);
                ensure(phi.iter().all(|x| (0.0..=1.0).contains(x)), || {
                    format!("phi_a out of range in {}", video.id)
                })?;
                ensure(degenerate || (lo == 0.0 && hi == 1.0), || {
                    format!("phi_a not rescaled in {}", video.id)
                })?;
                ensure(f.motion.iter().all(|m| (0.0..=4.0).contains(m)), || {
                    format!("phi_m out of range in {}", video.id)
                })?;
                checked += phi.len();
            }
            let tr = &scores.trellis;
            for (k, trans) in tr.transitions.iter().enumerate() {
                let (t, u) = (tr.frames[k].key_frame, tr.frames[k + 1].key_frame);
                let pairs = TrackPairs::between(video, t, u);
                ensure(
                    trans.appearance.iter().all(|a| (0.0..=1.0).contains(a)),
                    || format!("psi_a out of range in {}", video.id),
                )?;
                for (i, ci) in tr.frames[k].candidates.iter().enumerate() {
                    for (j, cj) in tr.frames[k + 1].candidates.iter().enumerate() {
                        let a = &video.frames[&t].proposal(ci.proposal_id).unwrap().bbox;
                        let b = &video.frames[&u].proposal(cj.proposal_id).unwrap().bbox;
                        let shared = pairs.shared(a, b).count();
                        let m = trans.motion[i * trans.cols + j];
                        if shared > 0 {
                            ensure((-1.0..=0.0).contains(&m), || {
                                format!("psi_m {m} with shared tracks")
                            })?;
                        } else {
                            ensure(m == config.theta, || {
                                format!("psi_m {m} without shared tracks")
                            })?;
                        }
                        checked += 1;
                    }
                }
            }
        }
        state = next;
    }
    Ok(checked)
}

fn score_ranges(clean: &SynthCollection, noisy: &SynthCollection) -> Outcome {
    let config = Config::default();
    let n =
        score_ranges_on(&clean.collection, &config)? + score_ranges_on(&noisy.collection, &config)?;
    Ok(format!("{n} scores checked over clean and noisy runs"))
}

struct EndToEnd {
    clean: SynthCollection,
    noisy: SynthCollection,
    sigma: f64,
}

fn end_to_end(data: &EndToEnd) -> Outcome {
    let config = Config::default();
    let start = Instant::now();
    let check = verify_planted_optimal(&data.clean, &config).map_err(|e| e.to_string())?;
    ensure(check.optimal, || {
        format!("planted tube not optimal: {:?}", check.counterexample)
    })?;
    let out = run_discovery(&data.clean.collection, &config).map_err(|e| e.to_string())?;
    let report = evaluate(&out.tubes, &out.graph, &data.clean.collection.ground_truth)
        .map_err(|e| e.to_string())?;
    let noisy_out = run_discovery(&data.noisy.collection, &config).map_err(|e| e.to_string())?;
    let noisy = evaluate(
        &noisy_out.tubes,
        &noisy_out.graph,
        &data.noisy.collection.ground_truth,
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let summary = format!(
        "CorLoc {:.1} CorRet {:.1}; noise {:.4}: CorLoc {:.1}; {elapsed:.2?}",
        report.corloc.average, report.corret.average, data.sigma, noisy.corloc.average
    );
    ensure(
        report.corloc.average == 100.0 && report.corret.average == 100.0,
        || summary.clone(),
    )?;
    ensure(noisy.corloc.average >= 90.0, || summary.clone())?;
    ensure(elapsed < Duration::from_secs(60), || summary.clone())?;
    Ok(summary)
}

fn iteration_monotonicity(clean: &SynthCollection) -> Outcome {
    let out = run_discovery(&clean.collection, &Config::default()).map_err(|e| e.to_string())?;
    let ious: Vec<f64> = out
        .snapshots
        .iter()
        .map(|s| clean.planted.mean_iou(&s.tubes))
        .collect();
    let text = ious
        .iter()
        .map(|v| format!("{v:.3}"))
        .collect::<Vec<_>>()
        .join(" ");
    ensure(ious.len() == 5, || format!("{} snapshots", ious.len()))?;
    ensure(ious.windows(2).all(|w| w[1] >= w[0] - 1e-12), || {
        format!("mean IoU {text}")
    })?;
    Ok(format!("mean IoU per iteration {text}"))
}

fn metric_suite() -> Outcome {
    let b = |x, y, w, h| BBox::new(x, y, w, h).unwrap();
    let sq = b(0.0, 0.0, 10.0, 10.0);
    ensure(iou(&sq, &sq) == 1.0, || "iou(a, a) != 1".into())?;
    ensure(iou(&sq, &b(20.0, 0.0, 10.0, 10.0)) == 0.0, || {
        "disjoint iou != 0".into()
    })?;
    ensure(
        (iou(&sq, &b(5.0, 0.0, 10.0, 10.0)) - 1.0 / 3.0).abs() < 1e-15,
        || "half shift iou != 1/3".into(),
    )?;

    let half = b(0.0, 0.0, 10.0, 5.0);
    ensure(iou(&sq, &half) == 0.5, || {
        "boundary case is not exactly 0.5".into()
    })?;
    let gt = vec![GroundTruth {
        video_id: "a".into(),
        frame_index: 0,
        bbox: sq,
        class_label: "c".into(),
    }];
    let tubes = [(
        "a".to_string(),
        vec![Tube {
            video_id: "a".into(),
            regions: [(
                0,
                TubeRegion {
                    proposal_id: None,
                    bbox: half,
                },
            )]
            .into(),
            score: 0.0,
        }],
    )]
    .into();
    let cl = corloc(&tubes, &gt).map_err(|e| e.to_string())?;
    ensure(cl.average == 0.0, || "IoU = 0.5 counted as correct".into())?;

    let mut r = rng(99);
    for i in 0..200 {
        let (graph, gt, _) = random_setup(&mut r);
        let labels: BTreeMap<String, String> = gt
            .iter()
            .map(|g| (g.video_id.clone(), g.class_label.clone()))
            .collect();
        let (e1, e2) = (
            topk_error(&graph, &labels, 1),
            topk_error(&graph, &labels, 2),
        );
        for (c, v) in &e1.per_class {
            ensure(e2.per_class[c] <= *v, || {
                format!("graph {i}: top-2 error exceeds top-1 for {c}")
            })?;
        }
        let cr = corret(&graph, &labels);
        let cm = confusion_matrix(&graph, &labels);
        for (k, c) in cm.classes.iter().enumerate() {
            let expected = cr.per_class.get(c).copied().unwrap_or(0.0);
            ensure((cm.rows[k][k] - expected).abs() < 1e-9, || {
                format!("graph {i}: diagonal {c} != CorRet")
            })?;
        }
    }
    Ok("iou hand cases, strict boundary, 200 random graphs".into())
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(root).unwrap().to_string_lossy().into_owned(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let run = |dir: &Path| -> Result<(), String> {
        let err = |e: tubeloc::Error| e.to_string();
        let synth = generate_collection(&SynthSpec::default()).map_err(err)?;
        save_collection(&synth.collection, dir.join("collection")).map_err(err)?;
        let out = run_discovery(&synth.collection, &Config::default()).map_err(err)?;
        save_results(&out.tubes, &out.graph, dir.join("out")).map_err(err)?;
        for s in &out.snapshots {
            save_snapshot(s, dir.join("out")).map_err(err)?;
        }
        Ok(())
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path())?;
    run(b.path())?;
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    ensure(ta.keys().eq(tb.keys()), || "file sets differ".into())?;
    for (name, bytes) in &ta {
        ensure(tb[name] == *bytes, || format!("{name} differs"))?;
    }
    Ok(format!("{} files byte-identical", ta.len()))
}

fn main() -> ExitCode {
    let clean = generate_collection(&SynthSpec::default()).expect("default collection");
    let sigma = noise_for_margin_ratio(&SynthSpec::default(), 0.5, 1.0).expect("noise level");
    let noisy = generate_collection(&SynthSpec {
        descriptor_noise: sigma,
        ..SynthSpec::default()
    })
    .expect("noisy collection");
    let data = EndToEnd {
        clean,
        noisy,
        sigma,
    };

    let criteria: Vec<Criterion<'_>> = vec![
        ("dp optimality", Box::new(dp_optimality)),
        ("sequential dp", Box::new(sequential_dp)),
        ("phm oracle equivalence", Box::new(phm_equivalence)),
        (
            "score ranges",
            Box::new(|| score_ranges(&data.clean, &data.noisy)),
        ),
        ("end-to-end recovery", Box::new(|| end_to_end(&data))),
        (
            "iteration monotonicity",
            Box::new(|| iteration_monotonicity(&data.clean)),
        ),
        ("metric unit suite", Box::new(metric_suite)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
