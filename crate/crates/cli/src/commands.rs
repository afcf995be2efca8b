use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use anyhow::{anyhow, bail};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tubeloc::evaluation::{corloc, corret, evaluate, render_table};
use tubeloc::io::{self, TubeSet};
use tubeloc::synth::{generate_collection, SynthSpec};
use tubeloc::{run_discovery, Collection, NeighborGraph};

use crate::config::read_settings;
use crate::failure::{Classify, Failure};
use crate::{EvalArgs, InspectArgs, RunArgs, SynthArgs};

pub const RUN_MANIFEST: &str = "run_manifest.json";

#[derive(Debug, Serialize)]
struct RunManifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    inputs: Vec<String>,
    input_hash: String,
    started_at: String,
    finished_at: String,
}

fn now() -> String {
    humantime::format_rfc3339_seconds(SystemTime::now()).to_string()
}

fn hash_files(files: &[PathBuf]) -> anyhow::Result<String> {
    let mut h = Sha256::new();
    for f in files {
        let bytes = fs::read(f).map_err(|e| anyhow!("{}: {e}", f.display()))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn write_manifest<C: Serialize>(
    out: &Path,
    command: &str,
    config: &C,
    inputs: &[PathBuf],
    input_hash: String,
    started_at: String,
) -> Result<(), Failure> {
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        input_hash,
        started_at,
        finished_at: now(),
    };
    write_json(&out.join(RUN_MANIFEST), &manifest).failed(|| "writing run manifest".into())
}

pub fn synth(args: &SynthArgs) -> Result<(), Failure> {
    let started = now();
    let mut spec: SynthSpec = match &args.spec {
        Some(p) => read_settings(p).invalid(|| "loading generator spec".into())?,
        None => SynthSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(noise) = args.noise {
        spec.descriptor_noise = noise;
    }
    let synth = generate_collection(&spec).map_err(|e| Failure::validation(e.into()))?;
    let manifest =
        io::save_collection(&synth.collection, &args.out).failed(|| "writing collection".into())?;
    write_json(&args.out.join("planted.json"), &synth.planted)
        .failed(|| "writing planted truth".into())?;
    let inputs: Vec<PathBuf> = args.spec.iter().cloned().collect();
    let hash = hash_files(&inputs).invalid(|| "hashing inputs".into())?;
    write_manifest(&args.out, "synth", &spec, &inputs, hash, started)?;
    eprintln!(
        "wrote {} videos to {}",
        synth.collection.videos.len(),
        manifest.display()
    );
    Ok(())
}

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let started = now();
    let config = args.config.resolve().map_err(Failure::validation)?;
    let inputs =
        io::collection_files(&args.collection).invalid(|| "reading collection manifest".into())?;
    let collection =
        io::load_collection(&args.collection).invalid(|| "loading collection".into())?;
    let hash = hash_files(&inputs).invalid(|| "hashing inputs".into())?;
    eprintln!(
        "discovering in {} videos ({} iterations, k = {}, p = {})",
        collection.videos.len(),
        config.iterations,
        config.k_neighbors,
        config.p_tubes
    );
    let out = run_discovery(&collection, &config).failed(|| "discovery failed".into())?;

    let iterations = args.out.join("iterations");
    if iterations.exists() {
        fs::remove_dir_all(&iterations).failed(|| format!("clearing {}", iterations.display()))?;
    }
    io::save_results(&out.tubes, &out.graph, &args.out).failed(|| "writing results".into())?;
    for s in &out.snapshots {
        io::save_snapshot(s, &args.out).failed(|| format!("writing iteration {}", s.iteration))?;
    }
    write_manifest(&args.out, "run", &config, &inputs, hash, started)?;
    eprintln!("wrote results to {}", args.out.display());
    Ok(())
}

fn check_ids(
    collection: &Collection,
    tubes: &TubeSet,
    graph: &NeighborGraph,
) -> anyhow::Result<()> {
    let known = |id: &str| collection.video_index(id).is_some();
    if let Some(id) = tubes.keys().find(|id| !known(id)) {
        bail!("tubes reference unknown video {id:?}");
    }
    for (q, ns) in &graph.entries {
        if let Some(id) = std::iter::once(&q.video_id)
            .chain(ns.iter().map(|n| &n.frame.video_id))
            .find(|id| !known(id))
        {
            bail!("graph references unknown video {id:?}");
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct IterationScore {
    iteration: usize,
    corloc: f64,
    corret: f64,
}

pub fn eval(args: &EvalArgs) -> Result<(), Failure> {
    let collection =
        io::load_collection(&args.collection).invalid(|| "loading collection".into())?;
    let tubes =
        io::read_tubes(args.results.join(io::TUBES_FILE)).invalid(|| "loading tubes".into())?;
    let graph =
        io::read_graph(args.results.join(io::GRAPH_FILE)).invalid(|| "loading graph".into())?;
    check_ids(&collection, &tubes, &graph)
        .invalid(|| "results do not match the collection".into())?;
    let gt = &collection.ground_truth;
    let report = evaluate(&tubes, &graph, gt).invalid(|| "scoring results".into())?;
    eprint!("{}", render_table(&report));
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.results.join("eval.json"));
    write_json(&report_path, &report).failed(|| "writing report".into())?;

    if args.per_iteration {
        let snapshots =
            io::load_snapshots(&args.results).invalid(|| "loading iterations".into())?;
        let labels = collection.class_labels();
        let mut rows = Vec::with_capacity(snapshots.len());
        for s in &snapshots {
            check_ids(&collection, &s.tubes, &s.graph)
                .invalid(|| format!("iteration {}", s.iteration))?;
            rows.push(IterationScore {
                iteration: s.iteration,
                corloc: corloc(&s.tubes, gt)
                    .invalid(|| format!("iteration {}", s.iteration))?
                    .average,
                corret: corret(&s.graph, &labels).average,
            });
        }
        eprintln!("\n{:>9}  {:>7}  {:>7}", "iteration", "CorLoc", "CorRet");
        for r in &rows {
            eprintln!("{:>9}  {:>7.1}  {:>7.1}", r.iteration, r.corloc, r.corret);
        }
        write_json(&args.results.join("eval_iterations.json"), &rows)
            .failed(|| "writing iteration report".into())?;
    }
    Ok(())
}

pub fn inspect(args: &InspectArgs) -> Result<(), Failure> {
    let path = &args.path;
    let file = fs::File::open(path).invalid(|| format!("opening {}", path.display()))?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let jsonl = path.extension().is_some_and(|e| e == "jsonl");
    let mut emit = |v: &serde_json::Value| -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(v).failed(|| "formatting".into())?;
        match writeln!(out, "{text}") {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.failed(|| "writing to stdout".into()),
        }
    };
    if jsonl {
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.invalid(|| format!("reading {}", path.display()))?;
            if line.trim().is_empty() {
                continue;
            }
            let v: serde_json::Value =
                serde_json::from_str(&line).invalid(|| format!("{}:{}", path.display(), i + 1))?;
            emit(&v)?;
        }
    } else {
        let v: serde_json::Value = serde_json::from_reader(BufReader::new(file))
            .invalid(|| format!("parsing {}", path.display()))?;
        emit(&v)?;
    }
    Ok(())
}
