use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use hac_core::baselines::{eval_top_n, maximal_independent_set, random_sample};
use hac_core::datagen::{character_profile, gaussian_mixture_stream, household_stream, HouseholdSpec, Means, MixtureSpec};
use hac_core::io::{read_points, write_jsonl};
use hac_core::tracker::{query_top_human, run_tracker};
use hac_core::{bucket_index, experiments, postprocess, snapshot, Dataset, DedupPolicy, Error, OutputOrder, Point, Sketch};
use serde::{Deserialize, Serialize};

use crate::config::ConfigFile;
use crate::{
    BaselineArgs, BaselineKind, BenchArgs, DedupKind, EvalArgs, Failure, HouseholdArgs, MixtureArgs, QueryArgs,
    QueryMode, RunArgs, Scenario, TrackArgs,
};

type CmdResult = Result<(), Failure>;

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(path, e))
}

/// `path` or stdout.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn in_file<T>(path: &Path, r: hac_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::from(e).context(&path.display().to_string()))
}

fn read_dataset(path: &Path) -> Result<Dataset, Failure> {
    let points = in_file(path, read_points(open(path)?))?;
    in_file(path, Dataset::new(points))
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CmdResult {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(hac_core::Error::from)?;
    writeln!(w).and_then(|_| w.flush()).map_err(hac_core::Error::from)?;
    Ok(())
}

fn required<T>(value: Option<T>, flag: &str, mode: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::contract(format!("{mode} needs {flag}")))
}

#[derive(Serialize)]
struct RunSummary {
    points: u64,
    total_weight: f64,
    slots: usize,
    memory_cells: usize,
}

pub fn run(a: RunArgs) -> CmdResult {
    let file = ConfigFile::load(Some(&a.config))?;
    let mut sketch = Sketch::new(file.hac_config(a.seed.seed)?)?;
    let input: Box<dyn BufRead> = match a.input.as_deref() {
        Some(p) if p != Path::new("-") => Box::new(open(p)?),
        _ => Box::new(BufReader::new(io::stdin().lock())),
    };
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(Error::from)?;
        if line.trim().is_empty() {
            continue;
        }
        let point: Point = serde_json::from_str(&line).map_err(|source| Error::Parse { line: i + 1, source })?;
        sketch
            .process(&point)
            .map_err(|e| Failure::from(e).context(&format!("line {}", i + 1)))?;
    }
    let mut w = create(&a.snapshot)?;
    snapshot::write_snapshot(&sketch, &mut w)?;
    w.flush().map_err(|e| Failure::io(&a.snapshot, e))?;
    let summary = RunSummary {
        points: sketch.t_count(),
        total_weight: sketch.total_weight(),
        slots: sketch.total_slots(),
        memory_cells: sketch.memory_cells(),
    };
    println!("{}", serde_json::to_string(&summary).map_err(Error::from)?);
    Ok(())
}

pub fn query(a: QueryArgs) -> CmdResult {
    let mut text = String::new();
    io::Read::read_to_string(&mut open(&a.snapshot)?, &mut text).map_err(|e| Failure::io(&a.snapshot, e))?;
    let sketch = in_file(&a.snapshot, snapshot::from_str(&text))?;
    let file = ConfigFile::load(a.config.as_deref())?;
    let from_file = file.dedup.clone().unwrap_or(DedupPolicy::None);
    let policy = match a.dedup {
        None => match (a.rd, from_file) {
            (Some(r_d), DedupPolicy::Threshold { .. }) => DedupPolicy::Threshold { r_d },
            (_, p) => p,
        },
        Some(DedupKind::None) => DedupPolicy::None,
        Some(DedupKind::Theorem) => DedupPolicy::Theorem,
        Some(DedupKind::Threshold) => {
            let r_d = match (a.rd, from_file) {
                (Some(r_d), _) => r_d,
                (None, DedupPolicy::Threshold { r_d }) => r_d,
                _ => return Err(Failure::contract("--dedup threshold needs --rd")),
            };
            DedupPolicy::Threshold { r_d }
        }
    };
    policy.validate()?;
    let q = a.time.or(sketch.last_arrival()).unwrap_or(0.0);
    let set = match a.mode {
        QueryMode::Dense => {
            let f = required(a.f, "--f", "dense mode")?;
            let mut set = sketch.query_dense(f, q)?;
            set.outputs = postprocess::apply(&policy, set.outputs, &sketch.config().metric, OutputOrder::Slot)?;
            set
        }
        QueryMode::TopkFreq => {
            let k = required(a.k, "--k", "topk-freq mode")?;
            let index = match (a.radius_index, a.r) {
                (Some(i), _) => i,
                (None, Some(r)) => bucket_index(sketch.config(), r).ok_or_else(|| {
                    Failure::contract(format!("--r {r} exceeds the largest sketch radius {}", sketch.config().r_max()))
                })?,
                (None, None) => 0,
            };
            sketch.query_top_k_by_frequency(index, k, q, &policy)?
        }
        QueryMode::TopkRadius => {
            let f = required(a.f, "--f", "topk-radius mode")?;
            let k = required(a.k, "--k", "topk-radius mode")?;
            sketch.query_top_k_by_radius(f, k, q, &policy)?
        }
    };
    write_jsonl(sink(a.out.as_deref())?, &set.outputs)?;
    Ok(())
}

pub fn gen_mixture(a: MixtureArgs) -> CmdResult {
    let seed = a.seed.seed.unwrap_or(0);
    let spec = if a.profile {
        character_profile(a.n, seed)
    } else {
        let k = a.k.max(1);
        MixtureSpec {
            k,
            dims: a.dims,
            means: Means::Separated { distance: a.separation },
            sigma: a.sigma,
            weights: a.weights.unwrap_or_else(|| vec![(1.0 - a.noise) / k as f64; k]),
            noise_fraction: a.noise,
            n: a.n,
            seed,
        }
    };
    let data = gaussian_mixture_stream(&spec)?;
    write_jsonl(sink(a.out.as_deref())?, data.points())?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct Prototypes {
    objects: Vec<Vec<f64>>,
    humans: Vec<Vec<f64>>,
}

pub fn gen_household(a: HouseholdArgs) -> CmdResult {
    let mut spec = HouseholdSpec::default_scenario(a.seed.seed.unwrap_or(0));
    if let Some(r) = a.noise_rate {
        spec.noise_rate = r;
    }
    if let Some(m) = a.face_miss_rate {
        spec.face_miss_rate = m;
    }
    let streams = household_stream(&spec)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Failure::io(&a.out_dir, e))?;
    write_jsonl(create(&a.out_dir.join("objects.jsonl"))?, streams.objects.points())?;
    write_jsonl(create(&a.out_dir.join("faces.jsonl"))?, streams.faces.points())?;
    write_jsonl(create(&a.out_dir.join("truth.jsonl"))?, &streams.truth)?;
    if let Some(path) = a.prototypes {
        let protos = Prototypes { objects: streams.object_prototypes, humans: streams.human_prototypes };
        write_json(Some(&path), &protos)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchReport<T> {
    scenario: &'static str,
    criterion: u32,
    seeds: Vec<u64>,
    report: T,
}

pub fn bench(a: BenchArgs) -> CmdResult {
    let seeds: Vec<u64> = (0..a.seeds).collect();
    let out = a.out.as_deref();
    match a.scenario {
        Scenario::Characters => {
            let report = experiments::characters(&seeds, &experiments::CharactersParams::default())?;
            write_json(out, &BenchReport { scenario: "characters", criterion: 8, seeds, report })
        }
        Scenario::Guarantees => {
            let report = experiments::guarantees(&seeds, &experiments::GuaranteesParams::default())?;
            write_json(out, &BenchReport { scenario: "guarantees", criterion: 7, seeds, report })
        }
        Scenario::Household => {
            let tracker = ConfigFile::load(a.config.as_deref())?.tracker(None);
            let report = experiments::household(&seeds, &tracker)?;
            write_json(out, &BenchReport { scenario: "household", criterion: 11, seeds, report })
        }
    }
}

#[derive(Serialize)]
struct Ranking {
    object: usize,
    ranking: Vec<(usize, f64)>,
}

pub fn track(a: TrackArgs) -> CmdResult {
    let cfg = ConfigFile::load(a.config.as_deref())?.tracker(a.seed.seed);
    let objects = read_dataset(&a.objects)?;
    let faces = read_dataset(&a.faces)?;
    let records = run_tracker(objects.points(), faces.points(), &cfg)?;
    match (&a.out, &a.prototypes) {
        (Some(out), _) => write_jsonl(create(out)?, &records)?,
        (None, None) => write_jsonl(sink(None)?, &records)?,
        (None, Some(_)) => {}
    }
    if let Some(path) = &a.prototypes {
        let protos: Prototypes = serde_json::from_reader(open(path)?)
            .map_err(|e| Failure::format(format!("{}: {e}", path.display())))?;
        let rows: Vec<Ranking> = protos
            .objects
            .iter()
            .enumerate()
            .map(|(object, proto)| Ranking {
                object,
                ranking: query_top_human(&records, proto, &protos.humans, cfg.feature_threshold, cfg.face_threshold),
            })
            .collect();
        write_jsonl(sink(None)?, &rows)?;
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> CmdResult {
    let metric = ConfigFile::load(a.config.as_deref())?.metric;
    let outputs = in_file(&a.outputs, read_points(open(&a.outputs)?))?;
    let data = read_dataset(&a.data)?;
    let report = eval_top_n(&outputs, &data, a.n, a.threshold, &metric)?;
    write_json(a.out.as_deref(), &report)
}

pub fn baseline(a: BaselineArgs) -> CmdResult {
    let metric = ConfigFile::load(a.config.as_deref())?.metric;
    let data = read_dataset(&a.data)?;
    let seed = a.seed.seed.unwrap_or(0);
    let picked = match a.kind {
        BaselineKind::Random => random_sample(&data, required(a.k, "--k", "random")?, seed)?,
        BaselineKind::Mis => maximal_independent_set(&data, required(a.r, "--r", "mis")?, seed, &metric)?,
    };
    write_jsonl(sink(a.out.as_deref())?, &picked)?;
    Ok(())
}
