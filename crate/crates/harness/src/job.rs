//! Evaluation jobs: focal populations × scenarios × seeded episodes.

use crate::store::{read_records, write_report, Record, RecordWriter, RESULTS_FILE};
use crucible_core::grid::{CounterRng, Stream};
use crucible_core::metrics::{build_report, MetricsReport};
use crucible_core::protocol::{NoopPolicy, ProtocolError, RandomPolicy};
use crucible_core::registry::RegistryError;
use crucible_core::{run_episode, PolicyHandle, Population, Registry, Scenario};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::mpsc;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JobError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("population `{0}`: {1}")]
    Population(String, String),
    #[error("duplicate population name `{0}`")]
    DuplicatePopulation(String),
    #[error("job has no {0}")]
    Empty(&'static str),
    #[error("episode failed: {0}")]
    Episode(#[from] ProtocolError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

/// A named focal population.
#[derive(Clone, Debug)]
pub struct FocalPopulation {
    pub name: String,
    pub population: Population,
}

/// Resolve a policy id: `random`, `noop`, or a registered bot.
fn resolve(reg: &Registry, id: &str) -> Result<PolicyHandle, JobError> {
    match id {
        "random" => Ok(RandomPolicy::handle()),
        "noop" => Ok(NoopPolicy::handle()),
        _ => Ok(reg.bot_handle(id)?),
    }
}

/// Parse `name=id[:weight],id[:weight]...` or a bare policy id (which then
/// names the population). Missing weights split the remainder evenly.
pub fn parse_population(reg: &Registry, text: &str) -> Result<FocalPopulation, JobError> {
    let (name, body) = match text.split_once('=') {
        Some((n, b)) => (n.trim().to_string(), b),
        None => (text.trim().to_string(), text),
    };
    let bad = |msg: String| JobError::Population(name.clone(), msg);
    let mut named = Vec::new();
    let mut unweighted = Vec::new();
    for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (id, weight) = match part.split_once(':') {
            Some((id, w)) => {
                let w: f64 = w.trim().parse().map_err(|_| bad(format!("bad weight in `{part}`")))?;
                (id.trim(), Some(w))
            }
            None => (part, None),
        };
        let h = resolve(reg, id)?;
        match weight {
            Some(w) => named.push((h, w)),
            None => unweighted.push(h),
        }
    }
    if named.is_empty() && unweighted.is_empty() {
        return Err(bad("no policies".into()));
    }
    let rest = 1.0 - named.iter().map(|e| e.1).sum::<f64>();
    let k = unweighted.len();
    named.extend(unweighted.into_iter().map(|h| (h, rest / k as f64)));
    let population = Population::new(named).map_err(|e| bad(e.to_string()))?;
    Ok(FocalPopulation { name, population })
}

/// Episode seed from the job seed, scenario id and episode index. It does
/// not depend on the population, so populations meet identical episodes.
pub fn episode_seed(base: u64, scenario: &str, episode: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(scenario.as_bytes());
    h.update(episode.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

#[derive(Clone, Debug)]
pub struct EvaluationJob {
    pub populations: Vec<FocalPopulation>,
    pub scenarios: Vec<String>,
    pub episodes: u32,
    pub seed: u64,
    pub parallelism: usize,
    pub out: PathBuf,
    /// Fixed (lo, hi) score anchors by scenario; others are computed.
    pub anchors: BTreeMap<String, (f64, f64)>,
}

struct Task {
    population: usize,
    scenario: Arc<Scenario>,
    episode: u32,
}

/// Run every missing episode of the job, appending records as they
/// complete, then build the report over all records in the output
/// directory and write it there. Ids are resolved before any episode runs.
pub fn run_evaluation(reg: &Registry, job: &EvaluationJob) -> Result<MetricsReport, JobError> {
    if job.populations.is_empty() {
        return Err(JobError::Empty("populations"));
    }
    if job.scenarios.is_empty() {
        return Err(JobError::Empty("scenarios"));
    }
    let mut seen = BTreeSet::new();
    for p in &job.populations {
        if !seen.insert(p.name.as_str()) {
            return Err(JobError::DuplicatePopulation(p.name.clone()));
        }
    }
    let scenarios = job
        .scenarios
        .iter()
        .map(|id| reg.scenario(id))
        .collect::<Result<Vec<_>, _>>()?;

    let io = |source| JobError::Io {
        path: job.out.clone(),
        source,
    };
    std::fs::create_dir_all(&job.out).map_err(io)?;
    let results_path = job.out.join(RESULTS_FILE);
    let done: BTreeSet<(String, String, u32)> = read_records(&results_path)
        .map_err(io)?
        .iter()
        .map(Record::key)
        .collect();

    let mut tasks = Vec::new();
    for (pi, p) in job.populations.iter().enumerate() {
        for s in &scenarios {
            for e in 0..job.episodes {
                if !done.contains(&(p.name.clone(), s.id().to_string(), e)) {
                    tasks.push(Task {
                        population: pi,
                        scenario: Arc::clone(s),
                        episode: e,
                    });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(job.parallelism.max(1))
        .build()
        .map_err(|e| JobError::Pool(e.to_string()))?;
    let mut writer = RecordWriter::open(&results_path).map_err(io)?;
    let (tx, rx) = mpsc::channel::<Result<Record, ProtocolError>>();
    let outcome = std::thread::scope(|scope| {
        scope.spawn(|| {
            pool.install(|| {
                tasks.par_iter().for_each_with(tx, |tx, t| {
                    let _ = tx.send(run_task(job, t));
                })
            })
        });
        // Single writer: records are appended in completion order.
        for r in rx {
            writer.append(&r?).map_err(io)?;
        }
        Ok::<(), JobError>(())
    });
    outcome?;

    let all = read_records(&results_path).map_err(io)?;
    let results: Vec<_> = all.iter().map(Record::to_population_result).collect();
    let report = build_report(&results, &job.anchors);
    write_report(&job.out, &report).map_err(io)?;
    Ok(report)
}

fn run_task(job: &EvaluationJob, t: &Task) -> Result<Record, ProtocolError> {
    let pop = &job.populations[t.population];
    let seed = episode_seed(job.seed, t.scenario.id(), t.episode);
    let focal = t
        .scenario
        .sample_focal(&pop.population, CounterRng::new(seed).derive(Stream::Background, 1));
    let result = run_episode(&t.scenario, &focal, seed)?;
    Ok(Record::new(
        &pop.name,
        t.scenario.substrate.id(),
        t.scenario.mode(),
        t.episode,
        &result,
    ))
}
