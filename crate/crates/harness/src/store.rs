//! Line-delimited result records and report files.

use crucible_core::metrics::{MetricsReport, PopulationResult};
use crucible_core::{EpisodeResult, Mode};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

pub const RESULTS_FILE: &str = "results.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

/// One episode as persisted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub population: String,
    pub scenario: String,
    pub substrate: String,
    pub mode: Mode,
    pub episode: u32,
    pub seed: u64,
    /// Focal flag per player after seat shuffling.
    pub c: Vec<u8>,
    pub policies: Vec<String>,
    pub returns: Vec<f64>,
    pub steps: u32,
    pub focal_per_capita: Option<f64>,
    pub background_per_capita: Option<f64>,
    pub event_counts: BTreeMap<String, u64>,
    pub event_digest: String,
    pub state_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl Record {
    pub fn new(population: &str, substrate: &str, mode: Mode, episode: u32, r: &EpisodeResult) -> Self {
        Self {
            population: population.to_string(),
            scenario: r.scenario.clone(),
            substrate: substrate.to_string(),
            mode,
            episode,
            seed: r.seed,
            c: r.focal.iter().map(|&f| f as u8).collect(),
            policies: r.policies.clone(),
            returns: r.returns.clone(),
            steps: r.steps,
            focal_per_capita: r.focal_per_capita().ok(),
            background_per_capita: r.background_per_capita().ok(),
            event_counts: r.event_counts.clone(),
            event_digest: r.event_digest.clone(),
            state_digest: r.state_digest.clone(),
            aborted: r.aborted.clone(),
        }
    }

    /// Identity of the episode within a job.
    pub fn key(&self) -> (String, String, u32) {
        (self.population.clone(), self.scenario.clone(), self.episode)
    }

    pub fn to_population_result(&self) -> PopulationResult {
        PopulationResult {
            population: self.population.clone(),
            substrate: self.substrate.clone(),
            mode: self.mode,
            result: EpisodeResult {
                scenario: self.scenario.clone(),
                seed: self.seed,
                focal: self.c.iter().map(|&x| x != 0).collect(),
                returns: self.returns.clone(),
                policies: self.policies.clone(),
                steps: self.steps,
                event_counts: self.event_counts.clone(),
                event_digest: self.event_digest.clone(),
                state_digest: self.state_digest.clone(),
                aborted: self.aborted.clone(),
                events: Vec::new(),
            },
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

/// Appends records, one flushed line each.
pub struct RecordWriter {
    file: File,
}

impl RecordWriter {
    pub fn open(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file })
    }

    pub fn append(&mut self, record: &Record) -> io::Result<()> {
        let mut line = record.to_line();
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()
    }
}

/// Records in a results file. A truncated last line (a write cut short) is
/// skipped; any other malformed line is an error.
pub fn read_records(path: &Path) -> io::Result<Vec<Record>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let lines: Vec<String> = BufReader::new(File::open(path)?).lines().collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() => {}
            Err(e) => {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{}:{}: {e}", path.display(), i + 1),
                ))
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    population: &'a str,
    scenario: &'a str,
    substrate: &'a str,
    mode: &'a str,
    episodes: usize,
    aborted: usize,
    focal_per_capita_mean: f64,
    focal_per_capita_stderr: f64,
    background_per_capita: Option<f64>,
    equality: Option<f64>,
    normalized_score: f64,
    score_flag: String,
    anchor_lo: f64,
    anchor_hi: f64,
}

/// Write `report.json` and `report.csv` into `dir`.
pub fn write_report(dir: &Path, report: &MetricsReport) -> io::Result<()> {
    let json = serde_json::to_string_pretty(report).expect("reports serialize");
    std::fs::write(dir.join(REPORT_JSON), json + "\n")?;
    let mut w = csv::Writer::from_path(dir.join(REPORT_CSV))?;
    for m in &report.per_scenario {
        let mode = serde_json::to_value(m.mode).expect("mode serializes");
        let flag = serde_json::to_value(m.score_flag).expect("flag serializes");
        w.serialize(CsvRow {
            population: &m.population,
            scenario: &m.scenario,
            substrate: &m.substrate,
            mode: mode.as_str().unwrap_or_default(),
            episodes: m.episodes,
            aborted: m.aborted,
            focal_per_capita_mean: m.focal_per_capita_mean,
            focal_per_capita_stderr: m.focal_per_capita_stderr,
            background_per_capita: m.background_per_capita,
            equality: m.equality,
            normalized_score: m.normalized_score,
            score_flag: flag.as_str().unwrap_or_default().to_string(),
            anchor_lo: m.anchor_lo,
            anchor_hi: m.anchor_hi,
        })
        .map_err(io::Error::other)?;
    }
    w.flush()
}
