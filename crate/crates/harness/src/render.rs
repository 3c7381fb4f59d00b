//! Re-simulate a recorded episode and dump RGB24 frames.

use crate::job::{episode_seed, FocalPopulation};
use crate::store::Record;
use crucible_core::grid::{observe, render_world, CounterRng, Stream};
use crucible_core::protocol::ProtocolError;
use crucible_core::registry::RegistryError;
use crucible_core::{run_episode_observed, Registry};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Episode(#[from] ProtocolError),
    #[error("record population `{record}` does not match `{given}`")]
    Population { record: String, given: String },
    #[error("seed {seed} does not reproduce the record (event digest {found}, expected {expected})")]
    Digest {
        seed: u64,
        found: String,
        expected: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderManifest {
    pub scenario: String,
    pub seed: u64,
    pub event_digest: String,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Per-player view files, when requested.
    pub views: Vec<usize>,
    /// SHA-256 over every frame file in order.
    pub frames_digest: String,
}

/// Replay `record` with the population that produced it and write
/// `frames.rgb` (raw RGB24 frames back to back, frame 0 being the initial
/// state), optional `view_<player>.rgb` (88×88×3 per step) and
/// `manifest.json` into `dir`. The replay must reproduce the record's event
/// digest, otherwise nothing is written.
pub fn render_record(
    reg: &Registry,
    record: &Record,
    population: &FocalPopulation,
    views: &[usize],
    dir: &Path,
) -> Result<RenderManifest, RenderError> {
    if population.name != record.population {
        return Err(RenderError::Population {
            record: record.population.clone(),
            given: population.name.clone(),
        });
    }
    let scenario = reg.scenario(&record.scenario)?;
    let focal = scenario.sample_focal(
        &population.population,
        CounterRng::new(record.seed).derive(Stream::Background, 1),
    );
    let mut frames = Vec::new();
    let mut per_view: Vec<Vec<u8>> = vec![Vec::new(); views.len()];
    let (mut width, mut height) = (0, 0);
    let result = run_episode_observed(&scenario, &focal, record.seed, |state| {
        let f = render_world(state);
        width = f.width;
        height = f.height;
        frames.extend_from_slice(&f.data);
        for (k, &p) in views.iter().enumerate() {
            if let Ok(o) = observe(state, p) {
                per_view[k].extend_from_slice(&o.pixels);
            }
        }
    })?;
    if result.event_digest != record.event_digest {
        return Err(RenderError::Digest {
            seed: record.seed,
            found: result.event_digest,
            expected: record.event_digest.clone(),
        });
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RenderError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut digest = Sha256::new();
    let mut write = |name: String, bytes: &[u8]| -> Result<(), RenderError> {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).map_err(io(&path))?;
        f.write_all(bytes).map_err(io(&path))?;
        digest.update(bytes);
        Ok(())
    };
    write("frames.rgb".into(), &frames)?;
    for (k, &p) in views.iter().enumerate() {
        write(format!("view_{p}.rgb"), &per_view[k])?;
    }
    let manifest = RenderManifest {
        scenario: record.scenario.clone(),
        seed: record.seed,
        event_digest: record.event_digest.clone(),
        width,
        height,
        frames: frames.len() / (width * height * 3).max(1),
        views: views.to_vec(),
        frames_digest: hex_digest(digest),
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json + "\n").map_err(io(&path))?;
    Ok(manifest)
}

fn hex_digest(h: Sha256) -> String {
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed a record was produced with, for a job seed.
pub fn expected_seed(job_seed: u64, record: &Record) -> u64 {
    episode_seed(job_seed, &record.scenario, record.episode)
}
