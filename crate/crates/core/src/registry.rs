//! Substrates, maps, reaction graphs, bots and scenarios loaded from a data
//! directory. The shipped data is compiled in; `CRUCIBLE_REGISTRY` points
//! at a directory to load instead.

use crate::bots::{BotDef, BotFile};
use crate::chemistry::ReactionGraph;
use crate::grid::GridMap;
use crate::protocol::{Population, ProtocolError, Scenario, ScenarioConfig};
use crate::substrate::{RulesConfig, Substrate, SubstrateConfig};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

include!(concat!(env!("OUT_DIR"), "/embedded.rs"));

pub const REGISTRY_ENV: &str = "CRUCIBLE_REGISTRY";

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("{file}: {message}")]
    Parse { file: String, message: String },
    #[error("duplicate {kind} id `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },
    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        source: ProtocolError,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Deserialize)]
struct ScenarioFile {
    #[serde(default)]
    scenario: Vec<ScenarioConfig>,
}

#[derive(Debug, Default)]
pub struct Registry {
    maps: BTreeMap<String, GridMap>,
    graphs: BTreeMap<String, ReactionGraph>,
    substrates: BTreeMap<String, Arc<Substrate>>,
    bots: BTreeMap<String, BotDef>,
    handles: BTreeMap<String, crate::protocol::PolicyHandle>,
    scenarios: BTreeMap<String, ScenarioConfig>,
}

fn parse_err(file: &str, e: impl std::fmt::Display) -> RegistryError {
    RegistryError::Parse {
        file: file.to_string(),
        message: e.to_string(),
    }
}

fn stem(path: &str) -> &str {
    let name = path.rsplit('/').next().unwrap_or(path);
    name.split('.').next().unwrap_or(name)
}

impl Registry {
    /// The data compiled into the library.
    pub fn builtin() -> Result<Self, RegistryError> {
        Self::from_files(EMBEDDED.iter().map(|(p, t)| (p.to_string(), t.to_string())))
    }

    /// `CRUCIBLE_REGISTRY` if set, else the built-in data.
    pub fn from_env() -> Result<Self, RegistryError> {
        match std::env::var_os(REGISTRY_ENV) {
            Some(dir) => Self::from_dir(Path::new(&dir)),
            None => Self::builtin(),
        }
    }

    /// Load a directory laid out like `data/`: `maps/*.txt`,
    /// `reactions/*.toml`, `substrates/*.toml`, `bots/*.toml`,
    /// `scenarios/*.toml`.
    pub fn from_dir(dir: &Path) -> Result<Self, RegistryError> {
        if !dir.is_dir() {
            return Err(RegistryError::Io {
                path: dir.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
            });
        }
        let mut files = Vec::new();
        for sub in ["maps", "reactions", "substrates", "bots", "scenarios"] {
            let d = dir.join(sub);
            if !d.is_dir() {
                continue;
            }
            let io = |source| RegistryError::Io {
                path: d.clone(),
                source,
            };
            let mut entries: Vec<PathBuf> = std::fs::read_dir(&d)
                .map_err(io)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            for p in entries {
                let text = std::fs::read_to_string(&p).map_err(|source| RegistryError::Io {
                    path: p.clone(),
                    source,
                })?;
                let name = p.file_name().unwrap().to_string_lossy();
                files.push((format!("{sub}/{name}"), text));
            }
        }
        Self::from_files(files)
    }

    /// Load from (relative path, contents) pairs.
    pub fn from_files(files: impl IntoIterator<Item = (String, String)>) -> Result<Self, RegistryError> {
        let mut by_dir: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        for (path, text) in files {
            let dir = path.split('/').next().unwrap_or("").to_string();
            by_dir.entry(dir).or_default().push((path, text));
        }
        let take = |d: &str, by_dir: &mut BTreeMap<String, Vec<(String, String)>>| {
            by_dir.remove(d).unwrap_or_default()
        };
        let mut reg = Registry::default();

        for (path, text) in take("maps", &mut by_dir) {
            let map = GridMap::parse(&text).map_err(|e| parse_err(&path, e))?;
            reg.maps.insert(stem(&path).to_string(), map);
        }
        for (path, text) in take("reactions", &mut by_dir) {
            let g = ReactionGraph::parse(&text).map_err(|e| parse_err(&path, e))?;
            reg.graphs.insert(stem(&path).to_string(), g);
        }
        for (path, text) in take("substrates", &mut by_dir) {
            let cfg: SubstrateConfig = toml::from_str(&text).map_err(|e| parse_err(&path, e))?;
            let map = reg.maps.get(&cfg.map).cloned().ok_or_else(|| RegistryError::Unknown {
                kind: "map",
                id: cfg.map.clone(),
            })?;
            let graph = match &cfg.rules {
                RulesConfig::Chemistry(spec) => Some(
                    reg.graphs
                        .get(&spec.graph)
                        .cloned()
                        .ok_or_else(|| RegistryError::Unknown {
                            kind: "reaction graph",
                            id: spec.graph.clone(),
                        })?,
                ),
                _ => None,
            };
            let id = cfg.id.clone();
            let s = Substrate::new(cfg, map, graph).map_err(|e| parse_err(&path, e))?;
            if reg.substrates.insert(id.clone(), Arc::new(s)).is_some() {
                return Err(RegistryError::Duplicate { kind: "substrate", id });
            }
        }
        for (path, text) in take("bots", &mut by_dir) {
            let file: BotFile = toml::from_str(&text).map_err(|e| parse_err(&path, e))?;
            for bot in file.bot {
                for s in &bot.substrates {
                    if !reg.substrates.contains_key(s) {
                        return Err(RegistryError::Unknown {
                            kind: "substrate",
                            id: s.clone(),
                        });
                    }
                }
                let id = bot.id.clone();
                reg.handles.insert(id.clone(), bot.handle());
                if reg.bots.insert(id.clone(), bot).is_some() {
                    return Err(RegistryError::Duplicate { kind: "bot", id });
                }
            }
        }
        for bot in reg.bots.values() {
            if let Some(qc) = &bot.qc {
                for p in &qc.partners {
                    if !reg.bots.contains_key(p) {
                        return Err(RegistryError::Unknown {
                            kind: "bot",
                            id: p.clone(),
                        });
                    }
                }
            }
        }
        for (path, text) in take("scenarios", &mut by_dir) {
            let file: ScenarioFile = toml::from_str(&text).map_err(|e| parse_err(&path, e))?;
            for sc in file.scenario {
                let id = sc.id.clone();
                if reg.scenarios.insert(id.clone(), sc).is_some() {
                    return Err(RegistryError::Duplicate { kind: "scenario", id });
                }
            }
        }
        // Validate every scenario up front.
        for id in reg.scenarios.keys() {
            reg.scenario(id)?;
        }
        Ok(reg)
    }

    pub fn substrates(&self) -> impl Iterator<Item = &Arc<Substrate>> {
        self.substrates.values()
    }

    pub fn substrate(&self, id: &str) -> Result<&Arc<Substrate>, RegistryError> {
        self.substrates.get(id).ok_or_else(|| RegistryError::Unknown {
            kind: "substrate",
            id: id.to_string(),
        })
    }

    pub fn map(&self, id: &str) -> Option<&GridMap> {
        self.maps.get(id)
    }

    pub fn bots(&self) -> impl Iterator<Item = &BotDef> {
        self.bots.values()
    }

    pub fn bot(&self, id: &str) -> Result<&BotDef, RegistryError> {
        self.bots.get(id).ok_or_else(|| RegistryError::Unknown {
            kind: "bot",
            id: id.to_string(),
        })
    }

    /// Shared handle for a bot; the same id always yields the same handle.
    pub fn bot_handle(&self, id: &str) -> Result<crate::protocol::PolicyHandle, RegistryError> {
        self.handles.get(id).cloned().ok_or_else(|| RegistryError::Unknown {
            kind: "bot",
            id: id.to_string(),
        })
    }

    pub fn scenario_configs(&self) -> impl Iterator<Item = &ScenarioConfig> {
        self.scenarios.values()
    }

    /// Build a scenario with its background population resolved.
    pub fn scenario(&self, id: &str) -> Result<Arc<Scenario>, RegistryError> {
        let cfg = self.scenarios.get(id).ok_or_else(|| RegistryError::Unknown {
            kind: "scenario",
            id: id.to_string(),
        })?;
        let substrate = Arc::clone(self.substrate(&cfg.substrate)?);
        let background = if cfg.background.is_empty() {
            None
        } else {
            let mut entries = Vec::new();
            for b in &cfg.background {
                let bot = self.bot(&b.bot)?;
                if !bot.substrates.contains(&cfg.substrate) {
                    return Err(RegistryError::Parse {
                        file: format!("scenario {id}"),
                        message: format!("bot `{}` is not declared for `{}`", b.bot, cfg.substrate),
                    });
                }
                entries.push((self.bot_handle(&b.bot)?, b.weight));
            }
            Some(Population::new(entries).map_err(|source| RegistryError::Scenario {
                scenario: id.to_string(),
                source,
            })?)
        };
        Scenario::build(cfg.clone(), substrate, background)
            .map(Arc::new)
            .map_err(|source| RegistryError::Scenario {
                scenario: id.to_string(),
                source,
            })
    }
}
