//! Scripted background bots: basic behaviours, event-triggered puppets and
//! quality control.

pub mod behavior;
pub mod nav;
pub mod puppet;
pub mod qc;

pub use behavior::Behavior;
pub use puppet::{EventPattern, PuppetPolicy, PuppetSpec, Rule, Trigger, Who};
pub use qc::{qc_run, Criterion, QcError, QcReport, Verdict};

use crate::protocol::PolicyHandle;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Build a policy handle from ordered rules and a default behaviour.
pub fn compile_puppet(id: impl Into<String>, rules: Vec<Rule>, default: Behavior) -> PolicyHandle {
    let spec = Arc::new(PuppetSpec { default, rules });
    PolicyHandle::scripted(id, move |seed| {
        Box::new(PuppetPolicy::new(Arc::clone(&spec), seed))
    })
}

fn default_qc_episodes() -> u32 {
    qc::MIN_EPISODES
}

/// How a bot is validated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QcSpec {
    /// Substrate to test on; defaults to the bot's first substrate.
    #[serde(default)]
    pub substrate: Option<String>,
    /// Bot ids filling the other seats; empty means self-play.
    #[serde(default)]
    pub partners: Vec<String>,
    #[serde(default)]
    pub seat: usize,
    #[serde(default = "default_qc_episodes")]
    pub episodes: u32,
    pub criterion: Criterion,
}

/// A bot definition file entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BotDef {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub substrates: Vec<String>,
    pub default: Behavior,
    #[serde(default)]
    pub rule: Vec<Rule>,
    #[serde(default)]
    pub qc: Option<QcSpec>,
}

impl BotDef {
    pub fn handle(&self) -> PolicyHandle {
        compile_puppet(self.id.clone(), self.rule.clone(), self.default.clone())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BotFile {
    #[serde(default)]
    pub bot: Vec<BotDef>,
}
