use super::geom::Pos;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

macro_rules! event_kinds {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// The stable event vocabulary. Bots, QC criteria and reports refer to
        /// events by these names.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum EventKind {
            $($variant),*
        }

        impl EventKind {
            pub const ALL: &'static [EventKind] = &[$(EventKind::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(EventKind::$variant => $name),*
                }
            }
        }

        impl FromStr for EventKind {
            type Err = UnknownEvent;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(EventKind::$variant),)*
                    _ => Err(UnknownEvent(s.to_string())),
                }
            }
        }
    };
}

event_kinds! {
    Bump => "bump",
    BeamFired => "beam_fired",
    BeamBlocked => "beam_blocked",
    PlayerRemoved => "player_removed",
    PlayerRemovedPermanent => "player_removed_permanent",
    PlayerRespawned => "player_respawned",
    PlayerZapped => "player_zapped",
    PlayerFrozen => "player_frozen",
    ResourceCollected => "resource_collected",
    ResourceRespawned => "resource_respawned",
    Interaction => "interaction",
    PartnerPlayed => "partner_played",
    NoEffect => "no_effect",
    AppleEaten => "apple_eaten",
    AppleGrown => "apple_grown",
    PlayerCleaned => "player_cleaned",
    PollutionLevel => "pollution_level",
    BerryPlanted => "berry_planted",
    BerryEaten => "berry_eaten",
    BerryRipened => "berry_ripened",
    AvatarRecolored => "avatar_recolored",
    ResourceClaimed => "resource_claimed",
    ResourceActivated => "resource_activated",
    ResourceReward => "resource_reward",
    ResourceDamaged => "resource_damaged",
    ResourceDestroyed => "resource_destroyed",
    FlagPickedUp => "flag_picked_up",
    FlagDropped => "flag_dropped",
    FlagReturned => "flag_returned",
    FlagCaptured => "flag_captured",
    HillControl => "hill_control",
    MoleculePickedUp => "molecule_picked_up",
    MoleculeDropped => "molecule_dropped",
    ReactionFired => "reaction_fired",
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown event name `{0}`")]
pub struct UnknownEvent(pub String);

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for EventKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EventKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Something that happened during a step.
///
/// Events within a step are appended in a fixed order: respawns, then the
/// movement phase in ascending actor index, then the beam phase in ascending
/// actor index, then world updates in cell-scan order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub actor: Option<usize>,
    pub target: Option<usize>,
    pub pos: Option<Pos>,
    pub step: u32,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub payload: Vec<(&'static str, f64)>,
}

impl Event {
    pub fn new(kind: EventKind, step: u32) -> Self {
        Self {
            kind,
            actor: None,
            target: None,
            pos: None,
            step,
            payload: Vec::new(),
        }
    }

    pub fn actor(mut self, p: usize) -> Self {
        self.actor = Some(p);
        self
    }

    pub fn target(mut self, p: usize) -> Self {
        self.target = Some(p);
        self
    }

    pub fn at(mut self, pos: Pos) -> Self {
        self.pos = Some(pos);
        self
    }

    pub fn with(mut self, key: &'static str, value: f64) -> Self {
        self.payload.push((key, value));
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.payload
            .iter()
            .find_map(|(k, v)| (*k == key).then_some(*v))
    }

    /// Whether `player` is named by this event as actor or target.
    pub fn involves(&self, player: usize) -> bool {
        self.actor == Some(player) || self.target == Some(player)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_round_trips() {
        for kind in EventKind::ALL {
            assert_eq!(kind.as_str().parse::<EventKind>().unwrap(), *kind);
        }
        assert!("apple_eatn".parse::<EventKind>().is_err());
    }
}
