//! ASCII map format.
//!
//! ```text
//! # comment lines start with '#'
//! legend W wall
//! legend . floor
//! legend P spawn
//! legend r spawn red
//! legend a resource 0
//! legend h hill+spawn blue
//! map
//! WWWWW
//! WP.aW
//! WWWWW
//! ```
//!
//! Every character used in the grid must be declared by a `legend` line in
//! the header. A legend entry is one or more tags joined by `+`:
//!
//! | tag              | meaning                                            |
//! |------------------|----------------------------------------------------|
//! | `floor`          | walkable ground                                    |
//! | `wall`           | impassable, blocks beams                           |
//! | `water`          | impassable river, targeted by cleaning beams      |
//! | `spawn [team]`   | spawn point, optionally reserved for a team        |
//! | `resource <k>`   | matrix-game resource of type `k`                   |
//! | `apple`          | apple present at episode start (regrowth site)     |
//! | `orchard`        | empty apple spawn site (Clean Up)                  |
//! | `berry`          | berry plant; colors are dealt at reset             |
//! | `claimable`      | territory resource wall                            |
//! | `hill`           | part of the King of the Hill region                |
//! | `base <team>`    | flag home of a team                                |
//! | `molecule <name>`| molecule of the named species                      |
//! | `site`           | reaction site hint for scripted carriers           |
//! | `indicator`      | indicator tile showing the team status             |
//!
//! Rows must all have the same width.

use super::geom::{Pos, Team};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Terrain {
    Floor,
    Wall,
    Water,
}

impl Terrain {
    pub fn passable(self) -> bool {
        matches!(self, Terrain::Floor)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitialItem {
    Resource(u8),
    Apple,
    Berry,
    Claimable,
    Molecule(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CellSpec {
    pub wall: bool,
    pub water: bool,
    pub spawn: Option<Option<Team>>,
    pub item: Option<InitialItem>,
    pub orchard: bool,
    pub hill: bool,
    pub base: Option<Team>,
    pub site: bool,
    pub indicator: bool,
}

impl CellSpec {
    pub fn terrain(&self) -> Terrain {
        if self.wall {
            Terrain::Wall
        } else if self.water {
            Terrain::Water
        } else {
            Terrain::Floor
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("character `{ch}` at row {row} has no legend entry")]
    UndeclaredChar { ch: char, row: usize },
    #[error("row {row} has width {found}, expected {expected}")]
    Ragged {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("map has no rows")]
    Empty,
}

/// A parsed map: static layout plus initial placements.
#[derive(Clone, Debug)]
pub struct GridMap {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<CellSpec>,
}

fn parse_team(word: Option<&str>, line: usize) -> Result<Option<Team>, MapError> {
    match word {
        None => Ok(None),
        Some("red") => Ok(Some(Team::Red)),
        Some("blue") => Ok(Some(Team::Blue)),
        Some(other) => Err(MapError::Syntax {
            line,
            message: format!("unknown team `{other}`"),
        }),
    }
}

fn parse_entry(spec: &str, line: usize) -> Result<CellSpec, MapError> {
    let mut cell = CellSpec::default();
    for tag in spec.split('+') {
        let mut words = tag.split_whitespace();
        let head = words.next().ok_or_else(|| MapError::Syntax {
            line,
            message: "empty tag".into(),
        })?;
        let arg = words.next();
        let bad = |message: String| MapError::Syntax { line, message };
        match head {
            "floor" => {}
            "wall" => cell.wall = true,
            "water" => cell.water = true,
            "spawn" => cell.spawn = Some(parse_team(arg, line)?),
            "resource" => {
                let k = arg
                    .and_then(|a| a.parse::<u8>().ok())
                    .ok_or_else(|| bad("resource needs a numeric type".into()))?;
                cell.item = Some(InitialItem::Resource(k));
            }
            "apple" => cell.item = Some(InitialItem::Apple),
            "orchard" => cell.orchard = true,
            "berry" => cell.item = Some(InitialItem::Berry),
            "claimable" => cell.item = Some(InitialItem::Claimable),
            "hill" => cell.hill = true,
            "base" => {
                cell.base = Some(
                    parse_team(arg, line)?.ok_or_else(|| bad("base needs a team".into()))?,
                )
            }
            "molecule" => {
                let name = arg.ok_or_else(|| bad("molecule needs a species".into()))?;
                cell.item = Some(InitialItem::Molecule(name.to_string()));
            }
            "site" => cell.site = true,
            "indicator" => cell.indicator = true,
            other => return Err(bad(format!("unknown tag `{other}`"))),
        }
    }
    Ok(cell)
}

impl GridMap {
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut legend: BTreeMap<char, CellSpec> = BTreeMap::new();
        let mut lines = text.lines().enumerate();
        let mut saw_map = false;
        for (i, raw) in lines.by_ref() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            if line.trim() == "map" {
                saw_map = true;
                break;
            }
            let rest = line
                .strip_prefix("legend ")
                .ok_or_else(|| MapError::Syntax {
                    line: i + 1,
                    message: format!("expected `legend` or `map`, found `{line}`"),
                })?;
            let mut chars = rest.chars();
            let ch = chars.next().ok_or_else(|| MapError::Syntax {
                line: i + 1,
                message: "missing legend character".into(),
            })?;
            legend.insert(ch, parse_entry(chars.as_str().trim(), i + 1)?);
        }
        if !saw_map {
            return Err(MapError::Syntax {
                line: text.lines().count(),
                message: "missing `map` section".into(),
            });
        }
        let rows: Vec<&str> = lines
            .map(|(_, l)| l.trim_end_matches(['\r']))
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(MapError::Empty);
        }
        let width = rows[0].chars().count();
        let mut cells = Vec::with_capacity(width * rows.len());
        for (r, row) in rows.iter().enumerate() {
            let found = row.chars().count();
            if found != width {
                return Err(MapError::Ragged {
                    row: r,
                    found,
                    expected: width,
                });
            }
            for ch in row.chars() {
                let spec = legend
                    .get(&ch)
                    .ok_or(MapError::UndeclaredChar { ch, row: r })?;
                cells.push(spec.clone());
            }
        }
        Ok(Self {
            width,
            height: rows.len(),
            cells,
        })
    }

    pub fn index(&self, pos: Pos) -> usize {
        pos.row as usize * self.width + pos.col as usize
    }

    pub fn pos(&self, index: usize) -> Pos {
        Pos::new((index / self.width) as i32, (index % self.width) as i32)
    }

    pub fn cell(&self, pos: Pos) -> &CellSpec {
        &self.cells[self.index(pos)]
    }

    pub fn spawn_points(&self, team: Option<Team>) -> Vec<Pos> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.spawn == Some(team))
            .map(|(i, _)| self.pos(i))
            .collect()
    }

    pub fn count_items(&self, pred: impl Fn(&InitialItem) -> bool) -> usize {
        self.cells
            .iter()
            .filter(|c| c.item.as_ref().is_some_and(&pred))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# tiny
legend W wall
legend . floor
legend P spawn
legend a resource 0
legend r spawn red+hill
map
WWWWW
WP.aW
Wr..W
WWWWW
";

    #[test]
    fn parses_legend_and_grid() {
        let m = GridMap::parse(SMALL).unwrap();
        assert_eq!((m.width, m.height), (5, 4));
        assert_eq!(m.cell(Pos::new(0, 0)).terrain(), Terrain::Wall);
        assert_eq!(m.cell(Pos::new(1, 1)).spawn, Some(None));
        assert_eq!(
            m.cell(Pos::new(1, 3)).item,
            Some(InitialItem::Resource(0))
        );
        let red = m.cell(Pos::new(2, 1));
        assert_eq!(red.spawn, Some(Some(Team::Red)));
        assert!(red.hill);
        assert_eq!(m.spawn_points(None), vec![Pos::new(1, 1)]);
    }

    #[test]
    fn rejects_undeclared_and_ragged() {
        let bad = "legend . floor\nmap\n..\n.X\n";
        assert_eq!(
            GridMap::parse(bad).unwrap_err(),
            MapError::UndeclaredChar { ch: 'X', row: 1 }
        );
        let ragged = "legend . floor\nmap\n...\n..\n";
        assert!(matches!(
            GridMap::parse(ragged).unwrap_err(),
            MapError::Ragged { row: 1, .. }
        ));
        assert!(GridMap::parse("legend . lava\nmap\n.\n").is_err());
    }
}
