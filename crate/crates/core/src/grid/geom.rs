use serde::{Deserialize, Serialize};
use std::fmt;

/// A cell coordinate. Row 0 is the top (north) edge of the map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub row: i32,
    pub col: i32,
}

impl Pos {
    pub const fn new(row: i32, col: i32) -> Self {
        Self { row, col }
    }

    pub fn offset(self, d_row: i32, d_col: i32) -> Self {
        Self::new(self.row + d_row, self.col + d_col)
    }

    pub fn step(self, dir: Orientation) -> Self {
        let (dr, dc) = dir.delta();
        self.offset(dr, dc)
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    pub fn dist2(self, other: Pos) -> i32 {
        let dr = self.row - other.row;
        let dc = self.col - other.col;
        dr * dr + dc * dc
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Facing direction of an avatar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    North,
    East,
    South,
    West,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [Self::North, Self::East, Self::South, Self::West];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Self::North => (-1, 0),
            Self::East => (0, 1),
            Self::South => (1, 0),
            Self::West => (0, -1),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Self::North => 0,
            Self::East => 1,
            Self::South => 2,
            Self::West => 3,
        }
    }

    pub fn from_index(i: u8) -> Self {
        Self::ALL[(i % 4) as usize]
    }

    pub fn turn_left(self) -> Self {
        Self::from_index(self.index() + 3)
    }

    pub fn turn_right(self) -> Self {
        Self::from_index(self.index() + 1)
    }

    pub fn reverse(self) -> Self {
        Self::from_index(self.index() + 2)
    }

    /// Number of clockwise quarter turns taking `self` to `other`.
    pub fn quarter_turns_to(self, other: Orientation) -> u8 {
        (other.index() + 4 - self.index()) % 4
    }

    /// Orientation from a unit step, if the step is axis-aligned.
    pub fn from_delta(dr: i32, dc: i32) -> Option<Self> {
        match (dr.signum(), dc.signum(), dr != 0 && dc != 0) {
            (_, _, true) => None,
            (-1, 0, _) => Some(Self::North),
            (1, 0, _) => Some(Self::South),
            (0, 1, _) => Some(Self::East),
            (0, -1, _) => Some(Self::West),
            _ => None,
        }
    }
}

/// Team membership in the painting substrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Team {
    Red,
    Blue,
}

impl Team {
    pub fn index(self) -> usize {
        match self {
            Team::Red => 0,
            Team::Blue => 1,
        }
    }

    pub fn other(self) -> Team {
        match self {
            Team::Red => Team::Blue,
            Team::Blue => Team::Red,
        }
    }

    pub fn from_index(i: usize) -> Team {
        if i == 0 {
            Team::Red
        } else {
            Team::Blue
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turning_cycles() {
        for o in Orientation::ALL {
            assert_eq!(o.turn_left().turn_right(), o);
            assert_eq!(o.turn_right().turn_right().turn_right().turn_right(), o);
            assert_eq!(o.reverse().reverse(), o);
            assert_eq!(Orientation::from_delta(o.delta().0, o.delta().1), Some(o));
        }
        assert_eq!(Orientation::North.quarter_turns_to(Orientation::West), 3);
    }
}
