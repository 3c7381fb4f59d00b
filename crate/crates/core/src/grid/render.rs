//! Sprite rendering for egocentric observations and full-map frames.
//!
//! Every cell is an 8×8 sprite. Apart from avatars, every sprite shape is
//! invariant under quarter turns, so rotating the view into an avatar's
//! frame only has to rotate the avatar facing markers.

use super::geom::{Orientation, Pos};
use super::map::Terrain;
use super::state::{GridError, GridState, Item};
use crate::substrate::Mechanics;
use serde::Serialize;

pub const SPRITE: usize = 8;
pub const WINDOW: usize = 11;
/// Rows visible ahead of the avatar's own row.
pub const AHEAD: usize = 9;
/// Rows visible behind the avatar.
pub const BEHIND: usize = 1;
/// Columns visible to either side.
pub const SIDE: usize = 5;
pub const OBS_PIXELS: usize = WINDOW * SPRITE;
pub const OBS_BYTES: usize = OBS_PIXELS * OBS_PIXELS * 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

/// Color data for sprites. Avatar colors are indexed by `color_tag`; any
/// injective assignment works, these are picked to be easy to tell apart.
pub mod palette {
    use super::Rgb;

    pub const FLOOR: Rgb = Rgb(24, 24, 28);
    pub const WALL: Rgb = Rgb(110, 110, 120);
    pub const WATER: Rgb = Rgb(30, 90, 200);
    pub const POLLUTION: Rgb = Rgb(110, 90, 40);
    pub const APPLE: Rgb = Rgb(60, 200, 70);
    pub const RESOURCE: [Rgb; 4] = [
        Rgb(220, 60, 60),
        Rgb(60, 200, 90),
        Rgb(70, 110, 230),
        Rgb(230, 200, 60),
    ];
    pub const BERRY_RIPE: [Rgb; 3] = [Rgb(235, 40, 40), Rgb(40, 220, 60), Rgb(50, 90, 245)];
    pub const BERRY_UNRIPE: [Rgb; 3] = [Rgb(120, 50, 50), Rgb(50, 115, 60), Rgb(55, 70, 125)];
    pub const CLAIMABLE: Rgb = Rgb(140, 140, 140);
    pub const ACTIVE_MARK: Rgb = Rgb(250, 250, 250);
    pub const TEAM: [Rgb; 2] = [Rgb(200, 30, 30), Rgb(30, 60, 210)];
    pub const TEAM_GROUND: [Rgb; 2] = [Rgb(90, 20, 25), Rgb(20, 30, 95)];
    pub const HILL: Rgb = Rgb(45, 45, 45);
    pub const PURPLE: Rgb = Rgb(140, 40, 170);
    pub const NEUTRAL_INDICATOR: Rgb = Rgb(70, 70, 70);
    pub const WHITE: Rgb = Rgb(245, 245, 245);
    pub const MARK: Rgb = Rgb(255, 255, 0);
    pub const FACING: Rgb = Rgb(255, 255, 255);
    pub const SITE: Rgb = Rgb(60, 60, 40);
    pub const AVATAR: [Rgb; 16] = [
        Rgb(255, 99, 71),
        Rgb(65, 105, 225),
        Rgb(50, 205, 50),
        Rgb(238, 130, 238),
        Rgb(255, 165, 0),
        Rgb(0, 206, 209),
        Rgb(218, 165, 32),
        Rgb(199, 21, 133),
        Rgb(154, 205, 50),
        Rgb(100, 149, 237),
        Rgb(244, 164, 96),
        Rgb(147, 112, 219),
        Rgb(46, 139, 87),
        Rgb(210, 105, 30),
        Rgb(176, 196, 222),
        Rgb(255, 215, 180),
    ];
    pub const MOLECULE: [Rgb; 8] = [
        Rgb(250, 128, 114),
        Rgb(135, 206, 250),
        Rgb(152, 251, 152),
        Rgb(255, 228, 181),
        Rgb(221, 160, 221),
        Rgb(240, 230, 140),
        Rgb(175, 238, 238),
        Rgb(255, 182, 193),
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    Solid,
    /// Centered square with the given inset from each edge.
    Square(usize),
    /// Centered plus sign, two pixels thick.
    Plus,
    /// One-pixel frame along the sprite edge.
    Ring,
}

impl Shape {
    fn covers(self, y: usize, x: usize) -> bool {
        match self {
            Shape::Solid => true,
            Shape::Square(k) => y >= k && y < SPRITE - k && x >= k && x < SPRITE - k,
            Shape::Plus => (3..5).contains(&y) || (3..5).contains(&x),
            Shape::Ring => y == 0 || x == 0 || y == SPRITE - 1 || x == SPRITE - 1,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Sprite {
    layers: Vec<(Shape, Rgb)>,
    avatar: Option<AvatarSprite>,
}

#[derive(Clone, Copy, Debug)]
struct AvatarSprite {
    body: Rgb,
    facing: Orientation,
    marked: bool,
}

fn blend(a: Rgb, b: Rgb, t: f64) -> Rgb {
    let mix = |x: u8, y: u8| (x as f64 * (1.0 - t) + y as f64 * t).round() as u8;
    Rgb(mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn cell_sprite(state: &GridState, pos: Pos) -> Sprite {
    let w = &state.world;
    let idx = w.idx(pos);
    let mut s = Sprite::default();
    let ground = match w.terrain[idx] {
        Terrain::Wall => palette::WALL,
        Terrain::Water => match &state.rules {
            Mechanics::CleanUp(c) => blend(palette::WATER, palette::POLLUTION, c.river().pollution),
            _ => palette::WATER,
        },
        Terrain::Floor => match &state.rules {
            Mechanics::Team(t) => match t.ground_color(idx) {
                Some(team) => palette::TEAM_GROUND[team.index()],
                None if t.is_hill(idx) => palette::HILL,
                None => palette::FLOOR,
            },
            Mechanics::Chemistry(c) if c.is_site(idx) => palette::SITE,
            _ => palette::FLOOR,
        },
    };
    s.layers.push((Shape::Solid, ground));

    match w.items[idx] {
        Item::Empty => {}
        Item::Resource(k) => s
            .layers
            .push((Shape::Square(2), palette::RESOURCE[k as usize % 4])),
        Item::Apple => s.layers.push((Shape::Square(2), palette::APPLE)),
        Item::Berry { color, ripe } => {
            let c = color as usize % 3;
            let (shape, rgb) = if ripe {
                (Shape::Square(1), palette::BERRY_RIPE[c])
            } else {
                (Shape::Square(3), palette::BERRY_UNRIPE[c])
            };
            s.layers.push((shape, rgb));
        }
        Item::Claimable => {
            let (owner, active) = match &state.rules {
                Mechanics::Territory(t) => t
                    .wall(idx)
                    .map(|r| (r.owner, r.active))
                    .unwrap_or((None, false)),
                _ => (None, false),
            };
            let color = owner
                .map(|o| palette::AVATAR[w.avatars[o].color_tag as usize % 16])
                .unwrap_or(palette::CLAIMABLE);
            s.layers.push((Shape::Solid, color));
            if active {
                s.layers.push((Shape::Plus, palette::ACTIVE_MARK));
            }
        }
        Item::Molecule(sp) => s
            .layers
            .push((Shape::Square(1), palette::MOLECULE[sp as usize % 8])),
    }

    if let Mechanics::Team(t) = &state.rules {
        if let Some(team) = t.base_of(idx) {
            s.layers.push((Shape::Ring, palette::TEAM[team.index()]));
        }
        if let Some(team) = t.flag_at(idx) {
            s.layers.push((Shape::Plus, palette::TEAM[team.index()]));
        }
        if t.is_indicator(idx) {
            let color = match t.indicator() {
                crate::territory::Indicator::Red => palette::TEAM[0],
                crate::territory::Indicator::Blue => palette::TEAM[1],
                crate::territory::Indicator::Purple => palette::PURPLE,
                crate::territory::Indicator::Neutral => palette::NEUTRAL_INDICATOR,
            };
            s.layers.push((Shape::Square(2), color));
        }
    }

    if let Some(p) = w.avatar_at_idx(idx) {
        let a = &w.avatars[p];
        let body = match (&state.rules, a.team) {
            (_, Some(team)) => palette::TEAM[team.index()],
            (Mechanics::Allelopathic(_), None) => match a.color_tag {
                c @ 0..=2 => palette::BERRY_RIPE[c as usize],
                _ => palette::WHITE,
            },
            (_, None) => palette::AVATAR[a.color_tag as usize % 16],
        };
        s.avatar = Some(AvatarSprite {
            body,
            facing: a.orientation,
            marked: w.step < a.marked_until,
        });
    }
    s
}

/// Write one sprite into `buf` (row-major RGB24 with `stride` pixels per row).
/// `view` is the direction that is "up" in the destination image.
fn blit(buf: &mut [u8], stride: usize, x0: usize, y0: usize, sprite: &Sprite, view: Orientation) {
    for y in 0..SPRITE {
        for x in 0..SPRITE {
            let mut c = Rgb(0, 0, 0);
            for (shape, rgb) in &sprite.layers {
                if shape.covers(y, x) {
                    c = *rgb;
                }
            }
            if let Some(a) = sprite.avatar {
                if Shape::Square(1).covers(y, x) {
                    c = a.body;
                }
                // Facing bar on the side the avatar faces, relative to the view.
                let on_bar = match view.quarter_turns_to(a.facing) {
                    0 => y < 2 && (2..6).contains(&x),
                    1 => x >= SPRITE - 2 && (2..6).contains(&y),
                    2 => y >= SPRITE - 2 && (2..6).contains(&x),
                    _ => x < 2 && (2..6).contains(&y),
                };
                if on_bar {
                    c = palette::FACING;
                }
                if a.marked && (3..5).contains(&y) && (3..5).contains(&x) {
                    c = palette::MARK;
                }
            }
            let off = ((y0 + y) * stride + x0 + x) * 3;
            buf[off] = c.0;
            buf[off + 1] = c.1;
            buf[off + 2] = c.2;
        }
    }
}

/// What a player sees after a step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Observation {
    /// 88×88×3 RGB, row-major, top row farthest ahead.
    #[serde(skip)]
    pub pixels: Vec<u8>,
    pub reward: f64,
    /// The player's own inventory, in matrix substrates only.
    pub inventory: Option<Vec<f64>>,
}

impl Observation {
    pub const HEIGHT: usize = OBS_PIXELS;
    pub const WIDTH: usize = OBS_PIXELS;
    pub const CHANNELS: usize = 3;

    pub fn shape(&self) -> (usize, usize, usize) {
        (Self::HEIGHT, Self::WIDTH, Self::CHANNELS)
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let o = (row * OBS_PIXELS + col) * 3;
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }
}

/// World cell shown at window cell `(view_row, view_col)` for an avatar at
/// `origin` facing `facing`. Row `AHEAD` is the avatar's own row.
pub fn window_cell(origin: Pos, facing: Orientation, view_row: usize, view_col: usize) -> Pos {
    let ahead = AHEAD as i32 - view_row as i32;
    let right = view_col as i32 - SIDE as i32;
    let (fr, fc) = facing.delta();
    let (rr, rc) = facing.turn_right().delta();
    origin.offset(ahead * fr + right * rr, ahead * fc + right * rc)
}

/// Render the egocentric 11×11-sprite window of `player`.
///
/// Removed players get an all-black frame. Cells beyond the map edge are
/// black. No line-of-sight occlusion is applied.
pub fn observe(state: &GridState, player: usize) -> Result<Observation, GridError> {
    let avatar = state.avatar(player)?;
    let mut pixels = vec![0u8; OBS_BYTES];
    if !avatar.is_removed() {
        for vr in 0..WINDOW {
            for vc in 0..WINDOW {
                let pos = window_cell(avatar.pos, avatar.orientation, vr, vc);
                if !state.world.in_bounds(pos) {
                    continue;
                }
                let sprite = cell_sprite(state, pos);
                blit(
                    &mut pixels,
                    OBS_PIXELS,
                    vc * SPRITE,
                    vr * SPRITE,
                    &sprite,
                    avatar.orientation,
                );
            }
        }
    }
    let inventory = matches!(state.rules, Mechanics::Matrix(_))
        .then(|| avatar.inventory.counts().to_vec());
    Ok(Observation {
        pixels,
        reward: state.last_rewards[player],
        inventory,
    })
}

/// A full-map RGB24 frame, north up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

pub fn render_world(state: &GridState) -> RgbFrame {
    let w = &state.world;
    let width = w.width * SPRITE;
    let height = w.height * SPRITE;
    let mut data = vec![0u8; width * height * 3];
    for r in 0..w.height {
        for c in 0..w.width {
            let sprite = cell_sprite(state, Pos::new(r as i32, c as i32));
            blit(&mut data, width, c * SPRITE, r * SPRITE, &sprite, Orientation::North);
        }
    }
    RgbFrame {
        width,
        height,
        data,
    }
}
