//! A walker in a 3×3 room whose forward steps move it across tiles.
//!
//! The room is flat and the tiling is not, so walking a loop in the room does
//! not bring the walker back to the same tile.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tiling::{cross, EdgeIndex, TileAddress};

/// Room cell; row 0 is the south row, column 0 the west column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: u8,
    pub col: u8,
}

impl Cell {
    pub const CENTER: Cell = Cell { row: 1, col: 1 };

    pub fn new(row: u8, col: u8) -> Cell {
        assert!(row < 3 && col < 3, "cell ({row},{col}) outside the room");
        Cell { row, col }
    }

    pub fn all() -> impl Iterator<Item = Cell> {
        (0..3).flat_map(|row| (0..3).map(move |col| Cell { row, col }))
    }

    /// The neighbouring cell in compass direction `h`, if inside the room.
    pub fn ahead(self, h: PhysHeading) -> Option<Cell> {
        let (dr, dc) = match h {
            PhysHeading::N => (1, 0),
            PhysHeading::E => (0, 1),
            PhysHeading::S => (-1, 0),
            PhysHeading::W => (0, -1),
        };
        let r = self.row as i8 + dr;
        let c = self.col as i8 + dc;
        ((0..3).contains(&r) && (0..3).contains(&c)).then_some(Cell { row: r as u8, col: c as u8 })
    }

    /// Quarter turn clockwise about the room centre.
    fn rotated_cw(self) -> Cell {
        Cell { row: 2 - self.col, col: self.row }
    }
}

/// Room compass heading, numbered clockwise from north.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhysHeading {
    N,
    E,
    S,
    W,
}

impl PhysHeading {
    pub const ALL: [PhysHeading; 4] = [PhysHeading::N, PhysHeading::E, PhysHeading::S, PhysHeading::W];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> PhysHeading {
        PhysHeading::ALL[(i % 4) as usize]
    }

    pub fn turned_left(self) -> PhysHeading {
        PhysHeading::from_index(self.index() + 3)
    }

    pub fn turned_right(self) -> PhysHeading {
        PhysHeading::from_index(self.index() + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WalkerState {
    pub tile: TileAddress,
    /// Edge of `tile` the walker faces.
    pub facing: EdgeIndex,
    pub cell: Cell,
    pub heading: PhysHeading,
}

impl WalkerState {
    pub fn new(tile: TileAddress, facing: EdgeIndex, cell: Cell, heading: PhysHeading) -> WalkerState {
        WalkerState { tile, facing: facing % 4, cell, heading }
    }

    /// Origin, room centre, facing north in both worlds.
    pub fn start() -> WalkerState {
        WalkerState::new(TileAddress::Origin, 0, Cell::CENTER, PhysHeading::N)
    }

    /// Tile edge that lies in room direction `d`.
    pub fn edge_towards(&self, d: PhysHeading) -> EdgeIndex {
        (self.facing + 4 + self.heading.index() - d.index()) % 4
    }
}

impl fmt::Display for WalkerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} facing {} at ({},{}) heading {:?}",
            self.tile, self.facing, self.cell.row, self.cell.col, self.heading
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    TurnLeft,
    TurnRight,
    StepForward,
}

impl Move {
    pub const ALL: [Move; 3] = [Move::TurnLeft, Move::TurnRight, Move::StepForward];

    pub fn letter(self) -> char {
        match self {
            Move::TurnLeft => 'L',
            Move::TurnRight => 'R',
            Move::StepForward => 'F',
        }
    }

    pub fn from_letter(c: char) -> Option<Move> {
        match c.to_ascii_uppercase() {
            'L' => Some(Move::TurnLeft),
            'R' => Some(Move::TurnRight),
            'F' => Some(Move::StepForward),
            _ => None,
        }
    }
}

impl Serialize for Move {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_char(self.letter())
    }
}

impl<'de> Deserialize<'de> for Move {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut chars = s.chars();
        match (chars.next().and_then(Move::from_letter), chars.next()) {
            (Some(m), None) => Ok(m),
            _ => Err(serde::de::Error::custom(format!("bad move {s:?}, expected L, R or F"))),
        }
    }
}

pub fn moves_to_string(moves: &[Move]) -> String {
    moves.iter().map(|m| m.letter()).collect()
}

pub fn parse_moves(s: &str) -> Option<Vec<Move>> {
    s.chars().filter(|c| !c.is_whitespace()).map(Move::from_letter).collect()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WalkerError {
    #[error("a hedge blocks the way: stepping {heading:?} from cell ({row},{col}) would leave the room")]
    OutOfBounds { row: u8, col: u8, heading: PhysHeading },
}

pub fn apply_move(s: &WalkerState, m: Move) -> Result<WalkerState, WalkerError> {
    match m {
        Move::TurnLeft => Ok(WalkerState {
            facing: (s.facing + 1) % 4,
            heading: s.heading.turned_left(),
            ..s.clone()
        }),
        Move::TurnRight => Ok(WalkerState {
            facing: (s.facing + 3) % 4,
            heading: s.heading.turned_right(),
            ..s.clone()
        }),
        Move::StepForward => {
            let cell = s.cell.ahead(s.heading).ok_or(WalkerError::OutOfBounds {
                row: s.cell.row,
                col: s.cell.col,
                heading: s.heading,
            })?;
            let (tile, entry) = cross(&s.tile, s.facing);
            Ok(WalkerState { tile, facing: (entry + 2) % 4, cell, heading: s.heading })
        }
    }
}

pub fn apply_moves(s: &WalkerState, moves: &[Move]) -> Result<WalkerState, WalkerError> {
    moves.iter().try_fold(s.clone(), |st, &m| apply_move(&st, m))
}

pub fn legal_moves(s: &WalkerState) -> Vec<Move> {
    let mut out = vec![Move::TurnLeft, Move::TurnRight];
    if s.cell.ahead(s.heading).is_some() {
        out.push(Move::StepForward);
    }
    out
}

/// Tiles under each room cell, developed from the walker's cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Accessible {
    pub tiles: BTreeMap<Cell, TileAddress>,
    /// Cells where developing columns first lands on a different tile.
    pub path_dependent: BTreeSet<Cell>,
}

fn develop_path(s: &WalkerState, dirs: &[PhysHeading]) -> TileAddress {
    let mut tile = s.tile.clone();
    let mut facing = s.facing;
    for &d in dirs {
        let e = (facing + 4 + s.heading.index() - d.index()) % 4;
        let (next, k) = cross(&tile, e);
        tile = next;
        facing = (k + 2 + 4 + d.index() - s.heading.index()) % 4;
    }
    tile
}

/// Develops the room onto the tiling: rows first, then columns.
pub fn accessible_tiles(s: &WalkerState) -> Accessible {
    let mut tiles = BTreeMap::new();
    let mut path_dependent = BTreeSet::new();
    for cell in Cell::all() {
        let dr = cell.row as i8 - s.cell.row as i8;
        let dc = cell.col as i8 - s.cell.col as i8;
        let vert = if dr >= 0 { PhysHeading::N } else { PhysHeading::S };
        let horiz = if dc >= 0 { PhysHeading::E } else { PhysHeading::W };
        let mut rows_first = vec![vert; dr.unsigned_abs() as usize];
        rows_first.extend(std::iter::repeat_n(horiz, dc.unsigned_abs() as usize));
        let mut cols_first = vec![horiz; dc.unsigned_abs() as usize];
        cols_first.extend(std::iter::repeat_n(vert, dr.unsigned_abs() as usize));
        let t = develop_path(s, &rows_first);
        if dr != 0 && dc != 0 && develop_path(s, &cols_first) != t {
            path_dependent.insert(cell);
        }
        tiles.insert(cell, t);
    }
    Accessible { tiles, path_dependent }
}

/// All 144 walker states on one tile.
pub fn states_on(tile: &TileAddress) -> Vec<WalkerState> {
    let mut out = Vec::with_capacity(144);
    for cell in Cell::all() {
        for heading in PhysHeading::ALL {
            for facing in 0..4 {
                out.push(WalkerState::new(tile.clone(), facing, cell, heading));
            }
        }
    }
    out
}

/// Orbit of a state under rotating the room about its centre and turning in
/// place. Neither changes the cost of reaching any tile.
pub fn symmetry_orbit(s: &WalkerState) -> Vec<WalkerState> {
    let mut out = Vec::with_capacity(16);
    let mut room = s.clone();
    for _ in 0..4 {
        let mut turned = room.clone();
        for _ in 0..4 {
            out.push(turned.clone());
            turned = apply_move(&turned, Move::TurnLeft).expect("turns are always legal");
        }
        room = WalkerState {
            cell: room.cell.rotated_cw(),
            heading: room.heading.turned_right(),
            ..room
        };
    }
    out
}

fn orbit_key(s: &WalkerState) -> (Cell, PhysHeading, EdgeIndex) {
    symmetry_orbit(s)
        .into_iter()
        .map(|t| (t.cell, t.heading, t.facing))
        .min()
        .expect("orbit is nonempty")
}

fn class_representatives() -> &'static Vec<(Cell, PhysHeading, EdgeIndex)> {
    static REPS: OnceLock<Vec<(Cell, PhysHeading, EdgeIndex)>> = OnceLock::new();
    REPS.get_or_init(|| {
        let reps: BTreeSet<_> = states_on(&TileAddress::Origin).iter().map(orbit_key).collect();
        reps.into_iter().collect()
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("walker is on {actual}, not on the anchor tile {anchor}")]
pub struct AnchorMismatch {
    pub anchor: TileAddress,
    pub actual: TileAddress,
}

/// Class of `s` among the nine orbits of the 144 states on `anchor`.
pub fn symmetry_class(s: &WalkerState, anchor: &TileAddress) -> Result<u8, AnchorMismatch> {
    if &s.tile != anchor {
        return Err(AnchorMismatch { anchor: anchor.clone(), actual: s.tile.clone() });
    }
    let key = orbit_key(s);
    let idx = class_representatives().binary_search(&key).expect("every state has a representative");
    Ok(idx as u8)
}

/// The canonical member of `s`'s class.
pub fn class_representative(s: &WalkerState) -> WalkerState {
    let (cell, heading, facing) = orbit_key(s);
    WalkerState { tile: s.tile.clone(), facing, cell, heading }
}
