//! Canonical addresses for the {4,5} square tiling.
//!
//! A tile is named by the path that reaches it from the origin along a
//! breadth-first spanning tree: a branch symbol for the first edge crossed,
//! then relative turns. The tree is geodesic, so the address length is the
//! graph distance from the origin.
//!
//! Edge indices run counterclockwise. At the origin edge `k` is the branch
//! `N, W, S, E` in that order. Every other tile has its parent at edge 0 and
//! the children `R, F, L` at edges 1, 2, 3.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Index of one of the four edges of a tile, counterclockwise.
pub type EdgeIndex = u8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    N,
    W,
    S,
    E,
}

impl Branch {
    pub const ALL: [Branch; 4] = [Branch::N, Branch::W, Branch::S, Branch::E];

    pub fn edge(self) -> EdgeIndex {
        self as EdgeIndex
    }

    pub fn from_edge(e: EdgeIndex) -> Branch {
        Branch::ALL[(e % 4) as usize]
    }

    /// Clockwise neighbour: N -> E -> S -> W -> N.
    pub fn right(self) -> Branch {
        Branch::from_edge(self.edge() + 3)
    }

    pub fn left(self) -> Branch {
        Branch::from_edge(self.edge() + 1)
    }

    pub fn letter(self) -> char {
        match self {
            Branch::N => 'N',
            Branch::W => 'W',
            Branch::S => 'S',
            Branch::E => 'E',
        }
    }

    fn from_letter(c: char) -> Option<Branch> {
        match c {
            'N' => Some(Branch::N),
            'W' => Some(Branch::W),
            'S' => Some(Branch::S),
            'E' => Some(Branch::E),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    R = 1,
    F = 2,
    L = 3,
}

impl Step {
    pub const ALL: [Step; 3] = [Step::R, Step::F, Step::L];

    /// Edge index of this child relative to the parent edge.
    pub fn edge(self) -> EdgeIndex {
        self as EdgeIndex
    }

    pub fn from_edge(e: EdgeIndex) -> Option<Step> {
        match e % 4 {
            1 => Some(Step::R),
            2 => Some(Step::F),
            3 => Some(Step::L),
            _ => None,
        }
    }

    /// `r(L) = F`, `r(F) = R`; `r(R)` would point back at the parent.
    pub fn right(self) -> Option<Step> {
        Step::from_edge(self.edge() - 1)
    }

    pub fn left(self) -> Option<Step> {
        Step::from_edge(self.edge() + 1)
    }

    pub fn letter(self) -> char {
        match self {
            Step::R => 'r',
            Step::F => 'f',
            Step::L => 'l',
        }
    }

    fn from_letter(c: char) -> Option<Step> {
        match c.to_ascii_lowercase() {
            'r' => Some(Step::R),
            'f' => Some(Step::F),
            'l' => Some(Step::L),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TileAddress {
    Origin,
    Path { branch: Branch, steps: Vec<Step> },
}

// Tree-walk automaton. A step is valid iff it has a successor state.
// Every branch root starts in state 0. Columns are R, F, L.
const DEAD: u8 = u8::MAX;
const NEXT: [[u8; 3]; 6] = [
    [1, 0, 2],
    [DEAD, 3, 2],
    [1, 4, DEAD],
    [5, 0, 2],
    [1, 0, DEAD],
    [DEAD, 1, 2],
];

fn advance(state: u8, step: Step) -> u8 {
    if state == DEAD {
        return DEAD;
    }
    NEXT[state as usize][step.edge() as usize - 1]
}

fn advance_edge(state: u8, e: EdgeIndex) -> u8 {
    match Step::from_edge(e) {
        Some(s) => advance(state, s),
        None => DEAD,
    }
}

fn run(steps: &[Step]) -> u8 {
    steps.iter().fold(0, |st, &s| advance(st, s))
}

/// Whether appending `next` to the (valid) sequence `steps` stays inside the
/// spanning tree.
pub fn is_valid_step(steps: &[Step], next: Step) -> bool {
    advance(run(steps), next) != DEAD
}

pub fn is_valid_sequence(steps: &[Step]) -> bool {
    run(steps) != DEAD
}

impl TileAddress {
    pub fn path(branch: Branch, steps: Vec<Step>) -> TileAddress {
        TileAddress::Path { branch, steps }
    }

    pub fn is_origin(&self) -> bool {
        matches!(self, TileAddress::Origin)
    }

    /// Graph distance from the origin.
    pub fn depth(&self) -> usize {
        match self {
            TileAddress::Origin => 0,
            TileAddress::Path { steps, .. } => steps.len() + 1,
        }
    }

    pub fn is_canonical(&self) -> bool {
        match self {
            TileAddress::Origin => true,
            TileAddress::Path { steps, .. } => is_valid_sequence(steps),
        }
    }

    pub fn parent(&self) -> Option<TileAddress> {
        match self {
            TileAddress::Origin => None,
            TileAddress::Path { steps, .. } if steps.is_empty() => Some(TileAddress::Origin),
            TileAddress::Path { branch, steps } => Some(TileAddress::Path {
                branch: *branch,
                steps: steps[..steps.len() - 1].to_vec(),
            }),
        }
    }

    /// The edge of the parent through which this tile is reached.
    fn edge_in_parent(&self) -> Option<EdgeIndex> {
        match self {
            TileAddress::Origin => None,
            TileAddress::Path { branch, steps } => {
                Some(steps.last().map(|s| s.edge()).unwrap_or(branch.edge()))
            }
        }
    }

    /// Branch edge followed by the step edges.
    fn symbols(&self) -> Vec<EdgeIndex> {
        match self {
            TileAddress::Origin => Vec::new(),
            TileAddress::Path { branch, steps } => std::iter::once(branch.edge())
                .chain(steps.iter().map(|s| s.edge()))
                .collect(),
        }
    }

    fn from_symbols(sym: &[EdgeIndex]) -> TileAddress {
        match sym.split_first() {
            None => TileAddress::Origin,
            Some((&b, rest)) => TileAddress::Path {
                branch: Branch::from_edge(b),
                steps: rest.iter().map(|&e| Step::from_edge(e).expect("step edge")).collect(),
            },
        }
    }
}

impl fmt::Display for TileAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TileAddress::Origin => f.write_str("O"),
            TileAddress::Path { branch, steps } => {
                let mut s = String::with_capacity(steps.len() + 1);
                s.push(branch.letter());
                s.extend(steps.iter().map(|st| st.letter()));
                f.write_str(&s)
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("bad tile address {0:?}: expected \"O\" or a branch letter N/E/S/W followed by f/l/r steps")]
pub struct AddressParseError(pub String);

/// Parses the text form and normalizes it, so `"Nrr"` reads as `El`.
impl FromStr for TileAddress {
    type Err = AddressParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "O" {
            return Ok(TileAddress::Origin);
        }
        let mut chars = s.chars();
        let branch = chars
            .next()
            .and_then(Branch::from_letter)
            .ok_or_else(|| AddressParseError(s.to_string()))?;
        let steps = chars
            .map(Step::from_letter)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| AddressParseError(s.to_string()))?;
        Ok(normalize(branch, &steps))
    }
}

impl Serialize for TileAddress {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TileAddress {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn text_key(a: &TileAddress) -> (u8, &[Step]) {
    match a {
        TileAddress::Origin => (b'O', &[]),
        TileAddress::Path { branch, steps } => (branch.letter() as u8, steps.as_slice()),
    }
}

/// Byte order of the text form.
impl Ord for TileAddress {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a0, a) = text_key(self);
        let (b0, b) = text_key(other);
        a0.cmp(&b0).then_with(|| {
            a.iter()
                .map(|s| s.letter())
                .cmp(b.iter().map(|s| s.letter()))
        })
    }
}

impl PartialOrd for TileAddress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Turns on the other side of a chain of pentagons (the dual faces around
/// tiling vertices), given the turns taken along one side of it.
///
/// `turns` are the relative turns at the interior tiles of the walked side.
/// With `left` the chain lies to the left of the walked side.
fn ladder_other_side(turns: &[EdgeIndex], left: bool) -> Option<Vec<EdgeIndex>> {
    // faces touched on the chain side at each interior tile
    let touched: Vec<usize> = turns
        .iter()
        .map(|&t| if left { 4 - t as usize } else { t as usize })
        .collect();
    let faces = 1 + touched.iter().map(|c| c - 1).sum::<usize>();
    let mut on_side = vec![0usize; faces];
    on_side[0] += 1;
    on_side[faces - 1] += 1;
    let mut first = 0;
    for &c in &touched {
        for slot in &mut on_side[first..first + c] {
            *slot += 1;
        }
        first += c - 1;
    }
    let mut other: Vec<usize> = Vec::new();
    for (j, &n) in on_side.iter().enumerate() {
        if n > 5 || (faces > 1 && n > 4) {
            return None;
        }
        let count = 5 - n;
        if j == 0 {
            other.extend(std::iter::repeat_n(1, count));
        } else {
            *other.last_mut()? += 1;
            other.extend(std::iter::repeat_n(1, count - 1));
        }
    }
    other
        .into_iter()
        .map(|c| match (c, left) {
            (1..=3, true) => Some(c as EdgeIndex),
            (1..=3, false) => Some(4 - c as EdgeIndex),
            _ => None,
        })
        .collect()
}

/// Cross edge `edge` of the canonical tile `addr`.
///
/// Returns the canonical address of the tile on the other side together with
/// the index of the shared edge in that tile's own frame.
pub fn cross(addr: &TileAddress, edge: EdgeIndex) -> (TileAddress, EdgeIndex) {
    let edge = edge % 4;
    let (branch, steps) = match addr {
        TileAddress::Origin => return (TileAddress::path(Branch::from_edge(edge), Vec::new()), 0),
        TileAddress::Path { branch, steps } => (*branch, steps),
    };
    if edge == 0 {
        let back = addr.edge_in_parent().expect("non-origin");
        return (addr.parent().expect("non-origin"), back);
    }
    let mut states = Vec::with_capacity(steps.len() + 1);
    states.push(0u8);
    for &s in steps {
        let st = advance(*states.last().unwrap(), s);
        states.push(st);
    }
    if advance_edge(*states.last().unwrap(), edge) != DEAD {
        let mut child = steps.clone();
        child.push(Step::from_edge(edge).unwrap());
        return (TileAddress::path(branch, child), 0);
    }

    // Not a tree edge: the walked path and the canonical path bound a chain
    // of pentagons that starts at some earlier tile. Try each start from the
    // nearest outwards; the canonical candidate is unique.
    let mut full = Vec::with_capacity(steps.len() + 2);
    full.push(branch.edge());
    full.extend(steps.iter().map(|s| s.edge()));
    full.push(edge);
    for j in (0..full.len()).rev() {
        let x = full[j];
        let turns = &full[j + 1..];
        for left in [true, false] {
            let rx = if left { (x + 1) % 4 } else { (x + 3) % 4 };
            if j > 0 && rx == 0 {
                continue;
            }
            let Some(other) = ladder_other_side(turns, left) else {
                continue;
            };
            let start = if j == 0 { 0 } else { advance_edge(states[j - 1], rx) };
            let end = other.iter().fold(start, |st, &e| advance_edge(st, e));
            if end == DEAD {
                continue;
            }
            let mut sym = full[..j].to_vec();
            sym.push(rx);
            sym.extend(other);
            let entry = if left { 1 } else { 3 };
            return (TileAddress::from_symbols(&sym), entry);
        }
    }
    unreachable!("no canonical form for {addr} across edge {edge}")
}

/// The four neighbours in counterclockwise edge order.
pub fn neighbors(addr: &TileAddress) -> [TileAddress; 4] {
    std::array::from_fn(|e| cross(addr, e as EdgeIndex).0)
}

pub fn parent(addr: &TileAddress) -> Option<TileAddress> {
    addr.parent()
}

/// Canonical address of the tile reached by walking `branch` and then the
/// relative `steps`, each step turning from the edge just entered.
pub fn normalize(branch: Branch, steps: &[Step]) -> TileAddress {
    walk_relative(branch.edge(), steps.iter().map(|s| s.edge()))
}

fn walk_relative(first: EdgeIndex, turns: impl IntoIterator<Item = EdgeIndex>) -> TileAddress {
    let (mut tile, mut entry) = cross(&TileAddress::Origin, first);
    for t in turns {
        let (next, e) = cross(&tile, entry + t);
        tile = next;
        entry = e;
    }
    tile
}

/// Address of `b` as seen from `a`, after the symmetry that carries `a` to
/// the origin with its edges onto the origin's edges of the same index.
pub fn relative_address(a: &TileAddress, b: &TileAddress) -> TileAddress {
    let sa = a.symbols();
    let sb = b.symbols();
    let common = sa.iter().zip(&sb).take_while(|(x, y)| x == y).count();
    if common == sa.len() && common == sb.len() {
        return TileAddress::Origin;
    }
    // Absolute exit edges along the tree path a -> lca -> b, each paired with
    // the edge the path entered by.
    let mut exits: Vec<(EdgeIndex, EdgeIndex)> = Vec::new();
    let mut entry: Option<EdgeIndex> = None;
    for depth in (common + 1..=sa.len()).rev() {
        // moving up: the parent is always edge 0
        exits.push((entry.unwrap_or(0), 0));
        entry = Some(sa[depth - 1]);
    }
    for &sym in &sb[common..] {
        exits.push((entry.unwrap_or(0), sym));
        entry = Some(0);
    }
    let first = exits[0].1;
    let turns: Vec<EdgeIndex> = exits[1..].iter().map(|&(en, ex)| (ex + 4 - en) % 4).collect();
    walk_relative(first, turns)
}

const MEMO_CAP: usize = 1 << 16;

fn memo() -> &'static Mutex<HashMap<(TileAddress, TileAddress), u32>> {
    static MEMO: OnceLock<Mutex<HashMap<(TileAddress, TileAddress), u32>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Exact graph distance between two tiles.
pub fn tile_distance(a: &TileAddress, b: &TileAddress) -> u32 {
    if a.is_origin() {
        return b.depth() as u32;
    }
    if b.is_origin() {
        return a.depth() as u32;
    }
    if a == b {
        return 0;
    }
    let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
    if let Some(&d) = memo().lock().unwrap().get(&key) {
        return d;
    }
    let d = relative_address(a, b).depth() as u32;
    let mut m = memo().lock().unwrap();
    if m.len() >= MEMO_CAP {
        m.clear();
    }
    m.insert(key, d);
    d
}

/// All tiles within `radius` of `center`, sorted by distance and then by
/// address text.
pub fn tiles_within(center: &TileAddress, radius: u32) -> Vec<TileAddress> {
    tiles_within_with_distance(center, radius)
        .into_iter()
        .map(|(t, _)| t)
        .collect()
}

pub fn tiles_within_with_distance(center: &TileAddress, radius: u32) -> Vec<(TileAddress, u32)> {
    let mut seen: HashSet<TileAddress> = HashSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(center.clone());
    queue.push_back((center.clone(), 0u32));
    while let Some((t, d)) = queue.pop_front() {
        if d < radius {
            for n in neighbors(&t) {
                if seen.insert(n.clone()) {
                    queue.push_back((n, d + 1));
                }
            }
        }
        out.push((t, d));
    }
    out.sort_by(|(a, da), (b, db)| da.cmp(db).then_with(|| a.cmp(b)));
    out
}
