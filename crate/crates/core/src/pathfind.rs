//! Shortest move sequences for the walker.
//!
//! The search graph is the walker-state graph, generated on demand. Forward
//! steps cost one, turns are free by default. Tile distance is an admissible
//! and consistent heuristic because a step moves the walker by one tile.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tiling::{cross, tile_distance, tiles_within, EdgeIndex, TileAddress};
use crate::walker::{class_representative, Move, WalkerState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub step_cost: u32,
    pub turn_cost: u32,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { step_cost: 1, turn_cost: 0 }
    }
}

impl CostModel {
    fn of(&self, m: Move) -> u32 {
        match m {
            Move::StepForward => self.step_cost,
            _ => self.turn_cost,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_expansions: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    #[serde(with = "move_string")]
    pub moves: Vec<Move>,
    pub forward_steps: u32,
    /// Whether the path ends on the goal.
    pub complete: bool,
}

impl Path {
    fn from_moves(moves: Vec<Move>, complete: bool) -> Path {
        let forward_steps = moves.iter().filter(|&&m| m == Move::StepForward).count() as u32;
        Path { moves, forward_steps, complete }
    }

    pub fn empty() -> Path {
        Path { moves: Vec::new(), forward_steps: 0, complete: true }
    }
}

mod move_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::walker::{moves_to_string, parse_moves, Move};

    pub fn serialize<S: Serializer>(moves: &[Move], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&moves_to_string(moves))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Move>, D::Error> {
        let s = String::deserialize(d)?;
        parse_moves(&s).ok_or_else(|| serde::de::Error::custom(format!("bad move string {s:?}")))
    }
}

pub fn heuristic(s: &WalkerState, goal: &TileAddress) -> u32 {
    tile_distance(&s.tile, goal)
}

/// Per-search caches for crossings and heuristic values.
#[derive(Default)]
pub(crate) struct Lazy {
    crossings: HashMap<(TileAddress, EdgeIndex), (TileAddress, EdgeIndex)>,
    distances: HashMap<(TileAddress, TileAddress), u32>,
}

impl Lazy {
    pub(crate) fn distance(&mut self, t: &TileAddress, goal: &TileAddress) -> u32 {
        if let Some(&d) = self.distances.get(&(t.clone(), goal.clone())) {
            return d;
        }
        let d = tile_distance(t, goal);
        self.distances.insert((t.clone(), goal.clone()), d);
        d
    }

    pub(crate) fn successors(&mut self, s: &WalkerState) -> Vec<(Move, WalkerState)> {
        let mut out = Vec::with_capacity(3);
        out.push((
            Move::TurnLeft,
            WalkerState { facing: (s.facing + 1) % 4, heading: s.heading.turned_left(), ..s.clone() },
        ));
        out.push((
            Move::TurnRight,
            WalkerState { facing: (s.facing + 3) % 4, heading: s.heading.turned_right(), ..s.clone() },
        ));
        if let Some(cell) = s.cell.ahead(s.heading) {
            let key = (s.tile.clone(), s.facing);
            let (tile, entry) = match self.crossings.get(&key) {
                Some(v) => v.clone(),
                None => {
                    let v = cross(&s.tile, s.facing);
                    self.crossings.insert(key, v.clone());
                    v
                }
            };
            out.push((Move::StepForward, WalkerState { tile, facing: (entry + 2) % 4, cell, heading: s.heading }));
        }
        out
    }
}

struct Node {
    parent: usize,
    mv: Option<Move>,
}

fn trace(nodes: &[Node], mut i: usize) -> Vec<Move> {
    let mut moves = Vec::new();
    while let Some(m) = nodes[i].mv {
        moves.push(m);
        i = nodes[i].parent;
    }
    moves.reverse();
    moves
}

/// Counters from one search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub expansions: usize,
    pub generated: usize,
}

struct Outcome {
    path: Path,
    stats: SearchStats,
}

// Open-list key: lowest f, then highest g, then state order.
type OpenKey = Reverse<(u32, Reverse<u32>, WalkerState, usize)>;

fn search(start: &WalkerState, goal: &TileAddress, cost: CostModel, limit: Option<usize>) -> Outcome {
    let mut lazy = Lazy::default();
    let mut nodes = vec![Node { parent: 0, mv: None }];
    let mut best_g: HashMap<WalkerState, u32> = HashMap::new();
    let mut closed: HashMap<WalkerState, ()> = HashMap::new();
    let mut open: BinaryHeap<OpenKey> = BinaryHeap::new();
    let h0 = lazy.distance(&start.tile, goal) * cost.step_cost;
    best_g.insert(start.clone(), 0);
    open.push(Reverse((h0, Reverse(0), start.clone(), 0)));
    let mut stats = SearchStats { expansions: 0, generated: 1 };
    // best-so-far by (h, g, state)
    let mut best = (h0, 0u32, start.clone(), 0usize);

    while let Some(Reverse((_, Reverse(g), state, idx))) = open.pop() {
        if closed.contains_key(&state) {
            continue;
        }
        if &state.tile == goal {
            return Outcome { path: Path::from_moves(trace(&nodes, idx), true), stats };
        }
        if limit.is_some_and(|l| stats.expansions >= l) {
            break;
        }
        closed.insert(state.clone(), ());
        stats.expansions += 1;
        for (m, next) in lazy.successors(&state) {
            if closed.contains_key(&next) {
                continue;
            }
            let ng = g + cost.of(m);
            if best_g.get(&next).is_some_and(|&old| old <= ng) {
                continue;
            }
            best_g.insert(next.clone(), ng);
            let h = lazy.distance(&next.tile, goal) * cost.step_cost;
            nodes.push(Node { parent: idx, mv: Some(m) });
            let ni = nodes.len() - 1;
            stats.generated += 1;
            let cand = (h, ng, next.clone(), ni);
            if (cand.0, cand.1, &cand.2) < (best.0, best.1, &best.2) {
                best = cand;
            }
            open.push(Reverse((ng + h, Reverse(ng), next, ni)));
        }
    }
    Outcome { path: Path::from_moves(trace(&nodes, best.3), false), stats }
}

/// Optimal path to any state on `goal`.
pub fn astar(start: &WalkerState, goal: &TileAddress, cost: CostModel) -> Path {
    search(start, goal, cost, None).path
}

pub fn astar_with_stats(start: &WalkerState, goal: &TileAddress, cost: CostModel) -> (Path, SearchStats) {
    let o = search(start, goal, cost, None);
    (o.path, o.stats)
}

/// A* that stops after `budget` expansions and then returns the path to the
/// generated state closest to the goal by the heuristic.
pub fn astar_anytime(start: &WalkerState, goal: &TileAddress, budget: SearchBudget) -> Path {
    search(start, goal, CostModel::default(), Some(budget.max_expansions.max(1))).path
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathfindError {
    #[error("no objectives given")]
    NoObjectives,
    #[error("{0} objectives exceed the limit of {MAX_TOUR_OBJECTIVES}")]
    TooManyObjectives(usize),
    #[error("final objective {0} is not among the objectives")]
    FinalNotObjective(TileAddress),
}

/// Distance from every tile near `center` to its closest objective.
pub fn hotcold_field(
    center: &TileAddress,
    radius: u32,
    objectives: &[TileAddress],
) -> Result<BTreeMap<TileAddress, u32>, PathfindError> {
    if objectives.is_empty() {
        return Err(PathfindError::NoObjectives);
    }
    Ok(tiles_within(center, radius)
        .into_iter()
        .map(|t| {
            let d = objectives.iter().map(|o| tile_distance(&t, o)).min().expect("nonempty");
            (t, d)
        })
        .collect())
}

pub const MAX_TOUR_OBJECTIVES: usize = 6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TourOptions {
    /// Close states per symmetry class instead of per state. Members of a
    /// class have equal costs to every tile.
    pub symmetry_reduction: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leg {
    pub objective: TileAddress,
    pub path: Path,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tour {
    pub path: Path,
    pub legs: Vec<Leg>,
}

struct TourProblem {
    objs: Vec<TileAddress>,
    last: Option<usize>,
    full: u32,
}

impl TourProblem {
    /// Mask after standing on `tile` with `mask` already visited.
    fn visit(&self, tile: &TileAddress, mut mask: u32) -> u32 {
        for (i, o) in self.objs.iter().enumerate() {
            if o != tile {
                continue;
            }
            if self.last == Some(i) && (mask | (1 << i)) != self.full {
                continue;
            }
            mask |= 1 << i;
        }
        mask
    }

    fn h(&self, lazy: &mut Lazy, tile: &TileAddress, mask: u32) -> u32 {
        let pending_last = self.last.filter(|&l| mask & (1 << l) == 0);
        let mut h = pending_last.map_or(0, |l| lazy.distance(tile, &self.objs[l]));
        for (i, o) in self.objs.iter().enumerate() {
            if mask & (1 << i) != 0 || Some(i) == pending_last {
                continue;
            }
            let tail = pending_last.map_or(0, |l| lazy.distance(o, &self.objs[l]));
            h = h.max(lazy.distance(tile, o) + tail);
        }
        h
    }
}

struct TourNode {
    mask: u32,
    parent: usize,
    moves: Vec<Move>,
}

/// Forward steps available after turning in place; turns are free, so every
/// state sharing a turn orbit with `s` expands to the same set.
fn turn_closure_steps(lazy: &mut Lazy, s: &WalkerState) -> Vec<(Vec<Move>, WalkerState)> {
    const TURNS: [&[Move]; 4] = [&[], &[Move::TurnLeft], &[Move::TurnLeft, Move::TurnLeft], &[Move::TurnRight]];
    TURNS
        .iter()
        .filter_map(|turns| {
            let mut t = s.clone();
            for &m in turns.iter() {
                t = lazy.successors(&t).into_iter().find(|(x, _)| *x == m).expect("turns are legal").1;
            }
            lazy.successors(&t).into_iter().find(|(x, _)| *x == Move::StepForward).map(|(_, n)| {
                let mut ms = turns.to_vec();
                ms.push(Move::StepForward);
                (ms, n)
            })
        })
        .collect()
}

/// Shortest path that visits every objective, with `last` (if any) visited
/// after all the others. Exact search over walker states paired with the set
/// of objectives visited so far.
pub fn plan_tour(
    start: &WalkerState,
    objectives: &[TileAddress],
    last: Option<&TileAddress>,
    options: TourOptions,
) -> Result<Tour, PathfindError> {
    plan_tour_with_stats(start, objectives, last, options).map(|(t, _)| t)
}

pub fn plan_tour_with_stats(
    start: &WalkerState,
    objectives: &[TileAddress],
    last: Option<&TileAddress>,
    options: TourOptions,
) -> Result<(Tour, SearchStats), PathfindError> {
    let mut objs: Vec<TileAddress> = Vec::new();
    for o in objectives {
        if !objs.contains(o) {
            objs.push(o.clone());
        }
    }
    if objs.is_empty() {
        return Err(PathfindError::NoObjectives);
    }
    if objs.len() > MAX_TOUR_OBJECTIVES {
        return Err(PathfindError::TooManyObjectives(objs.len()));
    }
    let last = match last {
        Some(f) => Some(objs.iter().position(|o| o == f).ok_or_else(|| PathfindError::FinalNotObjective(f.clone()))?),
        None => None,
    };
    let full = (1u32 << objs.len()) - 1;
    let problem = TourProblem { objs, last, full };
    let key = |s: &WalkerState| if options.symmetry_reduction { class_representative(s) } else { s.clone() };

    let mut lazy = Lazy::default();
    let m0 = problem.visit(&start.tile, 0);
    let mut nodes = vec![TourNode { mask: m0, parent: 0, moves: Vec::new() }];
    let mut best_g: HashMap<(WalkerState, u32), u32> = HashMap::new();
    let mut closed: HashMap<(WalkerState, u32), ()> = HashMap::new();
    let mut open: BinaryHeap<OpenKey> = BinaryHeap::new();
    let mut stats = SearchStats { expansions: 0, generated: 1 };
    best_g.insert((key(start), m0), 0);
    open.push(Reverse((problem.h(&mut lazy, &start.tile, m0), Reverse(0), start.clone(), 0)));
    let goal_idx = loop {
        let Reverse((_, Reverse(g), state, idx)) = open.pop().expect("the tiling is connected");
        let mask = nodes[idx].mask;
        if mask == full {
            break idx;
        }
        let k = (key(&state), mask);
        if closed.contains_key(&k) {
            continue;
        }
        closed.insert(k, ());
        stats.expansions += 1;
        let succ: Vec<(Vec<Move>, WalkerState)> = if options.symmetry_reduction {
            turn_closure_steps(&mut lazy, &state)
        } else {
            lazy.successors(&state).into_iter().map(|(m, n)| (vec![m], n)).collect()
        };
        for (ms, next) in succ {
            let stepped = ms.last() == Some(&Move::StepForward);
            let nmask = if stepped { problem.visit(&next.tile, mask) } else { mask };
            let nk = (key(&next), nmask);
            if closed.contains_key(&nk) {
                continue;
            }
            let ng = g + u32::from(stepped);
            if best_g.get(&nk).is_some_and(|&old| old <= ng) {
                continue;
            }
            let h = problem.h(&mut lazy, &next.tile, nmask);
            best_g.insert(nk, ng);
            nodes.push(TourNode { mask: nmask, parent: idx, moves: ms });
            stats.generated += 1;
            open.push(Reverse((ng + h, Reverse(ng), next, nodes.len() - 1)));
        }
    };

    let mut steps = Vec::new();
    let mut i = goal_idx;
    while i != 0 {
        let n = &nodes[i];
        for &m in n.moves.iter().rev() {
            steps.push((m, n.mask));
        }
        i = n.parent;
    }
    steps.reverse();
    let mut legs = Vec::new();
    let mut current = Vec::new();
    let mut mask = m0;
    for (m, nmask) in &steps {
        current.push(*m);
        let gained = nmask & !mask;
        if gained != 0 {
            for (j, o) in problem.objs.iter().enumerate() {
                if gained & (1 << j) != 0 {
                    legs.push(Leg { objective: o.clone(), path: Path::from_moves(std::mem::take(&mut current), true) });
                }
            }
        }
        mask = *nmask;
    }
    let moves: Vec<Move> = steps.into_iter().map(|(m, _)| m).collect();
    Ok((Tour { path: Path::from_moves(moves, true), legs }, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiling::neighbors;
    use crate::walker::{apply_moves, symmetry_orbit, Cell, PhysHeading};

    fn a(s: &str) -> TileAddress {
        s.parse().unwrap()
    }

    #[test]
    fn trivial_paths() {
        let s = WalkerState::start();
        assert_eq!(astar(&s, &TileAddress::Origin, CostModel::default()), Path::empty());
        let p = astar(&s, &a("N"), CostModel::default());
        assert_eq!(p.moves, vec![Move::StepForward]);
        assert_eq!(p.forward_steps, 1);
    }

    #[test]
    fn heuristic_examples() {
        let s = WalkerState::start();
        assert_eq!(heuristic(&s, &TileAddress::Origin), 0);
        for n in neighbors(&TileAddress::Origin) {
            assert_eq!(heuristic(&s, &n), 1);
        }
    }

    #[test]
    fn lazy_on_adjacent_goals() {
        let s = WalkerState::new(a("Nl"), 1, Cell::new(0, 2), PhysHeading::E);
        for n in neighbors(&s.tile) {
            let (p, stats) = astar_with_stats(&s, &n, CostModel::default());
            assert!(stats.expansions < 50, "{n}: {}", stats.expansions);
            let end = apply_moves(&s, &p.moves).unwrap();
            assert_eq!(end.tile, n);
        }
    }

    #[test]
    fn anytime_with_tiny_budget() {
        let s = WalkerState::start();
        let goal = a("Srflf");
        let p = astar_anytime(&s, &goal, SearchBudget { max_expansions: 1 });
        let end = apply_moves(&s, &p.moves).unwrap();
        assert!(heuristic(&end, &goal) <= heuristic(&s, &goal));
        assert!(!p.complete);
        let full = astar_anytime(&s, &goal, SearchBudget { max_expansions: 1_000_000 });
        assert_eq!(full, astar(&s, &goal, CostModel::default()));
    }

    #[test]
    fn hotcold_examples() {
        let f = hotcold_field(&TileAddress::Origin, 2, &[a("Nl")]).unwrap();
        assert_eq!(f[&a("Nl")], 0);
        assert_eq!(f[&a("N")], 1);
        assert_eq!(hotcold_field(&TileAddress::Origin, 1, &[]), Err(PathfindError::NoObjectives));
    }

    #[test]
    fn orbit_members_share_costs() {
        let s = WalkerState::new(a("Ef"), 2, Cell::new(0, 1), PhysHeading::W);
        for goal in [a("Nl"), a("Srf")] {
            let costs: Vec<u32> = symmetry_orbit(&s)
                .iter()
                .map(|t| astar(t, &goal, CostModel::default()).forward_steps)
                .collect();
            assert!(costs.iter().all(|&c| c == costs[0]), "{costs:?}");
        }
    }

    #[test]
    fn single_objective_tour_is_astar() {
        let s = WalkerState::start();
        let goal = a("Wlf");
        let t = plan_tour(&s, std::slice::from_ref(&goal), None, TourOptions::default()).unwrap();
        assert_eq!(t.path.forward_steps, astar(&s, &goal, CostModel::default()).forward_steps);
    }

    #[test]
    fn tour_guards() {
        let s = WalkerState::start();
        let many: Vec<TileAddress> = crate::tiling::tiles_within(&TileAddress::Origin, 2).into_iter().take(7).collect();
        assert_eq!(plan_tour(&s, &many, None, TourOptions::default()), Err(PathfindError::TooManyObjectives(7)));
        assert_eq!(
            plan_tour(&s, &[a("N")], Some(&a("S")), TourOptions::default()),
            Err(PathfindError::FinalNotObjective(a("S")))
        );
    }

    #[test]
    fn two_objective_tour() {
        let s = WalkerState::start();
        let objs = [a("Nl"), a("Sr")];
        for sym in [false, true] {
            let t = plan_tour(&s, &objs, Some(&objs[0]), TourOptions { symmetry_reduction: sym }).unwrap();
            let sum: u32 = objs.iter().map(|o| astar(&s, o, CostModel::default()).forward_steps).sum();
            assert!(t.path.forward_steps <= sum + astar(&s, &objs[0], CostModel::default()).forward_steps);
            assert_eq!(t.legs.last().unwrap().objective, objs[0]);
            let end = apply_moves(&s, &t.path.moves).unwrap();
            assert_eq!(end.tile, objs[0]);
        }
    }
}
