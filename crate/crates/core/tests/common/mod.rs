//! Reference implementations used by the property and acceptance tests.
//! None of them call into the pathfinding or worldgen code under test.
#![allow(dead_code)]

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::f64::consts::{FRAC_PI_2, PI};

use hyperwalk::geometry::{edge_angle, tiling_constants, HPoint, Isometry};
use hyperwalk::tiling::{neighbors, tile_distance, Branch, Step, TileAddress};
use hyperwalk::walker::{apply_move, Move, WalkerState};
use hyperwalk::worldgen::{Catalog, Status, WorldState};

/// Breadth-first distance over the neighbour graph.
pub fn bfs_distance(a: &TileAddress, b: &TileAddress) -> u32 {
    if a == b {
        return 0;
    }
    let mut seen = HashSet::from([a.clone()]);
    let mut layer = vec![a.clone()];
    let mut d = 0;
    loop {
        d += 1;
        let mut next = Vec::new();
        for t in &layer {
            for n in neighbors(t) {
                if &n == b {
                    return d;
                }
                if seen.insert(n.clone()) {
                    next.push(n);
                }
            }
        }
        layer = next;
    }
}

/// Distances from `center` to every tile within `radius`, by BFS.
pub fn bfs_field(center: &TileAddress, radius: u32) -> HashMap<TileAddress, u32> {
    let mut dist = HashMap::from([(center.clone(), 0)]);
    let mut layer = vec![center.clone()];
    for d in 1..=radius {
        let mut next = Vec::new();
        for t in &layer {
            for n in neighbors(t) {
                if !dist.contains_key(&n) {
                    dist.insert(n.clone(), d);
                    next.push(n);
                }
            }
        }
        layer = next;
    }
    dist
}

/// Frame reached by walking a raw edge sequence as a turtle in the plane:
/// every crossing lands in a square whose edge 0 points back.
pub fn turtle_frame(branch: Branch, steps: &[Step]) -> Isometry {
    let t = tiling_constants().step_translation;
    let back = Isometry::rotation(PI - edge_angle(false, 0));
    let mut f = Isometry::rotation(edge_angle(true, branch.edge())) * t * back;
    for s in steps {
        f = f * Isometry::rotation(edge_angle(false, s.edge())) * t * back;
    }
    f
}

/// Smallest difference between two frames over the square's own rotations.
pub fn frame_gap(a: &Isometry, b: &Isometry) -> f64 {
    (0..4)
        .map(|r| (*a * Isometry::rotation(FRAC_PI_2 * r as f64)).max_abs_diff(b))
        .fold(f64::INFINITY, f64::min)
}

pub fn center_of(f: &Isometry) -> HPoint {
    f.apply(HPoint::APEX)
}

const MOVES: [Move; 3] = [Move::TurnLeft, Move::TurnRight, Move::StepForward];

fn cost(m: Move) -> u32 {
    u32::from(m == Move::StepForward)
}

/// Uniform-cost search from several sources, pruned by a bound: states are
/// kept only while cost so far plus the tile distance to `goal` stays within
/// `bound`. Returns the cost of every reached state on `goal`.
pub fn ucs_to_tile(
    sources: &HashMap<WalkerState, u32>,
    goal: &TileAddress,
    bound: u32,
    tail: u32,
) -> HashMap<WalkerState, u32> {
    let field: RefCell<HashMap<TileAddress, u32>> = RefCell::default();
    let lb = |t: &TileAddress| *field.borrow_mut().entry(t.clone()).or_insert_with(|| tile_distance(t, goal));
    let mut dist: HashMap<WalkerState, u32> = HashMap::new();
    let mut buckets: BTreeMap<u32, VecDeque<WalkerState>> = BTreeMap::new();
    for (s, &c) in sources {
        if c + lb(&s.tile) + tail <= bound && dist.get(s).is_none_or(|&d| c < d) {
            dist.insert(s.clone(), c);
            buckets.entry(c).or_default().push_back(s.clone());
        }
    }
    let mut done: HashSet<WalkerState> = HashSet::new();
    while let Some((&g, _)) = buckets.iter().next() {
        let Some(s) = buckets.get_mut(&g).and_then(|q| q.pop_front()) else {
            buckets.remove(&g);
            continue;
        };
        if !done.insert(s.clone()) {
            continue;
        }
        for m in MOVES {
            let Ok(n) = apply_move(&s, m) else { continue };
            let ng = g + cost(m);
            if ng + lb(&n.tile) + tail > bound {
                continue;
            }
            if dist.get(&n).is_none_or(|&d| ng < d) {
                dist.insert(n.clone(), ng);
                buckets.entry(ng).or_default().push_back(n);
            }
        }
    }
    dist.into_iter().filter(|(s, _)| &s.tile == goal).collect()
}

/// Cheapest cost from `start` to any state on `goal`, if within `bound`.
pub fn ucs_cost(start: &WalkerState, goal: &TileAddress, bound: u32) -> Option<u32> {
    let src = HashMap::from([(start.clone(), 0)]);
    ucs_to_tile(&src, goal, bound, 0).values().copied().min()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Cheapest tour by enumerating visit orders and, per leg, every arrival
/// state on the objective. Only tours costing at most `bound` are found.
pub fn brute_force_tour(
    start: &WalkerState,
    objectives: &[TileAddress],
    last: Option<&TileAddress>,
    bound: u32,
) -> Option<u32> {
    let idx: Vec<usize> = (0..objectives.len()).collect();
    let mut best: Option<u32> = None;
    for order in permutations(&idx) {
        if let Some(l) = last {
            if &objectives[*order.last().expect("nonempty")] != l {
                continue;
            }
        }
        let stops: Vec<&TileAddress> = order.iter().map(|&i| &objectives[i]).collect();
        let mut layer = HashMap::from([(start.clone(), 0u32)]);
        for (i, stop) in stops.iter().enumerate() {
            let tail: u32 = stops[i..].windows(2).map(|w| bfs_distance(w[0], w[1])).sum();
            layer = ucs_to_tile(&layer, stop, bound, tail);
            if layer.is_empty() {
                break;
            }
        }
        if let Some(c) = layer.values().min() {
            best = Some(best.map_or(*c, |b| b.min(*c)));
        }
    }
    best
}

/// Connector label on edge `e` of a collapsed tile, from the catalog alone.
pub fn label_at(world: &WorldState, catalog: &Catalog, t: &TileAddress, e: u8) -> Option<String> {
    let Status::Collapsed { kind, orientation } = &world.contents.get(t)?.status else {
        return None;
    };
    let obj = catalog.objects.iter().find(|o| &o.name == kind)?;
    Some(obj.connectors[((e + 4 - orientation) % 4) as usize].clone())
}

/// Exhaustive satisfiability of a labelled-edge puzzle over `region`, with
/// `boundary` required on edges leaving it. Plain backtracking with no
/// propagation and no ordering heuristics.
pub fn exhaustive_solvable(region: &[TileAddress], catalog: &Catalog, boundary: Option<&str>) -> bool {
    exhaustive_with(region, catalog, boundary, |_, _| true)
}

/// Same, with `allowed` restricting which rotated connector tuples each
/// tile may take.
pub fn exhaustive_with(
    region: &[TileAddress],
    catalog: &Catalog,
    boundary: Option<&str>,
    allowed: impl Fn(&TileAddress, &[String; 4]) -> bool,
) -> bool {
    let mut variants: Vec<[String; 4]> = Vec::new();
    for o in &catalog.objects {
        for r in 0..4 {
            let c: [String; 4] = std::array::from_fn(|e| o.connectors[(e + 4 - r) % 4].clone());
            if !variants.contains(&c) {
                variants.push(c);
            }
        }
    }
    let index: HashMap<&TileAddress, usize> = region.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let links: Vec<[Option<(usize, usize)>; 4]> = region
        .iter()
        .map(|t| {
            std::array::from_fn(|e| {
                let (n, k) = hyperwalk::tiling::cross(t, e as u8);
                index.get(&n).map(|&j| (j, k as usize))
            })
        })
        .collect();
    let permitted: Vec<Vec<usize>> =
        region.iter().map(|t| (0..variants.len()).filter(|&v| allowed(t, &variants[v])).collect()).collect();
    fn go(
        i: usize,
        assign: &mut Vec<usize>,
        variants: &[[String; 4]],
        permitted: &[Vec<usize>],
        links: &[[Option<(usize, usize)>; 4]],
        boundary: Option<&str>,
    ) -> bool {
        if i == links.len() {
            return true;
        }
        'v: for &v in &permitted[i] {
            for e in 0..4 {
                match links[i][e] {
                    Some((j, k)) if j < i => {
                        if variants[assign[j]][k] != variants[v][e] {
                            continue 'v;
                        }
                    }
                    None => {
                        if let Some(b) = boundary {
                            if variants[v][e] != b {
                                continue 'v;
                            }
                        }
                    }
                    _ => {}
                }
            }
            assign.push(v);
            if go(i + 1, assign, variants, permitted, links, boundary) {
                return true;
            }
            assign.pop();
        }
        false
    }
    go(0, &mut Vec::new(), &variants, &permitted, &links, boundary)
}
