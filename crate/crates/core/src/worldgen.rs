//! Wave-function-collapse population of tiles.
//!
//! Objects carry one connector label per edge; two tiles may touch only if
//! the labels on the shared edge are equal. Each object is expanded into its
//! distinct rotations up front, so the solver itself never thinks about
//! orientation.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tiling::{cross, TileAddress};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Biome {
    pub name: String,
    pub propagation_depth: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectKind {
    pub name: String,
    pub weight: f64,
    pub connectors: [String; 4],
    pub biomes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub biomes: Vec<Biome>,
    pub objects: Vec<ObjectKind>,
}

impl Catalog {
    /// Grass, flowers, a flag, creek pieces and log halves in two biomes.
    pub fn forest() -> Catalog {
        let obj = |name: &str, weight: f64, c: [&str; 4], biomes: &[&str]| ObjectKind {
            name: name.into(),
            weight,
            connectors: c.map(String::from),
            biomes: biomes.iter().map(|b| b.to_string()).collect(),
        };
        Catalog {
            biomes: vec![
                Biome { name: "glade".into(), propagation_depth: 2 },
                Biome { name: "brook".into(), propagation_depth: 2 },
            ],
            objects: vec![
                obj("grass", 6.0, ["g", "g", "g", "g"], &["glade", "brook"]),
                obj("flowers", 1.5, ["g", "g", "g", "g"], &["glade", "brook"]),
                obj("flag", 0.3, ["g", "g", "g", "g"], &["glade"]),
                obj("log_half", 0.8, ["l", "g", "g", "g"], &["glade", "brook"]),
                obj("creek_straight", 2.0, ["c", "g", "c", "g"], &["brook"]),
                obj("creek_bend", 1.5, ["c", "c", "g", "g"], &["brook"]),
                obj("creek_end", 0.4, ["c", "g", "g", "g"], &["brook"]),
            ],
        }
    }

    pub fn validate(&self) -> Result<(), WorldgenError> {
        if self.objects.is_empty() {
            return Err(WorldgenError::BadCatalog("no objects".into()));
        }
        if self.biomes.is_empty() {
            return Err(WorldgenError::BadCatalog("no biomes".into()));
        }
        let mut names = BTreeSet::new();
        for o in &self.objects {
            if !names.insert(&o.name) {
                return Err(WorldgenError::BadCatalog(format!("duplicate object {}", o.name)));
            }
            if !(o.weight > 0.0 && o.weight.is_finite()) {
                return Err(WorldgenError::BadCatalog(format!("{} has weight {}", o.name, o.weight)));
            }
            for b in &o.biomes {
                if !self.biomes.iter().any(|x| &x.name == b) {
                    return Err(WorldgenError::BadCatalog(format!("{} names unknown biome {b}", o.name)));
                }
            }
        }
        for b in &self.biomes {
            if !self.objects.iter().any(|o| o.biomes.contains(&b.name)) {
                return Err(WorldgenError::BadCatalog(format!("biome {} allows no object", b.name)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    #[default]
    Shannon,
    OptionCount,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub entropy: EntropyMode,
    /// Backtracks allowed before giving up.
    pub undo_budget: usize,
    /// Label required on edges that leave the region. `None` leaves them free.
    pub boundary: Option<String>,
    /// Overrides every biome's propagation depth.
    pub biome_depth: Option<u32>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { entropy: EntropyMode::Shannon, undo_budget: 10_000, boundary: None, biome_depth: None }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldgenError {
    #[error("unsatisfiable: contradiction at {tile} after {backtracks} backtracks")]
    Unsatisfiable { tile: TileAddress, backtracks: usize },
    #[error("bad catalog: {0}")]
    BadCatalog(String),
    #[error("entropy of a collapsed tile")]
    Collapsed,
    #[error("decision log does not fit the world: {0}")]
    BadLog(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Uncollapsed { options: Vec<(String, u8)> },
    Collapsed { kind: String, orientation: u8 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileContent {
    #[serde(flatten)]
    pub status: Status,
    pub biome: Option<String>,
    /// Propagation depth left when the biome was set.
    pub biome_depth: u32,
}

impl TileContent {
    pub fn kind(&self) -> Option<&str> {
        match &self.status {
            Status::Collapsed { kind, .. } => Some(kind),
            Status::Uncollapsed { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub tile: TileAddress,
    /// Biome drawn for the tile if it had none.
    pub biome: Option<String>,
    pub kind: String,
    pub orientation: u8,
    pub entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub seed: u64,
    /// Tiles of each generation call, in the order they were given.
    pub stages: Vec<Vec<TileAddress>>,
    pub contents: BTreeMap<TileAddress, TileContent>,
    pub decision_log: Vec<Decision>,
}

impl WorldState {
    pub fn empty(seed: u64) -> WorldState {
        WorldState { seed, stages: Vec::new(), contents: BTreeMap::new(), decision_log: Vec::new() }
    }

    pub fn kind_at(&self, t: &TileAddress) -> Option<&str> {
        self.contents.get(t).and_then(|c| c.kind())
    }

    pub fn tiles_with(&self, kind: &str) -> Vec<TileAddress> {
        self.contents.iter().filter(|(_, c)| c.kind() == Some(kind)).map(|(t, _)| t.clone()).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenReport {
    pub decisions: usize,
    pub backtracks: usize,
}

/// Entropy of a weighted option set.
pub fn entropy(weights: &[f64], mode: EntropyMode) -> f64 {
    match mode {
        EntropyMode::OptionCount => (weights.len() as f64).ln(),
        EntropyMode::Shannon => {
            let total: f64 = weights.iter().sum();
            -weights.iter().map(|w| w / total).filter(|&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
        }
    }
}

/// Entropy of an uncollapsed tile's options under `catalog`.
pub fn content_entropy(t: &TileContent, catalog: &Catalog, mode: EntropyMode) -> Result<f64, WorldgenError> {
    let Status::Uncollapsed { options } = &t.status else {
        return Err(WorldgenError::Collapsed);
    };
    let compiled = Compiled::new(catalog)?;
    let weights: Vec<f64> = options
        .iter()
        .map(|(k, o)| compiled.find(k, *o).map(|v| compiled.variants[v].weight))
        .collect::<Option<_>>()
        .ok_or_else(|| WorldgenError::BadCatalog("option not in catalog".into()))?;
    Ok(entropy(&weights, mode))
}

type Mask = u128;

#[derive(Clone, Debug)]
struct Variant {
    object: usize,
    orientation: u8,
    connectors: [u8; 4],
    weight: f64,
}

struct Compiled {
    labels: Vec<String>,
    variants: Vec<Variant>,
    biome_masks: Vec<Mask>,
    biome_names: Vec<String>,
    biome_depths: Vec<u32>,
    object_names: Vec<String>,
    /// `with_label[e][l]`: variants whose edge `e` carries label `l`.
    with_label: [Vec<Mask>; 4],
}

impl Compiled {
    fn new(catalog: &Catalog) -> Result<Compiled, WorldgenError> {
        catalog.validate()?;
        let mut labels: Vec<String> = Vec::new();
        let mut intern = |s: &str| -> u8 {
            match labels.iter().position(|l| l == s) {
                Some(i) => i as u8,
                None => {
                    labels.push(s.to_string());
                    (labels.len() - 1) as u8
                }
            }
        };
        let mut variants = Vec::new();
        for (oi, o) in catalog.objects.iter().enumerate() {
            let base = o.connectors.each_ref().map(|c| intern(c));
            let mut rots: Vec<(u8, [u8; 4])> = Vec::new();
            for r in 0..4u8 {
                let c = [0, 1, 2, 3].map(|e| base[(e + 4 - r as usize) % 4]);
                if !rots.iter().any(|(_, x)| *x == c) {
                    rots.push((r, c));
                }
            }
            let share = o.weight / rots.len() as f64;
            for (r, c) in rots {
                variants.push(Variant { object: oi, orientation: r, connectors: c, weight: share });
            }
        }
        if variants.len() > Mask::BITS as usize {
            return Err(WorldgenError::BadCatalog(format!("{} variants exceed {}", variants.len(), Mask::BITS)));
        }
        let with_label = [0, 1, 2, 3].map(|e| {
            (0..labels.len())
                .map(|l| {
                    variants
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| v.connectors[e] as usize == l)
                        .fold(0 as Mask, |m, (i, _)| m | 1 << i)
                })
                .collect()
        });
        let biome_masks = catalog
            .biomes
            .iter()
            .map(|b| {
                variants
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| catalog.objects[v.object].biomes.contains(&b.name))
                    .fold(0 as Mask, |m, (i, _)| m | 1 << i)
            })
            .collect();
        Ok(Compiled {
            labels,
            variants,
            biome_masks,
            biome_names: catalog.biomes.iter().map(|b| b.name.clone()).collect(),
            biome_depths: catalog.biomes.iter().map(|b| b.propagation_depth).collect(),
            object_names: catalog.objects.iter().map(|o| o.name.clone()).collect(),
            with_label,
        })
    }

    fn all(&self) -> Mask {
        if self.variants.len() == Mask::BITS as usize {
            Mask::MAX
        } else {
            (1 << self.variants.len()) - 1
        }
    }

    fn find(&self, kind: &str, orientation: u8) -> Option<usize> {
        self.variants
            .iter()
            .position(|v| self.object_names[v.object] == kind && v.orientation == orientation)
    }

    fn label(&self, s: &str) -> Option<u8> {
        self.labels.iter().position(|l| l == s).map(|i| i as u8)
    }

    /// Variants allowed across edge `k` of a neighbour, given options `m`
    /// behind our edge `e`.
    fn support(&self, m: Mask, e: usize, k: usize) -> Mask {
        let mut out = 0;
        for l in 0..self.labels.len() {
            if m & self.with_label[e][l] != 0 {
                out |= self.with_label[k][l];
            }
        }
        out
    }

    fn weights(&self, m: Mask) -> Vec<f64> {
        bits(m).map(|i| self.variants[i].weight).collect()
    }

    fn names(&self, m: Mask) -> Vec<(String, u8)> {
        bits(m)
            .map(|i| (self.object_names[self.variants[i].object].clone(), self.variants[i].orientation))
            .collect()
    }
}

fn bits(m: Mask) -> impl Iterator<Item = usize> {
    (0..Mask::BITS as usize).filter(move |i| m >> i & 1 == 1)
}

fn fnv(seed: u64, tile: &TileAddress, salt: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let text = tile.to_string();
    for b in seed.to_le_bytes().iter().chain(text.as_bytes()).chain(&salt.to_le_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    // splitmix finaliser
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

const TIE_SALT: u64 = u64::MAX;

#[derive(Clone, Copy, Debug)]
enum Link {
    Region(usize, usize),
    Fixed(u8),
    Open,
}

#[derive(Clone)]
struct SolveState {
    options: Vec<Mask>,
    collapsed: Vec<Option<usize>>,
    biome: Vec<Option<(usize, u32)>>,
    log: Vec<Decision>,
}

/// Tile index where a contradiction surfaced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Contradiction(pub usize);

/// Constraint state over one region. Exposed for tests of propagation.
pub struct Solver {
    compiled: Compiled,
    tiles: Vec<TileAddress>,
    index: HashMap<TileAddress, usize>,
    links: Vec<[Link; 4]>,
    state: SolveState,
    seed: u64,
    config: GenConfig,
    draws: Vec<u64>,
}

impl Solver {
    /// Sets up the region with `fixed` tiles as hard boundary constraints.
    /// Fails if the boundary alone is contradictory.
    pub fn new(
        region: &[TileAddress],
        catalog: &Catalog,
        seed: u64,
        config: GenConfig,
        fixed: &BTreeMap<TileAddress, TileContent>,
    ) -> Result<Solver, WorldgenError> {
        let compiled = Compiled::new(catalog)?;
        let mut tiles = Vec::new();
        let mut index = HashMap::new();
        for t in region {
            if !index.contains_key(t) && !fixed.contains_key(t) {
                index.insert(t.clone(), tiles.len());
                tiles.push(t.clone());
            }
        }
        let boundary = match &config.boundary {
            Some(b) => Some(compiled.label(b).ok_or_else(|| WorldgenError::BadCatalog(format!("unknown boundary label {b}")))?),
            None => None,
        };
        let mut links = Vec::with_capacity(tiles.len());
        for t in &tiles {
            let mut l = [Link::Open; 4];
            for (e, slot) in l.iter_mut().enumerate() {
                let (n, k) = cross(t, e as u8);
                if let Some(&i) = index.get(&n) {
                    *slot = Link::Region(i, k as usize);
                } else if let Some(Status::Collapsed { kind, orientation }) = fixed.get(&n).map(|c| &c.status) {
                    let v = compiled
                        .find(kind, *orientation)
                        .ok_or_else(|| WorldgenError::BadCatalog(format!("{kind}@{orientation} not in catalog")))?;
                    *slot = Link::Fixed(compiled.variants[v].connectors[k as usize]);
                }
            }
            links.push(l);
        }
        let n = tiles.len();
        let mut solver = Solver {
            state: SolveState { options: vec![compiled.all(); n], collapsed: vec![None; n], biome: vec![None; n], log: Vec::new() },
            compiled,
            tiles,
            index,
            links,
            seed,
            config,
            draws: vec![0; n],
        };
        for i in 0..n {
            for e in 0..4 {
                let label = match solver.links[i][e] {
                    Link::Fixed(l) => Some(l),
                    Link::Open => boundary,
                    Link::Region(..) => None,
                };
                if let Some(l) = label {
                    solver.state.options[i] &= solver.compiled.with_label[e][l as usize];
                }
            }
        }
        // Biomes spill over from fixed neighbours that still had depth left.
        for i in 0..n {
            let t = solver.tiles[i].clone();
            let inherited = (0..4u8).find_map(|e| {
                let c = fixed.get(&cross(&t, e).0)?;
                let b = solver.compiled.biome_names.iter().position(|x| Some(x) == c.biome.as_ref())?;
                (c.biome_depth > 0).then(|| (b, c.biome_depth - 1))
            });
            if let Some((b, d)) = inherited {
                solver.state.biome[i] = Some((b, d));
                solver.state.options[i] &= solver.compiled.biome_masks[b];
            }
        }
        if let Some(i) = (0..n).find(|&i| solver.state.options[i] == 0) {
            return Err(WorldgenError::Unsatisfiable { tile: solver.tiles[i].clone(), backtracks: 0 });
        }
        if let Err(Contradiction(i)) = solver.propagate((0..n).collect()) {
            return Err(WorldgenError::Unsatisfiable { tile: solver.tiles[i].clone(), backtracks: 0 });
        }
        Ok(solver)
    }

    pub fn tiles(&self) -> &[TileAddress] {
        &self.tiles
    }

    /// Remaining (object, orientation) options of a region tile.
    pub fn options(&self, t: &TileAddress) -> Vec<(String, u8)> {
        self.compiled.names(self.state.options[self.index[t]])
    }

    /// Removes the listed options from `t` and runs the arc-consistency
    /// wave. Returns the tiles whose option sets shrank.
    pub fn remove(&mut self, t: &TileAddress, removed: &[(String, u8)]) -> Result<BTreeSet<TileAddress>, Contradiction> {
        let i = self.index[t];
        for (k, o) in removed {
            if let Some(v) = self.compiled.find(k, *o) {
                self.state.options[i] &= !(1 << v);
            }
        }
        if self.state.options[i] == 0 {
            return Err(Contradiction(i));
        }
        let changed = self.propagate(vec![i])?;
        Ok(changed.into_iter().map(|j| self.tiles[j].clone()).collect())
    }

    /// Collapses `t` to one option and propagates.
    pub fn collapse_to(&mut self, t: &TileAddress, kind: &str, orientation: u8) -> Result<BTreeSet<TileAddress>, Contradiction> {
        let i = self.index[t];
        let v = self.compiled.find(kind, orientation).ok_or(Contradiction(i))?;
        if self.state.options[i] & 1 << v == 0 {
            return Err(Contradiction(i));
        }
        self.state.options[i] = 1 << v;
        self.state.collapsed[i] = Some(v);
        let changed = self.propagate(vec![i])?;
        Ok(changed.into_iter().map(|j| self.tiles[j].clone()).collect())
    }

    pub fn tile_name(&self, c: Contradiction) -> &TileAddress {
        &self.tiles[c.0]
    }

    fn propagate(&mut self, start: Vec<usize>) -> Result<BTreeSet<usize>, Contradiction> {
        let mut queue: VecDeque<usize> = start.into();
        let mut changed = BTreeSet::new();
        while let Some(t) = queue.pop_front() {
            for e in 0..4 {
                let Link::Region(n, k) = self.links[t][e] else { continue };
                let allowed = self.compiled.support(self.state.options[t], e, k);
                let next = self.state.options[n] & allowed;
                if next != self.state.options[n] {
                    self.state.options[n] = next;
                    changed.insert(n);
                    if next == 0 {
                        return Err(Contradiction(n));
                    }
                    queue.push_back(n);
                }
            }
        }
        Ok(changed)
    }

    fn entropy_of(&self, i: usize) -> f64 {
        entropy(&self.compiled.weights(self.state.options[i]), self.config.entropy)
    }

    fn rng(&mut self, i: usize) -> ChaCha8Rng {
        let n = self.draws[i];
        self.draws[i] += 1;
        ChaCha8Rng::seed_from_u64(fnv(self.seed, &self.tiles[i], n))
    }

    /// Uncollapsed tile with the lowest entropy; ties by a seeded hash.
    fn select(&self) -> Option<(usize, f64)> {
        (0..self.tiles.len())
            .filter(|&i| self.state.collapsed[i].is_none())
            .map(|i| (self.entropy_of(i), fnv(self.seed, &self.tiles[i], TIE_SALT), i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)))
            .map(|(h, _, i)| (i, h))
    }

    fn depth_of(&self, b: usize) -> u32 {
        self.config.biome_depth.unwrap_or(self.compiled.biome_depths[b])
    }

    /// Collapses tile `i` to variant `v`, assigning `biome` first if given,
    /// then spreads the tile's biome.
    fn apply(&mut self, i: usize, v: usize, biome: Option<usize>, h: f64) -> Result<(), Contradiction> {
        if let Some(b) = biome {
            self.state.biome[i] = Some((b, self.depth_of(b)));
        }
        self.state.options[i] = 1 << v;
        self.state.collapsed[i] = Some(v);
        let var = &self.compiled.variants[v];
        self.state.log.push(Decision {
            tile: self.tiles[i].clone(),
            biome: biome.map(|b| self.compiled.biome_names[b].clone()),
            kind: self.compiled.object_names[var.object].clone(),
            orientation: var.orientation,
            entropy: h,
        });
        self.propagate(vec![i])?;
        let (b, depth) = self.state.biome[i].expect("biome set before collapse");
        if depth > 0 {
            for e in 0..4 {
                let Link::Region(n, _) = self.links[i][e] else { continue };
                if self.state.biome[n].is_some() {
                    continue;
                }
                self.state.biome[n] = Some((b, depth - 1));
                let next = self.state.options[n] & self.compiled.biome_masks[b];
                if next != self.state.options[n] {
                    self.state.options[n] = next;
                    if next == 0 {
                        return Err(Contradiction(n));
                    }
                    self.propagate(vec![n])?;
                }
            }
        }
        Ok(())
    }

    /// Draws an option for tile `i`, then a biome allowing it if the tile
    /// has none.
    fn choose(&mut self, i: usize) -> (usize, Option<usize>) {
        let mut rng = self.rng(i);
        let options: Vec<usize> = bits(self.state.options[i]).collect();
        let weights: Vec<f64> = options.iter().map(|&v| self.compiled.variants[v].weight).collect();
        let v = options[WeightedIndex::new(&weights).expect("positive weights").sample(&mut rng)];
        let biome = match self.state.biome[i] {
            Some(_) => None,
            None => {
                let fits: Vec<usize> =
                    (0..self.compiled.biome_masks.len()).filter(|&b| self.compiled.biome_masks[b] & 1 << v != 0).collect();
                Some(fits[rng.gen_range(0..fits.len())])
            }
        };
        (v, biome)
    }

    /// Runs the collapse loop to completion.
    pub fn run(&mut self) -> Result<GenReport, WorldgenError> {
        // (state before the decision, tile, variant)
        let mut stack: Vec<(SolveState, usize, usize)> = Vec::new();
        let mut report = GenReport::default();
        while let Some((i, h)) = self.select() {
            let (v, biome) = self.choose(i);
            stack.push((self.state.clone(), i, v));
            report.decisions += 1;
            let mut outcome = self.apply(i, v, biome, h);
            while let Err(Contradiction(at)) = outcome {
                let failed_at = self.tiles[at].clone();
                let Some((snapshot, ti, tv)) = stack.pop() else {
                    return Err(WorldgenError::Unsatisfiable { tile: failed_at, backtracks: report.backtracks });
                };
                report.backtracks += 1;
                if report.backtracks > self.config.undo_budget {
                    return Err(WorldgenError::Unsatisfiable { tile: failed_at, backtracks: report.backtracks });
                }
                self.state = snapshot;
                self.state.options[ti] &= !(1 << tv);
                outcome = if self.state.options[ti] == 0 { Err(Contradiction(ti)) } else { self.propagate(vec![ti]).map(|_| ()) };
            }
        }
        Ok(report)
    }

    /// Applies logged decisions in order without drawing anything.
    fn replay(&mut self, decisions: &[Decision]) -> Result<(), WorldgenError> {
        for d in decisions {
            let bad = |m: &str| WorldgenError::BadLog(format!("{}: {m}", d.tile));
            let i = *self.index.get(&d.tile).ok_or_else(|| bad("not in stage"))?;
            let v = self.compiled.find(&d.kind, d.orientation).ok_or_else(|| bad("unknown object"))?;
            let biome = match &d.biome {
                Some(b) => Some(self.compiled.biome_names.iter().position(|x| x == b).ok_or_else(|| bad("unknown biome"))?),
                None => None,
            };
            if self.state.biome[i].is_none() && biome.is_none() {
                return Err(bad("no biome"));
            }
            if self.state.options[i] & 1 << v == 0 {
                return Err(bad("option already excluded"));
            }
            self.apply(i, v, biome, d.entropy).map_err(|_| bad("contradiction"))?;
        }
        if self.state.collapsed.iter().any(Option::is_none) {
            return Err(WorldgenError::BadLog("log leaves tiles uncollapsed".into()));
        }
        Ok(())
    }

    fn contents(&self) -> BTreeMap<TileAddress, TileContent> {
        (0..self.tiles.len())
            .map(|i| {
                let status = match self.state.collapsed[i] {
                    Some(v) => Status::Collapsed {
                        kind: self.compiled.object_names[self.compiled.variants[v].object].clone(),
                        orientation: self.compiled.variants[v].orientation,
                    },
                    None => Status::Uncollapsed { options: self.compiled.names(self.state.options[i]) },
                };
                let (biome, biome_depth) = match self.state.biome[i] {
                    Some((b, d)) => (Some(self.compiled.biome_names[b].clone()), d),
                    None => (None, 0),
                };
                (self.tiles[i].clone(), TileContent { status, biome, biome_depth })
            })
            .collect()
    }
}

/// Populates `region`. Output depends on the seed, the catalog and the
/// order of `region`.
pub fn generate(region: &[TileAddress], catalog: &Catalog, seed: u64, config: &GenConfig) -> Result<WorldState, WorldgenError> {
    generate_with_report(region, catalog, seed, config).map(|(w, _)| w)
}

pub fn generate_with_report(
    region: &[TileAddress],
    catalog: &Catalog,
    seed: u64,
    config: &GenConfig,
) -> Result<(WorldState, GenReport), WorldgenError> {
    extend_with_report(&WorldState::empty(seed), region, catalog, config)
}

/// Collapses `new_tiles` next to an existing world. Existing tiles are never
/// touched and act as fixed boundary.
pub fn extend(world: &WorldState, new_tiles: &[TileAddress], catalog: &Catalog, config: &GenConfig) -> Result<WorldState, WorldgenError> {
    extend_with_report(world, new_tiles, catalog, config).map(|(w, _)| w)
}

pub fn extend_with_report(
    world: &WorldState,
    new_tiles: &[TileAddress],
    catalog: &Catalog,
    config: &GenConfig,
) -> Result<(WorldState, GenReport), WorldgenError> {
    let mut solver = Solver::new(new_tiles, catalog, world.seed, config.clone(), &world.contents)?;
    if solver.tiles.is_empty() {
        return Ok((world.clone(), GenReport::default()));
    }
    let report = solver.run()?;
    let mut out = world.clone();
    out.stages.push(solver.tiles.clone());
    out.contents.extend(solver.contents());
    out.decision_log.extend(solver.state.log.iter().cloned());
    Ok((out, report))
}

/// Rebuilds a world from its seed, stages and decision log alone.
pub fn replay(world: &WorldState, catalog: &Catalog, config: &GenConfig) -> Result<WorldState, WorldgenError> {
    let mut out = WorldState::empty(world.seed);
    let mut rest = world.decision_log.as_slice();
    for stage in &world.stages {
        let mut solver = Solver::new(stage, catalog, world.seed, config.clone(), &out.contents)?;
        if rest.len() < solver.tiles.len() {
            return Err(WorldgenError::BadLog("log too short".into()));
        }
        let (now, later) = rest.split_at(solver.tiles.len());
        solver.replay(now)?;
        rest = later;
        out.stages.push(solver.tiles.clone());
        out.contents.extend(solver.contents());
        out.decision_log.extend_from_slice(now);
    }
    if !rest.is_empty() {
        return Err(WorldgenError::BadLog("log too long".into()));
    }
    Ok(out)
}

/// Biome layer alone: the collapse loop over one marker object per biome,
/// so assignment follows collapse order as in a real run. A tile that has
/// received a biome is down to one option and collapses before fresh tiles.
pub fn assign_biomes(region: &[TileAddress], biomes: &[Biome], depth: u32, seed: u64) -> BTreeMap<TileAddress, String> {
    let catalog = Catalog {
        biomes: biomes.to_vec(),
        objects: biomes
            .iter()
            .map(|b| ObjectKind {
                name: format!("marker_{}", b.name),
                weight: 1.0,
                connectors: ["-", "-", "-", "-"].map(String::from),
                biomes: vec![b.name.clone()],
            })
            .collect(),
    };
    let config = GenConfig { biome_depth: Some(depth), ..GenConfig::default() };
    let world = generate(region, &catalog, seed, &config).expect("markers fit anywhere");
    world.contents.into_iter().map(|(t, c)| (t, c.biome.expect("every collapsed tile has a biome"))).collect()
}

/// Edges inside `world` whose connectors disagree, as (tile, edge) pairs.
pub fn connector_violations(world: &WorldState, catalog: &Catalog) -> Vec<(TileAddress, u8)> {
    let Ok(compiled) = Compiled::new(catalog) else {
        return Vec::new();
    };
    let label = |t: &TileAddress, e: u8| -> Option<u8> {
        match &world.contents.get(t)?.status {
            Status::Collapsed { kind, orientation } => compiled.find(kind, *orientation).map(|v| compiled.variants[v].connectors[e as usize]),
            Status::Uncollapsed { .. } => None,
        }
    };
    let mut out = Vec::new();
    for t in world.contents.keys() {
        for e in 0..4 {
            let (n, k) = cross(t, e);
            if let (Some(a), Some(b)) = (label(t, e), label(&n, k)) {
                if a != b {
                    out.push((t.clone(), e));
                }
            }
        }
    }
    out
}
