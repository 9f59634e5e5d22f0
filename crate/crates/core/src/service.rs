//! Game sessions, minimap frames and the line-delimited JSON protocol.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::geometry::{
    edge_angle, polygon_points, relative_frame, svg_document, to_poincare, DiskPoint, HPoint, Isometry, SvgPolygon,
};
use crate::pathfind::{astar, astar_anytime, hotcold_field, plan_tour, CostModel, Path, SearchBudget, TourOptions};
use crate::tiling::{tile_distance, tiles_within, tiles_within_with_distance, TileAddress};
use crate::walker::{apply_move, moves_to_string, parse_moves, Move, WalkerError, WalkerState};
use crate::worldgen::{extend, generate, Catalog, GenConfig, WorldState, WorldgenError};

pub const SCHEMA_VERSION: u32 = 1;
pub const MINIMAP_RADIUS: u32 = 3;
const MAX_DRAW_DISTANCE: u32 = 10;
const POLYGON_SAMPLES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FindFlag,
    KeysAndChest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Flag,
    Key,
    Chest,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub tile: TileAddress,
    pub role: Role,
    pub reached: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Placement {
    Fixed { objectives: Vec<(TileAddress, Role)> },
    /// Seeded draw among tiles at a distance from the origin within bounds.
    Drawn { keys: usize, min_distance: u32, max_distance: u32 },
}

fn default_gen() -> GenConfig {
    GenConfig { boundary: Some("g".into()), ..GenConfig::default() }
}

fn default_visibility() -> u32 {
    MINIMAP_RADIUS
}
fn default_threshold() -> u32 {
    8
}
fn default_budget() -> usize {
    20_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub seed: u64,
    pub mode: Mode,
    pub placement: Placement,
    #[serde(default = "default_visibility")]
    pub visibility_radius: u32,
    /// Objectives farther than this get anytime guidance.
    #[serde(default = "default_threshold")]
    pub guidance_threshold: u32,
    #[serde(default = "default_budget")]
    pub anytime_budget: usize,
    /// Defaults to a grass frontier, so revealing more tiles never meets a
    /// creek or log edge that nothing can continue. Custom catalogs set
    /// their own.
    #[serde(default = "default_gen")]
    pub gen: GenConfig,
    #[serde(default)]
    pub catalog: Option<Catalog>,
}

impl SessionConfig {
    pub fn new(seed: u64, mode: Mode, placement: Placement) -> SessionConfig {
        SessionConfig {
            seed,
            mode,
            placement,
            visibility_radius: default_visibility(),
            guidance_threshold: default_threshold(),
            anytime_budget: default_budget(),
            gen: default_gen(),
            catalog: None,
        }
    }

    pub fn catalog(&self) -> Catalog {
        self.catalog.clone().unwrap_or_else(Catalog::forest)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Worldgen(#[from] WorldgenError),
    #[error("{0}")]
    OutOfBounds(#[from] WalkerError),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("schema version {found}, expected {expected}")]
    VersionMismatch { found: u64, expected: u32 },
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("bad request: {0}")]
    BadRequest(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::InvalidConfig(_) => "invalid_config",
            ServiceError::Worldgen(WorldgenError::Unsatisfiable { .. }) => "unsatisfiable",
            ServiceError::Worldgen(_) => "invalid_config",
            ServiceError::OutOfBounds(_) => "out_of_bounds",
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::VersionMismatch { .. } => "version_mismatch",
            ServiceError::Malformed(_) => "malformed",
            ServiceError::BadRequest(_) => "bad_request",
        }
    }
}

/// Wall-clock marker for elapsed time; never serialised or compared.
#[derive(Clone, Debug, Default)]
struct Stopwatch(Option<Instant>);

impl PartialEq for Stopwatch {
    fn eq(&self, _: &Stopwatch) -> bool {
        true
    }
}

mod move_log {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::walker::{moves_to_string, parse_moves, Move};

    pub fn serialize<S: Serializer>(moves: &[Move], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&moves_to_string(moves))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Move>, D::Error> {
        let s = String::deserialize(d)?;
        parse_moves(&s).ok_or_else(|| serde::de::Error::custom("bad move log"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub config: SessionConfig,
    pub walker: WalkerState,
    pub world: WorldState,
    pub objectives: Vec<Objective>,
    pub step_counter: u64,
    /// Seconds spent in `do_move` calls' wall-clock span; informational.
    pub elapsed: f64,
    #[serde(with = "move_log")]
    pub moves: Vec<Move>,
    /// Bumped on every accepted move.
    pub version: u64,
    pub completed: bool,
    #[serde(skip)]
    clock: Stopwatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameTile {
    pub address: TileAddress,
    pub polygon: Vec<[f64; 2]>,
    pub hotcold: u32,
    pub biome: Option<String>,
    pub object: Option<String>,
    pub objective: Option<Role>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimapFrame {
    pub center: TileAddress,
    pub walker: WalkerState,
    pub radius: u32,
    pub tiles: Vec<FrameTile>,
    pub path_overlay: Option<Vec<[f64; 2]>>,
    /// Counterclockwise from straight up to the nearest open objective.
    pub direction_arrow: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Guidance {
    pub path: Path,
    /// Forward steps of the path when complete, otherwise a lower bound.
    pub optimal_steps: u32,
    pub exact: bool,
    pub version: u64,
}

fn draw_objectives(config: &SessionConfig) -> Result<Vec<Objective>, ServiceError> {
    let bad = |m: &str| ServiceError::InvalidConfig(m.to_string());
    let list: Vec<(TileAddress, Role)> = match &config.placement {
        Placement::Fixed { objectives } => objectives.clone(),
        Placement::Drawn { keys, min_distance, max_distance } => {
            if *min_distance == 0 || min_distance > max_distance || *max_distance > MAX_DRAW_DISTANCE {
                return Err(bad("distance bounds must satisfy 1 <= min <= max <= 10"));
            }
            let candidates: Vec<TileAddress> = tiles_within_with_distance(&TileAddress::Origin, *max_distance)
                .into_iter()
                .filter(|(_, d)| d >= min_distance)
                .map(|(t, _)| t)
                .collect();
            let roles: Vec<Role> = match config.mode {
                Mode::FindFlag => vec![Role::Flag],
                Mode::KeysAndChest => std::iter::repeat_n(Role::Key, *keys).chain([Role::Chest]).collect(),
            };
            if candidates.len() < roles.len() {
                return Err(bad("not enough tiles within the distance bounds"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6f62_6a65_6374_6976);
            let picked = candidates.choose_multiple(&mut rng, roles.len()).cloned();
            picked.zip(roles).collect()
        }
    };
    let count = |r: Role| list.iter().filter(|(_, x)| *x == r).count();
    match config.mode {
        Mode::FindFlag if count(Role::Flag) != 1 || list.len() != 1 => return Err(bad("find_flag needs exactly one flag")),
        Mode::KeysAndChest if count(Role::Chest) != 1 || count(Role::Key) == 0 || count(Role::Flag) != 0 => {
            return Err(bad("keys_and_chest needs one chest and at least one key"))
        }
        _ => {}
    }
    let mut seen = std::collections::BTreeSet::new();
    if !list.iter().all(|(t, _)| seen.insert(t.clone())) {
        return Err(bad("two objectives share a tile"));
    }
    Ok(list.into_iter().map(|(tile, role)| Objective { tile, role, reached: false }).collect())
}

impl Session {
    pub fn new(id: impl Into<String>, config: SessionConfig) -> Result<Session, ServiceError> {
        if config.visibility_radius > 6 {
            return Err(ServiceError::InvalidConfig("visibility radius above 6".into()));
        }
        let objectives = draw_objectives(&config)?;
        let walker = WalkerState::start();
        let region = tiles_within(&walker.tile, config.visibility_radius);
        let world = generate(&region, &config.catalog(), config.seed, &config.gen)?;
        let mut s = Session {
            id: id.into(),
            config,
            walker,
            world,
            objectives,
            step_counter: 0,
            elapsed: 0.0,
            moves: Vec::new(),
            version: 0,
            completed: false,
            clock: Stopwatch(Some(Instant::now())),
        };
        s.check_objectives();
        Ok(s)
    }

    pub fn keys_held(&self) -> usize {
        self.objectives.iter().filter(|o| o.role == Role::Key && o.reached).count()
    }

    fn check_objectives(&mut self) {
        let keys_total = self.objectives.iter().filter(|o| o.role == Role::Key).count();
        let held = self.keys_held();
        let here = self.walker.tile.clone();
        for o in self.objectives.iter_mut().filter(|o| o.tile == here && !o.reached) {
            match o.role {
                Role::Flag | Role::Key => o.reached = true,
                Role::Chest => o.reached = held == keys_total,
            }
        }
        self.completed = self.objectives.iter().all(|o| o.reached);
    }

    /// Objectives the walker should head for next.
    pub fn targets(&self) -> Vec<TileAddress> {
        let open = |r: Role| -> Vec<TileAddress> {
            self.objectives.iter().filter(|o| o.role == r && !o.reached).map(|o| o.tile.clone()).collect()
        };
        match self.config.mode {
            Mode::FindFlag => open(Role::Flag),
            Mode::KeysAndChest => {
                let keys = open(Role::Key);
                if keys.is_empty() {
                    open(Role::Chest)
                } else {
                    keys
                }
            }
        }
    }

    /// Applies one move. On error the session is unchanged.
    pub fn do_move(&mut self, m: Move) -> Result<MinimapFrame, ServiceError> {
        let next = apply_move(&self.walker, m)?;
        if m == Move::StepForward {
            let fresh: Vec<TileAddress> = tiles_within(&next.tile, self.config.visibility_radius)
                .into_iter()
                .filter(|t| !self.world.contents.contains_key(t))
                .collect();
            if !fresh.is_empty() {
                self.world = extend(&self.world, &fresh, &self.config.catalog(), &self.config.gen)?;
            }
            self.step_counter += 1;
        }
        self.walker = next;
        self.moves.push(m);
        self.version += 1;
        let now = Instant::now();
        if let Some(then) = self.clock.0 {
            self.elapsed += now.duration_since(then).as_secs_f64();
        }
        self.clock.0 = Some(now);
        self.check_objectives();
        Ok(self.minimap(None))
    }

    pub fn guidance(&self) -> Guidance {
        let targets = self.targets();
        let version = self.version;
        let s = &self.walker;
        if targets.is_empty() || targets.contains(&s.tile) && targets.len() == 1 {
            return Guidance { path: Path::empty(), optimal_steps: 0, exact: true, version };
        }
        let threshold = self.config.guidance_threshold;
        let chest = self.objectives.iter().find(|o| o.role == Role::Chest && !o.reached).map(|o| o.tile.clone());
        let mut tour_stops = targets.clone();
        if let Some(c) = &chest {
            if !tour_stops.contains(c) {
                tour_stops.push(c.clone());
            }
        }
        let near = tour_stops.iter().all(|t| tile_distance(&s.tile, t) <= threshold);
        if near && tour_stops.len() > 1 {
            let tour = plan_tour(s, &tour_stops, chest.as_ref(), TourOptions { symmetry_reduction: true })
                .expect("stops are few and the chest is among them");
            return Guidance { optimal_steps: tour.path.forward_steps, path: tour.path, exact: true, version };
        }
        let goal = targets.iter().min_by_key(|t| (tile_distance(&s.tile, t), (*t).clone())).expect("nonempty").clone();
        let lower = tile_distance(&s.tile, &goal);
        if lower <= threshold {
            let path = astar(s, &goal, CostModel::default());
            return Guidance { optimal_steps: path.forward_steps, path, exact: true, version };
        }
        let path = astar_anytime(s, &goal, SearchBudget { max_expansions: self.config.anytime_budget });
        let optimal_steps = if path.complete { path.forward_steps } else { lower };
        Guidance { exact: path.complete, optimal_steps, path, version }
    }

    /// Rotation taking the walker's faced edge to straight up.
    fn view(&self) -> Isometry {
        Isometry::rotation(FRAC_PI_2 - edge_angle(self.walker.tile.is_origin(), self.walker.facing))
    }

    pub fn minimap(&self, overlay: Option<&Path>) -> MinimapFrame {
        let center = &self.walker.tile;
        let view = self.view();
        let field_targets = {
            let t = self.targets();
            if t.is_empty() {
                self.objectives.iter().map(|o| o.tile.clone()).collect()
            } else {
                t
            }
        };
        let hot = hotcold_field(center, MINIMAP_RADIUS, &field_targets).expect("objectives are never empty");
        let roles: BTreeMap<&TileAddress, Role> = self.objectives.iter().map(|o| (&o.tile, o.role)).collect();
        let tiles = crate::geometry::develop(center, MINIMAP_RADIUS)
            .into_iter()
            .map(|(t, f)| {
                let polygon = polygon_points(&(view * f), POLYGON_SAMPLES)
                    .into_iter()
                    .map(|p| {
                        let d = to_poincare(p);
                        [d.u, d.v]
                    })
                    .collect();
                let content = self.world.contents.get(&t);
                FrameTile {
                    hotcold: hot[&t],
                    biome: content.and_then(|c| c.biome.clone()),
                    object: content.and_then(|c| c.kind().map(String::from)),
                    objective: roles.get(&t).copied(),
                    polygon,
                    address: t,
                }
            })
            .collect();
        let path_overlay = overlay.map(|p| {
            let mut pts = vec![[0.0, 0.0]];
            let mut s = self.walker.clone();
            for &m in &p.moves {
                let Ok(n) = apply_move(&s, m) else { break };
                if n.tile != s.tile {
                    let c = to_poincare((view * relative_frame(center, &n.tile)).apply(HPoint::APEX));
                    pts.push([c.u, c.v]);
                }
                s = n;
            }
            pts
        });
        let direction_arrow = self
            .targets()
            .into_iter()
            .filter(|t| t != center)
            .min_by_key(|t| (tile_distance(center, t), t.clone()))
            .map(|t| {
                let p = (view * relative_frame(center, &t)).apply(HPoint::APEX);
                p.y.atan2(p.x) - FRAC_PI_2
            })
            .map(|a| if a <= -std::f64::consts::PI { a + 2.0 * std::f64::consts::PI } else { a });
        MinimapFrame { center: center.clone(), walker: self.walker.clone(), radius: MINIMAP_RADIUS, tiles, path_overlay, direction_arrow }
    }

    pub fn save(&self) -> Value {
        json!({ "schema_version": SCHEMA_VERSION, "session": self })
    }

    pub fn save_string(&self) -> String {
        serde_json::to_string_pretty(&self.save()).expect("sessions serialise")
    }

    pub fn load(doc: &Value) -> Result<Session, ServiceError> {
        let found = doc
            .get("schema_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| ServiceError::Malformed("missing schema_version".into()))?;
        if found != SCHEMA_VERSION as u64 {
            return Err(ServiceError::VersionMismatch { found, expected: SCHEMA_VERSION });
        }
        let body = doc.get("session").ok_or_else(|| ServiceError::Malformed("missing session".into()))?;
        let s: Session = serde_json::from_value(body.clone()).map_err(|e| ServiceError::Malformed(e.to_string()))?;
        let forward = s.moves.iter().filter(|&&m| m == Move::StepForward).count() as u64;
        if forward != s.step_counter {
            return Err(ServiceError::Malformed(format!("step counter {} but {forward} forward moves", s.step_counter)));
        }
        Ok(s)
    }

    pub fn load_str(text: &str) -> Result<Session, ServiceError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| ServiceError::Malformed(e.to_string()))?;
        Session::load(&doc)
    }

    pub fn summary(&self) -> Value {
        json!({
            "id": self.id,
            "mode": self.config.mode,
            "walker": self.walker,
            "step_counter": self.step_counter,
            "elapsed": self.elapsed,
            "objectives": self.objectives,
            "keys_held": self.keys_held(),
            "completed": self.completed,
            "version": self.version,
            "moves": moves_to_string(&self.moves),
        })
    }
}

fn hotcold_fill(d: u32) -> String {
    let t = (d.min(6) as f64) / 6.0;
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(220.0, 40.0), lerp(40.0, 90.0), lerp(40.0, 220.0))
}

/// The frame as a 1000×1000 SVG: hot-cold fill, optional path, arrow.
pub fn frame_svg(frame: &MinimapFrame) -> String {
    let points: Vec<Vec<DiskPoint>> = frame
        .tiles
        .iter()
        .map(|t| t.polygon.iter().map(|p| DiskPoint { u: p[0], v: p[1] }).collect())
        .collect();
    let polygons: Vec<SvgPolygon<'_>> = frame
        .tiles
        .iter()
        .zip(&points)
        .map(|(t, pts)| SvgPolygon {
            points: pts,
            fill: hotcold_fill(t.hotcold),
            label: Some(match (&t.object, t.objective) {
                (_, Some(r)) => format!("{} {:?}", t.address, r).to_lowercase(),
                (Some(o), None) => format!("{} {o}", t.address),
                (None, None) => t.address.to_string(),
            }),
        })
        .collect();
    let line: Option<Vec<DiskPoint>> =
        frame.path_overlay.as_ref().map(|l| l.iter().map(|p| DiskPoint { u: p[0], v: p[1] }).collect());
    svg_document(&polygons, line.as_deref(), frame.direction_arrow)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    NewSession {
        config: SessionConfig,
    },
    Move {
        session: String,
        #[serde(rename = "move")]
        mv: Move,
    },
    State {
        session: String,
    },
    Guidance {
        session: String,
    },
    Minimap {
        session: String,
        #[serde(default)]
        overlay: bool,
    },
    Save {
        session: String,
    },
    Load {
        document: Value,
    },
}

/// Session table behind the protocol. Each session has one writer at a
/// time; guidance is computed on a snapshot outside the lock.
#[derive(Default)]
pub struct Service {
    sessions: Mutex<BTreeMap<String, Session>>,
    counter: AtomicU64,
}

fn error_response(e: &ServiceError) -> Value {
    json!({ "ok": false, "error": { "code": e.code(), "message": e.to_string() } })
}

impl Service {
    pub fn new() -> Service {
        Service::default()
    }

    fn snapshot(&self, id: &str) -> Result<Session, ServiceError> {
        self.sessions.lock().expect("lock").get(id).cloned().ok_or_else(|| ServiceError::UnknownSession(id.into()))
    }

    pub fn handle(&self, req: Request) -> Value {
        match self.try_handle(req) {
            Ok(v) => v,
            Err(e) => error_response(&e),
        }
    }

    fn try_handle(&self, req: Request) -> Result<Value, ServiceError> {
        match req {
            Request::NewSession { config } => {
                let n = self.counter.fetch_add(1, Ordering::SeqCst) + 1;
                let s = Session::new(format!("s{n}"), config)?;
                let out = json!({ "ok": true, "session": s.id, "state": s.summary(), "frame": s.minimap(None) });
                self.sessions.lock().expect("lock").insert(s.id.clone(), s);
                Ok(out)
            }
            Request::Move { session, mv } => {
                let mut table = self.sessions.lock().expect("lock");
                let s = table.get_mut(&session).ok_or(ServiceError::UnknownSession(session))?;
                let frame = s.do_move(mv)?;
                Ok(json!({ "ok": true, "state": s.summary(), "frame": frame }))
            }
            Request::State { session } => Ok(json!({ "ok": true, "state": self.snapshot(&session)?.summary() })),
            Request::Guidance { session } => {
                let snap = self.snapshot(&session)?;
                let g = snap.guidance();
                let now = self.snapshot(&session)?.version;
                Ok(json!({ "ok": true, "guidance": g, "stale": now != g.version }))
            }
            Request::Minimap { session, overlay } => {
                let snap = self.snapshot(&session)?;
                let g = overlay.then(|| snap.guidance());
                Ok(json!({ "ok": true, "frame": snap.minimap(g.as_ref().map(|g| &g.path)) }))
            }
            Request::Save { session } => Ok(json!({ "ok": true, "document": self.snapshot(&session)?.save() })),
            Request::Load { document } => {
                let s = Session::load(&document)?;
                let out = json!({ "ok": true, "session": s.id, "state": s.summary() });
                self.sessions.lock().expect("lock").insert(s.id.clone(), s);
                Ok(out)
            }
        }
    }

    /// One request line in, one response line out.
    pub fn handle_line(&self, line: &str) -> String {
        let resp = match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle(req),
            Err(e) => error_response(&ServiceError::BadRequest(e.to_string())),
        };
        resp.to_string()
    }

    fn serve_connection(&self, stream: TcpStream) -> std::io::Result<()> {
        let mut out = stream.try_clone()?;
        for line in BufReader::new(stream).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            writeln!(out, "{}", self.handle_line(&line))?;
            out.flush()?;
        }
        Ok(())
    }
}

/// Accepts connections forever, one thread each.
pub fn serve(addr: impl ToSocketAddrs, service: Arc<Service>) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    serve_on(listener, service)
}

pub fn serve_on(listener: TcpListener, service: Arc<Service>) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let svc = Arc::clone(&service);
        std::thread::spawn(move || {
            let _ = svc.serve_connection(stream);
        });
    }
    Ok(())
}

/// Replays a move string on a session, stopping at the first error.
pub fn replay_moves(session: &mut Session, moves: &str) -> Result<Vec<MinimapFrame>, ServiceError> {
    let moves = parse_moves(moves).ok_or_else(|| ServiceError::BadRequest(format!("bad move string {moves:?}")))?;
    moves.into_iter().map(|m| session.do_move(m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> TileAddress {
        s.parse().unwrap()
    }

    fn flag_at(t: &str) -> SessionConfig {
        SessionConfig::new(5, Mode::FindFlag, Placement::Fixed { objectives: vec![(a(t), Role::Flag)] })
    }

    #[test]
    fn fixed_flag_passes_through() {
        let s = Session::new("x", flag_at("Nr")).unwrap();
        assert_eq!(s.objectives, vec![Objective { tile: a("Nr"), role: Role::Flag, reached: false }]);
        assert_eq!(s.world.contents.len(), tiles_within(&TileAddress::Origin, 3).len());
    }

    #[test]
    fn same_seed_same_session() {
        let cfg = SessionConfig::new(9, Mode::KeysAndChest, Placement::Drawn { keys: 2, min_distance: 2, max_distance: 4 });
        let s1 = Session::new("x", cfg.clone()).unwrap();
        let s2 = Session::new("x", cfg).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.objectives.len(), 3);
        assert_eq!(s1.objectives.iter().filter(|o| o.role == Role::Chest).count(), 1);
    }

    #[test]
    fn flag_completion_and_guidance() {
        let mut s = Session::new("x", flag_at("N")).unwrap();
        let g = s.guidance();
        assert_eq!(moves_to_string(&g.path.moves), "F");
        assert_eq!(g.optimal_steps, 1);
        s.do_move(Move::StepForward).unwrap();
        assert!(s.completed);
        assert_eq!(s.step_counter, 1);
        let g = s.guidance();
        assert!(g.path.moves.is_empty());
        assert_eq!(g.optimal_steps, 0);
    }

    #[test]
    fn chest_needs_all_keys() {
        let cfg = SessionConfig::new(
            1,
            Mode::KeysAndChest,
            Placement::Fixed { objectives: vec![(a("N"), Role::Chest), (a("S"), Role::Key), (a("E"), Role::Key)] },
        );
        let mut s = Session::new("x", cfg).unwrap();
        s.do_move(Move::StepForward).unwrap();
        assert!(!s.objectives[0].reached);
        assert!(!s.completed);
    }

    #[test]
    fn hedge_leaves_state_alone() {
        let mut s = Session::new("x", flag_at("Sl")).unwrap();
        s.do_move(Move::StepForward).unwrap();
        let before = s.clone();
        let err = s.do_move(Move::StepForward).unwrap_err();
        assert_eq!(err.code(), "out_of_bounds");
        assert_eq!(s, before);
    }

    #[test]
    fn save_load_round_trip() {
        let mut s = Session::new("x", flag_at("Wl")).unwrap();
        replay_moves(&mut s, "FLFRF").unwrap_or_default();
        let text = s.save_string();
        assert_eq!(Session::load_str(&text).unwrap(), s);
        assert_eq!(Session::load_str("{").unwrap_err().code(), "malformed");
        let mut doc = s.save();
        doc["schema_version"] = json!(99);
        assert_eq!(Session::load(&doc).unwrap_err().code(), "version_mismatch");
    }

    #[test]
    fn protocol_errors_are_structured() {
        let svc = Service::new();
        let r: Value = serde_json::from_str(&svc.handle_line("{\"op\":\"fly\"}")).unwrap();
        assert_eq!(r["error"]["code"], "bad_request");
        let r: Value = serde_json::from_str(&svc.handle_line("{\"op\":\"state\",\"session\":\"nope\"}")).unwrap();
        assert_eq!(r["error"]["code"], "unknown_session");
    }
}
