use std::io::{BufRead, Write};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use hyperwalk::pathfind::{astar_anytime, astar_with_stats, plan_tour, CostModel, SearchBudget, TourOptions};
use hyperwalk::service::{frame_svg, serve, Mode, Placement, Role, Service, ServiceError, Session, SessionConfig};
use hyperwalk::tiling::{tiles_within, TileAddress};
use hyperwalk::walker::{parse_moves, Cell, PhysHeading, WalkerState};
use hyperwalk::worldgen::{generate_with_report, Catalog, GenConfig, WorldgenError};

const EXIT_UNSAT: u8 = 2;
const EXIT_PROTOCOL: u8 = 3;

#[derive(Parser)]
#[command(name = "hyperwalk", version, about = "Walk, plan and populate the order-5 square tiling")]
struct Cli {
    /// Seed for anything random.
    #[arg(long, global = true, env = "HYPERWALK_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct StartArgs {
    /// Tile the walker stands on.
    #[arg(long, default_value = "O")]
    tile: TileAddress,
    /// Tile edge the walker faces.
    #[arg(long, default_value_t = 0)]
    facing: u8,
    #[arg(long, default_value_t = 1)]
    row: u8,
    #[arg(long, default_value_t = 1)]
    col: u8,
    /// Physical heading: N, E, S or W.
    #[arg(long, default_value = "N")]
    heading: String,
}

impl StartArgs {
    fn state(&self) -> Result<WalkerState, String> {
        let heading = match self.heading.as_str() {
            "N" => PhysHeading::N,
            "E" => PhysHeading::E,
            "S" => PhysHeading::S,
            "W" => PhysHeading::W,
            h => return Err(format!("heading must be N, E, S or W, not {h}")),
        };
        if self.facing > 3 || self.row > 2 || self.col > 2 {
            return Err("facing must be 0..3 and row/col 0..2".into());
        }
        Ok(WalkerState::new(self.tile.clone(), self.facing, Cell::new(self.row, self.col), heading))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Shortest move sequence to a tile.
    Solve {
        #[command(flatten)]
        start: StartArgs,
        #[arg(long)]
        to: TileAddress,
        /// Expansion budget; exact search when absent.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Shortest tour over several tiles.
    Tour {
        #[command(flatten)]
        start: StartArgs,
        #[arg(long = "objective", required = true)]
        objectives: Vec<TileAddress>,
        /// Objective that must come last.
        #[arg(long)]
        last: Option<TileAddress>,
        #[arg(long)]
        symmetry: bool,
    },
    /// Populate a ball of tiles and print the world as JSON.
    Gen {
        #[arg(long, default_value_t = 3)]
        radius: u32,
        #[arg(long, default_value = "O")]
        center: TileAddress,
        /// Catalog JSON file; the forest catalog when absent.
        #[arg(long)]
        catalog: Option<std::path::PathBuf>,
        /// Connector required on edges leaving the region.
        #[arg(long)]
        boundary: Option<String>,
        #[arg(long)]
        biome_depth: Option<u32>,
    },
    /// Minimap SVG after a move script.
    Map {
        /// Flag tile; drawn from the seed when absent.
        #[arg(long)]
        flag: Option<TileAddress>,
        #[arg(long, default_value = "")]
        moves: String,
        /// Draw the guidance path.
        #[arg(long)]
        overlay: bool,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Read move strings from stdin and print the session after each line.
    Walk {
        #[arg(long)]
        flag: Option<TileAddress>,
    },
    /// Line-delimited JSON protocol over TCP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: String,
    },
}

enum Failure {
    Unsat(String),
    Protocol(String),
}

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Failure {
        match e {
            ServiceError::Worldgen(WorldgenError::Unsatisfiable { .. }) => Failure::Unsat(e.to_string()),
            _ => Failure::Protocol(e.to_string()),
        }
    }
}

// A closed pipe on stdout is not worth a panic.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(v: &serde_json::Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("values serialise")));
}

fn flag_config(seed: u64, flag: Option<TileAddress>) -> SessionConfig {
    let placement = match flag {
        Some(t) => Placement::Fixed { objectives: vec![(t, Role::Flag)] },
        None => Placement::Drawn { keys: 0, min_distance: 3, max_distance: 5 },
    };
    SessionConfig::new(seed, Mode::FindFlag, placement)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let seed = cli.seed;
    match cli.command {
        Command::Solve { start, to, budget } => {
            let s = start.state().map_err(Failure::Protocol)?;
            let (path, expansions) = match budget {
                Some(b) => (astar_anytime(&s, &to, SearchBudget { max_expansions: b }), None),
                None => {
                    let (p, st) = astar_with_stats(&s, &to, CostModel::default());
                    (p, Some(st.expansions))
                }
            };
            print_json(&json!({ "path": path, "expansions": expansions }));
        }
        Command::Tour { start, objectives, last, symmetry } => {
            let s = start.state().map_err(Failure::Protocol)?;
            let tour = plan_tour(&s, &objectives, last.as_ref(), TourOptions { symmetry_reduction: symmetry })
                .map_err(|e| Failure::Protocol(e.to_string()))?;
            print_json(&json!(tour));
        }
        Command::Gen { radius, center, catalog, boundary, biome_depth } => {
            let catalog = match catalog {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Failure::Protocol(format!("{}: {e}", p.display())))?;
                    serde_json::from_str::<Catalog>(&text).map_err(|e| Failure::Protocol(format!("{}: {e}", p.display())))?
                }
                None => Catalog::forest(),
            };
            let config = GenConfig { boundary, biome_depth, ..GenConfig::default() };
            let region = tiles_within(&center, radius);
            match generate_with_report(&region, &catalog, seed, &config) {
                Ok((world, _)) => print_json(&json!(world)),
                Err(e @ WorldgenError::Unsatisfiable { .. }) => return Err(Failure::Unsat(e.to_string())),
                Err(e) => return Err(Failure::Protocol(e.to_string())),
            }
        }
        Command::Map { flag, moves, overlay, out } => {
            let mut session = Session::new("map", flag_config(seed, flag))?;
            let moves = parse_moves(&moves).ok_or_else(|| Failure::Protocol(format!("bad move string {moves:?}")))?;
            for m in moves {
                session.do_move(m)?;
            }
            let g = overlay.then(|| session.guidance());
            let svg = frame_svg(&session.minimap(g.as_ref().map(|g| &g.path)));
            match out {
                Some(p) => std::fs::write(&p, svg).map_err(|e| Failure::Protocol(format!("{}: {e}", p.display())))?,
                None => emit(&svg),
            }
        }
        Command::Walk { flag } => {
            let mut session = Session::new("walk", flag_config(seed, flag))?;
            let stdin = std::io::stdin();
            let mut stdout = std::io::stdout();
            for line in stdin.lock().lines() {
                let line = line.map_err(|e| Failure::Protocol(e.to_string()))?;
                let line = line.trim();
                if line == "quit" {
                    break;
                }
                if line == "guide" {
                    let _ = writeln!(stdout, "{}", json!(session.guidance()));
                    continue;
                }
                let Some(moves) = parse_moves(line) else {
                    let _ = writeln!(stdout, "moves are L, R and F; also 'guide' and 'quit'");
                    continue;
                };
                for m in moves {
                    if let Err(e) = session.do_move(m) {
                        let _ = writeln!(stdout, "{e}");
                        break;
                    }
                }
                let _ = writeln!(
                    stdout,
                    "{}  steps {}{}",
                    session.walker,
                    session.step_counter,
                    if session.completed { "  found the flag" } else { "" }
                );
            }
        }
        Command::Serve { addr } => {
            eprintln!("listening on {addr}");
            serve(addr.as_str(), Arc::new(Service::new())).map_err(|e| Failure::Protocol(e.to_string()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PROTOCOL } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Unsat(m)) => {
            eprintln!("{m}");
            ExitCode::from(EXIT_UNSAT)
        }
        Err(Failure::Protocol(m)) => {
            eprintln!("{m}");
            ExitCode::from(EXIT_PROTOCOL)
        }
    }
}
