mod common;

use std::collections::{BTreeMap, HashSet};

use common::{exhaustive_solvable, exhaustive_with, label_at};
use hyperwalk::tiling::{cross, neighbors, tile_distance, tiles_within, TileAddress};
use hyperwalk::worldgen::{
    assign_biomes, connector_violations, extend, generate, generate_with_report, Biome, Catalog, GenConfig, ObjectKind,
    Solver, WorldState,
};

fn object(name: &str, weight: f64, c: [&str; 4], biomes: &[&str]) -> ObjectKind {
    ObjectKind {
        name: name.into(),
        weight,
        connectors: c.map(String::from),
        biomes: biomes.iter().map(|b| b.to_string()).collect(),
    }
}

fn one_biome(objects: Vec<ObjectKind>) -> Catalog {
    Catalog { biomes: vec![Biome { name: "x".into(), propagation_depth: 0 }], objects }
}

/// Independent audit: every region edge agrees with its neighbour, and
/// edges leaving the region show `boundary`.
fn audit(world: &WorldState, catalog: &Catalog, region: &[TileAddress], boundary: Option<&str>) {
    let set: HashSet<&TileAddress> = region.iter().collect();
    for t in region {
        for e in 0..4 {
            let mine = label_at(world, catalog, t, e).expect("collapsed");
            let (n, k) = cross(t, e);
            if set.contains(&n) {
                assert_eq!(Some(mine), label_at(world, catalog, &n, k), "{t} edge {e}");
            } else if let Some(b) = boundary {
                assert_eq!(mine, b, "{t} edge {e} leaves the region");
            }
        }
    }
}

#[test]
fn greedy_trap_is_escaped_by_backtracking() {
    // the heavy all-b object is tempting but cannot meet an a-boundary
    let catalog = one_biome(vec![object("o0", 1.0, ["b", "a", "a", "a"], &["x"]), object("o1", 4.0, ["b"; 4], &["x"])]);
    let region = tiles_within(&TileAddress::Origin, 2);
    assert!(exhaustive_solvable(&region, &catalog, Some("a")));
    let config = GenConfig { boundary: Some("a".into()), ..GenConfig::default() };
    let (world, report) = generate_with_report(&region, &catalog, 1, &config).unwrap();
    assert!(report.backtracks >= 1, "{report:?}");
    audit(&world, &catalog, &region, Some("a"));
    assert!(connector_violations(&world, &catalog).is_empty());
}

#[test]
fn creek_constraint_travels_two_hops() {
    let catalog = one_biome(vec![object("grass", 1.0, ["g"; 4], &["x"]), object("creek", 1.0, ["c", "g", "c", "g"], &["x"])]);
    let region = tiles_within(&TileAddress::Origin, 2);
    let mut solver = Solver::new(&region, &catalog, 3, GenConfig::default(), &BTreeMap::new()).unwrap();
    let changed = solver.collapse_to(&TileAddress::Origin, "creek", 0).unwrap();
    let far: Vec<&TileAddress> = changed.iter().filter(|t| tile_distance(&TileAddress::Origin, t) == 2).collect();
    assert!(!far.is_empty(), "{changed:?}");
    // every option the wave removed has no full solution behind it
    let origin_creek = |t: &TileAddress, c: &[String; 4]| t != &TileAddress::Origin || (c[0] == "c" && c[1] == "g");
    for t in &region {
        let kept = solver.options(t);
        for (kind, orientation) in [("grass", 0u8), ("creek", 0), ("creek", 1)] {
            if kept.contains(&(kind.to_string(), orientation)) {
                continue;
            }
            let base = catalog.objects.iter().find(|o| o.name == kind).unwrap();
            let want: [String; 4] = std::array::from_fn(|e| base.connectors[(e + 4 - orientation as usize) % 4].clone());
            let possible = exhaustive_with(&region, &catalog, None, |u, c| origin_creek(u, c) && (u != t || c == &want));
            assert!(!possible, "{t} lost {kind}@{orientation} but it is still possible");
        }
    }
}

#[test]
fn unsatisfiable_boundary_is_reported() {
    let catalog = one_biome(vec![object("red", 1.0, ["a"; 4], &["x"])]);
    let region = tiles_within(&TileAddress::Origin, 1);
    let config = GenConfig { boundary: Some("a".into()), ..GenConfig::default() };
    assert!(generate(&region, &catalog, 0, &config).is_ok());
    let mixed = one_biome(vec![object("half", 1.0, ["a", "b", "b", "b"], &["x"])]);
    assert!(!exhaustive_solvable(&region, &mixed, Some("a")));
    assert!(matches!(
        generate(&region, &mixed, 0, &config),
        Err(hyperwalk::worldgen::WorldgenError::Unsatisfiable { .. })
    ));
}

fn patches(biomes: &BTreeMap<TileAddress, String>) -> usize {
    let mut seen = HashSet::new();
    let mut count = 0;
    for t in biomes.keys() {
        if !seen.insert(t.clone()) {
            continue;
        }
        count += 1;
        let mut stack = vec![t.clone()];
        while let Some(u) = stack.pop() {
            for n in neighbors(&u) {
                if biomes.get(&n) == biomes.get(&u) && seen.insert(n.clone()) {
                    stack.push(n);
                }
            }
        }
    }
    count
}

fn two_biomes() -> Vec<Biome> {
    vec![Biome { name: "glade".into(), propagation_depth: 2 }, Biome { name: "brook".into(), propagation_depth: 2 }]
}

#[test]
fn deep_biome_floods_everything() {
    let region = tiles_within(&TileAddress::Origin, 4);
    for seed in 0..10 {
        let b = assign_biomes(&region, &two_biomes(), 20, seed);
        assert_eq!(b.len(), region.len());
        assert_eq!(patches(&b), 1, "seed {seed}");
    }
}

#[test]
fn shallow_biomes_form_bounded_patches() {
    let catalog = Catalog::forest();
    let region = tiles_within(&TileAddress::Origin, 4);
    let mut multi = 0;
    for seed in 0..10 {
        let world = generate(&region, &catalog, seed, &GenConfig::default()).unwrap();
        for (t, c) in &world.contents {
            let biome = c.biome.as_ref().expect("biome totality");
            assert!(c.biome_depth <= 2);
            // a tile is a patch source or was reached from a neighbour one level up
            let fed = neighbors(t).iter().any(|n| {
                world.contents.get(n).is_some_and(|d| d.biome.as_ref() == Some(biome) && d.biome_depth == c.biome_depth + 1)
            });
            assert!(c.biome_depth == 2 || fed, "seed {seed}: {t} has depth {} and no source", c.biome_depth);
        }
        let names: BTreeMap<TileAddress, String> =
            world.contents.iter().map(|(t, c)| (t.clone(), c.biome.clone().unwrap())).collect();
        multi += usize::from(patches(&names) > 1);
    }
    assert!(multi > 0, "depth 2 never produced more than one patch");
}

#[test]
fn same_seed_and_visit_order_give_the_same_world() {
    let catalog = Catalog::forest();
    let config = GenConfig { boundary: Some("g".into()), ..GenConfig::default() };
    let grow = || {
        let mut w = generate(&tiles_within(&TileAddress::Origin, 2), &catalog, 9, &config).unwrap();
        for center in ["N", "Nf", "Nfl"] {
            let c: TileAddress = center.parse().unwrap();
            let fresh: Vec<TileAddress> =
                tiles_within(&c, 2).into_iter().filter(|t| !w.contents.contains_key(t)).collect();
            let before = w.contents.clone();
            w = extend(&w, &fresh, &catalog, &config).unwrap();
            assert!(before.iter().all(|(t, v)| w.contents.get(t) == Some(v)));
        }
        w
    };
    let (a, b) = (grow(), grow());
    assert_eq!(a, b);
    assert!(connector_violations(&a, &catalog).is_empty());
}
