use std::collections::{HashMap, HashSet};

use mapmesh_core::mapdata::{place_devices, Point};
use mapmesh_core::simnet::{
    run, run_traced, simulate_pairs, Pair, Scheme, ScenarioConfig, SimError, World,
};
use mapmesh_core::synth::grid_city;
use mapmesh_core::{BuildingMap, DeviceId, DeviceSet};

fn square(x: f64, y: f64, side: f64) -> Vec<Point> {
    vec![
        Point::new(x, y),
        Point::new(x + side, y),
        Point::new(x + side, y + side),
        Point::new(x, y + side),
    ]
}

fn setup(map: BuildingMap, cfg: &ScenarioConfig) -> (World, DeviceSet, Vec<mapmesh_core::routes::RoutingTable>) {
    let world = World::new(map, cfg.range, cfg.cell_target).unwrap();
    let devices = place_devices(&world.map, cfg.density, cfg.seed);
    let tables = world.tables(&cfg.table_params());
    (world, devices, tables)
}

#[test]
fn same_building_delivery_takes_one_broadcast() {
    let cfg = ScenarioConfig::default();
    let map = BuildingMap::from_rings(vec![square(0.0, 0.0, 40.0), square(100.0, 0.0, 40.0)]).unwrap();
    let (world, devices, tables) = setup(map, &cfg);
    let b = devices.devices()[0].building_id;
    let mates = devices.in_building(b);
    assert!(mates.len() >= 2);
    let s = cfg.scenario(&world, &devices, Some(&tables));
    let (m, _) = simulate_pairs(&s, &[Pair { src: mates[0].id, dst: mates[1].id }], false).unwrap();
    assert_eq!(m.delivered, 1);
    assert_eq!(m.transmissions, 1);
    assert_eq!(m.packets[0].hops, 1);
}

#[test]
fn three_building_line_delivers_with_bounded_flood() {
    let cfg = ScenarioConfig::default();
    // 20 m squares with 40 m gaps: the ends are 120 m apart, beyond radio range.
    let map = BuildingMap::from_rings((0..3).map(|i| square(i as f64 * 60.0, 0.0, 20.0)).collect()).unwrap();
    let (world, devices, tables) = setup(map, &cfg);
    let first = devices.in_building(world.map.ids().next().unwrap())[0].id;
    let last = devices.in_building(world.map.ids().last().unwrap())[0].id;
    let s = cfg.scenario(&world, &devices, Some(&tables));
    let (m, _) = simulate_pairs(&s, &[Pair { src: first, dst: last }], false).unwrap();
    assert_eq!(m.delivered, 1);
    assert!(m.packets[0].hops >= 2);
    assert!(m.transmissions as usize <= devices.len(), "{} > {}", m.transmissions, devices.len());
}

#[test]
fn runs_are_bit_identical() {
    let cfg = ScenarioConfig {
        ell: 0.4,
        pairs: 30,
        seed: 11,
        ..ScenarioConfig::default()
    };
    let (world, devices, tables) = setup(grid_city(8, 8, 25.0, 50.0), &cfg);
    for scheme in [Scheme::MapMesh, Scheme::Gpsr { location_error: 15.0 }] {
        let c = ScenarioConfig { scheme, ..cfg.clone() };
        let s = c.scenario(&world, &devices, Some(&tables));
        let a = serde_json::to_string(&run(&s).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&s).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn broadcasts_are_once_only_and_caused() {
    let cfg = ScenarioConfig {
        ell: 0.4,
        pairs: 40,
        seed: 5,
        ..ScenarioConfig::default()
    };
    let (world, devices, tables) = setup(grid_city(8, 8, 25.0, 50.0), &cfg);
    let s = cfg.scenario(&world, &devices, Some(&tables));
    let (m, trace) = run_traced(&s).unwrap();
    assert!(m.delivered > 0);
    let mut sent: HashSet<(DeviceId, u32, u32)> = HashSet::new();
    let mut scheduled: HashMap<(DeviceId, u32, u32), usize> = HashMap::new();
    let mut tx = 0;
    for r in &trace {
        let key = (r.device, r.src.0, r.seq);
        match (r.event, r.action.as_str()) {
            ("rx", a) if a.starts_with("schedule") => *scheduled.entry(key).or_default() += 1,
            ("tx", "originate") => {
                assert!(sent.insert(key), "{r}");
                tx += 1;
            }
            ("tx", "broadcast") => {
                assert!(scheduled.get(&key).is_some_and(|&n| n > 0), "no cause for {r}");
                assert!(sent.insert(key), "second broadcast {r}");
                tx += 1;
            }
            _ => {}
        }
    }
    assert_eq!(tx, m.transmissions);
}

#[test]
fn suppression_halves_transmissions_on_grid_city() {
    let cfg = ScenarioConfig::default();
    let (world, devices, tables) = setup(grid_city(8, 8, 25.0, 50.0), &cfg);
    let on = run(&cfg.scenario(&world, &devices, Some(&tables))).unwrap();
    let flood_cfg = ScenarioConfig {
        suppression: false,
        ..cfg.clone()
    };
    let off = run(&flood_cfg.scenario(&world, &devices, Some(&tables))).unwrap();
    assert_eq!(on.delivery_rate, 1.0);
    assert!(on.transmissions * 2 <= off.transmissions, "{} vs {}", on.transmissions, off.transmissions);
}

#[test]
fn delivery_degrades_with_loss() {
    let base = ScenarioConfig::default();
    // Sparse enough that many device links sit on the range cliff.
    let world = World::new(grid_city(8, 8, 20.0, 65.0), base.range, base.cell_target).unwrap();
    let tables = world.tables(&base.table_params());
    let mut means = Vec::new();
    for ell in [0.0, 0.4, 0.6, 0.8] {
        let mut total = 0.0;
        for seed in 0..20 {
            let cfg = ScenarioConfig { ell, seed, ..base.clone() };
            let devices = place_devices(&world.map, cfg.density, seed);
            total += run(&cfg.scenario(&world, &devices, Some(&tables))).unwrap().delivery_rate;
        }
        means.push(total / 20.0);
    }
    for w in means.windows(2) {
        assert!(w[1] <= w[0], "{means:?}");
    }
}

#[test]
fn gpsr_without_error_delivers_on_grid_city() {
    let cfg = ScenarioConfig {
        scheme: Scheme::Gpsr { location_error: 0.0 },
        ..ScenarioConfig::default()
    };
    let (world, devices, _) = setup(grid_city(8, 8, 25.0, 50.0), &cfg);
    let m = run(&cfg.scenario(&world, &devices, None)).unwrap();
    assert_eq!(m.delivery_rate, 1.0);
    assert!(m.packets.iter().all(|p| p.transmissions == p.hops as u64));
}

#[test]
fn scenario_errors() {
    let cfg = ScenarioConfig::default();
    let (world, devices, _) = setup(grid_city(2, 2, 25.0, 50.0), &cfg);
    assert!(matches!(run(&cfg.scenario(&world, &devices, None)), Err(SimError::MissingTables)));
    assert!(matches!(
        World::new(BuildingMap::new(vec![]), 100.0, 100.0),
        Err(SimError::EmptyMap)
    ));
}
