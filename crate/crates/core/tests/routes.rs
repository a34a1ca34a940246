use mapmesh_core::addressing::build_grid;
use mapmesh_core::graph::{build_graph, PathMetric};
use mapmesh_core::routes::{compress_table, follow_tables, lookup_domain, precompute_tables, TableParams};
use mapmesh_core::synth::{block_city, grid_city};
use mapmesh_core::BuildingId;

#[test]
fn grid_city_tables_reach_every_destination() {
    let map = grid_city(8, 8, 25.0, 50.0);
    let g = build_graph(&map, 100.0);
    let idx = build_grid(&map, 100.0).unwrap();
    let (tables, stats) = precompute_tables(&g, &map, &idx, &TableParams::default());
    let cells = stats.nonempty_cells;
    assert_eq!(stats.cell_pair_paths, cells * (cells - 1));
    assert_eq!(stats.unreachable_cell_pairs, 0);
    for s in map.ids() {
        for d in map.ids() {
            let walk = follow_tables(&tables, &idx, s, d);
            assert!(walk.is_some(), "{s} -> {d}");
        }
    }
}

#[test]
fn compressed_tables_route_identically() {
    let map = block_city(600, 1);
    let g = build_graph(&map, 100.0);
    let idx = build_grid(&map, 100.0).unwrap();
    for metric in [PathMetric::Power(10.0), PathMetric::Power(1.0), PathMetric::Minimax] {
        let params = TableParams {
            metric,
            ..TableParams::default()
        };
        let (tables, _) = precompute_tables(&g, &map, &idx, &params);
        let compressed: Vec<_> = tables.iter().map(|t| compress_table(t, &idx)).collect();
        for (t, c) in tables.iter().zip(&compressed) {
            assert!(c.len() <= t.len());
            for q in lookup_domain(&idx, t.owner) {
                assert_eq!(c.lookup(&q), t.lookup(&q));
            }
            for b in map.ids().filter(|&b| b != t.owner) {
                let a = idx.address_of(b).unwrap();
                assert_eq!(c.lookup(&a), t.lookup(&a));
            }
        }
        let mut reached = 0;
        let n = map.len() as u32;
        for i in 0..200u32 {
            let s = BuildingId((i * 7919) % n);
            let d = BuildingId((i * 104_729 + 13) % n);
            let plain = follow_tables(&tables, &idx, s, d);
            assert_eq!(follow_tables(&compressed, &idx, s, d), plain);
            reached += plain.is_some() as usize;
        }
        assert!(reached >= 190, "{metric}: {reached}/200");
    }
}

#[test]
fn representatives_cut_path_computations() {
    let map = block_city(2000, 2);
    let g = build_graph(&map, 100.0);
    let idx = build_grid(&map, 100.0).unwrap();
    let (_, stats) = precompute_tables(&g, &map, &idx, &TableParams::default());
    let n = map.len();
    let c = stats.nonempty_cells;
    assert_eq!(stats.cell_pair_paths + stats.unreachable_cell_pairs, c * (c - 1));
    assert!(stats.path_computations() * 5 < n * (n - 1), "{stats:?}");
}

#[test]
fn precompute_is_deterministic() {
    let map = block_city(300, 5);
    let g = build_graph(&map, 100.0);
    let idx = build_grid(&map, 100.0).unwrap();
    let p = TableParams::default();
    assert_eq!(precompute_tables(&g, &map, &idx, &p), precompute_tables(&g, &map, &idx, &p));
}
