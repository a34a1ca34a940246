use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use mapmesh_core::graph::{build_graph, feasibility_sweep, write_feasibility_csv};
use mapmesh_core::mapdata::{load_geojson, place_devices, read_cache, to_geojson, write_cache, LoadOptions, Projection, CACHE_MAGIC};
use mapmesh_core::routes::{compress_table, precompute_tables, write_table, write_tables_csv};
use mapmesh_core::simnet::{run, run_traced, write_trace_csv, MetricsRow, ScenarioConfig, Scheme, SimError, World};
use mapmesh_core::synth::{block_city, grid_city};
use mapmesh_core::{BuildingMap, DeviceSet};

use crate::args::{Command, Format, MapArgs, ParallelArgs, ScenarioArgs, SynthCity};
use crate::{invalid, output};

pub fn run_command(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest { map, out } => ingest(&map, &out),
        Command::Graph { map, range, out } => graph(&map, range, out.out.as_deref()),
        Command::Feasibility { map, ranges, density, out } => feasibility(&map, &ranges, density, out.out.as_deref()),
        Command::Tables { scenario, out_dir, csv } => tables(&scenario, &out_dir, csv),
        Command::Simulate { scenario, trace, out, format } => simulate(&scenario, trace, out.out.as_deref(), format),
        Command::Sweep {
            scenario,
            schemes,
            ells,
            widths,
            ks,
            par,
            out,
            format,
        } => {
            let grid = SweepGrid { schemes, ells, widths, ks };
            sweep(&scenario, grid, &par, out.out.as_deref(), format)
        }
        Command::Compare { scenario, par, out, format } => compare(&scenario, &par, out.out.as_deref(), format),
        Command::Synth { city, out } => synth(&city, out.as_deref()),
    }
}

/// Reads a native map cache, or GeoJSON when the file lacks the cache magic.
fn load_map(path: &Path, lonlat: bool) -> Result<BuildingMap> {
    let raw = fs::read(path).map_err(|e| invalid(format!("cannot read map {}: {e}", path.display())))?;
    let map = if raw.starts_with(CACHE_MAGIC) {
        read_cache(raw.as_slice())
    } else {
        let projection = if lonlat { Projection::Equirectangular } else { Projection::Planar };
        load_geojson(&raw, LoadOptions { projection })
    };
    let map = map.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if map.is_empty() {
        return Err(invalid(format!("{}: map has no buildings", path.display())));
    }
    Ok(map)
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("--{key} must be a positive number, got {v}")))
    }
}

fn sim_error(e: SimError) -> anyhow::Error {
    match e {
        SimError::TooFewDevices | SimError::EmptyMap | SimError::Address(_) => invalid(e.to_string()),
        SimError::MissingTables | SimError::WrongScheme(_) => e.into(),
    }
}

/// Config file, then flags, then validation.
fn resolve(a: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let raw = fs::read_to_string(p).map_err(|e| invalid(format!("cannot read config {}: {e}", p.display())))?;
            let mut cfg = ScenarioConfig::from_toml(&raw).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            // Paths in a config file are relative to the file.
            let base = p.parent().unwrap_or(Path::new(""));
            cfg.map = cfg.map.map(|m| base.join(m));
            cfg.trace = cfg.trace.map(|t| base.join(t));
            cfg
        }
        None => ScenarioConfig::default(),
    };
    if let Some(m) = &a.map {
        cfg.map = Some(m.clone());
    }
    if let Some(v) = &a.name {
        cfg.name = v.clone();
    }
    if let Some(v) = a.scheme {
        cfg.scheme = v;
    }
    if let Some(v) = a.ell {
        cfg.ell = v;
    }
    if let Some(v) = a.width {
        cfg.conduit_width = v;
    }
    if let Some(v) = a.k {
        cfg.k = v;
    }
    if let Some(v) = a.pairs {
        cfg.pairs = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.table_seed {
        cfg.table_seed = v;
    }
    if let Some(v) = a.density {
        cfg.density = v;
    }
    if let Some(v) = a.range {
        cfg.range = v;
    }
    if let Some(v) = a.cell_target {
        cfg.cell_target = v;
    }
    if let Some(v) = a.cliff_start {
        cfg.cliff_start = v;
    }
    if let Some(v) = a.cliff_end {
        cfg.cliff_end = v;
    }
    if let Some(v) = a.rank_rule {
        cfg.rank_rule = v.into();
    }
    cfg.per_packet_rates |= a.per_packet_rates;
    cfg.suppression &= !a.no_suppression;
    cfg.validate().map_err(invalid)?;
    if cfg.map.is_none() {
        return Err(invalid("no map given; pass --map or set `map` in the config"));
    }
    Ok(cfg)
}

fn world(a: &ScenarioArgs, cfg: &ScenarioConfig) -> Result<World> {
    let map = load_map(cfg.map.as_deref().expect("resolved config has a map"), a.lonlat)?;
    World::new(map, cfg.range, cfg.cell_target).map_err(sim_error)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

fn ingest(a: &MapArgs, out: &Path) -> Result<()> {
    let map = load_map(&a.map, a.lonlat)?;
    let file = File::create(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut w = BufWriter::new(file);
    write_cache(&map, &mut w)?;
    w.flush()?;
    eprintln!("{} buildings -> {}", map.len(), out.display());
    Ok(())
}

fn graph(a: &MapArgs, range: f64, out: Option<&Path>) -> Result<()> {
    positive("range", range)?;
    let map = load_map(&a.map, a.lonlat)?;
    let g = build_graph(&map, range);
    let mut w = output::sink(out)?;
    output::header(&mut w, "graph", &[("map", a.map.display().to_string()), ("range_m", range.to_string())])?;
    g.write_edge_csv(&mut w)?;
    w.flush()?;
    eprintln!("{} buildings, {} edges", g.vertex_count(), g.edge_count());
    Ok(())
}

/// Parses `start:end:step` into an ascending, end-inclusive list.
fn parse_ranges(text: &str) -> Result<Vec<f64>> {
    let bad = || invalid(format!("--ranges expects start:end:step in meters, got {text:?}"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, end, step] = parts[..] else {
        return Err(bad());
    };
    if !(start > 0.0 && end >= start && step > 0.0 && end.is_finite()) {
        return Err(invalid(format!("--ranges needs 0 < start <= end and step > 0, got {text:?}")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

fn feasibility(a: &MapArgs, ranges: &str, density: f64, out: Option<&Path>) -> Result<()> {
    let ranges = parse_ranges(ranges)?;
    positive("density", density)?;
    let map = load_map(&a.map, a.lonlat)?;
    let rows = feasibility_sweep(&map, &ranges, density);
    let mut w = output::sink(out)?;
    output::header(
        &mut w,
        "feasibility",
        &[("map", a.map.display().to_string()), ("density_m2_per_device", density.to_string())],
    )?;
    write_feasibility_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

fn tables(a: &ScenarioArgs, out_dir: &Path, with_csv: bool) -> Result<()> {
    let cfg = resolve(a)?;
    let w = world(a, &cfg)?;
    let (full, stats) = precompute_tables(&w.graph, &w.map, &w.grid, &cfg.table_params());
    let compressed: Vec<_> = full.iter().map(|t| compress_table(t, &w.grid)).collect();
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    for t in &compressed {
        let path = out_dir.join(format!("{:06}.mmrt", t.owner.0));
        let mut f = BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
        write_table(t, &mut f)?;
        f.flush()?;
    }
    if with_csv {
        let mut f = BufWriter::new(File::create(out_dir.join("tables.csv"))?);
        write_tables_csv(&compressed, &mut f)?;
        f.flush()?;
    }

    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for t in &compressed {
        *histogram.entry(t.len()).or_default() += 1;
    }
    let max = compressed.iter().map(|t| t.len()).max().unwrap_or(0);
    let mean = compressed.iter().map(|t| t.len()).sum::<usize>() as f64 / compressed.len() as f64;
    let full_max = full.iter().map(|t| t.len()).max().unwrap_or(0);
    let mut h = BufWriter::new(File::create(out_dir.join("histogram.csv"))?);
    output::scenario_header(&mut h, "tables", &cfg)?;
    for (key, value) in [
        ("buildings", stats.buildings.to_string()),
        ("nonempty_cells", stats.nonempty_cells.to_string()),
        ("uncompressed_max_entries", full_max.to_string()),
        ("max_entries", max.to_string()),
        ("mean_entries", format!("{mean:.3}")),
    ] {
        writeln!(h, "# {key} = {value}")?;
    }
    writeln!(h, "entries,tables")?;
    for (entries, count) in &histogram {
        writeln!(h, "{entries},{count}")?;
    }
    h.flush()?;
    eprintln!(
        "{} tables in {}: max {max} entries, mean {mean:.1}, uncompressed max {full_max}",
        compressed.len(),
        out_dir.display()
    );
    Ok(())
}

fn simulate(a: &ScenarioArgs, trace: Option<PathBuf>, out: Option<&Path>, format: Format) -> Result<()> {
    let mut cfg = resolve(a)?;
    if trace.is_some() {
        cfg.trace = trace;
    }
    let w = world(a, &cfg)?;
    let devices = place_devices(&w.map, cfg.density, cfg.seed);
    let tables = (cfg.scheme == Scheme::MapMesh).then(|| w.tables(&cfg.table_params()));
    let s = cfg.scenario(&w, &devices, tables.as_deref());
    let m = match &cfg.trace {
        Some(path) => {
            let (m, records) = run_traced(&s).map_err(sim_error)?;
            let mut f = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
            write_trace_csv(&records, &mut f)?;
            f.flush()?;
            m
        }
        None => run(&s).map_err(sim_error)?,
    };
    eprintln!(
        "{}: delivered {}/{} ({:.3}), {} transmissions",
        cfg.scheme, m.delivered, m.pairs, m.delivery_rate, m.transmissions
    );
    let rows = [MetricsRow::new(&cfg.name, &cfg, cfg.seed, &m)];
    output::metrics(out, format, "simulate", &cfg, &rows)
}

fn or_base<T>(v: Vec<T>, base: T) -> Vec<T> {
    if v.is_empty() {
        vec![base]
    } else {
        v
    }
}

struct SweepGrid {
    schemes: Vec<Scheme>,
    ells: Vec<f64>,
    widths: Vec<f64>,
    ks: Vec<mapmesh_core::graph::PathMetric>,
}

fn seeds(cfg: &ScenarioConfig, par: &ParallelArgs) -> Result<Vec<u64>> {
    if par.seeds == 0 {
        return Err(invalid("--seeds must be at least 1"));
    }
    Ok((cfg.seed..cfg.seed + par.seeds).collect())
}

/// Runs every config on the shared world, in parallel, keeping input order.
/// Tables are built once per distinct (conduit width, metric, table seed);
/// devices once per seed.
fn run_all(w: &World, base: &ScenarioConfig, jobs: &[ScenarioConfig], workers: usize) -> Result<Vec<MetricsRow>> {
    let mut table_keys: Vec<_> = Vec::new();
    for c in jobs.iter().filter(|c| c.scheme == Scheme::MapMesh) {
        if !table_keys.contains(&c.table_params()) {
            table_keys.push(c.table_params());
        }
    }
    let mut seed_list: Vec<u64> = jobs.iter().map(|c| c.seed).collect();
    seed_list.sort_unstable();
    seed_list.dedup();

    pool(workers)?.install(|| {
        let tables: Vec<_> = table_keys.par_iter().map(|p| w.tables(p)).collect();
        let devices: Vec<DeviceSet> = seed_list.par_iter().map(|&s| place_devices(&w.map, base.density, s)).collect();
        jobs.par_iter()
            .map(|c| {
                let t = table_keys.iter().position(|p| *p == c.table_params()).map(|i| tables[i].as_slice());
                let d = &devices[seed_list.binary_search(&c.seed).expect("seed listed")];
                let m = run(&c.scenario(w, d, t.filter(|_| c.scheme == Scheme::MapMesh))).map_err(sim_error)?;
                Ok(MetricsRow::new(&c.name, c, c.seed, &m))
            })
            .collect()
    })
}

fn sweep(a: &ScenarioArgs, grid: SweepGrid, par: &ParallelArgs, out: Option<&Path>, format: Format) -> Result<()> {
    let base = resolve(a)?;
    let schemes = or_base(grid.schemes, base.scheme);
    let ells = or_base(grid.ells, base.ell);
    let widths = or_base(grid.widths, base.conduit_width);
    let ks = or_base(grid.ks, base.k);
    let seeds = seeds(&base, par)?;

    // Width and metric only shape the tables, so the baselines run once per
    // loss level and seed.
    let mut jobs = Vec::new();
    for &scheme in &schemes {
        let (ws, kk) = if scheme == Scheme::MapMesh {
            (widths.clone(), ks.clone())
        } else {
            (vec![base.conduit_width], vec![base.k])
        };
        for &conduit_width in &ws {
            for &k in &kk {
                for &ell in &ells {
                    for &seed in &seeds {
                        let c = ScenarioConfig {
                            scheme,
                            conduit_width,
                            k,
                            ell,
                            seed,
                            ..base.clone()
                        };
                        c.validate().map_err(invalid)?;
                        jobs.push(c);
                    }
                }
            }
        }
    }
    let w = world(a, &base)?;
    let rows = run_all(&w, &base, &jobs, par.workers)?;
    eprintln!("{} scenarios", rows.len());
    output::metrics(out, format, "sweep", &base, &rows)
}

/// One seed of a three-way comparison, or the mean over seeds.
#[derive(Debug, Serialize)]
struct CompareRow {
    seed: String,
    ell: f64,
    mapmesh_delivery_rate: f64,
    gpsr_delivery_rate: f64,
    gpsr15_delivery_rate: f64,
    mapmesh_transmissions: f64,
    gpsr_transmissions: f64,
    gpsr15_transmissions: f64,
}

fn compare(a: &ScenarioArgs, par: &ParallelArgs, out: Option<&Path>, format: Format) -> Result<()> {
    let base = resolve(a)?;
    let seeds = seeds(&base, par)?;
    let schemes = [
        Scheme::MapMesh,
        Scheme::Gpsr { location_error: 0.0 },
        Scheme::Gpsr { location_error: 15.0 },
    ];
    let jobs: Vec<ScenarioConfig> = schemes
        .iter()
        .flat_map(|&scheme| seeds.iter().map(move |&seed| (scheme, seed)))
        .map(|(scheme, seed)| ScenarioConfig {
            scheme,
            seed,
            ..base.clone()
        })
        .collect();
    let w = world(a, &base)?;
    let metrics = run_all(&w, &base, &jobs, par.workers)?;
    let n = seeds.len();
    let mut rows: Vec<CompareRow> = seeds
        .iter()
        .enumerate()
        .map(|(i, seed)| {
            let (m, g, g15) = (&metrics[i], &metrics[n + i], &metrics[2 * n + i]);
            CompareRow {
                seed: seed.to_string(),
                ell: base.ell,
                mapmesh_delivery_rate: m.delivery_rate,
                gpsr_delivery_rate: g.delivery_rate,
                gpsr15_delivery_rate: g15.delivery_rate,
                mapmesh_transmissions: m.transmissions as f64,
                gpsr_transmissions: g.transmissions as f64,
                gpsr15_transmissions: g15.transmissions as f64,
            }
        })
        .collect();
    let mean = |f: fn(&CompareRow) -> f64| rows.iter().map(f).sum::<f64>() / n as f64;
    let summary = CompareRow {
        seed: "mean".into(),
        ell: base.ell,
        mapmesh_delivery_rate: mean(|r| r.mapmesh_delivery_rate),
        gpsr_delivery_rate: mean(|r| r.gpsr_delivery_rate),
        gpsr15_delivery_rate: mean(|r| r.gpsr15_delivery_rate),
        mapmesh_transmissions: mean(|r| r.mapmesh_transmissions),
        gpsr_transmissions: mean(|r| r.gpsr_transmissions),
        gpsr15_transmissions: mean(|r| r.gpsr15_transmissions),
    };
    eprintln!(
        "delivery over {n} seeds: mapmesh {:.3}, gpsr {:.3}, gpsr-15 {:.3}",
        summary.mapmesh_delivery_rate, summary.gpsr_delivery_rate, summary.gpsr15_delivery_rate
    );
    rows.push(summary);
    output::records(out, format, "compare", &base, &rows)
}

fn synth(city: &SynthCity, out: Option<&Path>) -> Result<()> {
    let map = match *city {
        SynthCity::Grid { nx, ny, size, pitch } => {
            if nx == 0 || ny == 0 {
                return Err(invalid("--nx and --ny must be at least 1"));
            }
            positive("size", size)?;
            if pitch.is_nan() || pitch <= size {
                return Err(invalid(format!("--pitch ({pitch}) must exceed --size ({size})")));
            }
            grid_city(nx, ny, size, pitch)
        }
        SynthCity::Block { buildings, seed } => {
            if buildings == 0 {
                return Err(invalid("--buildings must be at least 1"));
            }
            block_city(buildings, seed)
        }
    };
    let mut w = output::sink(out)?;
    serde_json::to_writer(&mut w, &to_geojson(&map))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_end_inclusive() {
        let r = parse_ranges("20:200:10").unwrap();
        assert_eq!(r.len(), 19);
        assert_eq!(r[0], 20.0);
        assert_eq!(r[18], 200.0);
        assert_eq!(parse_ranges("50:50:5").unwrap(), vec![50.0]);
    }

    #[test]
    fn bad_ranges_are_rejected() {
        for text in ["20:200", "a:b:c", "20:10:5", "20:200:0", "0:10:1"] {
            assert!(parse_ranges(text).is_err(), "{text}");
        }
    }
}
