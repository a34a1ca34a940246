use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use mapmesh_core::simnet::{write_metrics_csv, MetricsRow, ScenarioConfig};

use crate::args::Format;

/// Buffered writer on `path`, or standard output.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Settings the artifact was produced with, as `#` comment lines.
pub fn header(out: &mut dyn Write, command: &str, settings: &[(&str, String)]) -> io::Result<()> {
    writeln!(out, "# mapmesh {command} {}", env!("CARGO_PKG_VERSION"))?;
    for (key, value) in settings {
        writeln!(out, "# {key} = {value}")?;
    }
    Ok(())
}

/// Effective scenario settings as `#` comment lines.
pub fn scenario_header(out: &mut dyn Write, command: &str, cfg: &ScenarioConfig) -> io::Result<()> {
    writeln!(out, "# mapmesh {command} {}", env!("CARGO_PKG_VERSION"))?;
    for line in cfg.to_toml().lines().filter(|l| !l.is_empty()) {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Report<'a, R> {
    tool: &'static str,
    command: &'a str,
    config: &'a ScenarioConfig,
    rows: &'a [R],
}

fn json<R: Serialize>(out: &mut dyn Write, command: &str, cfg: &ScenarioConfig, rows: &[R]) -> Result<()> {
    let report = Report {
        tool: concat!("mapmesh ", env!("CARGO_PKG_VERSION")),
        command,
        config: cfg,
        rows,
    };
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)?;
    Ok(())
}

pub fn metrics(path: Option<&Path>, format: Format, command: &str, cfg: &ScenarioConfig, rows: &[MetricsRow]) -> Result<()> {
    let mut out = sink(path)?;
    match format {
        Format::Csv => {
            scenario_header(&mut out, command, cfg)?;
            write_metrics_csv(rows, &mut out)?;
        }
        Format::Json => json(&mut out, command, cfg, rows)?,
    }
    out.flush()?;
    Ok(())
}

/// Rows of any serializable record type, headed by the scenario settings.
pub fn records<R: Serialize>(path: Option<&Path>, format: Format, command: &str, cfg: &ScenarioConfig, rows: &[R]) -> Result<()> {
    let mut out = sink(path)?;
    match format {
        Format::Csv => {
            scenario_header(&mut out, command, cfg)?;
            let mut w = csv::Writer::from_writer(&mut out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => json(&mut out, command, cfg, rows)?,
    }
    out.flush()?;
    Ok(())
}
