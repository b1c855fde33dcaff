use std::fs;
use std::path::Path;

use affectbench::Error;
use serde::Serialize;
use serde_json::Value;

use crate::args::Cli;
use crate::CliResult;

pub const RUN_CONFIG: &str = "run_config.json";

/// Provenance written next to every result. Holds no timestamps or host
/// details, so reruns are byte-identical.
#[derive(Debug, Serialize)]
struct RunConfig<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    params: Value,
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T, context: &Path) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        context: context.display().to_string(),
        source,
    })?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_text(path, &to_json(value, path)?)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })?)
}

pub fn write_run_config(out: &Path, cli: &Cli, command: &str, params: Value) -> CliResult<()> {
    ensure_dir(out)?;
    let cfg = RunConfig {
        tool: "affectbench",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cli.seed,
        params,
    };
    write_json(&out.join(RUN_CONFIG), &cfg)
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}
