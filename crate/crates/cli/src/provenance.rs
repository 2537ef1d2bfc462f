//! Every output file gets a `<file>.meta.json` sidecar recording the tool
//! version, the command line and the fully resolved configuration.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Serialize)]
struct Meta<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    argv: Vec<String>,
    config: &'a C,
}

pub fn meta_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        return out.join("meta.json");
    }
    let mut s: OsString = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn record<C: Serialize>(out: &Path, command: &str, config: &C) -> Result<()> {
    let meta = Meta {
        tool: "biastrace",
        version: env!("CARGO_PKG_VERSION"),
        command,
        argv: std::env::args().collect(),
        config,
    };
    let path = meta_path(out);
    let text = serde_json::to_string_pretty(&meta)?;
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
