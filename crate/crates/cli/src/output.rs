//! Artifact files: a header line, then one JSON value per line. Files are
//! written to a temporary sibling and renamed into place when complete.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toolsim_core::hash::fnv64;

pub const ARTIFACT: &str = "toolsim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub artifact: String,
    pub version: String,
    pub kind: String,
    pub config_hash: String,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: Header,
}

impl Header {
    pub fn new(kind: &str, config: &impl Serialize) -> Self {
        let bytes = serde_json::to_vec(config).expect("configs serialize");
        Self {
            artifact: ARTIFACT.to_string(),
            version: VERSION.to_string(),
            kind: kind.to_string(),
            config_hash: format!("{:016x}", fnv64(&bytes)),
        }
    }
}

/// `base` with `suffix` appended to its file name: `out.jsonl` becomes
/// `out.records.jsonl` for suffix `records`.
pub fn sibling(base: &Path, suffix: &str) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.{suffix}.{ext}"),
        None => format!("{stem}.{suffix}"),
    };
    base.with_file_name(name)
}

/// Writes the header and `items` as JSON lines to a temporary sibling, then
/// renames it over `path`.
pub fn write_jsonl<T: Serialize>(path: &Path, header: &Header, items: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let name = path.file_name().context("output path has no file name")?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".partial-{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let written = (|| -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(&tmp)?);
        serde_json::to_writer(&mut w, &HeaderLine { header: header.clone() })?;
        w.write_all(b"\n")?;
        for item in items {
            serde_json::to_writer(&mut w, item)?;
            w.write_all(b"\n")?;
        }
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    })();
    if written.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    written.with_context(|| format!("writing {}", path.display()))
}

/// Reads a file written by [`write_jsonl`].
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<(Header, Vec<T>)> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines.next().context("empty file")??;
    let header = serde_json::from_str::<HeaderLine>(&first)
        .with_context(|| format!("{}: first line is not a header", path.display()))?
        .header;
    if header.artifact != ARTIFACT {
        bail!("{}: not a {ARTIFACT} artifact", path.display());
    }
    let mut items = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).with_context(|| format!("{}: line {}", path.display(), i + 2))?);
    }
    Ok((header, items))
}

/// Only the header of a file.
pub fn read_header(path: &Path) -> Result<Header> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let first = BufReader::new(file).lines().next().context("empty file")??;
    Ok(serde_json::from_str::<HeaderLine>(&first)
        .with_context(|| format!("{}: first line is not a header", path.display()))?
        .header)
}
