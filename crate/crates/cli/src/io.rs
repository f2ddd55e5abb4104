use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use texmatch_core::search::TemplateSet;
use texmatch_core::template::{deserialize, serialize};
use texmatch_core::TextureTemplate;

use crate::{CliError, CliResult};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.into(), source }
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(io_err(path))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

/// Writes to `--out` when given, otherwise to standard output.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

pub fn read_template(path: &Path) -> CliResult<TextureTemplate> {
    let bytes = read_bytes(path)?;
    deserialize(&bytes).map_err(|e| CliError::Malformed { path: path.into(), msg: e.to_string() })
}

pub fn write_template(path: &Path, t: &TextureTemplate) -> CliResult<()> {
    let bytes = serialize(t).map_err(|e| CliError::core(path, e))?;
    write_file(path, &bytes)
}

pub fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Io { path: path.into(), source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file") })
    }
}

/// Query identifier of a template file: the file name up to its first dot,
/// so `q01.e1.ftt` and `q01.t.ftt` belong to query `q01`.
pub fn query_id(path: &Path) -> Option<String> {
    let name = path.file_name()?.to_str()?;
    let stem = name.split('.').next()?;
    (!stem.is_empty()).then(|| stem.to_string())
}

/// Loads every `*.ftt` in `dir`, grouped into one template set per query id.
pub fn load_queries(dir: &Path) -> CliResult<Vec<TemplateSet>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(dir)))
        .collect::<CliResult<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "ftt"))
        .collect();
    paths.sort();
    let mut sets: BTreeMap<String, TemplateSet> = BTreeMap::new();
    for p in paths {
        let id = query_id(&p).ok_or_else(|| CliError::Contract(format!("{}: cannot derive a query id", p.display())))?;
        let t = read_template(&p)?;
        let set = sets.entry(id.clone()).or_insert_with(|| TemplateSet { id: id.clone(), templates: BTreeMap::new() });
        if set.templates.insert(t.variant, t).is_some() {
            return Err(CliError::Contract(format!("query {id} has two templates of the same variant ({})", p.display())));
        }
    }
    if sets.is_empty() {
        return Err(CliError::Contract(format!("{}: no .ftt query templates", dir.display())));
    }
    Ok(sets.into_values().collect())
}
