//! Shared plumbing for the text artifacts: provenance header line and atomic
//! writes.

use std::io::Write;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// `# selfcomp <kind> v1 config=<json>` followed by a newline.
pub fn header_line(kind: &str, config: &RunConfig) -> String {
    let json = serde_json::to_string(config).expect("RunConfig serializes");
    format!("# selfcomp {kind} v{FORMAT_VERSION} config={json}\n")
}

pub(crate) fn parse_header(
    path: &Path,
    line: Option<(usize, &str)>,
    kind: &str,
) -> Result<RunConfig> {
    let prefix = format!("# selfcomp {kind} v{FORMAT_VERSION} config=");
    let (no, l) = line.ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let json = l
        .strip_prefix(&prefix)
        .ok_or_else(|| Error::parse(path, no, format!("expected header '{prefix}...'")))?;
    serde_json::from_str(json).map_err(|e| Error::parse(path, no, format!("config: {e}")))
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
