pub mod gendata;
pub mod plot;
pub mod run;
pub mod sweep;
pub mod verify;

use std::path::Path;

use proxskip_core::error::{Error, Result};

use crate::config::ExperimentConfig;

/// Comment block embedding the full resolved config plus extra resolved
/// values, prepended to every output file for provenance.
pub fn provenance(config: &ExperimentConfig, extra: &[(&str, String)]) -> String {
    let mut s = String::new();
    for line in config.to_text().lines() {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    for (k, v) in extra {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}
