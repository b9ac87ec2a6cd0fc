//! Atomic artifact writes: temp file in the target directory, then rename.
//! A killed or failed run never leaves a partial file at the target path.

use std::io::Write;
use std::path::Path;

use crate::CliError;

pub fn write_atomic(
    path: &Path,
    emit: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    emit(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("renaming into {}: {}", path.display(), e.error)))?;
    Ok(())
}
