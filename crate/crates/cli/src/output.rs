//! All-or-nothing artifact writes: content goes to a temporary sibling and is
//! renamed into place only once complete.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::{CliResult, Failure};

fn sibling(path: &Path, tag: &str) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.{tag}-{}", std::process::id()))
}

fn ensure_parent(path: &Path) -> io::Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p),
        _ => Ok(()),
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult {
    let fail = |e: io::Error| Failure(format!("{}: {e}", path.display()));
    ensure_parent(path).map_err(fail)?;
    let tmp = sibling(path, "tmp");
    let written = fs::File::create(&tmp).and_then(|mut f| {
        f.write_all(bytes)?;
        f.sync_all()
    });
    if let Err(e) = written.and_then(|_| fs::rename(&tmp, path)) {
        let _ = fs::remove_file(&tmp);
        return Err(fail(e));
    }
    Ok(())
}

/// Builds a directory with `fill` and moves it to `dir`. An existing empty
/// directory is replaced; a non-empty one is an error.
pub fn write_dir_atomic(dir: &Path, fill: impl FnOnce(&Path) -> CliResult) -> CliResult {
    let fail = |e: io::Error| Failure(format!("{}: {e}", dir.display()));
    if dir.exists() {
        let empty = dir.is_dir() && fs::read_dir(dir).map_err(fail)?.next().is_none();
        if !empty {
            return Err(Failure(format!("{}: already exists and is not empty", dir.display())));
        }
    }
    ensure_parent(dir).map_err(fail)?;
    let tmp = sibling(dir, "partial");
    let _ = fs::remove_dir_all(&tmp);
    fs::create_dir_all(&tmp).map_err(fail)?;
    let result = fill(&tmp).and_then(|()| {
        if dir.exists() {
            fs::remove_dir(dir).map_err(fail)?;
        }
        fs::rename(&tmp, dir).map_err(fail)
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&tmp);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_write_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.json");
        write_atomic(&path, b"{}").unwrap();
        write_atomic(&path, b"[1]").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"[1]");
        let names: Vec<_> = fs::read_dir(dir.path().join("sub"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names, vec![std::ffi::OsString::from("out.json")]);
    }

    #[test]
    fn failed_directory_fill_leaves_nothing() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("seq");
        let err = write_dir_atomic(&dir, |tmp| {
            fs::write(tmp.join("half"), b"x").unwrap();
            Err(Failure("boom".into()))
        });
        assert!(err.is_err());
        assert!(!dir.exists());
        assert_eq!(fs::read_dir(root.path()).unwrap().count(), 0);
    }

    #[test]
    fn non_empty_target_is_refused() {
        let root = tempfile::tempdir().unwrap();
        fs::write(root.path().join("keep"), b"x").unwrap();
        let err = write_dir_atomic(root.path(), |_| Ok(())).unwrap_err();
        assert!(err.to_string().contains("not empty"));
        assert!(root.path().join("keep").exists());
    }
}
