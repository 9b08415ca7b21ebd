use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Failed write with the path involved.
#[derive(Debug)]
pub struct IoFailure {
    pub path: PathBuf,
    pub source: io::Error,
}

impl std::fmt::Display for IoFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.source)
    }
}

impl std::error::Error for IoFailure {}

/// Writes `contents` to `dir/name` via a temporary file in the same
/// directory and a rename, so readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, IoFailure> {
    let fail = |path: &Path, source| IoFailure {
        path: path.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| fail(dir, e))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
        fs::rename(&tmp, &target)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(fail(&target, e));
    }
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_and_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("a/b");
        write_atomic(&sub, "x.txt", b"one").unwrap();
        let p = write_atomic(&sub, "x.txt", b"two").unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "two");
        assert_eq!(fs::read_dir(&sub).unwrap().count(), 1);
    }

    #[test]
    fn unwritable_target_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "").unwrap();
        let err = write_atomic(&file, "x.txt", b"").unwrap_err();
        assert_eq!(err.path, file);
    }
}
