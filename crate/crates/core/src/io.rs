//! Output files: header comment lines and atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Error;

/// Comment line identifying the configuration that produced a file.
pub fn header_line(config_hash: &str) -> String {
    format!("# config-sha256: {config_hash}\n")
}

/// Write `body` to `path` through a temporary sibling file and a rename, prefixed by
/// `header` when given.
pub fn write_atomic(path: &Path, header: Option<&str>, body: &[u8]) -> Result<(), Error> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        if let Some(h) = header {
            f.write_all(h.as_bytes())?;
        }
        f.write_all(body)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Render a CSV writer callback into bytes.
pub fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_body() {
        let dir = std::env::temp_dir().join(format!("bhlab-io-{}", std::process::id()));
        let path = dir.join("out.csv");
        write_atomic(&path, Some(&header_line("abc")), b"x,y\n").unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "# config-sha256: abc\nx,y\n"
        );
        fs::remove_dir_all(dir).unwrap();
    }
}
