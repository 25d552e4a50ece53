use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use msnet_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn with_path(e: io::Error, path: &Path) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Prefix errors raised while reading `path` with its name.
pub fn in_file(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(e) => with_path(e, path),
        Error::Format { offset, message } => Error::Format {
            offset,
            message: format!("{}: {message}", path.display()),
        },
        Error::Row { row, id, message } => Error::Row {
            row,
            id,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| with_path(e, path))
}

pub fn reader(path: &Path) -> Result<BufReader<File>> {
    open(path).map(BufReader::new)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| with_path(e, path))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| with_path(e, path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(reader(path)?)
        .map_err(|e| Error::Validation(format!("{}: invalid JSON: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, to_json(value).as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(bytes).and_then(|_| w.flush()).map_err(|e| with_path(e, path))
}
