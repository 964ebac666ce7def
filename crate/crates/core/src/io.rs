//! Serialization helpers and shared artifact conventions.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::Serializer;

use crate::error::Result;
use crate::poly::Poly;

/// Version stamped into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DUVAL_OUT_DIR";

/// Output directory: `explicit`, else `$DUVAL_OUT_DIR`, else the current
/// directory.
pub fn out_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

pub(crate) fn ser_poly<S: Serializer>(p: &Poly, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&p.to_string())
}

pub(crate) fn ser_polys<S: Serializer>(
    ps: &[Poly],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(ps.iter().map(|p| p.to_string()))
}

pub(crate) fn ser_display<T: Display, S: Serializer>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: serde::Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    write_text(path, &to_json_string(v)?)
}

/// `path` if absolute, else `path` inside [`out_dir`].
pub fn resolve_out(explicit_dir: Option<&Path>, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        out_dir(explicit_dir).join(path)
    }
}

/// Writes `body`, creating parent directories.
pub fn write_text(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, body)?;
    Ok(())
}

/// Shortest round-trip text of a float, with an exponent for very small or
/// large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
