//! Output-file plumbing: CSV writing with the config-hash comment row and
//! the JSON run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::config::ExperimentConfig;

pub fn write_text(dir: &Path, name: &str, text: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path)?;
    f.write_all(text.as_bytes())?;
    Ok(path)
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 8);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// Writes `run_manifest.json`: the command, the canonical config echo, the
/// crate version, produced files and wall-clock timings.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    outputs: &[PathBuf],
    elapsed: Duration,
) -> std::io::Result<PathBuf> {
    let files = outputs
        .iter()
        .map(|p| format!("\"{}\"", json_escape(&p.display().to_string())))
        .collect::<Vec<_>>()
        .join(",");
    let manifest = format!(
        "{{\n  \"command\": \"{}\",\n  \"version\": \"{}\",\n  \"config_hash\": \"{}\",\n  \"config\": \"{}\",\n  \"outputs\": [{}],\n  \"elapsed_seconds\": {:?}\n}}\n",
        json_escape(command),
        env!("CARGO_PKG_VERSION"),
        cfg.hash(),
        json_escape(&cfg.dump()),
        files,
        elapsed.as_secs_f64(),
    );
    write_text(dir, "run_manifest.json", &manifest)
}

/// Renders `(i64, f64)` rows with a header and the hash comment.
pub fn curve_csv(config_hash: &str, header: &str, rows: &[(i64, f64)]) -> String {
    let mut out = format!("# config_hash={config_hash}\n{header}\n");
    for (a, b) in rows {
        out.push_str(&format!("{a},{b:?}\n"));
    }
    out
}

/// Renders `(usize, f64)` rows with a header and the hash comment.
pub fn summary_csv(config_hash: &str, header: &str, rows: &[(usize, f64)]) -> String {
    let mut out = format!("# config_hash={config_hash}\n{header}\n");
    for (a, b) in rows {
        out.push_str(&format!("{a},{b:?}\n"));
    }
    out
}

/// Renders `(usize, f64, f64)` rows with a header and the hash comment.
pub fn triple_csv(config_hash: &str, header: &str, rows: &[(usize, f64, f64)]) -> String {
    let mut out = format!("# config_hash={config_hash}\n{header}\n");
    for (a, b, c) in rows {
        out.push_str(&format!("{a},{b:?},{c:?}\n"));
    }
    out
}
