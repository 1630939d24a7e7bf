//! CSV ingestion and serialization.
//!
//! The observation format is fixed: UTF-8, comma separator, decimal point,
//! header `x,y,value`. Lines starting with `#` are metadata comments and are
//! ignored on input. Floating-point values are serialized with 17 significant
//! digits so that parsing the file back reproduces every double exactly.

use std::fmt::Write as _;
use std::path::Path;

use geofield::{Observations, Site};

use crate::CliError;

/// Serializes a double losslessly (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads an observations CSV. Errors carry 1-based line numbers that count
/// every line of the file, comments included.
pub fn read_observations(path: &Path) -> Result<Observations, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let parse_err = |line: usize, message: String| CliError::Parse {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut sites = Vec::new();
    let mut values = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !header_seen {
            if line != "x,y,value" {
                return Err(parse_err(
                    line_no,
                    format!("expected header \"x,y,value\", got {line:?}"),
                ));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                line_no,
                format!("expected 3 fields, got {}", fields.len()),
            ));
        }
        let mut parsed = [0.0f64; 3];
        for (k, field) in fields.iter().enumerate() {
            parsed[k] = field.trim().parse().map_err(|_| {
                parse_err(line_no, format!("invalid number {:?}", field.trim()))
            })?;
        }
        let site = Site::new(parsed[0], parsed[1])
            .map_err(|e| parse_err(line_no, e.to_string()))?;
        sites.push(site);
        values.push(parsed[2]);
    }
    if !header_seen {
        return Err(parse_err(1, "missing header \"x,y,value\"".into()));
    }
    Observations::new(sites, values).map_err(|e| CliError::Core(e.stage("input")))
}

/// Serializes observations, with optional `# key: value` metadata lines
/// ahead of the header.
pub fn observations_csv(obs: &Observations, metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str("x,y,value\n");
    for i in 0..obs.len() {
        let s = obs.site(i);
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(s.x()),
            fmt_f64(s.y()),
            fmt_f64(obs.value(i))
        );
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
