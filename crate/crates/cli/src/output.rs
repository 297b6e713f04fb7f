use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        Format::from_str(text, true).map_err(|_| {
            CliError::Validation(format!("unknown format '{text}' (expected json or csv)"))
        })
    }
}

/// Attached to every artifact: enough to re-run the command exactly.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: C,
}

impl<C: Serialize> Metadata<C> {
    pub fn new(command: &'static str, seed: Option<u64>, config: C) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config,
        }
    }

    /// Compact JSON behind a `#`, for the head of CSV output.
    pub fn csv_comment(&self) -> Result<String, CliError> {
        let json = serde_json::to_string(self).map_err(|e| CliError::Output(e.to_string()))?;
        Ok(format!("# {json}\n"))
    }
}

#[derive(Serialize)]
pub struct Artifact<'a, C: Serialize, R: Serialize> {
    pub metadata: &'a Metadata<C>,
    pub result: &'a R,
}

pub fn to_json<C: Serialize, R: Serialize>(
    meta: &Metadata<C>,
    result: &R,
) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(&Artifact {
        metadata: meta,
        result,
    })
    .map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Full double precision: 17 significant digits.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn csv_line<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut line = fields
        .into_iter()
        .map(|s| s.as_ref().to_owned())
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

/// Writes to `path`, or to standard output when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Output(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6442.96, f64::MAX] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }
}
