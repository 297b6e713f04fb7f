//! Optional JSON run configuration. Every key mirrors a command-line flag;
//! flags given on the command line take precedence. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    List(Vec<usize>),
    Text(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub cov: Option<PathBuf>,
    pub n: Option<usize>,
    pub q: Option<usize>,
    pub q_grid: Option<GridValue>,
    pub penalty: Option<String>,
    pub scaling: Option<String>,
    pub em_iters: Option<usize>,
    pub newton_iters: Option<usize>,
    pub tol: Option<f64>,
    pub setting: Option<String>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub estimators: Option<Vec<String>>,
    pub threads: Option<usize>,
    pub p: Option<usize>,
    pub grid_points: Option<usize>,
    pub format: Option<String>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn q_grid_text(&self) -> Option<String> {
        self.q_grid.as_ref().map(|g| match g {
            GridValue::Text(t) => t.clone(),
            GridValue::List(v) => v.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"q": 2, "qq": 3}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn grid_accepts_text_or_list() {
        let a: RunConfig = serde_json::from_str(r#"{"q_grid": "1..3"}"#).unwrap();
        let b: RunConfig = serde_json::from_str(r#"{"q_grid": [1, 2, 3]}"#).unwrap();
        assert_eq!(a.q_grid_text().unwrap(), "1..3");
        assert_eq!(b.q_grid_text().unwrap(), "1,2,3");
    }
}
