//! CSV ingestion. Lines starting with `#` are skipped, and a first row
//! that does not parse as numbers is taken as a header.

use std::path::Path;

use mspl::{sample_moments, DMatrix, SampleMoments};

use crate::error::CliError;

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_matrix(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>, String> {
    let body: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("malformed CSV: {e}"))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => rows.push(values),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(format!("row {}: non-numeric field", i + 1)),
        }
    }
    if rows.is_empty() {
        return Err("no numeric rows".into());
    }
    let width = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != width) {
        return Err(format!(
            "row {} has {} fields, expected {width}",
            bad + 1,
            rows[bad].len()
        ));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err("non-finite value".into());
    }
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

/// Either raw observations (`n x p`) or a covariance/correlation matrix with
/// its sample size.
pub fn load_moments(
    data: Option<&Path>,
    cov: Option<&Path>,
    n: Option<usize>,
) -> Result<SampleMoments, CliError> {
    match (data, cov) {
        (Some(path), None) => {
            if n.is_some() {
                return Err(CliError::Validation(
                    "--n is only used with --cov; raw data carry their own sample size".into(),
                ));
            }
            Ok(sample_moments(&read_matrix(path)?)?)
        }
        (None, Some(path)) => {
            let n = n.ok_or_else(|| {
                CliError::Validation("--cov requires --n (the sample size)".into())
            })?;
            let m = read_matrix(path)?;
            if m.nrows() != m.ncols() {
                return Err(CliError::Validation(format!(
                    "covariance must be square, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            Ok(SampleMoments::from_covariance(m, n)?)
        }
        _ => Err(CliError::Validation(
            "give exactly one of --data or --cov".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_comments_are_skipped() {
        let m = parse_matrix("# note\na,b\n1,2\n3, 4\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn ragged_and_non_numeric_rows_are_rejected() {
        assert!(parse_matrix("1,2\n3\n").is_err());
        assert!(parse_matrix("1,2\n3,x\n").is_err());
        assert!(parse_matrix("a,b\n").is_err());
        assert!(parse_matrix("1,NaN\n").is_err());
    }

    #[test]
    fn full_precision_values_survive() {
        let v = 0.1_f64 + 0.2;
        let m = parse_matrix(&format!("{v:.16e}\n")).unwrap();
        assert_eq!(m[(0, 0)], v);
    }
}
