//! Parsers for penalty, scaling, estimator and grid arguments.

use mspl::{PenaltyFamily, PenaltySpec, Scaling};

use crate::error::CliError;

const ALIAS_NOTICE: &str = "notice: the author names attached to the two penalties are used \
inconsistently in the literature; 'akaike' is read as loading-trace and 'hirose' as sample-variance";

/// Family name or alias. Aliases print a one-line notice on standard error.
pub fn family(name: &str) -> Result<PenaltyFamily, CliError> {
    let family = match name.trim().to_ascii_lowercase().as_str() {
        "none" | "ml" => PenaltyFamily::None,
        "loading-trace" | "loading_trace" => PenaltyFamily::LoadingTrace,
        "sample-variance" | "sample_variance" => PenaltyFamily::SampleVariance,
        "akaike" => {
            eprintln!("{ALIAS_NOTICE}");
            PenaltyFamily::LoadingTrace
        }
        "hirose" => {
            eprintln!("{ALIAS_NOTICE}");
            PenaltyFamily::SampleVariance
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown penalty '{other}' (expected none, loading-trace, sample-variance, akaike or hirose)"
            )))
        }
    };
    Ok(family)
}

/// `soft`, `vanilla:RHO` (or plain `vanilla` for rho = 1) or `custom:RHO`.
pub fn scaling(text: &str) -> Result<Scaling, CliError> {
    let text = text.trim();
    let (kind, rho) = match text.split_once(':') {
        Some((k, r)) => (k, Some(r)),
        None => (text, None),
    };
    let rho = rho
        .map(|r| {
            r.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Validation(format!("bad rho in scaling '{text}'")))
        })
        .transpose()?;
    match (kind.to_ascii_lowercase().as_str(), rho) {
        ("soft", None) => Ok(Scaling::Soft),
        ("vanilla", r) => Ok(Scaling::Vanilla(r.unwrap_or(1.0))),
        ("custom", Some(r)) => Ok(Scaling::Custom(r)),
        _ => Err(CliError::Validation(format!(
            "unknown scaling '{text}' (expected soft, vanilla:RHO or custom:RHO)"
        ))),
    }
}

pub fn penalty(family_name: &str, scaling_text: &str) -> Result<PenaltySpec, CliError> {
    let family = family(family_name)?;
    if family == PenaltyFamily::None {
        return Ok(PenaltySpec::none());
    }
    Ok(PenaltySpec::new(family, scaling(scaling_text)?)?)
}

/// `FAMILY` or `FAMILY:SCALING`, e.g. `none`, `loading-trace:soft`,
/// `hirose:vanilla:1`. The scaling defaults to soft.
pub fn estimator(text: &str) -> Result<PenaltySpec, CliError> {
    match text.trim().split_once(':') {
        Some((f, s)) => penalty(f, s),
        None => penalty(text, "soft"),
    }
}

pub fn estimators(text: &str) -> Result<Vec<PenaltySpec>, CliError> {
    let list: Vec<PenaltySpec> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(estimator)
        .collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err(CliError::Validation("no estimators given".into()));
    }
    Ok(list)
}

/// `A..B` (inclusive) or a comma list such as `1,2,4`.
pub fn grid(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || {
        CliError::Validation(format!(
            "bad q grid '{text}' (expected A..B or a comma list)"
        ))
    };
    let text = text.trim();
    let grid: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(CliError::Validation("empty q grid".into()));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_and_aliases() {
        assert_eq!(family("akaike").unwrap(), PenaltyFamily::LoadingTrace);
        assert_eq!(family("Hirose").unwrap(), PenaltyFamily::SampleVariance);
        assert_eq!(
            family("sample_variance").unwrap(),
            PenaltyFamily::SampleVariance
        );
        assert!(family("ridge").is_err());
    }

    #[test]
    fn scalings() {
        assert_eq!(scaling("soft").unwrap(), Scaling::Soft);
        assert_eq!(scaling("vanilla:0.5").unwrap(), Scaling::Vanilla(0.5));
        assert_eq!(scaling("vanilla").unwrap(), Scaling::Vanilla(1.0));
        assert_eq!(scaling("custom:2").unwrap(), Scaling::Custom(2.0));
        assert!(scaling("custom").is_err());
        assert!(scaling("soft:1").is_err());
        assert!(penalty("loading-trace", "vanilla:-1").is_err());
    }

    #[test]
    fn estimator_lists() {
        let e = estimators("none,hirose:vanilla:1,loading-trace").unwrap();
        assert_eq!(e[0], PenaltySpec::none());
        assert_eq!(
            e[1],
            PenaltySpec::vanilla(PenaltyFamily::SampleVariance, 1.0).unwrap()
        );
        assert_eq!(e[2], PenaltySpec::soft(PenaltyFamily::LoadingTrace));
        assert!(estimators(",").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(grid("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(grid("3,1").unwrap(), vec![3, 1]);
        assert!(grid("").is_err());
        assert!(grid("4..2").is_err());
        assert!(grid("a..2").is_err());
    }
}
