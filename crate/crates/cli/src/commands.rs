use std::path::{Path, PathBuf};

use mspl::{
    communalities, effective_rho, fit as fit_model, free_parameter_count, information_criteria,
    run_study, select_q, verify_existence_conditions, FitOptions, FitResult, HeywoodDiagnosis,
    LoadingSetting, PenaltySpec, ProbeConfig, SampleMoments, SimulationConfig, StudyReport,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::input::load_moments;
use crate::output::{csv_line, emit, num, to_json, Format, Metadata};
use crate::parse;
use crate::{
    CheckArgs, CovArgs, EstimatorArgs, FitArgs, InputArgs, OutputArgs, SelectArgs, SimulateArgs,
};

const EXIT_OK: u8 = 0;
const EXIT_PROBE_FAILED: u8 = 1;
const EXIT_HEYWOOD: u8 = 3;

#[derive(Debug, Clone, Serialize)]
struct InputConfig {
    data: Option<PathBuf>,
    cov: Option<PathBuf>,
    n: usize,
    p: usize,
}

#[derive(Debug, Clone, Serialize)]
struct EstimatorConfig {
    penalty: PenaltySpec,
    em_iters: usize,
    newton_iters: usize,
    tol: f64,
}

fn resolve_output(
    out: &OutputArgs,
    cfg: &RunConfig,
) -> Result<(Format, Option<PathBuf>), CliError> {
    let format = match (out.format, &cfg.format) {
        (Some(f), _) => f,
        (None, Some(text)) => Format::parse(text)?,
        (None, None) => Format::Json,
    };
    Ok((format, out.output.clone().or_else(|| cfg.output.clone())))
}

fn resolve_input(
    input: &InputArgs,
    cfg: &RunConfig,
) -> Result<(SampleMoments, InputConfig), CliError> {
    let data = input.data.clone().or_else(|| cfg.data.clone());
    let cov = input.cov.clone().or_else(|| cfg.cov.clone());
    let n = input.n.or(cfg.n);
    let moments = load_moments(data.as_deref(), cov.as_deref(), n)?;
    let resolved = InputConfig {
        data,
        cov,
        n: moments.n(),
        p: moments.p(),
    };
    Ok((moments, resolved))
}

fn resolve_estimator(
    penalty: Option<&str>,
    scaling: Option<&str>,
    em_iters: Option<usize>,
    newton_iters: Option<usize>,
    tol: Option<f64>,
    cfg: &RunConfig,
) -> Result<(FitOptions, EstimatorConfig), CliError> {
    let family = penalty.or(cfg.penalty.as_deref()).unwrap_or("none");
    let scaling = scaling.or(cfg.scaling.as_deref()).unwrap_or("soft");
    let spec = parse::penalty(family, scaling)?;
    let opts = fit_options(
        em_iters.or(cfg.em_iters),
        newton_iters.or(cfg.newton_iters),
        tol.or(cfg.tol),
    )?;
    let resolved = EstimatorConfig {
        penalty: spec,
        em_iters: opts.em_iterations,
        newton_iters: opts.newton_max_iterations,
        tol: opts.gradient_tolerance,
    };
    Ok((opts, resolved))
}

fn fit_options(
    em: Option<usize>,
    newton: Option<usize>,
    tol: Option<f64>,
) -> Result<FitOptions, CliError> {
    let mut opts = FitOptions::default();
    if let Some(v) = em {
        opts.em_iterations = v;
    }
    if let Some(v) = newton {
        opts.newton_max_iterations = v;
    }
    if let Some(v) = tol {
        opts.gradient_tolerance = v;
    }
    opts.validate()?;
    Ok(opts)
}

fn estimator_args(
    e: &EstimatorArgs,
    cfg: &RunConfig,
) -> Result<(FitOptions, EstimatorConfig), CliError> {
    resolve_estimator(
        e.penalty.as_deref(),
        e.scaling.as_deref(),
        e.em_iters,
        e.newton_iters,
        e.tol,
        cfg,
    )
}

#[derive(Debug, Serialize)]
struct FitOutput {
    p: usize,
    q: usize,
    n: usize,
    estimator: String,
    rho: f64,
    loadings: Vec<Vec<f64>>,
    uniquenesses: Vec<f64>,
    communalities: Vec<f64>,
    loglik: f64,
    penalty: f64,
    penalized_loglik: f64,
    k_free_params: usize,
    aic: f64,
    bic: f64,
    converged: bool,
    em_iterations: usize,
    newton_iterations: usize,
    max_newton_step: f64,
    heywood: HeywoodDiagnosis,
}

impl FitOutput {
    fn new(r: &FitResult, spec: &PenaltySpec, n: usize) -> Self {
        let (p, q) = (r.params.p(), r.params.q());
        let (aic, bic) = information_criteria(r.loglik, p, q, n);
        Self {
            p,
            q,
            n,
            estimator: spec.label(),
            rho: effective_rho(spec, n),
            loadings: r
                .params
                .loadings()
                .row_iter()
                .map(|row| row.iter().copied().collect())
                .collect(),
            uniquenesses: r.params.uniquenesses().iter().copied().collect(),
            communalities: communalities(&r.params).iter().copied().collect(),
            loglik: r.loglik,
            penalty: r.penalty,
            penalized_loglik: r.penalized_loglik,
            k_free_params: free_parameter_count(p, q),
            aic,
            bic,
            converged: r.converged,
            em_iterations: r.em_iterations,
            newton_iterations: r.newton_iterations,
            max_newton_step: r.max_newton_step,
            heywood: r.heywood.clone(),
        }
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        let scalars = [
            ("loglik", num(self.loglik)),
            ("penalty", num(self.penalty)),
            ("penalized_loglik", num(self.penalized_loglik)),
            ("aic", num(self.aic)),
            ("bic", num(self.bic)),
            ("k_free_params", self.k_free_params.to_string()),
            ("converged", self.converged.to_string()),
            ("heywood_flagged", self.heywood.flagged.to_string()),
            ("max_newton_step", num(self.max_newton_step)),
        ];
        for (k, v) in scalars {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut header = vec!["item".to_string()];
        header.extend((1..=self.q).map(|k| format!("loading_{k}")));
        header.push("uniqueness".into());
        header.push("communality".into());
        out.push_str(&csv_line(header));
        for j in 0..self.p {
            let mut row = vec![(j + 1).to_string()];
            row.extend(self.loadings[j].iter().map(|v| num(*v)));
            row.push(num(self.uniquenesses[j]));
            row.push(num(self.communalities[j]));
            out.push_str(&csv_line(row));
        }
        out
    }
}

#[derive(Debug, Serialize)]
struct FitConfig {
    input: InputConfig,
    q: usize,
    estimator: EstimatorConfig,
    format: Format,
}

pub fn fit(args: FitArgs) -> Result<u8, CliError> {
    let cfg = RunConfig::load(args.out.config.as_deref())?;
    let (format, output) = resolve_output(&args.out, &cfg)?;
    let (opts, estimator) = estimator_args(&args.estimator, &cfg)?;
    let q = args
        .q
        .or(cfg.q)
        .ok_or_else(|| CliError::Validation("--q is required".into()))?;
    let (moments, input) = resolve_input(&args.input, &cfg)?;
    let spec = estimator.penalty;
    let result = fit_model(&moments, q, &spec, &opts)?;
    let out = FitOutput::new(&result, &spec, moments.n());
    let meta = Metadata::new(
        "fit",
        None,
        FitConfig {
            input,
            q,
            estimator,
            format,
        },
    );
    let text = match format {
        Format::Json => to_json(&meta, &out)?,
        Format::Csv => meta.csv_comment()? + &out.to_csv(),
    };
    emit(output.as_deref(), &text)?;
    if out.heywood.flagged {
        eprintln!(
            "warning: Heywood case flagged ({:?}, min uniqueness {:.3e})",
            out.heywood.reasons, out.heywood.min_psi
        );
        return Ok(EXIT_HEYWOOD);
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct SelectConfig {
    input: InputConfig,
    q_grid: Vec<usize>,
    estimator: EstimatorConfig,
    format: Format,
}

pub fn select(args: SelectArgs) -> Result<u8, CliError> {
    let cfg = RunConfig::load(args.out.config.as_deref())?;
    let (format, output) = resolve_output(&args.out, &cfg)?;
    let (opts, estimator) = estimator_args(&args.estimator, &cfg)?;
    let grid_text = args
        .q_grid
        .clone()
        .or_else(|| cfg.q_grid_text())
        .ok_or_else(|| CliError::Validation("--q-grid is required".into()))?;
    let grid = parse::grid(&grid_text)?;
    let (moments, input) = resolve_input(&args.input, &cfg)?;
    if let Some(&bad) = grid.iter().find(|&&q| q == 0 || q >= moments.p()) {
        return Err(mspl::Error::InvalidFactorCount {
            p: moments.p(),
            q: bad,
        }
        .into());
    }
    let result = select_q(&moments, &grid, &estimator.penalty, &opts)?;
    let meta = Metadata::new(
        "select",
        None,
        SelectConfig {
            input,
            q_grid: result.per_q.iter().map(|r| r.q).collect(),
            estimator,
            format,
        },
    );
    let text = match format {
        Format::Json => to_json(&meta, &result)?,
        Format::Csv => {
            let mut s = meta.csv_comment()?;
            s.push_str(&format!(
                "# best_aic={}\n# best_bic={}\n",
                result.best_aic, result.best_bic
            ));
            s.push_str(&csv_line([
                "q",
                "loglik",
                "k_free_params",
                "aic",
                "bic",
                "heywood_flagged",
            ]));
            for r in &result.per_q {
                s.push_str(&csv_line([
                    r.q.to_string(),
                    num(r.loglik),
                    r.k_free_params.to_string(),
                    num(r.aic),
                    num(r.bic),
                    r.heywood_flagged.to_string(),
                ]));
            }
            s
        }
    };
    emit(output.as_deref(), &text)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct SimulateMeta {
    study: SimulationConfig,
    em_iters: usize,
    newton_iters: usize,
    tol: f64,
    format: Format,
}

fn replicates_path(explicit: Option<PathBuf>, output: Option<&Path>) -> Option<PathBuf> {
    explicit.or_else(|| {
        output.map(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            p.with_file_name(format!("{stem}.replicates.csv"))
        })
    })
}

pub fn simulate(args: SimulateArgs) -> Result<u8, CliError> {
    let cfg = RunConfig::load(args.out.config.as_deref())?;
    let (format, output) = resolve_output(&args.out, &cfg)?;
    let setting_name = args
        .setting
        .clone()
        .or_else(|| cfg.setting.clone())
        .ok_or_else(|| CliError::Validation("--setting is required".into()))?;
    let setting: LoadingSetting = setting_name.parse()?;
    let n = args
        .n
        .or(cfg.n)
        .ok_or_else(|| CliError::Validation("--n is required".into()))?;
    let replicates = args.replicates.or(cfg.replicates).unwrap_or(1000);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let estimators = match (&args.estimators, &cfg.estimators) {
        (Some(text), _) => parse::estimators(text)?,
        (None, Some(list)) => parse::estimators(&list.join(","))?,
        (None, None) => vec![PenaltySpec::none()],
    };
    let opts = fit_options(
        args.em_iters.or(cfg.em_iters),
        args.newton_iters.or(cfg.newton_iters),
        args.tol.or(cfg.tol),
    )?;
    let mut study = SimulationConfig::new(setting, n, replicates, seed).with_estimators(estimators);
    study.q_fit = args.q.or(cfg.q);
    if let Some(text) = args.q_grid.clone().or_else(|| cfg.q_grid_text()) {
        study = study.with_q_grid(parse::grid(&text)?);
    }
    study.fit_options = opts.clone();

    if let Some(threads) = args.threads.or(cfg.threads) {
        if threads == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let report = run_study(&study)?;
    eprintln!("study finished in {:.1}s", report.elapsed_seconds);

    let meta = Metadata::new(
        "simulate",
        Some(seed),
        SimulateMeta {
            study,
            em_iters: opts.em_iterations,
            newton_iters: opts.newton_max_iterations,
            tol: opts.gradient_tolerance,
            format,
        },
    );
    let text = match format {
        Format::Json => to_json(&meta, &report)?,
        Format::Csv => meta.csv_comment()? + &summary_csv(&report),
    };
    emit(output.as_deref(), &text)?;
    if let Some(path) = replicates_path(args.replicates_csv.clone(), output.as_deref()) {
        let text = meta.csv_comment()? + &replicates_csv(&report);
        emit(Some(&path), &text)?;
    }
    Ok(EXIT_OK)
}

fn summary_csv(report: &StudyReport) -> String {
    let grid = report.config.q_grid.clone().unwrap_or_default();
    let mut header: Vec<String> = [
        "estimator",
        "replicates",
        "heywood_count",
        "heywood_percent",
        "used_replicates",
        "mean_abs_bias",
        "mean_rmse",
        "mean_underestimation",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for crit in ["bic", "aic"] {
        header.extend(grid.iter().map(|q| format!("{crit}_percent_q{q}")));
    }
    let mut s = csv_line(header);
    for e in &report.estimators {
        let mut row = vec![
            e.label.clone(),
            e.replicates.to_string(),
            e.heywood_count.to_string(),
            num(e.heywood_percent),
            e.used_replicates.to_string(),
            num(e.mean_abs_bias),
            num(e.mean_rmse),
            num(e.mean_underestimation),
        ];
        if let Some(t) = &e.selection {
            row.extend(t.bic_percent.iter().map(|v| num(*v)));
            row.extend(t.aic_percent.iter().map(|v| num(*v)));
        }
        s.push_str(&csv_line(row));
    }
    s
}

fn replicates_csv(report: &StudyReport) -> String {
    let mut header: Vec<String> = [
        "replicate",
        "estimator",
        "flagged",
        "reasons",
        "min_psi",
        "loglik",
        "penalized_loglik",
        "converged",
        "max_newton_step",
        "selected_aic",
        "selected_bic",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(
        report
            .element_index
            .iter()
            .map(|(i, j)| format!("llt_{}_{}", i + 1, j + 1)),
    );
    let mut s = csv_line(header);
    let opt = |v: Option<usize>| v.map(|q| q.to_string()).unwrap_or_default();
    for o in &report.outcomes {
        let reasons = o
            .reasons
            .iter()
            .map(|r| {
                serde_json::to_value(r)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default()
            })
            .collect::<Vec<_>>()
            .join(";");
        let mut row = vec![
            o.replicate.to_string(),
            o.estimator.clone(),
            o.flagged.to_string(),
            reasons,
            num(o.min_psi),
            num(o.loglik),
            num(o.penalized_loglik),
            o.converged.to_string(),
            num(o.max_newton_step),
            opt(o.selected_aic),
            opt(o.selected_bic),
        ];
        row.extend(o.elements.iter().map(|v| num(*v)));
        s.push_str(&csv_line(row));
    }
    s
}

#[derive(Debug, Serialize)]
struct CheckConfig {
    penalty: PenaltySpec,
    probe: ProbeConfig,
    format: Format,
}

pub fn check_penalty(args: CheckArgs) -> Result<u8, CliError> {
    let cfg = RunConfig::load(args.out.config.as_deref())?;
    let (format, output) = resolve_output(&args.out, &cfg)?;
    let family = args
        .penalty
        .as_deref()
        .or(cfg.penalty.as_deref())
        .ok_or_else(|| CliError::Validation("--penalty is required".into()))?;
    let scaling = args
        .scaling
        .as_deref()
        .or(cfg.scaling.as_deref())
        .unwrap_or("soft");
    let spec = parse::penalty(family, scaling)?;
    let mut probe = ProbeConfig::default();
    if let Some(p) = args.p.or(cfg.p) {
        probe.p = p;
    }
    if let Some(q) = args.q.or(cfg.q) {
        probe.q = q;
    }
    if let Some(n) = args.n.or(cfg.n) {
        probe.n = n;
    }
    if let Some(g) = args.grid_points.or(cfg.grid_points) {
        probe.grid_points = g;
    }
    if let Some(s) = args.seed.or(cfg.seed) {
        probe.seed = s;
    }
    let report = verify_existence_conditions(&spec, &probe)?;
    let conditions = [
        ("continuity", &report.continuity),
        ("boundedness", &report.boundedness),
        ("divergence", &report.divergence),
    ];
    for (name, c) in conditions {
        println!(
            "{name}: {} ({})",
            if c.passed { "pass" } else { "fail" },
            c.detail
        );
    }
    if output.is_some() {
        let meta = Metadata::new(
            "check-penalty",
            Some(probe.seed),
            CheckConfig {
                penalty: spec,
                probe: probe.clone(),
                format,
            },
        );
        let text = match format {
            Format::Json => to_json(&meta, &report)?,
            Format::Csv => {
                let mut s = meta.csv_comment()? + &csv_line(["condition", "passed", "detail"]);
                for (name, c) in conditions {
                    s.push_str(&csv_line([
                        name.to_string(),
                        c.passed.to_string(),
                        format!("\"{}\"", c.detail.replace('"', "\"\"")),
                    ]));
                }
                s
            }
        };
        emit(output.as_deref(), &text)?;
    }
    Ok(if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_PROBE_FAILED
    })
}

#[derive(Debug, Serialize)]
struct CovConfig {
    input: InputConfig,
    correlation: bool,
    format: Format,
}

#[derive(Debug, Serialize)]
struct CovOutput {
    n: usize,
    p: usize,
    standardized: bool,
    matrix: Vec<Vec<f64>>,
}

pub fn cov(args: CovArgs) -> Result<u8, CliError> {
    let cfg = RunConfig::load(args.out.config.as_deref())?;
    let (format, output) = resolve_output(&args.out, &cfg)?;
    let (moments, input) = resolve_input(&args.input, &cfg)?;
    let moments = if args.correlation {
        moments.to_correlation()?
    } else {
        moments
    };
    let m = moments.cov();
    let out = CovOutput {
        n: moments.n(),
        p: moments.p(),
        standardized: moments.standardized(),
        matrix: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
    };
    let meta = Metadata::new(
        "cov",
        None,
        CovConfig {
            input,
            correlation: args.correlation,
            format,
        },
    );
    let text = match format {
        Format::Json => to_json(&meta, &out)?,
        Format::Csv => {
            let mut s = meta.csv_comment()?;
            s.push_str(&csv_line((1..=out.p).map(|j| format!("v{j}"))));
            for row in &out.matrix {
                s.push_str(&csv_line(row.iter().map(|v| num(*v))));
            }
            s
        }
    };
    emit(output.as_deref(), &text)?;
    Ok(EXIT_OK)
}
