//! Experiment runner: config parsing, dispatch and CSV output.

use crate::analysis::{
    euler_limit_experiment, fit_rate, mixed_second_moment_quadrature, qv_second_moment_exact,
    strong_error_experiment, weak_error_experiment, LadderSpec, Payoff, RateFit,
};
use crate::error::{Error, Result};
use crate::fbm::{sample_bundle, HurstParam};
use crate::model::builtin_model;
use crate::solver::SchemeKind;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Sample,
    StrongRate,
    WeakRate,
    LimitCheck,
    QvScaling,
    MixedScaling,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Sample,
        ExperimentKind::StrongRate,
        ExperimentKind::WeakRate,
        ExperimentKind::LimitCheck,
        ExperimentKind::QvScaling,
        ExperimentKind::MixedScaling,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Sample => "sample",
            ExperimentKind::StrongRate => "strong-rate",
            ExperimentKind::WeakRate => "weak-rate",
            ExperimentKind::LimitCheck => "limit-check",
            ExperimentKind::QvScaling => "qv-scaling",
            ExperimentKind::MixedScaling => "mixed-scaling",
        }
    }

    fn default_ladder(&self) -> Vec<usize> {
        let (lo, hi) = match self {
            ExperimentKind::WeakRate => (64, 2048),
            ExperimentKind::QvScaling => (16, 4096),
            ExperimentKind::MixedScaling => (8, 256),
            _ => (64, 4096),
        };
        std::iter::successors(Some(lo), |&n| Some(n * 2))
            .take_while(|&n| n <= hi)
            .collect()
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown experiment kind '{s}'")))
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub model: String,
    pub scheme: SchemeKind,
    pub hurst: HurstParam,
    pub horizon: f64,
    pub n_ladder: Vec<usize>,
    pub paths: usize,
    pub refine: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub payoff: Payoff,
    /// Steps for `sample` and `limit-check`.
    pub n: usize,
    /// Components for `sample`.
    pub m: usize,
    /// Subgrid factor for the mixed statistic.
    pub sub: usize,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        Self {
            kind,
            model: "sine1d".into(),
            scheme: SchemeKind::ModifiedEuler,
            hurst: HurstParam::new(0.6).expect("valid default"),
            horizon: 1.0,
            n_ladder: kind.default_ladder(),
            paths: 512,
            refine: 64,
            seed: 42,
            output: PathBuf::from(format!("{}.csv", kind.name())),
            payoff: Payoff::Identity,
            n: 1024,
            m: 1,
            sub: 32,
        }
    }

    /// `# key = value` lines for every resolved field.
    pub fn header(&self) -> String {
        let ladder: Vec<String> = self.n_ladder.iter().map(|n| n.to_string()).collect();
        [
            format!("# kind = {}", self.kind),
            format!("# model = {}", self.model),
            format!("# scheme = {}", self.scheme),
            format!("# H = {}", self.hurst.value()),
            format!("# T = {}", self.horizon),
            format!("# n_ladder = {}", ladder.join(",")),
            format!("# M = {}", self.paths),
            format!("# r = {}", self.refine),
            format!("# seed = {}", self.seed),
            format!("# output = {}", self.output.display()),
            format!("# payoff = {}", self.payoff.name()),
            format!("# n = {}", self.n),
            format!("# m = {}", self.m),
            format!("# sub = {}", self.sub),
        ]
        .join("\n")
    }

    fn ladder_spec(&self) -> LadderSpec {
        let mut spec = LadderSpec::new(self.hurst, self.n_ladder.clone(), self.paths, self.seed);
        spec.horizon = self.horizon;
        spec.refine = self.refine;
        spec
    }
}

/// Parses flat `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults(kind);
    let mut seen: Vec<String> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Config { line, message };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if seen.iter().any(|k| k == key) {
            return Err(err(format!("duplicate key '{key}'")));
        }
        seen.push(key.to_string());
        let bad = |what: &str| err(format!("malformed {what} '{value}' for key '{key}'"));
        match key {
            "model" => {
                builtin_model(value).map_err(|e| err(e.to_string()))?;
                cfg.model = value.to_string();
            }
            "scheme" => cfg.scheme = value.parse().map_err(|e: Error| err(e.to_string()))?,
            "H" => {
                let h: f64 = value.parse().map_err(|_| bad("number"))?;
                cfg.hurst = HurstParam::new(h).map_err(|e| err(e.to_string()))?;
            }
            "T" => {
                let t: f64 = value.parse().map_err(|_| bad("number"))?;
                if !(t.is_finite() && t > 0.0) {
                    return Err(err(format!("T must be positive, got {value}")));
                }
                cfg.horizon = t;
            }
            "n_ladder" => {
                let ladder = value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("ladder"))?;
                if ladder.is_empty() || ladder[0] == 0 || ladder.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(err(
                        "n_ladder must be positive and strictly increasing".into()
                    ));
                }
                cfg.n_ladder = ladder;
            }
            "M" => cfg.paths = positive(value).ok_or_else(|| bad("path count"))?,
            "r" => cfg.refine = positive(value).ok_or_else(|| bad("refine factor"))?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
            "output" => cfg.output = PathBuf::from(value),
            "payoff" => cfg.payoff = value.parse().map_err(|e: Error| err(e.to_string()))?,
            "n" => cfg.n = positive(value).ok_or_else(|| bad("step count"))?,
            "m" => cfg.m = positive(value).ok_or_else(|| bad("component count"))?,
            "sub" => cfg.sub = positive(value).ok_or_else(|| bad("subgrid factor"))?,
            _ => return Err(err(format!("unknown key '{key}'"))),
        }
    }
    Ok(cfg)
}

fn positive(value: &str) -> Option<usize> {
    value.parse::<usize>().ok().filter(|&v| v > 0)
}

/// What a completed run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub summary: String,
    pub csv: PathBuf,
}

/// Runs the experiment and writes its CSV below `out_dir` (or the working
/// directory).
pub fn run(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunOutcome> {
    let path = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            dir.join(&config.output)
        }
        None => config.output.clone(),
    };
    let mut body: Vec<u8> = Vec::new();
    let summary = execute(config, &mut body)?;
    let mut file = BufWriter::new(fs::File::create(&path)?);
    writeln!(file, "{}", config.header())?;
    file.write_all(&body)?;
    file.flush()?;
    Ok(RunOutcome { summary, csv: path })
}

/// [`run`] inside a dedicated pool of `threads` workers.
pub fn run_with_threads(
    config: &ExperimentConfig,
    out_dir: Option<&Path>,
    threads: usize,
) -> Result<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::domain(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run(config, out_dir))
}

/// Process exit code for an error: 1 usage, 2 divergence budget, 3 numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Domain(_)
        | Error::InvalidHurst(_)
        | Error::DimensionMismatch(_)
        | Error::TooLarge { .. }
        | Error::UnsupportedModel(_)
        | Error::UnknownModel(_)
        | Error::Config { .. }
        | Error::Io(_) => 1,
        Error::DivergenceBudget { .. } => 2,
        Error::Factorization { .. }
        | Error::Embedding { .. }
        | Error::Diverged { .. }
        | Error::Integration(_)
        | Error::DegenerateFlow { .. }
        | Error::Quadrature(_) => 3,
    }
}

fn execute(config: &ExperimentConfig, out: &mut Vec<u8>) -> Result<String> {
    match config.kind {
        ExperimentKind::Sample => {
            let b = sample_bundle(
                config.n,
                1,
                config.m,
                config.hurst,
                config.horizon,
                config.seed,
                0,
            )?;
            let cols: Vec<String> = (1..=config.m).map(|j| format!("comp_{j}")).collect();
            writeln!(out, "t,{}", cols.join(","))?;
            let grid = b.coarse_grid();
            let values: Vec<Vec<f64>> = (0..config.m).map(|j| b.coarse_values(j)).collect();
            for i in 0..=config.n {
                write!(out, "{:.16e}", grid.time(i))?;
                for v in &values {
                    write!(out, ",{:.16e}", v[i])?;
                }
                writeln!(out)?;
            }
            Ok(format!(
                "sampled {} steps, {} components",
                config.n, config.m
            ))
        }
        ExperimentKind::StrongRate => {
            let model = builtin_model(&config.model)?;
            let report = strong_error_experiment(&model, config.scheme, &config.ladder_spec())?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            report.write_csv(out)?;
            Ok(report.summary())
        }
        ExperimentKind::WeakRate => {
            let model = builtin_model(&config.model)?;
            let weak =
                weak_error_experiment(&model, config.scheme, config.payoff, &config.ladder_spec())?;
            let report = &weak.report;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            writeln!(out, "n,bias,stderr,abs_bias,abs_stderr,paths")?;
            for (i, b) in weak.bias.iter().enumerate() {
                let (a, ase) = match &weak.absolute_bias {
                    Some(v) => (v[i].mean, v[i].stderr),
                    None => (f64::NAN, f64::NAN),
                };
                writeln!(
                    out,
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                    report.n_values[i], b.mean, b.stderr, a, ase, report.used_paths[i]
                )?;
            }
            write_fit_footer(out, &report.fit)?;
            Ok(report.summary())
        }
        ExperimentKind::LimitCheck => {
            let model = builtin_model(&config.model)?;
            let s = euler_limit_experiment(
                &model,
                config.hurst,
                config.horizon,
                config.n,
                config.paths,
                config.refine,
                config.seed,
            )?;
            writeln!(
                out,
                "n,mean_deviation,p95_deviation,mean_rescaled_error,mean_limit,paths,diverged"
            )?;
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                s.n,
                s.mean_deviation,
                s.p95_deviation,
                s.mean_rescaled_error,
                s.mean_limit,
                s.paths,
                s.diverged
            )?;
            Ok(s.summary())
        }
        ExperimentKind::QvScaling => scaling(config, out, |n| {
            Ok(qv_second_moment_exact(n, config.hurst, config.horizon))
        }),
        ExperimentKind::MixedScaling => scaling(config, out, |n| {
            mixed_second_moment_quadrature(n, config.hurst, config.horizon)
        }),
    }
}

/// Slope `1 - 4H` below `H = 3/4`, `-2` from there on.
pub fn variation_slope(hurst: HurstParam) -> f64 {
    (1.0 - 4.0 * hurst.value()).max(-2.0)
}

fn scaling<F>(config: &ExperimentConfig, out: &mut Vec<u8>, moment: F) -> Result<String>
where
    F: Fn(usize) -> Result<f64>,
{
    writeln!(out, "n,second_moment")?;
    let mut points = Vec::with_capacity(config.n_ladder.len());
    for &n in &config.n_ladder {
        let v = moment(n)?;
        writeln!(out, "{n},{v:.16e}")?;
        points.push((n as f64, v));
    }
    let fit = if points.len() >= 2 {
        fit_rate(&points)?
    } else {
        RateFit::undefined()
    };
    write_fit_footer(out, &fit)?;
    let expected = variation_slope(config.hurst);
    Ok(format!(
        "slope={:.4} expected={:.4} |Δ|={:.4}",
        fit.slope,
        expected,
        (fit.slope - expected).abs()
    ))
}

fn write_fit_footer(out: &mut Vec<u8>, fit: &RateFit) -> Result<()> {
    writeln!(
        out,
        "# slope={:.16e} intercept={:.16e} residual={:.16e}",
        fit.slope, fit.intercept, fit.residual_rms
    )?;
    Ok(())
}
