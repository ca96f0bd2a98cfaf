use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{DateTime, TimeDelta, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use msar::ar::fit_ar;
use msar::diagnostics::{
    adf_test, durbin_watson, pp_test, select_model, DeterministicVariant, FittedModel, ModelFamily,
    SelectionConfig, UnitRootResult,
};
use msar::io::{
    export_probabilities, load_csv, render_text, write_report, write_series_csv, FitReport,
    FitSection, LoadOptions, LoadOutcome, MissingPolicy, Provenance, ReportFormat,
};
use msar::regime::{
    e_step, em_fit, msar_residuals, simulate_msar, EmConfig, MsArFit, MsArSpec, TransitionMatrix,
    VarianceMode,
};
use msar::series::{acf, describe, deseasonalize, pacf, seasonal_profile, TimeSeries};
use msar::{Error, Result};

#[derive(Parser)]
#[command(
    name = "msar",
    version,
    about = "Markov-switching autoregressive models for hourly load series"
)]
struct Cli {
    /// Log level (error, warn, info, debug); overrides RS_LOG.
    #[arg(long, global = true)]
    log_level: Option<log::LevelFilter>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summary statistics and correlogram.
    Describe {
        #[command(flatten)]
        input: InputArgs,
        /// Also print ACF and PACF up to this lag.
        #[arg(long)]
        lags: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// ADF and PP unit-root tests.
    TestStationarity {
        #[command(flatten)]
        input: InputArgs,
        /// ADF lag order; default floor(12·(T/100)^¼).
        #[arg(long)]
        lag: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Subtract the per-position seasonal mean.
    Deseasonalize {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 24)]
        period: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Least-squares AR(p) fit.
    FitAr {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        p: usize,
    },
    /// EM fit of an MS(K)-AR(p) model.
    FitMsar {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        seed: u64,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write filtered/smoothed probabilities here.
        #[arg(long)]
        probabilities: Option<PathBuf>,
    },
    /// Rank AR(1..p) and MS(K)-AR(1..p) by AIC.
    Select {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 4)]
        p_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Simulate an MS(K)-AR(p) series to CSV.
    Simulate {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Regime means; default 0, 10, 20, …
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        means: Option<Vec<f64>>,
        /// AR coefficients shared by all regimes; default 0.5 then 0.3 spread over the other lags.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        variance: f64,
        /// Stay probabilities p_jj; default 0.9, 0.8 for two regimes, else 0.85.
        #[arg(long, value_delimiter = ',')]
        stay: Option<Vec<f64>>,
        #[arg(long, default_value_t = 200)]
        burn_in: usize,
        /// Constant added to every value.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        level: f64,
        /// Amplitude of an added sinusoidal daily profile.
        #[arg(long, default_value_t = 0.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 24)]
        period: usize,
        #[arg(long, default_value = "2014-01-01T00:00:00Z")]
        start: DateTime<Utc>,
        #[arg(long)]
        output: PathBuf,
    },
    /// describe → test-stationarity → deseasonalize → select → fit-msar → diagnostics → reports.
    Pipeline {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 24)]
        period: usize,
        #[arg(long, default_value_t = 4)]
        p_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Missing {
    Error,
    Interpolate,
    DropLeadingTrailing,
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "timestamp")]
    timestamp_column: String,
    #[arg(long, default_value = "load_mw")]
    value_column: String,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    #[arg(long, value_enum, default_value = "error")]
    missing: Missing,
    /// Accept zero and negative values.
    #[arg(long)]
    allow_nonpositive: bool,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// One variance shared by all regimes.
    #[arg(long)]
    shared_variance: bool,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
}

impl ModelArgs {
    fn variance_mode(&self) -> VarianceMode {
        if self.shared_variance {
            VarianceMode::Shared
        } else {
            VarianceMode::PerRegime
        }
    }

    fn em(&self, seed: u64) -> EmConfig {
        EmConfig {
            restarts: self.restarts,
            max_iter: self.max_iter,
            seed,
            ..EmConfig::default()
        }
    }
}

fn load(args: &InputArgs) -> Result<LoadOutcome> {
    if !args.delimiter.is_ascii() {
        return Err(Error::InvalidParameter(
            "delimiter must be a single ASCII character".into(),
        ));
    }
    let opts = LoadOptions {
        timestamp_column: args.timestamp_column.clone(),
        value_column: args.value_column.clone(),
        delimiter: args.delimiter as u8,
        missing: match args.missing {
            Missing::Error => MissingPolicy::Error,
            Missing::Interpolate => MissingPolicy::Interpolate,
            Missing::DropLeadingTrailing => MissingPolicy::DropLeadingTrailing,
        },
        require_positive: !args.allow_nonpositive,
        ..LoadOptions::default()
    };
    let out = load_csv(&args.input, &opts)?;
    info!(
        "loaded {} values from {} ({} interpolated)",
        out.series.len(),
        args.input.display(),
        out.interpolated.len()
    );
    Ok(out)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn stationarity(series: &TimeSeries, lag: Option<usize>) -> Result<Vec<UnitRootResult>> {
    use DeterministicVariant::*;
    let mut out = Vec::new();
    for v in [None, Constant, ConstantTrend] {
        out.push(adf_test(series, v, lag)?);
    }
    for v in [Constant, ConstantTrend] {
        out.push(pp_test(series, v)?);
    }
    Ok(out)
}

fn write_simulation(series: &TimeSeries, labels: &[usize], dest: &Path) -> Result<()> {
    let mut s = String::from("timestamp,load_mw,regime\n");
    for (i, (v, l)) in series.values().iter().zip(labels).enumerate() {
        s.push_str(&format!(
            "{},{},{}\n",
            series
                .timestamp(i)
                .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            v,
            l
        ));
    }
    std::fs::write(dest, s)?;
    Ok(())
}

fn default_transition(k: usize, stay: Option<Vec<f64>>) -> Result<TransitionMatrix> {
    let stay = match stay {
        Some(s) if s.len() == k => s,
        Some(s) => {
            return Err(Error::InvalidParameter(format!(
                "--stay needs {k} values, got {}",
                s.len()
            )));
        }
        None if k == 2 => vec![0.9, 0.8],
        None => vec![0.85; k],
    };
    if k == 1 {
        return TransitionMatrix::new(vec![vec![1.0]]);
    }
    let rows = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if i == j {
                        stay[i]
                    } else {
                        (1.0 - stay[i]) / (k - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    TransitionMatrix::new(rows)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    k: usize,
    p: usize,
    n: usize,
    seed: u64,
    means: Option<Vec<f64>>,
    beta: Option<Vec<f64>>,
    variance: f64,
    stay: Option<Vec<f64>>,
    burn_in: usize,
    level: f64,
    amplitude: f64,
    period: usize,
    start: DateTime<Utc>,
    output: &Path,
) -> Result<()> {
    let spec = MsArSpec::new(k, p, VarianceMode::PerRegime)?;
    let means = means.unwrap_or_else(|| (0..k).map(|j| 10.0 * j as f64).collect());
    if means.len() != k {
        return Err(Error::InvalidParameter(format!("--means needs {k} values")));
    }
    let beta = beta.unwrap_or_else(|| {
        let mut b = vec![0.5];
        b.extend(std::iter::repeat_n(0.3 / (p - 1).max(1) as f64, p - 1));
        b
    });
    if beta.len() != p {
        return Err(Error::InvalidParameter(format!("--beta needs {p} values")));
    }
    if period == 0 {
        return Err(Error::InvalidParameter("--period must be positive".into()));
    }
    let fit = MsArFit::new(
        spec,
        means,
        vec![beta; k],
        vec![variance; k],
        default_transition(k, stay)?,
        None,
    )?;
    let (sim, path) = simulate_msar(&fit, n, seed, burn_in)?;
    let values = sim
        .values()
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let phase = t as f64 / period as f64 * std::f64::consts::TAU;
            level + amplitude * phase.sin() + v
        })
        .collect();
    let series = TimeSeries::new(values, start, TimeDelta::hours(1))?;
    write_simulation(&series, &path.labels, output)
}

fn fit_msar(
    input: &InputArgs,
    model: &ModelArgs,
    p: usize,
    seed: u64,
    report: Option<&Path>,
    probabilities: Option<&Path>,
) -> Result<()> {
    let data = load(input)?;
    let spec = MsArSpec::new(model.k, p, model.variance_mode())?;
    let fit = em_fit(&data.series, spec, &model.em(seed))?;
    let mut rep = FitReport::new(Provenance {
        interpolated: data.interpolated.len(),
        ..Provenance::new(Some(seed), Some(data.digest.clone()))
    });
    rep.chosen_fit = Some(FitSection::from_fit(&fit));
    rep.durbin_watson = Some(durbin_watson(&msar_residuals(&fit, &data.series)?)?);
    if let Some(dest) = probabilities {
        let e = e_step(&fit, &data.series)?;
        export_probabilities(&e.path, &data.series, dest)?;
    }
    if let Some(dest) = report {
        if let Some(probs) = probabilities {
            rep.probability_files.push(relative_to(probs, dest));
        }
        write_report(&rep, ReportFormat::Json, dest)?;
    }
    print!("{}", render_text(&rep));
    Ok(())
}

/// `target` as seen from the directory containing `report`.
fn relative_to(target: &Path, report: &Path) -> String {
    let dir = report.parent().unwrap_or(Path::new(""));
    target
        .strip_prefix(dir)
        .unwrap_or(target)
        .display()
        .to_string()
}

fn pipeline(
    input: &InputArgs,
    model: &ModelArgs,
    period: usize,
    p_max: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let data = load(input)?;
    let series = &data.series;
    std::fs::create_dir_all(out)?;
    let mut rep = FitReport::new(Provenance {
        interpolated: data.interpolated.len(),
        ..Provenance::new(Some(seed), Some(data.digest.clone()))
    });

    info!("describe");
    rep.summary = Some(describe(series)?);
    info!("stationarity tests");
    rep.stationarity = stationarity(series, None)?;
    info!("deseasonalize (period {period})");
    let profile = seasonal_profile(series, period)?;
    let adjusted = deseasonalize(series, &profile)?;
    rep.seasonal_period = Some(period);

    info!("model selection");
    let config = SelectionConfig {
        n_regimes: model.k,
        variance_mode: model.variance_mode(),
        em: model.em(seed),
    };
    let p_range: Vec<usize> = (1..=p_max).collect();
    let rows = select_model(
        &adjusted,
        &p_range,
        &[ModelFamily::Ar, ModelFamily::MsAr],
        &config,
    )?;
    rep.set_selection(&rows);
    let best: MsArFit = rows
        .iter()
        .find_map(|r| match &r.fit {
            Some(FittedModel::MsAr(f)) => Some(f.clone()),
            _ => None,
        })
        .ok_or_else(|| Error::EstimationFailed("no MS-AR candidate could be fitted".into()))?;
    info!("chosen {}", best.spec.label());
    rep.chosen_fit = Some(FitSection::from_fit(&best));
    rep.durbin_watson = Some(durbin_watson(&msar_residuals(&best, &adjusted)?)?);

    let e = e_step(&best, &adjusted)?;
    export_probabilities(&e.path, &adjusted, out.join("probabilities.csv"))?;
    rep.probability_files.push("probabilities.csv".into());
    write_report(&rep, ReportFormat::Json, out.join("report.json"))?;
    write_report(&rep, ReportFormat::Text, out.join("report.txt"))?;
    print!("{}", render_text(&rep));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Describe { input, lags, json } => {
            let data = load(&input)?;
            let stats = describe(&data.series)?;
            let correlogram = match lags {
                Some(l) => Some((acf(&data.series, l)?, pacf(&data.series, l)?)),
                None => None,
            };
            if json {
                print_json(&serde_json::json!({
                    "summary": stats,
                    "acf": correlogram.as_ref().map(|c| &c.0),
                    "pacf": correlogram.as_ref().map(|c| &c.1),
                }))?;
            } else {
                println!("n          {}", stats.n);
                println!("mean       {:.4}", stats.mean);
                println!("std. dev.  {:.4}", stats.std_dev);
                println!("min        {:.4}", stats.min);
                println!("max        {:.4}", stats.max);
                println!(
                    "skewness   {}",
                    stats.skewness.map_or("-".into(), |v| format!("{v:.4}"))
                );
                println!(
                    "kurtosis   {} (excess)",
                    stats
                        .excess_kurtosis
                        .map_or("-".into(), |v| format!("{v:.4}"))
                );
                if let Some((a, p)) = correlogram {
                    println!(
                        "\nlag        acf       pacf   (95% bound ±{:.4})",
                        a.confidence_bound
                    );
                    for (i, lag) in a.lags.iter().enumerate() {
                        println!(
                            "{lag:>3} {:>10.4} {:>10.4}",
                            a.coefficients[i], p.coefficients[i]
                        );
                    }
                }
            }
        }
        Command::TestStationarity { input, lag, json } => {
            let data = load(&input)?;
            let results = stationarity(&data.series, lag)?;
            if json {
                print_json(&results)?;
            } else {
                let mut rep = FitReport::new(Provenance::new(None, Some(data.digest)));
                rep.stationarity = results;
                print!("{}", render_text(&rep));
            }
        }
        Command::Deseasonalize {
            input,
            period,
            output,
        } => {
            let data = load(&input)?;
            let profile = seasonal_profile(&data.series, period)?;
            let adjusted = deseasonalize(&data.series, &profile)?;
            write_series_csv(&adjusted, &input.value_column, &output)?;
            print_json(&profile)?;
        }
        Command::FitAr { input, p } => {
            let data = load(&input)?;
            print_json(&fit_ar(&data.series, p)?)?;
        }
        Command::FitMsar {
            input,
            model,
            p,
            seed,
            report,
            probabilities,
        } => {
            fit_msar(
                &input,
                &model,
                p,
                seed,
                report.as_deref(),
                probabilities.as_deref(),
            )?;
        }
        Command::Select {
            input,
            model,
            p_max,
            seed,
            json,
        } => {
            let data = load(&input)?;
            let config = SelectionConfig {
                n_regimes: model.k,
                variance_mode: model.variance_mode(),
                em: model.em(seed),
            };
            let p_range: Vec<usize> = (1..=p_max).collect();
            let rows = select_model(
                &data.series,
                &p_range,
                &[ModelFamily::Ar, ModelFamily::MsAr],
                &config,
            )?;
            let mut rep = FitReport::new(Provenance::new(Some(seed), Some(data.digest)));
            rep.set_selection(&rows);
            if json {
                print_json(&rep.selection)?;
            } else {
                print!("{}", render_text(&rep));
            }
        }
        Command::Simulate {
            k,
            p,
            n,
            seed,
            means,
            beta,
            variance,
            stay,
            burn_in,
            level,
            amplitude,
            period,
            start,
            output,
        } => simulate(
            k, p, n, seed, means, beta, variance, stay, burn_in, level, amplitude, period, start,
            &output,
        )?,
        Command::Pipeline {
            input,
            model,
            period,
            p_max,
            seed,
            output_dir,
        } => {
            pipeline(&input, &model, period, p_max, seed, &output_dir)?;
        }
    }
    Ok(())
}

fn init_logging(level: Option<log::LevelFilter>) {
    let mut builder = env_logger::Builder::new();
    builder.filter_level(log::LevelFilter::Warn);
    builder.parse_env(env_logger::Env::new().filter("RS_LOG"));
    if let Some(level) = level {
        builder.filter_level(level);
    }
    builder.format_timestamp(None).init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging(cli.log_level);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_estimation_failure() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
