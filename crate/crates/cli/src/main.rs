use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use whittle_bvm::asymptotics::{
    ar1_circulant_identity, counterexample_limit, counterexample_scan, covariance_report,
    report_design, write_json, write_reports_csv, write_scan_csv, DesignRule, TrueCovariance,
};
use whittle_bvm::distances::run_distance_audit;
use whittle_bvm::fourier::DesignKind;
use whittle_bvm::harness::{
    case_study_prior, emit_plotdata, fit_dataset, run_study, FitOptions, FitReport, StudyConfig,
};
use whittle_bvm::sampler::SamplerConfig;
use whittle_bvm::spectral::Ar1Spec;

/// Environment variable holding the worker-pool size.
const THREADS_VAR: &str = "WHITTLE_BVM_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "whittle-bvm",
    version,
    about = "Whittle-likelihood Bayesian regression with nonparametric errors"
)]
struct Cli {
    /// Overrides every seed taken from configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for JSON and CSV outputs.
    #[arg(long, short, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replicated simulation studies.
    Study {
        #[command(subcommand)]
        action: StudyAction,
    },
    /// Fit a regression with nonparametric errors to one series.
    Fit(FitArgs),
    /// Exact finite-sample covariance computations for AR(1) errors.
    Asymptotics {
        #[command(subcommand)]
        action: AsymptoticsAction,
    },
    /// Distance and divergence audits.
    Distances {
        #[command(subcommand)]
        action: DistancesAction,
    },
    /// Write plot data (t, observed, median, lower, upper) from a saved fit.
    Plotdata {
        fit: PathBuf,
        #[arg(value_name = "OUT")]
        dest: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum StudyAction {
    /// Run the study described by a TOML file.
    Run { config: PathBuf },
}

#[derive(Subcommand, Debug)]
enum DistancesAction {
    Audit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FitDesign {
    /// Standardised time plus one indicator per month, no intercept.
    TrendSeasonal,
    Mean,
    Trend,
}

#[derive(Args, Debug)]
struct FitArgs {
    csv: PathBuf,
    #[arg(long, value_enum, default_value = "trend-seasonal")]
    design: FitDesign,
    /// Fit the natural logarithm of the series.
    #[arg(long)]
    log: bool,
    /// Header of the value column.
    #[arg(long, default_value = "value")]
    column: String,
    #[arg(long, default_value_t = 12)]
    period: usize,
    #[arg(long, default_value_t = 50_000)]
    iterations: usize,
    #[arg(long, default_value_t = 20_000)]
    burnin: usize,
    #[arg(long, default_value_t = 5)]
    thinning: usize,
    #[arg(long, default_value_t = 0.9)]
    level: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportDesign {
    Mean,
    Trend,
    Spiked,
}

#[derive(Subcommand, Debug)]
enum AsymptoticsAction {
    /// V_W, V_0, their discrepancy and the Noether ratio across sample sizes.
    Report {
        #[arg(long, value_enum, default_value = "mean")]
        design: ReportDesign,
        #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', default_value = "128,256,512,1024,2048")]
        n: Vec<usize>,
    },
    /// Second-order term of the spiked design against its limit.
    Counterexample {
        #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "spiked")]
        design: ReportDesign,
        #[arg(long, value_delimiter = ',', default_value = "128,512,1024,2048,4096")]
        n: Vec<usize>,
    },
    /// Maximum error of the AR(1) circulant identity.
    Circulant {
        #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', default_value = "8,64,256")]
        n: Vec<usize>,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_pool()?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match cli.command {
        Command::Study {
            action: StudyAction::Run { config },
        } => study(&config, cli.seed, &cli.out),
        Command::Fit(args) => fit(&args, cli.seed, &cli.out),
        Command::Asymptotics { action } => asymptotics(action, &cli.out),
        Command::Distances {
            action: DistancesAction::Audit,
        } => {
            let audit = run_distance_audit(cli.seed.unwrap_or(1))?;
            let path = cli.out.join("distance_audit.json");
            write_json(&audit, &path)?;
            println!(
                "hellinger closed form vs quadrature: {:.3e}",
                audit.hellinger_max_error
            );
            println!("K_n constant spread across n: {:.3}", audit.kn.k_spread);
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Plotdata { fit, dest } => {
            let report =
                FitReport::load(&fit).with_context(|| format!("reading {}", fit.display()))?;
            emit_plotdata(&report, &dest)?;
            println!("wrote {} rows to {}", report.n, dest.display());
            Ok(())
        }
    }
}

fn configure_pool() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_VAR}={raw} is not a count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

fn study(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg =
        StudyConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let result = run_study(&cfg)?;
    result.write(out)?;
    println!(
        "{:<5} {:<8} {:>6} {:>10} {:>10} {:>9} {:>9}",
        "model", "param", "n", "mean", "mse", "coverage", "length"
    );
    for r in &result.rows {
        println!(
            "{:<5} {:<8} {:>6} {:>10.4} {:>10.4} {:>9.3} {:>9.4}",
            r.model.label(),
            r.parameter,
            r.n,
            r.mean,
            r.mse,
            r.coverage,
            r.length
        );
    }
    println!("wrote {}", out.join("study.json").display());
    Ok(())
}

fn fit(args: &FitArgs, seed: Option<u64>, out: &Path) -> Result<()> {
    let design = match args.design {
        FitDesign::TrendSeasonal => DesignKind::TrendDummies {
            period: args.period,
        },
        FitDesign::Mean => DesignKind::Mean,
        FitDesign::Trend => DesignKind::LinearTrend { intercept: true },
    };
    let mut sampler = SamplerConfig {
        iterations: args.iterations,
        burnin: args.burnin,
        thinning: args.thinning,
        seed: seed.unwrap_or(1),
        ..Default::default()
    };
    if let DesignKind::TrendDummies { period } = design {
        sampler.theta_prior = case_study_prior(period + 1);
    }
    let options = FitOptions {
        value_column: args.column.clone(),
        log: args.log,
        design,
        level: args.level,
    };
    let report = fit_dataset(&args.csv, &options, &sampler)?;
    let json = out.join("fit.json");
    let plot = out.join("plotdata.csv");
    report.save(&json)?;
    emit_plotdata(&report, &plot)?;
    for (name, c) in report.coefficient_names.iter().zip(&report.coefficients) {
        println!(
            "{name:<10} {:>10.4} [{:.4}, {:.4}]",
            c.median, c.lower, c.upper
        );
    }
    println!(
        "observed inside the {:.0}% band: {:.3}",
        100.0 * args.level,
        report.observed_in_band()
    );
    println!("wrote {} and {}", json.display(), plot.display());
    Ok(())
}

fn asymptotics(action: AsymptoticsAction, out: &Path) -> Result<()> {
    match action {
        AsymptoticsAction::Report { design, alpha, n } => {
            let spec = Ar1Spec::new(alpha, 1.0)?;
            let mut reports = Vec::with_capacity(n.len());
            for &size in &n {
                let d = report_design(design_name(design), size)?;
                let gammas: Vec<f64> = (0..size).map(|h| spec.autocovariance(h)).collect();
                let r = covariance_report(
                    &d,
                    &|w: f64| spec.spectral(w),
                    TrueCovariance::Autocovariance(&gammas),
                )?;
                println!(
                    "n = {size:>5}  discrepancy {:.6}  noether {:.3e}",
                    r.discrepancy, r.noether_ratio
                );
                reports.push(r);
            }
            write_json(&reports, &out.join("covariance_report.json"))?;
            write_reports_csv(&reports, &out.join("covariance_report.csv"))?;
        }
        AsymptoticsAction::Counterexample { alpha, design, n } => {
            let rule = match design {
                ReportDesign::Spiked => DesignRule::SpikedLast,
                ReportDesign::Mean => DesignRule::Ones,
                ReportDesign::Trend => bail!("the scan uses one-column designs: spiked or mean"),
            };
            let points = counterexample_scan(alpha, rule, &n)?;
            println!("limit 2α²/(1−α²) = {:.6}", counterexample_limit(alpha));
            for p in &points {
                println!(
                    "n = {:>5}  value {:.6}  direct {:.6}",
                    p.n, p.value, p.direct
                );
            }
            write_json(&points, &out.join("counterexample.json"))?;
            write_scan_csv(&points, &out.join("counterexample.csv"))?;
        }
        AsymptoticsAction::Circulant { alpha, n } => {
            let mut rows = Vec::with_capacity(n.len());
            for &size in &n {
                let check = ar1_circulant_identity(alpha, size)?;
                println!("n = {size:>5}  max error {:.3e}", check.max_error);
                rows.push(
                    serde_json::json!({ "n": size, "alpha": alpha, "max_error": check.max_error }),
                );
            }
            write_json(&rows, &out.join("circulant.json"))?;
        }
    }
    Ok(())
}

fn design_name(d: ReportDesign) -> &'static str {
    match d {
        ReportDesign::Mean => "mean",
        ReportDesign::Trend => "trend",
        ReportDesign::Spiked => "spiked",
    }
}
