use std::path::Path;

use whittle_bvm::fourier::DesignKind;
use whittle_bvm::harness::{
    emit_plotdata, fit_dataset, fit_series, read_plotdata, run_study, ErrorModel, FitOptions,
    StudyConfig,
};
use whittle_bvm::rng::rng_from_seed;
use whittle_bvm::sampler::SamplerConfig;
use whittle_bvm::Error;

use rand_distr::{Distribution, Normal};

fn short_sampler() -> SamplerConfig {
    SamplerConfig {
        iterations: 1500,
        burnin: 500,
        thinning: 2,
        ..Default::default()
    }
}

#[test]
fn white_noise_fit_is_calibrated_under_white_noise() {
    let cfg = StudyConfig {
        rho: 0.0,
        n_list: vec![256],
        replicates: 500,
        fits: vec![ErrorModel::Wn],
        ..Default::default()
    };
    let res = run_study(&cfg).unwrap();
    let row = res.row(ErrorModel::Wn, "mu", 256).unwrap();
    assert!(
        (0.86..=0.94).contains(&row.coverage),
        "coverage {}",
        row.coverage
    );
    assert_eq!(row.replicates, 500);
}

#[test]
fn study_is_deterministic_and_persists() {
    let cfg = StudyConfig {
        scenario: whittle_bvm::harness::Scenario::LinregAr1,
        n_list: vec![64, 96],
        replicates: 6,
        sampler: short_sampler(),
        ..Default::default()
    };
    let a = run_study(&cfg).unwrap();
    let b = run_study(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 2 * 3 * 2);
    assert_eq!(a.seeds.len(), 12);

    let dir = tempfile::tempdir().unwrap();
    a.write(dir.path()).unwrap();
    let first = std::fs::read(dir.path().join("study.json")).unwrap();
    b.write(dir.path()).unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("study.json")).unwrap());
    let csv = std::fs::read_to_string(dir.path().join("study_rows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + a.rows.len());
    assert!(csv.starts_with("model,parameter,n,mean,mse,coverage,length,replicates"));
}

#[test]
fn results_do_not_depend_on_pool_size() {
    let cfg = StudyConfig {
        n_list: vec![64],
        replicates: 4,
        sampler: short_sampler(),
        ..Default::default()
    };
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let three = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let a = one.install(|| run_study(&cfg)).unwrap();
    let b = three.install(|| run_study(&cfg)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_replicates_is_a_config_error() {
    let cfg = StudyConfig {
        replicates: 0,
        ..Default::default()
    };
    assert!(matches!(run_study(&cfg), Err(Error::Config(_))));
}

#[test]
fn constant_series_has_trend_interval_containing_zero() {
    let opts = FitOptions {
        design: DesignKind::TrendDummies { period: 12 },
        ..Default::default()
    };
    let level = 5.0;
    let report = fit_series(vec![level; 48], &opts, &short_sampler()).unwrap();
    let trend = &report.coefficients[0];
    // The design fits the series exactly; zero is only reproduced up to
    // transform rounding.
    let slack = 1e-12 * level;
    assert!(
        trend.lower - slack <= 0.0 && 0.0 <= trend.upper + slack,
        "{trend:?}"
    );
}

fn write_column(path: &Path, values: &[f64]) {
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["t", "value"]).unwrap();
    for (t, v) in values.iter().enumerate() {
        w.write_record([(t + 1).to_string(), v.to_string()])
            .unwrap();
    }
    w.flush().unwrap();
}

#[test]
fn log_flag_matches_prelogged_input() {
    let n = 72;
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut rng = rng_from_seed(8);
    let logged: Vec<f64> = (0..n)
        .map(|t| {
            2.0 + 0.8 * (t + 1) as f64 / n as f64
                + 0.1 * ((t % 12) as f64 - 5.5).abs()
                + noise.sample(&mut rng)
        })
        .collect();
    let raw: Vec<f64> = logged.iter().map(|v| v.exp()).collect();
    let prelogged: Vec<f64> = raw.iter().map(|v| v.ln()).collect();

    let dir = tempfile::tempdir().unwrap();
    let raw_path = dir.path().join("raw.csv");
    let log_path = dir.path().join("log.csv");
    write_column(&raw_path, &raw);
    write_column(&log_path, &prelogged);

    let sampler = short_sampler();
    let with_flag = fit_dataset(
        &raw_path,
        &FitOptions {
            log: true,
            ..Default::default()
        },
        &sampler,
    )
    .unwrap();
    let without = fit_dataset(&log_path, &FitOptions::default(), &sampler).unwrap();
    assert_eq!(with_flag.observed, without.observed);
    assert_eq!(with_flag.coefficients, without.coefficients);
    assert_eq!(with_flag.fitted, without.fitted);
}

#[test]
fn plotdata_round_trips() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/airpassengers.csv");
    let opts = FitOptions {
        log: true,
        ..Default::default()
    };
    let report = fit_dataset(&path, &opts, &short_sampler()).unwrap();
    assert_eq!(report.n, 144);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plot.csv");
    emit_plotdata(&report, &out).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,observed,median,lower,upper"
    );
    assert!(text.lines().all(|l| l.split(',').count() == 5));

    let rows = read_plotdata(&out).unwrap();
    assert_eq!(rows.len(), 144);
    for (t, row) in rows.iter().enumerate() {
        assert_eq!(row.t, t + 1);
        assert!((row.observed - report.observed[t]).abs() < 1e-9);
        assert!((row.median - report.fitted.median[t]).abs() < 1e-9);
        assert!((row.lower - report.fitted.lower[t]).abs() < 1e-9);
        assert!((row.upper - report.fitted.upper[t]).abs() < 1e-9);
        assert!(row.lower <= row.median && row.median <= row.upper);
    }

    let json = dir.path().join("fit.json");
    report.save(&json).unwrap();
    assert_eq!(
        whittle_bvm::harness::FitReport::load(&json).unwrap(),
        report
    );
}

#[test]
fn malformed_csv_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "t,value\n1,3.0\n2,abc\n").unwrap();
    assert!(matches!(
        fit_dataset(&path, &FitOptions::default(), &short_sampler()),
        Err(Error::Data(_))
    ));
    let missing = FitOptions {
        value_column: "passengers".into(),
        ..Default::default()
    };
    assert!(matches!(
        fit_dataset(&path, &missing, &short_sampler()),
        Err(Error::Data(_))
    ));
}

#[test]
fn partial_final_season_is_dropped() {
    let values: Vec<f64> = (0..50)
        .map(|t| 1.0 + 0.01 * t as f64 + ((t % 12) as f64).sin())
        .collect();
    let mut rng = rng_from_seed(2);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let values: Vec<f64> = values
        .into_iter()
        .map(|v| v + noise.sample(&mut rng))
        .collect();
    let report = fit_series(values, &FitOptions::default(), &short_sampler()).unwrap();
    assert_eq!(report.n, 48);
}
