//! End-to-end flows across modules.

use std::io::Write;

use scoreline::data::{ingest_files, IngestOptions, LeagueDataset};
use scoreline::diagnostics::{goals, ratio_table};
use scoreline::estimation::{fit, tune_xi, FitConfig, ModelKind};
use scoreline::evaluation::{
    backtest, bootstrap_theta_ci, cumulative_diff, reshuffle_test, BacktestLedger, Grouping, ModelSpec,
};
use scoreline::grid::Dependence;
use scoreline::marco::Theta;
use scoreline::params::ParamFile;
use scoreline::prediction::{Market, PredictOptions};
use scoreline::simulate::{generate, SimScenario};

fn write_file(dir: &std::path::Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
    p
}

#[test]
fn multi_file_ingest_merges_by_date() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_file(
        dir.path(),
        "a.csv",
        "Div,Date,HomeTeam,AwayTeam,FTHG,FTAG\nE0,16/08/2014,Arsenal,Chelsea,2,1\nE0,30/08/2014,Everton,Arsenal,0,0\n",
    );
    let b = write_file(
        dir.path(),
        "b.csv",
        "Div,Date,HomeTeam,AwayTeam,FTHG,FTAG\nE0,23/08/14,Chelsea,Everton,3,3\n",
    );
    let ds = ingest_files(&[a, b], &IngestOptions::default()).unwrap();
    let order: Vec<(i64, &str, &str)> = ds
        .matches()
        .iter()
        .map(|m| (m.t, ds.team_name(m.home_team), ds.team_name(m.away_team)))
        .collect();
    assert_eq!(
        order,
        vec![(0, "Arsenal", "Chelsea"), (7, "Chelsea", "Everton"), (14, "Everton", "Arsenal")]
    );
    assert_eq!(ds.seasons(), vec!["2014-2015"]);

    let mut buf = Vec::new();
    ds.write_canonical(&mut buf).unwrap();
    assert_eq!(LeagueDataset::read_canonical(buf.as_slice()).unwrap(), ds);
}

#[test]
fn simulate_fit_save_and_reload_parameters() {
    let sc = SimScenario::new(8, 3, Dependence::MarCo { theta: Theta::with_t3(0.05) }, 21);
    let (ds, _) = generate(&sc).unwrap();
    let f = fit(&ds, ds.end_day(), &FitConfig::new(ModelKind::MarCo, 0.002), None).unwrap();
    assert!(f.converged);
    let pf = ParamFile::from_fit(&f);
    let mut buf = Vec::new();
    pf.write(&mut buf).unwrap();
    let back = ParamFile::parse(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back, pf);
    let r = back.ratings_for(&ds).unwrap();
    assert_eq!(r.alpha(), f.ratings.alpha());
    assert_eq!(r.gamma, f.ratings.gamma);
}

#[test]
fn backtest_tune_and_compare() {
    let mut sc = SimScenario::new(10, 3, Dependence::independent_dc(), 5);
    sc.trajectory = scoreline::simulate::Trajectory::RandomWalk { step: 0.1 };
    let (ds, _) = generate(&sc).unwrap();
    let cal = ds.prediction_calendar(1).unwrap();

    let tuning = tune_xi(&ds, ModelKind::DixonColes, &[0.0, 0.005], &cal).unwrap();
    assert_eq!(tuning.curve.len(), 2);
    assert!(tuning.curve.iter().any(|r| r.xi == tuning.best_xi));

    let models = [ModelSpec::new(ModelKind::DixonColes, 0.0), ModelSpec::new(ModelKind::MarCo, 0.0)];
    let markets = [Market::OneXTwo, Market::UO25];
    let ledger = backtest(&ds, &models, &markets, &cal, PredictOptions::default()).unwrap();
    assert!(ledger.skipped_days.is_empty());
    let n_dc = ledger.rows_for("dc", Market::OneXTwo).count();
    assert_eq!(n_dc, ledger.rows_for("marco", Market::OneXTwo).count());
    assert!(n_dc > 0);

    let mut buf = Vec::new();
    ledger.write_csv(&mut buf).unwrap();
    assert_eq!(BacktestLedger::read_csv(buf.as_slice()).unwrap().rows.len(), ledger.rows.len());

    let same = cumulative_diff(&ledger, "dc", "dc", Market::UO25, Grouping::All).unwrap();
    assert!(same[0].points.iter().all(|p| p.diff == 0.0));
    let r1 = reshuffle_test(&ledger, "dc", "marco", Market::OneXTwo, 500, 3).unwrap();
    let r2 = reshuffle_test(&ledger, "dc", "marco", Market::OneXTwo, 500, 3).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(r1.n_matches, n_dc);
}

#[test]
fn backtest_is_reproducible() {
    let (ds, _) = generate(&SimScenario::new(6, 2, Dependence::independent_dc(), 9)).unwrap();
    let cal = ds.prediction_calendar(1).unwrap();
    let mut dc = ModelSpec::new(ModelKind::DixonColes, 0.0);
    dc.name = "a".into();
    let first = backtest(&ds, &[dc.clone()], &[Market::OneXTwo], &cal, PredictOptions::default()).unwrap();
    let second = backtest(&ds, &[dc], &[Market::OneXTwo], &cal, PredictOptions::default()).unwrap();
    assert_eq!(first, second);
}

#[test]
fn bootstrap_interval_covers_the_estimate() {
    let sc = SimScenario::new(8, 2, Dependence::MarCo { theta: Theta::with_t3(0.05) }, 14);
    let (ds, _) = generate(&sc).unwrap();
    let t = ds.end_day();
    let cfg = FitConfig::new(ModelKind::MarCo, 0.0);
    let base = fit(&ds, t, &cfg, None).unwrap();
    let ci = bootstrap_theta_ci(&ds, t, &cfg, &base, 40, 0.95, 2).unwrap();
    assert!(ci.lower <= ci.upper);
    assert_eq!(ci.estimate, base.theta().unwrap().t3);
    assert_eq!(ci.replicates.len() + ci.dropped, 40);
    let again = bootstrap_theta_ci(&ds, t, &cfg, &base, 40, 0.95, 2).unwrap();
    assert_eq!(ci, again);
}

#[test]
fn ratio_table_rows_average_to_100() {
    let (ds, _) = generate(&SimScenario::new(20, 2, Dependence::independent_dc(), 4)).unwrap();
    let (x, y) = goals(&ds);
    let table = ratio_table(&x, &y, 50, 30, 1).unwrap();
    let n = y.len() as f64;
    for hx in 0..=*x.iter().max().unwrap() {
        let mut acc = 0.0;
        let mut any = false;
        for hy in 0..=*y.iter().max().unwrap() {
            let fy = y.iter().filter(|&&v| v == hy).count() as f64 / n;
            if let Some(c) = table.get(hx, hy) {
                acc += fy * c.ratio;
                any = true;
            }
        }
        if any {
            assert!((acc - 100.0).abs() < 1e-6, "row {hx}: {acc}");
        }
    }
}
