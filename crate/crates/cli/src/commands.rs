//! One function per subcommand. Each writes its outputs and a manifest under
//! `--out` and reports whether it finished cleanly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;
use serde_json::json;

use scoreline::data::{ingest_files, DateFormat, IngestOptions, LeagueDataset};
use scoreline::diagnostics::{
    collapsed_independence_test, dispersion_test, goals, kl_poisson_test, pearson_independence_test, ratio_table,
    RatioTable, TestReport, Tail, AGGREGATION_CAVEAT,
};
use scoreline::estimation::{self, default_xi_grid, FitConfig, ModelKind};
use scoreline::evaluation::{self, cumulative_diff, reshuffle_test, write_diff_series_csv, Grouping, ModelSpec};
use scoreline::grid::Dependence;
use scoreline::marco::Theta;
use scoreline::params::ParamFile;
use scoreline::prediction::PredictOptions;
use scoreline::seed::derive_seed;
use scoreline::simulate::{generate, SimScenario, Trajectory};

use crate::manifest::Manifest;
use crate::{BacktestArgs, Common, DiagnoseArgs, FitArgs, IngestArgs, Outcome, SimulateArgs, TuneArgs};

fn prepare(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))
}

fn create(out: &Path, name: &str, manifest: &mut Manifest) -> Result<BufWriter<File>> {
    let path = out.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    manifest.outputs.push(name.to_string());
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T, manifest: &mut Manifest) -> Result<()> {
    let mut w = create(out, name, manifest)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

fn load(path: &Path) -> Result<LeagueDataset> {
    let ds = LeagueDataset::load_canonical(path).with_context(|| format!("reading dataset {}", path.display()))?;
    ensure!(!ds.is_empty(), "dataset {} has no matches", path.display());
    Ok(ds)
}

fn finish(manifest: Manifest, out: &Path) -> Result<Outcome> {
    let warnings = manifest.warnings.clone();
    manifest.write(out)?;
    Ok(if warnings.is_empty() {
        Outcome::Clean
    } else {
        Outcome::Warnings(warnings)
    })
}

/// A seed for one purpose, recorded in the manifest.
fn stream_seed(manifest: &mut Manifest, root: u64, tag: &str) -> u64 {
    let s = derive_seed(root, tag, 0);
    manifest.streams.push((tag.to_string(), s));
    s
}

pub fn ingest(args: &IngestArgs, common: &Common, argv: &[String]) -> Result<Outcome> {
    let date_format = args.date_format.as_deref().map(str::parse::<DateFormat>).transpose()?;
    let opts = IngestOptions {
        date_format,
        league: args.league.clone(),
    };
    let ds = ingest_files(&args.data, &opts)?;
    prepare(&common.out)?;
    let config = json!({
        "data": args.data,
        "date_format": args.date_format,
        "league": args.league,
    });
    let mut manifest = Manifest::new("ingest", argv, common.seed, config);
    ds.write_canonical(create(&common.out, "dataset.csv", &mut manifest)?)?;
    println!(
        "{} matches, {} teams, {} season(s); {} rows without a result skipped, {} duplicates dropped",
        ds.matches().len(),
        ds.team_count(),
        ds.seasons().len(),
        ds.stats.skipped_rows,
        ds.stats.duplicate_rows
    );
    finish(manifest, &common.out)
}

pub fn simulate(args: &SimulateArgs, common: &Common, argv: &[String]) -> Result<Outcome> {
    let dependence = match args.model {
        ModelKind::DixonColes => Dependence::DixonColes { rho: args.rho },
        ModelKind::MarCo => Dependence::MarCo {
            theta: Theta::new(args.theta1, args.theta2, args.theta3),
        },
    };
    let mut scenario = SimScenario::new(args.teams, args.seasons, dependence, common.seed);
    scenario.gamma = args.gamma;
    if args.step > 0.0 {
        scenario.trajectory = Trajectory::RandomWalk { step: args.step };
    }
    let (ds, truth) = generate(&scenario)?;
    prepare(&common.out)?;
    let mut manifest = Manifest::new("simulate", argv, common.seed, serde_json::to_value(&scenario)?);
    manifest.streams.push(("sim-ratings".into(), derive_seed(common.seed, "sim-ratings", 0)));
    for s in 0..args.seasons {
        manifest.streams.push((format!("sim-season/{s}"), derive_seed(common.seed, "sim-season", s as u64)));
    }
    ds.write_canonical(create(&common.out, "dataset.csv", &mut manifest)?)?;
    truth.write_json(create(&common.out, "truth.json", &mut manifest)?)?;
    println!("{} matches over {} season(s)", ds.matches().len(), args.seasons);
    finish(manifest, &common.out)
}

#[derive(Serialize)]
struct FitSummary {
    model: ModelKind,
    xi: f64,
    day: i64,
    gamma: f64,
    dependence: Dependence,
    log_likelihood: f64,
    stage1_log_likelihood: f64,
    converged: bool,
    iterations: usize,
    n_matches: usize,
    n_effective: f64,
}

pub fn fit(args: &FitArgs, common: &Common, argv: &[String]) -> Result<Outcome> {
    let ds = load(&args.data)?;
    if args.n_boot > 0 && args.model != ModelKind::MarCo {
        bail!("--n-boot needs --model marco");
    }
    let t = args.day.unwrap_or_else(|| ds.end_day());
    let config = FitConfig::new(args.model, args.xi);
    let f = estimation::fit(&ds, t, &config, None)?;
    prepare(&common.out)?;
    let mut manifest = Manifest::new(
        "fit",
        argv,
        common.seed,
        json!({"data": args.data, "model": args.model, "xi": args.xi, "day": t, "n_boot": args.n_boot, "level": args.level}),
    );
    if !f.converged {
        manifest.warnings.push(format!("optimizer stopped after {} iterations without converging", f.iterations));
    }
    ParamFile::from_fit(&f).write(create(&common.out, "params.txt", &mut manifest)?)?;
    let summary = FitSummary {
        model: f.model,
        xi: f.xi,
        day: f.day,
        gamma: f.ratings.gamma,
        dependence: f.dependence,
        log_likelihood: f.log_likelihood,
        stage1_log_likelihood: f.stage1_log_likelihood,
        converged: f.converged,
        iterations: f.iterations,
        n_matches: f.n_matches,
        n_effective: f.n_effective,
    };
    write_json(&common.out, "fit.json", &summary, &mut manifest)?;
    println!("log-likelihood {:.4} over {} matches; dependence {:?}", f.log_likelihood, f.n_matches, f.dependence);
    if args.n_boot > 0 {
        let seed = stream_seed(&mut manifest, common.seed, "bootstrap");
        let ci = evaluation::bootstrap_theta_ci(&ds, t, &config, &f, args.n_boot, args.level, seed)?;
        if let Some(w) = &ci.warning {
            manifest.warnings.push(w.clone());
        }
        println!(
            "θ₃ = {:.4}, {:.0}% interval [{:.4}, {:.4}] from {} replicates ({} dropped)",
            ci.estimate,
            100.0 * ci.level,
            ci.lower,
            ci.upper,
            ci.replicates.len(),
            ci.dropped
        );
        write_json(&common.out, "bootstrap.json", &ci, &mut manifest)?;
    }
    finish(manifest, &common.out)
}

/// `a,b,c` or `start:stop:step` (inclusive).
pub fn parse_xi_grid(s: &str) -> Result<Vec<f64>> {
    let grid: Vec<f64> = if let [start, stop, step] = s.split(':').collect::<Vec<_>>()[..] {
        let (start, stop, step): (f64, f64, f64) = (start.trim().parse()?, stop.trim().parse()?, step.trim().parse()?);
        ensure!(step > 0.0 && stop >= start, "range needs step > 0 and stop ≥ start");
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        ensure!(n < 100_000, "range has too many points");
        (0..=n).map(|i| start + i as f64 * step).collect()
    } else {
        s.split(',').map(|v| v.trim().parse::<f64>()).collect::<Result<_, _>>().context("parsing --xi-grid")?
    };
    ensure!(!grid.is_empty(), "empty ξ grid");
    ensure!(grid.iter().all(|x| x.is_finite() && *x >= 0.0), "ξ values must be finite and non-negative");
    Ok(grid)
}

pub fn tune_xi(args: &TuneArgs, common: &Common, argv: &[String]) -> Result<Outcome> {
    let ds = load(&args.data)?;
    let grid = match &args.xi_grid {
        Some(s) => parse_xi_grid(s)?,
        None => default_xi_grid(),
    };
    let calendar = ds.prediction_calendar(args.burn_in_seasons)?;
    ensure!(!calendar.is_empty(), "no prediction days after {} burn-in season(s)", args.burn_in_seasons);
    let tuning = estimation::tune_xi(&ds, args.model, &grid, &calendar)?;
    prepare(&common.out)?;
    let mut manifest = Manifest::new(
        "tune-xi",
        argv,
        common.seed,
        json!({"data": args.data, "model": args.model, "xi_grid": grid, "burn_in_seasons": args.burn_in_seasons}),
    );
    let mut w = csv::Writer::from_writer(create(&common.out, "sxi.csv", &mut manifest)?);
    w.write_record(["xi", "s", "n_matches", "skipped_days", "skipped_matches"])?;
    for r in &tuning.curve {
        w.write_record([
            r.xi.to_string(),
            r.s.to_string(),
            r.n_matches.to_string(),
            r.skipped_days.to_string(),
            r.skipped_matches.to_string(),
        ])?;
    }
    w.flush()?;
    drop(w);
    let skipped = tuning.curve.first().map_or(0, |r| r.skipped_matches);
    if skipped > 0 {
        manifest
            .warnings
            .push(format!("{skipped} match(es) could not be forecast and are left out of S(ξ)"));
    }
    write_json(
        &common.out,
        "tuning.json",
        &json!({"model": args.model, "best_xi": tuning.best_xi, "curve": tuning.curve}),
        &mut manifest,
    )?;
    println!("ξ* = {} (S = {:.4})", tuning.best_xi, tuning.curve.iter().map(|r| r.s).fold(f64::MIN, f64::max));
    finish(manifest, &common.out)
}

fn model_specs(args: &BacktestArgs) -> Result<Vec<ModelSpec>> {
    let specs: Vec<ModelSpec> = if let Some(path) = &args.models_file {
        let f = File::open(path).with_context(|| format!("opening model file {}", path.display()))?;
        serde_json::from_reader(f).with_context(|| format!("parsing model file {}", path.display()))?
    } else {
        ensure!(
            args.xi.len() == 1 || args.xi.len() == args.model.len(),
            "give one --xi or one per model ({} models, {} values)",
            args.model.len(),
            args.xi.len()
        );
        let mut specs: Vec<ModelSpec> = args
            .model
            .iter()
            .enumerate()
            .map(|(i, &kind)| ModelSpec::new(kind, args.xi[if args.xi.len() == 1 { 0 } else { i }]))
            .collect();
        // repeated kinds get distinct names
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for s in &mut specs {
            let n = seen.entry(s.name.clone()).or_default();
            *n += 1;
            if *n > 1 {
                s.name = format!("{}-{}", s.name, n);
            }
        }
        specs
    };
    ensure!(!specs.is_empty(), "no models to backtest");
    let mut names: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    ensure!(names.len() == specs.len(), "model names must be distinct");
    Ok(specs)
}

pub fn backtest(args: &BacktestArgs, common: &Common, argv: &[String]) -> Result<Outcome> {
    let specs = model_specs(args)?;
    let ds = load(&args.data)?;
    let calendar = ds.prediction_calendar(args.burn_in_seasons)?;
    ensure!(!calendar.is_empty(), "no prediction days after {} burn-in season(s)", args.burn_in_seasons);
    let ledger = evaluation::backtest(&ds, &specs, &args.markets, &calendar, PredictOptions::default())?;
    prepare(&common.out)?;
    let mut manifest = Manifest::new(
        "backtest",
        argv,
        common.seed,
        json!({
            "data": args.data,
            "models": specs,
            "markets": args.markets.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "burn_in_seasons": args.burn_in_seasons,
            "n_b": args.n_b,
            "per_league": args.per_league,
        }),
    );
    ledger.write_csv(create(&common.out, "ledger.csv", &mut manifest)?)?;
    for (model, day, reason) in &ledger.skipped_days {
        manifest.warnings.push(format!("{model}: no fit for day {day}: {reason}"));
    }
    for (model, id, reason) in &ledger.skipped_fixtures {
        manifest.warnings.push(format!("{model}: match {id} not priced: {reason}"));
    }
    write_json(
        &common.out,
        "skipped.json",
        &json!({"days": ledger.skipped_days, "fixtures": ledger.skipped_fixtures}),
        &mut manifest,
    )?;

    let mut summary: BTreeMap<String, BTreeMap<String, Option<f64>>> = BTreeMap::new();
    for s in &specs {
        let row = summary.entry(s.name.clone()).or_default();
        for m in &args.markets {
            row.insert(m.to_string(), ledger.mean_rps(&s.name, *m));
        }
    }
    for (model, row) in &summary {
        let cells: Vec<String> = row
            .iter()
            .map(|(m, v)| format!("{m} {}", v.map_or("-".into(), |v| format!("{v:.5}"))))
            .collect();
        println!("{model}: mean RPS {}", cells.join(", "));
    }

    let mut reshuffles = BTreeMap::new();
    if let [a, b, ..] = &specs[..] {
        for (i, &market) in args.markets.iter().enumerate() {
            let grouping = if args.per_league { Grouping::PerLeague } else { Grouping::All };
            let mut series = cumulative_diff(&ledger, &a.name, &b.name, market, Grouping::All)?;
            if grouping == Grouping::PerLeague {
                series.extend(cumulative_diff(&ledger, &a.name, &b.name, market, grouping)?);
            }
            write_diff_series_csv(create(&common.out, &format!("diff_{market}.csv"), &mut manifest)?, &series)?;
            let seed = derive_seed(common.seed, "reshuffle", i as u64);
            manifest.streams.push((format!("reshuffle/{market}"), seed));
            let r = reshuffle_test(&ledger, &a.name, &b.name, market, args.n_b, seed)?;
            println!(
                "{market}: mean RPS {} − {} = {:+.5}, reshuffle exceedance {:.4}",
                a.name, b.name, r.observed_diff, r.exceedance
            );
            reshuffles.insert(market.to_string(), r);
        }
    }
    write_json(
        &common.out,
        "summary.json",
        &json!({"mean_rps": summary, "reshuffle": reshuffles}),
        &mut manifest,
    )?;
    finish(manifest, &common.out)
}

#[derive(Serialize)]
struct DiagnosticGroup {
    label: String,
    n_matches: usize,
    pearson: Option<TestReport>,
    collapsed: Option<TestReport>,
    dispersion_home: Option<TestReport>,
    dispersion_away: Option<TestReport>,
    kl_home: Option<TestReport>,
    kl_away: Option<TestReport>,
    ratio_table: Option<RatioTable>,
}

pub fn diagnose(args: &DiagnoseArgs, common: &Common, argv: &[String]) -> Result<Outcome> {
    let ds = load(&args.data)?;
    prepare(&common.out)?;
    let mut manifest = Manifest::new(
        "diagnose",
        argv,
        common.seed,
        json!({"data": args.data, "n_rep": args.n_rep, "max_goals": args.max_goals, "per_league": args.per_league}),
    );
    let tags = ["pearson", "collapsed", "dispersion-home", "dispersion-away", "kl-home", "kl-away", "ratio-table"];
    let seeds: Vec<u64> = tags.iter().map(|t| stream_seed(&mut manifest, common.seed, t)).collect();

    let mut parts: Vec<(String, LeagueDataset)> = vec![("all".into(), ds.clone())];
    if args.per_league {
        parts.extend(ds.leagues().into_iter().map(|l| (l.to_string(), ds.filter_league(l))));
    }
    let mut groups = Vec::new();
    for (label, part) in &parts {
        let (x, y) = goals(part);
        let mut keep = |name: &str, r: scoreline::Result<TestReport>| match r {
            Ok(r) => Some(r),
            Err(e) => {
                manifest.warnings.push(format!("{label}: {name} test not run: {e}"));
                None
            }
        };
        let group = DiagnosticGroup {
            label: label.clone(),
            n_matches: x.len(),
            pearson: keep("pearson", pearson_independence_test(&x, &y, args.n_rep, seeds[0])),
            collapsed: keep("collapsed", collapsed_independence_test(&x, &y, args.n_rep, seeds[1], Tail::Left)),
            dispersion_home: keep("dispersion (home)", dispersion_test(&x, args.n_rep, seeds[2])),
            dispersion_away: keep("dispersion (away)", dispersion_test(&y, args.n_rep, seeds[3])),
            kl_home: keep("kl (home)", kl_poisson_test(&x, args.n_rep, seeds[4])),
            kl_away: keep("kl (away)", kl_poisson_test(&y, args.n_rep, seeds[5])),
            ratio_table: match ratio_table(&x, &y, args.n_rep, args.max_goals, seeds[6]) {
                Ok(t) => Some(t),
                Err(e) => {
                    manifest.warnings.push(format!("{label}: ratio table not built: {e}"));
                    None
                }
            },
        };
        if let Some(t) = &group.ratio_table {
            t.write_csv(create(&common.out, &format!("ratio_table_{}.csv", file_label(label)), &mut manifest)?)?;
        }
        for r in [&group.pearson, &group.collapsed, &group.dispersion_home, &group.dispersion_away, &group.kl_home, &group.kl_away]
            .into_iter()
            .flatten()
        {
            println!("{label}: {} statistic {:.5}, p = {:.4}", r.name, r.statistic, r.p_value);
        }
        groups.push(group);
    }
    write_json(
        &common.out,
        "diagnostics.json",
        &json!({"caveat": AGGREGATION_CAVEAT, "groups": groups}),
        &mut manifest,
    )?;
    finish(manifest, &common.out)
}

/// League labels as file-name fragments.
fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
