//! Ranked probability scores, backtests and the tests built on them.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Day, LeagueDataset, MatchRecord};
use crate::error::{Error, Result};
use crate::estimation::{fit, fit_matches, FitConfig, FitResult, ModelKind};
use crate::grid::Dependence;
use crate::prediction::{predict_day, Market, PredictOptions};
use crate::seed;
use crate::stats::percentile_interval;

/// Allowed deviation of a forecast's total from 1.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// `RPS = 1/(r-1) Σ_{i<r} (Σ_{j≤i} (p̂_j - e_j))²` for classes in their
/// natural order.
pub fn rps(probs: &[f64], realized: usize) -> Result<f64> {
    let r = probs.len();
    if r < 2 {
        return Err(Error::InvalidForecast(format!("need at least two classes, got {r}")));
    }
    if realized >= r {
        return Err(Error::InvalidForecast(format!("realised class {realized} out of range for {r} classes")));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidForecast("probabilities must be finite and non-negative".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidForecast(format!("probabilities sum to {total}")));
    }
    let mut cum = 0.0;
    let mut s = 0.0;
    for (j, p) in probs[..r - 1].iter().enumerate() {
        cum += p - if j == realized { 1.0 } else { 0.0 };
        s += cum * cum;
    }
    Ok(s / (r - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub match_id: u32,
    pub t: Day,
    pub league: String,
    pub market: Market,
    pub model: String,
    pub probs: Vec<f64>,
    pub realized: usize,
    pub rps: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BacktestLedger {
    pub rows: Vec<LedgerRow>,
    /// `(model, day, reason)` for days on which a model could not be fitted.
    pub skipped_days: Vec<(String, Day, String)>,
    /// `(model, match_id, reason)` for fixtures that could not be priced.
    pub skipped_fixtures: Vec<(String, u32, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub kind: ModelKind,
    pub xi: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, xi: f64) -> Self {
        Self {
            name: kind.tag().to_string(),
            kind,
            xi,
        }
    }
}

impl BacktestLedger {
    pub fn models(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.rows.iter().map(|r| r.model.as_str()).collect();
        set.into_iter().collect()
    }

    pub fn rows_for<'a>(&'a self, model: &'a str, market: Market) -> impl Iterator<Item = &'a LedgerRow> + 'a {
        self.rows.iter().filter(move |r| r.model == model && r.market == market)
    }

    pub fn mean_rps(&self, model: &str, market: Market) -> Option<f64> {
        let v: Vec<f64> = self.rows_for(model, market).map(|r| r.rps).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Rows as CSV: `match_id,t,league,market,model,probs,realized,rps` with
    /// the probabilities joined by `;`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["match_id", "t", "league", "market", "model", "probs", "realized", "rps"])?;
        for r in &self.rows {
            let probs: Vec<String> = r.probs.iter().map(|p| p.to_string()).collect();
            w.write_record([
                r.match_id.to_string(),
                r.t.to_string(),
                r.league.clone(),
                r.market.to_string(),
                r.model.clone(),
                probs.join(";"),
                r.realized.to_string(),
                r.rps.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads rows written by [`BacktestLedger::write_csv`], checking that
    /// each stored RPS matches its forecast.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let expected = ["match_id", "t", "league", "market", "model", "probs", "realized", "rps"];
        if headers.len() != expected.len() || headers.iter().zip(expected).any(|(a, b)| a.trim() != b) {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {}", expected.join(",")),
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            let bad = |what: &str| Error::Parse {
                line,
                message: format!("bad {what}"),
            };
            if rec.len() != expected.len() {
                return Err(bad("field count"));
            }
            let market: Market = rec[3].parse().map_err(|_| bad("market"))?;
            let probs: Vec<f64> = rec[5]
                .split(';')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("probs"))?;
            if probs.len() != market.class_count() {
                return Err(bad("probability count"));
            }
            let realized: usize = rec[6].trim().parse().map_err(|_| bad("realized"))?;
            let stored: f64 = rec[7].trim().parse().map_err(|_| bad("rps"))?;
            let value = rps(&probs, realized).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            if !((value - stored).abs() <= 1e-9) {
                return Err(bad("rps (does not match forecast)"));
            }
            rows.push(LedgerRow {
                match_id: rec[0].trim().parse().map_err(|_| bad("match_id"))?,
                t: rec[1].trim().parse().map_err(|_| bad("t"))?,
                league: rec[2].to_string(),
                market,
                model: rec[4].to_string(),
                probs,
                realized,
                rps: stored,
            });
        }
        Ok(Self {
            rows,
            ..Self::default()
        })
    }
}

/// Scores every model on every market over the calendar days. Each model is
/// refitted on every day (warm-started from its previous fit). All models
/// must end up scoring exactly the same `(match, market)` pairs.
pub fn backtest(dataset: &LeagueDataset, models: &[ModelSpec], markets: &[Market], calendar: &[Day], opts: PredictOptions) -> Result<BacktestLedger> {
    if models.is_empty() || markets.is_empty() {
        return Err(Error::InvalidArgument("need at least one model and one market".into()));
    }
    let names: BTreeSet<&str> = models.iter().map(|m| m.name.as_str()).collect();
    if names.len() != models.len() {
        return Err(Error::InvalidArgument("model names must be distinct".into()));
    }
    let per_model: Vec<BacktestLedger> = models
        .par_iter()
        .map(|spec| backtest_one(dataset, spec, markets, calendar, opts))
        .collect::<Result<_>>()?;

    let key = |l: &BacktestLedger| -> BTreeSet<(u32, Market)> { l.rows.iter().map(|r| (r.match_id, r.market)).collect() };
    let first = key(&per_model[0]);
    for (spec, l) in models.iter().zip(&per_model).skip(1) {
        let k = key(l);
        if k != first {
            let only_a = first.difference(&k).count();
            let only_b = k.difference(&first).count();
            return Err(Error::CoverageMismatch(format!(
                "{} and {} disagree on {} scored (match, market) pairs",
                models[0].name,
                spec.name,
                only_a + only_b
            )));
        }
    }
    let mut out = BacktestLedger::default();
    for l in per_model {
        out.rows.extend(l.rows);
        out.skipped_days.extend(l.skipped_days);
        out.skipped_fixtures.extend(l.skipped_fixtures);
    }
    let order: BTreeMap<&str, usize> = models.iter().enumerate().map(|(i, m)| (m.name.as_str(), i)).collect();
    out.rows.sort_by(|a, b| {
        (a.t, a.match_id, a.market, order[a.model.as_str()]).cmp(&(b.t, b.match_id, b.market, order[b.model.as_str()]))
    });
    Ok(out)
}

fn backtest_one(dataset: &LeagueDataset, spec: &ModelSpec, markets: &[Market], calendar: &[Day], opts: PredictOptions) -> Result<BacktestLedger> {
    let config = FitConfig::new(spec.kind, spec.xi);
    let mut ledger = BacktestLedger::default();
    let mut warm: Option<FitResult> = None;
    for &day in calendar {
        let fixtures = dataset.matches_on(day);
        if fixtures.is_empty() {
            continue;
        }
        let f = match fit(dataset, day, &config, warm.as_ref()) {
            Ok(f) => f,
            Err(e @ (Error::InsufficientMatches(_) | Error::EmptyWindow)) => {
                ledger.skipped_days.push((spec.name.clone(), day, e.to_string()));
                continue;
            }
            Err(e) => return Err(e),
        };
        let out = predict_day(&f, fixtures, markets, &spec.name, opts);
        for (id, reason) in out.skipped {
            ledger.skipped_fixtures.push((spec.name.clone(), id, reason));
        }
        let by_id: BTreeMap<u32, &MatchRecord> = fixtures.iter().map(|m| (m.match_id, m)).collect();
        for fc in out.forecasts {
            let m = by_id[&fc.match_id];
            let realized = fc.market.realized_class(m.home_goals, m.away_goals);
            let score = rps(&fc.probs, realized)?;
            ledger.rows.push(LedgerRow {
                match_id: m.match_id,
                t: m.t,
                league: m.league.clone(),
                market: fc.market,
                model: spec.name.clone(),
                probs: fc.probs,
                realized,
                rps: score,
            });
        }
        warm = Some(f);
    }
    Ok(ledger)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    All,
    PerLeague,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffPoint {
    pub t: Day,
    pub match_counter: usize,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffSeries {
    pub group: String,
    pub points: Vec<DiffPoint>,
}

impl DiffSeries {
    pub fn last(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.diff)
    }
}

/// Paired `(t, match_id, league, rps_a, rps_b)`, ordered by `(t, match_id)`.
fn paired(ledger: &BacktestLedger, model_a: &str, model_b: &str, market: Market) -> Result<Vec<(Day, u32, String, f64, f64)>> {
    let a: BTreeMap<(Day, u32), &LedgerRow> = ledger.rows_for(model_a, market).map(|r| ((r.t, r.match_id), r)).collect();
    let b: BTreeMap<(Day, u32), &LedgerRow> = ledger.rows_for(model_b, market).map(|r| ((r.t, r.match_id), r)).collect();
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        return Err(Error::CoverageMismatch(format!(
            "{model_a} and {model_b} are not scored on the same {market} matches"
        )));
    }
    Ok(a.into_iter()
        .zip(b.values())
        .map(|(((t, id), ra), rb)| (t, id, ra.league.clone(), ra.rps, rb.rps))
        .collect())
}

/// Running sum of `rps_a - rps_b` over matches ordered by time; positive
/// values favour `model_b`.
pub fn cumulative_diff(ledger: &BacktestLedger, model_a: &str, model_b: &str, market: Market, grouping: Grouping) -> Result<Vec<DiffSeries>> {
    let pairs = paired(ledger, model_a, model_b, market)?;
    let mut series: BTreeMap<String, DiffSeries> = BTreeMap::new();
    for (t, _, league, ra, rb) in pairs {
        let group = match grouping {
            Grouping::All => "all".to_string(),
            Grouping::PerLeague => league,
        };
        let s = series.entry(group.clone()).or_insert_with(|| DiffSeries { group, points: Vec::new() });
        let prev = s.last();
        s.points.push(DiffPoint {
            t,
            match_counter: s.points.len() + 1,
            diff: prev + (ra - rb),
        });
    }
    if series.is_empty() && grouping == Grouping::All {
        series.insert("all".into(), DiffSeries {
            group: "all".into(),
            points: Vec::new(),
        });
    }
    Ok(series.into_values().collect())
}

/// `t,match_counter,diff,group`.
pub fn write_diff_series_csv<W: Write>(w: W, series: &[DiffSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["t", "match_counter", "diff", "group"])?;
    for s in series {
        for p in &s.points {
            w.write_record([p.t.to_string(), p.match_counter.to_string(), p.diff.to_string(), s.group.clone()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReshuffleReport {
    /// Mean of `rps_a - rps_b`.
    pub observed_diff: f64,
    /// Fraction of replicates with evidence at least as strong as observed,
    /// in the direction of the observed advantage.
    pub exceedance: f64,
    pub n_b: usize,
    pub seed: u64,
    pub n_matches: usize,
}

/// Paired randomisation test on per-match RPS pairs: each replicate swaps
/// every pair independently with probability ½.
pub fn reshuffle_pairs(rps_a: &[f64], rps_b: &[f64], n_b: usize, seed: u64) -> Result<ReshuffleReport> {
    if rps_a.len() != rps_b.len() {
        return Err(Error::InvalidArgument("RPS columns differ in length".into()));
    }
    if n_b == 0 {
        return Err(Error::InvalidArgument("n_b must be positive".into()));
    }
    let n = rps_a.len();
    let d: Vec<f64> = rps_a.iter().zip(rps_b).map(|(a, b)| a - b).collect();
    let observed = if n == 0 { 0.0 } else { d.iter().sum::<f64>() / n as f64 };
    let mut report = ReshuffleReport {
        observed_diff: observed,
        exceedance: 1.0,
        n_b,
        seed,
        n_matches: n,
    };
    if observed == 0.0 {
        return Ok(report);
    }
    let sign = observed.signum();
    // compare sums with a relative slack so the identity permutation counts
    let target = sign * observed * n as f64 * (1.0 - 1e-12);
    let hits: usize = (0..n_b)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream(seed, "reshuffle", i as u64);
            let s: f64 = d.iter().map(|v| if rng.random::<bool>() { -v } else { *v }).sum();
            usize::from(sign * s >= target)
        })
        .sum();
    report.exceedance = hits as f64 / n_b as f64;
    Ok(report)
}

pub fn reshuffle_test(ledger: &BacktestLedger, model_a: &str, model_b: &str, market: Market, n_b: usize, seed: u64) -> Result<ReshuffleReport> {
    let pairs = paired(ledger, model_a, model_b, market)?;
    let a: Vec<f64> = pairs.iter().map(|p| p.3).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.4).collect();
    reshuffle_pairs(&a, &b, n_b, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub n_rep: usize,
    pub dropped: usize,
    pub seed: u64,
    pub warning: Option<String>,
    pub replicates: Vec<f64>,
}

/// Percentile bootstrap interval for θ₃ of a Mar-Co fit at day `t`.
///
/// Each replicate resamples the window's matches with replacement (keeping
/// their dates, hence their time weights) and refits from the baseline.
/// Failed or non-converged replicates are dropped and counted.
pub fn bootstrap_theta_ci(
    dataset: &LeagueDataset,
    t: Day,
    config: &FitConfig,
    baseline: &FitResult,
    n_rep: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapCi> {
    if config.model != ModelKind::MarCo {
        return Err(Error::InvalidArgument("θ₃ intervals need a Mar-Co fit".into()));
    }
    if n_rep < 2 {
        return Err(Error::InvalidArgument("need at least two bootstrap replicates".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level must be in (0, 1), got {level}")));
    }
    let estimate = match baseline.dependence {
        Dependence::MarCo { theta } => theta.t3,
        Dependence::DixonColes { .. } => return Err(Error::InvalidArgument("baseline is not a Mar-Co fit".into())),
    };
    let window = dataset.window(t);
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let draws: Vec<Option<f64>> = (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream(seed, "bootstrap-theta", i as u64);
            let sample: Vec<MatchRecord> = (0..window.len())
                .map(|_| window[rng.random_range(0..window.len())].clone())
                .collect();
            match fit_matches(&sample, dataset.teams(), t, config, Some(baseline)) {
                Ok(f) if f.converged => f.theta().map(|th| th.t3),
                _ => None,
            }
        })
        .collect();
    let replicates: Vec<f64> = draws.iter().flatten().copied().collect();
    let dropped = n_rep - replicates.len();
    if replicates.is_empty() {
        return Err(Error::InvalidArgument("every bootstrap replicate failed".into()));
    }
    let (lower, upper) = percentile_interval(&replicates, level);
    let warning = (dropped * 10 > n_rep).then(|| format!("{dropped} of {n_rep} bootstrap replicates dropped"));
    Ok(BootstrapCi {
        estimate,
        lower,
        upper,
        level,
        n_rep,
        dropped,
        seed,
        warning,
        replicates,
    })
}
