//! Resampling tests on aggregated score pairs: independence, the collapsed
//! low-score test, observed/expected ratio tables, Poissonity of the
//! margins, and the Spearman Monte Carlo curve for Mar-Co.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LeagueDataset;
use crate::error::{Error, Result};
use crate::marco::{sample_match, Theta};
use crate::poisson;
use crate::seed;
use crate::stats::{mean, pearson, quantile, spearman, variance};

/// Attached to every report built from pooled `(x, y)` pairs.
pub const AGGREGATION_CAVEAT: &str = "Computed on aggregated (x, y) pairs pooled over all matches; team-specific \
     dependence is not tested and the results should be approached with particular caution.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub tail: Tail,
    pub n_replicates: usize,
    pub seed: u64,
    pub notes: Vec<String>,
}

/// `(1 + #{replicates at least as extreme}) / (1 + n)`.
pub fn resampling_p_value(observed: f64, replicates: &[f64], center: f64, tail: Tail) -> f64 {
    // tolerate rounding so that ties with the observed value count
    let eps = 1e-12 * (1.0 + observed.abs());
    let hits = replicates
        .iter()
        .filter(|&&r| match tail {
            Tail::Right => r >= observed - eps,
            Tail::Left => r <= observed + eps,
            Tail::Both => (r - center).abs() >= (observed - center).abs() - eps,
        })
        .count();
    (1 + hits) as f64 / (1 + replicates.len()) as f64
}

fn check_reps(n_rep: usize) -> Result<()> {
    if n_rep == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    Ok(())
}

fn as_f64(v: &[u32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

fn check_pairs(x: &[u32], y: &[u32]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("margins differ in length".into()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("need at least two matches".into()));
    }
    Ok(())
}

fn correlation(x: &[f64], y: &[f64], which: &'static str) -> Result<f64> {
    pearson(x, y).ok_or(Error::ZeroVariance(which))
}

/// Home and away goals of every match.
pub fn goals(dataset: &LeagueDataset) -> (Vec<u32>, Vec<u32>) {
    dataset.matches().iter().map(|m| (m.home_goals, m.away_goals)).unzip()
}

/// Pearson correlation of `(x, y)`; the null re-pairs the data by permuting
/// the away column. Two-sided.
pub fn pearson_independence_test(x: &[u32], y: &[u32], n_rep: usize, seed: u64) -> Result<TestReport> {
    check_pairs(x, y)?;
    check_reps(n_rep)?;
    let (xf, yf) = (as_f64(x), as_f64(y));
    let observed = correlation(&xf, &yf, "goal margin")?;
    let reps: Vec<f64> = (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream(seed, "pearson", i as u64);
            let mut perm = yf.clone();
            shuffle(&mut perm, &mut rng);
            pearson(&xf, &perm).unwrap_or(0.0)
        })
        .collect();
    Ok(TestReport {
        name: "pearson_independence".into(),
        statistic: observed,
        p_value: resampling_p_value(observed, &reps, 0.0, Tail::Both),
        tail: Tail::Both,
        n_replicates: n_rep,
        seed,
        notes: vec![AGGREGATION_CAVEAT.into()],
    })
}

fn shuffle<T, R: Rng + ?Sized>(v: &mut [T], rng: &mut R) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

/// Correlation of `max(1, x)` and `max(1, y)`, merging 0 and 1 goals into one
/// event. The null resamples each collapsed margin independently with
/// replacement. `tail` fixes the alternative; the conventional choice is
/// [`Tail::Left`].
pub fn collapsed_independence_test(x: &[u32], y: &[u32], n_rep: usize, seed: u64, tail: Tail) -> Result<TestReport> {
    check_pairs(x, y)?;
    check_reps(n_rep)?;
    let xc: Vec<f64> = x.iter().map(|&v| v.max(1) as f64).collect();
    let yc: Vec<f64> = y.iter().map(|&v| v.max(1) as f64).collect();
    let observed = correlation(&xc, &yc, "collapsed goal margin")?;
    let n = xc.len();
    let reps: Vec<f64> = (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream(seed, "collapsed", i as u64);
            let xs: Vec<f64> = (0..n).map(|_| xc[rng.random_range(0..n)]).collect();
            let ys: Vec<f64> = (0..n).map(|_| yc[rng.random_range(0..n)]).collect();
            pearson(&xs, &ys).unwrap_or(0.0)
        })
        .collect();
    Ok(TestReport {
        name: "collapsed_independence".into(),
        statistic: observed,
        p_value: resampling_p_value(observed, &reps, 0.0, tail),
        tail,
        n_replicates: n_rep,
        seed,
        notes: vec![AGGREGATION_CAVEAT.into(), "scores transformed to max(1, goals)".into()],
    })
}

/// Sample variance over sample mean.
pub fn dispersion_index(counts: &[f64]) -> f64 {
    variance(counts) / mean(counts)
}

fn check_margin(counts: &[u32]) -> Result<Vec<f64>> {
    if counts.len() < 2 {
        return Err(Error::InvalidArgument("need at least two observations".into()));
    }
    let c = as_f64(counts);
    if mean(&c) <= 0.0 {
        return Err(Error::ZeroVariance("margin has zero mean"));
    }
    Ok(c)
}

fn poisson_sample<R: Rng + ?Sized>(rate: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let d = Poisson::new(rate).expect("positive rate");
    (0..n).map(|_| d.sample(rng)).collect()
}

/// Variance-to-mean ratio against a parametric Poisson(x̄) null.
/// One-sided towards overdispersion.
pub fn dispersion_test(counts: &[u32], n_rep: usize, seed: u64) -> Result<TestReport> {
    check_reps(n_rep)?;
    let c = check_margin(counts)?;
    let xbar = mean(&c);
    let observed = dispersion_index(&c);
    let reps: Vec<f64> = (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream(seed, "dispersion", i as u64);
            let s = poisson_sample(xbar, c.len(), &mut rng);
            let m = mean(&s);
            if m > 0.0 {
                variance(&s) / m
            } else {
                0.0
            }
        })
        .collect();
    Ok(TestReport {
        name: "dispersion".into(),
        statistic: observed,
        p_value: resampling_p_value(observed, &reps, 1.0, Tail::Right),
        tail: Tail::Right,
        n_replicates: n_rep,
        seed,
        notes: vec![AGGREGATION_CAVEAT.into()],
    })
}

/// `Σ_h f̂(h) ln(f̂(h) / Poisson(h; x̄))` over the observed support.
pub fn kl_to_poisson(counts: &[f64]) -> f64 {
    let n = counts.len() as f64;
    let xbar = counts.iter().sum::<f64>() / n;
    let max = counts.iter().fold(0.0f64, |m, &v| m.max(v)) as usize;
    let mut freq = vec![0usize; max + 1];
    for &v in counts {
        freq[v as usize] += 1;
    }
    freq.iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(h, &c)| {
            let f = c as f64 / n;
            f * (f.ln() - poisson::ln_pmf(h as u32, xbar))
        })
        .sum()
}

/// Kullback–Leibler divergence from the fitted Poisson; each null replicate
/// is a Poisson(x̄) sample scored against its own mean. One-sided.
pub fn kl_poisson_test(counts: &[u32], n_rep: usize, seed: u64) -> Result<TestReport> {
    check_reps(n_rep)?;
    let c = check_margin(counts)?;
    let xbar = mean(&c);
    let observed = kl_to_poisson(&c);
    let reps: Vec<f64> = (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream(seed, "kl", i as u64);
            let s = poisson_sample(xbar, c.len(), &mut rng);
            if s.iter().any(|&v| v > 0.0) {
                kl_to_poisson(&s)
            } else {
                0.0
            }
        })
        .collect();
    Ok(TestReport {
        name: "kl_poisson".into(),
        statistic: observed,
        p_value: resampling_p_value(observed, &reps, 0.0, Tail::Right),
        tail: Tail::Right,
        n_replicates: n_rep,
        seed,
        notes: vec![AGGREGATION_CAVEAT.into()],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioCell {
    /// `100 · f_xy / (f_x f_y)`.
    pub ratio: f64,
    pub se: f64,
    pub count: usize,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub max_goals: u32,
    /// `cells[x][y]`; `None` where no match ended `x–y`.
    pub cells: Vec<Vec<Option<RatioCell>>>,
    pub n_replicates: usize,
    pub seed: u64,
    pub notes: Vec<String>,
}

impl RatioTable {
    pub fn get(&self, x: u32, y: u32) -> Option<&RatioCell> {
        self.cells.get(x as usize)?.get(y as usize)?.as_ref()
    }

    pub fn present(&self) -> impl Iterator<Item = &RatioCell> {
        self.cells.iter().flatten().flatten()
    }

    /// Home goals down, away goals across, `ratio (se)` per cell with a
    /// trailing `*` on flagged cells. Empty cells are blank.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["x\\y".to_string()];
        header.extend((0..=self.max_goals).map(|y| y.to_string()));
        w.write_record(&header)?;
        for (x, row) in self.cells.iter().enumerate() {
            let mut rec = vec![x.to_string()];
            rec.extend(row.iter().map(|c| match c {
                Some(c) => format!("{:.2} ({:.2}){}", c.ratio, c.se, if c.significant { "*" } else { "" }),
                None => String::new(),
            }));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Ratios on `{0..=max_goals}²` for one sample, `None` where the joint count
/// is zero.
fn ratios(x: &[u32], y: &[u32], max_goals: u32) -> (Vec<Option<f64>>, Vec<usize>) {
    let side = max_goals as usize + 1;
    let n = x.len() as f64;
    let mut fx = vec![0usize; side];
    let mut fy = vec![0usize; side];
    let mut fxy = vec![0usize; side * side];
    for (&a, &b) in x.iter().zip(y) {
        let (a, b) = (a as usize, b as usize);
        if a < side {
            fx[a] += 1;
        }
        if b < side {
            fy[b] += 1;
        }
        if a < side && b < side {
            fxy[a * side + b] += 1;
        }
    }
    let out = (0..side * side)
        .map(|i| {
            let (a, b) = (i / side, i % side);
            (fxy[i] > 0).then(|| 100.0 * fxy[i] as f64 * n / (fx[a] as f64 * fy[b] as f64))
        })
        .collect();
    (out, fxy)
}

/// Observed joint frequency over the product of the marginal frequencies,
/// ×100, with case-bootstrap standard errors. A cell is flagged when its
/// ratio is more than 1.96 SE away from 100.
pub fn ratio_table(x: &[u32], y: &[u32], n_rep: usize, max_goals: u32, seed: u64) -> Result<RatioTable> {
    check_pairs(x, y)?;
    if n_rep < 2 {
        return Err(Error::InvalidArgument("need at least two bootstrap replicates for a standard error".into()));
    }
    let side = max_goals as usize + 1;
    let (obs, counts) = ratios(x, y, max_goals);
    let n = x.len();
    let reps: Vec<Vec<Option<f64>>> = (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream(seed, "ratio-table", i as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let xs: Vec<u32> = idx.iter().map(|&k| x[k]).collect();
            let ys: Vec<u32> = idx.iter().map(|&k| y[k]).collect();
            let (r, cnt) = ratios(&xs, &ys, max_goals);
            // a resample that misses the cell has ratio 0 when its margins exist
            r.into_iter()
                .zip(cnt)
                .enumerate()
                .map(|(c, (v, k))| v.or_else(|| (k == 0 && margin_present(&xs, &ys, c / side, c % side)).then_some(0.0)))
                .collect()
        })
        .collect();
    let mut cells = vec![vec![None; side]; side];
    for c in 0..side * side {
        let Some(ratio) = obs[c] else { continue };
        let vals: Vec<f64> = reps.iter().filter_map(|r| r[c]).collect();
        let se = if vals.len() >= 2 { variance(&vals).sqrt() } else { f64::NAN };
        cells[c / side][c % side] = Some(RatioCell {
            ratio,
            se,
            count: counts[c],
            significant: se.is_finite() && (ratio - 100.0).abs() > 1.96 * se,
        });
    }
    Ok(RatioTable {
        max_goals,
        cells,
        n_replicates: n_rep,
        seed,
        notes: vec![AGGREGATION_CAVEAT.into()],
    })
}

fn margin_present(x: &[u32], y: &[u32], a: usize, b: usize) -> bool {
    x.iter().any(|&v| v as usize == a) && y.iter().any(|&v| v as usize == b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpearmanPoint {
    pub theta3: f64,
    pub mean: f64,
    /// 2.5% and 97.5% Monte Carlo quantiles.
    pub lower: f64,
    pub upper: f64,
}

/// Mean tie-corrected Spearman coefficient of Mar-Co samples over a θ₃ grid.
pub fn spearman_curve(
    theta3_grid: &[f64],
    t1: f64,
    t2: f64,
    lambda: f64,
    mu: f64,
    n_rep: usize,
    sample_size: usize,
    seed: u64,
) -> Result<Vec<SpearmanPoint>> {
    check_reps(n_rep)?;
    if !(lambda > 0.0 && mu > 0.0) {
        return Err(Error::InvalidArgument("rates must be positive".into()));
    }
    if sample_size < 2 {
        return Err(Error::InvalidArgument("sample size must be at least 2".into()));
    }
    theta3_grid
        .iter()
        .enumerate()
        .map(|(gi, &t3)| {
            if !t3.is_finite() {
                return Err(Error::InvalidArgument("θ₃ grid must be finite".into()));
            }
            let theta = Theta::new(t1, t2, t3);
            let tag = format!("spearman-{gi}");
            let vals: Vec<f64> = (0..n_rep)
                .into_par_iter()
                .map(|r| {
                    let mut rng = seed::stream(seed, &tag, r as u64);
                    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..sample_size)
                        .map(|_| {
                            let (h, a) = sample_match(lambda, mu, theta, &mut rng);
                            (h as f64, a as f64)
                        })
                        .unzip();
                    spearman(&xs, &ys).unwrap_or(0.0)
                })
                .collect();
            Ok(SpearmanPoint {
                theta3: t3,
                mean: mean(&vals),
                lower: quantile(&vals, 0.025),
                upper: quantile(&vals, 0.975),
            })
        })
        .collect()
}
