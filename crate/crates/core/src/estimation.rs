//! Maximum weighted likelihood fits, rolling refits and ξ tuning.
//!
//! A fit runs in two stages. Stage 1 estimates the ratings with the
//! dependence frozen at independence (both models then reduce to the same
//! double Poisson likelihood). Stage 2 starts from the stage-1 point, first
//! moves the dependence parameters alone with Nelder–Mead and then refines
//! everything jointly with BFGS. The last α is not a free parameter: it is
//! set so that `Σα = m`.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{time_weight, Day, LeagueDataset, MatchRecord, TeamId};
use crate::dixon_coles::{self, rho_bounds, RatingSet};
use crate::error::{Error, Result};
use crate::grid::{build_score_grid, Dependence, DEFAULT_GRID_BOUND, DEFAULT_TAIL_TOLERANCE};
use crate::marco::{self, Theta};
use crate::optim::{Bfgs, Minimum, NelderMead};
use crate::poisson;
use crate::prediction::{market_probs, Market};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[serde(rename = "dc")]
    DixonColes,
    #[serde(rename = "marco")]
    MarCo,
}

impl ModelKind {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::DixonColes => "dc",
            Self::MarCo => "marco",
        }
    }

    pub fn independence(&self) -> Dependence {
        match self {
            Self::DixonColes => Dependence::independent_dc(),
            Self::MarCo => Dependence::independent_marco(),
        }
    }

    fn dependence_len(&self) -> usize {
        match self {
            Self::DixonColes => 1,
            Self::MarCo => 3,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dc" | "dixon-coles" | "dixoncoles" => Ok(Self::DixonColes),
            "marco" | "mar-co" => Ok(Self::MarCo),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}` (expected dc or marco)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub model: ModelKind,
    pub xi: f64,
    pub optimizer_tolerance: f64,
    pub max_iterations: usize,
    pub min_matches_per_team: usize,
    /// When false the dependence stays at independence (stage 1 only).
    pub free_dependence: bool,
}

impl FitConfig {
    pub fn new(model: ModelKind, xi: f64) -> Self {
        Self {
            model,
            xi,
            optimizer_tolerance: 1e-10,
            max_iterations: 500,
            min_matches_per_team: 4,
            free_dependence: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::InvalidArgument(format!("xi must be finite and non-negative, got {}", self.xi)));
        }
        if !(self.optimizer_tolerance > 0.0) {
            return Err(Error::InvalidArgument("optimizer tolerance must be positive".into()));
        }
        if self.min_matches_per_team < 1 {
            return Err(Error::InvalidArgument("min_matches_per_team must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: ModelKind,
    pub ratings: RatingSet,
    pub dependence: Dependence,
    pub xi: f64,
    /// The fit uses matches strictly before this day.
    pub day: Day,
    pub log_likelihood: f64,
    pub stage1_log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Sum of time weights.
    pub n_effective: f64,
    /// Matches with positive weight.
    pub n_matches: usize,
}

impl FitResult {
    pub fn rho(&self) -> Option<f64> {
        match self.dependence {
            Dependence::DixonColes { rho } => Some(rho),
            Dependence::MarCo { .. } => None,
        }
    }

    pub fn theta(&self) -> Option<Theta> {
        match self.dependence {
            Dependence::MarCo { theta } => Some(theta),
            Dependence::DixonColes { .. } => None,
        }
    }
}

struct Obs {
    h: usize,
    a: usize,
    x: u32,
    y: u32,
    w: f64,
}

/// A window reduced to local team indices and positive-weight matches.
struct Problem {
    kind: ModelKind,
    m: usize,
    obs: Vec<Obs>,
    /// Distinct `(home, away)` pairs, for the ρ bounds.
    pairs: Vec<(usize, usize)>,
    weight_sum: f64,
}

#[derive(Default)]
struct Grad {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    gamma: f64,
    dep: [f64; 3],
}

impl Problem {
    fn free_len(&self) -> usize {
        2 * self.m
    }

    fn alpha_full(&self, x: &[f64]) -> Vec<f64> {
        let free = &x[..self.m - 1];
        let mut a = free.to_vec();
        a.push(self.m as f64 - free.iter().sum::<f64>());
        a
    }

    fn split<'a>(&self, x: &'a [f64]) -> (Vec<f64>, &'a [f64], f64) {
        let m = self.m;
        (self.alpha_full(x), &x[m - 1..2 * m - 1], x[2 * m - 1])
    }

    fn pack(&self, alpha: &[f64], beta: &[f64], gamma: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.free_len() + self.kind.dependence_len());
        x.extend_from_slice(&alpha[..self.m - 1]);
        x.extend_from_slice(beta);
        x.push(gamma);
        x
    }

    fn dep_from(&self, d: &[f64]) -> Dependence {
        match self.kind {
            ModelKind::DixonColes => Dependence::DixonColes { rho: d[0] },
            ModelKind::MarCo => Dependence::MarCo {
                theta: Theta::new(d[0], d[1], d[2]),
            },
        }
    }

    fn dep_vec(dep: &Dependence) -> Vec<f64> {
        match *dep {
            Dependence::DixonColes { rho } => vec![rho],
            Dependence::MarCo { theta } => vec![theta.t1, theta.t2, theta.t3],
        }
    }

    /// Weighted log-likelihood; `-∞` for an infeasible ρ.
    fn loglik(&self, alpha: &[f64], beta: &[f64], gamma: f64, dep: Option<&Dependence>, mut grad: Option<&mut Grad>) -> f64 {
        if let Some(g) = grad.as_deref_mut() {
            g.alpha.clear();
            g.alpha.resize(self.m, 0.0);
            g.beta.clear();
            g.beta.resize(self.m, 0.0);
            g.gamma = 0.0;
            g.dep = [0.0; 3];
        }
        if let Some(Dependence::DixonColes { rho }) = dep {
            if *rho != 0.0 {
                for &(h, a) in &self.pairs {
                    let lambda = (gamma + alpha[h] + beta[a]).exp();
                    let mu = (alpha[a] + beta[h]).exp();
                    let (lo, hi) = rho_bounds(lambda, mu);
                    if !(*rho >= lo && *rho <= hi) {
                        return f64::NEG_INFINITY;
                    }
                }
            }
        }
        let mut total = 0.0;
        for o in &self.obs {
            let ln_l = gamma + alpha[o.h] + beta[o.a];
            let ln_m = alpha[o.a] + beta[o.h];
            let (lambda, mu) = (ln_l.exp(), ln_m.exp());
            let (v, gl, gm, gd): (f64, f64, f64, [f64; 3]) = match dep {
                None => (
                    poisson::ln_pmf(o.x, lambda) + poisson::ln_pmf(o.y, mu),
                    o.x as f64 - lambda,
                    o.y as f64 - mu,
                    [0.0; 3],
                ),
                Some(Dependence::DixonColes { rho }) => {
                    if grad.is_some() {
                        let (v, g) = dixon_coles::ln_pmf_grad_dc(lambda, mu, *rho, o.x, o.y);
                        (v, g[0], g[1], [g[2], 0.0, 0.0])
                    } else {
                        (dixon_coles::ln_joint_pmf_dc_unchecked(lambda, mu, *rho, o.x, o.y), 0.0, 0.0, [0.0; 3])
                    }
                }
                Some(Dependence::MarCo { theta }) => {
                    if grad.is_some() {
                        let (v, g) = marco::ln_pmf_grad_marco(lambda, mu, *theta, o.x, o.y);
                        (v, g[0], g[1], [g[2], g[3], g[4]])
                    } else {
                        (marco::ln_joint_pmf_marco(lambda, mu, *theta, o.x, o.y), 0.0, 0.0, [0.0; 3])
                    }
                }
            };
            total += o.w * v;
            if let Some(g) = grad.as_deref_mut() {
                let (wl, wm) = (o.w * gl, o.w * gm);
                g.alpha[o.h] += wl;
                g.beta[o.a] += wl;
                g.gamma += wl;
                g.alpha[o.a] += wm;
                g.beta[o.h] += wm;
                for i in 0..3 {
                    g.dep[i] += o.w * gd[i];
                }
            }
        }
        total
    }

    /// Scaled negative log-likelihood over `[free α, β, γ, dependence…]`
    /// (the dependence tail is absent when `dep_free` is false).
    fn objective(&self, x: &[f64], out: &mut [f64], dep_free: bool, scratch: &mut Grad) -> f64 {
        let (alpha, beta, gamma) = self.split(x);
        let dep = dep_free.then(|| self.dep_from(&x[self.free_len()..]));
        let ll = self.loglik(&alpha, beta, gamma, dep.as_ref(), Some(scratch));
        let s = -1.0 / self.weight_sum;
        let m = self.m;
        let last = scratch.alpha[m - 1];
        for i in 0..m - 1 {
            out[i] = s * (scratch.alpha[i] - last);
        }
        for i in 0..m {
            out[m - 1 + i] = s * scratch.beta[i];
        }
        out[2 * m - 1] = s * scratch.gamma;
        if dep_free {
            for (o, d) in out[self.free_len()..].iter_mut().zip(&scratch.dep) {
                *o = s * d;
            }
        }
        s * ll
    }

    fn bfgs(&self, config: &FitConfig) -> Bfgs {
        Bfgs {
            ftol: config.optimizer_tolerance,
            gtol: 1e-7,
            max_iterations: config.max_iterations,
        }
    }

    fn minimize(&self, x0: &[f64], dep_free: bool, config: &FitConfig) -> Minimum {
        let mut scratch = Grad::default();
        self.bfgs(config)
            .minimize(|x, g| self.objective(x, g, dep_free, &mut scratch), x0)
    }
}

fn build_problem(matches: &[MatchRecord], names: &[String], t: Day, config: &FitConfig) -> Result<(Problem, Vec<TeamId>)> {
    let mut ids: Vec<TeamId> = Vec::new();
    let mut local: HashMap<TeamId, usize> = HashMap::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut obs = Vec::new();
    let mut weight_sum = 0.0;
    for m in matches {
        if m.t >= t {
            continue;
        }
        let w = time_weight(config.xi, t, m.t);
        if w <= 0.0 {
            continue;
        }
        let mut idx = |id: TeamId| {
            *local.entry(id).or_insert_with(|| {
                ids.push(id);
                counts.push(0);
                ids.len() - 1
            })
        };
        let (h, a) = (idx(m.home_team), idx(m.away_team));
        counts[h] += 1;
        counts[a] += 1;
        weight_sum += w;
        obs.push(Obs {
            h,
            a,
            x: m.home_goals,
            y: m.away_goals,
            w,
        });
    }
    if obs.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let short: Vec<String> = ids
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c < config.min_matches_per_team)
        .map(|(id, c)| format!("{} ({c})", team_label(names, *id)))
        .collect();
    if !short.is_empty() {
        return Err(Error::InsufficientMatches(short));
    }
    let mut pairs: Vec<(usize, usize)> = obs.iter().map(|o| (o.h, o.a)).collect();
    pairs.sort_unstable();
    pairs.dedup();
    Ok((
        Problem {
            kind: config.model,
            m: ids.len(),
            obs,
            pairs,
            weight_sum,
        },
        ids,
    ))
}

fn team_label(names: &[String], id: TeamId) -> String {
    names.get(id.index()).cloned().unwrap_or_else(|| format!("team #{}", id.0))
}

fn starting_ratings(p: &Problem, ids: &[TeamId], warm: Option<&FitResult>) -> (Vec<f64>, Vec<f64>, f64) {
    if let Some(w) = warm {
        let known: Vec<f64> = ids.iter().filter_map(|id| w.ratings.get(*id)).map(|(_, b)| b).collect();
        if !known.is_empty() {
            let beta_mean = known.iter().sum::<f64>() / known.len() as f64;
            let mut alpha = Vec::with_capacity(p.m);
            let mut beta = Vec::with_capacity(p.m);
            for id in ids {
                let (a, b) = w.ratings.get(*id).unwrap_or((1.0, beta_mean));
                alpha.push(a);
                beta.push(b);
            }
            let shift = 1.0 - alpha.iter().sum::<f64>() / p.m as f64;
            alpha.iter_mut().for_each(|a| *a += shift);
            beta.iter_mut().for_each(|b| *b -= shift);
            return (alpha, beta, w.ratings.gamma);
        }
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for o in &p.obs {
        sx += o.w * o.x as f64;
        sy += o.w * o.y as f64;
    }
    let xbar = (sx / p.weight_sum).max(0.05);
    let ybar = (sy / p.weight_sum).max(0.05);
    (vec![1.0; p.m], vec![ybar.ln() - 1.0; p.m], xbar.ln() - ybar.ln())
}

/// Fits the model at day `t` on `matches` (only those with `t_k < t` and a
/// positive time weight are used). `names` maps team ids to names for error
/// messages.
pub fn fit_matches(matches: &[MatchRecord], names: &[String], t: Day, config: &FitConfig, warm: Option<&FitResult>) -> Result<FitResult> {
    config.validate()?;
    let (p, ids) = build_problem(matches, names, t, config)?;
    let (alpha0, beta0, gamma0) = starting_ratings(&p, &ids, warm);

    // stage 1: independence
    let x0 = p.pack(&alpha0, &beta0, gamma0);
    let s1 = p.minimize(&x0, false, config);
    let ll1 = -s1.f * p.weight_sum;
    let mut best_x = s1.x.clone();
    let mut best_ll = ll1;
    let mut best_dep = config.model.independence();
    let mut converged = s1.converged;
    let mut iterations = s1.iterations;

    if config.free_dependence {
        let (alpha1, beta1, gamma1) = p.split(&s1.x);
        let beta1 = beta1.to_vec();
        let start_dep = warm
            .filter(|w| w.model == config.model)
            .map(|w| w.dependence)
            .unwrap_or_else(|| config.model.independence());

        // stage 2a: dependence only
        let step = match config.model {
            ModelKind::DixonColes => vec![0.05],
            ModelKind::MarCo => vec![0.1, 0.1, 0.05],
        };
        let nm = NelderMead {
            step,
            ftol: config.optimizer_tolerance,
            max_iterations: 400,
        };
        let dep_obj = |d: &[f64]| -> f64 {
            let dep = p.dep_from(d);
            -p.loglik(&alpha1, &beta1, gamma1, Some(&dep), None) / p.weight_sum
        };
        let mut d0 = Problem::dep_vec(&start_dep);
        if !dep_obj(&d0).is_finite() {
            d0 = Problem::dep_vec(&config.model.independence());
        }
        let s2a = nm.minimize(dep_obj, &d0);
        let mut x = s1.x.clone();
        x.extend_from_slice(&s2a.x);

        // stage 2b: joint refinement, restarted when ρ stops on a bound
        let mut s2 = p.minimize(&x, true, config);
        iterations += s2.iterations;
        if config.model == ModelKind::DixonColes {
            for _ in 0..2 {
                if !rho_on_boundary(&p, &s2.x) {
                    break;
                }
                let again = p.minimize(&s2.x, true, config);
                iterations += again.iterations;
                let improved = again.f < s2.f;
                if improved {
                    s2 = again;
                } else {
                    break;
                }
            }
        }
        let ll2 = -s2.f * p.weight_sum;
        if ll2.is_finite() && ll2 >= ll1 {
            best_dep = p.dep_from(&s2.x[p.free_len()..]);
            best_x = s2.x[..p.free_len()].to_vec();
            best_ll = ll2;
            converged = converged && s2.converged;
        }
    }

    let (alpha, beta, gamma) = p.split(&best_x);
    let names_local: Vec<String> = ids.iter().map(|id| team_label(names, *id)).collect();
    let ratings = RatingSet::normalized(ids, names_local, alpha, beta.to_vec(), gamma)?;
    // recompute on the normalised ratings so the reported value is exact
    let log_likelihood = {
        let dep = config.free_dependence.then_some(best_dep);
        let v = p.loglik(ratings.alpha(), ratings.beta(), ratings.gamma, dep.as_ref(), None);
        if v.is_finite() {
            v
        } else {
            best_ll
        }
    };
    Ok(FitResult {
        model: config.model,
        ratings,
        dependence: best_dep,
        xi: config.xi,
        day: t,
        log_likelihood,
        stage1_log_likelihood: ll1,
        converged,
        iterations,
        n_effective: p.weight_sum,
        n_matches: p.obs.len(),
    })
}

fn rho_on_boundary(p: &Problem, x: &[f64]) -> bool {
    let rho = x[p.free_len()];
    let (alpha, beta, gamma) = p.split(x);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for &(h, a) in &p.pairs {
        let (l, u) = rho_bounds((gamma + alpha[h] + beta[a]).exp(), (alpha[a] + beta[h]).exp());
        lo = lo.max(l);
        hi = hi.min(u);
    }
    let tol = 1e-4 * (hi - lo);
    rho - lo < tol || hi - rho < tol
}

/// Fits on the window `A_t` of `dataset`.
pub fn fit(dataset: &LeagueDataset, t: Day, config: &FitConfig, warm: Option<&FitResult>) -> Result<FitResult> {
    fit_matches(dataset.window(t), dataset.teams(), t, config, warm)
}

/// One fit per calendar day, each warm-started from the previous one.
pub fn rolling_refit(dataset: &LeagueDataset, config: &FitConfig, calendar: &[Day]) -> Result<Vec<(Day, FitResult)>> {
    let mut out: Vec<(Day, FitResult)> = Vec::with_capacity(calendar.len());
    for &day in calendar {
        let warm = out.last().map(|(_, f)| f);
        let f = fit(dataset, day, config, warm)?;
        out.push((day, f));
    }
    Ok(out)
}

/// 1-X-2 probabilities for a fixture under a fit.
pub fn one_x_two(fit: &FitResult, home: TeamId, away: TeamId) -> Result<Vec<f64>> {
    let (lambda, mu) = fit.ratings.intensities(home, away)?;
    let grid = build_score_grid(lambda, mu, &fit.dependence, DEFAULT_GRID_BOUND, DEFAULT_TAIL_TOLERANCE)?;
    market_probs(&grid, Market::OneXTwo)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SxiReport {
    pub xi: f64,
    pub s: f64,
    pub n_matches: usize,
    pub skipped_days: usize,
    pub skipped_matches: usize,
    /// Match ids that were scored, in calendar order.
    #[serde(skip)]
    pub scored: Vec<u32>,
}

/// Out-of-sample log score of 1-X-2 forecasts:
/// `S(ξ) = Σ_k ln p̂_k(realised outcome)` over the matches played on the
/// calendar days, each forecast from a fit on the matches before its day.
pub fn s_of_xi(dataset: &LeagueDataset, model: ModelKind, xi: f64, calendar: &[Day]) -> Result<SxiReport> {
    let mut config = FitConfig::new(model, xi);
    config.optimizer_tolerance = 1e-9;
    s_of_xi_with(dataset, &config, calendar)
}

pub fn s_of_xi_with(dataset: &LeagueDataset, config: &FitConfig, calendar: &[Day]) -> Result<SxiReport> {
    let mut report = SxiReport {
        xi: config.xi,
        s: 0.0,
        n_matches: 0,
        skipped_days: 0,
        skipped_matches: 0,
        scored: Vec::new(),
    };
    let mut warm: Option<FitResult> = None;
    for &day in calendar {
        let fixtures = dataset.matches_on(day);
        let f = match fit(dataset, day, config, warm.as_ref()) {
            Ok(f) => f,
            Err(Error::InsufficientMatches(_) | Error::EmptyWindow) => {
                report.skipped_days += 1;
                report.skipped_matches += fixtures.len();
                continue;
            }
            Err(e) => return Err(e),
        };
        for fx in fixtures {
            match one_x_two(&f, fx.home_team, fx.away_team) {
                Ok(p) => {
                    let class = Market::OneXTwo.realized_class(fx.home_goals, fx.away_goals);
                    report.s += p[class].ln();
                    report.n_matches += 1;
                    report.scored.push(fx.match_id);
                }
                Err(Error::UnknownTeam(_)) => report.skipped_matches += 1,
                Err(e) => return Err(e),
            }
        }
        warm = Some(f);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiTuning {
    pub best_xi: f64,
    pub curve: Vec<SxiReport>,
}

/// `ξ* = argmax S(ξ)` over `grid` (the first maximum on ties). Grid points
/// are evaluated in parallel; every point must score the same matches.
pub fn tune_xi(dataset: &LeagueDataset, model: ModelKind, grid: &[f64], calendar: &[Day]) -> Result<XiTuning> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty xi grid".into()));
    }
    if let Some(bad) = grid.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument(format!("xi grid value {bad} is not a finite non-negative number")));
    }
    let curve: Vec<SxiReport> = grid
        .par_iter()
        .map(|&xi| s_of_xi(dataset, model, xi, calendar))
        .collect::<Result<_>>()?;
    for r in &curve[1..] {
        if r.scored != curve[0].scored {
            return Err(Error::CoverageMismatch(format!(
                "xi = {} scored {} matches but xi = {} scored {}",
                r.xi, r.n_matches, curve[0].xi, curve[0].n_matches
            )));
        }
    }
    let mut best = 0;
    for (i, r) in curve.iter().enumerate() {
        if r.s > curve[best].s {
            best = i;
        }
    }
    Ok(XiTuning {
        best_xi: curve[best].xi,
        curve,
    })
}

/// `0, 0.0005, …, 0.02`.
pub fn default_xi_grid() -> Vec<f64> {
    (0..=40).map(|i| i as f64 * 0.0005).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitLogEntry {
    pub day: Day,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl From<&FitResult> for FitLogEntry {
    fn from(f: &FitResult) -> Self {
        Self {
            day: f.day,
            log_likelihood: f.log_likelihood,
            converged: f.converged,
            iterations: f.iterations,
        }
    }
}

/// One JSON object per line.
pub fn write_fit_log<'a, W: Write>(mut w: W, fits: impl IntoIterator<Item = &'a FitResult>) -> Result<()> {
    for f in fits {
        serde_json::to_writer(&mut w, &FitLogEntry::from(f))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
