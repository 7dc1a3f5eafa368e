//! Synthetic leagues with known generating parameters.

use std::io::Write;

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{season_label, LeagueDataset, MatchRecord, TeamId};
use crate::error::{Error, Result};
use crate::grid::{build_score_grid, Dependence};
use crate::marco::sample_match;
use crate::seed;

/// Tail tolerance for inverse-grid sampling of Dixon–Coles scores.
pub const SAMPLING_TAIL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trajectory {
    Static,
    /// Before every season after the first, each α and β takes an
    /// independent `N(0, step²)` step.
    RandomWalk { step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub m: usize,
    pub seasons: usize,
    pub trajectory: Trajectory,
    pub dependence: Dependence,
    pub gamma: f64,
    /// Standard deviations of the initial α and β around their centres.
    pub attack_sd: f64,
    pub defence_sd: f64,
    /// Away scoring rate of an average pairing, `exp(1 + β̄)`.
    pub base_rate: f64,
    /// Explicit initial `(α, β)`; overrides the random draw.
    pub initial: Option<(Vec<f64>, Vec<f64>)>,
    pub seed: u64,
    pub start_year: i32,
    pub league: String,
}

impl SimScenario {
    pub fn new(m: usize, seasons: usize, dependence: Dependence, seed: u64) -> Self {
        Self {
            m,
            seasons,
            trajectory: Trajectory::Static,
            dependence,
            gamma: 0.3,
            attack_sd: 0.2,
            defence_sd: 0.2,
            base_rate: 1.1,
            initial: None,
            seed,
            start_year: 2010,
            league: "SIM".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidArgument(s.to_string()));
        if self.m < 2 || !self.m.is_multiple_of(2) {
            return bad("team count must be even and at least 2");
        }
        if self.seasons == 0 {
            return bad("need at least one season");
        }
        if let Trajectory::RandomWalk { step } = self.trajectory {
            if !(step >= 0.0 && step.is_finite()) {
                return bad("random-walk step must be finite and non-negative");
            }
        }
        if !(self.attack_sd >= 0.0 && self.defence_sd >= 0.0 && self.base_rate > 0.0 && self.gamma.is_finite()) {
            return bad("spreads must be non-negative, base rate positive, gamma finite");
        }
        if let Some((a, b)) = &self.initial {
            if a.len() != self.m || b.len() != self.m || a.iter().chain(b).any(|v| !v.is_finite()) {
                return bad("initial ratings must hold m finite values each");
            }
        }
        if let Dependence::MarCo { theta } = self.dependence {
            if !(theta.t1.is_finite() && theta.t2.is_finite() && theta.t3.is_finite()) {
                return bad("theta must be finite");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonTruth {
    pub season: String,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub scenario: SimScenario,
    pub teams: Vec<String>,
    pub gamma: f64,
    pub dependence: Dependence,
    pub seasons: Vec<SeasonTruth>,
}

impl SimTruth {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// Double round robin by the circle method: `2(m-1)` rounds of `m/2`
/// `(home, away)` pairs, the second half mirroring the first.
pub fn double_round_robin(m: usize) -> Vec<Vec<(usize, usize)>> {
    let mut ring: Vec<usize> = (0..m).collect();
    let mut first = Vec::with_capacity(m - 1);
    for r in 0..m - 1 {
        let round: Vec<(usize, usize)> = (0..m / 2)
            .map(|i| {
                let (a, b) = (ring[i], ring[m - 1 - i]);
                if (i == 0 && r % 2 == 1) || (i > 0 && i % 2 == 1) {
                    (b, a)
                } else {
                    (a, b)
                }
            })
            .collect();
        first.push(round);
        ring[1..].rotate_right(1);
    }
    let second: Vec<Vec<(usize, usize)>> = first.iter().map(|r| r.iter().map(|&(h, a)| (a, h)).collect()).collect();
    first.into_iter().chain(second).collect()
}

fn recentre(alpha: &mut [f64], beta: &mut [f64]) {
    let shift = 1.0 - alpha.iter().sum::<f64>() / alpha.len() as f64;
    alpha.iter_mut().for_each(|a| *a += shift);
    beta.iter_mut().for_each(|b| *b -= shift);
}

/// Generates the league. Seasons start on August 10 and rounds are spaced
/// evenly over 280 days (weekly for 20 teams).
pub fn generate(scenario: &SimScenario) -> Result<(LeagueDataset, SimTruth)> {
    scenario.validate()?;
    let m = scenario.m;
    let teams: Vec<String> = (1..=m).map(|i| format!("T{i:02}")).collect();
    let mut rating_rng = seed::stream(scenario.seed, "sim-ratings", 0);
    let (mut alpha, mut beta) = match &scenario.initial {
        Some((a, b)) => (a.clone(), b.clone()),
        None => {
            let na = Normal::new(0.0, scenario.attack_sd).expect("finite sd");
            let nb = Normal::new(0.0, scenario.defence_sd).expect("finite sd");
            let beta0 = scenario.base_rate.ln() - 1.0;
            let a = (0..m).map(|_| 1.0 + na.sample(&mut rating_rng)).collect();
            let b = (0..m).map(|_| beta0 + nb.sample(&mut rating_rng)).collect();
            (a, b)
        }
    };
    recentre(&mut alpha, &mut beta);

    let rounds = double_round_robin(m);
    let spacing = (280 / rounds.len() as i64).max(1);
    let epoch = NaiveDate::from_ymd_opt(scenario.start_year, 8, 10)
        .ok_or_else(|| Error::InvalidArgument("start year out of range".into()))?;
    let mut matches = Vec::with_capacity(scenario.seasons * m * (m - 1));
    let mut truth = Vec::with_capacity(scenario.seasons);
    for s in 0..scenario.seasons {
        if s > 0 {
            if let Trajectory::RandomWalk { step } = scenario.trajectory {
                if step > 0.0 {
                    let n = Normal::new(0.0, step).expect("finite step");
                    alpha.iter_mut().for_each(|a| *a += n.sample(&mut rating_rng));
                    beta.iter_mut().for_each(|b| *b += n.sample(&mut rating_rng));
                    recentre(&mut alpha, &mut beta);
                }
            }
        }
        let start = NaiveDate::from_ymd_opt(scenario.start_year + s as i32, 8, 10)
            .ok_or_else(|| Error::InvalidArgument("season year out of range".into()))?;
        let label = season_label(start);
        truth.push(SeasonTruth {
            season: label.clone(),
            alpha: alpha.clone(),
            beta: beta.clone(),
        });
        let mut rng = seed::stream(scenario.seed, "sim-season", s as u64);
        for (r, round) in rounds.iter().enumerate() {
            let date = start + Duration::days(spacing * r as i64);
            let t = (date - epoch).num_days();
            for &(h, a) in round {
                let lambda = (scenario.gamma + alpha[h] + beta[a]).exp();
                let mu = (alpha[a] + beta[h]).exp();
                let (x, y) = draw_score(lambda, mu, &scenario.dependence, &mut rng)?;
                matches.push(MatchRecord {
                    match_id: matches.len() as u32,
                    t,
                    home_team: TeamId(h as u32),
                    away_team: TeamId(a as u32),
                    home_goals: x,
                    away_goals: y,
                    season: label.clone(),
                    league: scenario.league.clone(),
                });
            }
        }
    }
    let dataset = LeagueDataset::from_parts(matches, teams.clone(), Some(epoch))?;
    Ok((
        dataset,
        SimTruth {
            scenario: scenario.clone(),
            teams,
            gamma: scenario.gamma,
            dependence: scenario.dependence,
            seasons: truth,
        },
    ))
}

/// One exact draw from the joint score distribution.
pub fn draw_score<R: Rng + ?Sized>(lambda: f64, mu: f64, dependence: &Dependence, rng: &mut R) -> Result<(u32, u32)> {
    match *dependence {
        Dependence::MarCo { theta } => Ok(sample_match(lambda, mu, theta, rng)),
        Dependence::DixonColes { .. } => {
            let grid = build_score_grid(lambda, mu, dependence, 15, SAMPLING_TAIL_TOLERANCE)?;
            loop {
                if let Some(s) = grid.invert(rng.random::<f64>()) {
                    return Ok(s);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn four_teams_one_season() {
        let sc = SimScenario::new(4, 1, Dependence::independent_dc(), 1);
        let (ds, truth) = generate(&sc).unwrap();
        assert_eq!(ds.matches().len(), 12);
        for team in 0..4u32 {
            let home = ds.matches().iter().filter(|m| m.home_team.0 == team).count();
            let away = ds.matches().iter().filter(|m| m.away_team.0 == team).count();
            assert_eq!((home, away), (3, 3));
        }
        assert_eq!(truth.seasons.len(), 1);
        assert!((truth.seasons[0].alpha.iter().sum::<f64>() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn every_ordered_pair_once_per_season() {
        for m in [2, 6, 20] {
            let rounds = double_round_robin(m);
            assert_eq!(rounds.len(), 2 * (m - 1));
            let pairs: HashSet<(usize, usize)> = rounds.iter().flatten().copied().collect();
            assert_eq!(pairs.len(), m * (m - 1));
            for r in &rounds {
                let teams: HashSet<usize> = r.iter().flat_map(|&(h, a)| [h, a]).collect();
                assert_eq!(teams.len(), m);
            }
        }
    }

    #[test]
    fn twenty_teams_play_weekly() {
        let sc = SimScenario::new(20, 1, Dependence::independent_dc(), 1);
        let (ds, _) = generate(&sc).unwrap();
        let days: Vec<i64> = ds.matches().iter().map(|m| m.t).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        assert_eq!(days.len(), 38);
        assert!(days.windows(2).all(|w| w[1] - w[0] == 7));
    }

    #[test]
    fn same_seed_same_league() {
        let mut sc = SimScenario::new(6, 2, Dependence::MarCo { theta: crate::marco::Theta::with_t3(0.05) }, 9);
        sc.trajectory = Trajectory::RandomWalk { step: 0.1 };
        assert_eq!(generate(&sc).unwrap().0, generate(&sc).unwrap().0);
        sc.seed = 10;
        let a = generate(&sc).unwrap().0;
        sc.seed = 9;
        assert_ne!(a, generate(&sc).unwrap().0);
    }

    #[test]
    fn odd_team_count_is_rejected() {
        assert!(generate(&SimScenario::new(5, 1, Dependence::independent_dc(), 0)).is_err());
    }
}
