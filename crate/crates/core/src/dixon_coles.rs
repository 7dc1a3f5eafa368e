//! Dixon–Coles joint score model.
//!
//! Marginals are Poisson with log-linear intensities; the τ factor reweights
//! the four low-score cells `{0,1}²` while keeping both marginals Poisson.

use std::collections::HashMap;

use crate::data::{time_weight, Day, MatchRecord, TeamId};
use crate::error::{Error, Result};
use crate::poisson;

/// Attack (α), defence (β) and home (γ) effects on the log scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingSet {
    ids: Vec<TeamId>,
    names: Vec<String>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    pub gamma: f64,
    pos: HashMap<TeamId, usize>,
}

impl RatingSet {
    pub fn new(ids: Vec<TeamId>, names: Vec<String>, alpha: Vec<f64>, beta: Vec<f64>, gamma: f64) -> Result<Self> {
        let m = ids.len();
        if names.len() != m || alpha.len() != m || beta.len() != m {
            return Err(Error::InvalidArgument("rating vectors differ in length".into()));
        }
        if !(gamma.is_finite() && alpha.iter().chain(&beta).all(|v| v.is_finite())) {
            return Err(Error::InvalidArgument("non-finite rating".into()));
        }
        let pos: HashMap<TeamId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        if pos.len() != m {
            return Err(Error::InvalidArgument("duplicate team in rating set".into()));
        }
        Ok(Self {
            ids,
            names,
            alpha,
            beta,
            gamma,
            pos,
        })
    }

    /// Same as [`RatingSet::new`] but shifts α by a constant (and β by its
    /// negative, leaving every intensity unchanged) so that `Σα = m`.
    pub fn normalized(ids: Vec<TeamId>, names: Vec<String>, alpha: Vec<f64>, beta: Vec<f64>, gamma: f64) -> Result<Self> {
        let mut r = Self::new(ids, names, alpha, beta, gamma)?;
        r.normalize();
        Ok(r)
    }

    pub fn normalize(&mut self) {
        let m = self.alpha.len() as f64;
        if m == 0.0 {
            return;
        }
        let shift = 1.0 - self.alpha.iter().sum::<f64>() / m;
        self.alpha.iter_mut().for_each(|a| *a += shift);
        self.beta.iter_mut().for_each(|b| *b -= shift);
    }

    pub fn m(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[TeamId] {
        &self.ids
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn position(&self, team: TeamId) -> Option<usize> {
        self.pos.get(&team).copied()
    }

    pub fn contains(&self, team: TeamId) -> bool {
        self.pos.contains_key(&team)
    }

    /// `(α, β)` for one team.
    pub fn get(&self, team: TeamId) -> Option<(f64, f64)> {
        self.position(team).map(|i| (self.alpha[i], self.beta[i]))
    }

    /// `(λ, μ)` for a fixture:
    /// `λ = exp(γ + α_home + β_away)`, `μ = exp(α_away + β_home)`.
    pub fn intensities(&self, home: TeamId, away: TeamId) -> Result<(f64, f64)> {
        let unknown = |t: TeamId| Error::UnknownTeam(format!("team #{}", t.0));
        let h = self.position(home).ok_or_else(|| unknown(home))?;
        let a = self.position(away).ok_or_else(|| unknown(away))?;
        Ok((
            (self.gamma + self.alpha[h] + self.beta[a]).exp(),
            (self.alpha[a] + self.beta[h]).exp(),
        ))
    }
}

/// Free function form of [`RatingSet::intensities`].
pub fn intensities(ratings: &RatingSet, home: TeamId, away: TeamId) -> Result<(f64, f64)> {
    ratings.intensities(home, away)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcParams {
    pub ratings: RatingSet,
    pub rho: f64,
    pub xi: f64,
}

/// Feasible `ρ` range keeping every τ non-negative:
/// `max(-1/λ, -1/μ) ≤ ρ ≤ min(1/(λμ), 1)`.
pub fn rho_bounds(lambda: f64, mu: f64) -> (f64, f64) {
    ((-1.0 / lambda).max(-1.0 / mu), (1.0 / (lambda * mu)).min(1.0))
}

pub fn rho_feasible(lambda: f64, mu: f64, rho: f64) -> bool {
    let (lo, hi) = rho_bounds(lambda, mu);
    rho >= lo && rho <= hi
}

fn check_rho(lambda: f64, mu: f64, rho: f64) -> Result<()> {
    if rho_feasible(lambda, mu, rho) {
        Ok(())
    } else {
        let (lower, upper) = rho_bounds(lambda, mu);
        Err(Error::InfeasibleRho { rho, lower, upper })
    }
}

/// τ without the feasibility check.
pub(crate) fn tau_unchecked(lambda: f64, mu: f64, h: u32, a: u32, rho: f64) -> f64 {
    match (h, a) {
        (0, 0) => 1.0 - lambda * mu * rho,
        (0, 1) => 1.0 + lambda * rho,
        (1, 0) => 1.0 + mu * rho,
        (1, 1) => 1.0 - rho,
        _ => 1.0,
    }
}

pub fn tau(lambda: f64, mu: f64, h: u32, a: u32, rho: f64) -> Result<f64> {
    check_rho(lambda, mu, rho)?;
    Ok(tau_unchecked(lambda, mu, h, a, rho))
}

pub(crate) fn ln_joint_pmf_dc_unchecked(lambda: f64, mu: f64, rho: f64, h: u32, a: u32) -> f64 {
    tau_unchecked(lambda, mu, h, a, rho).ln() + poisson::ln_pmf(h, lambda) + poisson::ln_pmf(a, mu)
}

/// Log pmf and its gradient with respect to `(ln λ, ln μ, ρ)`. Assumes ρ
/// is feasible.
pub(crate) fn ln_pmf_grad_dc(lambda: f64, mu: f64, rho: f64, h: u32, a: u32) -> (f64, [f64; 3]) {
    let tau = tau_unchecked(lambda, mu, h, a, rho);
    // dτ/d ln λ, dτ/d ln μ, dτ/dρ
    let (dl, dm, dr) = match (h, a) {
        (0, 0) => (-lambda * mu * rho, -lambda * mu * rho, -lambda * mu),
        (0, 1) => (lambda * rho, 0.0, lambda),
        (1, 0) => (0.0, mu * rho, mu),
        (1, 1) => (0.0, 0.0, -1.0),
        _ => (0.0, 0.0, 0.0),
    };
    let value = tau.ln() + poisson::ln_pmf(h, lambda) + poisson::ln_pmf(a, mu);
    (
        value,
        [h as f64 - lambda + dl / tau, a as f64 - mu + dm / tau, dr / tau],
    )
}

/// `τ(h, a) · Poisson(h; λ) · Poisson(a; μ)`.
pub fn joint_pmf_dc(lambda: f64, mu: f64, rho: f64, h: u32, a: u32) -> Result<f64> {
    check_rho(lambda, mu, rho)?;
    Ok(tau_unchecked(lambda, mu, h, a, rho) * (poisson::ln_pmf(h, lambda) + poisson::ln_pmf(a, mu)).exp())
}

/// Intersection of the per-match ρ bounds over a set of matches.
pub fn window_rho_bounds(ratings: &RatingSet, matches: &[MatchRecord]) -> Result<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for m in matches {
        let (l, u) = rho_bounds_for(ratings, m)?;
        lo = lo.max(l);
        hi = hi.min(u);
    }
    Ok((lo, hi))
}

fn rho_bounds_for(ratings: &RatingSet, m: &MatchRecord) -> Result<(f64, f64)> {
    let (lambda, mu) = ratings.intensities(m.home_team, m.away_team)?;
    Ok(rho_bounds(lambda, mu))
}

/// Time-weighted log pseudo-likelihood at day `t`:
/// `Σ_k exp(-ξ (t - t_k)) · ln pr_DC(x_k, y_k)`.
///
/// Returns `-∞` when ρ is outside the bounds of any match in `matches`.
pub fn log_weighted_likelihood_dc(params: &DcParams, matches: &[MatchRecord], t: Day) -> Result<f64> {
    let mut total = 0.0;
    let mut feasible = true;
    for m in matches {
        let (lambda, mu) = params.ratings.intensities(m.home_team, m.away_team)?;
        if !rho_feasible(lambda, mu, params.rho) {
            feasible = false;
            continue;
        }
        let w = time_weight(params.xi, t, m.t);
        if w > 0.0 {
            total += w * ln_joint_pmf_dc_unchecked(lambda, mu, params.rho, m.home_goals, m.away_goals);
        }
    }
    Ok(if feasible { total } else { f64::NEG_INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_team(alpha: [f64; 2], beta: [f64; 2], gamma: f64) -> RatingSet {
        RatingSet::new(
            vec![TeamId(0), TeamId(1)],
            vec!["H".into(), "A".into()],
            alpha.to_vec(),
            beta.to_vec(),
            gamma,
        )
        .unwrap()
    }

    #[test]
    fn intensities_hand_values() {
        let r = two_team([0.0, 0.0], [0.0, 0.0], 0.0);
        assert_eq!(r.intensities(TeamId(0), TeamId(1)).unwrap(), (1.0, 1.0));

        let r = two_team([0.3, 0.2], [-0.4, -0.1], 0.405);
        let (l, m) = r.intensities(TeamId(0), TeamId(1)).unwrap();
        assert!((l - 0.605f64.exp()).abs() < 1e-12);
        assert!((l - 1.8313).abs() < 1e-4);
        assert!((m - 0.8187).abs() < 1e-4);
    }

    #[test]
    fn raising_away_defence_scales_only_lambda() {
        let r0 = two_team([0.3, 0.2], [-0.4, -0.1], 0.405);
        let r1 = two_team([0.3, 0.2], [-0.4, -0.1 + 0.25], 0.405);
        let (l0, m0) = r0.intensities(TeamId(0), TeamId(1)).unwrap();
        let (l1, m1) = r1.intensities(TeamId(0), TeamId(1)).unwrap();
        assert!((l1 / l0 - 0.25f64.exp()).abs() < 1e-12);
        assert_eq!(m0, m1);
    }

    #[test]
    fn unknown_team_is_named() {
        let r = two_team([0.0, 0.0], [0.0, 0.0], 0.0);
        let err = r.intensities(TeamId(0), TeamId(7)).unwrap_err();
        assert!(matches!(err, Error::UnknownTeam(ref s) if s.contains('7')));
    }

    #[test]
    fn normalization_preserves_intensities() {
        let mut r = two_team([0.3, 0.9], [-0.4, -0.1], 0.2);
        let before = r.intensities(TeamId(0), TeamId(1)).unwrap();
        r.normalize();
        let after = r.intensities(TeamId(0), TeamId(1)).unwrap();
        assert!((r.alpha_sum() - 2.0).abs() < 1e-12);
        assert!((before.0 - after.0).abs() < 1e-12 && (before.1 - after.1).abs() < 1e-12);
    }

    #[test]
    fn tau_hand_values() {
        let cases = [((0, 0), 0.85), ((0, 1), 1.1), ((1, 0), 1.15), ((1, 1), 0.9), ((2, 0), 1.0)];
        for ((h, a), want) in cases {
            assert!((tau(1.0, 1.5, h, a, 0.1).unwrap() - want).abs() < 1e-12, "({h},{a})");
        }
        for h in 0..4 {
            for a in 0..4 {
                assert_eq!(tau(2.3, 0.7, h, a, 0.0).unwrap(), 1.0);
            }
        }
        assert_eq!(tau(1.0, 1.5, 0, 0, 2.0 / 3.0).unwrap(), 0.0);
        assert!(matches!(tau(1.0, 1.5, 0, 0, 0.7), Err(Error::InfeasibleRho { .. })));
    }

    #[test]
    fn rho_bounds_hand_values() {
        let (lo, hi) = rho_bounds(1.0, 1.5);
        assert!((lo + 2.0 / 3.0).abs() < 1e-15 && (hi - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rho_bounds(1.0, 1.0), (-1.0, 1.0));
        assert_eq!(rho_bounds(2.0, 2.0), (-0.5, 0.25));
    }

    #[test]
    fn joint_pmf_hand_values() {
        let p0 = joint_pmf_dc(1.0, 1.5, 0.0, 0, 0).unwrap();
        assert!((p0 - (-2.5f64).exp()).abs() < 1e-15);
        assert!((p0 - 0.0820850).abs() < 1e-7);
        let p1 = joint_pmf_dc(1.0, 1.5, 0.1, 0, 0).unwrap();
        assert!((p1 - 0.85 * (-2.5f64).exp()).abs() < 1e-15);
        assert!((p1 - 0.0697722).abs() < 1e-7);
        assert_eq!(
            joint_pmf_dc(1.0, 1.5, 0.3, 3, 2).unwrap(),
            joint_pmf_dc(1.0, 1.5, 0.0, 3, 2).unwrap()
        );
    }

    fn rec(t: Day, x: u32, y: u32) -> MatchRecord {
        MatchRecord {
            match_id: 0,
            t,
            home_team: TeamId(0),
            away_team: TeamId(1),
            home_goals: x,
            away_goals: y,
            season: String::new(),
            league: String::new(),
        }
    }

    #[test]
    fn weighted_likelihood_cases() {
        let ratings = two_team([0.0, 0.0], [0.0, 0.0], 0.0);
        let mut params = DcParams {
            ratings,
            rho: 0.05,
            xi: 0.0,
        };
        assert_eq!(log_weighted_likelihood_dc(&params, &[], 10).unwrap(), 0.0);

        let ms = [rec(0, 0, 0), rec(3, 2, 1), rec(5, 1, 1)];
        let direct: f64 = ms
            .iter()
            .map(|m| joint_pmf_dc(1.0, 1.0, 0.05, m.home_goals, m.away_goals).unwrap().ln())
            .sum();
        let got = log_weighted_likelihood_dc(&params, &ms, 10).unwrap();
        assert!((got - direct).abs() < 1e-12);

        params.xi = 0.01;
        let one = [rec(0, 2, 1)];
        let want = (-1.0f64).exp() * joint_pmf_dc(1.0, 1.0, 0.05, 2, 1).unwrap().ln();
        assert!((log_weighted_likelihood_dc(&params, &one, 100).unwrap() - want).abs() < 1e-12);

        params.rho = 1.5;
        assert_eq!(log_weighted_likelihood_dc(&params, &ms, 10).unwrap(), f64::NEG_INFINITY);
    }
}
