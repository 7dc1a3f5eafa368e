//! Mar-Co joint score model.
//!
//! `pr_A` draws the home score from `Poisson(λ)` and the away score from
//! `Poisson(ψ(θ, μ, h))`; `pr_B` is the mirror image. The joint pmf is their
//! equal-weight mixture, so both marginals become Poisson/non-Poisson
//! mixtures as soon as `θ₃ ≠ 0`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::{time_weight, Day, MatchRecord};
use crate::dixon_coles::RatingSet;
use crate::error::Result;
use crate::poisson;

/// Clamp applied to the Poisson CDF before taking its logit.
pub const CDF_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl Theta {
    /// `θ = (0, 1, 0)`: the conditional mean equals the marginal rate.
    pub const INDEPENDENCE: Theta = Theta {
        t1: 0.0,
        t2: 1.0,
        t3: 0.0,
    };

    pub fn new(t1: f64, t2: f64, t3: f64) -> Self {
        Self { t1, t2, t3 }
    }

    pub fn with_t3(t3: f64) -> Self {
        Self {
            t3,
            ..Self::INDEPENDENCE
        }
    }
}

impl Default for Theta {
    fn default() -> Self {
        Self::INDEPENDENCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarcoParams {
    pub ratings: RatingSet,
    pub theta: Theta,
    pub xi: f64,
}

pub fn poisson_cdf(rate: f64, h: u32) -> f64 {
    poisson::cdf(rate, h)
}

/// `logit F_rate(h)` with the CDF clamped to `[ε, 1-ε]`, plus its derivative
/// with respect to `ln rate` (zero when the clamp is active).
fn logit_cdf(rate: f64, h: u32) -> (f64, f64) {
    let (lower, upper) = poisson::cdf_with_complement(rate, h);
    if lower <= CDF_CLAMP {
        let c = CDF_CLAMP;
        return (c.ln() - (-c).ln_1p(), 0.0);
    }
    if upper <= CDF_CLAMP {
        let c = CDF_CLAMP;
        return ((-c).ln_1p() - c.ln(), 0.0);
    }
    let logit = lower.ln() - upper.ln();
    // dF/d rate = -pmf(h; rate)
    let d = -rate * poisson::pmf(h, rate) / (lower * upper);
    (logit, d)
}

/// Conditional Poisson mean
/// `ψ = exp(θ₁ + θ₂ ln(rate) + θ₃ logit F_rate(opp_goals))`.
pub fn psi(theta: Theta, opponent_rate: f64, opp_goals: u32) -> f64 {
    psi_parts(theta, opponent_rate, opp_goals, false).0
}

/// `(ψ, logit F, d ln ψ / d ln rate)`. The CDF is skipped when `θ₃ = 0`
/// unless `always_logit` is set.
fn psi_parts(theta: Theta, rate: f64, goals: u32, always_logit: bool) -> (f64, f64, f64) {
    let (logit, dlogit) = if theta.t3 == 0.0 && !always_logit {
        (0.0, 0.0)
    } else {
        logit_cdf(rate, goals)
    };
    let ln_psi = theta.t1 + theta.t2 * rate.ln() + theta.t3 * logit;
    (ln_psi.exp(), logit, theta.t2 + theta.t3 * dlogit)
}

/// `ln pr_A(h, a)` and `ln pr_B(h, a)`.
fn ln_branches(lambda: f64, mu: f64, theta: Theta, h: u32, a: u32) -> (f64, f64) {
    let psi_y = psi(theta, mu, h);
    let psi_x = psi(theta, lambda, a);
    (
        poisson::ln_pmf(a, psi_y) + poisson::ln_pmf(h, lambda),
        poisson::ln_pmf(h, psi_x) + poisson::ln_pmf(a, mu),
    )
}

pub fn ln_joint_pmf_marco(lambda: f64, mu: f64, theta: Theta, h: u32, a: u32) -> f64 {
    let (la, lb) = ln_branches(lambda, mu, theta, h, a);
    poisson::ln_add(la, lb) - std::f64::consts::LN_2
}

/// `½ pr_A(h, a) + ½ pr_B(h, a)`.
pub fn joint_pmf_marco(lambda: f64, mu: f64, theta: Theta, h: u32, a: u32) -> f64 {
    ln_joint_pmf_marco(lambda, mu, theta, h, a).exp()
}

/// Log pmf and its gradient with respect to `(ln λ, ln μ, θ₁, θ₂, θ₃)`.
pub(crate) fn ln_pmf_grad_marco(lambda: f64, mu: f64, theta: Theta, h: u32, a: u32) -> (f64, [f64; 5]) {
    let (hf, af) = (h as f64, a as f64);
    let (ln_l, ln_m) = (lambda.ln(), mu.ln());

    let (psi_y, logit_y, dpsi_y) = psi_parts(theta, mu, h, true);
    let la = poisson::ln_pmf(a, psi_y) + poisson::ln_pmf(h, lambda);
    let ry = af - psi_y;
    let ga = [hf - lambda, ry * dpsi_y, ry, ry * ln_m, ry * logit_y];

    let (psi_x, logit_x, dpsi_x) = psi_parts(theta, lambda, a, true);
    let lb = poisson::ln_pmf(h, psi_x) + poisson::ln_pmf(a, mu);
    let rx = hf - psi_x;
    let gb = [rx * dpsi_x, af - mu, rx, rx * ln_l, rx * logit_x];

    let total = poisson::ln_add(la, lb);
    let wa = (la - total).exp();
    let wb = 1.0 - wa;
    let mut g = [0.0; 5];
    for i in 0..5 {
        g[i] = wa * ga[i] + wb * gb[i];
    }
    (total - std::f64::consts::LN_2, g)
}

/// Time-weighted mixture log-likelihood at day `t`.
pub fn log_weighted_likelihood_marco(params: &MarcoParams, matches: &[MatchRecord], t: Day) -> Result<f64> {
    let mut total = 0.0;
    for m in matches {
        let (lambda, mu) = params.ratings.intensities(m.home_team, m.away_team)?;
        let w = time_weight(params.xi, t, m.t);
        if w > 0.0 {
            total += w * ln_joint_pmf_marco(lambda, mu, params.theta, m.home_goals, m.away_goals);
        }
    }
    Ok(total)
}

fn draw_poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u32 {
    if rate <= 0.0 || !rate.is_finite() {
        return 0;
    }
    let d = Poisson::new(rate).expect("finite positive rate");
    let v: f64 = d.sample(rng);
    v.min(u32::MAX as f64) as u32
}

/// Exact draw from the Mar-Co joint pmf: pick a branch with probability ½,
/// draw that branch's marginal score, then the conditional one.
pub fn sample_match<R: Rng + ?Sized>(lambda: f64, mu: f64, theta: Theta, rng: &mut R) -> (u32, u32) {
    if rng.random::<bool>() {
        let h = draw_poisson(lambda, rng);
        let a = draw_poisson(psi(theta, mu, h), rng);
        (h, a)
    } else {
        let a = draw_poisson(mu, rng);
        let h = draw_poisson(psi(theta, lambda, a), rng);
        (h, a)
    }
}
