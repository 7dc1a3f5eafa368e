//! Truncated joint score pmfs.

use serde::{Deserialize, Serialize};

use crate::dixon_coles;
use crate::error::{Error, Result};
use crate::marco::{self, Theta};

pub const DEFAULT_GRID_BOUND: usize = 15;
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;
pub const MAX_GRID_BOUND: usize = 64;

/// The dependence part of a model, independent of the ratings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Dependence {
    DixonColes { rho: f64 },
    MarCo { theta: Theta },
}

impl Dependence {
    pub fn independent_dc() -> Self {
        Self::DixonColes { rho: 0.0 }
    }

    pub fn independent_marco() -> Self {
        Self::MarCo {
            theta: Theta::INDEPENDENCE,
        }
    }

    /// Joint pmf at one score.
    pub fn pmf(&self, lambda: f64, mu: f64, h: u32, a: u32) -> Result<f64> {
        match *self {
            Self::DixonColes { rho } => dixon_coles::joint_pmf_dc(lambda, mu, rho, h, a),
            Self::MarCo { theta } => Ok(marco::joint_pmf_marco(lambda, mu, theta, h, a)),
        }
    }
}

/// Joint pmf over `{0..=bound}²`, row-major by home goals.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrid {
    probs: Vec<f64>,
    bound: usize,
    tail_mass: f64,
    tail_tolerance: f64,
}

impl ScoreGrid {
    /// Builds a grid from explicit cell probabilities (`(bound+1)²` values)
    /// with the default tail tolerance.
    pub fn from_probs(bound: usize, probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(bound, probs, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn with_tolerance(bound: usize, probs: Vec<f64>, tail_tolerance: f64) -> Result<Self> {
        let side = bound + 1;
        if probs.len() != side * side || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidArgument("grid cells must be (bound+1)² non-negative values".into()));
        }
        let tail_mass = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        Ok(Self {
            probs,
            bound,
            tail_mass,
            tail_tolerance,
        })
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    pub fn get(&self, h: usize, a: usize) -> f64 {
        self.probs[h * (self.bound + 1) + a]
    }

    /// `(h, a, p)` over all cells.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let side = self.bound + 1;
        self.probs.iter().enumerate().map(move |(i, &p)| (i / side, i % side, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Inverse-CDF draw over the grid cells; `None` when `u` falls in the tail.
    pub fn invert(&self, u: f64) -> Option<(u32, u32)> {
        let side = self.bound + 1;
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return Some(((i / side) as u32, (i % side) as u32));
            }
        }
        None
    }
}

/// Tabulates the joint pmf on `{0..=bound}²`. When the mass outside exceeds
/// `tail_tolerance` the bound is doubled, up to [`MAX_GRID_BOUND`].
pub fn build_score_grid(lambda: f64, mu: f64, dependence: &Dependence, bound: usize, tail_tolerance: f64) -> Result<ScoreGrid> {
    if bound < 1 {
        return Err(Error::InvalidArgument("grid bound must be at least 1".into()));
    }
    if !(lambda > 0.0 && mu > 0.0 && lambda.is_finite() && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("rates must be positive, got ({lambda}, {mu})")));
    }
    let mut g = bound;
    loop {
        let side = g + 1;
        let mut probs = Vec::with_capacity(side * side);
        for h in 0..side as u32 {
            for a in 0..side as u32 {
                probs.push(dependence.pmf(lambda, mu, h, a)?);
            }
        }
        let grid = ScoreGrid::with_tolerance(g, probs, tail_tolerance)?;
        if grid.tail_mass <= tail_tolerance {
            return Ok(grid);
        }
        if g >= MAX_GRID_BOUND {
            return Err(Error::TailMass {
                achieved: grid.tail_mass,
                tolerance: tail_tolerance,
                bound: g,
            });
        }
        g = (2 * g).min(MAX_GRID_BOUND);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson;

    #[test]
    fn tiny_rates_concentrate_at_origin() {
        let g = build_score_grid(0.01, 0.01, &Dependence::independent_dc(), 10, 1e-12).unwrap();
        assert!(g.tail_mass() < 1e-12);
        assert!((g.get(0, 0) - (-0.02f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn independence_grid_is_product_of_marginals() {
        for dep in [Dependence::independent_dc(), Dependence::independent_marco()] {
            let g = build_score_grid(1.3, 0.8, &dep, 15, 1e-8).unwrap();
            for (h, a, p) in g.cells() {
                let want = poisson::pmf(h as u32, 1.3) * poisson::pmf(a as u32, 0.8);
                assert!((p - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn positive_theta3_fattens_the_tail() {
        let flat = |t3: f64| {
            let dep = Dependence::MarCo {
                theta: Theta::with_t3(t3),
            };
            let side = 11u32;
            let inside: f64 = (0..side)
                .flat_map(|h| (0..side).map(move |a| (h, a)))
                .map(|(h, a)| dep.pmf(2.0, 2.0, h, a).unwrap())
                .sum();
            1.0 - inside
        };
        assert!(flat(0.3) > flat(0.0));
    }

    #[test]
    fn bound_doubles_until_tolerance() {
        let g = build_score_grid(6.0, 6.0, &Dependence::independent_dc(), 15, 1e-10).unwrap();
        assert_eq!(g.bound(), 30);
        assert!(g.tail_mass() <= 1e-10);
    }

    #[test]
    fn unreachable_tolerance_reports_achieved_mass() {
        let err = build_score_grid(40.0, 40.0, &Dependence::independent_dc(), 15, 1e-8).unwrap_err();
        assert!(matches!(err, Error::TailMass { bound: 64, achieved, .. } if achieved > 1e-8));
    }

    #[test]
    fn infeasible_rho_is_an_error() {
        let dep = Dependence::DixonColes { rho: 0.9 };
        assert!(build_score_grid(1.0, 1.5, &dep, 10, 1e-8).is_err());
    }
}
