//! Samplers against their pmfs.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use scoreline::grid::{build_score_grid, Dependence};
use scoreline::marco::{sample_match, Theta};
use scoreline::seed::stream;
use scoreline::simulate::{draw_score, generate, SimScenario};

/// Pearson chi-square p-value of `n` draws against the grid pmf, pooling
/// cells with expected count below 5.
fn gof_p_value(lambda: f64, mu: f64, dep: Dependence, n: usize, mut draw: impl FnMut() -> (u32, u32)) -> f64 {
    let g = build_score_grid(lambda, mu, &dep, 15, 1e-10).unwrap();
    let side = g.bound() + 1;
    let mut counts = vec![0usize; side * side + 1];
    for _ in 0..n {
        let (h, a) = draw();
        let (h, a) = (h as usize, a as usize);
        let i = if h < side && a < side { h * side + a } else { side * side };
        counts[i] += 1;
    }
    let mut expected: Vec<f64> = g.cells().map(|(_, _, p)| p * n as f64).collect();
    expected.push(g.tail_mass() * n as f64);
    let (mut stat, mut bins) = (0.0, 0usize);
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (o, e) in counts.iter().zip(&expected) {
        if *e < 5.0 {
            pool_o += *o as f64;
            pool_e += e;
        } else {
            stat += (*o as f64 - e).powi(2) / e;
            bins += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        bins += 1;
    }
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn marco_sampler_matches_pmf() {
    let points = [(1.4, 1.1, 0.0), (1.6, 1.2, 0.1), (1.2, 1.5, -0.1)];
    for (i, &(l, m, t3)) in points.iter().enumerate() {
        let theta = Theta::with_t3(t3);
        let mut rng = stream(11, "gof-marco", i as u64);
        let p = gof_p_value(l, m, Dependence::MarCo { theta }, 100_000, || sample_match(l, m, theta, &mut rng));
        assert!(p > 0.01, "θ₃={t3}: p = {p}");
    }
}

#[test]
fn dc_sampler_matches_pmf() {
    for (i, &(l, m, rho)) in [(1.4, 1.1, -0.1), (1.0, 1.5, 0.15)].iter().enumerate() {
        let dep = Dependence::DixonColes { rho };
        let mut rng = stream(12, "gof-dc", i as u64);
        let p = gof_p_value(l, m, dep, 100_000, || draw_score(l, m, &dep, &mut rng).unwrap());
        assert!(p > 0.01, "ρ={rho}: p = {p}");
    }
}

// Simulated DC leagues carry the low-score adjustment: with ρ < 0 draws at
// 0-0 and 1-1 are inflated relative to independence, yet the 2×2 block keeps
// its independent mass.
#[test]
fn simulated_dc_league_shows_the_block_effect() {
    let sc = SimScenario::new(20, 10, Dependence::DixonColes { rho: -0.12 }, 8);
    let (ds, truth) = generate(&sc).unwrap();
    let a = &truth.seasons[0].alpha;
    let b = &truth.seasons[0].beta;
    let (mut low_draws, mut low_draws_exp) = (0.0, 0.0);
    let (mut block, mut block_exp) = (0.0, 0.0);
    let (mut block_var, mut draws_var) = (0.0, 0.0);
    for r in ds.matches() {
        let (h, w) = (r.home_team.index(), r.away_team.index());
        let l = (truth.gamma + a[h] + b[w]).exp();
        let m = (a[w] + b[h]).exp();
        let pi = |x: u32, y: u32| scoreline::poisson::pmf(x, l) * scoreline::poisson::pmf(y, m);
        let pd = pi(0, 0) + pi(1, 1);
        let pb = pi(0, 0) + pi(0, 1) + pi(1, 0) + pi(1, 1);
        low_draws_exp += pd;
        block_exp += pb;
        draws_var += pd * (1.0 - pd);
        block_var += pb * (1.0 - pb);
        let (x, y) = (r.home_goals, r.away_goals);
        if x <= 1 && y <= 1 {
            block += 1.0;
            if x == y {
                low_draws += 1.0;
            }
        }
    }
    assert!((block - block_exp).abs() < 3.0 * block_var.sqrt(), "block {block} vs {block_exp}");
    assert!(low_draws - low_draws_exp > 3.0 * draws_var.sqrt(), "draws {low_draws} vs {low_draws_exp}");
}
