//! Local minimisers: Nelder–Mead for small derivative-free problems and
//! BFGS for the full rating vector.
//!
//! Objectives may return `+∞` (or NaN) to mark infeasible points; both
//! methods treat such points as worse than any finite value.

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

#[derive(Debug, Clone)]
pub struct NelderMead {
    /// Offset of each initial vertex from `x0` along its axis.
    pub step: Vec<f64>,
    /// Stop once `f_worst - f_best ≤ ftol · (1 + |f_best|)`.
    pub ftol: f64,
    pub max_iterations: usize,
}

impl NelderMead {
    pub fn new(step: Vec<f64>) -> Self {
        Self {
            step,
            ftol: 1e-10,
            max_iterations: 2000,
        }
    }

    pub fn minimize(&self, mut f: impl FnMut(&[f64]) -> f64, x0: &[f64]) -> Minimum {
        let n = x0.len();
        assert_eq!(self.step.len(), n, "one step per coordinate");
        let mut eval = |x: &[f64]| sanitize(f(x));

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), eval(x0)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.step[i];
            let fx = eval(&x);
            simplex.push((x, fx));
        }

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iterations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[n].1;
            if best.is_finite() && worst - best <= self.ftol * (1.0 + best.abs()) {
                converged = true;
                break;
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(alpha);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(gamma);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(rho);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            let x_best = simplex[0].0.clone();
            for (x, fx) in simplex.iter_mut().skip(1) {
                for (xi, bi) in x.iter_mut().zip(&x_best) {
                    *xi = bi + sigma * (*xi - bi);
                }
                *fx = eval(x);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, f) = simplex.swap_remove(0);
        Minimum {
            x,
            f,
            iterations,
            converged,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bfgs {
    /// Stop once an iteration improves `f` by less than `ftol · (1 + |f|)`.
    pub ftol: f64,
    /// Stop once `max |g_i| ≤ gtol`.
    pub gtol: f64,
    pub max_iterations: usize,
}

impl Default for Bfgs {
    fn default() -> Self {
        Self {
            ftol: 1e-10,
            gtol: 1e-6,
            max_iterations: 500,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

impl Bfgs {
    /// Minimises `fg`, which returns `f(x)` and writes `∇f(x)` into its
    /// second argument.
    pub fn minimize(&self, mut fg: impl FnMut(&[f64], &mut [f64]) -> f64, x0: &[f64]) -> Minimum {
        let n = x0.len();
        let mut x = x0.to_vec();
        let mut g = vec![0.0; n];
        let mut f = sanitize(fg(&x, &mut g));
        if !f.is_finite() {
            return Minimum {
                x,
                f,
                iterations: 0,
                converged: false,
            };
        }
        let identity = |scale: f64| -> Vec<f64> {
            let mut h = vec![0.0; n * n];
            for i in 0..n {
                h[i * n + i] = scale;
            }
            h
        };
        let mut h = identity(1.0 / inf_norm(&g).max(1.0));
        let mut fresh = true;
        let mut first_update = true;

        let mut x_new = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut iterations = 0;
        let mut converged = false;

        while iterations < self.max_iterations {
            if inf_norm(&g) <= self.gtol {
                converged = true;
                break;
            }
            iterations += 1;
            for i in 0..n {
                d[i] = -dot(&h[i * n..(i + 1) * n], &g);
            }
            let mut slope = dot(&d, &g);
            if slope >= 0.0 {
                h = identity(1.0 / inf_norm(&g).max(1.0));
                d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi * h[0]);
                slope = dot(&d, &g);
                fresh = true;
            }

            let mut step = 1.0;
            let mut f_new = f64::INFINITY;
            let mut accepted = false;
            for _ in 0..60 {
                for i in 0..n {
                    x_new[i] = x[i] + step * d[i];
                }
                f_new = sanitize(fg(&x_new, &mut g_new));
                if f_new.is_finite() && f_new <= f + 1e-4 * step * slope {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                if fresh {
                    converged = -slope <= self.ftol * (1.0 + f.abs());
                    break;
                }
                h = identity(1.0 / inf_norm(&g).max(1.0));
                fresh = true;
                continue;
            }

            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let improvement = f - f_new;
            std::mem::swap(&mut x, &mut x_new);
            std::mem::swap(&mut g, &mut g_new);
            f = f_new;

            let sy = dot(&s, &y);
            if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                if first_update || fresh {
                    h = identity(sy / dot(&y, &y));
                    first_update = false;
                }
                let rho = 1.0 / sy;
                let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
                let yhy = dot(&y, &hy);
                for i in 0..n {
                    for j in 0..n {
                        h[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                    }
                }
                fresh = false;
            }
            if improvement <= self.ftol * (1.0 + f.abs()) {
                converged = true;
                break;
            }
        }
        Minimum {
            x,
            f,
            iterations,
            converged,
        }
    }
}
