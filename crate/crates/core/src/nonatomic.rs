//! Non-atomic limit: a continuum of players split across the paths of one pair.
//!
//! Loads enter the latency families only through path fractions, and a single player's
//! deviation does not move them. An equilibrium equalizes the criterion over the used
//! paths, with unused paths weakly worse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{bisect, golden_section, nelder_mead};
use crate::path_eval::{Criterion, Evaluator, PathValues};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonatomicSettings {
    /// Grid intervals of the sign-change scan on each edge of the simplex.
    pub scan_intervals: usize,
    pub bisect_iters: usize,
    /// Lattice resolution for searches over the full three-path simplex.
    pub simplex_resolution: usize,
    /// Lattice resolution of the social-optimum search before refinement.
    pub opt_grid: usize,
    /// Equalization residual accepted for closed-form criteria.
    pub residual_tol: f64,
}

impl Default for NonatomicSettings {
    fn default() -> Self {
        NonatomicSettings {
            scan_intervals: 20,
            bisect_iters: 40,
            simplex_resolution: 20,
            opt_grid: 100,
            residual_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonatomicEquilibrium {
    pub criterion: Criterion,
    /// Fraction of players on each path.
    pub fractions: Vec<f64>,
    pub values: PathValues,
    pub social_delay: f64,
    /// Largest spread of the criterion over used paths.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonatomicReport {
    pub equilibria: Vec<NonatomicEquilibrium>,
    pub optimum: Vec<f64>,
    pub optimum_delay: f64,
    /// Worst equilibrium over the optimum.
    pub poa: f64,
}

fn check_game(ev: &Evaluator) -> Result<usize> {
    let g = ev.game();
    if g.pairs().len() != 1 {
        return Err(Error::Unsupported(
            "the non-atomic solver handles a single source/destination pair".into(),
        ));
    }
    let np = g.paths(0).len();
    if np > 3 {
        return Err(Error::Unsupported(format!(
            "the non-atomic solver handles at most three paths, got {np}"
        )));
    }
    Ok(np)
}

/// Load fraction on every link when path `p` carries `fractions[p]`.
pub fn link_fractions(ev: &Evaluator, fractions: &[f64]) -> Vec<f64> {
    let g = ev.game();
    let mut u = vec![0.0; g.links().len()];
    for (p, &x) in fractions.iter().enumerate() {
        for &l in &g.paths(0)[p] {
            u[l] += x;
        }
    }
    u.iter().map(|v: &f64| v.clamp(0.0, 1.0)).collect()
}

pub fn nonatomic_values(
    ev: &Evaluator,
    criterion: Criterion,
    fractions: &[f64],
) -> Result<PathValues> {
    ev.values_at(criterion, 0, &link_fractions(ev, fractions))
}

pub fn nonatomic_criterion_value(
    ev: &Evaluator,
    criterion: Criterion,
    fractions: &[f64],
    path: usize,
) -> Result<f64> {
    Ok(nonatomic_values(ev, criterion, fractions)?.values[path])
}

/// `sum_p x_p * E[delay of p]`.
pub fn nonatomic_social_delay(ev: &Evaluator, fractions: &[f64]) -> Result<f64> {
    let u = link_fractions(ev, fractions);
    let mut d = 0.0;
    for (p, &x) in fractions.iter().enumerate() {
        if x > 0.0 {
            d += x * ev.path_moments_at(0, p, &u)?.0;
        }
    }
    Ok(d)
}

/// Spread of the criterion across `support`, and whether off-support paths are weakly worse.
fn assess(v: &PathValues, support: &[usize]) -> (f64, bool) {
    let vals: Vec<f64> = support.iter().map(|&p| v.values[p]).collect();
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = support.iter().all(|&p| v.is_weakly_best(p));
    (hi - lo, ok)
}

struct Solver<'a, 'g> {
    ev: &'a Evaluator<'g>,
    criterion: Criterion,
    np: usize,
    cfg: NonatomicSettings,
}

impl Solver<'_, '_> {
    fn values(&self, x: &[f64]) -> Result<PathValues> {
        nonatomic_values(self.ev, self.criterion, x)
    }

    fn residual_tol(&self, v: &PathValues, support: &[usize]) -> f64 {
        let se = support.iter().map(|&p| v.stderr[p]).fold(0.0, f64::max);
        if self.criterion == Criterion::Rae {
            3.0 * se + 1e-12
        } else {
            self.cfg.residual_tol
        }
    }

    fn accept(&self, x: Vec<f64>, out: &mut Vec<NonatomicEquilibrium>) -> Result<()> {
        let support: Vec<usize> = (0..self.np).filter(|&p| x[p] > 1e-12).collect();
        let v = self.values(&x)?;
        let (residual, ok) = assess(&v, &support);
        if !ok || residual > self.residual_tol(&v, &support) {
            return Ok(());
        }
        if out.iter().any(|e| {
            e.fractions
                .iter()
                .zip(&x)
                .all(|(a, b)| (a - b).abs() < 1e-6)
        }) {
            return Ok(());
        }
        out.push(NonatomicEquilibrium {
            criterion: self.criterion,
            social_delay: nonatomic_social_delay(self.ev, &x)?,
            fractions: x,
            values: v,
            residual,
        });
        Ok(())
    }

    /// Interior roots of `g` on `(0, t_max)` by scan and bisection.
    fn roots(&self, g: &dyn Fn(f64) -> Result<f64>, t_max: f64) -> Result<Vec<f64>> {
        let m = self.cfg.scan_intervals.max(2);
        let ts: Vec<f64> = (0..=m).map(|i| t_max * i as f64 / m as f64).collect();
        let gs: Vec<f64> = ts.iter().map(|&t| g(t)).collect::<Result<_>>()?;
        let mut out = Vec::new();
        for i in 0..m {
            if gs[i] == 0.0 && i > 0 {
                out.push(ts[i]);
            } else if gs[i] != 0.0 && gs[i + 1] != 0.0 && (gs[i] < 0.0) != (gs[i + 1] < 0.0) {
                let f = |t: f64| g(t).unwrap_or(f64::NAN);
                out.push(bisect(f, ts[i], ts[i + 1], self.cfg.bisect_iters));
            }
        }
        Ok(out)
    }

    /// Profiles with the symmetric paths sharing `t` each and the remaining path the rest.
    fn symmetric(&self, sym: &[usize]) -> Result<Vec<NonatomicEquilibrium>> {
        let mut out = Vec::new();
        let others: Vec<usize> = (0..self.np).filter(|p| !sym.contains(p)).collect();
        let k = sym.len() as f64;
        let point = |t: f64| -> Vec<f64> {
            let mut x = vec![0.0; self.np];
            for &p in sym {
                x[p] = t;
            }
            if let Some(&r) = others.first() {
                x[r] = 1.0 - k * t;
            }
            x
        };
        match others.len() {
            0 => self.accept(point(1.0 / k), &mut out)?,
            1 => {
                let t_max = 1.0 / k;
                self.accept(point(0.0), &mut out)?;
                self.accept(point(t_max), &mut out)?;
                let (a, r) = (sym[0], others[0]);
                let g = |t: f64| -> Result<f64> {
                    let v = self.values(&point(t))?;
                    Ok(v.values[a] - v.values[r])
                };
                for t in self.roots(&g, t_max)? {
                    self.accept(point(t), &mut out)?;
                }
            }
            _ => {
                return Err(Error::Unsupported(
                    "symmetry reduction needs at most one non-symmetric path".into(),
                ))
            }
        }
        Ok(out)
    }

    fn general(&self) -> Result<Vec<NonatomicEquilibrium>> {
        let mut out = Vec::new();
        for p in 0..self.np {
            let mut x = vec![0.0; self.np];
            x[p] = 1.0;
            self.accept(x, &mut out)?;
        }
        for a in 0..self.np {
            for b in a + 1..self.np {
                let point = |s: f64| {
                    let mut x = vec![0.0; self.np];
                    x[a] = s;
                    x[b] = 1.0 - s;
                    x
                };
                let g = |s: f64| -> Result<f64> {
                    let v = self.values(&point(s))?;
                    Ok(v.values[a] - v.values[b])
                };
                for s in self.roots(&g, 1.0)? {
                    if s > 0.0 && s < 1.0 {
                        self.accept(point(s), &mut out)?;
                    }
                }
            }
        }
        if self.np == 3 {
            let res = self.cfg.simplex_resolution.max(3);
            let to_x = |y: &[f64]| -> Option<Vec<f64>> {
                let x = vec![y[0], y[1], 1.0 - y[0] - y[1]];
                x.iter().all(|&v| v > 0.0).then_some(x)
            };
            let spread = |y: &[f64]| -> f64 {
                let Some(x) = to_x(y) else { return 1e6 };
                match self.values(&x) {
                    Ok(v) => {
                        let s = v.best().abs().max(1.0);
                        ((v.values[0] - v.values[1]) / s).powi(2)
                            + ((v.values[0] - v.values[2]) / s).powi(2)
                    }
                    Err(_) => f64::INFINITY,
                }
            };
            let mut seeds = Vec::new();
            for i in 1..res {
                for j in 1..res - i {
                    let y = [i as f64 / res as f64, j as f64 / res as f64];
                    seeds.push((spread(&y), y));
                }
            }
            seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (_, y0) in seeds.into_iter().take(3) {
                let (y, _) = nelder_mead(spread, &y0, 0.5 / res as f64, 2000);
                if let Some(x) = to_x(&y) {
                    self.accept(x, &mut out)?;
                }
            }
        }
        Ok(out)
    }
}

/// All non-atomic equilibria found; symmetric profiles only when `symmetry` is given.
pub fn solve_nonatomic(
    ev: &Evaluator,
    criterion: Criterion,
    symmetry: Option<&[usize]>,
    cfg: &NonatomicSettings,
) -> Result<Vec<NonatomicEquilibrium>> {
    criterion.validate()?;
    let np = check_game(ev)?;
    let solver = Solver {
        ev,
        criterion,
        np,
        cfg: *cfg,
    };
    let mut found = match symmetry {
        Some(sym) => solver.symmetric(sym)?,
        None => solver.general()?,
    };
    if found.is_empty() {
        return Err(Error::NoBracket(format!(
            "{criterion}: no interior root and no corner passes the deviation check"
        )));
    }
    found.sort_by(|a, b| {
        a.fractions
            .iter()
            .zip(&b.fractions)
            .map(|(x, y)| y.total_cmp(x))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(found)
}

/// Social optimum over the whole simplex of path fractions.
pub fn nonatomic_optimum(ev: &Evaluator, cfg: &NonatomicSettings) -> Result<(Vec<f64>, f64)> {
    let np = check_game(ev)?;
    let d = |x: &[f64]| nonatomic_social_delay(ev, x).unwrap_or(f64::INFINITY);
    match np {
        1 => Ok((vec![1.0], d(&[1.0]))),
        2 => {
            let m = cfg.opt_grid.max(2);
            let (mut best, mut fb) = (0.0, f64::INFINITY);
            for i in 0..=m {
                let s = i as f64 / m as f64;
                let f = d(&[s, 1.0 - s]);
                if f < fb {
                    best = s;
                    fb = f;
                }
            }
            let h = 1.0 / m as f64;
            let (s, f) = golden_section(
                |s| d(&[s, 1.0 - s]),
                (best - h).max(0.0),
                (best + h).min(1.0),
                1e-10,
            );
            Ok(if f < fb {
                (vec![s, 1.0 - s], f)
            } else {
                (vec![best, 1.0 - best], fb)
            })
        }
        _ => {
            let m = cfg.opt_grid.max(2);
            let (mut best, mut fb) = (vec![0.0, 0.0, 1.0], f64::INFINITY);
            for i in 0..=m {
                for j in 0..=m - i {
                    let x = [
                        i as f64 / m as f64,
                        j as f64 / m as f64,
                        (m - i - j) as f64 / m as f64,
                    ];
                    let f = d(&x);
                    if f < fb {
                        best = x.to_vec();
                        fb = f;
                    }
                }
            }
            // nested golden-section around the lattice optimum
            let h = 1.0 / m as f64;
            let inner = |a: f64| -> (f64, f64) {
                let rest = 1.0 - a;
                let lo = (best[1] - h).max(0.0).min(rest);
                let hi = (best[1] + h).min(rest);
                golden_section(|b| d(&[a, b, rest - b]), lo, hi, 1e-10)
            };
            let (a, _) = golden_section(
                |a| inner(a).1,
                (best[0] - h).max(0.0),
                (best[0] + h).min(1.0),
                1e-10,
            );
            let (b, f) = inner(a);
            Ok(if f < fb {
                (vec![a, b, 1.0 - a - b], f)
            } else {
                (best, fb)
            })
        }
    }
}

/// Equilibria, optimum and price of anarchy in one go.
pub fn nonatomic_poa(
    ev: &Evaluator,
    criterion: Criterion,
    symmetry: Option<&[usize]>,
    cfg: &NonatomicSettings,
) -> Result<NonatomicReport> {
    let equilibria = solve_nonatomic(ev, criterion, symmetry, cfg)?;
    let (optimum, optimum_delay) = nonatomic_optimum(ev, cfg)?;
    let delays: Vec<f64> = equilibria.iter().map(|e| e.social_delay).collect();
    let poa = crate::social::price_of_anarchy(&delays, optimum_delay)?;
    Ok(NonatomicReport {
        equilibria,
        optimum,
        optimum_delay,
        poa,
    })
}
