//! Mixed equilibria by support enumeration.
//!
//! With two players the indifference conditions decouple: player 1's indifference across
//! its support only involves player 2's mixture and vice versa. Each side is then a
//! search over one simplex. With one free variable this is a sign-change scan plus
//! bisection; larger simplices use a Nelder–Mead multistart.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Game, MixedProfile, PureProfile};
use crate::optim::{bisect, bisect_predicate, nelder_mead};
use crate::path_eval::{Criterion, Evaluator, PathValues};
use crate::social::social_delay_mixed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixedSettings {
    /// Games with more players are refused unless this is raised.
    pub max_players: usize,
    /// Grid intervals for the one-variable scans.
    pub scan_intervals: usize,
    /// Residual tolerance of the indifference equations, relative to the value scale.
    pub solve_tol: f64,
    /// Profiles closer than this in max-norm count as one equilibrium.
    pub dedup: f64,
    pub multistart: usize,
}

impl Default for MixedSettings {
    fn default() -> Self {
        MixedSettings {
            max_players: 2,
            scan_intervals: 200,
            solve_tol: 1e-7,
            dedup: 1e-3,
            multistart: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedEquilibrium {
    pub criterion: Criterion,
    pub profile: MixedProfile,
    /// The profile is one representative of a continuum of equilibria.
    pub continuum: bool,
    /// Values of every path per player against the others' strategies.
    pub values: Vec<PathValues>,
    pub social_delay: f64,
}

impl MixedEquilibrium {
    pub fn is_pure(&self) -> bool {
        self.profile
            .probs
            .iter()
            .all(|v| v.iter().filter(|&&x| x > 0.0).count() == 1)
    }

    pub fn support(&self) -> Vec<Vec<usize>> {
        self.profile.support()
    }
}

/// Non-empty subsets of `0..n`, by size then lexicographically.
fn subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    out.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

fn scale(v: &PathValues) -> f64 {
    v.best().abs().max(1.0)
}

fn support_ok(v: &PathValues, support: &[usize]) -> bool {
    support.iter().all(|&p| v.is_weakly_best(p))
}

/// One side of the decoupled two-player problem.
struct Side<'a, 'g> {
    ev: &'a Evaluator<'g>,
    criterion: Criterion,
    pair_i: usize,
    s_i: &'a [usize],
    /// Opponent link loads for each opponent path.
    bases: Vec<Vec<usize>>,
    s_j: &'a [usize],
    cfg: &'a MixedSettings,
}

impl Side<'_, '_> {
    fn sigma(&self, x: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.bases.len()];
        let mut rest = 1.0;
        for (k, &r) in self.s_j.iter().enumerate().take(self.s_j.len() - 1) {
            s[r] = x[k];
            rest -= x[k];
        }
        s[*self.s_j.last().unwrap()] = rest;
        s
    }

    fn values(&self, sigma: &[f64]) -> Result<PathValues> {
        let bases: Vec<(f64, Vec<usize>)> = sigma
            .iter()
            .zip(&self.bases)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, b)| (*w, b.clone()))
            .collect();
        self.ev.mixed_values(self.criterion, self.pair_i, &bases)
    }

    fn residuals(&self, v: &PathValues) -> Vec<f64> {
        let v0 = v.values[self.s_i[0]];
        self.s_i[1..].iter().map(|&p| v.values[p] - v0).collect()
    }

    fn ok(&self, sigma: &[f64]) -> Result<bool> {
        Ok(support_ok(&self.values(sigma)?, self.s_i))
    }

    fn solve(&self) -> Result<Vec<(Vec<f64>, bool)>> {
        let d = self.s_j.len() - 1;
        let e = self.s_i.len() - 1;
        match d {
            0 => {
                let s = self.sigma(&[]);
                Ok(if self.ok(&s)? {
                    vec![(s, false)]
                } else {
                    vec![]
                })
            }
            1 => self.solve_line(e),
            _ => self.solve_simplex(e),
        }
    }

    /// Maximal runs of consecutive grid indices where `flags` hold.
    fn runs(flags: &[bool]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, &f) in flags.iter().enumerate() {
            match (f, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push((s, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, flags.len() - 1));
        }
        out
    }

    /// Representatives of valid stretches of the opponent's line segment.
    fn continuum_reps(&self, grid: &[f64], flags: &[bool]) -> Result<Vec<(Vec<f64>, bool)>> {
        let mut reps = Vec::new();
        let m = grid.len();
        for (a, b) in Self::runs(flags) {
            let mut pts = Vec::new();
            let pred = |s: f64| self.ok(&self.sigma(&[s])).unwrap_or(false);
            if a > 0 {
                pts.push(bisect_predicate(pred, grid[a], grid[a - 1], 50));
            }
            if b + 1 < m {
                pts.push(bisect_predicate(pred, grid[b], grid[b + 1], 50));
            }
            if pts.is_empty() {
                pts.push(0.5 * (grid[a] + grid[b]));
            }
            for s in pts {
                reps.push((self.sigma(&[s]), true));
            }
        }
        Ok(reps)
    }

    fn solve_line(&self, e: usize) -> Result<Vec<(Vec<f64>, bool)>> {
        let m = self.cfg.scan_intervals.max(2);
        let grid: Vec<f64> = (1..m).map(|i| i as f64 / m as f64).collect();
        if e == 0 {
            let flags: Vec<bool> = grid
                .iter()
                .map(|&s| self.ok(&self.sigma(&[s])))
                .collect::<Result<_>>()?;
            return self.continuum_reps(&grid, &flags);
        }
        let full: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        let vals: Vec<PathValues> = full
            .iter()
            .map(|&s| self.values(&self.sigma(&[s])))
            .collect::<Result<_>>()?;
        let g: Vec<f64> = vals.iter().map(|v| self.residuals(v)[0]).collect();
        let tol: Vec<f64> = vals.iter().map(|v| self.cfg.solve_tol * scale(v)).collect();
        let flat: Vec<bool> = (0..=m).map(|i| g[i].abs() <= tol[i]).collect();
        let mut out = Vec::new();
        // stretches where the equation holds identically
        let interior_flat: Vec<bool> = (1..m)
            .map(|i| flat[i] && (flat[i - 1] || flat[i + 1]))
            .collect();
        if interior_flat.iter().any(|&f| f) {
            let flags: Vec<bool> = (1..m)
                .map(|i| interior_flat[i - 1] && self.ok(&self.sigma(&[full[i]])).unwrap_or(false))
                .collect();
            out.extend(self.continuum_reps(&grid, &flags)?);
        }
        let mut roots = Vec::new();
        for i in 0..m {
            if flat[i] || flat[i + 1] {
                if flat[i] && i > 0 && !interior_flat[i - 1] {
                    roots.push(full[i]);
                }
                continue;
            }
            if (g[i] < 0.0) != (g[i + 1] < 0.0) {
                let f = |s: f64| {
                    self.values(&self.sigma(&[s]))
                        .map(|v| self.residuals(&v)[0])
                        .unwrap_or(f64::NAN)
                };
                roots.push(bisect(f, full[i], full[i + 1], 80));
            }
        }
        for s in roots {
            if s <= 1e-9 || s >= 1.0 - 1e-9 {
                continue;
            }
            let sigma = self.sigma(&[s]);
            let v = self.values(&sigma)?;
            let t = self.cfg.solve_tol * scale(&v);
            if self
                .residuals(&v)
                .iter()
                .all(|r| r.abs() <= t.max(v.tolerance(self.s_i[0])))
                && support_ok(&v, self.s_i)
            {
                out.push((sigma, false));
            }
        }
        Ok(out)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let rest = 1.0 - x.iter().sum::<f64>();
        let neg: f64 = x
            .iter()
            .chain(std::iter::once(&rest))
            .map(|v| (-v).max(0.0))
            .sum();
        if neg > 0.0 {
            return 1e6 * (1.0 + neg);
        }
        match self.values(&self.sigma(x)) {
            Ok(v) => {
                let sc = scale(&v);
                let ind: f64 = self.residuals(&v).iter().map(|r| (r / sc).powi(2)).sum();
                let v0 = v.values[self.s_i[0]];
                let off: f64 = (0..v.values.len())
                    .filter(|p| !self.s_i.contains(p))
                    .map(|p| {
                        let better = if self.criterion.maximizes() {
                            v.values[p] - v0
                        } else {
                            v0 - v.values[p]
                        };
                        (better.max(0.0) / sc).powi(2)
                    })
                    .sum();
                ind + off
            }
            Err(_) => f64::INFINITY,
        }
    }

    fn solve_simplex(&self, e: usize) -> Result<Vec<(Vec<f64>, bool)>> {
        let d = self.s_j.len() - 1;
        let res = 10usize;
        let mut lattice = Vec::new();
        lattice_points(d + 1, res, &mut Vec::new(), &mut lattice);
        let interior: Vec<Vec<f64>> = lattice
            .into_iter()
            .filter(|c| c.iter().all(|&k| k > 0))
            .map(|c| c[..d].iter().map(|&k| k as f64 / res as f64).collect())
            .collect();
        if e == 0 {
            let bary = vec![1.0 / (d + 1) as f64; d];
            let mut cands = vec![bary];
            cands.extend(interior);
            for x in cands {
                let s = self.sigma(&x);
                if self.ok(&s)? {
                    return Ok(vec![(s, true)]);
                }
            }
            return Ok(vec![]);
        }
        let mut seeds: Vec<(f64, Vec<f64>)> = interior
            .into_iter()
            .map(|x| (self.objective(&x), x))
            .collect();
        seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(Vec<f64>, bool)> = Vec::new();
        for (_, x0) in seeds.into_iter().take(self.cfg.multistart) {
            let (x, _) = nelder_mead(|x| self.objective(x), &x0, 0.05, 2000);
            let sigma = self.sigma(&x);
            if sigma
                .iter()
                .zip(0..)
                .any(|(&w, r)| self.s_j.contains(&r) && w <= 1e-9)
            {
                continue;
            }
            let v = self.values(&sigma)?;
            let t = (self.cfg.solve_tol * scale(&v)).max(v.tolerance(self.s_i[0])) * 10.0;
            if self.residuals(&v).iter().all(|r| r.abs() <= t) && support_ok(&v, self.s_i) {
                out.push((sigma, false));
            }
        }
        Ok(out)
    }
}

fn lattice_points(parts: usize, total: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        cur.push(total);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for k in 0..=total {
        cur.push(k);
        lattice_points(parts - 1, total - k, cur, out);
        cur.pop();
    }
}

fn opponent_base(game: &Game, pair: usize, path: usize) -> Vec<usize> {
    let mut b = vec![0; game.links().len()];
    for &l in &game.paths(pair)[path] {
        b[l] += 1;
    }
    b
}

fn dedup_push(out: &mut Vec<(MixedProfile, bool)>, p: MixedProfile, continuum: bool, tol: f64) {
    let close = |a: &MixedProfile| {
        a.probs
            .iter()
            .flatten()
            .zip(p.probs.iter().flatten())
            .all(|(x, y)| (x - y).abs() <= tol)
    };
    if !out.iter().any(|(q, _)| close(q)) {
        out.push((p, continuum));
    }
}

fn two_player(
    ev: &Evaluator,
    criterion: Criterion,
    cfg: &MixedSettings,
) -> Result<Vec<(MixedProfile, bool)>> {
    let game = ev.game();
    let pairs = game.player_pairs();
    let (k0, k1) = (pairs[0], pairs[1]);
    let (n0, n1) = (game.paths(k0).len(), game.paths(k1).len());
    let bases0: Vec<Vec<usize>> = (0..n0).map(|r| opponent_base(game, k0, r)).collect();
    let bases1: Vec<Vec<usize>> = (0..n1).map(|r| opponent_base(game, k1, r)).collect();
    let mut out = Vec::new();
    for s0 in subsets(n0) {
        for s1 in subsets(n1) {
            // player 0 indifferent on s0 pins down player 1's mixture, and vice versa
            let for1 = Side {
                ev,
                criterion,
                pair_i: k0,
                s_i: &s0,
                bases: bases1.clone(),
                s_j: &s1,
                cfg,
            }
            .solve()?;
            if for1.is_empty() {
                continue;
            }
            let for0 = Side {
                ev,
                criterion,
                pair_i: k1,
                s_i: &s1,
                bases: bases0.clone(),
                s_j: &s0,
                cfg,
            }
            .solve()?;
            for (x0, c0) in &for0 {
                for (x1, c1) in &for1 {
                    let p = MixedProfile {
                        probs: vec![x0.clone(), x1.clone()],
                    };
                    dedup_push(&mut out, p, *c0 || *c1, cfg.dedup);
                }
            }
        }
    }
    Ok(out)
}

fn one_player(ev: &Evaluator, criterion: Criterion) -> Result<Vec<(MixedProfile, bool)>> {
    let game = ev.game();
    let pair = game.player_pairs()[0];
    let v = ev.deviation_values(criterion, pair, &vec![0; game.links().len()])?;
    let best = v.best_set();
    let n = v.values.len();
    let mut out: Vec<(MixedProfile, bool)> = best
        .iter()
        .map(|&p| {
            let mut x = vec![0.0; n];
            x[p] = 1.0;
            (MixedProfile { probs: vec![x] }, false)
        })
        .collect();
    if best.len() > 1 {
        let mut x = vec![0.0; n];
        for &p in &best {
            x[p] = 1.0 / best.len() as f64;
        }
        out.push((MixedProfile { probs: vec![x] }, true));
    }
    Ok(out)
}

/// Fully coupled support search for more than two players.
fn many_players(
    ev: &Evaluator,
    criterion: Criterion,
    cfg: &MixedSettings,
) -> Result<Vec<(MixedProfile, bool)>> {
    let game = ev.game();
    let pairs = game.player_pairs();
    let sizes: Vec<usize> = pairs.iter().map(|&k| game.paths(k).len()).collect();
    let per_player: Vec<Vec<Vec<usize>>> = sizes.iter().map(|&n| subsets(n)).collect();
    let mut supports: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for opts in &per_player {
        supports = supports
            .into_iter()
            .flat_map(|s| {
                opts.iter().map(move |o| {
                    let mut t = s.clone();
                    t.push(o.clone());
                    t
                })
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ev.settings().monte_carlo.seed);
    let mut out = Vec::new();
    for sup in supports {
        let dims: Vec<usize> = sup.iter().map(|s| s.len() - 1).collect();
        let total: usize = dims.iter().sum();
        let build = |x: &[f64]| -> Option<MixedProfile> {
            let mut probs = Vec::new();
            let mut at = 0;
            for (i, s) in sup.iter().enumerate() {
                let mut v = vec![0.0; sizes[i]];
                let mut rest = 1.0;
                for &r in &s[..s.len() - 1] {
                    v[r] = x[at];
                    rest -= x[at];
                    at += 1;
                }
                v[*s.last().unwrap()] = rest;
                if v.iter().any(|&w| w < 0.0) {
                    return None;
                }
                probs.push(v);
            }
            Some(MixedProfile { probs })
        };
        let objective = |x: &[f64]| -> f64 {
            let Some(p) = build(x) else { return 1e6 };
            let mut acc = 0.0;
            for (i, s) in sup.iter().enumerate() {
                let Ok(v) = ev.player_values(criterion, &p, i) else {
                    return f64::INFINITY;
                };
                let sc = scale(&v);
                let v0 = v.values[s[0]];
                for p in 0..v.values.len() {
                    let d = v.values[p] - v0;
                    if s.contains(&p) {
                        acc += (d / sc).powi(2);
                    } else {
                        let better = if criterion.maximizes() { d } else { -d };
                        acc += (better.max(0.0) / sc).powi(2);
                    }
                }
            }
            acc
        };
        let mut starts: Vec<Vec<f64>> = vec![sup
            .iter()
            .flat_map(|s| std::iter::repeat_n(1.0 / s.len() as f64, s.len() - 1))
            .collect()];
        if total > 0 {
            for _ in 1..cfg.multistart {
                let mut x = Vec::with_capacity(total);
                for s in &sup {
                    let raw: Vec<f64> = (0..s.len()).map(|_| rng.random::<f64>() + 0.05).collect();
                    let z: f64 = raw.iter().sum();
                    x.extend(raw[..s.len() - 1].iter().map(|r| r / z));
                }
                starts.push(x);
            }
        }
        for x0 in starts {
            let x = if total == 0 {
                x0
            } else {
                nelder_mead(objective, &x0, 0.05, 3000).0
            };
            let Some(p) = build(&x) else { continue };
            if p.probs
                .iter()
                .zip(&sup)
                .any(|(v, s)| s.iter().any(|&r| v[r] <= 1e-9))
            {
                continue;
            }
            let mut good = true;
            for (i, s) in sup.iter().enumerate() {
                let v = ev.player_values(criterion, &p, i)?;
                let t = (cfg.solve_tol * scale(&v)).max(v.tolerance(s[0])) * 10.0;
                let v0 = v.values[s[0]];
                good &= s.iter().all(|&q| (v.values[q] - v0).abs() <= t) && support_ok(&v, s);
            }
            if good {
                dedup_push(&mut out, p, false, cfg.dedup);
            }
        }
    }
    Ok(out)
}

/// Every equilibrium found over all support hypotheses, pure ones included.
pub fn enumerate_mixed_equilibria(
    ev: &Evaluator,
    criterion: Criterion,
    cfg: &MixedSettings,
) -> Result<Vec<MixedEquilibrium>> {
    criterion.validate()?;
    let game = ev.game();
    let n = game.n();
    if n > cfg.max_players {
        return Err(Error::PlayersCap {
            players: n,
            cap: cfg.max_players,
        });
    }
    let found = match n {
        0 => Vec::new(),
        1 => one_player(ev, criterion)?,
        2 => two_player(ev, criterion, cfg)?,
        _ => {
            log::warn!("mixed search over {n} players enumerates every support combination");
            many_players(ev, criterion, cfg)?
        }
    };
    let mut out = Vec::with_capacity(found.len());
    for (profile, continuum) in found {
        let values = (0..n)
            .map(|i| ev.player_values(criterion, &profile, i))
            .collect::<Result<_>>()?;
        out.push(MixedEquilibrium {
            criterion,
            social_delay: social_delay_mixed(ev, &profile)?,
            profile,
            continuum,
            values,
        });
    }
    out.sort_by(|a, b| {
        let sa = a.support();
        let sb = b.support();
        let size = |s: &Vec<Vec<usize>>| s.iter().map(Vec::len).sum::<usize>();
        size(&sa).cmp(&size(&sb)).then(sa.cmp(&sb)).then_with(|| {
            a.profile
                .probs
                .iter()
                .flatten()
                .zip(b.profile.probs.iter().flatten())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    /// Largest shortfall of a support path against the best path, over all players.
    pub violation: f64,
    /// Allowed shortfall: three standard errors of the compared estimates, or a
    /// relative `1e-6` for closed-form criteria.
    pub tolerance: f64,
}

impl Verification {
    pub fn passes(&self) -> bool {
        self.violation <= self.tolerance
    }
}

/// Recomputes every player's values with an independent Monte Carlo seed.
pub fn verify_equilibrium(
    ev: &Evaluator,
    criterion: Criterion,
    profile: &MixedProfile,
    fresh_seed: u64,
) -> Result<Verification> {
    profile
        .validate(ev.game())
        .map_err(|e| Error::Validation(vec![e]))?;
    let fresh = ev.reseeded(fresh_seed);
    let mut violation: f64 = f64::NEG_INFINITY;
    let mut tolerance: f64 = 0.0;
    for (i, support) in profile.support().iter().enumerate() {
        let v = fresh.player_values(criterion, profile, i)?;
        let best = v.values.iter().position(|&x| x == v.best()).unwrap_or(0);
        for &p in support {
            violation = violation.max(v.gap(p));
            let t = if criterion == Criterion::Rae || v.stderr[p] > 0.0 {
                3.0 * (v.stderr[p] + v.stderr[best])
            } else {
                1e-6 * v.best().abs().max(1.0)
            };
            tolerance = tolerance.max(t);
        }
    }
    Ok(Verification {
        violation: violation.max(0.0),
        tolerance,
    })
}

/// Pure-profile convenience wrapper around [`verify_equilibrium`].
pub fn verify_pure(
    ev: &Evaluator,
    criterion: Criterion,
    profile: &PureProfile,
    fresh_seed: u64,
) -> Result<Verification> {
    verify_equilibrium(
        ev,
        criterion,
        &MixedProfile::from_pure(ev.game(), profile),
        fresh_seed,
    )
}

/// Per-player probabilities of being shortest for one pure profile.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorEntry {
    pub profile: Vec<usize>,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTensor {
    /// Number of paths available to each player.
    pub shape: Vec<usize>,
    /// Entries in odometer order, last player fastest.
    pub entries: Vec<TensorEntry>,
}

pub const DEFAULT_TENSOR_CAP: usize = 100_000;

/// Probability-of-being-shortest tensor over all pure profiles.
pub fn build_probability_tensor(ev: &Evaluator, cap: usize) -> Result<ProbabilityTensor> {
    let game = ev.game();
    let shape: Vec<usize> = game
        .player_pairs()
        .iter()
        .map(|&k| game.paths(k).len())
        .collect();
    let count = shape.iter().map(|&s| s as f64).product::<f64>();
    if count > cap as f64 {
        return Err(Error::TensorCap {
            count: count.min(usize::MAX as f64) as usize,
            cap,
        });
    }
    let mut entries = Vec::with_capacity(count as usize);
    let mut idx = vec![0usize; shape.len()];
    loop {
        let profile = PureProfile {
            choice: idx.clone(),
        };
        let t = (0..shape.len())
            .map(|i| ev.pure_prob_min(&profile, i, idx[i]))
            .collect::<Result<_>>()?;
        entries.push(TensorEntry {
            profile: idx.clone(),
            t,
        });
        let mut pos = shape.len();
        loop {
            if pos == 0 {
                return Ok(ProbabilityTensor { shape, entries });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < shape[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Solves `M y = 0` on the support rows with `sum y = 1`, returning `y` and the common value.
fn indifference(payoff: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> Option<(Vec<f64>, f64)> {
    let k = rows.len();
    let mut a = DMatrix::zeros(k + 1, k + 1);
    let mut b = DVector::zeros(k + 1);
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            a[(r, c)] = payoff[(i, j)];
        }
        a[(r, k)] = -1.0;
    }
    for c in 0..k {
        a[(k, c)] = 1.0;
    }
    b[k] = 1.0;
    let x = a.lu().solve(&b)?;
    Some((x.iter().take(k).copied().collect(), x[k]))
}

/// Nash equilibria of a two-player tensor (both players maximize their entry) by classic
/// equal-size support enumeration. Exact ties between supports may be missed.
pub fn tensor_nash_two_player(tensor: &ProbabilityTensor) -> Result<Vec<MixedProfile>> {
    if tensor.shape.len() != 2 {
        return Err(Error::Unsupported(
            "tensor equilibria need exactly two players".into(),
        ));
    }
    let (m, n) = (tensor.shape[0], tensor.shape[1]);
    let mut a = DMatrix::zeros(m, n);
    let mut b = DMatrix::zeros(m, n);
    for e in &tensor.entries {
        a[(e.profile[0], e.profile[1])] = e.t[0];
        b[(e.profile[0], e.profile[1])] = e.t[1];
    }
    let bt = b.transpose();
    let eps = 1e-9;
    let mut out: Vec<MixedProfile> = Vec::new();
    for rows in subsets(m) {
        for cols in subsets(n).into_iter().filter(|c| c.len() == rows.len()) {
            let Some((y, va)) = indifference(&a, &rows, &cols) else {
                continue;
            };
            let Some((x, vb)) = indifference(&bt, &cols, &rows) else {
                continue;
            };
            if y.iter().chain(&x).any(|&w| w < -eps) {
                continue;
            }
            let mut xs = vec![0.0; m];
            let mut ys = vec![0.0; n];
            for (k, &i) in rows.iter().enumerate() {
                xs[i] = x[k].max(0.0);
            }
            for (k, &j) in cols.iter().enumerate() {
                ys[j] = y[k].max(0.0);
            }
            let row_best =
                (0..m).all(|i| (0..n).map(|j| a[(i, j)] * ys[j]).sum::<f64>() <= va + eps);
            let col_best =
                (0..n).all(|j| (0..m).map(|i| b[(i, j)] * xs[i]).sum::<f64>() <= vb + eps);
            if row_best && col_best {
                let p = MixedProfile {
                    probs: vec![xs, ys],
                };
                if !out.iter().any(|q| {
                    q.probs
                        .iter()
                        .flatten()
                        .zip(p.probs.iter().flatten())
                        .all(|(u, v)| (u - v).abs() < 1e-9)
                }) {
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}
