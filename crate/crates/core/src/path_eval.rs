//! Criterion values of the paths of one source/destination pair.
//!
//! A player comparing paths sees every link at the load of its opponents plus one (itself),
//! whichever path it picks. So one vector of per-link load fractions fixes the laws of all
//! candidate paths at once, and the probability-of-being-shortest can be estimated by
//! drawing each link once per replication and reusing the draw across paths. Shared links
//! then correlate path delays exactly as in the joint law.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{convolve_all, mix, Distribution, GridSettings, Sampler};
use crate::error::{Error, Result};
use crate::network::{Assignment, Game, MixedProfile, NetworkError, PureProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Criterion {
    /// Expected delay.
    Nash,
    /// Probability of being the shortest alternative (maximized).
    Rae,
    /// `Var + rho * mean`.
    #[serde(rename = "mv")]
    MeanVariance { rho: f64 },
    /// Upper-tail conditional expectation at tail mass `alpha`.
    Cvar { alpha: f64 },
}

impl Criterion {
    pub fn maximizes(&self) -> bool {
        matches!(self, Criterion::Rae)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Nash => "nash",
            Criterion::Rae => "rae",
            Criterion::MeanVariance { .. } => "mv",
            Criterion::Cvar { .. } => "cvar",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Criterion::MeanVariance { rho } if !(rho >= 0.0 && rho.is_finite()) => {
                Err(Error::Validation(vec![format!(
                    "rho must be a finite non-negative number, got {rho}"
                )]))
            }
            Criterion::Cvar { alpha } if !(alpha > 0.0 && alpha <= 1.0) => Err(Error::Validation(
                vec![format!("alpha must lie in (0, 1], got {alpha}")],
            )),
            _ => Ok(()),
        }
    }

    fn key(&self) -> (u8, u64) {
        match *self {
            Criterion::Nash => (0, 0),
            Criterion::Rae => (1, 0),
            Criterion::MeanVariance { rho } => (2, rho.to_bits()),
            Criterion::Cvar { alpha } => (3, alpha.to_bits()),
        }
    }

    /// `a` is strictly better than `b` by more than `tol`.
    pub fn strictly_better(&self, a: f64, b: f64, tol: f64) -> bool {
        if self.maximizes() {
            a > b + tol
        } else {
            a < b - tol
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Criterion::MeanVariance { rho } => write!(f, "mv(rho={rho})"),
            Criterion::Cvar { alpha } => write!(f, "cvar(alpha={alpha})"),
            c => f.write_str(c.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarlo {
    pub replications: usize,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 0x5EED;

impl Default for MonteCarlo {
    fn default() -> Self {
        MonteCarlo {
            replications: 1_000_000,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSettings {
    pub monte_carlo: MonteCarlo,
    pub grid: GridSettings,
    /// Cap on distinct opponent assignments when averaging over mixed strategies.
    pub support_cap: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            monte_carlo: MonteCarlo::default(),
            grid: GridSettings::default(),
            support_cap: 1_000_000,
        }
    }
}

/// Criterion value of every path of a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PathValues {
    pub criterion: Criterion,
    pub values: Vec<f64>,
    /// Monte Carlo standard error per value; zero for closed-form criteria.
    pub stderr: Vec<f64>,
}

impl PathValues {
    pub fn best(&self) -> f64 {
        let it = self.values.iter().copied();
        if self.criterion.maximizes() {
            it.fold(f64::NEG_INFINITY, f64::max)
        } else {
            it.fold(f64::INFINITY, f64::min)
        }
    }

    fn best_index(&self) -> usize {
        let b = self.best();
        self.values.iter().position(|&v| v == b).unwrap_or(0)
    }

    /// Slack allowed when comparing path `p` against the best value.
    pub fn tolerance(&self, p: usize) -> f64 {
        let se = self.stderr[p].max(self.stderr[self.best_index()]);
        if se > 0.0 || self.criterion == Criterion::Rae {
            2.0 * se + 1e-12
        } else {
            1e-9 * self.best().abs().max(1.0)
        }
    }

    /// How much worse than the best path `p` is (never negative).
    pub fn gap(&self, p: usize) -> f64 {
        let d = if self.criterion.maximizes() {
            self.best() - self.values[p]
        } else {
            self.values[p] - self.best()
        };
        d.max(0.0)
    }

    pub fn is_weakly_best(&self, p: usize) -> bool {
        self.gap(p) <= self.tolerance(p)
    }

    /// Weak best responses; never empty.
    pub fn best_set(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&p| self.is_weakly_best(p))
            .collect()
    }
}

type FracKey = Vec<u64>;

/// Criterion key, pair and the pair's link fractions.
type ValueKey = ((u8, u64), usize, FracKey);

fn frac_key(u: &[f64], links: &[usize]) -> FracKey {
    links.iter().map(|&l| u[l].to_bits()).collect()
}

/// Stateless hash used to derive independent seeds.
fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn substream(root: u64, link: usize, chunk: usize) -> u64 {
    splitmix(
        splitmix(splitmix(root) ^ link as u64) ^ (chunk as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93),
    )
}

const CHUNK: usize = 1 << 15;

/// Evaluates criteria on one game with memoization.
pub struct Evaluator<'g> {
    game: &'g Game,
    settings: EvalSettings,
    links: Mutex<HashMap<(usize, u64), Arc<Distribution>>>,
    paths: Mutex<HashMap<(usize, usize, FracKey), Arc<Distribution>>>,
    values: Mutex<HashMap<ValueKey, PathValues>>,
}

impl<'g> Evaluator<'g> {
    pub fn new(game: &'g Game, settings: EvalSettings) -> Self {
        Evaluator {
            game,
            settings,
            links: Mutex::new(HashMap::new()),
            paths: Mutex::new(HashMap::new()),
            values: Mutex::new(HashMap::new()),
        }
    }

    pub fn game(&self) -> &'g Game {
        self.game
    }

    pub fn settings(&self) -> &EvalSettings {
        &self.settings
    }

    /// Same game and settings, different Monte Carlo root seed, empty caches.
    pub fn reseeded(&self, seed: u64) -> Evaluator<'g> {
        let mut s = self.settings;
        s.monte_carlo.seed = seed;
        Evaluator::new(self.game, s)
    }

    pub fn link(&self, link: usize, u: f64) -> Result<Arc<Distribution>> {
        let key = (link, u.to_bits());
        if let Some(d) = self.links.lock().unwrap().get(&key) {
            return Ok(d.clone());
        }
        let d = Arc::new(self.game.link_at_fraction(link, u)?);
        self.links.lock().unwrap().insert(key, d.clone());
        Ok(d)
    }

    /// Law of a path's delay when its links sit at fractions `u` (indexed by link).
    pub fn path_distribution_at(
        &self,
        pair: usize,
        path: usize,
        u: &[f64],
    ) -> Result<Arc<Distribution>> {
        let links = &self.game.paths(pair)[path];
        let key = (pair, path, frac_key(u, links));
        if let Some(d) = self.paths.lock().unwrap().get(&key) {
            return Ok(d.clone());
        }
        let parts: Vec<Arc<Distribution>> = links
            .iter()
            .map(|&l| self.link(l, u[l]))
            .collect::<Result<_>>()?;
        let d = if parts.len() == 1 {
            parts[0].clone()
        } else {
            let refs: Vec<&Distribution> = parts.iter().map(|d| d.as_ref()).collect();
            Arc::new(convolve_all(&refs, &self.settings.grid)?)
        };
        self.paths.lock().unwrap().insert(key, d.clone());
        Ok(d)
    }

    /// Mean and variance of a path's delay (independent links).
    pub fn path_moments_at(&self, pair: usize, path: usize, u: &[f64]) -> Result<(f64, f64)> {
        let mut mean = 0.0;
        let mut var = 0.0;
        for &l in &self.game.paths(pair)[path] {
            let d = self.link(l, u[l])?;
            mean += d.mean();
            var += d.variance();
        }
        Ok((mean, var))
    }

    /// Criterion values of all paths of `pair` with links at fractions `u`.
    pub fn values_at(&self, criterion: Criterion, pair: usize, u: &[f64]) -> Result<PathValues> {
        let relevant = self.game.pair_links(pair);
        let key = (criterion.key(), pair, frac_key(u, &relevant));
        if let Some(v) = self.values.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let n_paths = self.game.paths(pair).len();
        let v = match criterion {
            Criterion::Rae => self.prob_shortest(pair, u)?,
            _ => {
                let mut values = Vec::with_capacity(n_paths);
                for p in 0..n_paths {
                    values.push(match criterion {
                        Criterion::Nash => self.path_moments_at(pair, p, u)?.0,
                        Criterion::MeanVariance { rho } => {
                            let (m, v) = self.path_moments_at(pair, p, u)?;
                            v + rho * m
                        }
                        Criterion::Cvar { alpha } => {
                            self.path_distribution_at(pair, p, u)?.cvar_upper(alpha)?
                        }
                        Criterion::Rae => unreachable!(),
                    });
                }
                PathValues {
                    criterion,
                    values,
                    stderr: vec![0.0; n_paths],
                }
            }
        };
        self.values.lock().unwrap().insert(key, v.clone());
        Ok(v)
    }

    /// Monte Carlo estimate of `P(path p is no longer than every other path of the pair)`.
    #[allow(clippy::needless_range_loop)]
    fn prob_shortest(&self, pair: usize, u: &[f64]) -> Result<PathValues> {
        let paths = self.game.paths(pair);
        if paths.len() == 1 {
            return Ok(PathValues {
                criterion: Criterion::Rae,
                values: vec![1.0],
                stderr: vec![0.0],
            });
        }
        let links = self.game.pair_links(pair);
        let samplers: Vec<Sampler> = links
            .iter()
            .map(|&l| self.link(l, u[l]).map(|d| d.sampler()))
            .collect::<Result<_>>()?;
        let local: Vec<Vec<usize>> = paths
            .iter()
            .map(|p| p.iter().map(|l| links.binary_search(l).unwrap()).collect())
            .collect();
        let n = self.settings.monte_carlo.replications.max(1);
        let root = self.settings.monte_carlo.seed;
        let chunks = n.div_ceil(CHUNK);
        let per_chunk: Vec<Vec<u64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let size = CHUNK.min(n - c * CHUNK);
                let draws: Vec<Vec<f64>> = samplers
                    .iter()
                    .zip(&links)
                    .map(|(s, &l)| match s {
                        Sampler::Point(v) => vec![*v; size],
                        _ => {
                            let mut rng = ChaCha8Rng::seed_from_u64(substream(root, l, c));
                            (0..size).map(|_| s.sample(&mut rng)).collect()
                        }
                    })
                    .collect();
                let mut counts = vec![0u64; local.len()];
                let mut sums = vec![0.0; local.len()];
                for r in 0..size {
                    let mut min = f64::INFINITY;
                    for (s, p) in sums.iter_mut().zip(&local) {
                        *s = p.iter().map(|&i| draws[i][r]).sum();
                        min = min.min(*s);
                    }
                    for (c, s) in counts.iter_mut().zip(&sums) {
                        if *s <= min {
                            *c += 1;
                        }
                    }
                }
                counts
            })
            .collect();
        let mut counts = vec![0u64; local.len()];
        for c in per_chunk {
            for (a, b) in counts.iter_mut().zip(c) {
                *a += b;
            }
        }
        let values: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let stderr = values
            .iter()
            .map(|p| (p * (1.0 - p) / n as f64).sqrt())
            .collect();
        Ok(PathValues {
            criterion: Criterion::Rae,
            values,
            stderr,
        })
    }

    /// Link fractions seen by a player whose opponents put `base[e]` players on link `e`.
    pub fn deviation_fractions(&self, base: &[usize]) -> Result<Vec<f64>> {
        let n = self.game.n();
        base.iter()
            .map(|&m| {
                if m + 1 > n {
                    Err(NetworkError::BadLoad { load: m + 1, n }.into())
                } else {
                    Ok((m + 1) as f64 / n as f64)
                }
            })
            .collect()
    }

    /// Values of all paths of `pair` for a player facing opponent link loads `base`.
    pub fn deviation_values(
        &self,
        criterion: Criterion,
        pair: usize,
        base: &[usize],
    ) -> Result<PathValues> {
        let u = self.deviation_fractions(base)?;
        self.values_at(criterion, pair, &u)
    }

    /// Opponent link loads seen by a player of `pair` on `occupied` (or an entrant if `None`).
    pub fn opponent_loads(
        &self,
        assignment: &Assignment,
        pair: usize,
        occupied: Option<usize>,
    ) -> Vec<usize> {
        let mut loads = assignment.link_loads(self.game);
        if let Some(p) = occupied {
            for &l in &self.game.paths(pair)[p] {
                loads[l] -= 1;
            }
        }
        loads
    }

    /// Values for a player of `pair` currently on `occupied` in `assignment`.
    pub fn pure_values(
        &self,
        criterion: Criterion,
        assignment: &Assignment,
        pair: usize,
        occupied: Option<usize>,
    ) -> Result<PathValues> {
        let base = self.opponent_loads(assignment, pair, occupied);
        self.deviation_values(criterion, pair, &base)
    }

    /// Values averaged over a distribution of opponent link loads.
    pub fn mixed_values(
        &self,
        criterion: Criterion,
        pair: usize,
        bases: &[(f64, Vec<usize>)],
    ) -> Result<PathValues> {
        let n_paths = self.game.paths(pair).len();
        match criterion {
            Criterion::Nash | Criterion::Rae => {
                let mut values = vec![0.0; n_paths];
                let mut stderr = vec![0.0; n_paths];
                for (w, base) in bases {
                    let v = self.deviation_values(criterion, pair, base)?;
                    for p in 0..n_paths {
                        values[p] += w * v.values[p];
                        stderr[p] += w * v.stderr[p];
                    }
                }
                Ok(PathValues {
                    criterion,
                    values,
                    stderr,
                })
            }
            Criterion::MeanVariance { rho } => {
                let mut mean = vec![0.0; n_paths];
                let mut second = vec![0.0; n_paths];
                for (w, base) in bases {
                    let u = self.deviation_fractions(base)?;
                    for p in 0..n_paths {
                        let (m, v) = self.path_moments_at(pair, p, &u)?;
                        mean[p] += w * m;
                        second[p] += w * (v + m * m);
                    }
                }
                let values = (0..n_paths)
                    .map(|p| (second[p] - mean[p] * mean[p]).max(0.0) + rho * mean[p])
                    .collect();
                Ok(PathValues {
                    criterion,
                    values,
                    stderr: vec![0.0; n_paths],
                })
            }
            Criterion::Cvar { alpha } => {
                if let [(_, base)] = bases {
                    return self.deviation_values(criterion, pair, base);
                }
                let us: Vec<(f64, Vec<f64>)> = bases
                    .iter()
                    .map(|(w, b)| Ok((*w, self.deviation_fractions(b)?)))
                    .collect::<Result<_>>()?;
                let mut values = Vec::with_capacity(n_paths);
                for p in 0..n_paths {
                    let parts: Vec<(f64, Distribution)> = us
                        .iter()
                        .map(|(w, u)| Ok((*w, (*self.path_distribution_at(pair, p, u)?).clone())))
                        .collect::<Result<_>>()?;
                    values.push(mix(&parts, &self.settings.grid)?.cvar_upper(alpha)?);
                }
                Ok(PathValues {
                    criterion,
                    values,
                    stderr: vec![0.0; n_paths],
                })
            }
        }
    }

    /// Opponent load distribution faced by `player` under a mixed profile.
    pub fn opponent_bases(
        &self,
        profile: &MixedProfile,
        player: usize,
    ) -> Result<Vec<(f64, Vec<usize>)>> {
        let cap = self.settings.support_cap;
        let dist = profile
            .count_distribution(self.game, Some(player), cap)
            .map_err(|count| Error::SupportExplosion { count, cap })?;
        Ok(dist
            .into_iter()
            .map(|(w, a)| (w, a.link_loads(self.game)))
            .collect())
    }

    /// Values of all of `player`'s paths against the other players' mixed strategies.
    pub fn player_values(
        &self,
        criterion: Criterion,
        profile: &MixedProfile,
        player: usize,
    ) -> Result<PathValues> {
        let pair = self.game.player_pairs()[player];
        let bases = self.opponent_bases(profile, player)?;
        self.mixed_values(criterion, pair, &bases)
    }

    /// Criterion value of `candidate` for `player` against mixed opponents.
    pub fn mixed_value(
        &self,
        criterion: Criterion,
        player: usize,
        candidate: usize,
        opponents: &MixedProfile,
    ) -> Result<f64> {
        Ok(self.player_values(criterion, opponents, player)?.values[candidate])
    }

    /// Law of a path's delay at the loads of `profile` as they stand.
    pub fn path_delay_distribution(
        &self,
        profile: &PureProfile,
        pair: usize,
        path: usize,
    ) -> Result<Arc<Distribution>> {
        let u = self.profile_fractions(profile)?;
        self.path_distribution_at(pair, path, &u)
    }

    fn profile_fractions(&self, profile: &PureProfile) -> Result<Vec<f64>> {
        let n = self.game.n();
        if n == 0 {
            return Err(NetworkError::BadLoad { load: 0, n }.into());
        }
        let loads = profile.assignment(self.game).link_loads(self.game);
        Ok(loads.iter().map(|&m| m as f64 / n as f64).collect())
    }

    /// Mean and variance of a path's delay at the loads of `profile`.
    pub fn pure_mean_var(
        &self,
        profile: &PureProfile,
        pair: usize,
        path: usize,
    ) -> Result<(f64, f64)> {
        let u = self.profile_fractions(profile)?;
        self.path_moments_at(pair, path, &u)
    }

    /// Upper-tail CVaR of a path's delay at the loads of `profile`.
    pub fn pure_cvar(
        &self,
        profile: &PureProfile,
        pair: usize,
        path: usize,
        alpha: f64,
    ) -> Result<f64> {
        Ok(self
            .path_delay_distribution(profile, pair, path)?
            .cvar_upper(alpha)?)
    }

    /// Probability that `candidate` is no longer than every alternative for `player`,
    /// with the other players fixed by `profile`.
    pub fn pure_prob_min(
        &self,
        profile: &PureProfile,
        player: usize,
        candidate: usize,
    ) -> Result<f64> {
        let pair = self.game.player_pairs()[player];
        let a = profile.assignment(self.game);
        let v = self.pure_values(Criterion::Rae, &a, pair, Some(profile.choice[player]))?;
        Ok(v.values[candidate])
    }
}
