//! Pure equilibria by exhaustive anonymous enumeration, and iterated strict dominance.
//!
//! Players of one pair are interchangeable, so an assignment is an equilibrium as soon as
//! one representative player per occupied path has no strictly better deviation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{count_assignments, enumerate_assignments, Assignment, Game};
use crate::path_eval::{Criterion, Evaluator, PathValues};
use crate::social::social_delay_pure;

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PureEquilibrium {
    pub criterion: Criterion,
    pub assignment: Assignment,
    /// Values seen by a player sitting on each occupied path, per pair and path.
    pub values: Vec<Vec<Option<PathValues>>>,
    pub social_delay: f64,
    /// Largest shortfall of an occupied path against the best alternative (within tolerance).
    pub max_gap: f64,
}

/// Paths a player of `pair` would weakly prefer; the player is first taken off `occupied`.
pub fn best_response_set(
    ev: &Evaluator,
    criterion: Criterion,
    assignment: &Assignment,
    pair: usize,
    occupied: Option<usize>,
) -> Result<Vec<usize>> {
    Ok(ev
        .pure_values(criterion, assignment, pair, occupied)?
        .best_set())
}

fn players(game: &Game) -> Vec<usize> {
    game.pairs().iter().map(|p| p.players).collect()
}

fn check_cap(count: f64, cap: usize) -> Result<()> {
    if count > cap as f64 {
        return Err(Error::EnumerationCap {
            count: count.min(usize::MAX as f64) as usize,
            cap,
        });
    }
    Ok(())
}

/// Checks one assignment; `None` if some occupied path is not a weak best response.
pub fn check_assignment(
    ev: &Evaluator,
    criterion: Criterion,
    assignment: &Assignment,
) -> Result<Option<PureEquilibrium>> {
    let mut values = Vec::with_capacity(assignment.counts.len());
    let mut max_gap: f64 = 0.0;
    for (k, cs) in assignment.counts.iter().enumerate() {
        let mut row = Vec::with_capacity(cs.len());
        for (p, &m) in cs.iter().enumerate() {
            if m == 0 {
                row.push(None);
                continue;
            }
            let v = ev.pure_values(criterion, assignment, k, Some(p))?;
            if !v.is_weakly_best(p) {
                return Ok(None);
            }
            max_gap = max_gap.max(v.gap(p));
            row.push(Some(v));
        }
        values.push(row);
    }
    Ok(Some(PureEquilibrium {
        criterion,
        assignment: assignment.clone(),
        values,
        social_delay: social_delay_pure(ev, assignment)?,
        max_gap,
    }))
}

/// All pure equilibria, in lexicographic order of the path counts.
pub fn find_pure_equilibria(
    ev: &Evaluator,
    criterion: Criterion,
    cap: usize,
) -> Result<Vec<PureEquilibrium>> {
    criterion.validate()?;
    let game = ev.game();
    let players = players(game);
    check_cap(count_assignments(game, &players), cap)?;
    let all = enumerate_assignments(game, &players);
    let found: Vec<Option<PureEquilibrium>> = all
        .par_iter()
        .map(|a| check_assignment(ev, criterion, a))
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Removal {
    pub pair: usize,
    pub path: usize,
    pub dominated_by: usize,
    /// Removal is also valid against mixed opponents. For CVaR, and for mean-variance
    /// without the mean-side sufficient condition, it only holds for pure play.
    pub mixed_safe: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    /// Surviving path indices per pair.
    pub kept: Vec<Vec<usize>>,
    pub removed: Vec<Removal>,
}

impl Elimination {
    pub fn mixed_safe(&self) -> bool {
        self.removed.iter().all(|r| r.mixed_safe)
    }
}

fn strict_tol(v: &PathValues, p: usize, q: usize) -> f64 {
    let se = v.stderr[p].max(v.stderr[q]);
    if se > 0.0 || v.criterion == Criterion::Rae {
        2.0 * se + 1e-12
    } else {
        1e-9 * v.values[p].abs().max(v.values[q].abs()).max(1.0)
    }
}

/// Outcome of testing whether `p` strictly dominates `q` for a player of `pair`.
/// `ev` evaluates the reduced game; `p` and `q` index its paths.
fn dominates(
    ev: &Evaluator,
    criterion: Criterion,
    pair: usize,
    p: usize,
    q: usize,
    cap: usize,
) -> Result<Option<bool>> {
    let reduced = ev.game();
    let mut opp = players(reduced);
    opp[pair] -= 1;
    check_cap(count_assignments(reduced, &opp), cap)?;
    let mut safe = true;
    for a in enumerate_assignments(reduced, &opp) {
        let base = a.link_loads(reduced);
        let v = ev.deviation_values(criterion, pair, &base)?;
        if !criterion.strictly_better(v.values[p], v.values[q], strict_tol(&v, p, q)) {
            return Ok(None);
        }
        safe &= match criterion {
            Criterion::Nash | Criterion::Rae => true,
            Criterion::Cvar { .. } => false,
            Criterion::MeanVariance { rho } => {
                let u = ev.deviation_fractions(&base)?;
                let (mp, vp) = ev.path_moments_at(pair, p, &u)?;
                let (mq, vq) = ev.path_moments_at(pair, q, &u)?;
                let (sp, sq) = (vp + mp * mp, vq + mq * mq);
                let low = mp <= rho / 2.0 && mq <= rho / 2.0 && mp < mq && sp < sq;
                let high = mp >= rho / 2.0 && mq >= rho / 2.0 && mp > mq && sp < sq;
                low || high
            }
        };
    }
    Ok(Some(safe))
}

/// Iteratively removes paths that are strictly worse than another path of the same pair
/// against every pure opponent assignment of the current reduced game.
pub fn eliminate_strictly_dominated(
    ev: &Evaluator,
    criterion: Criterion,
    cap: usize,
) -> Result<Elimination> {
    criterion.validate()?;
    let game = ev.game();
    let mut kept: Vec<Vec<usize>> = (0..game.pairs().len())
        .map(|k| (0..game.paths(k).len()).collect())
        .collect();
    let mut removed = Vec::new();
    loop {
        let mut changed = false;
        for k in 0..kept.len() {
            if game.pairs()[k].players == 0 {
                continue;
            }
            let mut i = 0;
            while i < kept[k].len() && kept[k].len() > 1 {
                let q = kept[k][i];
                // probabilities of being shortest depend on which alternatives remain
                let reduced = game.restrict(&kept);
                let rev = Evaluator::new(&reduced, *ev.settings());
                let mut hit = None;
                for j in (0..kept[k].len()).filter(|&j| j != i) {
                    if let Some(safe) = dominates(&rev, criterion, k, j, i, cap)? {
                        hit = Some((kept[k][j], safe));
                        break;
                    }
                }
                match hit {
                    Some((p, safe)) => {
                        kept[k].remove(i);
                        removed.push(Removal {
                            pair: k,
                            path: q,
                            dominated_by: p,
                            mixed_safe: safe,
                        });
                        changed = true;
                    }
                    None => i += 1,
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(Elimination { kept, removed })
}

/// Pure equilibria of the game left after elimination, mapped back to full path indices.
pub fn find_pure_equilibria_reduced(
    ev: &Evaluator,
    criterion: Criterion,
    cap: usize,
) -> Result<Vec<PureEquilibrium>> {
    let elim = eliminate_strictly_dominated(ev, criterion, cap)?;
    let game = ev.game();
    let reduced = game.restrict(&elim.kept);
    let rev = Evaluator::new(&reduced, *ev.settings());
    let found = find_pure_equilibria(&rev, criterion, cap)?;
    let widen = |a: &Assignment| Assignment {
        counts: a
            .counts
            .iter()
            .enumerate()
            .map(|(k, cs)| {
                let mut full = vec![0; game.paths(k).len()];
                for (i, &m) in cs.iter().enumerate() {
                    full[elim.kept[k][i]] = m;
                }
                full
            })
            .collect(),
    };
    let mut out: Vec<PureEquilibrium> = found
        .iter()
        .map(|e| check_assignment(ev, criterion, &widen(&e.assignment)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    out.sort_by(|a, b| a.assignment.cmp(&b.assignment));
    Ok(out)
}
