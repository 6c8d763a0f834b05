//! Social delay (average expected delay over players), social optimum and price of anarchy.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{count_assignments, enumerate_assignments, Assignment, MixedProfile};
use crate::path_eval::Evaluator;

/// `(1/n) sum_p m^p * E[delay of p]` at the assignment's own loads.
pub fn social_delay_pure(ev: &Evaluator, assignment: &Assignment) -> Result<f64> {
    let game = ev.game();
    let n = game.n();
    if n == 0 {
        return Ok(0.0);
    }
    let u: Vec<f64> = assignment
        .link_loads(game)
        .iter()
        .map(|&m| m as f64 / n as f64)
        .collect();
    let mut total = 0.0;
    for (k, cs) in assignment.counts.iter().enumerate() {
        for (p, &m) in cs.iter().enumerate() {
            if m > 0 {
                total += m as f64 * ev.path_moments_at(k, p, &u)?.0;
            }
        }
    }
    Ok(total / n as f64)
}

/// Expected social delay when players draw paths independently from `profile`.
pub fn social_delay_mixed(ev: &Evaluator, profile: &MixedProfile) -> Result<f64> {
    let cap = ev.settings().support_cap;
    let dist = profile
        .count_distribution(ev.game(), None, cap)
        .map_err(|count| Error::SupportExplosion { count, cap })?;
    let mut d = 0.0;
    for (w, a) in &dist {
        d += w * social_delay_pure(ev, a)?;
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    /// Every minimizer, in enumeration order.
    pub assignments: Vec<Assignment>,
    pub delay: f64,
}

/// Exhaustive minimum of the social delay over anonymous assignments.
pub fn optimal_assignment(ev: &Evaluator, cap: usize) -> Result<Optimum> {
    let game = ev.game();
    let players: Vec<usize> = game.pairs().iter().map(|p| p.players).collect();
    let count = count_assignments(game, &players);
    if count > cap as f64 {
        return Err(Error::EnumerationCap {
            count: count.min(usize::MAX as f64) as usize,
            cap,
        });
    }
    let all = enumerate_assignments(game, &players);
    let delays: Vec<f64> = all
        .par_iter()
        .map(|a| social_delay_pure(ev, a))
        .collect::<Result<_>>()?;
    let best = delays.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * best.abs().max(1.0);
    let assignments = all
        .into_iter()
        .zip(&delays)
        .filter(|(_, d)| **d <= best + tol)
        .map(|(a, _)| a)
        .collect();
    Ok(Optimum {
        assignments,
        delay: best,
    })
}

/// Worst equilibrium delay over the optimal delay.
pub fn price_of_anarchy(equilibrium_delays: &[f64], optimum: f64) -> Result<f64> {
    let worst = equilibrium_delays
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(Error::EmptyEquilibria)?;
    if optimum == 0.0 {
        return Ok(if worst == 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok(worst / optimum)
}

/// Price of anarchy over pure equilibria only and over pure and mixed ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialReport {
    pub optimum: Optimum,
    pub pure_delays: Vec<f64>,
    pub mixed_delays: Vec<f64>,
    pub poa_pure: Option<f64>,
    pub poa_all: Option<f64>,
}

impl SocialReport {
    pub fn new(optimum: Optimum, pure_delays: Vec<f64>, mixed_delays: Vec<f64>) -> SocialReport {
        let poa_pure = price_of_anarchy(&pure_delays, optimum.delay).ok();
        let all: Vec<f64> = pure_delays.iter().chain(&mixed_delays).copied().collect();
        let poa_all = price_of_anarchy(&all, optimum.delay).ok();
        SocialReport {
            optimum,
            pure_delays,
            mixed_delays,
            poa_pure,
            poa_all,
        }
    }
}
