//! Directed networks, source/destination demands and load-dependent latency families.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{normalize, DistError, Distribution, GaussComponent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("{count} simple paths exceed the cap of {cap}")]
    PathLimit { count: usize, cap: usize },
    #[error("load {load} outside [0, {n}]")]
    BadLoad { load: usize, n: usize },
    #[error("fraction {0} outside [0, 1]")]
    BadFraction(f64),
    #[error("pair {pair}: source and destination coincide")]
    SameEndpoints { pair: usize },
    #[error("node index {0} does not exist")]
    UnknownNode(usize),
    #[error("link {0} is a self-loop")]
    SelfLoop(u32),
    #[error("link id {0} used twice")]
    DuplicateLinkId(u32),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("pair {pair} has no path")]
    NoPath { pair: usize },
    #[error("link {link}: {reason}")]
    BadFamily { link: u32, reason: String },
    #[error(transparent)]
    Dist(#[from] DistError),
}

impl NetworkError {
    pub fn code(&self) -> &'static str {
        match self {
            NetworkError::PathLimit { .. } => "PATH_LIMIT",
            NetworkError::BadLoad { .. } => "BAD_LOAD",
            NetworkError::BadFraction(_) => "BAD_LOAD",
            NetworkError::SameEndpoints { .. } => "SAME_ENDPOINTS",
            NetworkError::UnknownNode(_) => "UNKNOWN_NODE",
            NetworkError::SelfLoop(_) => "SELF_LOOP",
            NetworkError::DuplicateLinkId(_) => "DUPLICATE_LINK",
            NetworkError::InvalidPath(_) => "INVALID_PATH",
            NetworkError::NoPath { .. } => "NO_PATH",
            NetworkError::BadFamily { .. } => "BAD_FAMILY",
            NetworkError::Dist(_) => "DIST_ERROR",
        }
    }
}

/// One Gaussian term whose centre and window move affinely with the load fraction `u`:
/// centre `a + b u`, window `[lo_a + lo_b u, hi_a + hi_b u]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineComponent {
    pub weight: f64,
    pub stiffness: f64,
    /// `[a, b]`
    pub center: [f64; 2],
    /// `[lo_a, lo_b, hi_a, hi_b]`
    pub window: [f64; 4],
}

impl AffineComponent {
    fn at(&self, u: f64) -> GaussComponent {
        let [lo_a, lo_b, hi_a, hi_b] = self.window;
        GaussComponent {
            weight: self.weight,
            center: self.center[0] + self.center[1] * u,
            stiffness: self.stiffness,
            support_lo: lo_a + lo_b * u,
            support_hi: hi_a + hi_b * u,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatencyFamily {
    AffineMixture { components: Vec<AffineComponent> },
    FixedMixture { components: Vec<GaussComponent> },
    DeterministicZero,
}

impl LatencyFamily {
    /// Delay law at load fraction `u`.
    pub fn at_fraction(&self, u: f64) -> Result<Distribution, DistError> {
        match self {
            LatencyFamily::DeterministicZero => Ok(Distribution::PointMass(0.0)),
            LatencyFamily::FixedMixture { components } => normalize(components),
            LatencyFamily::AffineMixture { components } => {
                let inst: Vec<GaussComponent> = components.iter().map(|c| c.at(u)).collect();
                for c in &inst {
                    c.validate()?;
                }
                if inst.iter().all(GaussComponent::is_degenerate) {
                    // every window collapsed; a common point is the natural limit
                    let p = inst[0].support_lo;
                    if inst.iter().all(|c| c.support_lo == p) {
                        return Ok(Distribution::PointMass(p));
                    }
                    return Err(DistError::AllDegenerate);
                }
                normalize(&inst)
            }
        }
    }

    fn check(&self, link: u32) -> Result<(), NetworkError> {
        let bad = |reason: String| NetworkError::BadFamily { link, reason };
        match self {
            LatencyFamily::DeterministicZero => Ok(()),
            LatencyFamily::FixedMixture { components } => {
                normalize(components).map_err(|e| bad(e.to_string()))?;
                Ok(())
            }
            LatencyFamily::AffineMixture { components } => {
                if components.is_empty() {
                    return Err(bad("no components".into()));
                }
                for u in [0.0, 1.0] {
                    for c in components {
                        let g = c.at(u);
                        g.validate().map_err(|e| bad(format!("at u = {u}: {e}")))?;
                    }
                }
                // windows are affine in u, so checking the endpoints covers [0, 1]
                for u in [0.0, 0.5, 1.0] {
                    self.at_fraction(u)
                        .map_err(|e| bad(format!("at u = {u}: {e}")))?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    /// User-facing label; unique within a game.
    pub id: u32,
    pub tail: usize,
    pub head: usize,
    pub family: LatencyFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SdPair {
    pub source: usize,
    pub dest: usize,
    pub players: usize,
}

/// Sequence of link indices (positions in [`Game::links`]).
pub type Path = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    nodes: Vec<String>,
    links: Vec<Link>,
    pairs: Vec<SdPair>,
    paths: Vec<Vec<Path>>,
}

pub const DEFAULT_PATH_CAP: usize = 10_000;

/// All simple directed paths from `source` to `dest`, ordered lexicographically by link id.
pub fn enumerate_simple_paths(
    node_count: usize,
    links: &[Link],
    source: usize,
    dest: usize,
    cap: usize,
) -> Result<Vec<Path>, NetworkError> {
    for v in [source, dest] {
        if v >= node_count {
            return Err(NetworkError::UnknownNode(v));
        }
    }
    if source == dest {
        return Err(NetworkError::SameEndpoints { pair: 0 });
    }
    let mut out_links: Vec<Vec<usize>> = vec![Vec::new(); node_count];
    for (i, l) in links.iter().enumerate() {
        out_links[l.tail].push(i);
    }
    for v in &mut out_links {
        v.sort_by_key(|&i| links[i].id);
    }
    let mut found = Vec::new();
    let mut visited = vec![false; node_count];
    let mut stack: Path = Vec::new();
    visited[source] = true;
    dfs(
        source,
        dest,
        links,
        &out_links,
        &mut visited,
        &mut stack,
        &mut found,
        cap,
    )?;
    Ok(found)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    at: usize,
    dest: usize,
    links: &[Link],
    out_links: &[Vec<usize>],
    visited: &mut [bool],
    stack: &mut Path,
    found: &mut Vec<Path>,
    cap: usize,
) -> Result<(), NetworkError> {
    if at == dest {
        if found.len() == cap {
            return Err(NetworkError::PathLimit {
                count: cap + 1,
                cap,
            });
        }
        found.push(stack.clone());
        return Ok(());
    }
    for &li in &out_links[at] {
        let next = links[li].head;
        if visited[next] {
            continue;
        }
        visited[next] = true;
        stack.push(li);
        dfs(next, dest, links, out_links, visited, stack, found, cap)?;
        stack.pop();
        visited[next] = false;
    }
    Ok(())
}

impl Game {
    /// Validates and builds a game. When `paths` is `None` every pair gets all of its
    /// simple paths.
    pub fn new(
        nodes: Vec<String>,
        links: Vec<Link>,
        pairs: Vec<SdPair>,
        paths: Option<Vec<Vec<Path>>>,
        path_cap: usize,
    ) -> Result<Game, NetworkError> {
        let nn = nodes.len();
        let mut ids = std::collections::HashSet::new();
        for l in &links {
            if l.tail >= nn {
                return Err(NetworkError::UnknownNode(l.tail));
            }
            if l.head >= nn {
                return Err(NetworkError::UnknownNode(l.head));
            }
            if l.tail == l.head {
                return Err(NetworkError::SelfLoop(l.id));
            }
            if !ids.insert(l.id) {
                return Err(NetworkError::DuplicateLinkId(l.id));
            }
            l.family.check(l.id)?;
        }
        for (k, p) in pairs.iter().enumerate() {
            if p.source >= nn {
                return Err(NetworkError::UnknownNode(p.source));
            }
            if p.dest >= nn {
                return Err(NetworkError::UnknownNode(p.dest));
            }
            if p.source == p.dest {
                return Err(NetworkError::SameEndpoints { pair: k });
            }
        }
        let paths = match paths {
            Some(given) => {
                if given.len() != pairs.len() {
                    return Err(NetworkError::InvalidPath(format!(
                        "{} path lists for {} pairs",
                        given.len(),
                        pairs.len()
                    )));
                }
                for (k, ps) in given.iter().enumerate() {
                    for p in ps {
                        check_path(&links, nn, &pairs[k], p)?;
                    }
                }
                given
            }
            None => pairs
                .iter()
                .map(|p| enumerate_simple_paths(nn, &links, p.source, p.dest, path_cap))
                .collect::<Result<_, _>>()?,
        };
        for (k, ps) in paths.iter().enumerate() {
            if ps.is_empty() {
                return Err(NetworkError::NoPath { pair: k });
            }
        }
        Ok(Game {
            nodes,
            links,
            pairs,
            paths,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn pairs(&self) -> &[SdPair] {
        &self.pairs
    }

    pub fn paths(&self, pair: usize) -> &[Path] {
        &self.paths[pair]
    }

    pub fn all_paths(&self) -> &[Vec<Path>] {
        &self.paths
    }

    /// Total number of players.
    pub fn n(&self) -> usize {
        self.pairs.iter().map(|p| p.players).sum()
    }

    /// Pair of each player; players are numbered pair by pair.
    pub fn player_pairs(&self) -> Vec<usize> {
        self.pairs
            .iter()
            .enumerate()
            .flat_map(|(k, p)| std::iter::repeat_n(k, p.players))
            .collect()
    }

    /// Same network with new player counts per pair.
    pub fn with_players(&self, players: &[usize]) -> Game {
        assert_eq!(players.len(), self.pairs.len(), "one count per pair");
        let mut g = self.clone();
        for (p, &m) in g.pairs.iter_mut().zip(players) {
            p.players = m;
        }
        g
    }

    /// Keeps only the listed path indices of each pair.
    pub fn restrict(&self, keep: &[Vec<usize>]) -> Game {
        let mut g = self.clone();
        g.paths = keep
            .iter()
            .enumerate()
            .map(|(k, idx)| idx.iter().map(|&i| self.paths[k][i].clone()).collect())
            .collect();
        g
    }

    /// Human-readable path label using link ids, e.g. `1-5-4`.
    pub fn path_label(&self, pair: usize, path: usize) -> String {
        self.paths[pair][path]
            .iter()
            .map(|&l| self.links[l].id.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }

    /// Delay law of a link carrying `load` of `n` players.
    pub fn link_distribution(
        &self,
        link: usize,
        load: usize,
        n: usize,
    ) -> Result<Distribution, NetworkError> {
        if n == 0 || load > n {
            return Err(NetworkError::BadLoad { load, n });
        }
        self.link_at_fraction(link, load as f64 / n as f64)
    }

    pub fn link_at_fraction(&self, link: usize, u: f64) -> Result<Distribution, NetworkError> {
        if !(0.0..=1.0 + 1e-12).contains(&u) {
            return Err(NetworkError::BadFraction(u));
        }
        self.links[link]
            .family
            .at_fraction(u.min(1.0))
            .map_err(|e| NetworkError::BadFamily {
                link: self.links[link].id,
                reason: e.to_string(),
            })
    }

    /// Links used by any path of `pair`, ascending.
    pub fn pair_links(&self, pair: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.paths[pair].iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

fn check_path(links: &[Link], nn: usize, pair: &SdPair, p: &Path) -> Result<(), NetworkError> {
    if p.is_empty() {
        return Err(NetworkError::InvalidPath("empty path".into()));
    }
    let mut seen = vec![false; nn];
    let mut at = pair.source;
    seen[at] = true;
    for &li in p {
        let l = links
            .get(li)
            .ok_or_else(|| NetworkError::InvalidPath(format!("link index {li} out of range")))?;
        if l.tail != at {
            return Err(NetworkError::InvalidPath(format!(
                "link {} does not continue the path",
                l.id
            )));
        }
        at = l.head;
        if seen[at] {
            return Err(NetworkError::InvalidPath(format!(
                "link {} revisits a node",
                l.id
            )));
        }
        seen[at] = true;
    }
    if at != pair.dest {
        return Err(NetworkError::InvalidPath(
            "path does not end at the destination".into(),
        ));
    }
    Ok(())
}

/// Path choice of every player (players numbered pair by pair).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PureProfile {
    pub choice: Vec<usize>,
}

/// Anonymous assignment: number of players on each path, grouped by pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    pub counts: Vec<Vec<usize>>,
}

impl PureProfile {
    pub fn assignment(&self, game: &Game) -> Assignment {
        let mut counts: Vec<Vec<usize>> = (0..game.pairs.len())
            .map(|k| vec![0; game.paths[k].len()])
            .collect();
        for (pair, &c) in game.player_pairs().iter().zip(&self.choice) {
            counts[*pair][c] += 1;
        }
        Assignment { counts }
    }
}

impl Assignment {
    /// Number of players on every link.
    pub fn link_loads(&self, game: &Game) -> Vec<usize> {
        let mut loads = vec![0; game.links.len()];
        for (k, cs) in self.counts.iter().enumerate() {
            for (p, &m) in cs.iter().enumerate() {
                for &l in &game.paths[k][p] {
                    loads[l] += m;
                }
            }
        }
        loads
    }

    /// Per-player profile with players of each pair filling paths in order.
    pub fn profile(&self) -> PureProfile {
        let mut choice = Vec::new();
        for cs in &self.counts {
            for (p, &m) in cs.iter().enumerate() {
                choice.extend(std::iter::repeat_n(p, m));
            }
        }
        PureProfile { choice }
    }

    /// Path fractions within each pair.
    pub fn fractions(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|cs| {
                let t: usize = cs.iter().sum();
                cs.iter()
                    .map(|&m| if t == 0 { 0.0 } else { m as f64 / t as f64 })
                    .collect()
            })
            .collect()
    }
}

/// Probability vector over its pair's paths for every player.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    pub probs: Vec<Vec<f64>>,
}

impl MixedProfile {
    pub fn from_pure(game: &Game, profile: &PureProfile) -> MixedProfile {
        let pairs = game.player_pairs();
        let probs = profile
            .choice
            .iter()
            .zip(&pairs)
            .map(|(&c, &k)| {
                let mut v = vec![0.0; game.paths[k].len()];
                v[c] = 1.0;
                v
            })
            .collect();
        MixedProfile { probs }
    }

    pub fn validate(&self, game: &Game) -> Result<(), String> {
        let pairs = game.player_pairs();
        if self.probs.len() != pairs.len() {
            return Err(format!(
                "{} strategy vectors for {} players",
                self.probs.len(),
                pairs.len()
            ));
        }
        for (i, (v, &k)) in self.probs.iter().zip(&pairs).enumerate() {
            if v.len() != game.paths[k].len() {
                return Err(format!("player {i}: wrong vector length"));
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(format!("player {i}: negative or non-finite probability"));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(format!("player {i}: probabilities sum to {s}"));
            }
        }
        Ok(())
    }

    /// Paths played with positive probability by each player.
    pub fn support(&self) -> Vec<Vec<usize>> {
        self.probs
            .iter()
            .map(|v| (0..v.len()).filter(|&p| v[p] > 0.0).collect())
            .collect()
    }

    /// Distribution of the anonymous assignment formed by all players except `exclude`.
    /// Fails once the number of distinct assignments passes `cap`.
    pub fn count_distribution(
        &self,
        game: &Game,
        exclude: Option<usize>,
        cap: usize,
    ) -> Result<Vec<(f64, Assignment)>, usize> {
        use std::collections::BTreeMap;
        let pairs = game.player_pairs();
        let empty = Assignment {
            counts: (0..game.pairs.len())
                .map(|k| vec![0; game.paths[k].len()])
                .collect(),
        };
        let mut states: BTreeMap<Assignment, f64> = BTreeMap::new();
        states.insert(empty, 1.0);
        for (j, v) in self.probs.iter().enumerate() {
            if Some(j) == exclude {
                continue;
            }
            let k = pairs[j];
            let mut next: BTreeMap<Assignment, f64> = BTreeMap::new();
            for (a, w) in &states {
                for (p, &q) in v.iter().enumerate() {
                    if q <= 0.0 {
                        continue;
                    }
                    let mut b = a.clone();
                    b.counts[k][p] += 1;
                    *next.entry(b).or_insert(0.0) += w * q;
                }
            }
            if next.len() > cap {
                return Err(next.len());
            }
            states = next;
        }
        Ok(states.into_iter().map(|(a, w)| (w, a)).collect())
    }
}

/// All ways to put `total` players on `parts` paths, lexicographic ascending.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(total);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for first in 0..=total {
            cur.push(first);
            rec(total - first, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of anonymous assignments with `players[k]` players in pair `k`.
pub fn count_assignments(game: &Game, players: &[usize]) -> f64 {
    players
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let p = game.paths[k].len();
            binomial(m + p - 1, p - 1)
        })
        .product()
}

/// Every anonymous assignment with `players[k]` players in pair `k`, in lexicographic order.
pub fn enumerate_assignments(game: &Game, players: &[usize]) -> Vec<Assignment> {
    let per_pair: Vec<Vec<Vec<usize>>> = players
        .iter()
        .enumerate()
        .map(|(k, &m)| compositions(m, game.paths[k].len()))
        .collect();
    let mut out = vec![Assignment { counts: Vec::new() }];
    for options in per_pair {
        let mut next = Vec::with_capacity(out.len() * options.len());
        for a in &out {
            for o in &options {
                let mut c = a.counts.clone();
                c.push(o.clone());
                next.push(Assignment { counts: c });
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(w: f64, a: f64, b: f64, window: [f64; 4]) -> AffineComponent {
        AffineComponent {
            weight: w,
            stiffness: 100.0,
            center: [a, b],
            window,
        }
    }

    fn link(id: u32, tail: usize, head: usize, family: LatencyFamily) -> Link {
        Link {
            id,
            tail,
            head,
            family,
        }
    }

    fn pigou_link1() -> LatencyFamily {
        LatencyFamily::AffineMixture {
            components: vec![
                gauss(2.0, 0.0, 0.25, [0.0, 0.0, 0.0, 0.5]),
                gauss(3.0, 0.0, 1.5, [0.0, 1.25, 0.0, 1.75]),
            ],
        }
    }

    fn unit() -> LatencyFamily {
        LatencyFamily::AffineMixture {
            components: vec![gauss(1.0, 1.0, 0.0, [0.5, 0.0, 1.5, 0.0])],
        }
    }

    fn braess(n: usize) -> Game {
        let nodes = ["S", "A", "B", "D"].map(String::from).to_vec();
        let links = vec![
            link(1, 0, 1, pigou_link1()),
            link(2, 1, 3, unit()),
            link(3, 0, 2, unit()),
            link(4, 2, 3, pigou_link1()),
            link(5, 1, 2, LatencyFamily::DeterministicZero),
        ];
        let pairs = vec![SdPair {
            source: 0,
            dest: 3,
            players: n,
        }];
        Game::new(nodes, links, pairs, None, DEFAULT_PATH_CAP).unwrap()
    }

    #[test]
    fn braess_paths_in_link_id_order() {
        let g = braess(4);
        let labels: Vec<String> = (0..3).map(|p| g.path_label(0, p)).collect();
        assert_eq!(labels, ["1-2", "1-5-4", "3-4"]);
    }

    #[test]
    fn parallel_links_give_two_paths() {
        let nodes = vec!["S".to_string(), "D".to_string()];
        let links = vec![link(1, 0, 1, pigou_link1()), link(2, 0, 1, unit())];
        let paths = enumerate_simple_paths(2, &links, 0, 1, 10).unwrap();
        assert_eq!(paths, vec![vec![0], vec![1]]);
        assert!(matches!(
            enumerate_simple_paths(2, &links, 0, 0, 10),
            Err(NetworkError::SameEndpoints { .. })
        ));
        assert!(matches!(
            enumerate_simple_paths(2, &links, 0, 1, 1),
            Err(NetworkError::PathLimit { .. })
        ));
        let pairs = vec![SdPair {
            source: 1,
            dest: 1,
            players: 1,
        }];
        assert!(Game::new(nodes, links, pairs, None, 10).is_err());
    }

    #[test]
    fn braess_link_loads() {
        let g = braess(6);
        let a = Assignment {
            counts: vec![vec![1, 2, 3]],
        };
        let m = a.link_loads(&g);
        assert_eq!(m, vec![3, 1, 3, 5, 2]);
        let total: usize = m.iter().sum();
        let weighted: usize = a.counts[0]
            .iter()
            .enumerate()
            .map(|(p, c)| c * g.paths(0)[p].len())
            .sum();
        assert_eq!(total, weighted);
        let empty = braess(0);
        let a0 = Assignment {
            counts: vec![vec![0, 0, 0]],
        };
        assert_eq!(a0.link_loads(&empty), vec![0; 5]);
    }

    #[test]
    fn families_instantiate() {
        let g = braess(10);
        let l1 = g.link_distribution(0, 10, 10).unwrap();
        assert!((l1.mean() - 1.0).abs() < 1e-12);
        for m in 0..=10 {
            let d = g.link_distribution(0, m, 10).unwrap();
            assert!((d.mean() - m as f64 / 10.0).abs() < 0.01);
            assert!((g.link_distribution(1, m, 10).unwrap().mean() - 1.0).abs() < 1e-12);
        }
        assert_eq!(
            g.link_distribution(0, 0, 10).unwrap(),
            Distribution::PointMass(0.0)
        );
        assert_eq!(
            g.link_distribution(4, 7, 10).unwrap(),
            Distribution::PointMass(0.0)
        );
        assert!(matches!(
            g.link_distribution(0, 11, 10),
            Err(NetworkError::BadLoad { .. })
        ));
        assert_eq!(
            g.link_distribution(0, 2, 4).unwrap(),
            g.link_distribution(0, 5, 10).unwrap()
        );
    }

    #[test]
    fn given_paths_are_checked() {
        let nodes = ["S", "A", "B", "D"].map(String::from).to_vec();
        let g = braess(1);
        let pairs = g.pairs().to_vec();
        let bad = Some(vec![vec![vec![0, 3]]]);
        assert!(matches!(
            Game::new(nodes.clone(), g.links().to_vec(), pairs.clone(), bad, 10),
            Err(NetworkError::InvalidPath(_))
        ));
        let ok = Some(vec![vec![vec![2, 3]]]);
        assert!(Game::new(nodes, g.links().to_vec(), pairs, ok, 10).is_ok());
    }

    #[test]
    fn reversed_window_rejected() {
        let nodes = vec!["S".to_string(), "D".to_string()];
        let fam = LatencyFamily::AffineMixture {
            components: vec![gauss(1.0, 0.0, 1.0, [0.0, 1.0, 0.0, -1.0])],
        };
        let pairs = vec![SdPair {
            source: 0,
            dest: 1,
            players: 1,
        }];
        assert!(matches!(
            Game::new(nodes, vec![link(1, 0, 1, fam)], pairs, None, 10),
            Err(NetworkError::BadFamily { .. })
        ));
    }

    #[test]
    fn assignment_enumeration() {
        let g = braess(3);
        let all = enumerate_assignments(&g, &[3]);
        assert_eq!(all.len(), 10);
        assert_eq!(count_assignments(&g, &[3]), 10.0);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert!(all.iter().all(|a| a.counts[0].iter().sum::<usize>() == 3));
        let a = &all[4];
        assert_eq!(a.profile().assignment(&g), *a);
    }
}
