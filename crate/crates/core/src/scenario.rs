//! Scenario files and the built-in networks.
//!
//! A scenario is one TOML document. Node names are free strings, links carry a user-facing
//! integer id and a latency family, and every source/destination pair lists its number of
//! players. Paths are enumerated unless given explicitly.

use std::collections::HashMap;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::dist::{GaussComponent, GridSettings};
use crate::equilibria::mixed::{MixedSettings, DEFAULT_TENSOR_CAP};
use crate::equilibria::pure::DEFAULT_ENUMERATION_CAP;
use crate::error::{Error, Result};
use crate::network::{AffineComponent, Game, LatencyFamily, Link, SdPair, DEFAULT_PATH_CAP};
use crate::nonatomic::NonatomicSettings;
use crate::path_eval::{Criterion, EvalSettings, MonteCarlo};

pub const SCHEMA_VERSION: u32 = 1;

pub const BUILTINS: [&str; 5] = ["pigou", "braess", "ex3", "ex4", "ex5"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub monte_carlo: MonteCarlo,
    pub grid: GridSettings,
    pub support_cap: usize,
    pub enumeration_cap: usize,
    pub tensor_cap: usize,
    pub path_cap: usize,
    pub mixed: MixedSettings,
    pub nonatomic: NonatomicSettings,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let eval = EvalSettings::default();
        SolverSettings {
            monte_carlo: eval.monte_carlo,
            grid: eval.grid,
            support_cap: eval.support_cap,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            tensor_cap: DEFAULT_TENSOR_CAP,
            path_cap: DEFAULT_PATH_CAP,
            mixed: MixedSettings::default(),
            nonatomic: NonatomicSettings::default(),
        }
    }
}

impl SolverSettings {
    pub fn eval(&self) -> EvalSettings {
        EvalSettings {
            monte_carlo: self.monte_carlo,
            grid: self.grid,
            support_cap: self.support_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub id: u32,
    pub from: String,
    pub to: String,
    pub family: LatencyFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub source: String,
    pub dest: String,
    pub players: usize,
    /// Explicit paths as link-id sequences; enumerated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<Vec<u32>>>,
    /// Path indices that are interchangeable (used by the non-atomic solver).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub nodes: Vec<String>,
    pub links: Vec<LinkConfig>,
    pub pairs: Vec<PairConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<Criterion>,
    #[serde(default)]
    pub solver: SolverSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub game: Game,
    /// Interchangeable path indices of pair 0, if declared.
    pub symmetry: Option<Vec<usize>>,
    pub criterion: Option<Criterion>,
    pub solver: SolverSettings,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<ScenarioConfig> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<Scenario> {
        let mut problems = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            problems.push(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let mut node_index = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if node_index.insert(n.as_str(), i).is_some() {
                problems.push(format!("node {n:?} declared twice"));
            }
        }
        let node = |name: &str, what: &str, problems: &mut Vec<String>| -> usize {
            match node_index.get(name) {
                Some(&i) => i,
                None => {
                    problems.push(format!("{what} refers to unknown node {name:?}"));
                    0
                }
            }
        };
        let links: Vec<Link> = self
            .links
            .iter()
            .map(|l| Link {
                id: l.id,
                tail: node(&l.from, &format!("link {}", l.id), &mut problems),
                head: node(&l.to, &format!("link {}", l.id), &mut problems),
                family: l.family.clone(),
            })
            .collect();
        let pairs: Vec<SdPair> = self
            .pairs
            .iter()
            .enumerate()
            .map(|(k, p)| SdPair {
                source: node(&p.source, &format!("pair {k}"), &mut problems),
                dest: node(&p.dest, &format!("pair {k}"), &mut problems),
                players: p.players,
            })
            .collect();
        if self.pairs.is_empty() {
            problems.push("at least one pair is required".into());
        }
        let id_index: HashMap<u32, usize> =
            links.iter().enumerate().map(|(i, l)| (l.id, i)).collect();
        let explicit = self.pairs.iter().any(|p| p.paths.is_some());
        if explicit && self.pairs.iter().any(|p| p.paths.is_none()) {
            problems.push("give explicit paths for every pair or for none".into());
        }
        let paths = if explicit {
            let mut all = Vec::new();
            for (k, p) in self.pairs.iter().enumerate() {
                let mut list = Vec::new();
                for seq in p.paths.iter().flatten() {
                    let mut path = Vec::new();
                    for id in seq {
                        match id_index.get(id) {
                            Some(&i) => path.push(i),
                            None => problems.push(format!("pair {k}: unknown link id {id}")),
                        }
                    }
                    list.push(path);
                }
                all.push(list);
            }
            Some(all)
        } else {
            None
        };
        if let Some(c) = &self.criterion {
            if let Err(Error::Validation(v)) = c.validate() {
                problems.extend(v);
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let game = Game::new(
            self.nodes.clone(),
            links,
            pairs,
            paths,
            self.solver.path_cap,
        )
        .map_err(|e| Error::Validation(vec![e.to_string()]))?;
        let symmetry = self.pairs.first().and_then(|p| p.symmetric.clone());
        if let Some(s) = &symmetry {
            let np = game.paths(0).len();
            if s.len() < 2 || s.iter().any(|&i| i >= np) {
                return Err(Error::Validation(vec![format!(
                    "symmetric path set {s:?} must name at least two of the {np} paths"
                )]));
            }
        }
        Ok(Scenario {
            name: self.name.clone(),
            game,
            symmetry,
            criterion: self.criterion,
            solver: self.solver,
        })
    }
}

impl Scenario {
    /// Config that rebuilds this scenario, with paths written out explicitly.
    pub fn to_config(&self) -> ScenarioConfig {
        let g = &self.game;
        let node = |i: usize| g.nodes()[i].clone();
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            nodes: g.nodes().to_vec(),
            links: g
                .links()
                .iter()
                .map(|l| LinkConfig {
                    id: l.id,
                    from: node(l.tail),
                    to: node(l.head),
                    family: l.family.clone(),
                })
                .collect(),
            pairs: g
                .pairs()
                .iter()
                .enumerate()
                .map(|(k, p)| PairConfig {
                    source: node(p.source),
                    dest: node(p.dest),
                    players: p.players,
                    paths: Some(
                        g.paths(k)
                            .iter()
                            .map(|path| path.iter().map(|&l| g.links()[l].id).collect())
                            .collect(),
                    ),
                    symmetric: if k == 0 { self.symmetry.clone() } else { None },
                })
                .collect(),
            criterion: self.criterion,
            solver: self.solver,
        }
    }

    /// Same scenario with `n` players in its single pair.
    pub fn with_players(&self, n: usize) -> Result<Scenario> {
        if self.game.pairs().len() != 1 {
            return Err(Error::Unsupported(
                "setting a single player count needs a single-pair scenario".into(),
            ));
        }
        Ok(Scenario {
            game: self.game.with_players(&[n]),
            ..self.clone()
        })
    }
}

fn affine(weight: f64, center: [f64; 2], window: [f64; 4]) -> AffineComponent {
    AffineComponent {
        weight,
        stiffness: 100.0,
        center,
        window,
    }
}

fn fixed(terms: &[(f64, f64, f64, f64)]) -> LatencyFamily {
    LatencyFamily::FixedMixture {
        components: terms
            .iter()
            .map(|&(w, c, lo, hi)| GaussComponent {
                weight: w,
                center: c,
                stiffness: 100.0,
                support_lo: lo,
                support_hi: hi,
            })
            .collect(),
    }
}

/// Low mode centred at u/4 on [0, u/2] (mass 0.4), high mode at 3u/2 on [5u/4, 7u/4].
fn pigou_top() -> LatencyFamily {
    LatencyFamily::AffineMixture {
        components: vec![
            affine(2.0, [0.0, 0.25], [0.0, 0.0, 0.0, 0.5]),
            affine(3.0, [0.0, 1.5], [0.0, 1.25, 0.0, 1.75]),
        ],
    }
}

fn pigou_bottom() -> LatencyFamily {
    LatencyFamily::AffineMixture {
        components: vec![affine(1.0, [1.0, 0.0], [0.75, 0.0, 1.25, 0.0])],
    }
}

/// Equal modes at u/2 on [0, u] and 3u/2 on [u, 2u].
fn braess_congestible() -> LatencyFamily {
    LatencyFamily::AffineMixture {
        components: vec![
            affine(1.0, [0.0, 0.5], [0.0, 0.0, 0.0, 1.0]),
            affine(1.0, [0.0, 1.5], [0.0, 1.0, 0.0, 2.0]),
        ],
    }
}

fn braess_constant() -> LatencyFamily {
    LatencyFamily::AffineMixture {
        components: vec![affine(1.0, [1.0, 0.0], [0.5, 0.0, 1.5, 0.0])],
    }
}

fn two_link(
    name: &str,
    players: usize,
    top: LatencyFamily,
    bottom: LatencyFamily,
) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: name.into(),
        nodes: vec!["S".into(), "D".into()],
        links: vec![
            LinkConfig {
                id: 1,
                from: "S".into(),
                to: "D".into(),
                family: top,
            },
            LinkConfig {
                id: 2,
                from: "S".into(),
                to: "D".into(),
                family: bottom,
            },
        ],
        pairs: vec![PairConfig {
            source: "S".into(),
            dest: "D".into(),
            players,
            paths: None,
            symmetric: None,
        }],
        criterion: None,
        solver: SolverSettings::default(),
    }
}

pub fn builtin_config(name: &str) -> Option<ScenarioConfig> {
    Some(match name {
        "pigou" => two_link("pigou", 10, pigou_top(), pigou_bottom()),
        "braess" => {
            let link = |id, from: &str, to: &str, family| LinkConfig {
                id,
                from: from.into(),
                to: to.into(),
                family,
            };
            ScenarioConfig {
                schema_version: SCHEMA_VERSION,
                name: "braess".into(),
                nodes: ["S", "A", "B", "D"].map(String::from).to_vec(),
                links: vec![
                    link(1, "S", "A", braess_congestible()),
                    link(2, "A", "D", braess_constant()),
                    link(3, "S", "B", braess_constant()),
                    link(4, "B", "D", braess_congestible()),
                    link(5, "A", "B", LatencyFamily::DeterministicZero),
                ],
                pairs: vec![PairConfig {
                    source: "S".into(),
                    dest: "D".into(),
                    players: 10,
                    paths: None,
                    symmetric: Some(vec![0, 2]),
                }],
                criterion: None,
                solver: SolverSettings::default(),
            }
        }
        "ex3" => two_link(
            "ex3",
            1,
            fixed(&[(1.0, 14.0, 13.0, 15.0), (1.0, 19.0, 18.0, 20.0)]),
            fixed(&[(1.0, 20.0, 19.0, 21.0)]),
        ),
        "ex4" => two_link(
            "ex4",
            1,
            fixed(&[(4.0, 5.0, 4.0, 6.0), (1.0, 10.0, 9.0, 11.0)]),
            fixed(&[(4.0, 8.0, 7.0, 9.0), (1.0, 10.0, 9.0, 11.0)]),
        ),
        "ex5" => two_link(
            "ex5",
            1,
            fixed(&[(1.0, 7.0, 6.0, 8.0)]),
            fixed(&[(7.0, 5.0, 4.0, 6.0), (3.0, 10.0, 9.0, 11.0)]),
        ),
        _ => return None,
    })
}

pub fn builtin(name: &str) -> Result<Scenario> {
    builtin_config(name)
        .ok_or_else(|| Error::Unsupported(format!("no built-in scenario named {name:?}")))?
        .build()
}

/// A built-in name or a path to a TOML scenario file.
pub fn load_scenario(source: &str) -> Result<Scenario> {
    if let Some(cfg) = builtin_config(source) {
        return cfg.build();
    }
    let path = FsPath::new(source);
    if !path.exists() {
        return Err(Error::Unsupported(format!(
            "{source:?} is neither a built-in scenario ({}) nor an existing file",
            BUILTINS.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path)?;
    ScenarioConfig::from_toml(&text)?.build()
}
