//! Equilibria of atomic and non-atomic stochastic congestion games under four path
//! criteria: expected delay, probability of being the shortest path, mean-variance and
//! upper-tail CVaR. Link delays are load-dependent mixtures of truncated Gaussians.

pub mod cli;
pub mod dist;
pub mod equilibria;
pub mod error;
pub mod network;
pub mod nonatomic;
pub mod optim;
pub mod path_eval;
pub mod scenario;
pub mod social;

pub use error::{Error, Result};
