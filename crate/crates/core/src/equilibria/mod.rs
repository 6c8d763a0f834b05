pub mod mixed;
pub mod pure;

pub use mixed::{enumerate_mixed_equilibria, verify_equilibrium, MixedEquilibrium, MixedSettings};
pub use pure::{eliminate_strictly_dominated, find_pure_equilibria, PureEquilibrium};
