//! Chemical reaction network toolkit: modeling, deterministic simulation with
//! scripted interventions, batch evaluation, genetic-algorithm rate fitting,
//! DNA strand-displacement compilation and interchange formats.

pub mod dsd;
pub mod evaluation;
pub mod executor;
pub mod expr;
pub mod ga;
pub mod io;
pub mod model;
pub mod protocol;
pub mod randgen;
pub mod sim;

pub use expr::{parse as parse_expr, Env, Expr, SimRng};
pub use model::{
    Channel, Compartment, CompartmentTree, Model, RateLaw, RateParam, RateRef, Reaction,
    ReactionNetwork, Species, Term,
};
pub use protocol::{InteractionSeries, Translation};
pub use sim::{simulate, SolverConfig, Trace};
