//! Stochastic action schemas: STRIPS and object-oriented domains, effect
//! equivalence classes, class-probability learning with a shared KWIK-LR
//! learner per schema, optimistic planning, and a partition-counting
//! baseline.

pub mod agent;
pub mod domain;
pub mod learner;
pub mod maze;
pub mod oomdp;
pub mod optimistic_vi;
pub mod paint_polish;
pub mod strips;

pub use agent::{run_episode, EpisodeOutcome, SchemaAgent, SchemaAgentConfig, DEFAULT_EPISODE_CAP};
pub use domain::{
    equivalence_classes, CompiledClass, EffectClass, EquivalenceClassing, SchemaDomain, SchemaModel,
};
pub use learner::{ClassPredictor, PartitionBaseline, SchemaLearner};
pub use maze::{make_maze, Direction, MazeDomain, MazeGrid};
pub use oomdp::{apply_updates, AttrUpdate, ObjectState, UpdateOp};
pub use optimistic_vi::{optimistic_distribution, optimistic_value_iteration, RowPredictions};
pub use paint_polish::{make_paint_polish, AtomSet, StripsDomain};
pub use strips::{apply_effect, ground, ActionSchema, Atom, StripsDomainSpec, StripsEffect, StripsState};

/// Default known/unknown threshold of the schema learners.
pub const DEFAULT_ALPHA0: f64 = 0.2;
/// Default visit count after which a partition signature is known.
pub const DEFAULT_PARTITION_THRESHOLD: u64 = 20;
