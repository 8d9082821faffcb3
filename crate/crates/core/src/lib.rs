//! Dynamic direct elaboration mechanisms for agents with unawareness.
//!
//! Agents report payoff types at the awareness level they can conceive; the operator pools
//! awareness, broadcasts it, and lets everyone elaborate until reports repeat. Transfers
//! follow a Groves scheme with awareness premia, its Clarke preset, or a reverse
//! second-price auction. The [`verify`] module checks incentive, budget and participation
//! properties by exhaustive enumeration over finite scenarios.

pub mod engine;
pub mod fixtures;
pub mod generate;
pub mod lattice;
pub mod outcome;
pub mod report;
pub mod scenario;
pub mod transfers;
pub mod types;
pub mod value;
pub mod verify;

pub use engine::{InformationSet, Strategy, Transcript, TruthTelling};
pub use lattice::{AwarenessLattice, Level};
pub use outcome::{OutcomeId, OutcomeModel};
pub use transfers::{Mechanism, SchemeConfig, SchemeKind, TransferReport, YTable};
pub use types::{NatureDraw, PartialDraw, Profile, TypeId, TypeStructure};
pub use value::Q;
