pub mod assembler;
pub mod evaluation;
pub mod evolution;
pub mod harmony_tracks;
pub mod llm_bridge;
pub mod melodic_tracks;
pub mod notation;
pub mod percussion;
pub mod pipeline;
pub mod rng;
pub mod schema;
