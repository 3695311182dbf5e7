pub mod corpus;
pub mod eval;
pub mod jsonl;
pub mod latex;
pub mod normalize;
pub mod registry;
pub mod semantics;
pub mod synth;
pub mod term;
pub mod translator;
