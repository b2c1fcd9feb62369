pub mod jiles_atherton;
pub mod circuit;
pub mod flux_data;
pub mod environment;
pub mod rl;
pub mod harness;
