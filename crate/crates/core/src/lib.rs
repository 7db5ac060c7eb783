pub mod java;
pub mod api;
pub mod search;
pub mod filter;
pub mod aug;
pub mod miner;
pub mod detect;
pub mod stats;
pub mod diff;
pub mod harness;
