pub mod contact;
pub mod exactnum;
pub mod lattice;
pub mod models;
pub mod resonance;
pub mod serde_util;
pub mod cli;
pub mod synth;
