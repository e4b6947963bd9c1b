pub mod bellcore;
pub mod bellmap;
pub mod cli;
pub mod critical;
pub mod dimers;
pub mod error;
pub mod lattice;
pub mod quantum;
pub mod tropical;
