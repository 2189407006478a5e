//! Std companion to `widthplan-core`: wire format, scorers, the policy
//! executor, instance generators and the command-line front end.

pub mod cli;
pub mod fixtures;
pub mod policy;
pub mod scorer;
pub mod wire;

pub use widthplan_core as core;
